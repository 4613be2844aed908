"""
Recognition server: runs one receiver-headed chain per client session and
keeps the finalized transcripts in memory for the status API.
"""

import logging
import threading
from datetime import datetime, timezone
from typing import Optional

from .builder import BuildOptions, build_chain
from .config import ChainConfig
from .decoder import WfstDecoder, WordTable, format_hypothesis
from .errors import ConfigError, RtAsrError
from .models import HypothesisSet, Packet
from .pipeline import Chain
from .transport import PacketReceiver

logger = logging.getLogger(__name__)


class ResultStore:
    '''
    Thread-safe in-memory storage of finalized results
    '''

    def __init__(self, limit: int = 1000):
        self.limit = limit
        self.sessions = 0
        self.active = False
        self._results: list[dict] = []
        self._lock = threading.Lock()

    def add(self, session: int, result: HypothesisSet, words: Optional[WordTable] = None) -> dict:
        best = result.best
        entry = {
            "session": session,
            "segment": result.segment,
            "transcript": "" if best is None else (words.transcript(best) if words else " ".join(map(str, best.words))),
            "cost": None if best is None else best.cost,
            "nbest": [format_hypothesis(h, words) for h in result.hypotheses],
            "finished_at": datetime.now(timezone.utc).isoformat(),
        }
        with self._lock:
            self._results.append(entry)
            del self._results[:-self.limit]
        return entry

    def snapshot(self) -> list[dict]:
        with self._lock:
            return list(self._results)

    def status(self) -> dict:
        with self._lock:
            return {"sessions": self.sessions, "results": len(self._results), "active": self.active}


class RecognitionServer:
    def __init__(self, config: ChainConfig, options: Optional[BuildOptions] = None,
                 store: Optional[ResultStore] = None):
        self.config = config
        self.options = options or BuildOptions()
        self.store = store or ResultStore()
        self.chain: Optional[Chain] = None
        self._stopped = threading.Event()

    def start_api(self, port: int, host: str = "0.0.0.0") -> threading.Thread:
        import uvicorn

        from .api import create_app

        server = uvicorn.Server(uvicorn.Config(create_app(self.store), host=host, port=port, log_level="info"))
        thread = threading.Thread(target=server.run, name="status-api", daemon=True)
        thread.start()
        logger.info(f"Status API on http://{host}:{port}")
        return thread

    def _handle(self, session: int, packet: Packet, words: Optional[WordTable]) -> None:
        payload = packet.payload
        if isinstance(payload, HypothesisSet) and not payload.partial:
            entry = self.store.add(session, payload, words)
            logger.info(f"Session {session} segment {entry['segment']}: {entry['transcript']}")

    def run_session(self) -> int:
        '''
        Serve one client from connection to eos; returns the session number
        '''
        chain = build_chain(self.config, self.options)
        if not isinstance(chain.components[0], PacketReceiver):
            raise ConfigError("[chain] components: a server chain must start with receiver")
        decoders = [c for c in chain.components if isinstance(c, WfstDecoder)]
        words = decoders[0].words if decoders else None
        session = self.store.sessions + 1
        self.chain = chain
        chain.start()
        self.store.active = True
        try:
            for packet in chain.packets():
                self._handle(session, packet, words)
            chain.wait(chain.stop_timeout)
        finally:
            try:
                chain.stop()
            except RtAsrError as e:
                logger.warning(f"Session {session} did not stop cleanly: {e}")
            self.store.active = False
            self.store.sessions = session
            self.chain = None
        return session

    def serve(self, max_sessions: Optional[int] = None) -> None:
        served = 0
        try:
            while not self._stopped.is_set() and (max_sessions is None or served < max_sessions):
                try:
                    self.run_session()
                except ConfigError:
                    raise
                except RtAsrError as e:
                    logger.error(f"Session failed: {e}")
                served += 1
        except KeyboardInterrupt:
            logger.info("Shutting down recognition server...")
        finally:
            self.stop()

    def stop(self) -> None:
        self._stopped.set()
        chain = self.chain
        if chain is not None:
            chain.stop()
