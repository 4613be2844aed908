"""
Command-line entry point: python -m rtasr <command> [options]
"""

import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional, TextIO

from . import config
from .bench import bench_rtf, collect, decode_file, expand_wavs
from .builder import BuildOptions, build_chain
from .config import ChainConfig, ChainSection
from .decoder import format_hypothesis
from .errors import ConfigError, RtAsrError
from .matrix_io import write_matrix
from .models import MatrixPayload
from .server import RecognitionServer
from .toy import make_toy_model

logger = logging.getLogger(__name__)

SCORING = {"scorer", "gmm", "replay_scorer", "external_scorer", "decoder", "sender"}


@contextmanager
def open_output(path: Optional[str]) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
        return
    with open(path, "w") as f:
        yield f


def load_config(args) -> ChainConfig:
    if not args.config:
        raise ConfigError("--config is required")
    return ChainConfig.load(args.config)


def options(args) -> BuildOptions:
    return BuildOptions(
        wav=getattr(args, "wav", None),
        realtime=True if getattr(args, "realtime", False) else None,
        connect=getattr(args, "connect", None),
        listen=getattr(args, "listen", None),
        nbest=getattr(args, "nbest", None),
    )


def component_names(cfg: ChainConfig) -> list[str]:
    if not cfg.has("chain"):
        raise ConfigError("[chain] components: missing")
    return cfg.section("chain", ChainSection).component_names


def run_prefix(cfg: ChainConfig, opts: BuildOptions, names: list[str]) -> list:
    chain = build_chain(cfg, opts, components=names)
    chain.start()
    try:
        packets = list(chain.packets())
        chain.wait(chain.stop_timeout)
    finally:
        chain.stop()
    return packets


def cmd_featurize(args) -> int:
    cfg = load_config(args)
    names = component_names(cfg)
    cut = next((i for i, n in enumerate(names) if n in SCORING), len(names))
    names = names[:cut]
    if not names or names[-1] in ("recorder", "replay", "microphone", "cutter", "vad", "receiver"):
        raise ConfigError("[chain] components: no feature extractor before the scorer")
    blocks = [p.payload for p in run_prefix(cfg, options(args), names) if isinstance(p.payload, MatrixPayload)]
    if not blocks:
        raise RtAsrError("no feature frames produced")
    feats = type(blocks[0]).concat_rows(blocks)
    with open_output(args.output) as out:
        write_matrix(feats.data, out)
    logger.info(f"Wrote {feats.num_frames} x {feats.dims} features")
    return 0


def cmd_vad(args) -> int:
    cfg = load_config(args)
    names = component_names(cfg)
    if "vad" not in names:
        raise ConfigError("[chain] components: no vad component")
    names = names[:names.index("vad") + 1]
    segments: list[tuple[int, int]] = []
    start = end = None
    for packet in run_prefix(cfg, options(args), names):
        if isinstance(packet.payload, MatrixPayload):
            start = packet.payload.first_frame_index if start is None else start
            end = packet.payload.end_frame_index
        if (packet.endpoint or packet.eos) and start is not None:
            segments.append((start, end))
            start = end = None
    with open_output(args.output) as out:
        for k, (a, b) in enumerate(segments):
            out.write(f"segment {k}\t{a}\t{b}\n")
    return 0


def cmd_decode(args) -> int:
    cfg = load_config(args)
    names = component_names(cfg)
    if not names or names[-1] != "decoder":
        raise ConfigError("[chain] components: decode needs a chain ending with decoder")
    result = decode_file(cfg, args.wav, options(args))
    with open_output(args.output) as out:
        for k, hyps in enumerate(result.results):
            if k:
                out.write("\n")
            for hyp in hyps.hypotheses:
                out.write(format_hypothesis(hyp, result.words) + "\n")
    logger.info(f"Decoded {result.duration:.2f}s of audio in {result.elapsed:.2f}s: {result.text}")
    return 0


def cmd_client(args) -> int:
    cfg = load_config(args)
    names = component_names(cfg)
    if not names or names[-1] != "sender":
        raise ConfigError("[chain] components: a client chain must end with sender")
    chain = build_chain(cfg, options(args))
    chain.start()
    try:
        collect(chain)
    finally:
        chain.stop()
    return 0


def cmd_serve(args) -> int:
    cfg = load_config(args)
    server = RecognitionServer(cfg, options(args))
    http_port = args.http_port or config.HTTP_PORT
    if http_port:
        server.start_api(int(http_port))
    server.serve(args.sessions)
    return 0


def cmd_bench(args) -> int:
    cfg = load_config(args)
    report = bench_rtf(cfg, expand_wavs(args.wavs), options(args))
    with open_output(args.output) as out:
        out.write(report.format())
    return 0


def cmd_toy(args) -> int:
    out_dir = Path(args.output or "toy")
    toy = make_toy_model(args.seed, args.pdfs, args.words, gap_ms=args.gap_ms,
                         min_seconds=args.seconds, out_dir=out_dir)
    print(f"{toy.paths['config']}\t{toy.reference}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtasr", description="Streaming speech recognition pipeline")
    parser.add_argument("--log-level", default=config.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help, wav=True, output=True):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="chain config file")
        if wav:
            p.add_argument("--wav", help="16-bit PCM mono WAV replacing [recorder] wav")
            p.add_argument("--realtime", action="store_true", help="pace replay to real time")
        if output:
            p.add_argument("--output", help="output path, stdout when omitted")
        p.set_defaults(func=func)
        return p

    command("featurize", cmd_featurize, "dump features as a text matrix")
    command("vad", cmd_vad, "list the speech segments the VAD finds")
    p = command("decode", cmd_decode, "decode a WAV file")
    p.add_argument("--nbest", type=int, help="hypotheses per segment")
    p = command("serve", cmd_serve, "run the recognition server", wav=False, output=False)
    p.add_argument("--listen", help=f"host:port, default {config.LISTEN_ADDR}")
    p.add_argument("--http-port", type=int, help="serve the status API on this port")
    p.add_argument("--sessions", type=int, help="exit after this many sessions")
    p = command("client", cmd_client, "stream audio to a server", output=False)
    p.add_argument("--connect", help="server host:port")
    p = command("bench-rtf", cmd_bench, "measure real-time factor (and WER)", wav=False)
    p.add_argument("wavs", nargs="*", help="WAV files or directories")
    p = sub.add_parser("make-toy-model", help="generate a toy graph, GMM, word table and WAV")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--pdfs", type=int, default=8)
    p.add_argument("--words", type=int, default=3)
    p.add_argument("--gap-ms", type=float, default=0.0, help="long silence in the middle of the transcript")
    p.add_argument("--seconds", type=float, default=0.0, help="minimum audio length")
    p.add_argument("--output", help="output directory (default ./toy)")
    p.set_defaults(func=cmd_toy)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (RtAsrError, OSError, ValueError) as e:
        print(f"rtasr {args.command}: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130
