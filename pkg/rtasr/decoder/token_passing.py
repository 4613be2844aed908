"""
Frame-synchronous token passing over a WFST.

Each graph state keeps up to `nbest` tokens with distinct word histories,
cheapest first, so the K best distinct word sequences survive to the end
of a segment. Word histories are interned: equal word sequences share one
history id, which makes the per-state dedup an integer comparison.
"""

import heapq
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config import DecoderConfig
from ..errors import DecodeError
from ..models import Hypothesis
from .wfst import Wfst

logger = logging.getLogger(__name__)

ROOT = 0  # empty word history

Entry = tuple[float, int]  # (cost, history id)


@dataclass(frozen=True)
class Token:
    state: int
    cost: float
    history: int


class Decoder:
    def __init__(self, graph: Wfst, cfg: DecoderConfig = DecoderConfig()):
        self.graph = graph
        self.cfg = cfg
        self.frame = 0
        self.active: dict[int, list[Entry]] = {}
        self.reset()

    # word histories

    def _extend(self, history: int, olabel: int) -> int:
        if olabel == 0:
            return history
        key = (history, olabel)
        found = self._intern.get(key)
        if found is None:
            found = len(self._sequences)
            self._intern[key] = found
            self._sequences.append(self._sequences[history] + (olabel,))
        return found

    def words(self, history: int) -> tuple[int, ...]:
        return self._sequences[history]

    # token tables

    def _relax(self, table: dict[int, list[Entry]], state: int, cost: float, history: int) -> bool:
        entries = table.setdefault(state, [])
        for i, (c, h) in enumerate(entries):
            if h == history:
                if cost < c:
                    entries[i] = (cost, history)
                    entries.sort()
                    return True
                return False
        if len(entries) < self.cfg.nbest:
            entries.append((cost, history))
            entries.sort()
            return True
        if (cost, history) < entries[-1]:
            entries[-1] = (cost, history)
            entries.sort()
            return True
        return False

    def _closure(self, table: dict[int, list[Entry]], cutoff: float) -> None:
        '''
        Relax epsilon arcs to a fixpoint, cheapest token first
        '''
        heap = [(c, s, h) for s in sorted(table) for c, h in table[s]]
        heapq.heapify(heap)
        while heap:
            cost, state, history = heapq.heappop(heap)
            if (cost, history) not in table.get(state, ()):
                continue
            for arc in self.graph.epsilon[state]:
                c = cost + arc.weight
                if c > cutoff:
                    continue
                h = self._extend(history, arc.olabel)
                if self._relax(table, arc.dst, c, h):
                    heapq.heappush(heap, (c, arc.dst, h))

    def _prune(self, table: dict[int, list[Entry]]) -> dict[int, list[Entry]]:
        table = {s: e for s, e in table.items() if e}
        if not table:
            return table
        best = min(e[0][0] for e in table.values())
        limit = best + self.cfg.beam
        table = {s: [x for x in e if x[0] <= limit] for s, e in table.items()}
        count = sum(len(e) for e in table.values())
        if count > self.cfg.max_active:
            ranked = sorted((c, s, h) for s, e in table.items() for c, h in e)[:self.cfg.max_active]
            table = {}
            for c, s, h in ranked:
                table.setdefault(s, []).append((c, h))
        return {s: e for s, e in sorted(table.items()) if e}

    # decoding

    def reset(self) -> None:
        self._sequences: list[tuple[int, ...]] = [()]
        self._intern: dict[tuple[int, int], int] = {}
        self.frame = 0
        table = {self.graph.start: [(0.0, ROOT)]}
        self._closure(table, self.cfg.beam)
        self.active = self._prune(table)

    @property
    def num_tokens(self) -> int:
        return sum(len(e) for e in self.active.values())

    def tokens(self) -> list[Token]:
        return [Token(s, c, h) for s, e in self.active.items() for c, h in e]

    def best_costs(self) -> dict[int, float]:
        return {s: e[0][0] for s, e in self.active.items()}

    def advance(self, loglik_row: np.ndarray) -> None:
        row = np.asarray(loglik_row, dtype=np.float64).reshape(-1)
        if row.size < self.graph.max_ilabel:
            raise DecodeError(f"loglik row has {row.size} pdfs, graph uses ilabels up to {self.graph.max_ilabel}")
        acoustic = (-self.cfg.acoustic_scale * row).tolist()
        table: dict[int, list[Entry]] = {}
        for state in sorted(self.active):
            arcs = self.graph.emitting[state]
            if not arcs:
                continue
            for cost, history in self.active[state]:
                for arc in arcs:
                    c = cost + arc.weight + acoustic[arc.ilabel - 1]
                    self._relax(table, arc.dst, c, self._extend(history, arc.olabel))
        cutoff = math.inf
        if table:
            cutoff = min(e[0][0] for e in table.values()) + self.cfg.beam
        self._closure(table, cutoff)
        self.active = self._prune(table)
        self.frame += 1
        if not self.active:
            logger.warning(f"All tokens died at frame {self.frame}")

    def _best(self) -> tuple[float, int, int]:
        if not self.active:
            raise DecodeError(f"no active tokens at frame {self.frame}")
        return min((e[0][0], s, e[0][1]) for s, e in self.active.items())

    def partial_best(self) -> Hypothesis:
        '''
        Cheapest active token, final weights ignored; the search is not changed
        '''
        cost, state, history = self._best()
        return Hypothesis(self.words(history), cost, self.graph.is_final(state))

    def finalize_nbest(self, k: Optional[int] = None) -> list[Hypothesis]:
        '''
        Up to k distinct word sequences by ascending total cost, then reset.
        Tokens outside final states only count when no token reached one,
        unless a finite `nonfinal_penalty` is configured.
        '''
        if not self.active:
            raise DecodeError(f"no tokens left to finalize at frame {self.frame}")
        k = self.cfg.nbest if k is None else k
        penalty = self.cfg.nonfinal_penalty
        finals: dict[tuple[int, ...], float] = {}
        others: dict[tuple[int, ...], float] = {}
        for state, entries in self.active.items():
            weight = self.graph.final_weight(state)
            target = finals if math.isfinite(weight) else others
            extra = weight if math.isfinite(weight) else (penalty if math.isfinite(penalty) else 0.0)
            for cost, history in entries:
                words = self.words(history)
                total = cost + extra
                if total < target.get(words, math.inf):
                    target[words] = total
        results = [Hypothesis(w, c, True) for w, c in finals.items()]
        if not finals or math.isfinite(penalty):
            results += [Hypothesis(w, c, False) for w, c in others.items()
                        if not (w in finals and finals[w] <= c)]
            if finals:
                results = self._unique(results)
        results.sort(key=lambda h: (h.cost, h.words))
        self.reset()
        return results[:k]

    @staticmethod
    def _unique(hyps: list[Hypothesis]) -> list[Hypothesis]:
        best: dict[tuple[int, ...], Hypothesis] = {}
        for h in hyps:
            if h.words not in best or h.cost < best[h.words].cost:
                best[h.words] = h
        return list(best.values())
