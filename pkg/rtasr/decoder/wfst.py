"""
Tropical-semiring WFST in AT&T-style text form.

    src dst ilabel olabel [weight]     one arc
    state [weight]                     final state (weight 0.0 when missing)

The src of the first line is the start state. Input label 0 is epsilon,
k >= 1 consumes scorer column k-1; output label 0 is epsilon, w >= 1 is a
word id.
"""

import logging
import math
from collections import deque, namedtuple
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, TextIO, Union

from ..errors import WfstFormatError

logger = logging.getLogger(__name__)

Arc = namedtuple("Arc", ["src", "dst", "ilabel", "olabel", "weight"])


@dataclass(eq=False)
class Wfst:
    n_states: int
    start: int
    arcs: list[list[Arc]]
    finals: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.arcs) != self.n_states:
            raise WfstFormatError(f"{len(self.arcs)} arc lists for {self.n_states} states")
        # ties resolve towards the lower output label, then the lower destination
        self.emitting = [sorted((a for a in out if a.ilabel != 0), key=lambda a: (a.olabel, a.dst, a.ilabel))
                         for out in self.arcs]
        self.epsilon = [sorted((a for a in out if a.ilabel == 0), key=lambda a: (a.olabel, a.dst))
                        for out in self.arcs]

    @property
    def num_arcs(self) -> int:
        return sum(len(out) for out in self.arcs)

    @property
    def max_ilabel(self) -> int:
        return max((a.ilabel for out in self.arcs for a in out), default=0)

    def is_final(self, state: int) -> bool:
        return state in self.finals

    def final_weight(self, state: int) -> float:
        return self.finals.get(state, math.inf)

    def reachable(self) -> set[int]:
        seen = {self.start}
        todo = deque([self.start])
        while todo:
            for arc in self.arcs[todo.popleft()]:
                if arc.dst not in seen:
                    seen.add(arc.dst)
                    todo.append(arc.dst)
        return seen

    def __eq__(self, other) -> bool:
        if not isinstance(other, Wfst):
            return NotImplemented
        return (self.n_states == other.n_states and self.start == other.start
                and self.finals == other.finals
                and [sorted(a) for a in self.arcs] == [sorted(a) for a in other.arcs])

    def __repr__(self) -> str:
        return f"<Wfst states={self.n_states} arcs={self.num_arcs} finals={len(self.finals)} start={self.start}>"


def _int(value: str, what: str, lineno: int) -> int:
    try:
        n = int(value)
    except ValueError:
        raise WfstFormatError(f"line {lineno}: {what} {value!r} is not an integer")
    if n < 0:
        raise WfstFormatError(f"line {lineno}: negative {what} {n}")
    return n


def _weight(value: str, lineno: int, allow_inf: bool = False) -> float:
    try:
        w = float(value)
    except ValueError:
        raise WfstFormatError(f"line {lineno}: weight {value!r} is not a number")
    if math.isnan(w) or (math.isinf(w) and not (allow_inf and w > 0)):
        raise WfstFormatError(f"line {lineno}: invalid weight {value}")
    return w


def find_negative_epsilon_cycle(graph: Wfst) -> bool:
    '''
    Bellman-Ford over the epsilon arcs from a virtual source
    '''
    dist = [0.0] * graph.n_states
    eps = [a for out in graph.epsilon for a in out]
    for _ in range(graph.n_states):
        changed = False
        for a in eps:
            if dist[a.src] + a.weight < dist[a.dst]:
                dist[a.dst] = dist[a.src] + a.weight
                changed = True
        if not changed:
            return False
    return True


def validate_wfst(graph: Wfst) -> None:
    reachable = graph.reachable()
    unreachable = sorted(s for s in graph.finals if s not in reachable)
    if unreachable:
        logger.warning(f"Final states unreachable from start {graph.start}: {unreachable}")
    if not any(s in reachable for s in graph.finals):
        raise WfstFormatError(f"no final state is reachable from start state {graph.start}")
    if find_negative_epsilon_cycle(graph):
        raise WfstFormatError("graph has an epsilon cycle with negative total cost")


def parse_wfst(text: str) -> Wfst:
    arcs: list[Arc] = []
    finals: dict[int, float] = {}
    start: Optional[int] = None
    mentioned: set[int] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields or fields[0].startswith("#"):
            continue
        if len(fields) in (4, 5):
            src, dst = _int(fields[0], "state", lineno), _int(fields[1], "state", lineno)
            ilabel, olabel = _int(fields[2], "ilabel", lineno), _int(fields[3], "olabel", lineno)
            weight = _weight(fields[4], lineno) if len(fields) == 5 else 0.0
            arcs.append(Arc(src, dst, ilabel, olabel, weight))
            mentioned.update((src, dst))
        elif len(fields) in (1, 2):
            state = _int(fields[0], "state", lineno)
            weight = _weight(fields[1], lineno, allow_inf=True) if len(fields) == 2 else 0.0
            mentioned.add(state)
            if math.isfinite(weight):
                finals[state] = min(weight, finals.get(state, math.inf))
        else:
            raise WfstFormatError(f"line {lineno}: expected 1, 2, 4 or 5 fields, got {len(fields)}")
        if start is None:
            start = int(fields[0])
    if start is None:
        raise WfstFormatError("empty WFST text")
    n_states = max(mentioned) + 1
    dangling = sorted(set(range(n_states)) - mentioned)
    if dangling:
        raise WfstFormatError(f"dangling state ids {dangling[:10]}: never used by an arc or final line")
    per_state: list[list[Arc]] = [[] for _ in range(n_states)]
    for arc in arcs:
        per_state[arc.src].append(arc)
    graph = Wfst(n_states, start, per_state, finals)
    validate_wfst(graph)
    return graph


def load_wfst(source: Union[str, Path]) -> Wfst:
    '''
    Load from a path, or parse `source` as WFST text when it holds newlines
    '''
    if isinstance(source, str) and "\n" in source:
        return parse_wfst(source)
    try:
        text = Path(source).read_text()
    except OSError as e:
        raise WfstFormatError(f"cannot read WFST {source}: {e}") from e
    graph = parse_wfst(text)
    logger.info(f"Loaded WFST {source}: {graph.n_states} states, {graph.num_arcs} arcs")
    return graph


def dump_wfst(graph: Wfst, dest: Optional[Union[str, Path, TextIO]] = None) -> str:
    lines = []
    order = [graph.start] + [s for s in range(graph.n_states) if s != graph.start]
    if not graph.arcs[graph.start] and graph.is_final(graph.start):
        lines.append(f"{graph.start} {graph.finals[graph.start]!r}")
    for s in order:
        for a in graph.arcs[s]:
            lines.append(f"{a.src} {a.dst} {a.ilabel} {a.olabel} {float(a.weight)!r}")
    for s in sorted(graph.finals):
        line = f"{s} {graph.finals[s]!r}"
        if not lines or lines[0] != line:
            lines.append(line)
    text = "\n".join(lines) + "\n"
    if dest is not None:
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            Path(dest).write_text(text)
    return text
