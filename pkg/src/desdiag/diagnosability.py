"""Twin-plant verifier and the local / modular / virtual-module checks.

The verifier pairs two label-tracking copies of a fault-labeled automaton.
Observable (masked) events move both copies together, every other event moves
one copy. A pair is stored once regardless of orientation, so the verifier of
an n-state automaton has at most n(n+1)/2 states.

The language is not diagnosable iff a reachable cycle of mixed pairs (one
copy F, the other N) exists on which the faulty copy makes progress. Which
events count as progress is a parameter: the whole alphabet for a single
automaton, the faulty module's own events for the modular checks (fault
delays are measured in local string length there).
"""

from __future__ import annotations

import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .automata import (
    Automaton, AutomatonError, FaultLabeledAutomaton, ModularSystem, Module,
    compose_all, deadlock_states, fault_split,
)
from .partition import Partition, PartitionError, validate_partition

__all__ = [
    "Verifier", "VerifierEdge", "Witness", "Scope", "Verdict",
    "build_verifier", "find_indeterminate_cycle", "find_indeterminate_cycles",
    "check_local", "check_modular", "check_virtual", "check_centralized",
    "oracle_diagnosable", "pigeonhole_bound", "all_diagnosable",
]

log = logging.getLogger(__name__)

BOTH, LEFT, RIGHT = "both", "left", "right"


@dataclass(frozen=True)
class VerifierEdge:
    src: int
    event: str
    mover: str
    dst: int
    # target stored with its two sides exchanged relative to the computed pair
    swap: bool = False


@dataclass(frozen=True)
class Verifier:
    fla: FaultLabeledAutomaton
    mask: frozenset[str]
    pairs: tuple[tuple[int, int], ...]
    edges: tuple[VerifierEdge, ...]

    initial = 0

    def name(self, i: int) -> str:
        p, q = self.pairs[i]
        return f"{self.fla.display(p)};{self.fla.display(q)}"

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.name(i) for i in range(len(self.pairs)))

    def provenance(self, i: int) -> tuple[str, str]:
        p, q = self.pairs[i]
        return self.fla.origin[p], self.fla.origin[q]

    def labels(self, i: int) -> tuple[str, str]:
        p, q = self.pairs[i]
        return self.fla.labels[p], self.fla.labels[q]

    def mixed(self, i: int) -> bool:
        a, b = self.labels(i)
        return a != b

    def key(self, i: int) -> frozenset[str]:
        """Orientation-free identity, e.g. ``{"1N", "3F"}``."""
        p, q = self.pairs[i]
        return frozenset((self.fla.display(p), self.fla.display(q)))

    def find(self, name: str) -> int:
        """Index of the pair named ``"x;y"`` in either orientation."""
        left, _, right = name.partition(";")
        want = frozenset((left, right))
        for i in range(len(self.pairs)):
            if self.key(i) == want:
                return i
        raise KeyError(name)

    def __len__(self):
        return len(self.pairs)


def build_verifier(fla: FaultLabeledAutomaton, mask: Iterable[str]) -> Verifier:
    a = fla.automaton
    mask = frozenset(mask)
    for ev in sorted(mask):
        if ev not in a.alphabet:
            raise AutomatonError(f"mask event {ev!r} is not in the alphabet")
        if not a.alphabet[ev].observable:
            raise AutomatonError(f"mask contains an unobservable event {ev!r}")

    index = {(0, 0): 0}
    pairs = [(0, 0)]
    edges = []
    queue = deque([0])
    delta = a.delta
    while queue:
        i = queue.popleft()
        p, q = pairs[i]
        moves = []
        for ev in a.alphabet.names:
            if ev in mask:
                p2, q2 = delta.get((p, ev)), delta.get((q, ev))
                if p2 is not None and q2 is not None:
                    moves.append((ev, BOTH, (p2, q2)))
            else:
                p2, q2 = delta.get((p, ev)), delta.get((q, ev))
                if p2 is not None:
                    moves.append((ev, LEFT, (p2, q)))
                if q2 is not None:
                    moves.append((ev, RIGHT, (p, q2)))
        for ev, mover, (u, v) in moves:
            key = (u, v) if u <= v else (v, u)
            j = index.get(key)
            if j is None:
                j = index[key] = len(pairs)
                pairs.append((u, v))
                queue.append(j)
            edges.append(VerifierEdge(i, ev, mover, j, pairs[j] != (u, v)))
    return Verifier(fla, mask, tuple(pairs), tuple(edges))


def _word(events: Sequence[str]) -> str:
    if not events:
        return "ε"
    return ("" if all(len(e) == 1 for e in events) else " ").join(events)


@dataclass(frozen=True)
class Witness:
    """An indeterminate cycle and the confused strings it yields.

    ``faulty`` and ``normal`` are the two strings read along stem + one turn
    of the cycle; they have the same projection on the mask, and pumping the
    cycle makes the faulty one arbitrarily long. ``horizon`` is the number of
    mixed pairs: any confused faulty continuation longer than this must
    revisit a pair.
    """

    stem: tuple[str, ...]
    cycle: tuple[str, ...]
    cycle_states: tuple[str, ...]
    faulty: tuple[str, ...]
    normal: tuple[str, ...]
    horizon: int
    cycle_faulty: tuple[str, ...] = ()
    stem_edges: tuple[int, ...] = field(default=(), repr=False)
    cycle_edges: tuple[int, ...] = field(default=(), repr=False)

    @property
    def confused_pair(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return self.faulty, self.normal

    @property
    def entry(self) -> str:
        return self.cycle_states[0]

    def describe(self) -> str:
        return (f"cycle at {self.entry} on {' '.join(self.cycle)}; "
                f"faulty {_word(self.faulty)}({_word(self.cycle_faulty)})* "
                f"vs normal {_word(self.normal)}")

    def to_json(self) -> dict:
        return {
            "entry": self.entry,
            "stem": list(self.stem),
            "cycle": list(self.cycle),
            "cycle_states": list(self.cycle_states),
            "confused_pair": {"faulty": list(self.faulty), "normal": list(self.normal)},
            "horizon": self.horizon,
        }


def _faulty_side(v: Verifier, i: int) -> str | None:
    a, b = v.labels(i)
    if a == b:
        return None
    return LEFT if a == "F" else RIGHT


def _sccs(nodes: Sequence[int], succ: dict[int, list[int]]) -> list[list[int]]:
    """Tarjan, iterative; components in discovery order of their roots."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                out.append(sorted(comp))
    return out


def _bfs(start: int, adj: dict[int, list[tuple[int, int]]]) -> dict[int, tuple[int, int] | None]:
    """Shortest-path tree: node -> (edge index, predecessor)."""
    parent: dict[int, tuple[int, int] | None] = {start: None}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for e, y in adj.get(x, ()):
            if y not in parent:
                parent[y] = (e, x)
                queue.append(y)
    return parent


def _path(parent, target) -> list[int]:
    path = []
    while parent[target] is not None:
        e, target = parent[target]
        path.append(e)
    return path[::-1]


def _readout(v: Verifier, edge_ids: Sequence[int]):
    left: list[str] = []
    right: list[str] = []
    for e in edge_ids:
        edge = v.edges[e]
        if edge.mover in (BOTH, LEFT):
            left.append(edge.event)
        if edge.mover in (BOTH, RIGHT):
            right.append(edge.event)
        if edge.swap:
            left, right = right, left
    return left, right


def find_indeterminate_cycles(v: Verifier, progress: Iterable[str] | None = None) -> list[Witness]:
    """One witness per indeterminate strongly connected component.

    A component counts only if it has an internal edge on which the faulty
    copy moves on a ``progress`` event (default: any event). Witnesses are
    ordered by stem length, then cycle length, then verifier discovery order.
    """
    progress = None if progress is None else frozenset(progress)
    mixed = [i for i in range(len(v)) if v.mixed(i)]
    mixed_set = set(mixed)
    inner: dict[int, list[tuple[int, int]]] = {}
    for e, edge in enumerate(v.edges):
        if edge.src in mixed_set and edge.dst in mixed_set:
            inner.setdefault(edge.src, []).append((e, edge.dst))

    def advances(e: int) -> bool:
        edge = v.edges[e]
        if progress is not None and edge.event not in progress:
            return False
        return edge.mover == BOTH or edge.mover == _faulty_side(v, edge.src)

    comps = _sccs(mixed, {x: [y for _, y in inner.get(x, ())] for x in mixed})
    full_adj: dict[int, list[tuple[int, int]]] = {}
    for e, edge in enumerate(v.edges):
        full_adj.setdefault(edge.src, []).append((e, edge.dst))
    from_root = _bfs(v.initial, full_adj)

    witnesses = []
    for comp in comps:
        members = set(comp)
        local = {x: [(e, y) for e, y in inner.get(x, ()) if y in members] for x in comp}
        hot = [e for x in comp for e, _ in local[x] if advances(e)]
        if not hot:
            continue
        entry = comp[0]
        fwd = _bfs(entry, local)
        back_adj: dict[int, list[tuple[int, int]]] = {}
        for x in comp:
            for e, y in local[x]:
                back_adj.setdefault(y, []).append((e, x))
        back = _bfs(entry, back_adj)
        best = None
        for e in hot:
            edge = v.edges[e]
            to_src = _path(fwd, edge.src)
            # tree over reversed edges: undo _path's reversal to get dst -> entry
            from_dst = _path(back, edge.dst)[::-1]
            cyc = to_src + [e] + from_dst
            if best is None or len(cyc) < len(best):
                best = cyc
        stem = _path(from_root, entry)
        faulty_left, faulty_right = _readout(v, stem + best)
        stem_l, stem_r = _readout(v, stem)
        if _faulty_side(v, entry) == LEFT:
            faulty, normal, stem_faulty = faulty_left, faulty_right, stem_l
        else:
            faulty, normal, stem_faulty = faulty_right, faulty_left, stem_r
        states = [entry] + [v.edges[e].dst for e in best[:-1]]
        witnesses.append(Witness(
            stem=tuple(v.edges[e].event for e in stem),
            cycle=tuple(v.edges[e].event for e in best),
            cycle_states=tuple(v.name(x) for x in states),
            faulty=tuple(faulty), normal=tuple(normal), horizon=len(mixed),
            cycle_faulty=tuple(faulty[len(stem_faulty):]),
            stem_edges=tuple(stem), cycle_edges=tuple(best),
        ))
    order = {w: k for k, w in enumerate(witnesses)}
    witnesses.sort(key=lambda w: (len(w.stem), len(w.cycle), order[w]))
    return witnesses


def find_indeterminate_cycle(v: Verifier, progress: Iterable[str] | None = None) -> Witness | None:
    found = find_indeterminate_cycles(v, progress)
    return found[0] if found else None


@dataclass(frozen=True)
class Scope:
    kind: str  # local | modular | virtual | centralized
    module: str
    block: tuple[str, ...]
    mask: tuple[str, ...]

    def to_json(self) -> dict:
        return {"kind": self.kind, "module": self.module,
                "block": list(self.block), "mask": list(self.mask)}


@dataclass(frozen=True)
class Verdict:
    diagnosable: bool
    scope: Scope
    witness: Witness | None = None
    cycles: tuple[Witness, ...] = ()
    warnings: tuple[str, ...] = ()
    verifier_states: int = 0

    def __post_init__(self):
        assert self.diagnosable == (self.witness is None)

    def to_json(self) -> dict:
        return {
            "diagnosable": self.diagnosable,
            "scope": self.scope.to_json(),
            "verifier_states": self.verifier_states,
            "witness": self.witness.to_json() if self.witness else None,
            "indeterminate_cycles": [w.to_json() for w in self.cycles],
            "warnings": list(self.warnings),
        }


def _verdict(fla: FaultLabeledAutomaton, mask, scope: Scope, progress=None,
             warnings: Sequence[str] = ()) -> Verdict:
    v = build_verifier(fla, mask)
    cycles = tuple(find_indeterminate_cycles(v, progress))
    return Verdict(not cycles, scope, cycles[0] if cycles else None, cycles,
                   tuple(warnings), len(v))


def _liveness_warnings(a: Automaton, what: str) -> list[str]:
    dead = deadlock_states(a)
    if not dead:
        return []
    names = ", ".join(a.states[x] for x in dead)
    return [f"{what} is not live (deadlock at {names}); verdict assumes nothing about liveness"]


def _as_module(m) -> Module:
    if isinstance(m, Module):
        return m
    if isinstance(m, Automaton):
        return Module(m.name or "module", m)
    return Module(*m)


def check_local(m: Module | Automaton) -> Verdict:
    m = _as_module(m)
    a = m.automaton
    mask = a.alphabet.sorted(a.alphabet.observable)
    scope = Scope("local", m.name, (m.name,), tuple(mask))
    warnings = _liveness_warnings(a, m.name)
    if not m.faults:
        return Verdict(True, scope, warnings=tuple(["no faults"] + warnings))
    return _verdict(fault_split(a), mask, scope, None, warnings)


@lru_cache(maxsize=64)
def _labeled(sys: ModularSystem, name: str) -> FaultLabeledAutomaton:
    return fault_split(sys.composition, sys[name].faults)


def _pmap(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def check_virtual(sys: ModularSystem, p: Partition | Sequence[Sequence[str]], *,
                  workers: int = 1, _kind: str = "virtual") -> list[Verdict]:
    """One verdict per fault-carrying module, in system order.

    Each verdict verifies the full composition labeled by that module's
    faults, observed through the union of observable events of its block.
    """
    if not len(sys):
        raise AutomatonError("empty system")
    check = validate_partition(p, sys)
    if not check.ok:
        raise PartitionError("; ".join(check.violations))
    p = check.partition
    comp = sys.composition
    warnings = _liveness_warnings(comp, "composition")

    def one(m: Module) -> Verdict:
        block = p.block_of(m.name)
        obs = set().union(*(sys[n].observable for n in block))
        mask = tuple(sys.alphabet.sorted(obs))
        scope = Scope(_kind, m.name, block, mask)
        return _verdict(_labeled(sys, m.name), mask, scope, m.alphabet.names, warnings)

    return _pmap(one, sys.fault_modules, workers)


def check_modular(sys: ModularSystem, *, workers: int = 1) -> list[Verdict]:
    return check_virtual(sys, Partition.discrete(sys), workers=workers, _kind="modular")


def check_centralized(sys: ModularSystem) -> list[Verdict]:
    """Full composition observed through every observable event of the system."""
    comp = compose_all([m.automaton for m in sys.modules])
    mask = tuple(sys.alphabet.sorted(sys.alphabet.observable))
    out = []
    for m in sys.fault_modules:
        scope = Scope("centralized", m.name, sys.names, mask)
        out.append(_verdict(fault_split(comp, m.faults), mask, scope, m.alphabet.names))
    return out


def all_diagnosable(verdicts: Iterable[Verdict]) -> bool:
    return all(v.diagnosable for v in verdicts)


def pigeonhole_bound(fla: FaultLabeledAutomaton) -> int:
    n = len(set(fla.origin))
    return 4 * n * n + 2


def oracle_diagnosable(fla: FaultLabeledAutomaton, mask: Iterable[str], K: int | None = None,
                       progress: Iterable[str] | None = None) -> bool:
    """Bounded check straight from the definition of a diagnosable fault.

    Searches for a faulty string ``st`` and a non-faulty string ``w`` with the
    same projection on ``mask`` where the continuation ``t`` after the fault
    has at least ``K/2`` progress events. The two strings are grown together
    (aligned on masked events) and configurations are memoized as
    ``(faulty-side state, normal-side state, |t|)``. Returns False iff such a
    pair exists. With the default ``K`` this decides diagnosability exactly.
    """
    a = fla.automaton
    mask = frozenset(mask)
    K = pigeonhole_bound(fla) if K is None else K
    if K < 1:
        raise ValueError("K must be positive")
    need = (K + 1) // 2
    progress = frozenset(a.alphabet.names if progress is None else progress)
    normal = [not fla.faulty(i) for i in range(a.n_states)]
    if not normal[0]:
        return True
    start = (0, 0, 0)
    seen = {start}
    stack = [start]
    while stack:
        s, w, t = stack.pop()
        if fla.faulty(s) and t >= need:
            return False
        succ = []
        for ev, s2 in a.out[s]:
            if ev in mask:
                w2 = a.delta.get((w, ev))
                if w2 is not None:
                    succ.append((s2, w2, ev))
            else:
                succ.append((s2, w, ev))
        for ev, w2 in a.out[w]:
            if ev not in mask:
                succ.append((s, w2, None))
        for s2, w2, ev in succ:
            if not normal[w2]:
                continue
            t2 = t + 1 if ev is not None and fla.faulty(s) and ev in progress else t
            cfg = (s2, w2, min(t2, need))
            if cfg not in seen:
                seen.add(cfg)
                stack.append(cfg)
    return True
