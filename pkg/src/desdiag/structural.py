"""Structural pre-filter: can a candidate module make a faulty module's
confused strings distinguishable once the two are composed?

Two marker automata drive the test. The L1 marker runs over the faulty
module and marks strings with two occurrences of shared events; the L2
marker runs over the candidate and marks strings where a shared event is
followed by a private observable event and then by another shared event.

The filter is a heuristic. Only the verifier gives a verdict.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .automata import (
    Alphabet, Automaton, FaultLabeledAutomaton, Module, fault_split,
)
from .diagnosability import _sccs, check_local

__all__ = [
    "MarkerAutomaton", "TriggerResult", "SupportResult", "StructuralReport",
    "build_l1_marker", "build_l2_marker", "trigger_events", "support_check",
    "analyze_pair",
]

RECOMMEND, REJECT = "recommend", "reject"


@dataclass(frozen=True)
class MarkerAutomaton:
    automaton: Automaton
    role: str  # "L1" or "L2"

    @property
    def accepting(self) -> int:
        return max(self.automaton.marked)

    def edge_classes(self) -> dict[tuple[int, int], frozenset[str]]:
        """Events grouped by (src, dst), the way the marker is drawn."""
        out: dict[tuple[int, int], set[str]] = {}
        for s, e, d in self.automaton.transitions:
            out.setdefault((s, d), set()).add(e)
        return {k: frozenset(v) for k, v in out.items()}


def _marker(alphabet: Alphabet, n: int, route, role: str) -> MarkerAutomaton:
    trans = []
    for x in range(n):
        for ev in alphabet.names:
            y = route(x, ev)
            if y is not None:
                trans.append((x, ev, y))
    return MarkerAutomaton(
        Automaton(alphabet, tuple(str(i) for i in range(n)), 0, frozenset({n - 1}),
                  tuple(trans), f"{role}-marker"),
        role)


def build_l1_marker(sigma1: Alphabet, sigma2: Alphabet) -> MarkerAutomaton:
    sigma1.union(sigma2)  # attribute compatibility
    common = set(sigma1.names) & set(sigma2.names)

    def route(x, ev):
        if x == 2:
            return 2
        return x + 1 if ev in common else x

    return _marker(sigma1, 3, route, "L1")


def build_l2_marker(sigma1: Alphabet, sigma2: Alphabet, *,
                    entry: Iterable[str] | None = None,
                    exit: Iterable[str] | None = None) -> MarkerAutomaton:
    """Marker over ``sigma2``.

    ``entry`` and ``exit`` narrow the shared events on the 0->1 and 2->3
    edges (default: all shared events); shared events outside them self-loop.
    """
    sigma1.union(sigma2)
    common = set(sigma1.names) & set(sigma2.names)
    private_obs = set(sigma2.observable) - set(sigma1.names)
    entry = common if entry is None else set(entry) & common
    exit = common if exit is None else set(exit) & common

    def route(x, ev):
        if x == 0:
            return 1 if ev in entry else 0
        if x == 1:
            return 2 if ev in private_obs else 1
        if x == 2:
            return 3 if ev in exit else 2
        return 3

    return _marker(sigma2, 4, route, "L2")


@dataclass(frozen=True)
class TriggerResult:
    trigger: frozenset[str]
    confirm: frozenset[str]
    marked_any: bool
    example: tuple[str, ...] | None = None  # shortest marked string


def _marker_product(fla: FaultLabeledAutomaton, marker: MarkerAutomaton, reads) -> TriggerResult:
    a, m = fla.automaton, marker.automaton
    start = (0, 0)
    parent = {start: None}
    queue = deque([start])
    trigger, confirm = set(), set()
    example = None
    while queue:
        cur = queue.popleft()
        x, k = cur
        if k == 2 and example is None:
            example = cur
        for ev, y in a.out[x]:
            k2 = m.delta[(k, ev)] if reads(x) else k
            if k == 0 and k2 == 1:
                trigger.add(ev)
            elif k == 1 and k2 == 2:
                confirm.add(ev)
            nxt = (y, k2)
            if nxt not in parent:
                parent[nxt] = (cur, ev)
                queue.append(nxt)
    word = None
    if example is not None:
        word = []
        node = example
        while parent[node] is not None:
            node, ev = parent[node]
            word.append(ev)
        word = tuple(reversed(word))
    return TriggerResult(frozenset(trigger), frozenset(confirm), example is not None, word)


def trigger_events(faulty: FaultLabeledAutomaton, candidate_alphabet: Alphabet) -> TriggerResult:
    """Shared events that move the L1 marker along faulty continuations.

    The marker only reads events fired from F-labeled states: prefixes the
    faulty strings share with non-faulty ones are skipped.
    """
    marker = build_l1_marker(faulty.automaton.alphabet, candidate_alphabet)
    return _marker_product(faulty, marker, faulty.faulty)


def _normal_only(fla: FaultLabeledAutomaton) -> list[bool]:
    """N states from which no F state is reachable."""
    a = fla.automaton
    can_fail = [fla.faulty(i) for i in range(a.n_states)]
    changed = True
    while changed:
        changed = False
        for x in range(a.n_states):
            if not can_fail[x] and any(can_fail[y] for _, y in a.out[x]):
                can_fail[x] = changed = True
    return [not f for f in can_fail]


def normal_side_events(faulty: FaultLabeledAutomaton, candidate_alphabet: Alphabet) -> TriggerResult:
    """Same as :func:`trigger_events` for non-faulty strings that are not
    prefixes of faulty ones."""
    marker = build_l1_marker(faulty.automaton.alphabet, candidate_alphabet)
    safe = _normal_only(faulty)
    return _marker_product(faulty, marker, safe.__getitem__)


@dataclass(frozen=True)
class SupportResult:
    ok: bool
    kind: str  # accepted | no-trigger | dead-end | silent-cycle
    path: tuple[str, ...] = ()
    cycle: tuple[str, ...] = ()
    trailing_shared: frozenset[str] = frozenset()

    @property
    def witness(self) -> tuple[str, ...]:
        return self.path + self.cycle


def support_check(candidate: Automaton, trigger: Iterable[str], confirm: Iterable[str], *,
                  faulty_alphabet: Alphabet) -> SupportResult:
    """Does every continuation of a trigger in ``candidate`` pick up a private
    observable event before the next shared one?

    ok iff (i) every reachable product state in marker phase 1 or 2 can reach
    phase 3, and (ii) no reachable cycle stays inside phases 1-2.
    """
    trigger = frozenset(trigger)
    if not trigger:
        return SupportResult(False, "no-trigger")
    marker = build_l2_marker(faulty_alphabet, candidate.alphabet,
                             entry=trigger, exit=set(confirm) | trigger).automaton
    start = (candidate.initial, 0)
    parent: dict[tuple[int, int], tuple | None] = {start: None}
    order = [start]
    succ: dict[tuple[int, int], list[tuple[str, tuple[int, int]]]] = {}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        x, k = cur
        row = []
        for ev, y in candidate.out[x]:
            nxt = (y, marker.delta[(k, ev)])
            row.append((ev, nxt))
            if nxt not in parent:
                parent[nxt] = (cur, ev)
                order.append(nxt)
                queue.append(nxt)
        succ[cur] = row

    def path_to(node):
        word = []
        while parent[node] is not None:
            node, ev = parent[node]
            word.append(ev)
        return tuple(reversed(word))

    common = set(faulty_alphabet.names) & set(candidate.alphabet.names)
    trailing = frozenset(ev for node in order if node[1] == 3
                         for ev, _ in succ[node] if ev in common)
    accepting = [n for n in order if n[1] == 3]
    if not any(n[1] >= 1 for n in order):
        return SupportResult(False, "no-trigger")
    # (i) co-reachability of phase 3
    pred: dict[tuple[int, int], list] = {}
    for node, row in succ.items():
        for _, nxt in row:
            pred.setdefault(nxt, []).append(node)
    good = set(accepting)
    stack = list(accepting)
    while stack:
        for p in pred.get(stack.pop(), ()):
            if p not in good:
                good.add(p)
                stack.append(p)
    for node in order:
        if node[1] in (1, 2) and node not in good:
            return SupportResult(False, "dead-end", path_to(node), (), trailing)
    # (ii) silent cycles in phases 1-2
    inner = [n for n in order if n[1] in (1, 2)]
    inner_set = set(inner)
    idx = {n: i for i, n in enumerate(order)}
    adj = {idx[n]: [idx[y] for _, y in succ[n] if y in inner_set] for n in inner}
    for comp in _sccs([idx[n] for n in inner], adj):
        members = set(comp)
        head = order[comp[0]]
        if len(comp) == 1 and comp[0] not in adj[comp[0]]:
            continue
        cycle = _cycle_through(head, succ, {order[i] for i in members})
        return SupportResult(False, "silent-cycle", path_to(head), cycle, trailing)
    return SupportResult(True, "accepted", path_to(accepting[0]), (), trailing)


def _cycle_through(head, succ, members) -> tuple[str, ...]:
    parent = {head: None}
    queue = deque([head])
    while queue:
        cur = queue.popleft()
        for ev, nxt in succ[cur]:
            if nxt == head:
                word = [ev]
                node = cur
                while parent[node] is not None:
                    node, e = parent[node]
                    word.append(e)
                return tuple(reversed(word))
            if nxt in members and nxt not in parent:
                parent[nxt] = (cur, ev)
                queue.append(nxt)
    return ()


@dataclass(frozen=True)
class StructuralReport:
    faulty_module: str
    candidate: str
    common_events: tuple[str, ...]
    trigger_events: tuple[str, ...]
    confirm_events: tuple[str, ...]
    marked_any: bool
    marked_example: tuple[str, ...] | None
    support_ok: bool
    support_witness: tuple[str, ...]
    verdict: str
    strict: bool = False
    strict_ok: bool = False
    notes: tuple[str, ...] = ()

    @property
    def recommended(self) -> bool:
        return self.verdict == RECOMMEND

    def to_json(self) -> dict:
        return {
            "faulty_module": self.faulty_module,
            "candidate": self.candidate,
            "common_events": list(self.common_events),
            "trigger_events": list(self.trigger_events),
            "confirm_events": list(self.confirm_events),
            "marked_any": self.marked_any,
            "marked_example": None if self.marked_example is None else list(self.marked_example),
            "support_ok": self.support_ok,
            "support_witness": list(self.support_witness),
            "verdict": self.verdict,
            "strict": self.strict,
            "strict_ok": self.strict_ok,
            "notes": list(self.notes),
        }


def analyze_pair(faulty: Module, candidate: Module, *, faults: Iterable[str] | None = None,
                 strict: bool = False) -> StructuralReport:
    """Run the two-step structural test of ``candidate`` against ``faulty``.

    Default mode checks the faulty continuations only. ``strict`` also
    requires the non-faulty strings (those that are not prefixes of faulty
    ones) to have a support; both results are always reported.
    """
    a1, a2 = faulty.automaton, candidate.automaton
    sigma1, sigma2 = a1.alphabet, a2.alphabet
    common = tuple(sigma1.sorted(set(sigma1.names) & set(sigma2.names)))
    fla = fault_split(a1, faults)
    notes = []
    if faults is None and check_local(faulty).diagnosable:
        notes.append(f"{faulty.name} is locally diagnosable; no merge needed")
    if not common:
        notes.append("no shared events: observation cannot change")

    trig = trigger_events(fla, sigma2)
    sup = support_check(a2, trig.trigger, trig.confirm, faulty_alphabet=sigma1)
    ok = trig.marked_any and sup.ok
    if trig.trigger and not trig.marked_any:
        notes.append("faulty continuations carry fewer than two shared events")
    if not sup.ok and trig.trigger:
        notes.append(f"support check failed: {sup.kind} after "
                     f"{' '.join(sup.path) or 'start'}"
                     + (f", cycle {' '.join(sup.cycle)}" if sup.cycle else ""))
    if sup.ok and sup.trailing_shared:
        notes.append("strict support clause fails on trailing shared events "
                     + ",".join(sigma2.sorted(sup.trailing_shared)))

    side = normal_side_events(fla, sigma2)
    side_sup = support_check(a2, side.trigger, side.confirm, faulty_alphabet=sigma1)
    strict_ok = side.marked_any and side_sup.ok
    notes.append("non-faulty side " + ("supported" if strict_ok else "not supported"))

    verdict = RECOMMEND if ok and (strict_ok or not strict) else REJECT
    return StructuralReport(
        faulty_module=faulty.name,
        candidate=candidate.name,
        common_events=common,
        trigger_events=tuple(sigma1.sorted(trig.trigger)),
        confirm_events=tuple(sigma1.sorted(trig.confirm)),
        marked_any=trig.marked_any,
        marked_example=trig.example,
        support_ok=sup.ok,
        support_witness=sup.witness,
        verdict=verdict,
        strict=strict,
        strict_ok=strict_ok,
        notes=tuple(notes),
    )
