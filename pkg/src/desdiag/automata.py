"""Events, alphabets and deterministic automata, plus the language operations
the diagnosability machinery is built on.

All objects here are immutable; every operation returns a new automaton and
iterates states and events in a fixed order, so two runs on the same input
produce the same state numbering and naming.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Iterable, Sequence

__all__ = [
    "AutomatonError",
    "AttributeConflictError",
    "Event",
    "Alphabet",
    "Automaton",
    "Validation",
    "Module",
    "ModularSystem",
    "FaultLabeledAutomaton",
    "validate",
    "deadlock_states",
    "accessible",
    "parallel_compose",
    "compose_all",
    "project",
    "enumerate_strings",
    "fault_split",
]

NORMAL = "N"
FAULTY = "F"


class AutomatonError(ValueError):
    pass


class AttributeConflictError(AutomatonError):
    """A shared event is declared with different observable/fault flags."""


@dataclass(frozen=True)
class Event:
    name: str
    observable: bool = False
    fault: bool = False

    def __post_init__(self):
        if not self.name or any(ch.isspace() for ch in self.name):
            raise AutomatonError(f"invalid event name {self.name!r}")
        if self.fault and self.observable:
            raise AutomatonError(
                f"event {self.name!r}: fault events must be unobservable")

    @property
    def flags(self) -> str:
        return ("o" if self.observable else "u") + (" f" if self.fault else "")


@dataclass(frozen=True)
class Alphabet:
    events: tuple[Event, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        seen = set()
        for ev in self.events:
            if ev.name in seen:
                raise AutomatonError(f"duplicate event {ev.name!r}")
            seen.add(ev.name)

    @classmethod
    def of(cls, spec: str) -> "Alphabet":
        """Shorthand: ``Alphabet.of("a b c:o f:f")``."""
        events = []
        for tok in spec.split():
            name, _, flags = tok.partition(":")
            events.append(Event(name, observable="o" in flags, fault="f" in flags))
        return cls(tuple(events))

    @cached_property
    def _by_name(self) -> dict[str, Event]:
        return {ev.name: ev for ev in self.events}

    @cached_property
    def order(self) -> dict[str, int]:
        return {ev.name: i for i, ev in enumerate(self.events)}

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def __contains__(self, name) -> bool:
        return name in self._by_name

    def __getitem__(self, name: str) -> Event:
        return self._by_name[name]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(ev.name for ev in self.events)

    @cached_property
    def observable(self) -> frozenset[str]:
        return frozenset(ev.name for ev in self.events if ev.observable)

    @cached_property
    def unobservable(self) -> frozenset[str]:
        return frozenset(ev.name for ev in self.events if not ev.observable)

    @cached_property
    def faults(self) -> frozenset[str]:
        return frozenset(ev.name for ev in self.events if ev.fault)

    def union(self, other: "Alphabet") -> "Alphabet":
        merged = list(self.events)
        for ev in other.events:
            mine = self._by_name.get(ev.name)
            if mine is None:
                merged.append(ev)
            elif mine != ev:
                raise AttributeConflictError(
                    f"event {ev.name!r} declared as [{mine.flags}] and [{ev.flags}]")
        return Alphabet(tuple(merged))

    def restrict(self, names: Iterable[str]) -> "Alphabet":
        keep = set(names)
        return Alphabet(tuple(ev for ev in self.events if ev.name in keep))

    def sorted(self, names: Iterable[str]) -> list[str]:
        """Event names in declaration order."""
        return sorted(names, key=self.order.__getitem__)


@dataclass(frozen=True)
class Automaton:
    """Deterministic automaton ``(X, Sigma, delta, x0, Xm)``.

    States are integers ``0..n-1`` with display names in ``states``;
    transitions are ``(src, event, dst)`` triples. The constructor does not
    check invariants (see :func:`validate` and :meth:`build`).
    """

    alphabet: Alphabet
    states: tuple[str, ...]
    initial: int = 0
    marked: frozenset[int] = frozenset()
    transitions: tuple[tuple[int, str, int], ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "marked", frozenset(self.marked))
        object.__setattr__(self, "transitions", tuple(self.transitions))

    @classmethod
    def build(cls, alphabet: Alphabet | str, states: Sequence[str],
              transitions: Iterable[tuple[str, str, str]], initial: str | None = None,
              marked: Iterable[str] = (), name: str = "") -> "Automaton":
        """Construct from state names and raise on any invariant violation."""
        if isinstance(alphabet, str):
            alphabet = Alphabet.of(alphabet)
        states = [str(s) for s in states]
        index = {s: i for i, s in enumerate(states)}
        try:
            trans = tuple((index[str(s)], e, index[str(d)]) for s, e, d in transitions)
            init = 0 if initial is None else index[str(initial)]
            mark = frozenset(index[str(m)] for m in marked)
        except KeyError as exc:
            raise AutomatonError(f"unknown state {exc.args[0]!r}") from None
        a = cls(alphabet, tuple(states), init, mark, trans, name)
        report = validate(a)
        if not report.ok:
            raise AutomatonError("; ".join(report.violations))
        return a

    @property
    def n_states(self) -> int:
        return len(self.states)

    @cached_property
    def delta(self) -> dict[tuple[int, str], int]:
        table: dict[tuple[int, str], int] = {}
        for src, ev, dst in self.transitions:
            table.setdefault((src, ev), dst)
        return table

    @cached_property
    def out(self) -> tuple[tuple[tuple[str, int], ...], ...]:
        """Outgoing ``(event, dst)`` per state, in alphabet order."""
        order = self.alphabet.order
        rows: list[list[tuple[str, int]]] = [[] for _ in self.states]
        for (src, ev), dst in self.delta.items():
            rows[src].append((ev, dst))
        return tuple(tuple(sorted(r, key=lambda p: order.get(p[0], len(order))))
                     for r in rows)

    def step(self, state: int, event: str) -> int | None:
        return self.delta.get((state, event))

    def run(self, word: Iterable[str]) -> int | None:
        x = self.initial
        for ev in word:
            x = self.delta.get((x, ev))
            if x is None:
                return None
        return x

    def index(self, name: str) -> int:
        try:
            return self.states.index(name)
        except ValueError:
            raise AutomatonError(f"unknown state {name!r}") from None

    def renamed(self, name: str) -> "Automaton":
        return Automaton(self.alphabet, self.states, self.initial, self.marked,
                         self.transitions, name)


@dataclass(frozen=True)
class Validation:
    violations: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate(a: Automaton) -> Validation:
    violations = []
    n = len(a.states)
    names = {}
    for i, s in enumerate(a.states):
        if not s or any(ch.isspace() for ch in s):
            violations.append(f"invalid state name {s!r}")
        if s in names:
            violations.append(f"duplicate state {s!r}")
        names.setdefault(s, i)
    if not 0 <= a.initial < n:
        violations.append(f"initial state {a.initial} does not exist")
    for m in sorted(a.marked):
        if not 0 <= m < n:
            violations.append(f"marked state {m} does not exist")

    def label(i):
        return a.states[i] if 0 <= i < n else str(i)

    seen: dict[tuple[int, str], int] = {}
    for src, ev, dst in a.transitions:
        if ev not in a.alphabet:
            violations.append(f"undeclared event {ev!r} at ({label(src)},{ev})")
        for end in (src, dst):
            if not 0 <= end < n:
                violations.append(f"transition endpoint {end} does not exist")
        prev = seen.setdefault((src, ev), dst)
        if prev != dst:
            violations.append(f"nondeterministic at ({label(src)},{ev})")
    warnings = ()
    if not violations:
        warnings = tuple(f"deadlock at state {a.states[x]}" for x in deadlock_states(a))
    return Validation(tuple(dict.fromkeys(violations)), warnings)


def _reachable(a: Automaton) -> list[int]:
    seen = {a.initial}
    queue = deque([a.initial])
    while queue:
        x = queue.popleft()
        for _, y in a.out[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return sorted(seen)


def deadlock_states(a: Automaton) -> list[int]:
    """Reachable states with no outgoing transition (liveness violations)."""
    return [x for x in _reachable(a) if not a.out[x]]


def accessible(a: Automaton) -> Automaton:
    keep = _reachable(a)
    if len(keep) == len(a.states):
        return a
    new = {old: i for i, old in enumerate(keep)}
    trans = tuple((new[s], e, new[d]) for s, e, d in a.transitions
                  if s in new and d in new)
    return Automaton(a.alphabet, tuple(a.states[x] for x in keep), new[a.initial],
                     frozenset(new[m] for m in a.marked if m in new), trans, a.name)


def parallel_compose(a: Automaton, b: Automaton, *, prune: bool = True) -> Automaton:
    """Synchronous product: shared events move both, private events move one.

    State ``(x, y)`` is named ``"x,y"``. With ``prune=False`` the full
    product of all state pairs is returned (row-major numbering).
    """
    sigma = a.alphabet.union(b.alphabet)
    in_a, in_b = a.alphabet, b.alphabet

    def succ(x, y, ev):
        if ev in in_a:
            x = a.delta.get((x, ev))
            if x is None:
                return None
        if ev in in_b:
            y = b.delta.get((y, ev))
            if y is None:
                return None
        return x, y

    name = "||".join(n for n in (a.name, b.name) if n)
    if not prune:
        nb = len(b.states)
        pairs = [(x, y) for x in range(len(a.states)) for y in range(nb)]
        trans = []
        for x, y in pairs:
            for ev in sigma.names:
                nxt = succ(x, y, ev)
                if nxt is not None:
                    trans.append((x * nb + y, ev, nxt[0] * nb + nxt[1]))
        return Automaton(
            sigma, tuple(f"{a.states[x]},{b.states[y]}" for x, y in pairs),
            a.initial * nb + b.initial,
            frozenset(x * nb + y for x, y in pairs if x in a.marked and y in b.marked),
            tuple(trans), name)

    start = (a.initial, b.initial)
    index = {start: 0}
    order = [start]
    trans = []
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        for ev in sigma.names:
            nxt = succ(*pair, ev)
            if nxt is None:
                continue
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            trans.append((index[pair], ev, index[nxt]))
    return Automaton(
        sigma, tuple(f"{a.states[x]},{b.states[y]}" for x, y in order), 0,
        frozenset(i for i, (x, y) in enumerate(order) if x in a.marked and y in b.marked),
        tuple(trans), name)


def compose_all(automata: Sequence[Automaton]) -> Automaton:
    if not automata:
        raise AutomatonError("nothing to compose")
    return reduce(parallel_compose, automata)


def project(a: Automaton, mask: Iterable[str]) -> Automaton:
    """Observer of ``a`` over the events in ``mask`` (natural projection)."""
    mask = set(mask)
    unknown = sorted(mask - set(a.alphabet.names))
    if unknown:
        raise AutomatonError(f"unknown event(s) in mask: {', '.join(unknown)}")
    sigma = a.alphabet.restrict(mask)
    silent = [[y for ev, y in row if ev not in mask] for row in a.out]

    def closure(xs):
        seen = set(xs)
        stack = list(xs)
        while stack:
            for y in silent[stack.pop()]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return frozenset(seen)

    start = closure([a.initial])
    index = {start: 0}
    order = [start]
    trans = []
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for ev in sigma.names:
            hits = {a.delta[(x, ev)] for x in cur if (x, ev) in a.delta}
            if not hits:
                continue
            nxt = closure(hits)
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            trans.append((index[cur], ev, index[nxt]))
    names = tuple("{" + "|".join(a.states[x] for x in sorted(s)) + "}" for s in order)
    return Automaton(sigma, names, 0,
                     frozenset(i for i, s in enumerate(order) if s & a.marked),
                     tuple(trans), a.name)


def enumerate_strings(a: Automaton, max_len: int) -> list[tuple[str, ...]]:
    """All strings of the generated language up to ``max_len`` events,
    length-lexicographic by alphabet order."""
    if max_len < 0:
        raise AutomatonError("max_len must be non-negative")
    layer = [((), a.initial)]
    found = [()]
    for _ in range(max_len):
        nxt = [(w + (ev,), y) for w, x in layer for ev, y in a.out[x]]
        found.extend(w for w, _ in nxt)
        layer = nxt
    return found


@dataclass(frozen=True)
class FaultLabeledAutomaton:
    """Automaton whose states carry an N/F label.

    ``origin[i]`` is the name of the source state that state ``i`` unfolds;
    the automaton's own state names are ``origin + label`` (e.g. ``"3F"``).
    """

    automaton: Automaton
    labels: tuple[str, ...]
    origin: tuple[str, ...]
    faults: frozenset[str] = frozenset()

    def display(self, i: int) -> str:
        return self.origin[i] + self.labels[i]

    def faulty(self, i: int) -> bool:
        return self.labels[i] == FAULTY

    @property
    def has_faulty_states(self) -> bool:
        return FAULTY in self.labels

    def label_map(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = {}
        for o, lab in zip(self.origin, self.labels):
            out.setdefault(o, set()).add(lab)
        return out


def fault_split(a: Automaton, faults: Iterable[str] | None = None, *,
                use_marked: bool = False) -> FaultLabeledAutomaton:
    """Label states N/F by unfolding ``a`` with a fault flag.

    A string is faulty once it has passed an event in ``faults`` (default:
    the fault-flagged events) or, with ``use_marked``, once it has visited a
    marked state. The flag never resets, so states reachable both with and
    without a fault are split into ``xN`` and ``xF``.
    """
    explicit = faults is not None
    faults = frozenset(a.alphabet.faults if faults is None else faults)
    unknown = sorted(faults - set(a.alphabet.names))
    if unknown:
        raise AutomatonError(f"unknown fault event(s): {', '.join(unknown)}")
    if not faults and not explicit and not use_marked:
        raise AutomatonError(
            f"automaton {a.name or '<unnamed>'} has no fault events and no fault specification")

    def flag(label, ev, dst):
        if label == FAULTY or ev in faults or (use_marked and dst in a.marked):
            return FAULTY
        return NORMAL

    start = (a.initial, FAULTY if use_marked and a.initial in a.marked else NORMAL)
    index = {start: 0}
    order = [start]
    trans = []
    queue = deque([start])
    while queue:
        x, lab = cur = queue.popleft()
        for ev, y in a.out[x]:
            nxt = (y, flag(lab, ev, y))
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            trans.append((index[cur], ev, index[nxt]))
    origin = tuple(a.states[x] for x, _ in order)
    labels = tuple(lab for _, lab in order)
    unfolded = Automaton(a.alphabet, tuple(o + lab for o, lab in zip(origin, labels)), 0,
                         frozenset(i for i, (x, _) in enumerate(order) if x in a.marked),
                         tuple(trans), a.name)
    return FaultLabeledAutomaton(unfolded, labels, origin, faults)


@dataclass(frozen=True)
class Module:
    name: str
    automaton: Automaton

    @property
    def alphabet(self) -> Alphabet:
        return self.automaton.alphabet

    @property
    def faults(self) -> frozenset[str]:
        return self.automaton.alphabet.faults

    @property
    def observable(self) -> frozenset[str]:
        return self.automaton.alphabet.observable


@dataclass(frozen=True)
class ModularSystem:
    modules: tuple[Module, ...]
    alphabet: Alphabet = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mods = tuple(m if isinstance(m, Module) else Module(*m) for m in self.modules)
        object.__setattr__(self, "modules", mods)
        names = [m.name for m in mods]
        dup = sorted({n for n in names if names.count(n) > 1})
        if dup:
            raise AutomatonError(f"duplicate module name(s): {', '.join(dup)}")
        sigma = Alphabet()
        for m in mods:
            sigma = sigma.union(m.alphabet)
        object.__setattr__(self, "alphabet", sigma)

    @classmethod
    def of(cls, *automata: Automaton) -> "ModularSystem":
        return cls(tuple(Module(a.name or f"m{i}", a) for i, a in enumerate(automata)))

    def __len__(self):
        return len(self.modules)

    def __iter__(self):
        return iter(self.modules)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.modules)

    def __getitem__(self, name: str) -> Module:
        for m in self.modules:
            if m.name == name:
                return m
        raise KeyError(name)

    def position(self, name: str) -> int:
        return self.names.index(name)

    @property
    def fault_modules(self) -> tuple[Module, ...]:
        return tuple(m for m in self.modules if m.faults)

    @cached_property
    def composition(self) -> Automaton:
        return compose_all([m.automaton for m in self.modules])
