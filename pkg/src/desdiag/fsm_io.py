"""The ``.fsm`` text format and DOT export.

Grammar (one item per line, ``#`` lines are comments)::

    name: g1
    events:
      a u
      f u f
      c o
    states:
      0 init
      1 marked
    trans:
      0 a 1

Event flags: ``o`` observable, ``u`` unobservable (default), ``f`` fault.
State flags: ``init`` (exactly one), ``marked``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

from .automata import Alphabet, Automaton, Event
from .diagnosability import Verifier, find_indeterminate_cycles

__all__ = ["FsmSyntaxError", "parse_fsm", "load_fsm", "serialize_fsm", "to_dot"]

SECTIONS = ("events", "states", "trans")


class FsmSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1, source: str = "<string>"):
        super().__init__(f"{source}:{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column
        self.source = source


def _tokens(raw: str) -> list[tuple[str, int]]:
    """Whitespace-separated tokens with 1-based columns."""
    out = []
    col = 0
    for tok in raw.split():
        col = raw.index(tok, col)
        out.append((tok, col + 1))
        col += len(tok)
    return out


def parse_fsm(text: str, source: str = "<string>") -> Automaton:
    def fail(msg, line, col=1):
        raise FsmSyntaxError(msg, line, col, source)

    name = ""
    section = None
    seen_sections: set[str] = set()
    events: list[Event] = []
    event_line: dict[str, int] = {}
    states: list[str] = []
    state_line: dict[str, int] = {}
    inits: list[tuple[str, int]] = []
    marked: list[str] = []
    trans: list[tuple[str, str, str, int, list]] = []

    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indented = raw[:1].isspace()
        if not indented:
            head, colon, rest = stripped.partition(":")
            if not colon:
                fail(f"expected 'name:' or a section header, got {head!r}", lineno)
            head = head.strip()
            if head == "name":
                if not rest.strip() or len(rest.split()) != 1:
                    fail("name must be a single identifier", lineno, raw.index(":") + 2)
                name = rest.strip()
                section = None
            elif head in SECTIONS:
                if rest.strip():
                    fail(f"unexpected text after '{head}:'", lineno, raw.index(":") + 2)
                if head in seen_sections:
                    fail(f"duplicate section '{head}:'", lineno)
                seen_sections.add(head)
                section = head
            else:
                fail(f"unknown header {head!r}", lineno)
            continue

        toks = _tokens(raw)
        if section is None:
            fail("entry outside of a section", lineno, toks[0][1])
        ident, col = toks[0]
        flags = toks[1:]
        if section == "events":
            if ident in event_line:
                fail(f"duplicate event {ident!r} (first declared on line {event_line[ident]})",
                     lineno, col)
            names = [f for f, _ in flags]
            for f, fcol in flags:
                if f not in ("o", "u", "f"):
                    fail(f"unknown event flag {f!r}", lineno, fcol)
                if names.count(f) > 1:
                    fail(f"repeated flag {f!r}", lineno, fcol)
            if "o" in names and "u" in names:
                fail("flags 'o' and 'u' are mutually exclusive", lineno, flags[0][1])
            if "o" in names and "f" in names:
                fail("fault events must be unobservable", lineno,
                     next(c for f, c in flags if f == "f"))
            events.append(Event(ident, observable="o" in names, fault="f" in names))
            event_line[ident] = lineno
        elif section == "states":
            if ident in state_line:
                fail(f"duplicate state {ident!r} (first declared on line {state_line[ident]})",
                     lineno, col)
            for f, fcol in flags:
                if f not in ("init", "marked"):
                    fail(f"unknown state flag {f!r}", lineno, fcol)
                if [g for g, _ in flags].count(f) > 1:
                    fail(f"repeated flag {f!r}", lineno, fcol)
            states.append(ident)
            state_line[ident] = lineno
            if any(f == "init" for f, _ in flags):
                if inits:
                    fail(f"multiple init states: {inits[0][0]} (line {inits[0][1]}) and {ident}",
                         lineno, next(c for f, c in flags if f == "init"))
                inits.append((ident, lineno))
            if any(f == "marked" for f, _ in flags):
                marked.append(ident)
        else:
            if len(toks) != 3:
                fail(f"transition needs '<src> <event> <dst>', got {len(toks)} field(s)",
                     lineno, col)
            trans.append((toks[0][0], toks[1][0], toks[2][0], lineno, toks))

    if not states:
        fail("no states declared", max(1, len(text.splitlines())))
    if not inits:
        fail("no init state", state_line[states[0]])

    index = {s: i for i, s in enumerate(states)}
    seen: dict[tuple[str, str], str] = {}
    triples: list[tuple[str, str, str]] = []
    for src, ev, dst, lineno, toks in trans:
        for (tok, col), kind in zip(toks, ("state", "event", "state")):
            known = event_line if kind == "event" else index
            if tok not in known:
                fail(f"undeclared {kind} {tok!r}", lineno, col)
        prev = seen.get((src, ev))
        if prev is not None and prev != dst:
            fail(f"nondeterministic at ({src},{ev}): {prev} and {dst}", lineno, toks[2][1])
        if prev is not None:
            fail(f"duplicate transition {src} {ev} {dst}", lineno, toks[0][1])
        seen[(src, ev)] = dst
        triples.append((src, ev, dst))

    return Automaton(
        Alphabet(tuple(events)), tuple(states), index[inits[0][0]],
        frozenset(index[m] for m in marked),
        tuple((index[s], e, index[d]) for s, e, d in triples), name)


def load_fsm(path: str | Path) -> Automaton:
    path = Path(path)
    a = parse_fsm(path.read_text(encoding="utf-8"), str(path))
    return a if a.name else a.renamed(path.stem)


def serialize_fsm(a: Automaton) -> str:
    """Canonical text: transitions sorted by source state, then event order."""
    lines = []
    if a.name:
        lines.append(f"name: {a.name}")
    lines.append("events:")
    for ev in a.alphabet:
        lines.append(f"  {ev.name} {ev.flags}")
    lines.append("states:")
    for i, s in enumerate(a.states):
        flags = ([" init"] if i == a.initial else []) + ([" marked"] if i in a.marked else [])
        lines.append(f"  {s}{''.join(flags)}")
    lines.append("trans:")
    order = a.alphabet.order
    for src, ev, dst in sorted(a.transitions, key=lambda t: (t[0], order[t[1]], t[2])):
        lines.append(f"  {a.states[src]} {ev} {a.states[dst]}")
    return "\n".join(lines) + "\n"


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(obj: Automaton | Verifier, *, highlight: Iterable[str] = (),
           progress: Iterable[str] | None = None) -> str:
    """DOT digraph. The initial node is drawn bold; marked states double.

    For a verifier, states on indeterminate cycles are filled red.
    """
    if isinstance(obj, Verifier):
        return _verifier_dot(obj, set(highlight), progress)
    a = obj
    out = [f"digraph {_q(a.name or 'G')} {{", "  rankdir=LR;"]
    for i, s in enumerate(a.states):
        attrs = ["shape=doublecircle" if i in a.marked else "shape=circle"]
        if i == a.initial:
            attrs.append("style=bold")
        if s in highlight:
            attrs.append("color=red")
        out.append(f"  {_q(s)} [{', '.join(attrs)}];")
    order = a.alphabet.order
    for src, ev, dst in sorted(a.transitions, key=lambda t: (t[0], order[t[1]], t[2])):
        out.append(f"  {_q(a.states[src])} -> {_q(a.states[dst])} [label={_q(ev)}];")
    out.append("}")
    return "\n".join(out) + "\n"


def _verifier_dot(v: Verifier, highlight: set[str], progress) -> str:
    hot = set(highlight)
    for w in find_indeterminate_cycles(v, progress):
        hot.update(w.cycle_states)
    out = [f"digraph {_q('verifier ' + (v.fla.automaton.name or ''))} {{",
           "  node [shape=box];"]
    for i in range(len(v)):
        attrs = []
        if i == v.initial:
            attrs.append("style=bold")
        if v.name(i) in hot:
            attrs += ["color=red", "style=filled", "fillcolor=mistyrose"]
            if i == v.initial:
                attrs.remove("style=bold")
                attrs[attrs.index("style=filled")] = 'style="filled,bold"'
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        out.append(f"  {_q(v.name(i))}{suffix};")
    seen = set()
    for e in v.edges:
        key = (e.src, e.event, e.dst)
        if key in seen:
            continue
        seen.add(key)
        out.append(f"  {_q(v.name(e.src))} -> {_q(v.name(e.dst))} [label={_q(e.event)}];")
    out.append("}")
    return "\n".join(out) + "\n"
