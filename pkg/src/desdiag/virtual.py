"""Choosing virtual modules: partitions of the module set under which the
system becomes modularly diagnosable."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterator

from .automata import ModularSystem, Module, compose_all
from .diagnosability import (
    Verdict, _labeled, _pmap, _verdict, Scope, all_diagnosable, check_virtual,
)
from .partition import Partition, PartitionCheck, canonical, validate_partition
from .structural import StructuralReport, analyze_pair

__all__ = [
    "Partition", "PartitionCheck", "SynthesisResult", "validate_partition",
    "rank_candidates", "synthesize_greedy", "synthesize_exhaustive",
    "set_partitions", "merged_alphabet_size",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthesisResult:
    partition: Partition
    verdicts: tuple[Verdict, ...]
    strategy: str
    candidates_examined: int
    reports: tuple[StructuralReport, ...] = ()
    notes: tuple[str, ...] = ()

    @property
    def success(self) -> bool:
        return all_diagnosable(self.verdicts)

    def to_json(self) -> dict:
        return {
            "success": self.success,
            "strategy": self.strategy,
            "partition": self.partition.to_json(),
            "candidates_examined": self.candidates_examined,
            "notes": list(self.notes),
        }


class _Checker:
    """Per-module virtual verdicts, memoized on the observation mask."""

    def __init__(self, sys: ModularSystem):
        self.sys = sys
        self.cache: dict[tuple[str, tuple[str, ...]], Verdict] = {}

    def verdict(self, p: Partition, name: str) -> Verdict:
        sys = self.sys
        block = p.block_of(name)
        obs = set().union(*(sys[n].observable for n in block))
        mask = tuple(sys.alphabet.sorted(obs))
        key = (name, mask)
        hit = self.cache.get(key)
        if hit is None:
            scope = Scope("virtual", name, block, mask)
            hit = _verdict(_labeled(sys, name), mask, scope, sys[name].alphabet.names)
            self.cache[key] = hit
        if hit.scope.block != block:
            hit = Verdict(hit.diagnosable, Scope("virtual", name, block, mask), hit.witness,
                          hit.cycles, hit.warnings, hit.verifier_states)
        return hit

    def passes(self, p: Partition) -> bool:
        return all(self.verdict(p, m.name).diagnosable for m in self.sys.fault_modules)


def _block_module(sys: ModularSystem, block: tuple[str, ...]) -> Module:
    if len(block) == 1:
        return sys[block[0]]
    return Module("+".join(block), compose_all([sys[n].automaton for n in block]))


def rank_candidates(sys: ModularSystem, faulty: str, *, block: tuple[str, ...] | None = None,
                    strict: bool = False) -> list[tuple[tuple[str, ...], StructuralReport]]:
    """Modules outside ``block`` ranked as partners for ``faulty``.

    ``block`` is the faulty module's current virtual module (default: just
    the module); its composition plays the faulty side. Order: recommended
    first, then fewer shared events, then system order.
    """
    block = (faulty,) if block is None else tuple(block)
    side = _block_module(sys, block)
    faults = sys[faulty].faults
    pos = {n: i for i, n in enumerate(sys.names)}
    ranked = []
    for m in sys.modules:
        if m.name in block:
            continue
        rep = analyze_pair(side, m, faults=faults if len(block) > 1 else None, strict=strict)
        cand = tuple(sorted(block + (m.name,), key=pos.__getitem__))
        ranked.append((cand, rep))
    ranked.sort(key=lambda cr: (not cr[1].recommended, len(cr[1].common_events),
                                pos[cr[1].candidate]))
    return ranked


def synthesize_greedy(sys: ModularSystem, *, strict: bool = False,
                      workers: int = 1) -> SynthesisResult:
    """Grow the blocks of failing fault modules one partner at a time.

    Candidates are tried in ranking order; the first merge that makes the
    module diagnosable is kept. If none does, the best-ranked merge is kept
    anyway and the search continues from the larger block.
    """
    checker = _Checker(sys)
    p = Partition.discrete(sys)
    examined = 0
    reports: list[StructuralReport] = []
    notes: list[str] = []
    faulty_names = {m.name for m in sys.fault_modules}
    for m in sys.fault_modules:
        while not checker.verdict(p, m.name).diagnosable:
            block = p.block_of(m.name)
            if len(block) == len(sys):
                break
            ranked = rank_candidates(sys, m.name, block=block, strict=strict)
            reports.extend(rep for _, rep in ranked)
            trials = [p.merged(m.name, rep.candidate, sys) for _, rep in ranked]
            ok = _pmap(lambda t: checker.verdict(t, m.name).diagnosable, trials, workers)
            chosen = next((i for i, good in enumerate(ok) if good), None)
            examined += len(trials) if chosen is None else chosen + 1
            nxt = trials[0] if chosen is None else trials[chosen]
            partner = ranked[0 if chosen is None else chosen][1].candidate
            absorbed = [n for n in nxt.block_of(m.name)
                        if n in faulty_names and n not in block]
            if absorbed:
                notes.append(f"merge for {m.name} absorbs the block of fault module(s) "
                             + ", ".join(absorbed))
            log.debug("greedy: %s grows %s -> %s", m.name, block, nxt.block_of(m.name))
            if chosen is None:
                notes.append(f"{m.name}: no single merge sufficed, grew with {partner}")
            p = nxt
    verdicts = tuple(check_virtual(sys, p, workers=workers))
    return SynthesisResult(p, verdicts, "greedy", examined, tuple(reports), tuple(notes))


def set_partitions(names: tuple[str, ...]) -> Iterator[Partition]:
    """All set partitions, via restricted growth strings."""
    n = len(names)
    if n == 0:
        return
    codes = [0] * n

    def rec(i, top):
        if i == n:
            blocks: list[list[str]] = [[] for _ in range(top + 1)]
            for name, c in zip(names, codes):
                blocks[c].append(name)
            yield Partition(tuple(tuple(b) for b in blocks))
            return
        for c in range(top + 2):
            codes[i] = c
            yield from rec(i + 1, max(top, c))

    codes[0] = 0
    yield from rec(1, 0)


def merged_alphabet_size(sys: ModularSystem, p: Partition) -> int:
    """Total alphabet size of the non-singleton blocks."""
    total = 0
    for b in p.blocks:
        if len(b) > 1:
            total += len(set().union(*(set(sys[n].alphabet.names) for n in b)))
    return total


def _default_key(sys: ModularSystem) -> Callable[[Partition], tuple]:
    pos = {n: i for i, n in enumerate(sys.names)}

    def key(p: Partition):
        return (p.merges, merged_alphabet_size(sys, p),
                tuple(tuple(pos[n] for n in b) for b in p.blocks))
    return key


def synthesize_exhaustive(sys: ModularSystem, max_modules: int = 8, *,
                          key: Callable[[Partition], tuple] | None = None,
                          workers: int = 1) -> SynthesisResult:
    """First passing partition in order of fewest merges, then ``key``."""
    if len(sys) > max_modules:
        raise ValueError(f"{len(sys)} modules exceeds max_modules={max_modules}")
    checker = _Checker(sys)
    key = key or _default_key(sys)
    candidates = sorted((canonical(p, sys) for p in set_partitions(sys.names)),
                        key=lambda p: (p.merges, key(p)))
    examined = 0
    for p in candidates:
        examined += 1
        if checker.passes(p):
            chosen = p
            break
    else:
        chosen = Partition.coarsest(sys)
    verdicts = tuple(check_virtual(sys, chosen, workers=workers))
    return SynthesisResult(chosen, verdicts, "exhaustive", examined)
