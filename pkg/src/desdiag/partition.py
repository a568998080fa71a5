"""Partitions of a modular system's modules into virtual modules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .automata import ModularSystem

__all__ = ["Partition", "PartitionCheck", "PartitionError", "validate_partition"]


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    blocks: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(tuple(b) for b in self.blocks))

    @classmethod
    def parse(cls, text: str) -> "Partition":
        """``"a,b|c"`` -> ``{{a, b}, {c}}``."""
        blocks = []
        for chunk in text.split("|"):
            names = [n.strip() for n in chunk.split(",") if n.strip()]
            blocks.append(tuple(names))
        return cls(tuple(blocks))

    @classmethod
    def discrete(cls, sys: ModularSystem) -> "Partition":
        return cls(tuple((n,) for n in sys.names))

    @classmethod
    def coarsest(cls, sys: ModularSystem) -> "Partition":
        return cls((sys.names,))

    def block_of(self, name: str) -> tuple[str, ...]:
        for b in self.blocks:
            if name in b:
                return b
        raise KeyError(name)

    @property
    def merges(self) -> int:
        return sum(len(b) - 1 for b in self.blocks)

    def merged(self, a: str, b: str, sys: ModularSystem) -> "Partition":
        """Union the blocks containing ``a`` and ``b``."""
        ba, bb = self.block_of(a), self.block_of(b)
        if ba == bb:
            return self
        rest = [blk for blk in self.blocks if blk not in (ba, bb)]
        return canonical(Partition(tuple(rest) + (ba + bb,)), sys)

    def __str__(self):
        return "|".join(",".join(b) for b in self.blocks)

    def to_json(self) -> list[list[str]]:
        return [list(b) for b in self.blocks]


@dataclass(frozen=True)
class PartitionCheck:
    ok: bool
    violations: tuple[str, ...]
    partition: Partition | None

    def __bool__(self):
        return self.ok


def canonical(p: Partition, sys: ModularSystem) -> Partition:
    pos = {n: i for i, n in enumerate(sys.names)}
    blocks = [tuple(sorted(b, key=pos.__getitem__)) for b in p.blocks]
    blocks.sort(key=lambda b: pos[b[0]])
    return Partition(tuple(blocks))


def validate_partition(p: Partition | Sequence[Iterable[str]],
                       sys: ModularSystem) -> PartitionCheck:
    if not isinstance(p, Partition):
        p = Partition(tuple(tuple(b) for b in p))
    violations = []
    names = set(sys.names)
    owner: dict[str, int] = {}
    for i, block in enumerate(p.blocks):
        if not block:
            violations.append(f"block {i} is empty")
        for n in block:
            if n not in names:
                violations.append(f"unknown module {n}")
            elif n in owner:
                if owner[n] == i:
                    violations.append(f"{n} repeated in one block")
                else:
                    violations.append(f"{n} in two blocks")
            else:
                owner[n] = i
    for n in sys.names:
        if n not in owner:
            violations.append(f"{n} uncovered")
    if violations:
        return PartitionCheck(False, tuple(dict.fromkeys(violations)), None)
    return PartitionCheck(True, (), canonical(p, sys))
