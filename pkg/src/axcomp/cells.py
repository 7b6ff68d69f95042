"""1-bit full-adder cells described as truth tables."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

Bits3 = tuple[int, int, int]
Bits2 = tuple[int, int]

INPUT_ROWS: tuple[Bits3, ...] = tuple(itertools.product((0, 1), repeat=3))


class CellKind(str, enum.Enum):
    EXACT = "exact"
    AMA5 = "ama5"

    @classmethod
    def parse(cls, name: str) -> "CellKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            known = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown cell kind {name!r} (expected one of: {known})") from None


@dataclass(frozen=True)
class AdderCellSpec:
    """A full-adder cell: ``(a, b, cin) -> (sum, cout)`` for all 8 input rows."""

    kind: CellKind
    table: Mapping[Bits3, Bits2]

    def __post_init__(self) -> None:
        if set(self.table) != set(INPUT_ROWS):
            raise ValueError(f"{self.kind.value}: truth table must define all 8 input rows")
        for row, out in self.table.items():
            if len(out) != 2 or any(bit not in (0, 1) for bit in out):
                raise ValueError(f"{self.kind.value}: bad output {out!r} for row {row}")
        object.__setattr__(self, "table", MappingProxyType(dict(self.table)))

    @property
    def sum_table(self) -> tuple[int, ...]:
        """Sum bits indexed by ``a << 2 | b << 1 | cin``."""
        return tuple(self.table[row][0] for row in INPUT_ROWS)

    @property
    def carry_table(self) -> tuple[int, ...]:
        return tuple(self.table[row][1] for row in INPUT_ROWS)


def _exact_row(a: int, b: int, cin: int) -> Bits2:
    total = a + b + cin
    return total & 1, total >> 1


EXACT = AdderCellSpec(CellKind.EXACT, {row: _exact_row(*row) for row in INPUT_ROWS})

# Approximate mirror adder 5: both outputs reduce to buffers, sum = b, cout = a.
AMA5 = AdderCellSpec(CellKind.AMA5, {(a, b, cin): (b, a) for a, b, cin in INPUT_ROWS})

_REGISTRY = {CellKind.EXACT: EXACT, CellKind.AMA5: AMA5}


def get_cell(kind: CellKind | str) -> AdderCellSpec:
    if isinstance(kind, str) and not isinstance(kind, CellKind):
        kind = CellKind.parse(kind)
    return _REGISTRY[kind]


def eval_cell(spec: AdderCellSpec, a: int, b: int, cin: int) -> Bits2:
    if a not in (0, 1) or b not in (0, 1) or cin not in (0, 1):
        raise ValueError(f"cell inputs must be bits, got {(a, b, cin)}")
    return spec.table[(a, b, cin)]


def cell_error_rows(spec: AdderCellSpec) -> list[Bits3]:
    """Input rows on which ``spec`` disagrees with the exact full adder."""
    return sorted(row for row in INPUT_ROWS if spec.table[row] != EXACT.table[row])
