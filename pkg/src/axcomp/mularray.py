"""Bit-accurate unsigned array multiplier with approximate low columns.

Topology (row ``i`` adds partial-product row ``i`` into the running sum with a
ripple-carry adder)::

    row 0:  p(0,j) = a_j & b_0 seeds result columns 0..w-1
    row i:  column i      half adder   (acc_i, p(i,0))
            column i+j    full adder   (acc_{i+j}, p(i,j), carry), j = 1..w-1
            column i+w    <- carry out of the row

Row 1 has no accumulated bit in column w; its top full adder gets constant 0
on that input.  Full-adder inputs are wired ``a = accumulated bit``,
``b = partial product``, ``cin = ripple carry``.  A full adder is approximate
when its sum lands in a column below ``approx_columns``.  Half adders are
always exact.

``topology="carry_save"`` selects the Braun variant instead: carries move
diagonally into the next row and a final ripple-carry row merges the last
sum and carry vectors.  Result bits beyond ``2 * width`` are dropped.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .cells import CellKind, get_cell

HALF = "half"
CONST0 = 0
TOPOLOGIES = ("ripple", "carry_save")


@dataclass(frozen=True)
class MultiplierConfig:
    width: int = 8
    approx_columns: int = 9
    cell_kind: CellKind = CellKind.AMA5
    topology: str = "ripple"

    def __post_init__(self) -> None:
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r} (expected one of {TOPOLOGIES})")
        if isinstance(self.cell_kind, str) and not isinstance(self.cell_kind, CellKind):
            object.__setattr__(self, "cell_kind", CellKind.parse(self.cell_kind))
        if not isinstance(self.width, int) or self.width < 2:
            raise ValueError(f"width must be an integer >= 2, got {self.width!r}")
        if not 0 <= self.approx_columns <= 2 * self.width:
            raise ValueError(
                f"approx_columns must lie in [0, {2 * self.width}] for width {self.width}, "
                f"got {self.approx_columns}"
            )

    @property
    def result_bits(self) -> int:
        return 2 * self.width


DEFAULT_CONFIG = MultiplierConfig(width=8, approx_columns=9, cell_kind=CellKind.AMA5)
EXACT_CONFIG = MultiplierConfig(width=8, approx_columns=0, cell_kind=CellKind.EXACT)


@dataclass(frozen=True)
class AndGate:
    row: int
    column: int
    inputs: tuple[int, int]
    output: int


@dataclass(frozen=True)
class CellPlacement:
    row: int
    column: int
    kind: str  # "half", "exact" or "ama5"
    inputs: tuple[int, ...]  # (a, b) for half adders, (a, b, cin) otherwise
    outputs: tuple[int, int]  # (sum, cout)

    @property
    def approximate(self) -> bool:
        return self.kind not in (HALF, CellKind.EXACT.value)


@dataclass(frozen=True)
class MultiplierNetlist:
    config: MultiplierConfig
    a_wires: tuple[int, ...]
    b_wires: tuple[int, ...]
    and_gates: tuple[AndGate, ...]
    cells: tuple[CellPlacement, ...]
    result_wires: tuple[int, ...]
    wire_count: int

    @property
    def width(self) -> int:
        return self.config.width


def build_netlist(config: MultiplierConfig) -> MultiplierNetlist:
    w = config.width
    next_wire = 1  # wire 0 is constant zero

    def new_wire() -> int:
        nonlocal next_wire
        next_wire += 1
        return next_wire - 1

    a_wires = tuple(new_wire() for _ in range(w))
    b_wires = tuple(new_wire() for _ in range(w))

    gates: list[AndGate] = []
    pp: dict[tuple[int, int], int] = {}
    for i in range(w):
        for j in range(w):
            out = new_wire()
            gates.append(AndGate(i, i + j, (a_wires[j], b_wires[i]), out))
            pp[i, j] = out

    full_kind = lambda col: (  # noqa: E731
        config.cell_kind.value if col < config.approx_columns else CellKind.EXACT.value
    )

    cells: list[CellPlacement] = []

    def add(row: int, col: int, a_in: int | None, b_in: int | None, cin: int | None) -> tuple[int, int | None]:
        """Place the adder a column needs; returns (sum wire, carry wire or None)."""
        present = [x for x in (a_in, b_in, cin) if x is not None]
        if len(present) == 1:
            return present[0], None
        s, c = new_wire(), new_wire()
        if len(present) == 2:
            cells.append(CellPlacement(row, col, HALF, tuple(present), (s, c)))
        else:
            cells.append(CellPlacement(row, col, full_kind(col), (a_in, b_in, cin), (s, c)))
        return s, c

    acc: dict[int, int] = {j: pp[0, j] for j in range(w)}
    if config.topology == "ripple":
        for i in range(1, w):
            acc[i], carry = add(i, i, acc[i], pp[i, 0], None)
            for j in range(1, w):
                col = i + j
                acc[col], carry = add(i, col, acc.get(col, CONST0), pp[i, j], carry)
            acc[i + w] = carry
    else:
        sums = dict(acc)
        carries: dict[int, int] = {}
        for i in range(1, w):
            new_sums, new_carries = {}, {}
            for j in range(w):
                col = i + j
                new_sums[col], c = add(i, col, sums.get(col), pp[i, j], carries.get(col))
                if c is not None:
                    new_carries[col + 1] = c
            sums, carries = new_sums, new_carries
            acc[i] = sums[i]
        carry = None
        for col in range(w, 2 * w):
            acc[col], carry = add(w, col, sums.get(col), carries.get(col), carry)

    result = tuple(acc[c] for c in range(2 * w))
    return MultiplierNetlist(config, a_wires, b_wires, tuple(gates), tuple(cells), result, next_wire)


def _bit_planes(values: np.ndarray, width: int) -> list[np.ndarray]:
    return [((values >> k) & 1).astype(np.uint8) for k in range(width)]


def evaluate(netlist: MultiplierNetlist, a, b) -> np.ndarray:
    """Evaluate the netlist on broadcastable operand arrays; returns int64 products."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    limit = 1 << netlist.width
    for name, arr in (("a", a), ("b", b)):
        if arr.size and (arr.min() < 0 or arr.max() >= limit):
            raise ValueError(f"operand {name} out of range [0, {limit - 1}]")
    a, b = np.broadcast_arrays(a, b)
    shape = a.shape
    wires: list[np.ndarray | None] = [None] * netlist.wire_count
    wires[CONST0] = np.zeros(a.size, dtype=np.uint8)
    for wire, plane in zip(netlist.a_wires, _bit_planes(a.ravel(), netlist.width)):
        wires[wire] = plane
    for wire, plane in zip(netlist.b_wires, _bit_planes(b.ravel(), netlist.width)):
        wires[wire] = plane
    for g in netlist.and_gates:
        wires[g.output] = wires[g.inputs[0]] & wires[g.inputs[1]]

    luts = {
        kind.value: (np.array(get_cell(kind).sum_table, np.uint8), np.array(get_cell(kind).carry_table, np.uint8))
        for kind in CellKind
    }
    for cell in netlist.cells:
        if cell.kind == HALF:
            x, y = (wires[k] for k in cell.inputs)
            s, c = x ^ y, x & y
        else:
            x, y, z = (wires[k] for k in cell.inputs)
            idx = (x << 2) | (y << 1) | z
            sum_lut, carry_lut = luts[cell.kind]
            s, c = sum_lut[idx], carry_lut[idx]
        wires[cell.outputs[0]], wires[cell.outputs[1]] = s, c

    product = np.zeros(a.size, dtype=np.int64)
    for k, wire in enumerate(netlist.result_wires):
        product |= wires[wire].astype(np.int64) << k
    return product.reshape(shape)


@functools.lru_cache(maxsize=16)
def product_table(netlist: MultiplierNetlist) -> np.ndarray:
    """All products as a read-only ``(2**w, 2**w)`` table indexed ``[a, b]``."""
    n = 1 << netlist.width
    if netlist.width > 8:
        raise ValueError("product table limited to width <= 8")
    values = np.arange(n, dtype=np.int64)
    table = evaluate(netlist, values[:, None], values[None, :])
    table.setflags(write=False)
    return table


def _check_operand(value: int, width: int, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise TypeError(f"operand {name} must be an integer")
    if not 0 <= value < (1 << width):
        raise ValueError(f"operand {name}={value} out of range [0, {(1 << width) - 1}]")
    return int(value)


def multiply(netlist: MultiplierNetlist, a: int, b: int) -> int:
    a = _check_operand(a, netlist.width, "a")
    b = _check_operand(b, netlist.width, "b")
    return int(evaluate(netlist, a, b))


def error_distance(netlist: MultiplierNetlist, a: int, b: int) -> int:
    """Signed error distance: exact product minus approximate product."""
    return a * b - multiply(netlist, a, b)


def cell_census(netlist: MultiplierNetlist) -> dict[str, int]:
    approx = sum(1 for c in netlist.cells if c.approximate)
    half = sum(1 for c in netlist.cells if c.kind == HALF)
    return {
        "exact_cell_count": len(netlist.cells) - approx - half,
        "approx_cell_count": approx,
        "half_adder_count": half,
        "and_gate_count": len(netlist.and_gates),
    }


def dump_netlist(netlist: MultiplierNetlist) -> str:
    """Line-oriented text dump: one gate or cell placement per line."""
    cfg = netlist.config
    lines = [
        "# axcomp-netlist v1: and <row> <col> <in_a> <in_b> -> <out> | "
        "cell <row> <col> <kind> <inputs...> -> <sum> <cout> | result <wires...>",
        f"config width={cfg.width} approx_columns={cfg.approx_columns} cell={cfg.cell_kind.value}",
        f"wires {netlist.wire_count}",
        "a " + " ".join(map(str, netlist.a_wires)),
        "b " + " ".join(map(str, netlist.b_wires)),
    ]
    for g in netlist.and_gates:
        lines.append(f"and {g.row} {g.column} {g.inputs[0]} {g.inputs[1]} -> {g.output}")
    for c in netlist.cells:
        ins = " ".join(map(str, c.inputs))
        lines.append(f"cell {c.row} {c.column} {c.kind} {ins} -> {c.outputs[0]} {c.outputs[1]}")
    lines.append("result " + " ".join(map(str, netlist.result_wires)))
    return "\n".join(lines) + "\n"


def approximate_columns_of(netlist: MultiplierNetlist) -> Iterable[int]:
    return sorted({c.column for c in netlist.cells if c.approximate})
