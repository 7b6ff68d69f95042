"""Component-level and accelerator-level error compensation."""

from __future__ import annotations

import enum
import functools
import json
from dataclasses import dataclass

import numpy as np

from .learner import CompensationTree, Quantizer, predict
from .mularray import MultiplierNetlist, product_table
from .profiler import ErrorProfile, ErrorStats, TAIL_THRESHOLDS


class Mode(str, enum.Enum):
    UNCOMPENSATED = "uncompensated"
    PER_COMPONENT = "per_component"
    PER_ACCELERATOR = "per_accelerator"


@dataclass(frozen=True)
class AcceleratorConfig:
    mode: Mode = Mode.PER_COMPONENT
    lanes: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.lanes < 1:
            raise ValueError("lanes must be >= 1")


@dataclass(frozen=True)
class CompensatedMultiplier:
    netlist: MultiplierNetlist
    quantizer: Quantizer
    model: CompensationTree

    def __post_init__(self) -> None:
        if self.quantizer.width != self.netlist.width:
            raise ValueError(
                f"quantizer width {self.quantizer.width} does not match multiplier width {self.netlist.width}"
            )
        if self.quantizer.cluster_count != self.model.cluster_count:
            raise ValueError("quantizer and model disagree on the cluster count")

    @property
    def max_output(self) -> int:
        return (1 << (2 * self.netlist.width)) - 1

    def clamp(self, values):
        return np.clip(values, 0, self.max_output)


@functools.lru_cache(maxsize=16)
def compensation_table(cm: CompensatedMultiplier) -> np.ndarray:
    """Per-operand-pair compensation value, ``[a, b]``."""
    idx = cm.quantizer.quantize_array(np.arange(cm.quantizer.levels)) - 1
    table = cm.model.grid()[idx[:, None], idx[None, :]]
    table.setflags(write=False)
    return table


@functools.lru_cache(maxsize=16)
def compensated_table(cm: CompensatedMultiplier) -> np.ndarray:
    out = cm.clamp(product_table(cm.netlist) + compensation_table(cm))
    out.setflags(write=False)
    return out


def multiply_compensated(cm: CompensatedMultiplier, a: int, b: int) -> int:
    limit = cm.quantizer.levels
    if not (0 <= a < limit and 0 <= b < limit):
        raise ValueError(f"operands {(a, b)} out of range [0, {limit - 1}]")
    return int(compensated_table(cm)[a, b])


def characterize_compensated(cm: CompensatedMultiplier) -> ErrorProfile:
    values = np.arange(cm.quantizer.levels, dtype=np.int64)
    exact = values[:, None] * values[None, :]
    return ErrorProfile.from_ed(cm.netlist.width, exact - compensated_table(cm))


def _half_up_mean(values: np.ndarray) -> int:
    total, n = int(values.sum()), values.size
    return (2 * total + n) // (2 * n)


def accelerator_compensation(model: CompensationTree, q: Quantizer, a_values, b_values) -> int:
    """One compensation value shared by every lane of a batch.

    The operand means are rounded half-up, quantized and fed to the model.
    """
    a_values = np.asarray(a_values, dtype=np.int64).ravel()
    b_values = np.asarray(b_values, dtype=np.int64).ravel()
    if a_values.size == 0 or b_values.size == 0:
        raise ValueError("accelerator compensation needs at least one lane")
    if a_values.size != b_values.size:
        raise ValueError(f"lane count mismatch: {a_values.size} vs {b_values.size}")
    return predict(model, q.quantize(_half_up_mean(a_values)), q.quantize(_half_up_mean(b_values)))


def run_lanes(cm: CompensatedMultiplier, a_values, b_values, mode: Mode | str) -> np.ndarray:
    """Products for a batch of lanes under the given compensation mode."""
    mode = Mode(mode)
    a_values = np.asarray(a_values, dtype=np.int64)
    b_values = np.asarray(b_values, dtype=np.int64)
    if mode is Mode.UNCOMPENSATED:
        return product_table(cm.netlist)[a_values, b_values]
    if mode is Mode.PER_COMPONENT:
        return compensated_table(cm)[a_values, b_values]
    shared = accelerator_compensation(cm.model, cm.quantizer, a_values, b_values)
    return cm.clamp(product_table(cm.netlist)[a_values, b_values] + shared)


def comparison_report(before: ErrorStats, after: ErrorStats, meta: dict | None = None) -> dict:
    """Side-by-side statistics with and without compensation."""
    def column(s: ErrorStats) -> dict:
        row = {
            "max_abs_ed": s.max_abs_ed,
            "mean_abs_ed": round(s.mean_abs_ed, 3),
            "mean_abs_ed_all_pairs": round(s.mean_abs_ed_all_pairs, 3),
            "distinct_ed_count": s.distinct_ed_count,
            "error_free_count": s.exact_count,
            "erroneous_count": s.erroneous_count,
            "error_rate": round(s.error_rate, 6),
            "total_pairs": s.total_pairs,
        }
        for t in TAIL_THRESHOLDS:
            row[f"tail_gt_{t}"] = s.tail_counts[t]
        return row

    report = {"format": "axcomp-comparison", "version": 1, "without": column(before), "with": column(after)}
    if meta:
        report["config"] = meta
    return report


def format_comparison(report: dict) -> str:
    keys = list(report["without"])
    width = max(len(k) for k in keys)
    lines = [f"{'metric':<{width}}  {'without':>12}  {'with':>12}"]
    for k in keys:
        lines.append(f"{k:<{width}}  {report['without'][k]!s:>12}  {report['with'][k]!s:>12}")
    return "\n".join(lines) + "\n"


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True) + "\n"
