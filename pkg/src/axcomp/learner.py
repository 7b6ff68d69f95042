"""Operand quantization, per-cluster compensation table and its decision tree.

The tree is a C4.5-style classifier over the two cluster indices: every
distinct compensation value is a class, tests are binary ``cluster <= t``
thresholds, and splits are ranked by gain ratio among candidates whose
information gain is at least the average.  Without a depth limit the tree
keeps splitting until each region is single-valued, so it reproduces the
lookup table exactly.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Union

import numpy as np

from .profiler import ErrorProfile

FEATURES = ("input1", "input2")


class ModelFormatError(ValueError):
    """Malformed model file; the message carries the offending position."""


@dataclass(frozen=True)
class Quantizer:
    cluster_count: int = 16
    width: int = 8

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if not 1 <= self.cluster_count <= (1 << self.width):
            raise ValueError(f"cluster_count must lie in [1, {1 << self.width}]")

    @property
    def levels(self) -> int:
        return 1 << self.width

    def quantize(self, value) -> int:
        return quantize(self, value)

    def quantize_array(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.int64)
        if values.size and (values.min() < 0 or values.max() >= self.levels):
            raise ValueError(f"values out of range [0, {self.levels - 1}]")
        return values * self.cluster_count // self.levels + 1

    def to_dict(self) -> dict:
        return {"cluster_count": self.cluster_count, "width": self.width}


def quantize(q: Quantizer, value: int) -> int:
    """Cluster index in ``[1, cluster_count]``: ``floor(value * clusters / 2**width) + 1``."""
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise TypeError("value must be an integer")
    if not 0 <= value < q.levels:
        raise ValueError(f"value {value} out of range [0, {q.levels - 1}]")
    return int(value) * q.cluster_count // q.levels + 1


# --- lookup table -----------------------------------------------------------

@dataclass(frozen=True)
class CompensationTable:
    """``values[i-1, j-1]`` is the compensation for cluster pair ``(i, j)``."""

    values: np.ndarray

    @property
    def cluster_count(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return int(self.values[i - 1, j - 1])

    def to_csv(self, header: str = "") -> str:
        n = self.cluster_count
        lines = [f"# {header}"] if header else []
        lines.append("cluster1\\cluster2," + ",".join(str(j) for j in range(1, n + 1)))
        for i in range(n):
            lines.append(f"{i + 1}," + ",".join(str(int(v)) for v in self.values[i]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "CompensationTable":
        rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        data = [[int(tok) for tok in ln.split(",")[1:]] for ln in rows[1:]]
        return cls(np.array(data, dtype=np.int64))


def build_table(profile: ErrorProfile, q: Quantizer) -> CompensationTable:
    """Rounded (half-up) mean signed ED of all operand pairs in each cluster cell."""
    if profile.width != q.width:
        raise ValueError(f"profile width {profile.width} does not match quantizer width {q.width}")
    n = q.cluster_count
    idx = q.quantize_array(np.arange(q.levels)) - 1
    sums = np.zeros((n, n), dtype=np.int64)
    np.add.at(sums, (idx[:, None], idx[None, :]), profile.ed)
    counts = np.bincount(idx, minlength=n)
    cell_counts = counts[:, None] * counts[None, :]
    values = np.floor_divide(2 * sums + cell_counts, 2 * cell_counts)
    values.setflags(write=False)
    return CompensationTable(values)


# --- tree -------------------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    value: int


@dataclass(frozen=True)
class Split:
    feature: int  # 0 -> input1 cluster, 1 -> input2 cluster
    threshold: int  # go left when cluster <= threshold
    left: "Node"
    right: "Node"


Node = Union[Leaf, Split]


@dataclass(frozen=True)
class CompensationTree:
    root: Node
    cluster_count: int = 16

    def depth(self) -> int:
        def rec(node: Node) -> int:
            return 0 if isinstance(node, Leaf) else 1 + max(rec(node.left), rec(node.right))
        return rec(self.root)

    def leaf_count(self) -> int:
        def rec(node: Node) -> int:
            return 1 if isinstance(node, Leaf) else rec(node.left) + rec(node.right)
        return rec(self.root)

    def grid(self) -> np.ndarray:
        """Predictions for every cluster pair, indexed ``[i-1, j-1]``."""
        n = self.cluster_count
        out = np.empty((n, n), dtype=np.int64)

        def fill(node: Node, lo: list[int], hi: list[int]) -> None:
            if isinstance(node, Leaf):
                out[lo[0] - 1:hi[0], lo[1] - 1:hi[1]] = node.value
                return
            f, t = node.feature, node.threshold
            left_hi, right_lo = list(hi), list(lo)
            left_hi[f] = min(hi[f], t)
            right_lo[f] = max(lo[f], t + 1)
            if lo[f] <= left_hi[f]:
                fill(node.left, lo, left_hi)
            if right_lo[f] <= hi[f]:
                fill(node.right, right_lo, hi)

        fill(self.root, [1, 1], [n, n])
        return out


def _entropy(counts) -> float:
    counts = sorted(counts)  # fixed summation order keeps ties reproducible
    total = sum(counts)
    return -sum(c / total * math.log2(c / total) for c in counts if c)


def _majority(labels) -> int:
    counts = Counter(labels)
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def _best_split(rows: list[tuple[int, int, int]]):
    labels = [r[2] for r in rows]
    base = _entropy(Counter(labels).values())
    n = len(rows)
    candidates = []
    for f in (0, 1):
        values = sorted({r[f] for r in rows})
        for t in values[:-1]:
            left = Counter(r[2] for r in rows if r[f] <= t)
            right = Counter(r[2] for r in rows if r[f] > t)
            nl, nr = sum(left.values()), sum(right.values())
            gain = base - (nl / n) * _entropy(left.values()) - (nr / n) * _entropy(right.values())
            split_info = _entropy((nl, nr))
            candidates.append((gain, gain / split_info, f, t))
    if not candidates:
        return None
    avg_gain = sum(c[0] for c in candidates) / len(candidates)
    eligible = [c for c in candidates if c[0] >= avg_gain - 1e-12]
    # highest gain ratio; ties to the smaller threshold, then to input1
    _, _, f, t = min(eligible, key=lambda c: (-round(c[1], 12), c[3], c[2]))
    return f, t


def fit_tree(rows, cluster_count: int, max_depth: int | None = None) -> CompensationTree:
    """Fit a tree to ``(cluster1, cluster2, value)`` rows."""
    rows = [(int(i), int(j), int(v)) for i, j, v in rows]

    def grow(region: list[tuple[int, int, int]], depth: int) -> Node:
        labels = {r[2] for r in region}
        if len(labels) == 1:
            return Leaf(labels.pop())
        if max_depth is not None and depth >= max_depth:
            return Leaf(_majority(r[2] for r in region))
        split = _best_split(region)
        if split is None:
            return Leaf(_majority(r[2] for r in region))
        f, t = split
        left = [r for r in region if r[f] <= t]
        right = [r for r in region if r[f] > t]
        return Split(f, t, grow(left, depth + 1), grow(right, depth + 1))

    if not rows:
        raise ValueError("cannot fit a tree to zero rows")
    return CompensationTree(grow(rows, 0), cluster_count)


def train_tree(table: CompensationTable, max_depth: int | None = None) -> CompensationTree:
    n = table.cluster_count
    rows = [(i, j, table.values[i - 1, j - 1]) for i in range(1, n + 1) for j in range(1, n + 1)]
    return fit_tree(rows, n, max_depth)


def predict(model: CompensationTree, cluster1: int, cluster2: int) -> int:
    for c in (cluster1, cluster2):
        if not 1 <= c <= model.cluster_count:
            raise ValueError(f"cluster index {c} out of range [1, {model.cluster_count}]")
    node = model.root
    clusters = (cluster1, cluster2)
    while isinstance(node, Split):
        node = node.left if clusters[node.feature] <= node.threshold else node.right
    return node.value


def dump_tree(model: CompensationTree) -> str:
    """Indented text rendering, one test or leaf per line."""
    lines: list[str] = []

    def rec(node: Node, indent: str) -> None:
        if isinstance(node, Leaf):
            lines.append(f"{indent}compensate {node.value}")
            return
        name = FEATURES[node.feature]
        lines.append(f"{indent}{name} <= {node.threshold}:")
        rec(node.left, indent + "|   ")
        lines.append(f"{indent}{name} > {node.threshold}:")
        rec(node.right, indent + "|   ")

    rec(model.root, "")
    return "\n".join(lines) + "\n"


# --- model file -------------------------------------------------------------

def _node_to_obj(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": node.value}
    return {
        "feature": FEATURES[node.feature],
        "threshold": node.threshold,
        "le": _node_to_obj(node.left),
        "gt": _node_to_obj(node.right),
    }


def export_model(model: CompensationTree, quantizer: Quantizer | None = None, meta: dict | None = None) -> str:
    doc = {
        "format": "axcomp-model",
        "version": 1,
        "cluster_count": model.cluster_count,
        "quantizer": (quantizer or Quantizer(model.cluster_count)).to_dict(),
        "tree": _node_to_obj(model.root),
    }
    if meta:
        doc["config"] = meta
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _obj_to_node(obj, path: str, n: int) -> Node:
    if not isinstance(obj, dict):
        raise ModelFormatError(f"{path}: expected an object")
    if "leaf" in obj:
        value = obj["leaf"]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ModelFormatError(f"{path}.leaf: expected an integer")
        return Leaf(value)
    try:
        feature = FEATURES.index(obj["feature"])
    except (KeyError, ValueError):
        raise ModelFormatError(f"{path}.feature: expected one of {FEATURES}") from None
    t = obj.get("threshold")
    if isinstance(t, bool) or not isinstance(t, int) or not 1 <= t < n:
        raise ModelFormatError(f"{path}.threshold: expected an integer in [1, {n - 1}]")
    for key in ("le", "gt"):
        if key not in obj:
            raise ModelFormatError(f"{path}: missing child '{key}'")
    return Split(feature, t, _obj_to_node(obj["le"], path + ".le", n), _obj_to_node(obj["gt"], path + ".gt", n))


def import_model(data: str | bytes) -> tuple[CompensationTree, Quantizer, dict]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or doc.get("format") != "axcomp-model":
        raise ModelFormatError("$: not an axcomp model document")
    try:
        q = Quantizer(**doc["quantizer"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"$.quantizer: {exc}") from None
    n = doc.get("cluster_count")
    if n != q.cluster_count:
        raise ModelFormatError("$.cluster_count: does not match quantizer")
    if "tree" not in doc:
        raise ModelFormatError("$: missing 'tree'")
    return CompensationTree(_obj_to_node(doc["tree"], "$.tree", n), n), q, doc.get("config", {})
