"""Exhaustive error-distance characterization of a multiplier."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .mularray import MultiplierNetlist, product_table

TAIL_THRESHOLDS = (300, 400, 500)
MAX_EXHAUSTIVE_INPUT_BITS = 16


class ProfileFormatError(ValueError):
    """Raised when a persisted profile cannot be parsed."""


@dataclass(frozen=True)
class ErrorStats:
    total_pairs: int
    erroneous_count: int
    error_rate: float
    min_nonzero_abs_ed: int
    max_abs_ed: int
    mean_abs_ed: float  # over erroneous pairs only
    mean_abs_ed_all_pairs: float
    distinct_ed_count: int  # distinct nonzero |ED| values
    distinct_signed_ed_count: int
    negative_count: int
    tail_counts: dict[int, int] = field(default_factory=dict)

    @property
    def exact_count(self) -> int:
        return self.total_pairs - self.erroneous_count

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tail_counts"] = {str(k): v for k, v in self.tail_counts.items()}
        d["exact_count"] = self.exact_count
        return d


def compute_stats(ed: np.ndarray) -> ErrorStats:
    ed = np.asarray(ed, dtype=np.int64).ravel()
    mag = np.abs(ed)
    err = mag[mag != 0]
    total = int(ed.size)
    n_err = int(err.size)
    return ErrorStats(
        total_pairs=total,
        erroneous_count=n_err,
        error_rate=n_err / total if total else 0.0,
        min_nonzero_abs_ed=int(err.min()) if n_err else 0,
        max_abs_ed=int(err.max()) if n_err else 0,
        mean_abs_ed=float(err.mean()) if n_err else 0.0,
        mean_abs_ed_all_pairs=float(mag.mean()) if total else 0.0,
        distinct_ed_count=int(np.unique(err).size),
        distinct_signed_ed_count=int(np.unique(ed[ed != 0]).size),
        negative_count=int((ed < 0).sum()),
        tail_counts={t: int((mag > t).sum()) for t in TAIL_THRESHOLDS},
    )


@dataclass(frozen=True)
class ErrorProfile:
    """Signed ED (exact - approximate) for every operand pair, ``ed[a, b]``."""

    width: int
    ed: np.ndarray
    stats: ErrorStats

    @classmethod
    def from_ed(cls, width: int, ed: np.ndarray) -> "ErrorProfile":
        n = 1 << width
        ed = np.array(ed, dtype=np.int64).reshape(n, n)
        ed.setflags(write=False)
        return cls(width, ed, compute_stats(ed))


def characterize(netlist: MultiplierNetlist) -> ErrorProfile:
    w = netlist.width
    if 2 * w > MAX_EXHAUSTIVE_INPUT_BITS:
        raise ValueError(f"width {w} is too large for an exhaustive sweep (max {MAX_EXHAUSTIVE_INPUT_BITS // 2})")
    values = np.arange(1 << w, dtype=np.int64)
    exact = values[:, None] * values[None, :]
    return ErrorProfile.from_ed(w, exact - product_table(netlist))


def tail_count(profile: ErrorProfile, threshold: int) -> int:
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return int((np.abs(profile.ed) > threshold).sum())


def histogram(profile: ErrorProfile, bucket_width: int) -> list[tuple[str, int]]:
    """Bucketed |ED| counts; zero-ED pairs go to a separate leading ``exact`` bin.

    Buckets are ``(lo, hi]`` ranges of width ``bucket_width`` starting at 0 and
    extending up to the largest |ED|.
    """
    if bucket_width < 1:
        raise ValueError("bucket_width must be >= 1")
    mag = np.abs(profile.ed).ravel()
    out = [("exact", int((mag == 0).sum()))]
    err = mag[mag != 0]
    if err.size:
        n_buckets = -(-int(err.max()) // bucket_width)
        counts = np.bincount((err - 1) // bucket_width, minlength=n_buckets)
        for k, count in enumerate(counts):
            out.append((f"{k * bucket_width + 1}-{(k + 1) * bucket_width}", int(count)))
    return out


def histogram_csv(profile: ErrorProfile, bucket_width: int, header: str = "") -> str:
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bucket", "count"])
    writer.writerows(histogram(profile, bucket_width))
    return buf.getvalue()


# persistence: "# <json header>" line, "a,b,ed" column line, then one row per pair

def dumps_profile(profile: ErrorProfile, meta: dict | None = None) -> str:
    header = {"format": "axcomp-profile", "version": 1, "width": profile.width}
    if meta:
        header["config"] = meta
    n = 1 << profile.width
    a, b = np.divmod(np.arange(n * n), n)
    rows = "\n".join(f"{x},{y},{e}" for x, y, e in zip(a.tolist(), b.tolist(), profile.ed.ravel().tolist()))
    return f"# {json.dumps(header, sort_keys=True)}\na,b,ed\n{rows}\n"


def loads_profile(text: str) -> tuple[ErrorProfile, dict]:
    lines = text.splitlines()
    if len(lines) < 2 or not lines[0].startswith("# "):
        raise ProfileFormatError("line 1: missing profile header")
    try:
        header = json.loads(lines[0][2:])
    except json.JSONDecodeError as exc:
        raise ProfileFormatError(f"line 1: bad header json ({exc.msg} at column {exc.colno + 2})") from None
    if header.get("format") != "axcomp-profile":
        raise ProfileFormatError("line 1: not an axcomp profile")
    width = header.get("width")
    if not isinstance(width, int) or not 1 <= width <= MAX_EXHAUSTIVE_INPUT_BITS // 2:
        raise ProfileFormatError(f"line 1: bad width {width!r}")
    if lines[1].strip() != "a,b,ed":
        raise ProfileFormatError("line 2: expected column header 'a,b,ed'")
    n = 1 << width
    body = lines[2:]
    if len(body) != n * n:
        raise ProfileFormatError(f"line {len(lines) + 1}: expected {n * n} rows, found {len(body)}")
    ed = np.empty(n * n, dtype=np.int64)
    for k, line in enumerate(body):
        try:
            a, b, e = (int(tok) for tok in line.split(","))
        except ValueError:
            raise ProfileFormatError(f"line {k + 3}: malformed row {line!r}") from None
        if (a, b) != divmod(k, n):
            raise ProfileFormatError(f"line {k + 3}: expected pair {divmod(k, n)}, got {(a, b)}")
        ed[k] = e
    return ErrorProfile.from_ed(width, ed), header.get("config", {})
