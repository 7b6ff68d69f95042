"""Multiplicative image blending through the approximate accelerator."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .compensator import CompensatedMultiplier, Mode, accelerator_compensation, run_lanes

CHANNELS = ("red", "green", "blue")


class BlendMode(str, enum.Enum):
    EXACT = "exact"
    APPROX = "approx"
    COMP_COMPONENT = "comp-component"
    COMP_ACCELERATOR = "comp-accelerator"


_LANE_MODE = {
    BlendMode.APPROX: Mode.UNCOMPENSATED,
    BlendMode.COMP_COMPONENT: Mode.PER_COMPONENT,
    BlendMode.COMP_ACCELERATOR: Mode.PER_ACCELERATOR,
}


@dataclass(frozen=True)
class ImageChannel:
    width: int
    height: int
    data: np.ndarray  # (height, width) uint8

    def __post_init__(self) -> None:
        data = np.asarray(self.data)
        if data.shape != (self.height, self.width):
            raise ValueError(f"channel data shape {data.shape} != ({self.height}, {self.width})")
        object.__setattr__(self, "data", data.astype(np.uint8, copy=False))

    @classmethod
    def from_array(cls, arr) -> "ImageChannel":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ValueError("channel array must be 2-D")
        return cls(arr.shape[1], arr.shape[0], arr)


def _same_shape(x: ImageChannel, y: ImageChannel) -> None:
    if (x.width, x.height) != (y.width, y.height):
        raise ValueError(f"dimension mismatch: {x.width}x{x.height} vs {y.width}x{y.height}")


def normalize_product(product) -> np.ndarray:
    """16-bit product to 8-bit pixel: ``round_half_up(p / 255)`` clamped to [0, 255]."""
    p = np.asarray(product, dtype=np.int64)
    return np.clip((p + 127) // 255, 0, 255).astype(np.uint8)


def channel_products(ch_a: ImageChannel, ch_b: ImageChannel, mode: BlendMode | str,
                     engine: CompensatedMultiplier | None = None) -> np.ndarray:
    """Raw per-pixel products (before normalization) under ``mode``."""
    mode = BlendMode(mode)
    _same_shape(ch_a, ch_b)
    a = ch_a.data.astype(np.int64)
    b = ch_b.data.astype(np.int64)
    if mode is BlendMode.EXACT:
        product = a * b
    else:
        if engine is None:
            raise ValueError(f"mode {mode.value} needs a multiplier engine")
        # one frame per channel: per-accelerator mode shares one compensation value
        product = run_lanes(engine, a, b, _LANE_MODE[mode])
    return product


def blend_channel(ch_a: ImageChannel, ch_b: ImageChannel, mode: BlendMode | str,
                  engine: CompensatedMultiplier | None = None) -> ImageChannel:
    product = channel_products(ch_a, ch_b, mode, engine)
    return ImageChannel(ch_a.width, ch_a.height, normalize_product(product))


def psnr(reference, test, peak: float = 255.0) -> float:
    """PSNR in dB (8-bit peak by default); ``math.inf`` when the inputs are identical."""
    ref = reference.data if isinstance(reference, ImageChannel) else np.asarray(reference)
    tst = test.data if isinstance(test, ImageChannel) else np.asarray(test)
    if ref.shape != tst.shape:
        raise ValueError(f"dimension mismatch: {ref.shape} vs {tst.shape}")
    mse = np.mean((ref.astype(np.float64) - tst.astype(np.float64)) ** 2)
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak ** 2 / mse)


def split_channels(rgb: np.ndarray) -> list[ImageChannel]:
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) RGB array, got shape {rgb.shape}")
    return [ImageChannel.from_array(rgb[:, :, k]) for k in range(3)]


def merge_channels(channels: list[ImageChannel]) -> np.ndarray:
    return np.stack([c.data for c in channels], axis=2)


@dataclass
class BlendReport:
    width: int
    height: int
    # mode -> {"red": dB, "green": dB, "blue": dB, "rgb": dB}, all against the exact blend
    psnr: dict[str, dict[str, float]] = field(default_factory=dict)
    # per channel compensation shared by every pixel in comp-accelerator mode
    accelerator_compensation: dict[str, int] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    name: str = ""
    domain: str = "pixel"

    def gain(self, mode: BlendMode | str, baseline: BlendMode | str = BlendMode.APPROX) -> float:
        return self.psnr[BlendMode(mode).value]["rgb"] - self.psnr[BlendMode(baseline).value]["rgb"]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "width": self.width,
            "height": self.height,
            "psnr_domain": self.domain,
            "psnr_db": {m: {k: _fmt_db(v) for k, v in row.items()} for m, row in self.psnr.items()},
            "accelerator_compensation": self.accelerator_compensation,
            "config": self.config,
        }


def _fmt_db(value: float):
    return "infinite" if math.isinf(value) else round(value, 4)


def blend_images(rgb_a, rgb_b, engine: CompensatedMultiplier, modes=tuple(BlendMode),
                 config: dict | None = None, domain: str = "pixel") -> tuple[dict[str, np.ndarray], BlendReport]:
    """Blend every channel under each mode; PSNR is measured against the exact blend.

    ``domain="product"`` scores the raw 16-bit products (peak ``2**16 - 1``)
    instead of the normalized 8-bit pixels.
    """
    if domain not in ("pixel", "product"):
        raise ValueError(f"unknown PSNR domain {domain!r}")
    chans_a, chans_b = split_channels(rgb_a), split_channels(rgb_b)
    for x, y in zip(chans_a, chans_b):
        _same_shape(x, y)
    modes = [BlendMode(m) for m in modes]
    exact = [blend_channel(x, y, BlendMode.EXACT) for x, y in zip(chans_a, chans_b)]
    exact_rgb = merge_channels(exact)
    report = BlendReport(chans_a[0].width, chans_a[0].height, config=dict(config or {}), domain=domain)
    outputs: dict[str, np.ndarray] = {}
    for mode in modes:
        blended = exact if mode is BlendMode.EXACT else [
            blend_channel(x, y, mode, engine) for x, y in zip(chans_a, chans_b)
        ]
        outputs[mode.value] = merge_channels(blended)
        if domain == "pixel":
            row = {name: psnr(e, c) for name, e, c in zip(CHANNELS, exact, blended)}
            row["rgb"] = psnr(exact_rgb, outputs[mode.value])
        else:
            ref = [channel_products(x, y, BlendMode.EXACT) for x, y in zip(chans_a, chans_b)]
            got = [channel_products(x, y, mode, engine) for x, y in zip(chans_a, chans_b)]
            peak = float(engine.max_output)
            row = {name: psnr(r, g, peak) for name, r, g in zip(CHANNELS, ref, got)}
            row["rgb"] = psnr(np.stack(ref, axis=2), np.stack(got, axis=2), peak)
        report.psnr[mode.value] = row
    if BlendMode.COMP_ACCELERATOR in modes:
        report.accelerator_compensation = {
            name: accelerator_compensation(engine.model, engine.quantizer, x.data, y.data)
            for name, x, y in zip(CHANNELS, chans_a, chans_b)
        }
    return outputs, report


def reports_csv(reports: list[BlendReport], header: str = "") -> str:
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    writer = csv.writer(buf, lineterminator="\n")
    modes = [m.value for m in BlendMode]
    cols = ["name", "width", "height"] + [f"psnr_{m}_{c}" for m in modes for c in (*CHANNELS, "rgb")]
    writer.writerow(cols)
    for r in reports:
        row = [r.name, r.width, r.height]
        for m in modes:
            for c in (*CHANNELS, "rgb"):
                row.append(_fmt_db(r.psnr[m][c]) if m in r.psnr else "")
        writer.writerow(row)
    return buf.getvalue()


# --- image files and synthetic inputs ---------------------------------------

def read_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def write_image(path: str | Path, rgb: np.ndarray) -> None:
    """Write PNG or binary PPM (P6) depending on the suffix."""
    path = Path(path)
    fmt = {".png": "PNG", ".ppm": "PPM"}.get(path.suffix.lower())
    if fmt is None:
        raise ValueError(f"unsupported image suffix {path.suffix!r} (use .png or .ppm)")
    Image.fromarray(np.asarray(rgb, dtype=np.uint8), "RGB").save(path, format=fmt)


SYNTHETIC_KINDS = ("gradient", "smooth", "texture")


def _smooth_field(rng: np.random.Generator, height: int, width: int, cells: int) -> np.ndarray:
    coarse = rng.random((cells + 1, cells + 1))
    ys = np.linspace(0, cells, height)
    xs = np.linspace(0, cells, width)
    y0 = np.minimum(ys.astype(int), cells - 1)
    x0 = np.minimum(xs.astype(int), cells - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = coarse[y0][:, x0] * (1 - fx) + coarse[y0][:, x0 + 1] * fx
    bot = coarse[y0 + 1][:, x0] * (1 - fx) + coarse[y0 + 1][:, x0 + 1] * fx
    return top * (1 - fy) + bot * fy


def synthetic_image(kind: str, seed: int, height: int = 250, width: int = 400) -> np.ndarray:
    """Deterministic RGB test image.

    ``gradient``: per-channel linear ramps at random angles;
    ``smooth``: bilinear-upsampled random fields, a stand-in for photographs;
    ``texture``: smooth field plus Gaussian grain (sigma 12).
    """
    rng = np.random.default_rng(seed)
    out = np.empty((height, width, 3))
    yy, xx = np.mgrid[0:height, 0:width]
    for k in range(3):
        if kind == "gradient":
            theta = rng.uniform(0, 2 * np.pi)
            ramp = np.cos(theta) * xx / width + np.sin(theta) * yy / height
            ramp = (ramp - ramp.min()) / (np.ptp(ramp) or 1.0)
            out[:, :, k] = ramp * 255
        elif kind == "smooth":
            out[:, :, k] = _smooth_field(rng, height, width, cells=6) * 255
        elif kind == "texture":
            out[:, :, k] = _smooth_field(rng, height, width, cells=10) * 255 + rng.normal(0, 12, (height, width))
        else:
            raise ValueError(f"unknown synthetic kind {kind!r} (expected one of {SYNTHETIC_KINDS})")
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def synthetic_suite(seed: int = 2019, pairs: int = 6, height: int = 250, width: int = 400):
    """``pairs`` named (image_a, image_b) tuples cycling through the synthetic kinds."""
    suite = []
    for k in range(pairs):
        kind_a = SYNTHETIC_KINDS[k % len(SYNTHETIC_KINDS)]
        kind_b = SYNTHETIC_KINDS[(k + 1) % len(SYNTHETIC_KINDS)]
        a = synthetic_image(kind_a, seed + 2 * k, height, width)
        b = synthetic_image(kind_b, seed + 2 * k + 1, height, width)
        suite.append((f"pair{k}-{kind_a}-{kind_b}", a, b))
    return suite
