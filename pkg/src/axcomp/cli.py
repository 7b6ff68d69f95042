"""Command line front end: characterize -> train -> evaluate -> blend.

Each stage reads the files written by the previous one.  Every artifact
embeds the run configuration that produced it.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import compensator, imaging, learner, mularray, profiler
from .cells import CellKind

log = logging.getLogger("axcomp")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_FORMAT = 4


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    cell: str = "ama5"
    width: int = 8
    approx_columns: int = 9
    topology: str = "ripple"
    clusters: int = 16
    mode: str = "all"
    seed: int = 2019

    def validate(self) -> "RunConfig":
        try:
            self.multiplier_config()
            learner.Quantizer(self.clusters, self.width)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.mode != "all":
            try:
                imaging.BlendMode(self.mode)
            except ValueError:
                raise ConfigError(f"unknown mode {self.mode!r}") from None
        return self

    def multiplier_config(self) -> mularray.MultiplierConfig:
        return mularray.MultiplierConfig(self.width, self.approx_columns, CellKind.parse(self.cell), self.topology)

    def to_dict(self) -> dict:
        return asdict(self)


def atomic_write(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode("utf-8") if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path: Path, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {what} {path}: {exc.strerror or exc}") from None


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        cell=args.cell, width=args.width, approx_columns=args.approx_columns, topology=args.topology,
        clusters=args.clusters, mode=getattr(args, "mode", "all"), seed=getattr(args, "seed", 2019),
    ).validate()


def _load_profile(path: Path) -> tuple[profiler.ErrorProfile, RunConfig]:
    profile, meta = profiler.loads_profile(_read_text(path, "profile"))
    try:
        cfg = RunConfig(**meta).validate() if meta else RunConfig(width=profile.width)
    except TypeError as exc:
        raise profiler.ProfileFormatError(f"line 1: bad embedded config ({exc})") from None
    if cfg.width != profile.width:
        raise profiler.ProfileFormatError("line 1: embedded config width disagrees with profile width")
    return profile, cfg


# --- commands ---------------------------------------------------------------

def cmd_characterize(args) -> int:
    cfg = _config_from_args(args)
    netlist = mularray.build_netlist(cfg.multiplier_config())
    profile = profiler.characterize(netlist)
    out = Path(args.out)
    summary = {
        "format": "axcomp-stats", "version": 1, "config": cfg.to_dict(),
        "stats": profile.stats.to_dict(), "census": mularray.cell_census(netlist),
    }
    header = json.dumps({"config": cfg.to_dict()}, sort_keys=True)
    atomic_write(out / "profile.csv", profiler.dumps_profile(profile, cfg.to_dict()))
    atomic_write(out / "stats.json", _json(summary))
    atomic_write(out / "histogram.csv", profiler.histogram_csv(profile, args.bucket_width, header))
    atomic_write(out / "netlist.txt", mularray.dump_netlist(netlist))
    s = profile.stats
    print(f"error rate {100 * s.error_rate:.2f}% ({s.erroneous_count}/{s.total_pairs} erroneous)")
    print(f"|ED| min {s.min_nonzero_abs_ed}  max {s.max_abs_ed}  mean {s.mean_abs_ed:.2f}  "
          f"distinct {s.distinct_ed_count}")
    print("tails " + "  ".join(f">{t}: {c}" for t, c in s.tail_counts.items()))
    return EXIT_OK


def cmd_train(args) -> int:
    profile, cfg = _load_profile(Path(args.profile))
    if args.clusters is not None:
        cfg = RunConfig(**{**cfg.to_dict(), "clusters": args.clusters}).validate()
    q = learner.Quantizer(cfg.clusters, cfg.width)
    table = learner.build_table(profile, q)
    tree = learner.train_tree(table, max_depth=args.max_depth)
    out = Path(args.out)
    header = json.dumps({"config": cfg.to_dict()}, sort_keys=True)
    atomic_write(out / "model.json", learner.export_model(tree, q, cfg.to_dict()))
    atomic_write(out / "table.csv", table.to_csv(header))
    atomic_write(out / "tree.txt", f"# {header}\n" + learner.dump_tree(tree))
    print(f"tree: depth {tree.depth()}, {tree.leaf_count()} leaves; "
          f"matches table on {int((tree.grid() == table.values).sum())}/{table.values.size} cells")
    return EXIT_OK


def _engine(cfg: RunConfig, model_path: Path) -> tuple[compensator.CompensatedMultiplier, dict]:
    tree, q, model_meta = learner.import_model(_read_text(model_path, "model"))
    if q.width != cfg.width:
        raise ConfigError(f"model width {q.width} does not match multiplier width {cfg.width}")
    netlist = mularray.build_netlist(cfg.multiplier_config())
    return compensator.CompensatedMultiplier(netlist, q, tree), model_meta


def cmd_evaluate(args) -> int:
    profile, cfg = _load_profile(Path(args.profile))
    cm, _ = _engine(cfg, Path(args.model))
    rebuilt = profiler.characterize(cm.netlist)
    if not np.array_equal(rebuilt.ed, profile.ed):
        raise profiler.ProfileFormatError("profile contents do not match its embedded multiplier config")
    after = compensator.characterize_compensated(cm)
    report = compensator.comparison_report(profile.stats, after.stats, cfg.to_dict())
    atomic_write(Path(args.out) / "comparison.json", compensator.dumps_report(report))
    print(compensator.format_comparison(report), end="")
    return EXIT_OK


def cmd_blend(args) -> int:
    model_path = Path(args.model)
    tree, q, meta = learner.import_model(_read_text(model_path, "model"))
    base = RunConfig(**meta) if meta else RunConfig(width=q.width, clusters=q.cluster_count)
    cfg = RunConfig(**{**base.to_dict(), "mode": args.mode, "seed": args.seed}).validate()
    cm, _ = _engine(cfg, model_path)
    if cfg.mode == "all":
        modes = list(imaging.BlendMode)
    else:
        modes = list(dict.fromkeys([imaging.BlendMode.EXACT, imaging.BlendMode(cfg.mode)]))

    if args.synthetic:
        pairs = imaging.synthetic_suite(cfg.seed, args.pairs)
    else:
        if not (args.image_a and args.image_b):
            raise ConfigError("give --image-a and --image-b, or --synthetic")
        try:
            a, b = imaging.read_image(args.image_a), imaging.read_image(args.image_b)
        except OSError as exc:
            raise OSError(f"cannot read image: {exc}") from None
        if a.shape != b.shape:
            raise ConfigError(f"image dimension mismatch: {a.shape[1]}x{a.shape[0]} vs {b.shape[1]}x{b.shape[0]}")
        pairs = [(Path(args.image_a).stem + "+" + Path(args.image_b).stem, a, b)]

    out = Path(args.out)
    reports = []
    for name, a, b in pairs:
        start = time.perf_counter()
        outputs, report = imaging.blend_images(a, b, cm, modes, cfg.to_dict(), domain=args.psnr_domain)
        log.info("%s blended in %.3f s", name, time.perf_counter() - start)
        report.name = name
        reports.append(report)
        for mode, rgb in outputs.items():
            target = out / f"{name}.{mode}.{args.image_format}"
            target.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=out, suffix=f".{args.image_format}")
            os.close(fd)
            try:
                imaging.write_image(tmp, rgb)
                os.replace(tmp, target)
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)
        row = "  ".join(f"{m}: {imaging._fmt_db(v['rgb'])}" for m, v in report.psnr.items())
        print(f"{name}: {row}")
    header = json.dumps({"config": cfg.to_dict()}, sort_keys=True)
    doc = {"format": "axcomp-blend", "version": 1, "config": cfg.to_dict(), "reports": [r.to_dict() for r in reports]}
    atomic_write(out / "blend_report.json", _json(doc))
    atomic_write(out / "blend_report.csv", imaging.reports_csv(reports, header))
    return EXIT_OK


def cmd_netlist(args) -> int:
    cfg = _config_from_args(args)
    netlist = mularray.build_netlist(cfg.multiplier_config())
    text = mularray.dump_netlist(netlist)
    census = mularray.cell_census(netlist)
    if args.out:
        atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    print("census " + " ".join(f"{k}={v}" for k, v in census.items()), file=sys.stderr)
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def _multiplier_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cell", default="ama5", help="approximate cell kind: exact or ama5 (default ama5)")
    p.add_argument("--width", type=int, default=8, help="operand width in bits (default 8)")
    p.add_argument("--approx-columns", type=int, default=9, help="approximated low result columns (default 9)")
    p.add_argument("--topology", default="ripple", choices=mularray.TOPOLOGIES,
                   help="partial-product accumulation (default ripple)")
    p.add_argument("--clusters", type=int, default=16, help="quantization clusters per operand (default 16)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="axcomp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("characterize", help="exhaustive error-distance sweep")
    _multiplier_flags(p)
    p.add_argument("--bucket-width", type=int, default=50)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("train", help="build the compensation table and tree from a profile")
    p.add_argument("--profile", required=True)
    p.add_argument("--clusters", type=int, default=None, help="override the profile's cluster count")
    p.add_argument("--max-depth", type=int, default=None, help="depth limit (default: unpruned)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="compare error statistics with and without compensation")
    p.add_argument("--profile", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("blend", help="multiplicative image blending with PSNR report")
    p.add_argument("--model", required=True)
    p.add_argument("--image-a")
    p.add_argument("--image-b")
    p.add_argument("--synthetic", action="store_true", help="use the seeded synthetic image suite")
    p.add_argument("--pairs", type=int, default=6)
    p.add_argument("--mode", default="all", choices=["all"] + [m.value for m in imaging.BlendMode])
    p.add_argument("--seed", type=int, default=2019)
    p.add_argument("--psnr-domain", default="pixel", choices=["pixel", "product"])
    p.add_argument("--image-format", default="png", choices=["png", "ppm"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_blend)

    p = sub.add_parser("netlist", help="dump the multiplier netlist and cell census")
    _multiplier_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_netlist)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"axcomp: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (profiler.ProfileFormatError, learner.ModelFormatError) as exc:
        print(f"axcomp: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"axcomp: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
