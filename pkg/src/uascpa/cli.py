"""Command-line front end: ingest -> compute -> aggregate (and sensitivity)."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import yaml

from . import __version__
from .ingest import (DofLayout, FeatureClass, LocationBoundary, build_pointset, file_digest,
                     filter_obstacles, obstacle_to_circle, parse_boundaries, parse_dof,
                     parse_features, read_pointset, write_pointset)
from .ingest.features import Reject
from .pipeline import Direction, PipelineConfig, load_results, run_pipeline, write_results
from .stats import (LEVELS, PERCENTILE_METHOD, cell_stats, histogram_table, location_means,
                    means_table, pair_means, percentile_table, sensitivity_compare,
                    sensitivity_table)
from .units import FT_TO_M, NM_TO_M

log = logging.getLogger("uascpa")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_PARTIAL = 4


class ConfigError(Exception):
    pass


class MissingInput(Exception):
    def __init__(self, paths: Sequence[str]):
        super().__init__("missing input files: " + ", ".join(paths))
        self.paths = list(paths)


@dataclass
class Dataset:
    feature_class: FeatureClass
    paths: list[str]
    fmt: str


@dataclass
class RunConfig:
    locations: list[str]
    boundaries: str | None
    datasets: dict[FeatureClass, Dataset]
    classes: list[FeatureClass]
    spacing_ft: float = 500.0
    max_range_nm: float = 60.0
    min_obstacle_height_ft: float = 50.0
    direction: str = "both"
    workers: int = 1
    dof_layout: str | None = None
    default_accuracy_ft: float | None = None

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            spacing_m=self.spacing_ft * FT_TO_M, max_range_m=self.max_range_nm * NM_TO_M,
            min_obstacle_height_ft=self.min_obstacle_height_ft, locations=tuple(self.locations),
            classes=tuple(self.classes), direction=Direction(self.direction),
            worker_count=self.workers)


_FORMATS = {"dof", "geojson", "csv"}


def load_config(path: str | Path, args: argparse.Namespace | None = None) -> RunConfig:
    """Read the YAML run configuration and apply command-line overrides."""
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except FileNotFoundError:
        raise MissingInput([str(path)]) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    try:
        locations = [str(x) for x in doc.get("locations") or []]
        datasets = {}
        for name, spec in (doc.get("datasets") or {}).items():
            cls = FeatureClass.parse(name)
            if isinstance(spec, str):
                spec = {"path": spec}
            paths = spec.get("paths") or [spec["path"]]
            fmt = spec.get("format") or _guess_format(paths[0])
            if fmt not in _FORMATS:
                raise ConfigError(f"dataset {name}: unknown format {fmt!r}")
            datasets[cls] = Dataset(cls, [str(p) for p in paths], fmt)
        classes = [FeatureClass.parse(c) for c in doc.get("classes") or []] or sorted(
            datasets, key=lambda c: c.name)
        cfg = RunConfig(
            locations=locations, boundaries=doc.get("boundaries"), datasets=datasets,
            classes=classes,
            spacing_ft=float(doc.get("spacing_ft", 500.0)),
            max_range_nm=float(doc.get("max_range_nm", 60.0)),
            min_obstacle_height_ft=float(doc.get("min_obstacle_height_ft", 50.0)),
            direction=str(doc.get("direction", "both")),
            workers=int(doc.get("workers", 1)),
            dof_layout=doc.get("dof_layout"),
            default_accuracy_ft=doc.get("default_accuracy_ft"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from None
    if args is not None:
        for attr, key in (("spacing_ft", "spacing_ft"), ("max_range_nm", "max_range_nm"),
                          ("direction", "direction"), ("workers", "workers")):
            v = getattr(args, attr, None)
            if v is not None:
                setattr(cfg, key, v)
    if not cfg.locations:
        raise ConfigError("config lists no locations")
    if cfg.direction not in ("forward", "both"):
        raise ConfigError(f"direction must be forward or both, got {cfg.direction!r}")
    try:
        cfg.pipeline_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _guess_format(path: str) -> str:
    p = path.lower()
    if p.endswith((".json", ".geojson")):
        return "geojson"
    if p.endswith(".csv"):
        return "csv"
    return "dof"


def pointset_name(location: str, cls: FeatureClass) -> str:
    return f"{location}__{cls.name}.csv"


# -- ingest ----------------------------------------------------------------

def cmd_ingest(config: RunConfig, input_dir: Path, output_dir: Path) -> int:
    if not config.boundaries:
        raise ConfigError("config needs a 'boundaries' file")
    needed = [config.boundaries]
    for cls in config.classes:
        if cls not in config.datasets:
            raise ConfigError(f"no dataset configured for class {cls.name}")
        needed += config.datasets[cls].paths
    missing = [p for p in needed if not (input_dir / p).is_file()]
    if missing:
        raise MissingInput(missing)

    bpath = input_dir / config.boundaries
    boundaries = parse_boundaries(bpath.read_bytes())
    absent = [loc for loc in config.locations if loc not in boundaries]
    if absent:
        raise ConfigError(f"boundary file has no polygons for {absent}")
    bdigest = file_digest(bpath)

    layout = DofLayout.load(input_dir / config.dof_layout if config.dof_layout else None)
    if config.default_accuracy_ft is not None:
        layout = DofLayout(layout.columns, layout.accuracy_ft, layout.unknown_codes,
                           float(config.default_accuracy_ft), layout.header_separator)
    spacing_m = config.spacing_ft * FT_TO_M
    rejects: list[tuple[str, Reject]] = []
    features = {}
    digests = {}
    counts = {}
    for cls in config.classes:
        ds = config.datasets[cls]
        feats = []
        for rel in ds.paths:
            data = (input_dir / rel).read_bytes()
            digests[rel] = file_digest(input_dir / rel)
            if ds.fmt == "dof":
                parsed = parse_dof(data, layout)
                rejects += [(rel, r) for r in parsed.rejects]
                kept = filter_obstacles(parsed.obstacles, config.min_obstacle_height_ft)
                counts[rel] = {"parsed": len(parsed.obstacles), "rejected": len(parsed.rejects),
                               "kept_by_height": len(kept)}
                feats += [obstacle_to_circle(o, spacing_m) for o in kept]
            else:
                res = parse_features(data, ds.fmt, cls)
                rejects += [(rel, r) for r in res.rejects]
                counts[rel] = {"parsed": len(res.features), "rejected": len(res.rejects)}
                feats += res.features
        features[cls] = (feats, [digests[p] for p in ds.paths])

    out = output_dir / "pointsets"
    out.mkdir(parents=True, exist_ok=True)
    sets_meta = []
    for loc in sorted(config.locations):
        b: LocationBoundary = boundaries[loc]
        for cls in config.classes:
            feats, prov = features[cls]
            ps = build_pointset(feats, b, spacing_m, cls, [*prov, bdigest])
            name = pointset_name(loc, cls)
            (out / name).write_bytes(write_pointset(ps))
            sets_meta.append({"file": f"pointsets/{name}", "location": loc, "class": cls.name,
                              "points": len(ps), "dropped_after_resampling": ps.dropped})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["source_file", "line", "reason", "record"])
    for rel, r in rejects:
        w.writerow([rel, r.line, r.reason, r.record])
    (output_dir / "rejects.csv").write_text(buf.getvalue())
    manifest = {"tool": "uascpa", "version": __version__, "phase": "ingest",
                "spacing_m": spacing_m, "min_obstacle_height_ft": config.min_obstacle_height_ft,
                "default_accuracy_ft": layout.default_accuracy_ft,
                "input_digests": dict(sorted(digests.items())),
                "boundary_digest": bdigest, "parse_counts": counts, "pointsets": sets_meta,
                "rejects": len(rejects)}
    (output_dir / "ingest_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    log.info("ingest: %d point sets, %d rejects", len(sets_meta), len(rejects))
    return EXIT_OK


# -- compute ---------------------------------------------------------------

def cmd_compute(config: RunConfig, input_dir: Path, output_dir: Path) -> int:
    pc = config.pipeline_config()
    files = {(loc, cls): input_dir / pointset_name(loc, cls)
             for loc in config.locations for cls in config.classes}
    if (input_dir / "pointsets").is_dir():
        files = {k: input_dir / "pointsets" / p.name for k, p in files.items()}
    missing = [str(p) for p in files.values() if not p.is_file()]
    if missing:
        raise MissingInput(missing)
    sets = {k: read_pointset(p.read_bytes(), k[0], k[1]) for k, p in sorted(
        files.items(), key=lambda kv: (kv[0][0], kv[0][1].name))}
    result = run_pipeline(pc, sets)
    result.input_digests = {p.name: file_digest(p) for p in sorted(files.values())}
    write_results(result, output_dir)
    log.info("compute: %d cells, %d records, %d failures", len(result.cells),
             result.record_count, len(result.failures))
    return EXIT_PARTIAL if result.failures else EXIT_OK


# -- aggregate -------------------------------------------------------------

def _load_run(path: Path):
    if not (path / "manifest.json").is_file():
        raise MissingInput([str(path / "manifest.json")])
    return load_results(path)


def _rows(run, include_censored: bool):
    rows = []
    for cell in run.cells.values():
        if len(cell) == 0:
            log.warning("skipping empty cell %s", cell.key.name)
            continue
        try:
            rows.append(cell_stats(cell, include_censored))
        except ValueError as exc:
            log.warning("skipping cell %s: %s", cell.key.name, exc)
    return rows


def cmd_aggregate(run_dirs: Sequence[Path], output_dir: Path, include_censored: bool = True) -> int:
    if not 1 <= len(run_dirs) <= 2:
        raise ConfigError("aggregate takes one run directory, or two for a sensitivity table")
    output_dir.mkdir(parents=True, exist_ok=True)
    run = _load_run(run_dirs[0])
    rows = _rows(run, include_censored)
    for precise, suffix in ((False, ""), (True, "_full")):
        (output_dir / f"location_means{suffix}.csv").write_bytes(
            means_table(location_means(rows), "location", precise))
        (output_dir / f"pair_means{suffix}.csv").write_bytes(
            means_table(pair_means(rows), "feature_pair", precise))
        (output_dir / f"percentiles{suffix}.csv").write_bytes(percentile_table(rows, precise))
    (output_dir / "histograms.csv").write_bytes(
        histogram_table([c for c in run.cells.values() if len(c)], include_censored))
    meta = {"tool": "uascpa", "version": __version__,
            "percentile_method": PERCENTILE_METHOD, "percentile_levels": list(LEVELS),
            "distance_unit": "nautical mile (1852 m)", "include_censored": include_censored,
            "censoring": "sources with no target in range are recorded at max_range_m",
            "weighted_mean_weights": "per-cell point_pairs",
            "point_pair_definition": run.manifest.get("point_pair_definition"),
            "run_config": run.config}
    (output_dir / "tables_metadata.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if len(run_dirs) == 2:
        return cmd_sensitivity(run_dirs, output_dir, include_censored)
    return EXIT_OK


def cmd_sensitivity(run_dirs: Sequence[Path], output_dir: Path, include_censored: bool = True) -> int:
    if len(run_dirs) != 2:
        raise ConfigError("sensitivity needs exactly two run directories (a, then baseline b)")
    output_dir.mkdir(parents=True, exist_ok=True)
    a, b = (_load_run(p) for p in run_dirs)
    try:
        rows = sensitivity_compare(a.cells, b.cells, include_censored)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for precise, suffix in ((False, ""), (True, "_full")):
        (output_dir / f"sensitivity{suffix}.csv").write_bytes(sensitivity_table(rows, precise))
    return EXIT_OK


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uascpa", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def overrides(sp):
        sp.add_argument("--spacing-ft", type=float, dest="spacing_ft")
        sp.add_argument("--max-range-nm", type=float, dest="max_range_nm")
        sp.add_argument("--direction", choices=["forward", "both"])
        sp.add_argument("--workers", type=int)

    sp = sub.add_parser("ingest", help="parse, filter, clip and resample source data")
    sp.add_argument("--config", required=True)
    sp.add_argument("--input", required=True, help="directory holding the configured files")
    sp.add_argument("--output", required=True)
    overrides(sp)

    sp = sub.add_parser("compute", help="closest approaches for every planned cell")
    sp.add_argument("--config", required=True)
    sp.add_argument("--input", required=True, help="ingest output directory")
    sp.add_argument("--output", required=True)
    overrides(sp)

    for name, hlp in (("aggregate", "percentile and mean tables from one run "
                                    "(a second run adds a sensitivity table)"),
                      ("sensitivity", "percent differences of run A against baseline run B")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--input", required=True, action="append",
                        help="compute output directory; repeat for a second run")
        sp.add_argument("--output", required=True)
        sp.add_argument("--include-censored", action=argparse.BooleanOptionalAction,
                        default=True, help="count censored records at the range cutoff")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        if args.command in ("ingest", "compute"):
            cfg = load_config(args.config, args)
            fn = cmd_ingest if args.command == "ingest" else cmd_compute
            inp = Path(args.input)
            if not inp.is_dir():
                raise MissingInput([str(inp)])
            code = fn(cfg, inp, Path(args.output))
        elif args.command == "aggregate":
            code = cmd_aggregate([Path(p) for p in args.input], Path(args.output),
                                 args.include_censored)
        else:
            code = cmd_sensitivity([Path(p) for p in args.input], Path(args.output),
                                   args.include_censored)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    log.info("%s finished in %.2f s", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
