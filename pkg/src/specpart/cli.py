"""Command-line interface: experiments, reports and file emission.

Subcommands: reference | optimize | dn | sweep | report | criterion | recipe.
Every run writes a manifest (config echo, version, seed, wall time) beside its
outputs; result files themselves carry no timestamps, so identical configs
and seeds produce byte-identical JSON.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .criteria import (CriterionError, equipartition_gap, l2_neighbor_criterion,
                       neighbors, p_sweep)
from .eigensolve import EigenSolveError
from .extract import (CellGeometry, ExtractionError, PartitionGeometry,
                      SingularPoint, energy_report, extract_partition)
from .grids import DomainError, DomainSpec, GridMask, build_mask, write_pgm
from .mixed import MixedProblemError, TouchSolveError, solve_touch, symmetrize
from .mixed_catalog import builtin_specs, get_spec
from .optimizer import (DensitySet, OptimizeConfig, OptimizeError, optimize,
                        pnorm_energy)
from .reference import MU_COUNTS, bounds, spectrum

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# serialization helpers

def _sanitize(obj):
    """JSON-safe structures: numpy scalars/arrays to plain Python, infinities
    to strings (strict JSON has no Infinity literal)."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
    return obj


def write_json(payload: dict, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_sanitize(payload), sort_keys=True,
                      separators=(",", ":"), allow_nan=False)
    path.write_text(text + "\n")


def write_manifest(path: Path, config: dict, t_start: float) -> None:
    manifest = {
        "config": _sanitize(config),
        "version": __version__,
        "wall_time_s": round(time.time() - t_start, 3),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    out = Path(path)
    write_json(manifest, out.with_suffix(out.suffix + ".manifest.json"))


def partition_payload(partition: PartitionGeometry, report=None) -> dict:
    payload = {
        "cells": [{"outer": c.outer.tolist(),
                   "holes": [h.tolist() for h in c.holes],
                   "area": c.area} for c in partition.cells],
        "adjacency": [list(p) for p in partition.adjacency],
        "singular_points": [{"x": s.x, "y": s.y, "degree": s.degree}
                            for s in partition.singular_points],
        "grid_h": partition.h,
    }
    if report is not None:
        payload["eigenvalues"] = list(report.cell_values)
        payload["energies"] = report.as_dict()
    return payload


def partition_from_payload(payload: dict) -> PartitionGeometry:
    cells = [CellGeometry(np.asarray(c["outer"], dtype=float),
                          [np.asarray(h, dtype=float) for h in c["holes"]])
             for c in payload["cells"]]
    adjacency = [tuple(p) for p in payload["adjacency"]]
    singular = [SingularPoint(s["x"], s["y"], s["degree"])
                for s in payload["singular_points"]]
    lengths = {tuple(p): 1.0 for p in adjacency}  # lengths not serialized
    return PartitionGeometry(cells, adjacency, singular,
                             payload.get("grid_h", 0.0), lengths)


def densities_payload(densities: DensitySet) -> dict:
    g = densities.grid
    return {
        "grid": {"x0": g.x0, "y0": g.y0, "h": g.h, "nx": g.nx, "ny": g.ny},
        "fields": [field.tolist() for field in densities.values],
    }


def densities_from_payload(payload: dict, domain: DomainSpec) -> DensitySet:
    g = payload["grid"]
    mask = build_mask(domain, g["nx"])
    values = np.asarray(payload["fields"], dtype=float)
    return DensitySet(mask, values)


def write_csv_rows(path: Path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# --------------------------------------------------------------------------
# run configuration

_EMIT_CHOICES = ("json", "csv", "svg", "pgm")


@dataclasses.dataclass
class RunConfig:
    """One run of a subcommand; recipes expand into batches of these."""

    subcommand: str
    domain: str = "square"
    k: int = 2
    objective: str = "pnorm"
    p: float = 1.0
    p_grid: tuple = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0)
    grids: tuple = (60, 120, 240)
    c_schedule: tuple | None = None
    eps_schedule: tuple = (10.0, 1.0, 0.1, 0.01)
    seed: int | None = None
    max_iters: int = 200
    min_step: float = 1e-6
    jobs: int = 1
    resolution: int = 401
    refine: int = 301
    dn_config: str = ""
    run_file: str = ""
    pair: tuple | None = None
    count: int = 10
    cold_start: bool = False
    report: bool = True
    densities: bool = True
    out: str = ""
    emit: tuple = ("json",)
    label: str = ""
    batch: list = dataclasses.field(default_factory=list)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("batch", None)
        return d

    def echo(self) -> dict:
        """Config echo embedded in result files: everything that shapes the
        computation, but not the output location (so identical runs produce
        byte-identical results wherever they are written)."""
        d = self.as_dict()
        d.pop("out", None)
        return d

    def optimize_config(self) -> OptimizeConfig:
        if self.seed is None:
            raise ConfigError("a --seed is required for stochastic runs")
        return OptimizeConfig(
            k=self.k, objective=self.objective, p=self.p,
            eps_schedule=tuple(self.eps_schedule), grids=tuple(self.grids),
            c_schedule=self.c_schedule, seed=self.seed,
            min_step=self.min_step, max_iters=self.max_iters, jobs=self.jobs)


def load_config_file(path: str) -> dict:
    """Flat key = value text; '#' starts a comment.  Values are parsed like
    the corresponding flags (comma lists for grids and p-grid)."""
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _parse_int_list(text):
    return tuple(int(v) for v in str(text).split(",") if v)


def _parse_float_list(text):
    return tuple(float(v) for v in str(text).split(",") if v)


def _parse_emit(text):
    items = tuple(v.strip() for v in str(text).split(",") if v.strip())
    for item in items:
        if item not in _EMIT_CHOICES:
            raise ConfigError(f"unknown emit format {item!r}")
    return items


_FILE_PARSERS = {
    "grids": _parse_int_list, "p_grid": _parse_float_list,
    "c_schedule": _parse_float_list, "eps_schedule": _parse_float_list,
    "emit": _parse_emit, "k": int, "seed": int, "max_iters": int,
    "resolution": int, "refine": int, "count": int, "jobs": int,
    "p": float, "min_step": float,
    "cold_start": lambda v: v.lower() in ("1", "true", "yes"),
    "report": lambda v: v.lower() in ("1", "true", "yes"),
    "densities": lambda v: v.lower() in ("1", "true", "yes"),
}


def merge_config(args: argparse.Namespace) -> RunConfig:
    """defaults < config file < explicit flags."""
    cfg = RunConfig(subcommand=args.subcommand)
    if getattr(args, "config_file", None):
        for key, raw in load_config_file(args.config_file).items():
            if not hasattr(cfg, key):
                raise ConfigError(f"unknown config key {key!r}")
            parser = _FILE_PARSERS.get(key, str)
            try:
                setattr(cfg, key, parser(raw))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    for key, value in vars(args).items():
        if key in ("subcommand", "config_file") or value is None:
            continue
        if hasattr(cfg, key):
            setattr(cfg, key, value)
    return cfg


# --------------------------------------------------------------------------
# subcommand implementations

def _domain(cfg: RunConfig) -> DomainSpec:
    try:
        return DomainSpec.from_name(cfg.domain)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def _out_stem(cfg: RunConfig, default: str) -> Path:
    return Path(cfg.out) if cfg.out else Path(default)


def cmd_reference(cfg: RunConfig) -> int:
    t0 = time.time()
    entries = spectrum(cfg.domain, cfg.count)
    mus = MU_COUNTS.get(cfg.domain, ())
    print(f"first {cfg.count} Dirichlet eigenvalues of the {cfg.domain}:")
    print(f"{'k':>3} {'eigenvalue':>12} {'(m,n)':>8} {'mult':>5} {'nodal sets':>11}")
    rows = []
    for idx, entry in enumerate(entries, 1):
        mu = mus[idx - 1] if idx <= len(mus) else ""
        print(f"{idx:>3} {entry.value:>12.4f} ({entry.m},{entry.n})"
              f"{entry.multiplicity:>5} {mu:>11}")
        rows.append((idx, repr(entry.value), entry.m, entry.n,
                     entry.multiplicity, mu))
    if cfg.out:
        stem = Path(cfg.out)
        if "csv" in cfg.emit or stem.suffix == ".csv":
            write_csv_rows(stem if stem.suffix == ".csv"
                           else stem.with_suffix(".csv"),
                           ["k", "eigenvalue", "m", "n", "multiplicity",
                            "nodal_sets"], rows)
        if "json" in cfg.emit and stem.suffix != ".csv":
            write_json({"domain": cfg.domain,
                        "eigenvalues": [{"k": r[0], "value": float(r[1]),
                                         "m": r[2], "n": r[3],
                                         "multiplicity": r[4]}
                                        for r in rows]}, stem)
        write_manifest(stem, cfg.as_dict(), t0)
    return EXIT_OK


def cmd_optimize(cfg: RunConfig) -> int:
    t0 = time.time()
    domain = _domain(cfg)
    result = optimize(domain, cfg.optimize_config())
    payload = {
        "config": cfg.echo(),
        "energy_history": [
            {"n": h.n, "C": h.C, "eps": h.eps, "energies": list(h.energies)}
            for h in result.history],
        "relaxed_eigenvalues": list(result.eigenvalues),
    }
    if cfg.densities:
        payload["densities"] = densities_payload(result.densities)
    report = None
    partition = None
    if cfg.report:
        partition = extract_partition(result.densities, domain)
        p_list = sorted({1.0, float(cfg.p), math.inf}) if cfg.objective == "pnorm" \
            else [1.0, math.inf]
        report = energy_report(partition, p_list, resolution=cfg.refine,
                               jobs=cfg.jobs)
        payload["partition"] = partition_payload(partition, report)

    stem = _out_stem(cfg, "optimize_run.json")
    if "json" in cfg.emit:
        write_json(payload, stem)
    if report is not None and "csv" in cfg.emit:
        write_csv_rows(stem.with_suffix(".cells.csv"),
                       ["cell", "eigenvalue"],
                       list(enumerate(report.cell_values)))
    if "svg" in cfg.emit:
        from . import plots
        plots.plot_energy_history(result.history,
                                  stem.with_suffix(".history.svg"),
                                  title=f"{cfg.domain} k={cfg.k}")
        if partition is not None:
            plots.plot_partition(partition, stem.with_suffix(".partition.svg"),
                                 title=f"{cfg.domain} k={cfg.k}",
                                 cell_values=report.cell_values)
    if "pgm" in cfg.emit:
        write_pgm(result.densities.grid, stem.with_suffix(".mask.pgm"))
    write_manifest(stem, cfg.as_dict(), t0)
    if report is not None:
        print(f"cells: {[round(v, 3) for v in report.cell_values]}")
        print(f"max eigenvalue: {report.value_max:.4f}  "
              f"gap: {report.equipartition_gap:.3%}")
    print(f"final objective: {result.history[-1].energies[-1]:.4f}")
    return EXIT_OK


def cmd_dn(cfg: RunConfig) -> int:
    t0 = time.time()
    if not cfg.dn_config:
        raise ConfigError("dn requires --config NAME (see --list)")
    try:
        spec = get_spec(cfg.dn_config)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    solution = solve_touch(spec, None, cfg.resolution)
    partition = symmetrize(spec, solution.theta, solution.nodal)
    report = energy_report(partition, [1.0, math.inf], resolution=cfg.refine,
                           jobs=cfg.jobs) if cfg.report else None
    payload = {
        "config": cfg.echo(),
        "name": spec.name,
        "k": spec.k,
        "theta": solution.theta.tolist(),
        "eigenvalue": solution.eigenvalue,
        "touch_residual": solution.residual.tolist(),
        "nodal_domains": solution.nodal.count,
        "partition": partition_payload(partition, report),
    }
    stem = _out_stem(cfg, f"{spec.name}.json")
    if "json" in cfg.emit:
        write_json(payload, stem)
    if "svg" in cfg.emit:
        from . import plots
        plots.plot_partition(
            partition, stem.with_suffix(".partition.svg"), title=spec.name,
            cell_values=report.cell_values if report else None)
    if "pgm" in cfg.emit:
        write_pgm(solution.nodal.grid, stem.with_suffix(".mask.pgm"))
    write_manifest(stem, cfg.as_dict(), t0)
    print(f"{spec.name}: theta* = {np.round(solution.theta, 5).tolist()}, "
          f"eigenvalue = {solution.eigenvalue:.4f}")
    if report is not None:
        print(f"refined cells: {[round(v, 3) for v in report.cell_values]}  "
              f"gap: {report.equipartition_gap:.3%}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    t0 = time.time()
    domain = _domain(cfg)
    result = p_sweep(domain, cfg.k, cfg.p_grid, cfg.optimize_config(),
                     cold_start=cfg.cold_start, report_resolution=cfg.refine)
    stem = _out_stem(cfg, f"sweep_{cfg.domain}_{cfg.k}.json")
    payload = {
        "config": cfg.echo(),
        "p": list(result.p_grid),
        "energy_p": list(result.energy_p),
        "energy_max": list(result.energy_max),
        "cell_eigenvalues": result.cell_values,
        "errors": result.errors,
    }
    if "json" in cfg.emit:
        write_json(payload, stem)
    if "csv" in cfg.emit:
        rows = []
        for p, ep, emax, cells in result.rows():
            rows.append([p, repr(ep), repr(emax)]
                        + [repr(v) for v in cells])
        width = max(len(r) for r in rows) - 3
        write_csv_rows(stem.with_suffix(".csv"),
                       ["p", "energy_p", "energy_max"]
                       + [f"cell_{i}" for i in range(width)], rows)
    if "svg" in cfg.emit:
        from . import plots
        plots.plot_p_sweep(result, stem.with_suffix(".svg"),
                           title=f"{cfg.domain} k={cfg.k}")
    write_manifest(stem, cfg.as_dict(), t0)
    for p, ep, emax, _ in result.rows():
        print(f"p={p:<6g} energy={ep:<10.4f} max={emax:.4f}")
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    t0 = time.time()
    if not cfg.run_file:
        raise ConfigError("report requires --run FILE (an optimize output)")
    try:
        payload = json.loads(Path(cfg.run_file).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {cfg.run_file}: {exc}") from exc
    run_cfg = payload.get("config", {})
    domain = DomainSpec.from_name(run_cfg.get("domain", cfg.domain))
    if "densities" not in payload:
        raise ConfigError("run file carries no density fields")
    densities = densities_from_payload(payload["densities"], domain)
    partition = extract_partition(densities, domain)
    p_list = sorted(set([1.0, 2.0, 5.0, 10.0, 20.0, 50.0, math.inf]))
    report = energy_report(partition, p_list, resolution=cfg.refine,
                           jobs=cfg.jobs)
    stem = _out_stem(cfg, Path(cfg.run_file).stem + "_report.json")
    if "json" in cfg.emit:
        write_json({"config": cfg.echo(), "source": cfg.run_file,
                    "partition": partition_payload(partition, report)}, stem)
    if "csv" in cfg.emit:
        rows = [(p, repr(e)) for p, e in zip(report.p_list, report.p_energies)]
        write_csv_rows(stem.with_suffix(".csv"), ["p", "energy"], rows)
    if "svg" in cfg.emit:
        from . import plots
        plots.plot_partition(partition, stem.with_suffix(".partition.svg"),
                             cell_values=report.cell_values)
    write_manifest(stem, cfg.as_dict(), t0)
    print(f"cells: {[round(v, 3) for v in report.cell_values]}")
    print(f"gap: {report.equipartition_gap:.3%}")
    return EXIT_OK


def cmd_criterion(cfg: RunConfig) -> int:
    t0 = time.time()
    if cfg.dn_config:
        spec = get_spec(cfg.dn_config)
        solution = solve_touch(spec, None, cfg.resolution)
        partition = symmetrize(spec, solution.theta, solution.nodal)
    elif cfg.run_file:
        payload = json.loads(Path(cfg.run_file).read_text())
        domain = DomainSpec.from_name(payload["config"].get("domain", "square"))
        densities = densities_from_payload(payload["densities"], domain)
        partition = extract_partition(densities, domain)
    else:
        raise ConfigError("criterion requires --config NAME or --run FILE")
    pairs = [tuple(cfg.pair)] if cfg.pair else sorted(neighbors(partition))
    results = []
    for pair in pairs:
        try:
            results.append(l2_neighbor_criterion(partition, pair, cfg.refine))
        except CriterionError as exc:
            print(f"pair {pair}: {exc}")
    for res in results:
        print(f"pair {res.pair}: masses = ({res.masses[0]:.4f}, "
              f"{res.masses[1]:.4f}), gap = {res.gap:.4f} -> {res.verdict}")
    stem = _out_stem(cfg, "criterion.json")
    if cfg.out and "json" in cfg.emit:
        write_json({"config": cfg.echo(),
                    "results": [r.as_dict() for r in results]}, stem)
        write_manifest(stem, cfg.as_dict(), t0)
    return EXIT_OK


# --------------------------------------------------------------------------
# recipes

def recipe(name: str) -> RunConfig:
    """Named presets bundling the desk-scale experiments; multi-run presets
    carry their runs in `batch`."""
    grids = (60, 120, 240)

    def opt(domain, k, objective="pnorm", p=50.0, seed=1, label=""):
        return RunConfig(subcommand="optimize", domain=domain, k=k,
                         objective=objective, p=p, seed=seed, grids=grids,
                         label=label or f"{domain}-k{k}-{objective}",
                         out=f"{label or f'{domain}_k{k}_{objective}'}.json")

    def dn(config, label=""):
        return RunConfig(subcommand="dn", dn_config=config,
                         label=label or config, out=f"{config}.json")

    recipes = {}
    recipes["table2"] = RunConfig(
        subcommand="recipe", label="table2",
        batch=[opt("triangle", k, "pnorm", p, seed=1,
                   label=f"triangle_k{k}_p{p:g}")
               for k in (2, 3, 4, 5) for p in (1.0, 50.0)])
    recipes["table4"] = RunConfig(
        subcommand="recipe", label="table4",
        batch=[opt(dom, k, obj, seed=1,
                   label=f"{dom}_k{k}_{obj}")
               for dom in ("square", "triangle") for k in (5, 6)
               for obj in ("pnorm", "penalized")])
    recipes["table6"] = RunConfig(
        subcommand="recipe", label="table6",
        batch=([opt(dom, k, obj, seed=1, label=f"{dom}_k{k}_{obj}")
                for dom in ("square", "triangle", "disk") for k in (3, 5)
                for obj in ("pnorm", "penalized")]
               + [dn(c) for c in ("square3", "square5", "triangle3",
                                  "triangle5", "disk6", "disk7")]))
    recipes["fig-disk"] = RunConfig(
        subcommand="recipe", label="fig-disk",
        batch=[opt("disk", k, "pnorm", p, seed=1,
                   label=f"disk_k{k}_p{p:g}")
               for k in (2, 3, 4, 5) for p in (1.0, 50.0)])
    recipes["fig-pen"] = RunConfig(
        subcommand="recipe", label="fig-pen",
        batch=[opt(dom, k, "penalized", seed=1,
                   label=f"{dom}_k{k}_penalized")
               for dom in ("square", "disk", "triangle")
               for k in range(2, 11)])
    recipes["sweep-triangle2"] = RunConfig(
        subcommand="sweep", domain="triangle", k=2, seed=1, grids=grids,
        p_grid=(1.0, 2.0, 5.0, 10.0, 20.0, 50.0), emit=("json", "csv", "svg"),
        label="sweep-triangle2", out="sweep_triangle_k2.json")
    recipes["triangular-numbers"] = RunConfig(
        subcommand="recipe", label="triangular-numbers",
        batch=[opt("triangle", k, "penalized", seed=1,
                   label=f"triangle_k{k}_penalized")
               for k in (6, 10, 15)])
    if name not in recipes:
        known = ", ".join(sorted(recipes))
        raise ConfigError(f"unknown recipe {name!r}; known: {known}")
    return recipes[name]


def cmd_recipe(cfg: RunConfig) -> int:
    preset = recipe(cfg.label)
    out_dir = Path(cfg.out) if cfg.out else Path(preset.label)
    runs = preset.batch if preset.batch else [preset]
    status = EXIT_OK
    for run in runs:
        run.out = str(out_dir / Path(run.out).name)
        run.jobs = max(run.jobs, cfg.jobs)
        if cfg.seed is not None:
            run.seed = cfg.seed
        print(f"--- {run.label} ---")
        status = max(status, _dispatch(run))
    return status


# --------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specpart",
        description="Candidate minimal spectral partitions of planar domains")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config-file", help="flat key = value settings file")
        p.add_argument("--out", help="output path (JSON stem)")
        p.add_argument("--emit", type=_parse_emit,
                       help="comma list of json,csv,svg,pgm")
        p.add_argument("--jobs", type=int, help="parallel worker cap")

    p = sub.add_parser("reference", help="closed-form eigenvalue tables")
    p.add_argument("--domain", choices=("square", "disk", "triangle"),
                   required=True)
    p.add_argument("--count", type=int)
    common(p)

    p = sub.add_parser("optimize", help="relaxed density optimization")
    p.add_argument("--domain", choices=("square", "disk", "triangle"))
    p.add_argument("--k", type=int)
    p.add_argument("--objective", choices=("pnorm", "penalized"))
    p.add_argument("--p", type=float)
    p.add_argument("--grids", type=_parse_int_list,
                   help="comma list of grid resolutions, e.g. 60,120,240")
    p.add_argument("--c-schedule", dest="c_schedule", type=_parse_float_list)
    p.add_argument("--eps-schedule", dest="eps_schedule",
                   type=_parse_float_list)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--refine", type=int,
                   help="grid resolution for refined cell eigenvalues")
    p.add_argument("--no-report", dest="report", action="store_false",
                   default=None)
    p.add_argument("--no-densities", dest="densities", action="store_false",
                   default=None)
    common(p)

    p = sub.add_parser("dn", help="mixed Dirichlet-Neumann construction")
    p.add_argument("--config", dest="dn_config",
                   help="catalog entry, e.g. square3 (see --list)")
    p.add_argument("--list", action="store_true", dest="list_configs",
                   help="list catalog entries and exit")
    p.add_argument("--resolution", type=int)
    p.add_argument("--refine", type=int)
    p.add_argument("--no-report", dest="report", action="store_false",
                   default=None)
    common(p)

    p = sub.add_parser("sweep", help="energy curves against the norm exponent")
    p.add_argument("--domain", choices=("square", "disk", "triangle"))
    p.add_argument("--k", type=int)
    p.add_argument("--p-grid", dest="p_grid", type=_parse_float_list)
    p.add_argument("--grids", type=_parse_int_list)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--refine", type=int)
    p.add_argument("--cold-start", dest="cold_start", action="store_true",
                   default=None)
    common(p)

    p = sub.add_parser("report", help="re-extract and report a finished run")
    p.add_argument("--run", dest="run_file", help="optimize output JSON")
    p.add_argument("--refine", type=int)
    common(p)

    p = sub.add_parser("criterion", help="L2 neighbor criterion")
    p.add_argument("--config", dest="dn_config")
    p.add_argument("--run", dest="run_file")
    p.add_argument("--pair", type=_parse_int_list)
    p.add_argument("--resolution", type=int)
    p.add_argument("--refine", type=int)
    common(p)

    p = sub.add_parser("recipe", help="bundled experiment presets")
    p.add_argument("name", help="preset name, e.g. table6")
    p.add_argument("--seed", type=int)
    common(p)

    return parser


def _dispatch(cfg: RunConfig) -> int:
    handlers = {
        "reference": cmd_reference,
        "optimize": cmd_optimize,
        "dn": cmd_dn,
        "sweep": cmd_sweep,
        "report": cmd_report,
        "criterion": cmd_criterion,
        "recipe": cmd_recipe,
    }
    return handlers[cfg.subcommand](cfg)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "list_configs", False):
        for name, spec in sorted(builtin_specs().items()):
            print(f"{name:20s} k={spec.k:<3d} {spec.description}")
        return EXIT_OK
    try:
        cfg = merge_config(args)
        if args.subcommand == "recipe":
            cfg.label = args.name
        return _dispatch(cfg)
    except (ConfigError, DomainError, KeyError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EigenSolveError, TouchSolveError, MixedProblemError,
            OptimizeError, ExtractionError, CriterionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
