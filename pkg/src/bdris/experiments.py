"""Config-driven experiment harness: single runs, Monte Carlo sweeps, records.

Configs are INI files with [scenario], [geometry], [fading], and optionally
[sweep] sections; every default (geometry, pathloss, noise) can be
overridden per file. A sweep evaluates a list of (mode, arch) cases over a
swept variable, trial-parallel, and writes one CSV row per (case, value,
trial) in deterministic order plus a JSON summary record.
"""

import configparser
import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from . import driver
from .ris import Mode, Architecture, ArchKind
from .scenario import Scenario, Geometry, FadingSpec, db_to_linear, dbm_to_watts

CSV_HEADER = ["mode", "arch", "swept_var", "value", "trial", "seed",
              "sum_rate", "iters", "wall_ms"]
SWEEP_VARIABLES = ("p_dbm", "m", "k_t", "k_r")
WORKERS_ENV = "BDRIS_WORKERS"


class ConfigError(ValueError):
    """Configuration file failed validation; message names the offending field."""


@dataclass(frozen=True)
class SweepSpec:
    base: Scenario
    variable: str
    values: tuple
    trials: int
    base_seed: int
    cases: tuple  # of (Mode, Architecture)

    def __post_init__(self):
        if not self.values:
            raise ConfigError("sweep.values: must be non-empty")
        if self.trials < 1:
            raise ConfigError("sweep.trials: must be at least 1")
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep.variable: unknown variable {self.variable!r}")
        if not self.cases:
            raise ConfigError("sweep.cases: must list at least one mode:arch case")


def _get(parser, section, key, conv, default=None):
    if not parser.has_option(section, key):
        if default is None:
            raise ConfigError(f"{section}.{key}: missing required key")
        return default
    raw = parser.get(section, key)
    try:
        return conv(raw)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} ({exc})") from exc


def _parse_mode(raw):
    return Mode(raw.strip().lower())


def _parse_arch(raw, groups):
    kind = ArchKind(raw.strip().lower())
    if kind is ArchKind.CW_GC:
        if groups is None:
            raise ConfigError("scenario.groups: required for cw_gc architectures")
        return Architecture.group(groups)
    return Architecture(kind)


def _parse_case(raw, groups):
    parts = raw.strip().lower().split(":")
    if len(parts) != 2:
        raise ConfigError(f"sweep.cases: expected mode:arch, got {raw!r}")
    return _parse_mode(parts[0]), _parse_arch(parts[1], groups)


def load_config(path):
    """Parse an experiment config; returns (Scenario, SweepSpec or None)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as f:
            parser.read_file(f)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not parser.has_section("scenario"):
        raise ConfigError("scenario: missing section")

    geometry = Geometry(
        d_bi=_get(parser, "geometry", "d_bi", float, 50.0),
        d_iu=_get(parser, "geometry", "d_iu", float, 2.5),
        d0=_get(parser, "geometry", "d0", float, 1.0),
        zeta0_db=_get(parser, "geometry", "zeta0_db", float, -30.0),
        pathloss_exp=_get(parser, "geometry", "pathloss_exp", float, 2.2),
    ) if parser.has_section("geometry") else Geometry()

    if parser.has_section("fading"):
        kind = _get(parser, "fading", "kind", str, "rayleigh").strip().lower()
        kappa = db_to_linear(_get(parser, "fading", "kappa_db", float, 5.0))
        fading = FadingSpec(kind, kappa if kind == "rician" else 0.0,
                            kappa if kind == "rician" else 0.0)
    else:
        fading = FadingSpec()

    groups = _get(parser, "scenario", "groups", int, 0) or None
    try:
        scenario = Scenario(
            n=_get(parser, "scenario", "n", int),
            k_r=_get(parser, "scenario", "k_r", int),
            k_t=_get(parser, "scenario", "k_t", int),
            m=_get(parser, "scenario", "m", int),
            mode=_get(parser, "scenario", "mode", _parse_mode),
            arch=_parse_arch(_get(parser, "scenario", "arch", str), groups),
            power=dbm_to_watts(_get(parser, "scenario", "p_dbm", float)),
            noise=dbm_to_watts(_get(parser, "scenario", "noise_dbm", float, -80.0)),
            geometry=geometry,
            fading=fading,
            seed=_get(parser, "scenario", "seed", int, 0),
            max_outer=_get(parser, "scenario", "max_outer", int, 500),
            rel_tol=_get(parser, "scenario", "rel_tol", float, 1e-4),
            sc_algorithm=_get(parser, "scenario", "sc_algorithm", str, "efficient").strip(),
        )
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from exc

    sweep = None
    if parser.has_section("sweep"):
        values_raw = _get(parser, "sweep", "values", str)
        try:
            values = tuple(float(v) for v in values_raw.replace(",", " ").split())
        except ValueError as exc:
            raise ConfigError(f"sweep.values: cannot parse {values_raw!r}") from exc
        cases = tuple(_parse_case(c, groups)
                      for c in _get(parser, "sweep", "cases", str).split(",") if c.strip())
        sweep = SweepSpec(
            base=scenario,
            variable=_get(parser, "sweep", "variable", str).strip().lower(),
            values=values,
            trials=_get(parser, "sweep", "trials", int, 1),
            base_seed=_get(parser, "sweep", "base_seed", int, scenario.seed),
            cases=cases,
        )
        for mode, arch in sweep.cases:
            for value in sweep.values:
                apply_point(sweep.base, mode, arch, sweep.variable, value, 0)
    return scenario, sweep


def apply_point(base, mode, arch, variable, value, seed):
    """Scenario for one (case, value, trial-seed) sweep point."""
    sc = replace(base, mode=mode, arch=arch, seed=seed)
    try:
        if variable == "p_dbm":
            sc = replace(sc, power=dbm_to_watts(value))
        elif variable == "m":
            sc = replace(sc, m=int(value))
        elif variable == "k_t":
            sc = replace(sc, k_t=int(value))
        elif variable == "k_r":
            sc = replace(sc, k_r=int(value))
        else:
            raise ConfigError(f"sweep.variable: unknown variable {variable!r}")
    except ValueError as exc:
        raise ConfigError(f"sweep point {variable}={value}: {exc}") from exc
    return sc


def _worker_init():
    # Trial-level parallelism owns the cores; threaded BLAS only adds
    # overhead at these matrix sizes.
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(1)
    except ImportError:
        os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
        os.environ.setdefault("OMP_NUM_THREADS", "1")


def _run_point(task):
    case_idx, value_idx, trial, scenario = task
    result = driver.run(scenario)
    return (case_idx, value_idx, trial, scenario.seed, result.sum_rate,
            result.iterations, result.wall_time_s * 1e3)


def worker_count(requested=None):
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_sweep(spec, workers=None):
    """Execute every (case, value, trial) point; returns rows in deterministic order.

    Trial seeds are ``base_seed + trial``, so every case at a given trial
    sees the same channel realization and adding cases to the list never
    changes the channels of existing ones.
    """
    tasks = []
    for ci, (mode, arch) in enumerate(spec.cases):
        for vi, value in enumerate(spec.values):
            for trial in range(spec.trials):
                sc = apply_point(spec.base, mode, arch, spec.variable, value,
                                 spec.base_seed + trial)
                tasks.append((ci, vi, trial, sc))

    nw = worker_count(workers)
    if nw > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=nw, initializer=_worker_init) as pool:
            raw = list(pool.map(_run_point, tasks, chunksize=1))
    else:
        raw = [_run_point(t) for t in tasks]

    raw.sort(key=lambda r: (r[0], r[1], r[2]))
    rows = []
    for ci, vi, trial, seed, rate, iters, wall_ms in raw:
        mode, arch = spec.cases[ci]
        rows.append({
            "mode": mode.value, "arch": arch.label,
            "swept_var": spec.variable, "value": spec.values[vi],
            "trial": trial, "seed": seed, "sum_rate": rate,
            "iters": iters, "wall_ms": wall_ms,
        })
    return rows


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_rows(rows, path):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in CSV_HEADER])


def scenario_hash(spec):
    text = repr(spec).encode()
    return hashlib.sha256(text).hexdigest()


def summarize(spec, rows, csv_path):
    """Aggregate per-trial rates into a persistable record.

    The mean and sample standard error are recomputable from the stored
    per-trial values.
    """
    record = {
        "scenario_hash": scenario_hash(spec),
        "swept_var": spec.variable,
        "trials": spec.trials,
        "base_seed": spec.base_seed,
        "artifacts": [os.path.basename(csv_path)],
        "cases": [],
    }
    for mode, arch in spec.cases:
        case_entry = {"mode": mode.value, "arch": arch.label, "points": []}
        for value in spec.values:
            rates = [r["sum_rate"] for r in rows
                     if r["mode"] == mode.value and r["arch"] == arch.label
                     and r["value"] == value]
            mean = sum(rates) / len(rates)
            if len(rates) > 1:
                var = sum((x - mean) ** 2 for x in rates) / (len(rates) - 1)
                stderr = (var / len(rates)) ** 0.5
            else:
                stderr = 0.0
            case_entry["points"].append({"value": value, "sum_rates": rates,
                                         "mean": mean, "stderr": stderr})
        record["cases"].append(case_entry)
    return record


def write_summary(record, path):
    with open(path, "w") as f:
        json.dump(record, f, indent=2, sort_keys=True)
        f.write("\n")


def write_trace(result, path):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["iter", "f_o", "power_used", "constraint_residual"])
        for row in result.trace:
            writer.writerow([row.iteration, _fmt(row.f_o), _fmt(row.power_used),
                             _fmt(row.constraint_residual)])
