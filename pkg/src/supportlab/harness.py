"""Deterministic Monte Carlo sweeps over (n, k, m, snr, mar) grids.

The unit of work is a cell: one estimator at one grid point, run for a fixed
number of independent trials.  Each trial's generator is derived from a
seed key (master_seed, n, k, m, scenario_index, estimator_id, trial), so a
cell's result is a pure function of the configuration and the master seed:
independent of execution order, of which worker ran it, and of every other
cell.  That is what makes result files byte-reproducible across reruns and
across worker counts.

Results land in a flat CSV with a fixed column set plus a JSON manifest
carrying the config echo, library versions and per-cell wall times.  Wall
times live only in the manifest: the CSV is the thing diffed for
reproducibility, and timings are the one column that never reproduces.
"""

from __future__ import annotations

import csv
import json
import math
import os
import sys
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import ConfigError
from .estimators import (DEFAULT_SUBSET_GUARD, ml_estimate, mc_estimate,
                         is_exact_recovery)
from .model import make_signal, synthesize

DEFAULT_MASTER_SEED = 1729

WORKERS_ENV_VAR = "SUPPORTLAB_WORKERS"

CSV_COLUMNS = ("n", "k", "m", "snr", "mar", "estimator", "trials", "successes",
               "success_rate", "elapsed_s", "seed", "status")

_ESTIMATOR_IDS = {"ml": 0, "mc": 1}

__all__ = [
    "DEFAULT_MASTER_SEED",
    "WORKERS_ENV_VAR",
    "CSV_COLUMNS",
    "SweepConfig",
    "CellResult",
    "trial_rng",
    "run_cell",
    "run_sweep",
    "write_results_csv",
    "read_results_csv",
    "load_config",
    "resolve_workers",
    "repro_config",
]


@dataclass(frozen=True)
class SweepConfig:
    """Full description of a sweep: grids, estimators, trials, seed, guard."""

    n: int
    k_values: tuple[int, ...]
    m_values: tuple[int, ...]
    scenarios: tuple[tuple[float, float], ...]
    estimators: tuple[str, ...]
    trials: int
    master_seed: int = DEFAULT_MASTER_SEED
    ml_guard: int = DEFAULT_SUBSET_GUARD
    output: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        object.__setattr__(self, "scenarios",
                           tuple((float(s), float(r)) for s, r in self.scenarios))
        object.__setattr__(self, "estimators",
                           tuple(str(e) for e in self.estimators))

    def validate(self) -> list[str]:
        """Raise ConfigError on anything unrunnable; return advisory warnings."""
        errors = []
        if self.n < 1:
            errors.append(f"n must be positive, got {self.n}")
        if not self.k_values:
            errors.append("k_values is empty")
        if not self.m_values:
            errors.append("m_values is empty")
        if not self.scenarios:
            errors.append("scenarios is empty")
        if not self.estimators:
            errors.append("estimators is empty")
        for e in self.estimators:
            if e not in _ESTIMATOR_IDS:
                errors.append(f"unknown estimator {e!r}; choose from {sorted(_ESTIMATOR_IDS)}")
        for k in self.k_values:
            if not (1 <= k <= self.n):
                errors.append(f"k={k} outside 1..n={self.n}")
        for m in self.m_values:
            if m < 1:
                errors.append(f"m={m} must be positive")
        for snr, mar in self.scenarios:
            if not (snr > 0 and math.isfinite(snr)):
                errors.append(f"snr={snr} must be positive and finite")
            if not (0 < mar <= 1):
                errors.append(f"mar={mar} must lie in (0, 1]")
        if self.trials < 1:
            errors.append(f"trials must be positive, got {self.trials}")
        if not (0 <= self.master_seed < 2 ** 63):
            errors.append(f"master_seed must be a nonnegative 63-bit integer, got {self.master_seed}")
        if self.ml_guard < 1:
            errors.append(f"ml_guard must be positive, got {self.ml_guard}")
        if errors:
            raise ConfigError("; ".join(errors))

        warnings = []
        if 1 in self.k_values and any(mar != 1 for _, mar in self.scenarios):
            warnings.append(
                "k=1 forces mar=1, so k=1 cells under mar<1 scenarios are "
                "unsatisfiable and will be recorded as skipped"
            )
        if "ml" in self.estimators:
            skipped = sorted({k for k in self.k_values
                              if math.comb(self.n, k) > self.ml_guard})
            if skipped:
                warnings.append(
                    f"exhaustive-search cells at k in {skipped} exceed the subset "
                    f"guard {self.ml_guard} and will be recorded as skipped"
                )
        heavy = [k for k in self.k_values if k >= min(self.m_values)]
        if heavy:
            warnings.append(
                f"k in {sorted(set(heavy))} reaches or exceeds the smallest m; "
                "those cells are degenerate and succeed only by tie-break luck"
            )
        tight = [k for k in self.k_values if self.n - k < 2]
        if tight:
            warnings.append(
                f"k in {sorted(set(tight))} leaves n-k < 2: threshold curves are "
                "undefined there and plots will omit overlays"
            )
        loose = [k for k in self.k_values if k > self.n / 2]
        if loose:
            warnings.append(
                f"k in {sorted(set(loose))} exceeds n/2; the threshold formulas "
                "are calibrated for sparse regimes and read loosely there"
            )
        return warnings

    def cells(self) -> list[dict]:
        """Cell argument dicts in canonical order: scenario, estimator, k, m."""
        out = []
        for si, (snr, mar) in enumerate(self.scenarios):
            for est in self.estimators:
                for k in self.k_values:
                    for m in self.m_values:
                        out.append(dict(n=self.n, k=k, m=m, snr=snr, mar=mar,
                                        estimator=est, trials=self.trials,
                                        master_seed=self.master_seed,
                                        scenario_index=si, ml_guard=self.ml_guard))
        return out

    def work_units(self) -> float:
        """Rough cost proxy: subsets scored (ml) or columns scanned (mc)."""
        total = 0.0
        for cell in self.cells():
            if cell["estimator"] == "ml":
                per = min(math.comb(self.n, cell["k"]), cell["ml_guard"])
            else:
                per = self.n
            total += per * self.trials
        return total


@dataclass(frozen=True)
class CellResult:
    """Outcome of one cell.  success_rate is successes/trials (0 if skipped)."""

    n: int
    k: int
    m: int
    snr: float
    mar: float
    estimator: str
    trials: int
    successes: int
    success_rate: float
    elapsed_s: float
    seed: int
    status: str = "ok"

    def __post_init__(self):
        if self.trials < 0 or not (0 <= self.successes <= max(self.trials, 0)):
            raise ValueError(f"successes {self.successes} inconsistent with trials {self.trials}")
        expect = self.successes / self.trials if self.trials else 0.0
        if self.success_rate != expect:
            raise ValueError("success_rate must equal successes/trials")

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def trial_rng(master_seed: int, n: int, k: int, m: int, scenario_index: int,
              estimator: str, trial: int) -> np.random.Generator:
    """Generator for one trial, derived from the full coordinate key.

    Including every coordinate in the entropy means no two cells share a
    stream and the schedule cannot matter; including the estimator id keeps
    the estimators' ensembles independent rather than paired.
    """
    key = (master_seed, n, k, m, scenario_index, _ESTIMATOR_IDS[estimator], trial)
    return np.random.default_rng(np.random.SeedSequence(entropy=key))


def run_cell(n: int, k: int, m: int, snr: float, mar: float, estimator: str,
             trials: int, master_seed: int = DEFAULT_MASTER_SEED,
             scenario_index: int = 0,
             ml_guard: int = DEFAULT_SUBSET_GUARD) -> CellResult:
    """Run one cell to completion and count exact-support recoveries.

    Exhaustive-search cells whose subset count exceeds the guard are not an
    error: they come back with status "skipped:subset-guard" and zero trials,
    so a sweep that brushes against the guard still completes.
    """
    if estimator not in _ESTIMATOR_IDS:
        raise ConfigError(f"unknown estimator {estimator!r}")
    base = dict(n=n, k=k, m=m, snr=snr, mar=mar, estimator=estimator,
                seed=master_seed)
    if k == 1 and mar != 1:
        return CellResult(**base, trials=0, successes=0, success_rate=0.0,
                          elapsed_s=0.0, status="skipped:mar-unsatisfiable")
    if estimator == "ml" and math.comb(n, k) > ml_guard:
        return CellResult(**base, trials=0, successes=0, success_rate=0.0,
                          elapsed_s=0.0, status="skipped:subset-guard")
    start = time.perf_counter()
    successes = 0
    # Pin BLAS to one thread while inside the cell: identical numerics and no
    # oversubscription whether the cell runs inline or in a worker pool.
    with threadpool_limits(limits=1):
        for t in range(trials):
            rng = trial_rng(master_seed, n, k, m, scenario_index, estimator, t)
            key = (master_seed, n, k, m, scenario_index,
                   _ESTIMATOR_IDS[estimator], t)
            signal = make_signal(n, k, m, snr, mar, rng)
            instance = synthesize(signal, m, rng, seed_key=key)
            if estimator == "ml":
                estimate = ml_estimate(instance, guard=ml_guard)
            else:
                estimate = mc_estimate(instance)
            successes += is_exact_recovery(estimate, signal)
    elapsed = time.perf_counter() - start
    return CellResult(**base, trials=trials, successes=successes,
                      success_rate=successes / trials, elapsed_s=elapsed)


def _run_cell_guarded(cell: dict) -> tuple[CellResult, str | None]:
    """Pool-safe wrapper: never raises, reports failures in the result row."""
    try:
        return run_cell(**cell), None
    except Exception as exc:  # noqa: BLE001 - a failed cell must not kill the sweep
        res = CellResult(n=cell["n"], k=cell["k"], m=cell["m"], snr=cell["snr"],
                         mar=cell["mar"], estimator=cell["estimator"], trials=0,
                         successes=0, success_rate=0.0, elapsed_s=0.0,
                         seed=cell["master_seed"],
                         status=f"failed:{type(exc).__name__}")
        return res, f"{type(exc).__name__}: {exc}"


def resolve_workers(requested: int | None = None) -> int:
    """Worker count: explicit argument, else env override, else CPU count."""
    if requested is not None:
        if requested < 1:
            raise ConfigError(f"workers must be positive, got {requested}")
        return requested
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        try:
            val = int(env)
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV_VAR}={env!r} is not an integer") from exc
        if val < 1:
            raise ConfigError(f"{WORKERS_ENV_VAR} must be positive, got {val}")
        return val
    return os.cpu_count() or 1


def _csv_row(res: CellResult) -> list[str]:
    # elapsed_s is deliberately blank: identical configs must produce
    # identical bytes, and wall time never cooperates.  Timings go to the
    # manifest instead.
    return [repr(res.n), repr(res.k), repr(res.m), repr(res.snr), repr(res.mar),
            res.estimator, repr(res.trials), repr(res.successes),
            repr(res.success_rate), "", repr(res.seed), res.status]


def write_results_csv(results: Iterable[CellResult], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for res in results:
            writer.writerow(_csv_row(res))


def read_results_csv(path) -> list[CellResult]:
    """Load a results file back into CellResult rows."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ConfigError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            out.append(CellResult(
                n=int(row["n"]), k=int(row["k"]), m=int(row["m"]),
                snr=float(row["snr"]), mar=float(row["mar"]),
                estimator=row["estimator"], trials=int(row["trials"]),
                successes=int(row["successes"]),
                success_rate=float(row["success_rate"]),
                elapsed_s=float(row["elapsed_s"]) if row["elapsed_s"] else 0.0,
                seed=int(row["seed"]), status=row["status"],
            ))
    return out


def _manifest_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.stem + ".manifest.json")


def _write_manifest(config: SweepConfig, results: Sequence[CellResult],
                    csv_path: Path, workers: int, started: str) -> Path:
    import importlib.metadata
    import platform

    import scipy

    try:
        version = importlib.metadata.version("supportlab")
    except importlib.metadata.PackageNotFoundError:
        version = "unknown"
    doc = {
        "schema": "supportlab-manifest-v1",
        "package_version": version,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
        "master_seed": config.master_seed,
        "workers": workers,
        "work_units": config.work_units(),
        "started_utc": started,
        "finished_utc": datetime.now(timezone.utc).isoformat(),
        "config": asdict(config),
        "cells": [
            {"n": r.n, "k": r.k, "m": r.m, "snr": r.snr, "mar": r.mar,
             "estimator": r.estimator, "status": r.status, "trials": r.trials,
             "successes": r.successes, "elapsed_s": round(r.elapsed_s, 6)}
            for r in results
        ],
    }
    path = _manifest_path(csv_path)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return path


def run_sweep(config: SweepConfig, workers: int | None = None,
              output: str | None = None, progress: bool = False) -> list[CellResult]:
    """Execute every cell of a sweep and return results in canonical order.

    When an output path is set (argument wins over config.output), rows are
    streamed to the CSV as soon as their canonical-order predecessors are
    done, and a manifest JSON with versions and timings lands next to it.
    Failed cells are recorded and the sweep keeps going.
    """
    for warning in config.validate():
        print(f"warning: {warning}", file=sys.stderr)
    cells = config.cells()
    estimate = config.work_units()
    if progress:
        print(f"planned work: {len(cells)} cells, ~{estimate:.3g} scored units "
              f"(ml cells capped at guard {config.ml_guard})", file=sys.stderr)
    workers = resolve_workers(workers)
    out_path = Path(output) if output else (Path(config.output) if config.output else None)
    started = datetime.now(timezone.utc).isoformat()

    results: list[CellResult | None] = [None] * len(cells)
    fh = None
    writer = None
    flushed = 0
    if out_path is not None:
        fh = open(out_path, "w", newline="")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)

    def flush_ready():
        nonlocal flushed
        while flushed < len(results) and results[flushed] is not None:
            if writer is not None:
                writer.writerow(_csv_row(results[flushed]))
                fh.flush()
            flushed += 1

    def note(i: int, err: str | None):
        if err:
            print(f"cell {i + 1}/{len(cells)} failed: {err}", file=sys.stderr)
        elif progress:
            r = results[i]
            print(f"cell {i + 1}/{len(cells)} done: {r.estimator} k={r.k} m={r.m} "
                  f"snr={r.snr:g} mar={r.mar:g} rate={r.success_rate:.3f} "
                  f"[{r.elapsed_s:.2f}s]", file=sys.stderr)

    try:
        if workers == 1:
            for i, cell in enumerate(cells):
                res, err = _run_cell_guarded(cell)
                results[i] = res
                note(i, err)
                flush_ready()
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                pending = {pool.submit(_run_cell_guarded, cell): i
                           for i, cell in enumerate(cells)}
                while pending:
                    done, _ = wait(pending, return_when=FIRST_COMPLETED)
                    for fut in done:
                        i = pending.pop(fut)
                        res, err = fut.result()
                        results[i] = res
                        note(i, err)
                    flush_ready()
    finally:
        if fh is not None:
            fh.close()

    final = [r for r in results if r is not None]
    if out_path is not None:
        _write_manifest(config, final, out_path, workers, started)
    return final


# ---------------------------------------------------------------------------
# configuration files and canned studies


_CONFIG_KEYS = {"n", "k_values", "m_values", "scenarios", "estimators",
                "trials", "master_seed", "ml_guard", "output"}


def load_config(path) -> SweepConfig:
    """Read a sweep configuration from JSON, rejecting unknown keys."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"config {path} has unknown keys: {sorted(unknown)}")
    missing = {"n", "k_values", "m_values", "scenarios", "estimators", "trials"} - set(raw)
    if missing:
        raise ConfigError(f"config {path} is missing keys: {sorted(missing)}")
    try:
        scenarios = tuple((float(s), float(r)) for s, r in raw["scenarios"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config {path}: scenarios must be [snr, mar] pairs") from exc
    try:
        cfg = SweepConfig(
            n=int(raw["n"]),
            k_values=tuple(int(k) for k in raw["k_values"]),
            m_values=tuple(int(m) for m in raw["m_values"]),
            scenarios=scenarios,
            estimators=tuple(raw["estimators"]),
            trials=int(raw["trials"]),
            master_seed=int(raw.get("master_seed", DEFAULT_MASTER_SEED)),
            ml_guard=int(raw.get("ml_guard", DEFAULT_SUBSET_GUARD)),
            output=raw.get("output"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config {path}: {exc}") from exc
    cfg.validate()
    return cfg


_FULL_SCENARIOS = tuple((snr, mar) for snr in (1.0, 10.0, 100.0)
                        for mar in (1.0, 0.5, 0.2))


def repro_config(which: str, trials: int | None = None, full: bool = False,
                 master_seed: int = DEFAULT_MASTER_SEED) -> SweepConfig:
    """Canned sweep configurations for the bundled phase-transition studies.

    Desk variants thin the grids and scenario sets enough to run on one
    machine in minutes; ``full=True`` restores the dense grids and the full
    3x3 scenario cross at the cost of hours of compute.
    """
    if which == "fig1":
        return SweepConfig(
            n=20, k_values=tuple(range(1, 6)),
            m_values=tuple(range(1, 41)) if full else tuple(range(2, 41, 2)),
            scenarios=_FULL_SCENARIOS if full else ((10.0, 1.0), (10.0, 0.5), (100.0, 1.0)),
            estimators=("ml",),
            trials=trials if trials is not None else 500,
            master_seed=master_seed,
        )
    if which == "fig2":
        return SweepConfig(
            n=40, k_values=tuple(range(1, 6)),
            m_values=tuple(range(1, 41)) if full else tuple(range(4, 41, 4)),
            scenarios=_FULL_SCENARIOS if full else ((10.0, 1.0), (10.0, 0.5)),
            estimators=("ml",),
            trials=trials if trials is not None else (1000 if full else 100),
            master_seed=master_seed,
        )
    if which == "fig3":
        return SweepConfig(
            n=100,
            k_values=tuple(range(1, 21)) if full else (2, 5, 10, 15, 20),
            m_values=tuple(range(25, 1001, 25)) if full else tuple(range(50, 1001, 50)),
            scenarios=_FULL_SCENARIOS if full else ((10.0, 1.0), (10.0, 0.5)),
            estimators=("mc",),
            trials=trials if trials is not None else 1000,
            master_seed=master_seed,
        )
    raise ConfigError(f"unknown study {which!r}; choose fig1, fig2 or fig3")
