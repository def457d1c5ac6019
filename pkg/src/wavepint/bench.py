"""Experiment runner for iteration-count, error and spectrum studies."""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .krylov import minres
from .operators import SaddleOperator
from .preconditioners import ABS_H_LIMIT, BUILDERS, build_preconditioner
from .problem import (
    PRESETS as PROBLEMS,
    GridSpec,
    assemble_rhs,
    build_grid,
    coupled_grid,
    error_norms,
    get_problem,
    parse_h,
    recover_solution,
)
from .spectral import (
    EIG_LIMIT,
    PRECOND_LIMIT,
    SpectralReport,
    cluster_check,
    compare_spectrum,
    dense_saddle,
    preconditioned_spectrum,
    sample_psi_g,
    symmetric_eigenvalues,
)

log = logging.getLogger(__name__)

CSV_HEADER = (
    "gamma", "h", "dof", "preconditioner", "iterations", "converged",
    "wall_time_s", "e_y", "e_p", "final_relative_residual",
)
# finest mesh run by default; anything finer needs allow_large
DESK_MIN_H = {1: 2.0 ** -8, 2: 2.0 ** -6}
MODES = ("solve", "spectrum")


@dataclass
class ExperimentConfig:
    problem: str = "example-1d"
    gammas: list[float] = field(default_factory=list)
    hs: list[float] = field(default_factory=list)
    preconditioners: list[str] = field(default_factory=lambda: ["strang"])
    tol: float = 1e-10
    maxit: int = 200
    mode: str = "solve"
    out: Optional[str] = None
    # spectrum mode: spatial points per direction and time steps
    m1s: list[int] = field(default_factory=list)
    ns: list[int] = field(default_factory=list)
    T: float = 2.0
    workers: int = 1
    allow_large: bool = False
    strict: bool = False

    def __post_init__(self):
        self.gammas = [float(g) for g in self.gammas]
        self.hs = [parse_h(h) for h in self.hs]
        self.m1s = [int(v) for v in self.m1s]
        self.ns = [int(v) for v in self.ns]
        self.preconditioners = list(self.preconditioners)

    @property
    def d(self) -> int:
        return 2 if self.problem.endswith("2d") else 1

    def validate(self) -> None:
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        allowed = set(BUILDERS) | ({"psi"} if self.mode == "spectrum" else set())
        for name in self.preconditioners:
            if name not in allowed:
                raise ValueError(f"unknown preconditioner {name!r}; choose from {sorted(allowed)}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.maxit < 1:
            raise ValueError("maxit must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class RunRecord:
    gamma: float
    h: float
    dof: int
    preconditioner: str
    iterations: int
    converged: bool
    wall_time_s: float
    e_y: float
    e_p: float
    final_relative_residual: float


@dataclass(frozen=True)
class _Run:
    gamma: float
    h: float
    preconditioner: str


def plan_runs(config: ExperimentConfig) -> tuple[list[_Run], list[str]]:
    """Expand the config into runs; sizes beyond the desk cap are skipped, not run."""
    runs, skipped = [], []
    d = config.d
    for gamma in config.gammas:
        for h in config.hs:
            for name in config.preconditioners:
                if not config.allow_large and h < DESK_MIN_H[d] * (1 - 1e-12):
                    skipped.append(f"gamma={gamma:g} h={h:g} {name}: finer than desk cap {DESK_MIN_H[d]:g}")
                    continue
                grid = coupled_grid(d, h, gamma, config.T)
                if name == "abs-h" and grid.size > ABS_H_LIMIT:
                    raise ValueError(f"abs-h needs 2mn <= {ABS_H_LIMIT}, got {grid.size} at h={h:g}")
                runs.append(_Run(gamma, h, name))
    return runs, skipped


def solve_one(problem_name: str, grid: GridSpec, preconditioner: str, tol: float = 1e-10,
              maxit: int = 200) -> tuple[RunRecord, np.ndarray]:
    """Assemble, solve and measure a single instance."""
    problem = get_problem(problem_name, grid.gamma)
    start = time.perf_counter()
    A = SaddleOperator.from_grid(grid)
    b = assemble_rhs(problem, grid)
    P = build_preconditioner(preconditioner, grid)
    x, report = minres(A, P, b, tol=tol, maxit=maxit)
    wall = time.perf_counter() - start
    e_y = e_p = math.nan
    if problem.exact_y is not None:
        y, p = recover_solution(x, grid)
        e_y, e_p = error_norms(y, p, problem, grid)
    rec = RunRecord(
        gamma=grid.gamma,
        h=grid.h,
        dof=grid.size,
        preconditioner=preconditioner,
        iterations=report.iterations,
        converged=report.converged,
        wall_time_s=wall,
        e_y=e_y,
        e_p=e_p,
        final_relative_residual=report.final_relative_residual,
    )
    return rec, x


def run_experiment(config: ExperimentConfig) -> list[RunRecord]:
    config.validate()
    runs, skipped = plan_runs(config)
    for msg in skipped:
        log.warning("skipped %s", msg)

    def work(run: _Run) -> RunRecord:
        grid = coupled_grid(config.d, run.h, run.gamma, config.T)
        rec, _ = solve_one(config.problem, grid, run.preconditioner, config.tol, config.maxit)
        log.info("gamma=%g h=%g %s: %d iterations%s", rec.gamma, rec.h, rec.preconditioner,
                 rec.iterations, "" if rec.converged else " (not converged)")
        return rec

    if config.workers == 1 or len(runs) <= 1:
        return [work(r) for r in runs]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(work, runs))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(records: Iterable[RunRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for rec in records:
            w.writerow([_fmt(getattr(rec, k)) for k in CSV_HEADER])


def read_csv(path: str | Path) -> list[RunRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        for row in reader:
            out.append(RunRecord(
                gamma=float(row["gamma"]),
                h=float(row["h"]),
                dof=int(row["dof"]),
                preconditioner=row["preconditioner"],
                iterations=int(row["iterations"]),
                converged=row["converged"] == "true",
                wall_time_s=float(row["wall_time_s"]),
                e_y=float(row["e_y"]),
                e_p=float(row["e_p"]),
                final_relative_residual=float(row["final_relative_residual"]),
            ))
    return out


def emit_json(reports: Sequence, path: str | Path) -> None:
    """Write spectral reports (or run records) as a JSON list."""
    payload = [r.to_dict() if hasattr(r, "to_dict") else asdict(r) for r in reports]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)


def read_json(path: str | Path) -> list[SpectralReport]:
    with open(path) as fh:
        return [SpectralReport.from_dict(item) for item in json.load(fh)]


def spectrum_report(grid: GridSpec, preconditioner: Optional[str] = None, *,
                    edge: Optional[int] = None, delta: float = 1e-1) -> SpectralReport:
    """Spectrum of ``A`` against ``psi_g``, or of ``P^{-1} A`` against ``+-1``."""
    if grid.size > EIG_LIMIT:
        raise ValueError(f"dense spectrum needs 2mn <= {EIG_LIMIT}, got {grid.size}")
    A = dense_saddle(grid)
    edge = 2 * grid.m if edge is None else edge
    if preconditioner in (None, "psi"):
        eigs = symmetric_eigenvalues(A)
        return compare_spectrum(eigs, sample_psi_g(grid), delta, edge=edge, grid=grid,
                                label="A vs psi_g")
    if grid.size > PRECOND_LIMIT:
        raise ValueError(f"preconditioned spectrum needs 2mn <= {PRECOND_LIMIT}, got {grid.size}")
    P = None if preconditioner == "none" else build_preconditioner(preconditioner, grid)
    eigs = preconditioned_spectrum(P, A)
    half = grid.size // 2
    target = np.concatenate([-np.ones(half), np.ones(half)])
    rep = compare_spectrum(eigs, target, 1e-2, edge=0, grid=grid, label=f"{preconditioner} vs +-1")
    rep.interval_check = cluster_check(eigs, tol=1e-2)
    return rep


def run_spectrum_study(config: ExperimentConfig) -> list[SpectralReport]:
    """Reports for every ``(gamma, m1, n)``; ``preconditioners`` add ``P^{-1}A`` spectra.

    The preconditioner name ``psi`` (the default when the list is empty)
    selects the comparison of ``A`` with the symbol samples.
    """
    config.validate()
    names = config.preconditioners or ["psi"]
    jobs, skipped = [], []
    for gamma in config.gammas:
        for m1 in config.m1s:
            for n in config.ns:
                grid = build_grid(config.d, m1, n, config.T, gamma)
                for name in names:
                    limit = EIG_LIMIT if name == "psi" else PRECOND_LIMIT
                    if grid.size > limit and not config.allow_large:
                        skipped.append(f"gamma={gamma:g} m1={m1} n={n} {name}: 2mn={grid.size} > {limit}")
                    else:
                        jobs.append((grid, name))
    for msg in skipped:
        log.warning("skipped %s", msg)

    def work(job):
        return spectrum_report(job[0], job[1])

    if config.workers == 1 or len(jobs) <= 1:
        return [work(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(work, jobs))


_GAMMAS = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10]
_H_1D = [2.0 ** -k for k in (7, 8, 9, 10)]
_H_2D = [2.0 ** -k for k in (5, 6, 7, 8)]

PRESETS: dict[str, ExperimentConfig] = {
    "table1": ExperimentConfig("example-1d", _GAMMAS, _H_1D, ["strang", "tau", "none"]),
    "table2": ExperimentConfig("example-1d", _GAMMAS, _H_1D, ["strang", "tau"]),
    "table3": ExperimentConfig("example-1d", _GAMMAS, _H_1D, ["mod-strang", "mod-tau"]),
    "table4": ExperimentConfig("example-2d", _GAMMAS, _H_2D, ["strang", "tau", "none"]),
    "table5": ExperimentConfig("example-2d", _GAMMAS, _H_2D, ["strang", "tau"]),
    "table6": ExperimentConfig("example-2d", _GAMMAS, _H_2D, ["mod-strang", "mod-tau"]),
    "figures1d": ExperimentConfig("example-1d", [1e-4, 1e-6, 1e-8], [], ["psi"], mode="spectrum",
                                  m1s=[15], ns=[32, 64, 128]),
    "figures2d": ExperimentConfig("example-2d", [1e-4, 1e-6, 1e-8], [], ["psi"], mode="spectrum",
                                  m1s=[7], ns=[32, 64, 128]),
    "precond1d": ExperimentConfig("example-1d", [1e-6, 1e-8], [],
                                  ["none", "strang", "tau", "mod-strang", "mod-tau"],
                                  mode="spectrum", m1s=[32], ns=[32]),
    "precond2d": ExperimentConfig("example-2d", [1e-6, 1e-8], [],
                                  ["none", "strang", "tau", "mod-strang", "mod-tau"],
                                  mode="spectrum", m1s=[4], ns=[16]),
}


def get_preset(name: str, **overrides) -> ExperimentConfig:
    try:
        base = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(base, **overrides)
