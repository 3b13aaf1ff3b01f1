"""Energy-aware density optimization for two-tier deployments.

OP1 maximizes coverage under an area-power budget; OP2 maximizes energy
efficiency under a coverage floor.  Both run an exhaustive log-spaced grid
first and optionally polish the best feasible point with a Nelder-Mead
simplex in log10-density coordinates.
"""
from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .analytic import (ANALYTIC_SPEC, CoverageBreakdown, coverage,
                       energy_efficiency, potential_throughput)
from .model import NetworkConfig, Scheme, area_power
from .montecarlo import thread_count
from .numerics import QuadratureError, QuadratureSpec

PENALTY = 1e3
FEAS_TOL = 1e-12


class ProblemKind(str, enum.Enum):
    OP1 = "op1"
    OP2 = "op2"


def total_area_power(cfg: NetworkConfig) -> float:
    """Area power consumption sum(lambda_k (a_k P_k + b_k)) in W/m^2."""
    return area_power(cfg)


@dataclass(frozen=True)
class DensityGrid:
    """Log-spaced density axis in BS/m^2."""

    min: float
    max: float
    points: int

    def __post_init__(self):
        if not self.min > 0:
            raise ValueError("grid minimum must be > 0")
        if self.max < self.min:
            raise ValueError("grid maximum is below the minimum")
        if self.points < 2:
            raise ValueError("a grid needs at least 2 points")

    def values(self) -> np.ndarray:
        return np.logspace(math.log10(self.min), math.log10(self.max), self.points)


@dataclass(frozen=True)
class OptProblem:
    kind: ProblemKind
    base_cfg: NetworkConfig
    constraint: float  # P^max in W/m^2 (OP1) or minimum coverage (OP2)
    grid: tuple[DensityGrid, ...]
    refine: bool = False
    scheme: Scheme = Scheme.MARP
    spec: QuadratureSpec = ANALYTIC_SPEC
    max_refine_evals: int = 60

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind(self.kind))
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "grid", tuple(self.grid))
        if len(self.grid) != self.base_cfg.n_tiers:
            raise ValueError("need one density grid per tier")
        if self.kind is ProblemKind.OP1 and not self.constraint > 0:
            raise ValueError("OP1 needs a power budget > 0")
        if self.kind is ProblemKind.OP2 and not 0 < self.constraint < 1:
            raise ValueError("OP2 needs a coverage floor in (0, 1)")


@dataclass(frozen=True)
class TraceEntry:
    densities: tuple[float, ...]
    objective: float
    constraint: float
    feasible: bool
    error: str | None = None


@dataclass(frozen=True)
class OptResult:
    argmax_densities: tuple[float, ...]
    objective: float
    constraint_value: float
    feasible: bool
    trace: tuple[TraceEntry, ...]
    constraint_bound: float = math.nan
    kind: ProblemKind = ProblemKind.OP1

    @property
    def slack(self) -> float:
        if self.kind is ProblemKind.OP1:
            return self.constraint_bound - self.constraint_value
        return self.constraint_value - self.constraint_bound


@dataclass(frozen=True)
class Metrics:
    coverage: CoverageBreakdown
    pt: float
    ee: float
    power: float


class Evaluator:
    """Memoized metric evaluation over densities.

    The coverage cache is keyed on the energy-free configuration, so it can
    be shared by problems that only differ in their energy scenario.
    """

    def __init__(self, base_cfg: NetworkConfig, scheme: Scheme = Scheme.MARP,
                 spec: QuadratureSpec = ANALYTIC_SPEC, cache: dict | None = None):
        self.base_cfg = base_cfg
        self.scheme = Scheme(scheme)
        self.spec = spec
        self.cache = {} if cache is None else cache

    def _key(self, densities):
        logs = tuple(round(math.log10(d), 10) if d > 0 else -math.inf for d in densities)
        return (self.base_cfg.coverage_key().with_densities([0.0] * len(densities)),
                self.scheme, self.spec, logs)

    def coverage(self, densities) -> CoverageBreakdown:
        key = self._key(densities)
        hit = self.cache.get(key)
        if hit is None:
            hit = coverage(self.base_cfg.with_densities(densities), self.scheme, self.spec)
            self.cache[key] = hit
        return hit

    def metrics(self, densities) -> Metrics:
        cfg = self.base_cfg.with_densities(densities)
        cov = self.coverage(densities)
        pt = potential_throughput(cfg, cov)
        power = area_power(cfg)
        ee = energy_efficiency(cfg, pt) if power > 0 else math.nan
        return Metrics(cov, pt, ee, power)


def _assess(problem: OptProblem, m: Metrics) -> tuple[float, float, float]:
    """(objective, constraint value, violation); violation <= 0 is feasible."""
    if problem.kind is ProblemKind.OP1:
        bound = problem.constraint
        return m.coverage.total, m.power, m.power - bound * (1.0 + FEAS_TOL)
    return m.ee, m.coverage.total, problem.constraint - m.coverage.total


def _evaluate(problem, evaluator, densities) -> tuple[TraceEntry, float]:
    densities = tuple(float(d) for d in densities)
    try:
        m = evaluator.metrics(densities)
    except (QuadratureError, ValueError, ArithmeticError) as exc:
        return TraceEntry(densities, math.nan, math.nan, False, str(exc)), math.inf
    obj, con, viol = _assess(problem, m)
    return TraceEntry(densities, obj, con, viol <= 0), viol


def _lattice(problem):
    return list(itertools.product(*(g.values() for g in problem.grid)))


def _grid_phase(problem, evaluator, threads):
    points = _lattice(problem)
    n = thread_count(threads)
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            return list(pool.map(lambda p: _evaluate(problem, evaluator, p), points))
    return [_evaluate(problem, evaluator, p) for p in points]


def _best(evaluated):
    best = None
    for entry, viol in evaluated:
        if entry.feasible and entry.error is None:
            if best is None or entry.objective > best[0].objective:
                best = (entry, viol)
    return best


def _least_violating(evaluated):
    ok = [(e, v) for e, v in evaluated if e.error is None]
    if not ok:
        return None
    return min(ok, key=lambda ev: ev[1])


def _refine(problem, evaluator, start, evaluated):
    lows = np.array([math.log10(g.min) for g in problem.grid])
    highs = np.array([math.log10(g.max) for g in problem.grid])
    steps = np.array([(math.log10(g.max) - math.log10(g.min)) / (g.points - 1)
                      for g in problem.grid])
    x0 = np.log10(np.asarray(start, dtype=float))

    def penalized(x):
        clipped = np.clip(x, lows, highs)
        outside = float(np.sum(np.abs(x - clipped)))
        entry, viol = _evaluate(problem, evaluator, 10.0 ** clipped)
        evaluated.append((entry, viol))
        if entry.error is not None:
            return 1e6
        return -(entry.objective - PENALTY * (max(0.0, viol) + outside))

    simplex = [x0] + [x0 + 0.5 * steps[i] * np.eye(x0.size)[i] for i in range(x0.size)]
    minimize(penalized, x0, method="Nelder-Mead",
             options=dict(initial_simplex=np.array(simplex), maxfev=problem.max_refine_evals,
                          xatol=1e-3, fatol=1e-7))


def solve(problem: OptProblem, *, evaluator: Evaluator | None = None,
          warm_start: Sequence[float] | None = None, threads: int | None = None) -> OptResult:
    """Grid search plus optional simplex polish; returns the best feasible point."""
    if evaluator is None:
        evaluator = Evaluator(problem.base_cfg, problem.scheme, problem.spec)
    evaluated = _grid_phase(problem, evaluator, threads)

    if problem.refine:
        if warm_start is not None and all(d > 0 for d in warm_start):
            box = [min(max(d, g.min), g.max) for d, g in zip(warm_start, problem.grid)]
            evaluated.append(_evaluate(problem, evaluator, box))
        start = _best(evaluated) or _least_violating(evaluated)
        if start is not None:
            _refine(problem, evaluator, start[0].densities, evaluated)

    best = _best(evaluated)
    trace = tuple(e for e, _ in evaluated)
    if best is not None:
        entry = best[0]
        return OptResult(entry.densities, entry.objective, entry.constraint, True, trace,
                         problem.constraint, problem.kind)
    fallback = _least_violating(evaluated)
    if fallback is None:
        nan = (math.nan,) * problem.base_cfg.n_tiers
        return OptResult(nan, math.nan, math.nan, False, trace, problem.constraint, problem.kind)
    entry = fallback[0]
    return OptResult(entry.densities, entry.objective, entry.constraint, False, trace,
                     problem.constraint, problem.kind)


def sweep(problem: OptProblem, constraint_values: Sequence[float], *,
          cache: dict | None = None, threads: int | None = None) -> list[OptResult]:
    """Solve once per constraint value, sharing evaluations between solves."""
    values = list(constraint_values)
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValueError("constraint values must be sorted ascending")
    evaluator = Evaluator(problem.base_cfg, problem.scheme, problem.spec, cache)
    results = []
    previous = None
    for value in values:
        try:
            sub = replace(problem, constraint=value)
            res = solve(sub, evaluator=evaluator, threads=threads,
                        warm_start=previous.argmax_densities if previous and previous.feasible else None)
        except (QuadratureError, ValueError, ArithmeticError) as exc:
            nan = (math.nan,) * problem.base_cfg.n_tiers
            res = OptResult(nan, math.nan, math.nan, False,
                            (TraceEntry(nan, math.nan, math.nan, False, str(exc)),),
                            value, problem.kind)
        results.append(res)
        previous = res
    return results


