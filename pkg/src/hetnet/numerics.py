"""Quadrature backbone.

Every integral in the coverage expressions is a nest of one-dimensional
integrals, so this module only provides 1-D rules:

* ``lognormal_expectation`` -- Gauss-Hermite rule for E[f(g)] when
  ``10*log10(g)`` is a zero-mean Gaussian with a dB-domain spread.
* ``integrate`` -- globally adaptive Gauss-Kronrod (G7/K15) on a finite
  interval.  The integrand is evaluated on whole arrays of nodes and may
  return a *batch* of integrands (leading axes), which share one panel
  refinement.
* ``integrate_improper`` -- [a, inf) mapped onto [0, 1).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.hermite import hermgauss

ArrayFunc = Callable[[np.ndarray], np.ndarray]


class QuadratureError(ArithmeticError):
    """Adaptive subdivision ran out of budget.

    Carries the best estimate and its error bound.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class DivergenceError(QuadratureError):
    """The integrand on [a, inf) does not decay fast enough to integrate."""


class NonFiniteIntegrandError(QuadratureError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-6
    abs_tol: float = 1e-10
    max_subdivisions: int = 200
    hermite_order: int = 30
    tail_epsilon: float = 1e-9

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "tail_epsilon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.hermite_order < 5:
            raise ValueError("hermite_order must be >= 5")


DEFAULT_SPEC = QuadratureSpec()

# Kronrod 15-point abscissae (positive half, descending) and weights; the
# odd-indexed abscissae together with 0 are the embedded 7-point Gauss rule.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
_GAUSS_W = np.zeros(15)
_GAUSS_W[[1, 3, 5]] = _WG[:3]
_GAUSS_W[7] = _WG[3]
_GAUSS_W[[13, 11, 9]] = _WG[:3]


@lru_cache(maxsize=None)
def hermite_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes ``z`` and weights ``w`` with ``E[f(Z)] ~ sum(w * f(z))``, Z ~ N(0, 1)."""
    x, w = hermgauss(order)
    z = np.sqrt(2.0) * x
    w = w / np.sqrt(np.pi)
    z.setflags(write=False)
    w.setflags(write=False)
    return z, w


def lognormal_nodes(sigma_db: float, spec: QuadratureSpec = DEFAULT_SPEC):
    """Shadowing gains and weights for a dB-domain Gaussian spread.

    Returns ``(g, w)`` such that ``E[f(g)] ~ sum(w * f(g))`` where
    ``g = 10**(X/10)``, ``X ~ N(0, sigma_db**2)``.  A zero spread collapses
    to the point mass at g = 1.
    """
    if not sigma_db >= 0 or not np.isfinite(sigma_db):
        raise ValueError(f"sigma_db must be finite and >= 0, got {sigma_db!r}")
    if sigma_db == 0:
        return np.ones(1), np.ones(1)
    z, w = hermite_rule(spec.hermite_order)
    return 10.0 ** (sigma_db * z / 10.0), w


def lognormal_expectation(f: ArrayFunc, sigma_db: float,
                          spec: QuadratureSpec = DEFAULT_SPEC):
    """E[f(g)] for log-normal shadowing ``g`` with dB spread ``sigma_db``.

    ``f`` receives the 1-D array of shadowing nodes and must return an array
    whose last axis runs over those nodes; leading axes are kept, so a batch
    of expectations can be taken in one call.
    """
    g, w = lognormal_nodes(sigma_db, spec)
    values = np.asarray(f(g), dtype=float)
    if values.shape[-1:] != g.shape:
        raise ValueError("integrand must return an array whose last axis matches the nodes")
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        node = g[bad[-1]]
        raise NonFiniteIntegrandError(
            f"non-finite integrand value at shadowing node g={node!r}")
    return values @ w


def _eval_panels(f, lo, hi):
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = (center[:, None] + half[:, None] * _NODES).ravel()
    fx = np.asarray(f(x), dtype=float)
    if fx.shape[-1] != x.size:
        raise ValueError("integrand must return an array whose last axis matches the nodes")
    if not np.all(np.isfinite(fx)):
        bad = np.argwhere(~np.isfinite(fx))[0]
        raise NonFiniteIntegrandError(f"non-finite integrand value at x={x[bad[-1]]!r}")
    fx = fx.reshape(fx.shape[:-1] + (lo.size, 15))
    kronrod = (fx @ _KRONROD_W) * half
    gauss = (fx @ _GAUSS_W) * half
    return kronrod, np.abs(kronrod - gauss)


def integrate(f: ArrayFunc, a: float, b: float, spec: QuadratureSpec = DEFAULT_SPEC,
              *, full_output: bool = False):
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``.

    ``f`` is called with a 1-D array of abscissae and returns values with the
    abscissae on the last axis.  Panels are bisected until the summed error
    estimate satisfies ``err <= max(abs_tol, rel_tol * |result|)`` for every
    member of the batch.

    Raises
    ------
    QuadratureError
        If more than ``spec.max_subdivisions`` panels would be needed.
    """
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("integrate needs finite limits; use integrate_improper")
    if a > b:
        raise ValueError(f"lower limit {a!r} exceeds upper limit {b!r}")
    lo = np.array([float(a)])
    hi = np.array([float(b)])
    if a == b:
        value = np.asarray(f(lo), dtype=float)[..., 0] * 0.0
        return (value, value, lo, hi) if full_output else value

    est, err = _eval_panels(f, lo, hi)
    while True:
        total = est.sum(axis=-1)
        total_err = err.sum(axis=-1)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        if np.all(total_err <= tol):
            break
        # Score each panel by its worst share of the tolerance over the batch.
        score = (err / tol[..., None]).reshape(-1, lo.size).max(axis=0)
        split = score * lo.size > 1.0
        split[np.argmax(score)] = True
        n_new = lo.size + split.sum()
        if n_new > spec.max_subdivisions:
            raise QuadratureError(
                f"subdivision budget of {spec.max_subdivisions} panels exhausted "
                f"(error estimate {np.max(total_err):.3g})",
                estimate=total, error=total_err)
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        new_est, new_err = _eval_panels(f, new_lo, new_hi)
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        est = np.concatenate([est[..., keep], new_est], axis=-1)
        err = np.concatenate([err[..., keep], new_err], axis=-1)

    if full_output:
        return total, total_err, lo, hi
    return total


def integrate_improper(f: ArrayFunc, a: float, spec: QuadratureSpec = DEFAULT_SPEC,
                       *, scale: float = 1.0):
    """Integral of ``f`` over ``[a, inf)``.

    Uses ``y = a + scale * t / (1 - t)`` to map onto ``t in [0, 1)``;
    ``scale`` should be the length over which ``f`` does most of its work.
    Batched integrands are supported exactly as in :func:`integrate`.

    Raises
    ------
    DivergenceError
        If the integrand is not decaying faster than ``1/y`` or the
        unresolved error piles up against the point at infinity.
    """
    if not np.isfinite(a):
        raise ValueError("lower limit must be finite")
    if not scale > 0:
        raise ValueError("scale must be > 0")

    def mapped(t):
        one_minus = 1.0 - t
        y = a + scale * t / one_minus
        with np.errstate(over="ignore", under="ignore"):
            return np.asarray(f(y), dtype=float) * (scale / one_minus**2)

    _check_decay(f, a, scale, spec)
    try:
        total, total_err, lo, hi = integrate(mapped, 0.0, 1.0, spec, full_output=True)
    except QuadratureError as exc:
        if isinstance(exc, NonFiniteIntegrandError):
            raise
        raise DivergenceError(
            f"improper integral did not converge: {exc}",
            estimate=exc.estimate, error=exc.error) from exc
    return total


def _check_decay(f, a, scale, spec):
    # y*|f(y)| must shrink far out for the tail to be integrable.
    y = a + scale * np.array([1e6, 1e9, 1e12])
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        fy = np.abs(np.asarray(f(y), dtype=float))
    tail = (fy * y).reshape(-1, 3).max(axis=0)
    if not np.all(np.isfinite(tail)):
        raise DivergenceError("integrand is not finite far out on [a, inf)")
    if tail[2] > spec.tail_epsilon and tail[2] >= 0.5 * tail[0]:
        raise DivergenceError(
            "integrand does not decay faster than 1/y; the improper integral diverges")
