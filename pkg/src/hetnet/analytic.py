"""Analytic coverage, potential throughput and energy efficiency.

Each BS is mapped to its *equivalent distance* ``|X| (B g)^(-1/alpha)``, which
turns the received power into a pure power law.  Per tier and link type the
mapped points form an inhomogeneous PPP whose intensity measure and density
are provided by :class:`TransformedIntensity`.  Coverage is then a 1-D
integral over the serving equivalent distance of a product of interference
Laplace transforms (and, for MARP, a void probability).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import Link, NetworkConfig, Scheme, area_power
from .numerics import (QuadratureSpec, integrate, integrate_improper,
                       lognormal_nodes)

LINKS = (Link.NL, Link.L)

ANALYTIC_SPEC = QuadratureSpec(rel_tol=1e-6, abs_tol=1e-10, max_subdivisions=400)


class ValidityError(ValueError):
    """A result was requested outside the conditions under which it holds."""


@dataclass(frozen=True)
class CoverageBreakdown:
    scheme: Scheme
    parts: tuple[tuple[float, float], ...]  # per tier: (NL part, L part)
    total: float = field(init=False)
    per_tier: tuple[float, ...] = field(init=False)
    nl_part: float = field(init=False)
    l_part: float = field(init=False)

    def __post_init__(self):
        per_tier = tuple(nl + l for nl, l in self.parts)
        object.__setattr__(self, "per_tier", per_tier)
        object.__setattr__(self, "nl_part", math.fsum(p[0] for p in self.parts))
        object.__setattr__(self, "l_part", math.fsum(p[1] for p in self.parts))
        object.__setattr__(self, "total", math.fsum(per_tier))


class TransformedIntensity:
    """Intensity measure and density of one tier/link equivalent-distance PPP.

    ``measure(t)`` is the expected number of points with equivalent distance
    at most ``t``; ``density(t)`` is its derivative, obtained by
    differentiating under the shadowing expectation.
    """

    def __init__(self, cfg: NetworkConfig, k: int, link: Link,
                 spec: QuadratureSpec = ANALYTIC_SPEC):
        tier = cfg.tiers[k]
        self.k = k
        self.link = Link(link)
        self.density_bs = tier.density
        self.alpha = tier.alpha(self.link)
        self.los_model = cfg.los_model
        self.spec = spec
        self.empty = tier.density == 0 or (self.link is Link.L and cfg.los_model.never_los)
        if tier.density > 0:
            self.b = cfg.b(k, self.link)
            g, w = lognormal_nodes(tier.sigma_db(self.link), spec)
            self._scale = (self.b * g) ** (1.0 / self.alpha)  # physical / equivalent
            self._w = w
        else:
            self.b = 0.0

    def measure(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("equivalent distance must be >= 0")
        if self.empty:
            return np.zeros_like(t)
        z = t[..., None] * self._scale
        vals = self.los_model.moment(self.link, z)
        return 2.0 * math.pi * self.density_bs * (vals @ self._w)

    def density(self, t):
        t = np.asarray(t, dtype=float)
        if self.empty:
            return np.zeros_like(t)
        z = t[..., None] * self._scale
        vals = self.los_model.prob(self.link, z) * z * self._scale
        return 2.0 * math.pi * self.density_bs * (vals @ self._w)

    def laplace_exponent(self, s, u_lower: float = 0.0):
        """``int_{u_lower s^(1/alpha)}^inf density(y) / (1 + y^alpha / s) dy``.

        Integrated in ``u = y / s^(1/alpha)`` so that one panel refinement
        serves the whole batch of ``s`` values.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.zeros_like(s)
        if self.empty:
            return out
        live = s > 0
        if not np.any(live):
            return out
        q = s[live] ** (1.0 / self.alpha)
        alpha = self.alpha

        def integrand(u):
            with np.errstate(over="ignore"):
                kernel = 1.0 / (1.0 + u**alpha)
            return q[:, None] * self.density(q[:, None] * u[None, :]) * kernel

        out[live] = integrate_improper(integrand, u_lower, self.spec)
        return out

    def median_distance(self) -> float:
        """Equivalent distance holding half the points (capped at one point)."""
        grid = np.logspace(-6, 12, 181)
        m = self.measure(grid)
        target = 0.5 * min(1.0, m[-1])
        if target <= 0:
            return 1.0
        idx = int(np.searchsorted(m, target))
        return float(grid[min(idx, grid.size - 1)])


def _intensities(cfg, spec):
    return {(j, link): TransformedIntensity(cfg, j, link, spec)
            for j in range(cfg.n_tiers) for link in LINKS}


def transformed_measure(cfg: NetworkConfig, k: int, link: Link, t,
                        spec: QuadratureSpec = ANALYTIC_SPEC):
    out = TransformedIntensity(cfg, k, link, spec).measure(t)
    return float(out) if np.ndim(out) == 0 else out


def transformed_density(cfg: NetworkConfig, k: int, link: Link, t,
                        spec: QuadratureSpec = ANALYTIC_SPEC):
    if np.any(np.asarray(t) <= 0):
        raise ValueError("transformed_density needs t > 0")
    out = TransformedIntensity(cfg, k, link, spec).density(t)
    return float(out) if np.ndim(out) == 0 else out


def _scalar_or_array(x, like):
    return float(x[0]) if np.ndim(like) == 0 else x.reshape(np.shape(like))


def laplace_mirp(cfg: NetworkConfig, j: int, link: Link, s,
                 spec: QuadratureSpec = ANALYTIC_SPEC):
    """Laplace transform of the tier-``j`` interference over ``link`` at ``s``."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("s must be >= 0")
    expo = TransformedIntensity(cfg, j, link, spec).laplace_exponent(s_arr.ravel(), 0.0)
    return _scalar_or_array(np.exp(-expo), s)


def laplace_marp(cfg: NetworkConfig, j: int, link: Link, s, lower,
                 spec: QuadratureSpec = ANALYTIC_SPEC):
    """As :func:`laplace_mirp` with interferers restricted to ``[lower, inf)``."""
    s_arr, lo_arr = np.broadcast_arrays(np.asarray(s, dtype=float),
                                        np.asarray(lower, dtype=float))
    if np.any(s_arr < 0) or np.any(lo_arr < 0):
        raise ValueError("s and lower must be >= 0")
    inten = TransformedIntensity(cfg, j, link, spec)
    s_flat, lo_flat = s_arr.ravel(), lo_arr.ravel()
    expo = np.zeros_like(s_flat)
    with np.errstate(divide="ignore", invalid="ignore"):
        u_lo = np.where(s_flat > 0, lo_flat / s_flat ** (1.0 / inten.alpha), np.inf)
    finite = np.isfinite(u_lo)
    for value in np.unique(u_lo[finite]):
        sel = finite & (u_lo == value)
        expo[sel] = inten.laplace_exponent(s_flat[sel], float(value))
    return _scalar_or_array(np.exp(-expo), np.broadcast(np.asarray(s), np.asarray(lower)))


def _check_mirp_thresholds(cfg):
    for k, tier in enumerate(cfg.tiers):
        if tier.density > 0 and tier.threshold < 1.0 - 1e-12:
            raise ValidityError(
                f"MIRP coverage requires every SINR threshold >= 0 dB; tier {k + 1} "
                f"has {tier.sinr_threshold_db} dB (use MARP for lower thresholds)")


def _term_integrand(cfg, inten, k, link, scheme, *, truncate=True, void=True):
    """Integrand over the serving equivalent distance for tier ``k``/``link``."""
    serving = inten[(k, link)]
    thr = cfg.tiers[k].threshold
    noise = cfg.noise_w
    a = serving.alpha
    marp = Scheme(scheme) is Scheme.MARP
    others = [(key, it) for key, it in inten.items() if not it.empty]

    def f(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        with np.errstate(over="ignore"):
            s = thr * r**a
        ok = (r > 0) & (s < 1e250)
        r_ok, s_ok = r[ok], s[ok]
        expo = thr * noise * r_ok**a
        for (j, v), it in others:
            u_lo = thr ** (-1.0 / it.alpha) if (marp and truncate) else 0.0
            expo = expo + it.laplace_exponent(s_ok, u_lo)
            if marp and void:
                expo = expo + it.measure(r_ok ** (a / it.alpha))
        out[ok] = serving.density(r_ok) * np.exp(-expo)
        return out

    return f


def _term(cfg, inten, k, link, scheme, spec):
    serving = inten[(k, link)]
    if serving.empty:
        return 0.0
    f = _term_integrand(cfg, inten, k, link, scheme)
    return float(integrate_improper(f, 0.0, spec, scale=serving.median_distance()))


def _coverage(cfg, scheme, spec):
    inten = _intensities(cfg, spec)
    parts = tuple(
        tuple(_term(cfg, inten, k, link, scheme, spec) for link in LINKS)
        for k in range(cfg.n_tiers)
    )
    return CoverageBreakdown(scheme=Scheme(scheme), parts=parts)


def coverage_mirp(cfg: NetworkConfig, spec: QuadratureSpec = ANALYTIC_SPEC) -> CoverageBreakdown:
    """Coverage under max-instantaneous-power association.

    Only valid when every deployed tier has a threshold of at least 0 dB;
    otherwise :class:`ValidityError` is raised.
    """
    _check_mirp_thresholds(cfg)
    return _coverage(cfg, Scheme.MIRP, spec)


def coverage_marp(cfg: NetworkConfig, spec: QuadratureSpec = ANALYTIC_SPEC) -> CoverageBreakdown:
    """Coverage under max-average-power association (any thresholds)."""
    return _coverage(cfg, Scheme.MARP, spec)


def coverage(cfg: NetworkConfig, scheme: Scheme | str,
             spec: QuadratureSpec = ANALYTIC_SPEC) -> CoverageBreakdown:
    scheme = Scheme(scheme)
    return coverage_mirp(cfg, spec) if scheme is Scheme.MIRP else coverage_marp(cfg, spec)


def potential_throughput(cfg: NetworkConfig, per_tier: CoverageBreakdown | Sequence[float]) -> float:
    """Fixed-rate area throughput in bps/Hz/m^2."""
    if isinstance(per_tier, CoverageBreakdown):
        per_tier = per_tier.per_tier
    if len(per_tier) != cfg.n_tiers:
        raise ValueError(f"need {cfg.n_tiers} per-tier coverage values, got {len(per_tier)}")
    return math.fsum(t.density * p * math.log2(1.0 + t.threshold)
                     for t, p in zip(cfg.tiers, per_tier))


def energy_efficiency(cfg: NetworkConfig, pt: float) -> float:
    """Potential throughput per watt of area power consumption (bps/Hz/W)."""
    denom = area_power(cfg)
    if not denom > 0:
        raise ValueError("energy efficiency is undefined: total area power is zero")
    return pt / denom
