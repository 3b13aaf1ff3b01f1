"""Brute-force Monte Carlo oracle for the coverage metrics.

Each trial draws finite PPP realizations around a typical user at the
origin, thins them into LoS/NLoS links, applies log-normal shadowing and
Rayleigh fading, and evaluates both association schemes on the same draw.

Trials are seeded from ``(seed, trial index)`` through a counter-based
Philox generator, so estimates are bit-identical for any thread count.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .analytic import energy_efficiency
from .model import Link, NetworkConfig, Scheme, area_power

MAX_POINTS = 5_000_000
_CHUNK = 256


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class SimSpec:
    trials: int = 10_000
    region_radius: float = 0.0  # 0 -> automatic
    seed: int = 0
    ci_level: float = 0.95

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 < self.ci_level < 1:
            raise ValueError("ci_level must lie in (0, 1)")
        if self.region_radius < 0:
            raise ValueError("region_radius must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    ci_low: float
    ci_high: float
    trials: int


@dataclass
class Realization:
    """BS snapshot seen from the origin, ordered by tier then BS index."""

    tier: np.ndarray
    distance: np.ndarray
    los: np.ndarray
    shadow: np.ndarray
    fading: np.ndarray
    avg_power: np.ndarray
    threshold: np.ndarray
    noise_w: float

    @property
    def inst_power(self) -> np.ndarray:
        return self.avg_power * self.fading

    def __len__(self):
        return self.tier.size


def resolve_radius(cfg: NetworkConfig, spec: SimSpec) -> float:
    if spec.region_radius > 0:
        return spec.region_radius
    positive = [t.density for t in cfg.tiers if t.density > 0]
    if not positive:
        return 2000.0
    return max(2000.0, 15.0 / math.sqrt(math.pi * min(positive)))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, trial], dtype=np.uint64)))


def sample_realization(cfg: NetworkConfig, spec: SimSpec, rng: np.random.Generator,
                       radius: float | None = None) -> Realization:
    radius = resolve_radius(cfg, spec) if radius is None else radius
    parts = []
    for k, tier in enumerate(cfg.tiers):
        mean_count = tier.density * math.pi * radius**2
        if mean_count > MAX_POINTS:
            raise ConfigurationError(
                f"tier {k + 1} would need ~{mean_count:.3g} BSs per trial "
                f"(cap {MAX_POINTS}); shrink region_radius or the density")
        n = int(rng.poisson(mean_count)) if mean_count > 0 else 0
        d = radius * np.sqrt(rng.random(n))
        los = rng.random(n) < cfg.los_model.los(d)
        sigma = np.where(los, tier.shadow_sigma_l_db, tier.shadow_sigma_nl_db)
        shadow = 10.0 ** (sigma * rng.standard_normal(n) / 10.0)
        fading = rng.exponential(1.0, n)
        if n:
            b = np.where(los, cfg.b(k, Link.L), cfg.b(k, Link.NL))
            alpha = np.where(los, tier.alpha_l, tier.alpha_nl)
            avg = b * shadow * d ** (-alpha)
        else:
            avg = np.zeros(0)
        parts.append((np.full(n, k), d, los, shadow, fading, avg,
                      np.full(n, tier.threshold)))
    cols = [np.concatenate(c) for c in zip(*parts)]
    return Realization(*cols, noise_w=cfg.noise_w)


def associate(real: Realization, scheme: Scheme | str) -> int | None:
    """Index of the serving BS; ties go to the lower tier, then lower index."""
    if len(real) == 0:
        return None
    power = real.inst_power if Scheme(scheme) is Scheme.MIRP else real.avg_power
    return int(np.argmax(power))


def sinr(real: Realization, serving: int) -> float:
    p = real.inst_power
    interference = math.fsum(np.delete(p, serving))
    return float(p[serving] / (interference + real.noise_w))


@dataclass(frozen=True)
class TrialRecords:
    """Per-trial outcomes for one scheme; tier is -1 when no BS exists."""

    scheme: Scheme
    tier: np.ndarray
    los: np.ndarray
    sinr_db: np.ndarray
    success: np.ndarray


def _run_trial(cfg, spec, radius, trial):
    real = sample_realization(cfg, spec, trial_rng(spec.seed, trial), radius)
    if len(real) == 0:
        return None
    p = real.inst_power
    total = math.fsum(p)
    all_sinr = p / (total - p + real.noise_w)
    out = {}
    # Union event for MIRP: any BS beating its own tier threshold.
    covered = all_sinr > real.threshold
    if covered.any():
        idx = int(np.flatnonzero(covered)[np.argmax(p[covered])])
        out[Scheme.MIRP] = (idx, True)
    else:
        out[Scheme.MIRP] = (int(np.argmax(p)), False)
    idx = associate(real, Scheme.MARP)
    out[Scheme.MARP] = (idx, bool(all_sinr[idx] > real.threshold[idx]))
    return {s: (int(real.tier[i]), bool(real.los[i]), float(10 * np.log10(all_sinr[i])), ok)
            for s, (i, ok) in out.items()}


def _run_chunk(cfg, spec, radius, start, stop):
    return [_run_trial(cfg, spec, radius, t) for t in range(start, stop)]


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("HETNET_THREADS", "1") or 1)
    return max(1, threads)


def simulate(cfg: NetworkConfig, spec: SimSpec = SimSpec(), *,
             threads: int | None = None) -> dict[Scheme, TrialRecords]:
    """Run every trial once and record the outcome under both schemes."""
    radius = resolve_radius(cfg, spec)
    bounds = [(i, min(i + _CHUNK, spec.trials)) for i in range(0, spec.trials, _CHUNK)]
    n_threads = thread_count(threads)
    if n_threads == 1:
        chunks = [_run_chunk(cfg, spec, radius, a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            chunks = list(pool.map(lambda ab: _run_chunk(cfg, spec, radius, *ab), bounds))
    rows = [r for chunk in chunks for r in chunk]  # chunks come back in trial order

    records = {}
    for scheme in Scheme:
        tier = np.full(spec.trials, -1, dtype=int)
        los = np.zeros(spec.trials, dtype=bool)
        sinr_db = np.full(spec.trials, -np.inf)
        success = np.zeros(spec.trials, dtype=bool)
        for i, row in enumerate(rows):
            if row is not None:
                tier[i], los[i], sinr_db[i], success[i] = row[scheme]
        records[scheme] = TrialRecords(scheme, tier, los, sinr_db, success)
    return records


def wald(successes: np.ndarray, ci_level: float) -> McEstimate:
    n = successes.size
    mean = float(np.mean(successes))
    if n < 2:
        se = 0.5  # largest possible Bernoulli spread
    else:
        se = math.sqrt(mean * (1.0 - mean) / n)
    z = float(norm.ppf(0.5 + ci_level / 2.0))
    return McEstimate(mean, se, mean - z * se, mean + z * se, n)


@dataclass(frozen=True)
class CoverageEstimate:
    total: McEstimate
    per_tier: tuple[McEstimate, ...]
    nl_part: McEstimate
    l_part: McEstimate
    records: TrialRecords


def coverage_from_records(rec: TrialRecords, n_tiers: int, ci_level: float) -> CoverageEstimate:
    ok = rec.success
    return CoverageEstimate(
        total=wald(ok, ci_level),
        per_tier=tuple(wald(ok & (rec.tier == k), ci_level) for k in range(n_tiers)),
        nl_part=wald(ok & ~rec.los, ci_level),
        l_part=wald(ok & rec.los, ci_level),
        records=rec,
    )


def estimate_coverage(cfg: NetworkConfig, spec: SimSpec = SimSpec(),
                      scheme: Scheme | str = Scheme.MARP, *,
                      threads: int | None = None) -> CoverageEstimate:
    rec = simulate(cfg, spec, threads=threads)[Scheme(scheme)]
    return coverage_from_records(rec, cfg.n_tiers, spec.ci_level)


def pt_ee_from_per_tier(cfg: NetworkConfig, per_tier: Sequence[McEstimate],
                        ci_level: float = 0.95) -> tuple[McEstimate, McEstimate]:
    """Plug per-tier estimates into PT and EE, propagating SEs linearly."""
    weights = [t.density * math.log2(1.0 + t.threshold) for t in cfg.tiers]
    pt = math.fsum(w * e.mean for w, e in zip(weights, per_tier))
    se = math.fsum(w * e.std_error for w, e in zip(weights, per_tier))
    z = float(norm.ppf(0.5 + ci_level / 2.0))
    n = min(e.trials for e in per_tier)
    pt_est = McEstimate(pt, se, pt - z * se, pt + z * se, n)
    denom = area_power(cfg)
    if denom > 0:
        ee = energy_efficiency(cfg, pt)
        ee_se = se / denom
        ee_est = McEstimate(ee, ee_se, ee - z * ee_se, ee + z * ee_se, n)
    else:
        ee_est = McEstimate(math.nan, math.nan, math.nan, math.nan, n)
    return pt_est, ee_est


def estimate_pt_ee(cfg: NetworkConfig, spec: SimSpec = SimSpec(),
                   scheme: Scheme | str = Scheme.MARP, *,
                   threads: int | None = None) -> tuple[McEstimate, McEstimate]:
    est = estimate_coverage(cfg, spec, scheme, threads=threads)
    return pt_ee_from_per_tier(cfg, est.per_tier, spec.ci_level)


DUMP_HEADER = ("trial", "serving_tier", "link", "sinr_db", "success")


def write_trial_dump(records: TrialRecords, stream) -> None:
    """One delimited row per trial; tier is 1-based, 0 when no BS was drawn."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(DUMP_HEADER)
    for i in range(records.tier.size):
        served = records.tier[i] >= 0
        w.writerow((i, int(records.tier[i]) + 1,
                    ("L" if records.los[i] else "NL") if served else "",
                    f"{records.sinr_db[i]:.6f}" if served else "",
                    int(records.success[i])))
