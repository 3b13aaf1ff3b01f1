"""Domain vocabulary: tiers, LoS probability models, power and energy models.

Units: densities in BS/m^2, distances in m, powers in W internally.  dB and
dBm only appear in field names that say so.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.special import exp1

M2_PER_KM2 = 1e6


def per_km2_to_per_m2(x):
    """BS/km^2 to BS/m^2 (division keeps round values such as 10/km^2 exact)."""
    return x / M2_PER_KM2


def per_m2_to_per_km2(x):
    return x * M2_PER_KM2


class Link(str, enum.Enum):
    NL = "NL"
    L = "L"


class Scheme(str, enum.Enum):
    MIRP = "MIRP"
    MARP = "MARP"


class PowerModel(str, enum.Enum):
    FIXED = "fixed"
    DENSITY_DEPENDENT = "density"


def db_to_linear(x_db):
    x = np.asarray(x_db, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"dB value must be finite, got {x_db!r}")
    out = 10.0 ** (x / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("linear ratio must be > 0")
    out = 10.0 * np.log10(x)
    return float(out) if out.ndim == 0 else out


def dbm_to_watts(p_dbm):
    return db_to_linear(np.asarray(p_dbm, dtype=float) - 30.0)


def watts_to_dbm(p_w):
    return linear_to_db(p_w) + 30.0


# -- LoS probability models ---------------------------------------------------


class LosModel:
    """Distance -> LoS probability, shared by every tier.

    Subclasses implement ``los`` (vectorized p^L) and ``los_moment``, the
    closed form of ``int_0^x p^L(z) z dz`` that the intensity measure needs.
    """

    def los(self, d):
        raise NotImplementedError

    def los_moment(self, x):
        raise NotImplementedError

    def nlos(self, d):
        return 1.0 - self.los(d)

    def nlos_moment(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * x * x - self.los_moment(x)

    def prob(self, link: Link, d):
        return self.los(d) if link is Link.L else self.nlos(d)

    def moment(self, link: Link, x):
        return self.los_moment(x) if link is Link.L else self.nlos_moment(x)

    @property
    def never_los(self) -> bool:
        return False


@dataclass(frozen=True)
class ExponentialLos(LosModel):
    """p^L(d) = exp(-kappa d), kappa in 1/m."""

    kappa: float

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be a positive finite number, got {self.kappa!r}")

    def los(self, d):
        return np.exp(-self.kappa * np.asarray(d, dtype=float))

    def los_moment(self, x):
        kx = self.kappa * np.asarray(x, dtype=float)
        # 1 - e^{-u}(1 + u), written to stay accurate for small u
        small = kx < 1e-3
        u = np.where(small, kx, 0.0)
        series = u * u * (0.5 - u / 3.0 + u * u / 8.0)
        with np.errstate(over="ignore"):
            direct = -np.expm1(-kx) - kx * np.exp(-kx)
        return np.where(small, series, direct) / self.kappa**2


@dataclass(frozen=True)
class ThreeGppLinearLos(LosModel):
    """p^L(d) = max(0, 1 - d/d1)."""

    d1: float

    def __post_init__(self):
        if not (self.d1 > 0 and math.isfinite(self.d1)):
            raise ValueError(f"d1 must be a positive finite number, got {self.d1!r}")

    def los(self, d):
        return np.clip(1.0 - np.asarray(d, dtype=float) / self.d1, 0.0, 1.0)

    def los_moment(self, x):
        x = np.minimum(np.asarray(x, dtype=float), self.d1)
        return 0.5 * x * x - x**3 / (3.0 * self.d1)


@dataclass(frozen=True)
class ThreeGppTwoPieceLos(LosModel):
    """Two-piece exponential LoS probability.

    ``1 - 5 exp(-d0/d)`` up to ``d1``, then ``5 c exp(-d/d1)`` with ``c``
    making the curve continuous at ``d1``.  Requires ``d1 <= d0 / ln 5`` so
    that the first piece stays non-negative.
    """

    d0: float
    d1: float

    def __post_init__(self):
        if not (self.d0 > 0 and self.d1 > 0):
            raise ValueError("d0 and d1 must be > 0")
        if self.d1 > self.d0 / math.log(5.0):
            raise ValueError(
                f"d1={self.d1} exceeds d0/ln5={self.d0 / math.log(5.0):.4g}; "
                "the first piece would go negative")

    @property
    def _c(self):
        return (1.0 - 5.0 * math.exp(-self.d0 / self.d1)) / (5.0 * math.exp(-1.0))

    def los(self, d):
        d = np.asarray(d, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            near = 1.0 - 5.0 * np.exp(-self.d0 / np.where(d > 0, d, 1.0))
        near = np.where(d > 0, near, 1.0)
        far = 5.0 * self._c * np.exp(-d / self.d1)
        return np.clip(np.where(d <= self.d1, near, far), 0.0, 1.0)

    def _near_moment(self, x):
        # int_0^x (1 - 5 e^{-a/z}) z dz with
        # int_0^x z e^{-a/z} dz = (x^2/2 - a x/2) e^{-a/x} + a^2/2 E1(a/x)
        a = self.d0
        xs = np.where(x > 0, x, 1.0)
        with np.errstate(under="ignore", over="ignore", divide="ignore"):
            ze = (0.5 * xs * xs - 0.5 * a * xs) * np.exp(-a / xs) + 0.5 * a * a * exp1(a / xs)
        return np.where(x > 0, 0.5 * x * x - 5.0 * ze, 0.0)

    def _far_primitive(self, x):
        d1 = self.d1
        return -5.0 * self._c * d1 * np.exp(-x / d1) * (x + d1)

    def los_moment(self, x):
        x = np.asarray(x, dtype=float)
        near = self._near_moment(np.minimum(x, self.d1))
        far = np.where(x > self.d1,
                       self._far_primitive(np.maximum(x, self.d1)) - self._far_primitive(self.d1),
                       0.0)
        return near + far


@dataclass(frozen=True)
class AlwaysNlos(LosModel):
    """p^L == 0: every link is NLoS."""

    def los(self, d):
        return np.zeros_like(np.asarray(d, dtype=float))

    def los_moment(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    @property
    def never_los(self) -> bool:
        return True


def los_probability(model: LosModel, d):
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr < 0) or not np.all(np.isfinite(d_arr)):
        raise ValueError(f"distance must be finite and >= 0, got {d!r}")
    out = model.los(d_arr)
    return float(out) if out.ndim == 0 else out


# -- tiers and networks ---------------------------------------------------------


@dataclass(frozen=True)
class TierParams:
    density: float
    tx_power_dbm: float
    pl_intercept_nl_db: float
    pl_intercept_l_db: float
    alpha_nl: float
    alpha_l: float
    shadow_sigma_nl_db: float
    shadow_sigma_l_db: float
    sinr_threshold_db: float
    energy_a: float = 1.0
    energy_b: float = 0.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.alpha_nl <= 2 or self.alpha_l <= 2:
            raise ValueError("path loss exponents must exceed 2 "
                             f"(alpha_nl={self.alpha_nl}, alpha_l={self.alpha_l})")
        if self.alpha_nl < self.alpha_l:
            raise ValueError(f"alpha_nl={self.alpha_nl} must be >= alpha_l={self.alpha_l}")
        for name in ("density", "shadow_sigma_nl_db", "shadow_sigma_l_db",
                     "energy_a", "energy_b"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)!r}")

    def alpha(self, link: Link) -> float:
        return self.alpha_nl if link is Link.NL else self.alpha_l

    def sigma_db(self, link: Link) -> float:
        return self.shadow_sigma_nl_db if link is Link.NL else self.shadow_sigma_l_db

    def intercept_db(self, link: Link) -> float:
        return self.pl_intercept_nl_db if link is Link.NL else self.pl_intercept_l_db

    @property
    def threshold(self) -> float:
        return db_to_linear(self.sinr_threshold_db)


def effective_tx_power(tier: TierParams, model: PowerModel = PowerModel.FIXED,
                       noise_dbm: float | None = None) -> float:
    """Transmit power in watts.

    The density-dependent rule sets the power so that a BS at the edge of
    its equivalent disk ``r = sqrt(1/(pi*density))`` is received, over the
    NLoS path, exactly at ``T * noise``.
    """
    if model is PowerModel.FIXED:
        return dbm_to_watts(tier.tx_power_dbm)
    if tier.density <= 0:
        raise ValueError("density-dependent power needs density > 0")
    if noise_dbm is None:
        raise ValueError("density-dependent power needs the noise power")
    radius = math.sqrt(1.0 / (math.pi * tier.density))
    gain_1m = db_to_linear(-tier.pl_intercept_nl_db)
    return tier.threshold * dbm_to_watts(noise_dbm) / (gain_1m * radius ** (-tier.alpha_nl))


def b_constant(tier: TierParams, link: Link, model: PowerModel = PowerModel.FIXED,
               noise_dbm: float | None = None) -> float:
    """Transmit power times the 1 m path gain of ``link``, in watts."""
    return effective_tx_power(tier, model, noise_dbm) * db_to_linear(-tier.intercept_db(link))


@dataclass(frozen=True)
class NetworkConfig:
    tiers: tuple[TierParams, ...]
    noise_dbm: float
    los_model: LosModel
    power_model: PowerModel = PowerModel.FIXED

    def __post_init__(self):
        object.__setattr__(self, "tiers", tuple(self.tiers))
        if len(self.tiers) < 1:
            raise ValueError("a network needs at least one tier")
        if not math.isfinite(self.noise_dbm):
            raise ValueError("noise_dbm must be finite")
        if not isinstance(self.los_model, LosModel):
            raise TypeError("los_model must be a LosModel")
        object.__setattr__(self, "power_model", PowerModel(self.power_model))

    @property
    def n_tiers(self) -> int:
        return len(self.tiers)

    @property
    def noise_w(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    @property
    def densities(self) -> tuple[float, ...]:
        return tuple(t.density for t in self.tiers)

    @property
    def any_deployed(self) -> bool:
        return any(t.density > 0 for t in self.tiers)

    def tx_power_w(self, k: int) -> float:
        return effective_tx_power(self.tiers[k], self.power_model, self.noise_dbm)

    def b(self, k: int, link: Link) -> float:
        return b_constant(self.tiers[k], link, self.power_model, self.noise_dbm)

    def with_densities(self, densities: Sequence[float]) -> "NetworkConfig":
        if len(densities) != self.n_tiers:
            raise ValueError(f"expected {self.n_tiers} densities, got {len(densities)}")
        tiers = tuple(replace(t, density=float(d)) for t, d in zip(self.tiers, densities))
        return replace(self, tiers=tiers)

    def with_tiers(self, **changes) -> "NetworkConfig":
        """Apply the same field changes to every tier."""
        return replace(self, tiers=tuple(replace(t, **changes) for t in self.tiers))

    def coverage_key(self) -> "NetworkConfig":
        """Copy with energy coefficients zeroed: coverage does not depend on them."""
        return self.with_tiers(energy_a=0.0, energy_b=0.0)


def area_power(cfg: NetworkConfig) -> float:
    """Sum over tiers of density * (a * P + b), in W/m^2."""
    total = 0.0
    for k, tier in enumerate(cfg.tiers):
        if tier.density > 0:
            total += tier.density * (tier.energy_a * cfg.tx_power_w(k) + tier.energy_b)
    return total


# -- presets -------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyScenario:
    name: str
    a: tuple[float, ...]
    b: tuple[float, ...]


ENERGY_SCENARIOS = {
    "S1": EnergyScenario("S1", (22.6, 5.5), (414.2, 32.0)),
    "S2": EnergyScenario("S2", (1.0, 1.0), (0.0, 0.0)),
    "S3": EnergyScenario("S3", (10.3, 5.5), (156.2, 32.0)),
}

PAPER_NOISE_DBM = -95.0

_PAPER_TIERS = (
    dict(tx_power_dbm=46.0, pl_intercept_nl_db=2.7, pl_intercept_l_db=30.8,
         alpha_nl=4.28, alpha_l=2.42, shadow_sigma_nl_db=8.0, shadow_sigma_l_db=4.0),
    dict(tx_power_dbm=24.0, pl_intercept_nl_db=32.9, pl_intercept_l_db=41.1,
         alpha_nl=3.75, alpha_l=2.09, shadow_sigma_nl_db=4.0, shadow_sigma_l_db=3.0),
)


def paper_two_tier(lambda1: float, lambda2: float, los_model: LosModel, *,
                   threshold_db: float = 1.0, energy: str = "S1",
                   power_model: PowerModel = PowerModel.FIXED,
                   noise_dbm: float = PAPER_NOISE_DBM) -> NetworkConfig:
    """Macro + small-cell preset.  Densities in BS/m^2.

    The LoS model has no default and must be chosen by the caller.
    """
    scenario = ENERGY_SCENARIOS[energy]
    tiers = tuple(
        TierParams(density=float(lam), sinr_threshold_db=threshold_db,
                   energy_a=scenario.a[k], energy_b=scenario.b[k], **_PAPER_TIERS[k])
        for k, lam in enumerate((lambda1, lambda2))
    )
    return NetworkConfig(tiers=tiers, noise_dbm=noise_dbm, los_model=los_model,
                         power_model=power_model)


def apply_energy(cfg: NetworkConfig, energy: str) -> NetworkConfig:
    scenario = ENERGY_SCENARIOS[energy]
    if cfg.n_tiers != len(scenario.a):
        raise ValueError(f"energy scenario {energy} is defined for {len(scenario.a)} tiers")
    tiers = tuple(replace(t, energy_a=a, energy_b=b)
                  for t, a, b in zip(cfg.tiers, scenario.a, scenario.b))
    return replace(cfg, tiers=tiers)
