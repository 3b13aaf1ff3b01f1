"""Scenario files and presets.

Scenario files are TOML.  Densities are given in BS/km^2 and every dB or
dBm quantity carries the unit in its key::

    noise_dbm = -95.0
    power_model = "fixed"        # or "density"

    [los]
    model = "exponential"        # exponential | linear | two-piece | nlos
    kappa = 0.01                 # 1/m

    [[tier]]
    density_per_km2 = 10.0
    tx_power_dbm = 46.0
    pl_intercept_nl_db = 2.7
    pl_intercept_l_db = 30.8
    alpha_nl = 4.28
    alpha_l = 2.42
    shadow_sigma_nl_db = 8.0
    shadow_sigma_l_db = 4.0
    sinr_threshold_db = 1.0
    energy_a = 22.6
    energy_b = 414.2
"""
from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import (ENERGY_SCENARIOS, AlwaysNlos, ExponentialLos, LosModel, NetworkConfig,
                    PowerModel, ThreeGppLinearLos, ThreeGppTwoPieceLos, TierParams,
                    apply_energy, paper_two_tier, per_km2_to_per_m2, per_m2_to_per_km2)


class ConfigError(ValueError):
    """Invalid scenario; ``problems`` lists one message per offending field."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


TIER_FIELDS = {f.name for f in dataclasses.fields(TierParams)} - {"density"}
_REQUIRED_TIER_KEYS = ({"density_per_km2"} | TIER_FIELDS) - {"energy_a", "energy_b"}

PRESETS = ("paper-2tier",)
DEFAULT_PRESET_DENSITIES_KM2 = (10.0, 100.0)


def los_from_table(table: dict, where: str = "los") -> LosModel:
    kind = str(table.get("model", "")).lower()
    try:
        if kind in ("exponential", "exp"):
            return ExponentialLos(float(table["kappa"]))
        if kind == "linear":
            return ThreeGppLinearLos(float(table["d1"]))
        if kind in ("two-piece", "twopiece", "two_piece"):
            return ThreeGppTwoPieceLos(float(table["d0"]), float(table["d1"]))
        if kind in ("nlos", "always-nlos"):
            return AlwaysNlos()
    except KeyError as exc:
        raise ConfigError(f"{where}.{exc.args[0]}: missing for model {kind!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}.model: unknown LoS model {table.get('model')!r} "
                      "(expected exponential, linear, two-piece or nlos)")


def parse_los_spec(text: str) -> LosModel:
    """Command-line LoS model: ``exp:KAPPA``, ``linear:D1``, ``two-piece:D0,D1``, ``nlos``."""
    name, _, args = text.partition(":")
    values = [v for v in args.split(",") if v]
    keys = {"exp": ["kappa"], "exponential": ["kappa"], "linear": ["d1"],
            "two-piece": ["d0", "d1"], "nlos": []}.get(name.lower())
    if keys is None or len(values) != len(keys):
        raise ConfigError(f"--los: cannot parse {text!r} "
                          "(use exp:KAPPA, linear:D1, two-piece:D0,D1 or nlos)")
    try:
        table = {"model": name, **{k: float(v) for k, v in zip(keys, values)}}
    except ValueError:
        raise ConfigError(f"--los: non-numeric parameter in {text!r}") from None
    return los_from_table(table, "--los")


def config_from_dict(data: dict) -> NetworkConfig:
    problems = []
    tiers_raw = data.get("tier")
    if not isinstance(tiers_raw, list) or not tiers_raw:
        problems.append("tier: at least one [[tier]] table is required")
        tiers_raw = []
    tiers = []
    for i, raw in enumerate(tiers_raw, start=1):
        where = f"tier[{i}]"
        unknown = set(raw) - TIER_FIELDS - {"density_per_km2"}
        for key in sorted(unknown):
            hint = " (densities are given as density_per_km2)" if key == "density" else ""
            problems.append(f"{where}.{key}: unknown field{hint}")
        missing = _REQUIRED_TIER_KEYS - set(raw)
        for key in sorted(missing):
            problems.append(f"{where}.{key}: missing")
        if unknown or missing:
            continue
        try:
            kwargs = {k: float(v) for k, v in raw.items() if k != "density_per_km2"}
            density = per_km2_to_per_m2(float(raw["density_per_km2"]))
            tiers.append(TierParams(density=density, **kwargs))
        except (TypeError, ValueError) as exc:
            problems.append(f"{where}: {exc}")

    if "noise_dbm" not in data:
        problems.append("noise_dbm: missing")
    los = None
    if not isinstance(data.get("los"), dict):
        problems.append("los: a [los] table is required")
    else:
        try:
            los = los_from_table(data["los"])
        except ConfigError as exc:
            problems.extend(exc.problems)
    try:
        power = PowerModel(data.get("power_model", "fixed"))
    except ValueError:
        problems.append(f"power_model: expected 'fixed' or 'density', got {data.get('power_model')!r}")
        power = PowerModel.FIXED
    if problems:
        raise ConfigError(problems)
    try:
        cfg = NetworkConfig(tiers=tuple(tiers), noise_dbm=float(data["noise_dbm"]),
                            los_model=los, power_model=power)
        if "energy" in data:
            cfg = apply_energy(cfg, str(data["energy"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path: str | Path) -> NetworkConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data)


def load_preset(name: str, los_model: LosModel | None, *, energy: str = "S1",
                power_model: PowerModel = PowerModel.FIXED) -> NetworkConfig:
    if name not in PRESETS:
        raise ConfigError(f"--preset: unknown preset {name!r} (available: {', '.join(PRESETS)})")
    if los_model is None:
        raise ConfigError("--los: the paper-2tier preset has no default LoS model; "
                          "pass one explicitly, e.g. --los exp:0.01")
    if energy not in ENERGY_SCENARIOS:
        raise ConfigError(f"--energy: unknown scenario {energy!r}")
    lam1, lam2 = (per_km2_to_per_m2(d) for d in DEFAULT_PRESET_DENSITIES_KM2)
    return paper_two_tier(lam1, lam2, los_model, energy=energy, power_model=power_model)


def apply_overrides(cfg: NetworkConfig, overrides: dict[tuple[int, str], str]) -> NetworkConfig:
    """Apply ``{(tier index, field): text}``; ``density`` is read in BS/km^2."""
    problems = []
    tiers = list(cfg.tiers)
    for (k, name), text in overrides.items():
        where = f"--tier{k + 1}.{name}"
        if not 0 <= k < len(tiers):
            problems.append(f"{where}: the scenario has {len(tiers)} tier(s)")
            continue
        if name not in TIER_FIELDS | {"density"}:
            problems.append(f"{where}: unknown tier field")
            continue
        try:
            value = float(text)
            if name == "density":
                value = per_km2_to_per_m2(value)
            tiers[k] = dataclasses.replace(tiers[k], **{name: value})
        except ValueError as exc:
            problems.append(f"{where}: {exc}")
    if problems:
        raise ConfigError(problems)
    return dataclasses.replace(cfg, tiers=tuple(tiers))


def config_snapshot(cfg: NetworkConfig) -> dict:
    """Plain-data view of a config for manifests."""
    los = cfg.los_model
    return {
        "noise_dbm": cfg.noise_dbm,
        "power_model": cfg.power_model.value,
        "los": {"model": type(los).__name__, **dataclasses.asdict(los)},
        "tier": [dict(dataclasses.asdict(t), density_per_km2=per_m2_to_per_km2(t.density))
                 for t in cfg.tiers],
    }
