"""Flat JSON configuration with strict key checking and stable derived seeds."""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Unknown keys, malformed values, or violated parameter constraints."""


DEFAULTS = {
    "model": {"d": 1, "N": 32, "L": 32.0, "mass": 1.0,
              "time_grid": {"M": 48, "T": 12.0}},
    "thermal": {"beta": 1.0},
    "region": {"base_center": 16.0, "base_halfwidth": 8.0},
    "tolerances": {"tol_rank": 1e-10, "tol_eq": 1e-8},
    "rng_seed": 7,
    "sweep": {},
}

_ALLOWED = {
    "": {"model", "thermal", "region", "tolerances", "rng_seed", "sweep"},
    "model": {"d", "N", "L", "mass", "time_grid"},
    "model.time_grid": {"M", "T"},
    "thermal": {"beta"},
    "region": {"base_center", "base_halfwidth"},
    "tolerances": {"tol_rank", "tol_eq"},
    "sweep": {"N", "beta", "halfwidth"},
}


@dataclass(frozen=True)
class LabConfig:
    d: int = 1
    n_points: int = 32
    length: float = 32.0
    mass: float = 1.0
    time_points: int = 48
    time_extent: float = 12.0
    beta: float = 1.0
    base_center: float = 16.0
    base_halfwidth: float = 8.0
    tol_rank: float = 1e-10
    tol_eq: float = 1e-8
    rng_seed: int = 7
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.n_points
        if n < 2 or (n & (n - 1)) != 0:
            raise ConfigError(f"N must be a power of two, got {n}")
        if not (0.0 < self.base_halfwidth <= self.length / 2.0):
            raise ConfigError("base_halfwidth must lie in (0, L/2]")
        if not self.beta > 0:
            raise ConfigError("beta must be positive")
        if not self.mass > 0:
            raise ConfigError("mass must be positive")
        for axis, values in self.sweep.items():
            if axis not in _ALLOWED["sweep"]:
                raise ConfigError(f"unknown sweep axis {axis!r}")
            if not isinstance(values, (list, tuple)) or not values:
                raise ConfigError(f"sweep axis {axis!r} must be a non-empty list")

    def with_point(self, **kwargs) -> "LabConfig":
        """Config at one sweep point (N / beta / halfwidth overrides)."""
        mapping = {"N": "n_points", "beta": "beta", "halfwidth": "base_halfwidth"}
        fields = {mapping[k]: v for k, v in kwargs.items()}
        if "n_points" in fields:
            fields["n_points"] = int(fields["n_points"])
        return replace(self, **fields)

    def seed_for(self, check_name: str, params: dict | None = None) -> np.random.SeedSequence:
        """Named per-check seed, stable across runs and platforms."""
        tag = check_name + "|" + json.dumps(params or {}, sort_keys=True)
        key = zlib.crc32(tag.encode("utf-8"))
        return np.random.SeedSequence(entropy=self.rng_seed, spawn_key=(key,))

    def rng_for(self, check_name: str, params: dict | None = None) -> np.random.Generator:
        return np.random.default_rng(self.seed_for(check_name, params))

    def field_model(self):
        from .minkowski import FieldModel
        return FieldModel(n_points=self.n_points, length=self.length, mass=self.mass,
                          n_times=self.time_points, t_extent=self.time_extent,
                          spatial_dim=self.d)

    def as_mapping(self) -> dict:
        return {
            "model": {"d": self.d, "N": self.n_points, "L": self.length,
                      "mass": self.mass,
                      "time_grid": {"M": self.time_points, "T": self.time_extent}},
            "thermal": {"beta": self.beta},
            "region": {"base_center": self.base_center,
                       "base_halfwidth": self.base_halfwidth},
            "tolerances": {"tol_rank": self.tol_rank, "tol_eq": self.tol_eq},
            "rng_seed": self.rng_seed,
            "sweep": dict(self.sweep),
        }


def _check_keys(mapping: dict, prefix: str):
    allowed = _ALLOWED.get(prefix)
    if allowed is None:
        return
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r} in section {prefix or 'root'!r}; "
                              f"allowed: {sorted(allowed)}")
        sub = f"{prefix}.{key}" if prefix else key
        if isinstance(mapping[key], dict) and sub in _ALLOWED:
            _check_keys(mapping[key], sub)


def config_from_mapping(data: dict) -> LabConfig:
    _check_keys(data, "")
    merged = json.loads(json.dumps(DEFAULTS))
    for key, value in data.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            for k2, v2 in value.items():
                if isinstance(v2, dict) and isinstance(merged[key].get(k2), dict):
                    merged[key][k2].update(v2)
                else:
                    merged[key][k2] = v2
        else:
            merged[key] = value
    m, tg = merged["model"], merged["model"]["time_grid"]
    return LabConfig(
        d=int(m["d"]), n_points=int(m["N"]), length=float(m["L"]), mass=float(m["mass"]),
        time_points=int(tg["M"]), time_extent=float(tg["T"]),
        beta=float(merged["thermal"]["beta"]),
        base_center=float(merged["region"]["base_center"]),
        base_halfwidth=float(merged["region"]["base_halfwidth"]),
        tol_rank=float(merged["tolerances"]["tol_rank"]),
        tol_eq=float(merged["tolerances"]["tol_eq"]),
        rng_seed=int(merged["rng_seed"]),
        sweep={k: list(v) for k, v in merged["sweep"].items()},
    )


def load_config(path) -> LabConfig:
    with open(Path(path), "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return config_from_mapping(data)


def apply_overrides(cfg: LabConfig, assignments: list[str]) -> LabConfig:
    """Apply --set key=value overrides with dotted paths into the JSON layout."""
    data = cfg.as_mapping()
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown config section {part!r} in override {item!r}")
            node = node[part]
        # leaf validity (including fresh sweep axes) is enforced by the
        # allow-list pass in config_from_mapping
        node[parts[-1]] = value
    return config_from_mapping(data)
