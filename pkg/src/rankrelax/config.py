"""Flat ``key = value`` configuration files with dotted section prefixes.

Example::

    material.model = neohooke
    material.lambda = 0.5
    grid.diag_min = 0.1
    bvp.loads = 0.05, 0.10, 0.15

Lines starting with ``#`` (or blank) are ignored.  Values are plain strings;
typed access goes through the getters, which raise ConfigError with the key
name on missing or malformed entries.
"""
from __future__ import annotations

import numpy as np

from .directions import full_set, reduced_set
from .errors import ConfigError
from .grid import GridSpec
from .material import HistoryState, MaterialSpec, Model

_MISSING = object()


class Config:
    def __init__(self, entries: dict):
        self.entries = dict(entries)

    def _raw(self, key, default=_MISSING):
        if key in self.entries:
            return self.entries[key]
        if default is _MISSING:
            raise ConfigError(f"missing config key: {key}")
        return default

    def get_str(self, key, default=_MISSING) -> str:
        return str(self._raw(key, default))

    def get_float(self, key, default=_MISSING) -> float:
        raw = self._raw(key, default)
        if isinstance(raw, float):
            return raw
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"config key {key}: not a number: {raw!r}")

    def get_int(self, key, default=_MISSING) -> int:
        raw = self._raw(key, default)
        if isinstance(raw, int):
            return raw
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"config key {key}: not an integer: {raw!r}")

    def get_bool(self, key, default=_MISSING) -> bool:
        raw = self._raw(key, default)
        if isinstance(raw, bool):
            return raw
        low = str(raw).strip().lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"config key {key}: not a boolean: {raw!r}")

    def get_floats(self, key, default=_MISSING) -> list:
        raw = self._raw(key, default)
        if not isinstance(raw, str):
            return list(raw)
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        try:
            return [float(p) for p in parts]
        except ValueError:
            raise ConfigError(f"config key {key}: not a number list: {raw!r}")

    def has(self, key) -> bool:
        return key in self.entries


def parse_config(path) -> Config:
    entries = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            entries[key] = value.strip()
    return Config(entries)


def material_from_config(cfg: Config, prefix="material.") -> MaterialSpec:
    name = cfg.get_str(prefix + "model").strip().lower()
    models = {"stvk": Model.STVK, "neohooke": Model.NEOHOOKE}
    if name not in models:
        raise ConfigError(f"unknown material model: {name}")
    return MaterialSpec(
        model=models[name],
        lam=cfg.get_float(prefix + "lambda"),
        mu=cfg.get_float(prefix + "mu"),
        d0=cfg.get_float(prefix + "d0"),
        dinf=cfg.get_float(prefix + "dinf"),
    )


def history_from_config(cfg: Config, d: int, prefix="history.") -> HistoryState:
    beta = cfg.get_float(prefix + "beta_k", 0.0)
    return HistoryState(beta_k=beta, f_k=np.eye(d))


def grid_from_config(cfg: Config, prefix="grid.") -> GridSpec:
    d = cfg.get_int(prefix + "d", 2)
    try:
        return GridSpec.from_bands(
            d,
            diag_min=cfg.get_float(prefix + "diag_min"),
            diag_max=cfg.get_float(prefix + "diag_max"),
            diag_delta=cfg.get_float(prefix + "diag_delta"),
            off_min=cfg.get_float(prefix + "off_min", 0.0),
            off_max=cfg.get_float(prefix + "off_max", 0.0),
            off_delta=cfg.get_float(prefix + "off_delta",
                                    cfg.get_float(prefix + "diag_delta")),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid grid: {exc}")


def directions_from_config(cfg: Config, d: int, prefix="directions."):
    kind = cfg.get_str(prefix + "kind", "reduced").strip().lower()
    if kind == "reduced":
        return reduced_set(cfg.get_int(prefix + "k", 1), d)
    if kind == "full":
        return full_set(cfg.get_float(prefix + "delta"),
                        cfg.get_float(prefix + "r"), d)
    raise ConfigError(f"unknown direction set kind: {kind}")
