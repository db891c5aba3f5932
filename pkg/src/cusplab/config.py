"""Run configuration: defaults < config file < environment < command-line flags."""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .errors import ConfigError

ENV_PREFIX = "CUSPLAB_"
MODELS = ("revolution", "product", "wp")


def _floats(v):
    if isinstance(v, (list, tuple)):
        return tuple(float(x) for x in v)
    if isinstance(v, str):
        return tuple(float(x) for x in v.split(",") if x.strip())
    return (float(v),)


@dataclass(frozen=True)
class RunConfig:
    seed: int | None = None
    model: str = "revolution"
    r: float = 4.0
    d0: float = 0.1
    u0: float = 0.5
    m: int = 2
    nu: float | None = None
    theta: float | None = None
    alpha: float | None = None
    eps: tuple = (0.05,)
    k0: int | None = None
    grid: int | None = None
    ensemble: int | None = None
    tol: float = 1e-10
    out: str = "cusplab-out"
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.seed is None:
            raise ConfigError("a seed is required (--seed, CUSPLAB_SEED or 'seed' in the config file)")
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {MODELS}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not 0 < self.d0 < self.u0:
            raise ConfigError("need 0 < d0 < u0")
        if any(not e > 0 for e in self.eps):
            raise ConfigError("eps values must be positive")
        for name in ("grid", "ensemble", "k0"):
            v = getattr(self, name)
            if v is not None and int(v) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.alpha is not None and self.nu is not None and not 0 < self.alpha < 1.0 / (self.nu + 1.0):
            raise ConfigError("alpha must lie in (0, 1/(nu+1))")
        return self

    def echo(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


_CASTS = {
    "seed": int,
    "model": str,
    "r": float,
    "d0": float,
    "u0": float,
    "m": int,
    "nu": float,
    "theta": float,
    "alpha": float,
    "eps": _floats,
    "k0": int,
    "grid": int,
    "ensemble": int,
    "tol": float,
    "out": str,
}


def _cast(key, value):
    try:
        return _CASTS[key](value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def _apply(cfg, values, source):
    upd = {}
    for k, v in values.items():
        if v is None:
            continue
        key = k.replace("-", "_")
        if key not in _CASTS:
            raise ConfigError(f"unknown setting {k!r} in {source}")
        upd[key] = _cast(key, v)
    return replace(cfg, **upd)


def load_config(path=None, *, env=None, overrides=None):
    """Merge the layers and validate.

    ``path`` is a flat TOML file of ``key = value`` pairs; environment
    variables ``CUSPLAB_<KEY>`` come next and ``overrides`` (flags) win.
    """
    cfg = RunConfig()
    if path is not None:
        p = Path(path)
        try:
            data = tomllib.loads(p.read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from exc
        if any(isinstance(v, dict) for v in data.values()):
            raise ConfigError("config file must be flat (no tables)")
        cfg = _apply(cfg, data, str(p))
    env = os.environ if env is None else env
    from_env = {k[len(ENV_PREFIX):].lower(): v for k, v in env.items() if k.startswith(ENV_PREFIX)}
    cfg = _apply(cfg, from_env, "environment")
    cfg = _apply(cfg, overrides or {}, "flags")
    return cfg.validate()
