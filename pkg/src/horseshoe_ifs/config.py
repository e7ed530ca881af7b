"""Flat ``key = value`` parameter files and named presets.

File format: one ``key = value`` (or ``key: value``) pair per line, ``#``
starts a comment, blank lines are ignored. Keys are those of
:meth:`SystemParams.to_dict`; ``beta0 lambda0 gamma beta2 p2 delta`` are
required, ``lambda2`` and the ``shape0_*``/``shape2_*`` keys are optional.
"""
from __future__ import annotations

import os
from typing import Mapping

from .fiber import SystemParams

__all__ = [
    "ConfigError",
    "PRESETS",
    "SEARCH_BOX",
    "SEARCH_CONSTRAINTS",
    "parse_config",
    "load_params",
    "format_params",
    "resolve_params",
]

REQUIRED_KEYS = ("beta0", "lambda0", "gamma", "beta2", "p2", "delta")


class ConfigError(ValueError):
    """Unreadable or inconsistent parameter configuration."""


# Found by search_feasible(SEARCH_BOX, budget=3, seed=0, constraints=SEARCH_CONSTRAINTS)[0].
_DEFAULT = SystemParams(
    beta0=1.0774, lambda0=0.8558, gamma=0.8588, beta2=1.078, p2=0.4628, delta=0.0342, lambda2=0.8966
)

PRESETS: dict[str, SystemParams] = {
    "default-validated": _DEFAULT,
    # equal lateral rates: the lateral pressure is exactly linear in t
    "equal-beta": _DEFAULT.replace(beta2=_DEFAULT.beta0),
    # too strong an expansion at 0 for the contraction budget of f1
    "steep-beta0": _DEFAULT.replace(beta0=2.0),
}

SEARCH_BOX: dict[str, tuple[float, float]] = {
    "beta0": (1.01, 1.10),
    "beta2": (1.01, 1.10),
    "lambda0": (0.85, 0.95),
    "gamma": (0.85, 0.95),
    "p2": (0.3, 0.7),
    "delta": (0.005, 0.05),
    "lambda2": (0.85, 0.98),
}

SEARCH_CONSTRAINTS = {
    "beta2>beta0": lambda p: p.beta2 - p.beta0,
    "gamma*beta02_plus^2<1": lambda p: 1.0 - p.gamma * p.beta02_plus**2,
}


def parse_config(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, val = (s.strip() for s in line.split(sep, 1))
                break
        else:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if not key or not val:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = val
    return out


def params_from_mapping(data: Mapping[str, object]) -> SystemParams:
    missing = [k for k in REQUIRED_KEYS if k not in data]
    if missing:
        raise ConfigError(f"missing keys: {missing}")
    try:
        return SystemParams.from_dict(dict(data))
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_params(path: str | os.PathLike) -> SystemParams:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    return params_from_mapping(parse_config(text))


def format_params(params: SystemParams, prefix: str = "") -> str:
    """Inverse of :func:`load_params`: every key, ``repr`` precision."""
    return "".join(f"{prefix}{k} = {v!r}\n" for k, v in params.to_dict().items())


def resolve_params(path: str | None = None, preset: str | None = None) -> SystemParams:
    if path is not None and preset is not None:
        raise ConfigError("give either a parameter file or a preset, not both")
    if path is not None:
        return load_params(path)
    name = preset or "default-validated"
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name]
