"""Dataclass configs loaded from TOML, with strict key checking."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


class ConfigError(ValueError):
    pass


def derive_seed(master: int, component: str) -> int:
    """Independent stream seed for a named component."""
    h = hashlib.sha256(f"{master}:{component}".encode()).digest()
    return int.from_bytes(h[:8], "little")


@dataclass
class SamplingConfig:
    radius: float = 5.0
    per_axis: int = 21
    n_grid: int = 250
    n_far: int = 250
    far_radius: float | None = None


@dataclass
class BasinStageConfig:
    eps_conv: float = 1e-9
    max_iter: int | None = None
    log_cap: float = 1e6
    sampling: SamplingConfig = field(default_factory=SamplingConfig)


@dataclass
class PipelineConfig:
    d: int = 2
    lam: float = 0.45
    M: float = 4.5
    seed: int = 1
    horizon: int = 300
    mu: float = 0.05
    offdiag: float = 0.1
    quad_scale: float = 1.0
    c_max: float = 10.0
    residual_tol: float = 1e-8
    series_tol: float = 1e-12
    max_tail: int = 200
    basin: BasinStageConfig = field(default_factory=BasinStageConfig)


@dataclass
class JetSpec:
    """One explicit jet: real and imaginary parts of the linear part
    (row-major ``d x d``) and of the quadratic coefficients (``d * n_alpha``)."""

    linear_re: list
    linear_im: list | None = None
    quad_re: list | None = None
    quad_im: list | None = None


@dataclass
class SolveConfig:
    d: int = 2
    lam: float = 0.5
    M: float = 3.9
    seed: int = 0
    horizon: int = 50
    profile: str = "random"
    mu: float = 0.05
    general: bool = True
    quad_scale: float = 1.0
    tol: float = 1e-12
    max_tail: int = 200
    use_schedule: bool = True
    theta: float | None = None
    jets: list = field(default_factory=list)


@dataclass
class BasinConfig:
    d: int = 2
    seed: int = 0
    lam_min: float = 0.2
    lam_max: float = 0.5
    coeff_radius: float = 1.0
    schedule: str = "nilpotency-word"
    epochs: int = 30
    eps_conv: float = 1e-9
    max_iter: int = 200000
    log_cap: float = 1e6
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    slice_per_axis: int = 41


CONFIG_TYPES = {"pipeline": PipelineConfig, "solve-jets": SolveConfig, "basin": BasinConfig}


def _default(f):
    if f.default is not dataclasses.MISSING:
        return f.default
    if f.default_factory is not dataclasses.MISSING:
        return f.default_factory()
    return None


def _check_scalar(value, typ: str, where: str):
    if value is None:
        return None
    base = typ.replace(" | None", "")
    if base == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected a boolean")
    elif base in ("int", "float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        if base == "int" and not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return float(value) if base == "float" else value
    elif base == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
    elif base == "list":
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected an array")
    return value


def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a table")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown keys {unknown}")
    missing = sorted(n for n, f in fields.items() if n not in data
                     and f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING)
    if missing:
        raise ConfigError(f"{path or 'config'}: missing keys {missing}")
    kwargs: dict[str, Any] = {}
    for name, value in data.items():
        f = fields[name]
        default = _default(f)
        where = f"{path}.{name}" if path else name
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, where)
        elif name == "jets":
            if not isinstance(value, list):
                raise ConfigError(f"{where}: expected an array of tables")
            kwargs[name] = [_build(JetSpec, v, f"{where}[{i}]") for i, v in enumerate(value)]
        else:
            kwargs[name] = _check_scalar(value, str(f.type), where)
    return cls(**kwargs)


def from_dict(cls, data: dict):
    return _build(cls, data, "")


def load_config(path: str | Path, cls):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return from_dict(cls, data)


def to_dict(cfg) -> dict:
    return dataclasses.asdict(cfg)


def config_hash(cfg) -> str:
    """sha256 of the canonical JSON form of a config."""
    blob = json.dumps(to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
