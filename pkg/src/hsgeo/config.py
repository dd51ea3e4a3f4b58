"""Run configuration: a ``key = value`` file merged under command-line flags.

Example file::

    # defaults for hsgeo runs
    family = so
    scaling = power:1
    N-range = 20:200:10
    tol = 1e-9
    format = json

Lines starting with ``#`` or ``;`` are comments. Keys use the long flag
names without the leading dashes. The file named by ``HSGEO_CONFIG`` is
read first, then ``--config``, then explicit flags win.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any

from hsgeo.scaling import ScalingError, ScalingSequence

ENV_VAR = "HSGEO_CONFIG"


class ConfigError(ValueError):
    """Malformed configuration: bad value, unknown key or unreadable file."""


def parse_n_range(text: str) -> tuple[int, ...]:
    """``a:b:step`` (inclusive of b), ``a:b`` (step 1), a single ``N`` or ``n1,n2,...``."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            if len(parts) != 3:
                raise ValueError
            a, b, step = parts
            if step <= 0:
                raise ConfigError("N-range step must be positive")
            values = tuple(range(a, b + 1, step))
        else:
            values = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse N-range {text!r}; expected a:b:step") from None
    if not values:
        raise ConfigError(f"N-range {text!r} is empty")
    if min(values) < 1:
        raise ConfigError("N values must be >= 1")
    return values


@dataclass(frozen=True)
class RunConfig:
    family: str | None = None
    scaling: str | None = None
    N: tuple[int, ...] | None = None
    i: int | None = None
    j: int | None = None
    k: int | None = None
    m: int | None = None
    tol: float = 1e-9
    out: str | None = None
    format: str = "csv"
    jobs: int = 1
    deterministic: bool = False
    formula: str = "published"

    def __post_init__(self) -> None:
        if not (self.tol > 0):
            raise ConfigError("tol must be positive")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.formula not in ("published", "corrected"):
            raise ConfigError(f"formula must be published or corrected, got {self.formula!r}")
        if self.scaling is not None:
            try:
                ScalingSequence.parse(self.scaling)
            except ScalingError as exc:
                raise ConfigError(str(exc)) from exc

    def merged(self, overrides: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(self)}
        return replace(self, **{k: v for k, v in overrides.items() if k in known and v is not None})


_CONVERTERS = {
    "N": parse_n_range,
    "i": int, "j": int, "k": int, "m": int,
    "tol": float,
    "jobs": int,
}


def _coerce(key: str, raw: str) -> Any:
    if key == "deterministic":
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"deterministic must be a boolean, got {raw!r}")
    conv = _CONVERTERS.get(key)
    try:
        return conv(raw) if conv else raw.strip()
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def read_config_file(path: str | os.PathLike) -> dict[str, Any]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    parser = configparser.ConfigParser(comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
                                       interpolation=None)
    parser.optionxform = str  # keep "N" distinct from "n"
    try:
        parser.read_string("[run]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    known = {f.name for f in fields(RunConfig)}
    out: dict[str, Any] = {}
    for raw_key, raw in parser["run"].items():
        key = raw_key.replace("-", "_")
        if key in ("N_range", "n_range"):
            key = "N"
        if key not in known:
            raise ConfigError(f"unknown config key {raw_key!r}")
        out[key] = _coerce(key, raw)
    return out


def load_config(path: str | None = None, overrides: dict[str, Any] | None = None,
                env: dict[str, str] | None = None) -> RunConfig:
    """Defaults, then $HSGEO_CONFIG, then ``path``, then ``overrides``."""
    env = os.environ if env is None else env
    values: dict[str, Any] = {}
    if env.get(ENV_VAR):
        values.update(read_config_file(env[ENV_VAR]))
    if path:
        values.update(read_config_file(path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig().merged(values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
