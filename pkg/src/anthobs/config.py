"""Plain-text key-value configuration files.

Format, one statement per line::

    # comment (also allowed inline)
    sigma = 0.9              # ParameterSet field
    diffusivity = 0.01       # SpatialParameterSet field
    x0 = 0.0, 0.0            # spatial points: comma-separated floats
    scenario = ode theta0=0.05 v0=0.5 rho0=0.05 k1=0 k2=1000
    sweep = paper-ode

Unknown keys are errors; every diagnostic carries the offending line number.
An empty file yields the reference defaults and no scenarios.  The codec
round-trips exactly: ``load_config_text(write_config(p, sp))`` reproduces the
parameter sets bit for bit (floats are serialised with ``repr``).
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .params import ParameterSet, SpatialParameterSet, validate, validate_spatial

__all__ = ["ConfigError", "LoadedConfig", "load_config", "load_config_text",
           "write_config", "scenario_line"]

_PARAM_TYPES = {f.name: f.type for f in dataclasses.fields(ParameterSet)}
_STR_PARAM_KEYS = {"p1_mode", "p2_mode", "eta_mode"}
_INT_PARAM_KEYS = {"seed"}
_SPATIAL_FLOAT_KEYS = {"diffusivity", "anisotropy_scale", "K1", "K2"}
_SPATIAL_STR_KEYS = {"spatial_profile"}
_SPATIAL_POINT_KEYS = {"x0", "x1", "x2", "x3"}

_SCENARIO_KEYS = {
    "theta0": float, "v0": float, "rho0": float, "k1": float, "k2": float,
    "measurement": str, "scheme": str, "t0": float, "t1": float,
    "dim": int, "n": int,
}

SWEEP_KINDS = ("paper-ode", "paper-pde")


class ConfigError(ValueError):
    """Malformed or invalid configuration; message carries line provenance."""


@dataclasses.dataclass
class LoadedConfig:
    """Validated parameter sets plus the scenario work list."""

    params: ParameterSet
    spatial: SpatialParameterSet
    scenarios: list  # list[runner.Scenario]
    sweeps: list[str]


def _parse_value(key: str, raw: str, lineno: int):
    raw = raw.strip()
    try:
        if key in _STR_PARAM_KEYS or key in _SPATIAL_STR_KEYS:
            return raw
        if key in _INT_PARAM_KEYS:
            return int(raw)
        if key in _SPATIAL_POINT_KEYS:
            return tuple(float(part) for part in raw.split(","))
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad value for {key!r}: {raw!r} ({exc})")


def _parse_scenario(raw: str, lineno: int, defaults: dict) -> dict:
    parts = raw.split()
    if not parts or parts[0] not in ("ode", "pde"):
        raise ConfigError(f"line {lineno}: scenario must start with 'ode' or 'pde'")
    fields = dict(defaults)
    fields["model"] = parts[0]
    for item in parts[1:]:
        if "=" not in item:
            raise ConfigError(f"line {lineno}: scenario item {item!r} is not key=value")
        key, _, val = item.partition("=")
        if key not in _SCENARIO_KEYS:
            raise ConfigError(f"line {lineno}: unknown scenario key {key!r}")
        typ = _SCENARIO_KEYS[key]
        try:
            fields[key] = typ(val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad scenario value {item!r} ({exc})")
    return fields


def load_config_text(text: str, strict: bool = True) -> LoadedConfig:
    """Parse and validate a configuration string.

    Raises :class:`ConfigError` on unknown keys or malformed values, and
    (when ``strict``) on hard hypothesis violations such as an exceeded gain
    cap.  ``strict=False`` defers hypothesis judgement to the caller, which
    lets the ``validate`` command enumerate every violation.
    """
    from . import runner  # Scenario lives with the execution machinery

    param_kv: dict[str, object] = {}
    spatial_kv: dict[str, object] = {}
    scenario_lines: list[tuple[dict, int]] = []
    sweeps: list[str] = []

    for lineno, line in enumerate(text.splitlines(), start=1):
        stmt = line.split("#", 1)[0].strip()
        if not stmt:
            continue
        if "=" not in stmt:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stmt!r}")
        key, _, raw = stmt.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key == "scenario":
            scenario_lines.append((_parse_scenario(raw, lineno, {}), lineno))
        elif key == "sweep":
            if raw not in SWEEP_KINDS:
                raise ConfigError(
                    f"line {lineno}: unknown sweep {raw!r}; pick one of {SWEEP_KINDS}")
            sweeps.append(raw)
        elif key in _PARAM_TYPES:
            param_kv[key] = _parse_value(key, raw, lineno)
        elif key in _SPATIAL_FLOAT_KEYS or key in _SPATIAL_STR_KEYS \
                or key in _SPATIAL_POINT_KEYS:
            spatial_kv[key] = _parse_value(key, raw, lineno)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")

    try:
        params = ParameterSet(**param_kv)
        spatial = SpatialParameterSet(base=params, **spatial_kv)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid parameter combination: {exc}")

    if strict:
        hard = [v for v in validate_spatial(spatial) if v.hard]
        if hard:
            msgs = "; ".join(v.message for v in hard)
            raise ConfigError(f"configuration rejected: {msgs}")

    scenarios = []
    for fields, lineno in scenario_lines:
        fields.setdefault("k1", params.k1)
        fields.setdefault("k2", params.k2)
        if fields["model"] == "pde":
            fields.setdefault("rho0", fields.get("theta0"))
        try:
            scenarios.append(runner.make_scenario(params, **fields))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: invalid scenario: {exc}")
    return LoadedConfig(params=params, spatial=spatial, scenarios=scenarios,
                        sweeps=sweeps)


def load_config(path: str | Path, strict: bool = True) -> LoadedConfig:
    """Load and validate a configuration file (see :func:`load_config_text`)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}")
    return load_config_text(text, strict=strict)


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(repr(float(x)) for x in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_config(p: ParameterSet, sp: SpatialParameterSet | None = None,
                 scenarios: list | None = None) -> str:
    """Serialise parameter sets (and optional scenarios) to config-file text."""
    lines = ["# anthobs configuration"]
    for f in dataclasses.fields(ParameterSet):
        lines.append(f"{f.name} = {_fmt(getattr(p, f.name))}")
    if sp is not None:
        for key in sorted(_SPATIAL_FLOAT_KEYS | _SPATIAL_STR_KEYS):
            lines.append(f"{key} = {_fmt(getattr(sp, key))}")
        for key in sorted(_SPATIAL_POINT_KEYS):
            lines.append(f"{key} = {_fmt(getattr(sp, key))}")
    for s in scenarios or []:
        lines.append(scenario_line(s))
    return "\n".join(lines) + "\n"


def scenario_line(s) -> str:
    """One-line config statement reproducing scenario ``s``."""
    items = [f"theta0={s.theta0!r}", f"v0={s.v0!r}", f"rho0={s.rho0!r}",
             f"k1={s.k1!r}", f"k2={s.k2!r}", f"measurement={s.measurement}",
             f"scheme={s.scheme}", f"t0={s.t0!r}", f"t1={s.t1!r}"]
    if s.model == "pde":
        items += [f"dim={s.dim}", f"n={s.n}"]
    return "scenario = " + " ".join([s.model] + items)
