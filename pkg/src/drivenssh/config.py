"""INI run configurations for the command-line tool.

Every section and key is declared in :data:`SCHEMA`; anything else is
rejected before computation starts.  Keys are case-sensitive.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import ConfigError
from .models import DriveProtocol, protocol_from_mapping


def _int_list(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(v) for v in text.replace(";", ",").split(","))


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _location(text: str):
    text = text.strip()
    return int(text) if text.lstrip("-").isdigit() else text


SWEEP_AXES = ("period_ratio", "period", "kappa0", "dkappa0", "dkappa1", "theta")

SCHEMA = {
    "protocol": {
        "kappa0": float, "dkappa0": float, "dkappa1": float, "period": float,
        "period_ratio": float, "theta": float, "n_sites": int, "dw_cells": _int_list,
    },
    "numerics": {
        "steps_per_period": int, "dt": float, "n_k": int, "unitarity_tol": float,
        "gap_fraction": float, "workers": int,
    },
    "sweep": {
        "x": str, "x_start": float, "x_stop": float, "x_count": int,
        "y": str, "y_start": float, "y_stop": float, "y_count": int,
    },
    "dynamics": {
        "n_cycles": int, "input": str, "site": int, "location": _location,
        "alpha": float, "beta": float, "analysis_sites": _int_list, "tol": float,
        "eigenstates": _bool,
    },
    "geometry": {
        "g0": float, "g1": float, "A0": float, "Lambda": float, "theta": float,
        "n_guides": int, "L": float,
    },
    "calibration": {"table": str, "n_z": int, "extrapolate": _bool},
    "output": {"directory": str},
}

DEFAULTS = {
    "numerics": {"steps_per_period": 1000, "n_k": 400, "unitarity_tol": 1e-9, "gap_fraction": 0.1, "workers": 1},
    "dynamics": {
        "n_cycles": 4, "input": "site", "site": 1, "location": "left",
        "alpha": 2 ** -0.5, "beta": 2 ** -0.5, "tol": 0.05, "eigenstates": False,
    },
    "calibration": {"n_z": 512, "extrapolate": False},
}


@dataclass
class RunConfig:
    values: dict
    raw: dict
    source: Path | None = None
    overrides: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        merged = dict(DEFAULTS.get(name, {}))
        merged.update(self.values.get(name, {}))
        return merged

    def has(self, name: str) -> bool:
        return name in self.values

    def require(self, name: str) -> dict:
        if name not in self.values:
            raise ConfigError(f"configuration needs a [{name}] section")
        return self.section(name)

    def protocol_values(self) -> dict:
        vals = dict(self.require("protocol"))
        if "kappa0" not in vals:
            raise ConfigError("[protocol] needs kappa0")
        if ("period" in vals) == ("period_ratio" in vals):
            raise ConfigError("[protocol] needs exactly one of period, period_ratio")
        return vals

    def protocol(self, **changes) -> DriveProtocol:
        vals = self.protocol_values()
        vals.update(changes)
        if "period" in changes:
            vals.pop("period_ratio", None)
        if "period_ratio" in changes:
            vals.pop("period", None)
        try:
            return protocol_from_mapping(vals)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid protocol: {exc}") from exc

    def resolve_path(self, text: str) -> Path:
        path = Path(text)
        if not path.is_absolute() and self.source is not None:
            path = self.source.parent / path
        return path

    def sweep_axis(self, name: str) -> tuple[str, list[float]]:
        sweep = self.require("sweep")
        missing = [k for k in (name, f"{name}_start", f"{name}_stop", f"{name}_count") if k not in sweep]
        if missing:
            raise ConfigError(f"[sweep] missing {', '.join(missing)}")
        axis = sweep[name]
        if axis not in SWEEP_AXES:
            raise ConfigError(f"[sweep] {name}={axis!r}; choose from {', '.join(SWEEP_AXES)}")
        count = sweep[f"{name}_count"]
        if count < 1:
            raise ConfigError(f"[sweep] {name}_count must be >= 1")
        start, stop = sweep[f"{name}_start"], sweep[f"{name}_stop"]
        if count == 1:
            return axis, [start]
        return axis, [start + (stop - start) * j / (count - 1) for j in range(count)]


def parse_config(text: str, source: Path | None = None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(source) if source else "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from exc
    values, raw = {}, {}
    for name in parser.sections():
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]; known: {', '.join(SCHEMA)}")
        values[name], raw[name] = {}, {}
        for key, text_value in parser.items(name):
            if key not in SCHEMA[name]:
                raise ConfigError(f"unknown key {key!r} in [{name}]; known: {', '.join(SCHEMA[name])}")
            try:
                values[name][key] = SCHEMA[name][key](text_value)
            except ValueError as exc:
                raise ConfigError(f"[{name}] {key}: {exc}") from exc
            raw[name][key] = text_value
    return RunConfig(values, raw, source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    return parse_config(text, path)
