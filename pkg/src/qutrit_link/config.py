"""
JSON run configuration.

Rates are given in units of 2*pi x MHz, times in us.  Example::

    {
      "params": {"g": 12, "k": 3, "gamma_sp": 5.87, "omega1": 7,
                 "delta_b_f": -12, "delta_b_fp": 4, "delta": 100},
      "sender": {"T1": 0.12},
      "receiver": {"T2": 0.12},
      "detection": {"n_trials": 1000000, "seed": 7},
      "output": {"dir": "out"}
    }

Every block other than ``params`` and ``sender`` may be omitted; defaults
are filled in and echoed back through :attr:`RunConfig.resolved`.
"""
from __future__ import annotations

import difflib
import json
import math
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError, ProtocolError
from .params import PulseProfile, SystemParams, TimeGrid, build_params

_REQUIRED = object()

SCHEMA = {
    "params": {
        "g": _REQUIRED, "k": _REQUIRED, "gamma_sp": _REQUIRED, "omega1": _REQUIRED,
        "delta": _REQUIRED, "delta_b_f": 0.0, "delta_b_fp": 0.0,
    },
    "sender": {"T1": _REQUIRED, "t0": 0.0, "n_points": 2000, "span_widths": 5.0},
    "receiver": {"T2": None, "phi2": math.pi / 2, "solve": True, "delay": None,
                 "omega2_over_omega1": None},
    "detection": {"n_trials": 100000, "efficiency": 1.0, "dark_prob": 0.0, "seed": 0,
                  "target": -1, "beta2": None},
    "output": {"dir": ".", "format": "json"},
}

BLOCKS_FOR = {
    "validate": ("params", "sender"),
    "sender": ("params", "sender"),
    "solve-pulse": ("params", "sender"),
    "receiver": ("params", "sender"),
    "oracle": ("params", "sender"),
    "entangle": ("params", "sender"),
    "detect": ("detection",),
    "table1": ("params",),
}


@dataclass(frozen=True)
class RunConfig:
    resolved: dict
    params: Optional[SystemParams]
    profile1: Optional[PulseProfile]
    sender_grid: Optional[TimeGrid]

    def block(self, name: str) -> dict:
        return self.resolved[name]


def _reject_duplicates(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ConfigError(f"duplicate key {key!r}")
        out[key] = value
    return out


def parse_config_text(text: str) -> dict:
    try:
        data = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    return data


def _unknown(key: str, allowed, where: str) -> ConfigError:
    hint = difflib.get_close_matches(key, list(allowed), n=1)
    msg = f"unknown key {where}{key!r}"
    if hint:
        msg += f" (did you mean {hint[0]!r}?)"
    return ConfigError(msg)


def _number(value, key: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite")
    if integer:
        if value != int(value):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def resolve(data: dict, command: Optional[str] = None) -> RunConfig:
    """Validate a parsed configuration and fill in defaults."""
    for block in data:
        if block not in SCHEMA:
            raise _unknown(block, SCHEMA, "")
    needed = BLOCKS_FOR.get(command, ("params", "sender"))
    if command == "detect" and (data.get("detection") or {}).get("beta2") is None:
        needed = ("params", "sender", "detection")
    for block in needed:
        if block not in data:
            raise ConfigError(f"missing required block {block!r} for {command or 'this run'}")

    resolved = {}
    for block, schema in SCHEMA.items():
        given = data.get(block, {})
        if not isinstance(given, dict):
            raise ConfigError(f"block {block!r} must be an object")
        for key in given:
            if key not in schema:
                raise _unknown(key, schema, f"{block}.")
        out = {}
        present = block in data
        for key, default in schema.items():
            if key in given:
                out[key] = given[key]
            elif default is _REQUIRED:
                if present or block in needed:
                    raise ConfigError(f"missing required key {block}.{key}")
                out[key] = None
            else:
                out[key] = default
        resolved[block] = out

    p = resolved["params"]
    params = profile1 = grid = None
    if all(p[k] is not None for k in ("g", "k", "gamma_sp", "omega1", "delta")):
        for key, value in p.items():
            p[key] = _number(value, f"params.{key}")
        if p["delta"] == 0:
            raise ConfigError("params.delta: one-photon detuning must be non-zero")
        phi2 = _number(resolved["receiver"]["phi2"], "receiver.phi2")
        try:
            params = build_params(phi2=phi2, **p)
        except ProtocolError as exc:
            raise ConfigError(f"params: {exc}") from None

    s = resolved["sender"]
    if s["T1"] is not None:
        s["T1"] = _number(s["T1"], "sender.T1")
        s["t0"] = _number(s["t0"], "sender.t0")
        s["n_points"] = _number(s["n_points"], "sender.n_points", integer=True)
        s["span_widths"] = _number(s["span_widths"], "sender.span_widths")
        if s["T1"] <= 0:
            raise ConfigError("sender.T1 must be positive")
        if s["n_points"] < 2 or s["span_widths"] <= 0:
            raise ConfigError("sender.n_points must be >= 2 and sender.span_widths positive")
        profile1 = PulseProfile.gaussian(s["T1"], s["t0"])
        grid = TimeGrid.around(s["t0"], s["T1"], s["span_widths"], s["n_points"])

    r = resolved["receiver"]
    if r["T2"] is None:
        r["T2"] = s["T1"]
    else:
        r["T2"] = _number(r["T2"], "receiver.T2")
        if r["T2"] <= 0:
            raise ConfigError("receiver.T2 must be positive")
    for key in ("delay", "omega2_over_omega1"):
        if r[key] is not None:
            r[key] = _number(r[key], f"receiver.{key}")
    if r["omega2_over_omega1"] is not None and r["omega2_over_omega1"] <= 0:
        raise ConfigError("receiver.omega2_over_omega1 must be positive")
    if not isinstance(r["solve"], bool):
        raise ConfigError("receiver.solve must be true or false")

    d = resolved["detection"]
    d["n_trials"] = _number(d["n_trials"], "detection.n_trials", integer=True)
    d["seed"] = _number(d["seed"], "detection.seed", integer=True)
    d["efficiency"] = _number(d["efficiency"], "detection.efficiency")
    d["dark_prob"] = _number(d["dark_prob"], "detection.dark_prob")
    d["target"] = _number(d["target"], "detection.target", integer=True)
    if d["n_trials"] < 1:
        raise ConfigError("detection.n_trials must be >= 1")
    if not 0 <= d["seed"] < 2 ** 64:
        raise ConfigError("detection.seed must be an unsigned 64-bit integer")
    if d["target"] not in (-1, 0, 1):
        raise ConfigError("detection.target must be -1, 0 or 1")
    for key in ("efficiency", "dark_prob"):
        if not 0 <= d[key] <= 1:
            raise ConfigError(f"detection.{key} must lie in [0, 1]")
    if d["beta2"] is not None:
        if not isinstance(d["beta2"], list) or len(d["beta2"]) != 3:
            raise ConfigError("detection.beta2 must be a list of three populations")
        d["beta2"] = [_number(v, "detection.beta2") for v in d["beta2"]]

    o = resolved["output"]
    if o["format"] not in ("csv", "json"):
        raise ConfigError(f"output.format must be 'csv' or 'json', got {o['format']!r}")
    if not isinstance(o["dir"], str):
        raise ConfigError("output.dir must be a string")
    return RunConfig(resolved, params, profile1, grid)


def load_config(path, command: Optional[str] = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return resolve(parse_config_text(text), command)
