"""Sectioned ``key = value`` configuration files.

::

    preset = design-point    # optional, before any section
    [source]
    vin = 12
    [components]
    l1 = 250e-6
    [switching]
    fs = 50e3
    duty = 0.55
    [sim]
    periods = 400
    [control]
    ki = 0.1

Numbers accept scientific notation, booleans are ``true``/``false``.
Unknown sections or keys are errors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields

from .controller import PiConfig
from .designer import DesignSpec
from .errors import ConfigError, HgvmError
from .model import DESIGN_POINT, DESIGN_POINT_R_LOAD_ALT, PRESETS, ConverterParams
from .simulator import SimConfig

_NUM = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")

SECTIONS = {
    "": {"preset": "name"},
    "source": {"vin": "float", "preset": "name"},
    "components": {
        **{k: "float" for k in ("l1", "l2", "l3", "c1", "c2", "c3", "c4", "c5", "c6",
                                "r_load", "r_load_alt", "r_on", "r_on_vmc")},
        "preset": "name",
    },
    "switching": {"fs": "float", "duty": "float"},
    "sim": {"dt": "float", "periods": "int", "warm_start": "bool", "event_tol": "float",
            "constraint_tol": "float", "record_stride": "int"},
    "control": {"kp": "float", "ki": "float", "duty_min": "float", "duty_max": "float",
                "feedforward": "bool", "ramp_time": "float"},
    "design": {"vo_target": "float", "po": "float", "ripple_fraction_v": "float",
               "inductor_margin": "float"},
}

_PARAM_KEYS = {f.name for f in fields(ConverterParams)}


@dataclass
class ResolvedConfig:
    params: ConverterParams | None
    sim: SimConfig
    pi: PiConfig
    design: DesignSpec | None
    values: dict = field(default_factory=dict)
    r_load_alt: float | None = None


def _parse_value(raw: str, kind: str, line: int, key: str):
    if kind == "name":
        if not re.fullmatch(r"[A-Za-z0-9_.-]+", raw):
            raise ConfigError(f"{key}: invalid name {raw!r}", line, key)
        return raw
    if kind == "bool":
        if raw not in ("true", "false"):
            raise ConfigError(f"{key}: expected true or false, got {raw!r}", line, key)
        return raw == "true"
    if not _NUM.match(raw):
        raise ConfigError(f"{key}: expected a number, got {raw!r}", line, key)
    if kind == "int":
        v = float(raw)
        if v != int(v):
            raise ConfigError(f"{key}: expected an integer, got {raw!r}", line, key)
        return int(v)
    return float(raw)


def _lex(text: str):
    """Yield ``(section, key, value, line)`` tuples."""
    section = ""
    seen: dict[tuple[str, str], int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            m = re.fullmatch(r"\[\s*([A-Za-z_]+)\s*\]", body)
            if not m:
                raise ConfigError(f"malformed section header {body!r}", lineno)
            section = m.group(1)
            if section not in SECTIONS or section == "":
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        key, raw = (s.strip() for s in body.split("=", 1))
        if not key or not raw:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        allowed = SECTIONS[section]
        if key not in allowed:
            where = f"[{section}]" if section else "top level"
            raise ConfigError(f"unknown key {key!r} in {where}", lineno, key)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key {key!r} (first on line {seen[section, key]})",
                              lineno, key)
        seen[section, key] = lineno
        yield section, key, _parse_value(raw, allowed[key], lineno, key), lineno


def _build(cls, kwargs: dict, lines: dict):
    try:
        return cls(**kwargs)
    except HgvmError as exc:
        msg = str(exc)
        key = next((k for k in kwargs if msg.startswith(k + " ") or f" {k} " in msg), None)
        raise ConfigError(msg, lines.get(key), key) from exc


def parse_config(text: str) -> ResolvedConfig:
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    preset = None
    for section, key, value, line in _lex(text):
        if key == "preset":
            if value not in PRESETS:
                raise ConfigError(f"unknown preset {value!r}; known: {', '.join(PRESETS)}", line, key)
            if preset is not None:
                raise ConfigError("preset given twice", line, key)
            preset = value
            continue
        values[f"{section}.{key}"] = value
        lines[key] = line

    def pick(section):
        return {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith(section + ".")}

    pkw = {}
    if preset is not None:
        pkw.update(PRESETS[preset].to_dict())
    for sec in ("source", "components", "switching"):
        pkw.update({k: v for k, v in pick(sec).items() if k in _PARAM_KEYS})
    required = [f.name for f in fields(ConverterParams) if f.name not in ("r_on", "r_on_vmc")]
    missing = [k for k in required if k not in pkw]
    params = None
    if not missing:
        params = _build(ConverterParams, pkw, lines)
    elif len(missing) < len(required):
        given = set(pkw) & set(required)
        if given - {"vin", "fs", "duty"}:
            raise ConfigError(f"incomplete converter definition, missing: {', '.join(missing)}")

    sim = _build(SimConfig, pick("sim"), lines)
    pi = _build(PiConfig, pick("control"), lines)
    design = None
    dkw = pick("design")
    if dkw:
        if "vo_target" not in dkw or "po" not in dkw:
            raise ConfigError("[design] needs vo_target and po")
        vin = pkw.get("vin")
        fs = pkw.get("fs")
        if vin is None or fs is None:
            raise ConfigError("[design] needs vin in [source] and fs in [switching]")
        design = _build(DesignSpec, {"vin": vin, "fs": fs, **dkw}, lines)
    alt = values.get("components.r_load_alt")
    if alt is None and PRESETS.get(preset) is DESIGN_POINT:
        alt = DESIGN_POINT_R_LOAD_ALT
    return ResolvedConfig(params, sim, pi, design, values={"preset": preset, **values},
                          r_load_alt=alt)
