"""Run configuration: JSON documents validated against a schema.

Unknown keys are rejected.  Validation messages carry the line of the
offending key so a config can be fixed without guessing.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .kernel import KernelParams, Regulator, fit_mu
from .quadrature import QuadSpec
from .testfn import (GridSpec, TestFunction, mirrored_difference, normalize_to_charge,
                     product_bump, radial_bump)

__all__ = ["ConfigError", "RunConfig", "SCHEMA", "load_config", "parse_config", "golden_path"]


class ConfigError(ValueError):
    """Invalid configuration; the message is line-addressed when possible."""


_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_POSITIVE_LIST = {"type": "array", "items": {"type": "number"}, "minItems": 1}

_FUNCTION = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["radial_bump", "product_bump", "mirrored_difference"]},
        "center": _PAIR,
        "radii": {**_PAIR, "items": {"type": "number", "exclusiveMinimum": 0}},
        "offset": _PAIR,
        "amplitude": {"type": "number"},
        "charge": {"type": "number"},
    },
}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "f": _FUNCTION,
        "g": _FUNCTION,
        "regulator": {"type": "string", "pattern": r"^(sharp|exp)(:[0-9.eE+-]+)?$"},
        "mu_v": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "quad": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "base_order": {"type": "integer", "minimum": 4},
                "max_depth": {"type": "integer", "minimum": 1},
                "abs_tol": {"type": "number", "exclusiveMinimum": 0},
                "rel_tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "resolution": {"type": "integer", "minimum": 8},
                "node_count": {"type": "integer", "minimum": 8},
                "interpolation_order": {"enum": [1, 3, 5]},
            },
        },
        "T_grid": _POSITIVE_LIST,
        "t_grid": _POSITIVE_LIST,
        "h_order": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "seed": {"type": "integer"},
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"csv": {"type": "string"}, "record": {"type": "string"}},
        },
    },
}

DEFAULTS: dict[str, Any] = {
    "f": {"kind": "radial_bump", "center": [0.0, 0.0], "radii": [1.0, 1.0],
          "charge": math.sqrt(2.0 * math.pi)},
    "g": {"kind": "radial_bump", "center": [0.0, 0.0], "radii": [1.0, 1.0],
          "charge": math.sqrt(2.0 * math.pi)},
    "regulator": "sharp:1",
    "mu_v": None,
    "quad": {},
    "grid": {},
    "T_grid": [math.e ** 3, 50.0, 200.0, 1000.0, 5000.0, 10000.0],
    "t_grid": [8.0, 16.0, 32.0, 64.0, 128.0, 256.0],
    "h_order": 6,
    "alpha": 0.5,
    "seed": 0,
    "outputs": {},
}


def golden_path() -> Path:
    """Checked-in config reproducing the q_f q_g = 2 pi amplitude."""
    return Path(str(resources.files("infrascat") / "configs" / "golden.json"))


def _key_line(text: str, path) -> int | None:
    """Line of the key at ``path`` (a sequence of keys/indices) in ``text``."""
    pos = 0
    line = None
    for key in path:
        if isinstance(key, int):
            continue
        m = re.compile(r'"%s"\s*:' % re.escape(str(key))).search(text, pos)
        if m is None:
            return line
        pos = m.end()
        line = text.count("\n", 0, m.start()) + 1
    return line


def _build_function(spec: dict, name: str) -> TestFunction:
    kind = spec["kind"]
    center = tuple(spec.get("center", (0.0, 0.0)))
    radii = tuple(spec.get("radii", (1.0, 1.0)))
    amplitude = spec.get("amplitude", 1.0)
    if kind == "mirrored_difference":
        if spec.get("charge", 0.0) != 0.0:
            raise ConfigError(f"{name}: a mirrored_difference is neutral; charge must be 0")
        return mirrored_difference(tuple(spec.get("offset", (0.5, 0.0))), center, radii, amplitude)
    if "offset" in spec:
        raise ConfigError(f"{name}: 'offset' only applies to mirrored_difference")
    make = radial_bump if kind == "radial_bump" else product_bump
    base = make(center, radii, amplitude)
    if "charge" in spec:
        if spec["charge"] == 0.0:
            return base.scaled(0.0)
        return normalize_to_charge(base, spec["charge"])
    return base


@dataclass(frozen=True)
class RunConfig:
    f: TestFunction
    g: TestFunction
    regulator: Regulator
    mu_override: float | None
    quad: QuadSpec
    grid: GridSpec
    T_grid: tuple[float, ...]
    t_grid: tuple[float, ...]
    h_order: int
    alpha: float
    seed: int
    outputs: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def kernel_params(self) -> KernelParams:
        if self.mu_override is not None:
            return KernelParams(self.mu_override)
        mu, _ = fit_mu(self.regulator, spec=self.quad)
        return KernelParams(mu)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = []
        for err in errors:
            path = list(err.absolute_path)
            if err.validator == "additionalProperties":
                extra = re.findall(r"'([^']+)'", err.message)
                path = path + extra[:1]
            where = _key_line(text, path)
            loc = f"{source}:{where}" if where else source
            key = "/".join(map(str, path)) or "<root>"
            lines.append(f"{loc}: {key}: {err.message}")
        raise ConfigError("\n".join(lines))
    merged = {**DEFAULTS, **data}
    try:
        quad = QuadSpec(**merged["quad"])
        grid = GridSpec(**merged["grid"])
        f = _build_function(merged["f"], "f")
        g = _build_function(merged["g"], "g")
        regulator = Regulator.parse(merged["regulator"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise ConfigError(f"{source}: {exc}") from None
        raise ConfigError(f"{source}: {exc}") from None
    return RunConfig(f, g, regulator, merged["mu_v"], quad, grid,
                     tuple(float(T) for T in merged["T_grid"]),
                     tuple(float(t) for t in merged["t_grid"]),
                     int(merged["h_order"]), float(merged["alpha"]), int(merged["seed"]),
                     dict(merged["outputs"]), data)


def load_config(path: str | Path | None) -> RunConfig:
    """Read and validate a config file; ``None`` gives the defaults."""
    if path is None:
        return parse_config("{}", "<defaults>")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path))
