"""JSON design configuration with strict validation."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError
from .geometry import Grid2D
from .maps import BUILTIN_MAPS
from .snell import OpticalConstants
from .surfaces import BUILTIN_SURFACES
from . import fields as field_lib

DEFAULT_TOLERANCES = {
    "admissibility": 1e-10,
    "curl": 1e-10,
    "thickness": 0.0,
    "verdict": 1e-9,
}

BUILTIN_FIELDS = {
    "vertical": lambda params: field_lib.vertical(),
    "collimated": lambda params: field_lib.collimated(**params),
    "point_source": lambda params: field_lib.point_source(**params),
}

_TOP_KEYS = {
    "constants", "map", "field", "surface", "grid", "x0", "z0",
    "tolerances", "output_dir", "alphas", "t_range", "step",
}


def _reject_unknown(d, allowed, where):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _named_spec(d, where, registry):
    _reject_unknown(d, {"name", "params"}, where)
    name = d.get("name")
    if name not in registry:
        raise ConfigError(f"unknown {where} name {name!r}; choose from "
                          f"{sorted(registry)}")
    params = d.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError(f"{where}.params must be an object")
    try:
        return registry[name](params)
    except TypeError as exc:
        raise ConfigError(f"bad params for {where} {name!r}: {exc}") from exc


@dataclass
class DesignConfig:
    """Validated configuration for checks, designs, and traces."""

    constants: OpticalConstants
    target_map: Optional[object] = None
    incident_field: Optional[object] = None
    surface: Optional[object] = None
    grid: Optional[Grid2D] = None
    x0: Optional[np.ndarray] = None
    z0: Optional[float] = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_dir: Optional[str] = None
    alphas: Optional[list] = None
    t_range: Optional[tuple] = None
    step: Optional[float] = None

    @staticmethod
    def from_dict(raw):
        if not isinstance(raw, dict):
            raise ConfigError("top-level config must be a JSON object")
        _reject_unknown(raw, _TOP_KEYS, "config")
        if "constants" not in raw:
            raise ConfigError("config requires a 'constants' section")
        cdict = raw["constants"]
        _reject_unknown(cdict, {"n1", "n2", "n3", "k", "a", "c"}, "constants")
        try:
            constants = OpticalConstants(**cdict)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad constants: {exc}") from exc

        cfg = DesignConfig(constants=constants)
        if "map" in raw:
            cfg.target_map = _named_spec(raw["map"], "map", BUILTIN_MAPS)
        if "field" in raw:
            cfg.incident_field = _named_spec(raw["field"], "field", BUILTIN_FIELDS)
        if "surface" in raw:
            cfg.surface = _named_spec(raw["surface"], "surface", BUILTIN_SURFACES)
        if "grid" in raw:
            gdict = raw["grid"]
            _reject_unknown(gdict, {"box", "n"}, "grid")
            try:
                box = gdict["box"]
                n = gdict["n"]
                n1, n2 = (n, n) if isinstance(n, int) else (int(n[0]), int(n[1]))
                cfg.grid = Grid2D.from_box(
                    ((float(box[0][0]), float(box[0][1])),
                     (float(box[1][0]), float(box[1][1]))),
                    n1, n2,
                )
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad grid spec: {exc}") from exc
        if raw.get("x0") is not None:
            x0 = raw["x0"]
            if not (isinstance(x0, (list, tuple)) and len(x0) == 2):
                raise ConfigError("x0 must be a pair of numbers")
            cfg.x0 = np.asarray(x0, dtype=float)
        if raw.get("z0") is not None:
            cfg.z0 = float(raw["z0"])
        if "tolerances" in raw:
            _reject_unknown(raw["tolerances"], DEFAULT_TOLERANCES, "tolerances")
            cfg.tolerances.update(
                {k: float(v) for k, v in raw["tolerances"].items()}
            )
        if "output_dir" in raw:
            cfg.output_dir = str(raw["output_dir"])
        if "alphas" in raw:
            cfg.alphas = [float(v) for v in raw["alphas"]]
        if "t_range" in raw:
            tr = raw["t_range"]
            if not (isinstance(tr, (list, tuple)) and len(tr) == 2):
                raise ConfigError("t_range must be a pair [t_min, t_max]")
            cfg.t_range = (float(tr[0]), float(tr[1]))
        if "step" in raw:
            cfg.step = float(raw["step"])
        return cfg

    @staticmethod
    def from_file(path):
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
        return DesignConfig.from_dict(raw)

    def require(self, *names):
        for name in names:
            attr = {"map": "target_map", "field": "incident_field"}.get(name, name)
            if getattr(self, attr) is None:
                raise ConfigError(f"this command requires a '{name}' section")
