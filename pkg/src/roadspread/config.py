"""Run configuration: schema, loading and conversion to model objects."""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Mapping

import jsonschema
import yaml

from .bvp import GridControl
from .dispersion import SearchControl
from .errors import KernelError
from .model import Kernel, ModelSpec, Params, make_kernel

COMMANDS = ("speed", "curves", "sweep-d", "compare-kernels", "perturb", "selfsim", "simulate",
            "stationary", "cinf")

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}

KERNEL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["shape"],
    "properties": {
        "shape": {"enum": ["atom", "boxcar", "triangle", "raised_cosine", "table"]},
        "halfwidth": _POS,
        "mass": _POS,
        "atom": _NONNEG,
        "values": {"type": "array", "items": _NONNEG, "minItems": 2},
        "y": {"type": "array", "items": {"type": "number"}, "minItems": 2},
    },
}

GRID_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_intervals": {"type": "integer", "minimum": 2},
        "points_per_decay": {"type": "integer", "minimum": 4},
        "points_per_support": {"type": "integer", "minimum": 4},
        "refine": _POS,
        "tail_decays": _POS,
        "max_tail_points": {"type": "integer", "minimum": 1},
        "extrapolate": {"type": "boolean"},
        "residual_tol": _POS,
        "clamp_margin": _POS,
    },
}

SEARCH_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "c_rtol": _POS,
        "golden_rtol": _POS,
        "golden_maxiter": {"type": "integer", "minimum": 1},
        "delta0": _POS,
        "max_factor": _POS,
        "clamp_margin": _POS,
    },
}

_LADDER = {"type": "array", "items": _POS, "minItems": 1}

_OPTIONS = {
    "speed": {},
    "curves": {"c": _POS, "n": {"type": "integer", "minimum": 2}, "margin": _POS},
    "sweep-d": {"d_values": _LADDER},
    "compare-kernels": {"eps_ladder": _LADDER, "mollify_base": {"type": "string"}},
    "perturb": {"eps_ladder": _LADDER},
    "selfsim": {"c": _POS, "lambda": _POS, "p_value": _POS, "eps_ladder": _LADDER},
    "simulate": {
        "lx": _POS, "ly": _POS, "nx": {"type": "integer", "minimum": 3},
        "ny": {"type": "integer", "minimum": 3}, "t_end": _POS, "dt": _POS,
        "snapshot_stride": {"type": "integer", "minimum": 0}, "trace_interval": _POS,
        "theta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "stop_at_boundary": {"type": "boolean"},
        "initial": {
            "type": "object", "additionalProperties": False,
            "properties": {"road_amplitude": _NONNEG, "field_amplitude": _NONNEG,
                           "radius_x": _POS, "radius_y": _POS},
        },
    },
    "stationary": {"ly": _POS, "ny": {"type": "integer", "minimum": 3}, "tol": _POS},
    "cinf": {},
}

_REQUIRED_OPTIONS = {"curves": ["c"], "sweep-d": ["d_values"]}
_REQUIRED_BLOCKS = {"compare-kernels": ["kernels"], "perturb": ["upsilon"], "selfsim": ["base_kernel"]}


def _options_schema(command: str) -> dict:
    props = {"method": {"enum": ["auto", "bvp", "closed"]}, "grid": GRID_SCHEMA, "search": SEARCH_SCHEMA,
             **_OPTIONS[command]}
    return {"type": "object", "additionalProperties": False, "properties": props,
            "required": _REQUIRED_OPTIONS.get(command, [])}


def build_schema() -> dict:
    """JSON schema of a run configuration (one branch per command)."""
    base_props = {
        "command": {"enum": list(COMMANDS)},
        "params": {
            "type": "object", "additionalProperties": False,
            "required": ["d", "big_d", "growth", "mu_bar", "nu_bar"],
            "properties": {k: _POS for k in ("d", "big_d", "growth", "mu_bar", "nu_bar")},
        },
        "nu": KERNEL_SCHEMA,
        "mu": KERNEL_SCHEMA,
        "upsilon": KERNEL_SCHEMA,
        "base_kernel": KERNEL_SCHEMA,
        "kernels": {"type": "object", "additionalProperties": KERNEL_SCHEMA, "minProperties": 1},
        "options": {"type": "object"},
    }
    branches = []
    for cmd in COMMANDS:
        branches.append({
            "if": {"properties": {"command": {"const": cmd}}},
            "then": {"properties": {"options": _options_schema(cmd)},
                     "required": _REQUIRED_BLOCKS.get(cmd, [])},
        })
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "roadspread run configuration",
        "type": "object",
        "additionalProperties": False,
        "required": ["command", "params"],
        "properties": base_props,
        "allOf": branches,
    }


SCHEMA = build_schema()

OVERRIDE_KEYS = {
    "search": tuple(SEARCH_SCHEMA["properties"]),
    "grid": tuple(GRID_SCHEMA["properties"]),
}


class ConfigError(ValueError):
    """Configuration failed schema or semantic validation."""


def load_config(path) -> dict:
    """Read a YAML or JSON file (YAML is a superset, so one parser serves both)."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    return data


def validate(cfg: Mapping) -> None:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{loc}: {exc.message}") from exc


def apply_overrides(cfg: Mapping, overrides: Mapping | None) -> dict:
    """Merge flat tolerance overrides into ``options.search`` / ``options.grid``."""
    out = copy.deepcopy(dict(cfg))
    if not overrides:
        return out
    opts = out.setdefault("options", {})
    for key, val in overrides.items():
        for block, keys in OVERRIDE_KEYS.items():
            if key in keys:
                opts.setdefault(block, {})[key] = val
                break
        else:
            raise ConfigError(f"unknown tolerance override {key!r}")
    return out


def parse_overrides(arg: str | None) -> dict | None:
    """``--tolerance-overrides`` accepts inline JSON or a path to a JSON/YAML file."""
    if not arg:
        return None
    p = Path(arg)
    try:
        data = yaml.safe_load(p.read_text()) if p.exists() else json.loads(arg)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse tolerance overrides: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("tolerance overrides must be a mapping")
    return data


def kernel_from_block(block: Mapping | None, total: float, default_atom: bool = True) -> Kernel:
    """Build a kernel from a config block.

    ``shape: atom`` puts ``mass`` (default ``total``) in the Dirac atom. Other
    shapes give a continuous part of mass ``mass`` (default ``total - atom``)
    plus an optional ``atom`` weight.
    """
    if block is None:
        if not default_atom:
            raise ConfigError("missing kernel block")
        return Kernel(atom=total)
    shape = block["shape"]
    if shape == "atom":
        return Kernel(atom=block.get("mass", total))
    atom = float(block.get("atom", 0.0))
    mass = block.get("mass", total - atom)
    if mass <= 0:
        raise ConfigError("continuous kernel part must have positive mass")
    params = {k: block[k] for k in ("halfwidth", "values", "y") if k in block}
    try:
        k = make_kernel(shape, mass, **params)
    except KeyError as exc:
        raise ConfigError(f"kernel block missing {exc}") from exc
    except KernelError as exc:
        raise ConfigError(str(exc)) from exc
    return Kernel(atom=atom, shape=k.shape, halfwidth=k.halfwidth, amplitude=k.amplitude, values=k.values)


def params_of(cfg: Mapping) -> Params:
    return Params.from_dict(cfg["params"])


def spec_of(cfg: Mapping, params: Params) -> ModelSpec:
    return ModelSpec(nu=kernel_from_block(cfg.get("nu"), params.nu_bar),
                     mu=kernel_from_block(cfg.get("mu"), params.mu_bar))


def control_of(cfg: Mapping, default: SearchControl | None = None) -> SearchControl:
    opts = cfg.get("options", {})
    base = default or SearchControl()
    grid_fields = dict(base.grid.to_dict())
    grid_fields.update(opts.get("grid", {}))
    fields = {k: v for k, v in base.to_dict().items() if k != "grid"}
    fields.update(opts.get("search", {}))
    if "method" in opts:
        fields["method"] = opts["method"]
    return SearchControl(**fields, grid=GridControl(**grid_fields))


def schema_json() -> str:
    return json.dumps(SCHEMA, indent=2, sort_keys=True) + "\n"


def example_config(command: str) -> dict[str, Any]:
    """Minimal valid configuration for ``command`` (used in docs and tests)."""
    cfg: dict[str, Any] = {"command": command,
                           "params": {"d": 1.0, "big_d": 4.0, "growth": 1.0, "mu_bar": 1.0, "nu_bar": 1.0}}
    if command == "curves":
        cfg["options"] = {"c": 2.5, "n": 200}
    elif command == "sweep-d":
        cfg["options"] = {"d_values": [100.0, 1000.0, 10000.0]}
    elif command == "compare-kernels":
        cfg["kernels"] = {"boxcar": {"shape": "boxcar", "halfwidth": 1.0},
                          "triangle": {"shape": "triangle", "halfwidth": 1.0}}
    elif command == "perturb":
        cfg["upsilon"] = {"shape": "boxcar", "halfwidth": 1.0}
    elif command == "selfsim":
        cfg["base_kernel"] = {"shape": "boxcar", "halfwidth": 1.0}
        cfg["options"] = {"p_value": 1.0}
    elif command == "simulate":
        cfg["nu"] = {"shape": "boxcar", "halfwidth": 1.0}
        cfg["mu"] = {"shape": "boxcar", "halfwidth": 1.0}
        cfg["options"] = {"lx": 40.0, "nx": 161, "ly": 5.0, "ny": 41, "t_end": 5.0}
    return cfg
