"""JSON system configs: schema, loading, dumping and the bundled examples.

A config looks like::

    {
      "version": 1,
      "name": "market",
      "domain": {"lower": [0, 0], "upper": [1, 1]},
      "maps": [{"label": "A", "matrix": [[0.5, 0], [0, 0.5]], "offset": [0, 0]},
               {"label": "B", "exprs": ["0.5*x + 0.5", "0.5*y"]}, ...],
      "apriori": [0.25, 0.25, 0.25, 0.25],
      "weighting": {"density": ["1.56", "0.68", "0.6", "1.16"]},
      "grid": 129
    }

``weighting`` is either ``{"potential": expr}`` or ``{"density": [expr per map]}``;
density entries may also be plain numbers.
"""
from __future__ import annotations

import json
import re
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import IoError, SchemaError
from .grid import DomainBox
from .model import (
    AffineMap,
    ConstantDensity,
    ExprDensity,
    ExprMap,
    ParameterSet,
    Potential,
    SystemSpec,
    validate_system,
)

CONFIG_VERSION = 1
DEFAULT_GRID = 65

_NUMBER_LIST = {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 2}
_EXPR = {"type": "string", "minLength": 1}

SCHEMA = {
    "type": "object",
    "required": ["domain", "maps", "apriori", "weighting"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "name": {"type": "string"},
        "domain": {
            "type": "object",
            "required": ["lower", "upper"],
            "additionalProperties": False,
            "properties": {"lower": _NUMBER_LIST, "upper": _NUMBER_LIST},
        },
        "maps": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    {
                        "type": "object",
                        "required": ["label", "matrix", "offset"],
                        "additionalProperties": False,
                        "properties": {
                            "label": {"type": "string", "minLength": 1},
                            "matrix": {"type": "array", "items": _NUMBER_LIST, "minItems": 1, "maxItems": 2},
                            "offset": _NUMBER_LIST,
                        },
                    },
                    {
                        "type": "object",
                        "required": ["label", "exprs"],
                        "additionalProperties": False,
                        "properties": {
                            "label": {"type": "string", "minLength": 1},
                            "exprs": {"type": "array", "items": _EXPR, "minItems": 1, "maxItems": 2},
                        },
                    },
                ]
            },
        },
        "apriori": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
        "weighting": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["potential"],
                    "additionalProperties": False,
                    "properties": {"potential": _EXPR},
                },
                {
                    "type": "object",
                    "required": ["density"],
                    "additionalProperties": False,
                    "properties": {
                        "density": {"type": "array", "minItems": 1,
                                    "items": {"oneOf": [_EXPR, {"type": "number", "exclusiveMinimum": 0}]}},
                    },
                },
            ]
        },
        "grid": {"oneOf": [{"type": "integer", "minimum": 2},
                           {"type": "array", "items": {"type": "integer", "minimum": 2},
                            "minItems": 1, "maxItems": 2}]},
    },
}

BUNDLED = ("e1", "e2", "e2_beta0.5", "e2_beta2", "market")


def check_schema(doc) -> None:
    """Raise SchemaError, with the JSON path of the worst violation, if ``doc`` is malformed."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is not None:
        raise SchemaError(err.message, tuple(err.absolute_path))


def spec_from_dict(doc, validate: bool = True) -> SystemSpec:
    check_schema(doc)
    labels = [m["label"] for m in doc["maps"]]
    n = len(labels)
    if len(doc["apriori"]) != n:
        raise SchemaError(f"expected {n} a-priori weights, got {len(doc['apriori'])}", ("apriori",))
    if len(set(labels)) != n:
        raise SchemaError("map labels must be distinct", ("maps",))
    maps = [AffineMap(m["matrix"], m["offset"]) if "matrix" in m else ExprMap(m["exprs"])
            for m in doc["maps"]]
    weighting = doc["weighting"]
    kwargs = {}
    if "potential" in weighting:
        kwargs["potential"] = Potential(expr=weighting["potential"])
    else:
        dens = weighting["density"]
        if len(dens) != n:
            raise SchemaError(f"expected {n} density entries, got {len(dens)}", ("weighting", "density"))
        if all(isinstance(v, (int, float)) for v in dens):
            kwargs["density"] = ConstantDensity(dens)
        else:
            kwargs["density"] = ExprDensity([v if isinstance(v, str) else repr(float(v)) for v in dens])
    spec = SystemSpec(
        DomainBox(tuple(doc["domain"]["lower"]), tuple(doc["domain"]["upper"])),
        ParameterSet(tuple(labels), tuple(doc["apriori"])),
        tuple(maps),
        name=doc.get("name", ""),
        **kwargs,
    )
    if validate:
        validate_system(spec, config_grid(doc, spec))
    return spec


def config_grid(doc, spec: SystemSpec):
    g = doc.get("grid", DEFAULT_GRID)
    if isinstance(g, list):
        g = tuple(g) if len(g) == spec.dimension else g[0]
    return g


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg} at line {exc.lineno}") from exc


def load_config(path, validate: bool = True) -> SystemSpec:
    return spec_from_dict(_read_json(path), validate)


def load_config_with_grid(path):
    """``(spec, grid resolution)`` where the resolution comes from the file or the default."""
    doc = _read_json(path)
    spec = spec_from_dict(doc)
    return spec, config_grid(doc, spec)


def spec_to_dict(spec: SystemSpec, grid=None) -> dict:
    """Inverse of :func:`spec_from_dict` for expression- or constant-weighted systems."""
    maps = []
    for label, mp in zip(spec.params.labels, spec.maps):
        if isinstance(mp, AffineMap):
            maps.append({"label": label, "matrix": [list(r) for r in mp.matrix], "offset": list(mp.offset)})
        elif isinstance(mp, ExprMap):
            maps.append({"label": label, "exprs": list(mp.exprs)})
        else:
            raise TypeError(f"map {label!r} has no JSON form")
    if spec.potential is not None:
        if spec.potential.expr is None:
            raise TypeError("callable potentials have no JSON form")
        weighting = {"potential": spec.potential.expr}
    elif isinstance(spec.density, ExprDensity):
        weighting = {"density": list(spec.density.exprs)}
    elif isinstance(spec.density, ConstantDensity):
        weighting = {"density": [float(v) for v in spec.density.constant_values]}
    else:
        raise TypeError("this density family has no JSON form")
    doc = {
        "version": CONFIG_VERSION,
        "name": spec.name,
        "domain": {"lower": list(spec.domain.lower), "upper": list(spec.domain.upper)},
        "maps": maps,
        "apriori": [float(v) for v in spec.params.weights],
        "weighting": weighting,
    }
    if grid is not None:
        doc["grid"] = list(grid) if isinstance(grid, tuple) else int(grid)
    return doc


_FLAT_LIST = re.compile(r"\[\s*([^\[\]{}]*?)\s*\]", re.S)


def config_json(doc) -> str:
    """Pretty JSON with innermost lists kept on one line."""
    text = json.dumps(doc, indent=2)
    return _FLAT_LIST.sub(lambda m: "[" + re.sub(r"\s*\n\s*", " ", m.group(1)) + "]", text) + "\n"


def dump_config(spec: SystemSpec, path, grid=None) -> None:
    try:
        Path(path).write_text(config_json(spec_to_dict(spec, grid)))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def bundled_config_path(name: str) -> Path:
    stem = name[:-5] if name.endswith(".json") else name
    if stem not in BUNDLED:
        raise IoError(f"no bundled config named {name!r}; available: {', '.join(BUNDLED)}")
    return Path(str(resources.files("ifsm") / "configs" / f"{stem}.json"))


def bundled_config(name: str) -> SystemSpec:
    return load_config(bundled_config_path(name))


def resolve_config(arg: str) -> Path:
    """A filesystem path, or the name of a bundled config."""
    p = Path(arg)
    if p.exists():
        return p
    return bundled_config_path(arg)
