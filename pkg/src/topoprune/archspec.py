"""JSON architecture specs: schema, parsing, bundled fixtures."""

import json
import os
from importlib import resources

import jsonschema

from .compression import ArchSpec, Conv2dSpec, DenseSpec, RecurrentSpec

__all__ = ["ARCH_SCHEMA", "ArchSpecError", "parse_arch", "load_arch", "arch_to_dict",
           "bundled_arch_names", "bundled_arch_path"]

_pair = {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}
_name = {"type": "string"}

ARCH_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["layers"],
    "properties": {
        "name": _name,
        "description": {"type": "string"},
        "layers": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["type", "in", "out"],
                        "properties": {
                            "type": {"const": "dense"},
                            "in": {"type": "integer", "minimum": 1},
                            "out": {"type": "integer", "minimum": 1},
                            "name": _name,
                        },
                    },
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["type", "spatial", "kernel"],
                        "properties": {
                            "type": {"const": "conv2d"},
                            "spatial": _pair,
                            "kernel": _pair,
                            "stride": _pair,
                            "pad": _pair,
                            "name": _name,
                        },
                    },
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["type", "hidden"],
                        "properties": {
                            "type": {"const": "recurrent"},
                            "hidden": {"type": "integer", "minimum": 1},
                            "name": _name,
                        },
                    },
                ]
            },
        },
    },
}


class ArchSpecError(ValueError):
    pass


def _layer_from_dict(d):
    kind = d["type"]
    if kind == "dense":
        return DenseSpec(d["in"], d["out"], d.get("name"))
    if kind == "recurrent":
        return RecurrentSpec(d["hidden"], d.get("name"))
    return Conv2dSpec(
        tuple(d["spatial"]),
        tuple(d["kernel"]),
        tuple(d.get("stride", (1, 1))),
        tuple(d.get("pad", (0, 0))),
        d.get("name"),
    )


def parse_arch(doc):
    """Validate a decoded JSON document and build an :class:`ArchSpec`.

    Raises
    ------
    ArchSpecError
        On any schema violation, including unknown fields or layer types.
    """
    try:
        jsonschema.validate(doc, ARCH_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ArchSpecError(f"invalid architecture spec at {where}: {exc.message}") from None
    try:
        layers = tuple(_layer_from_dict(d) for d in doc["layers"])
    except ValueError as exc:
        raise ArchSpecError(str(exc)) from None
    return ArchSpec(layers, doc.get("name"))


def bundled_arch_names():
    files = resources.files("topoprune").joinpath("data")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def bundled_arch_path(name):
    name = name[:-5] if name.endswith(".json") else name
    path = resources.files("topoprune").joinpath("data", f"{name}.json")
    if not path.is_file():
        raise FileNotFoundError(f"no bundled architecture {name!r}; have {bundled_arch_names()}")
    return str(path)


def load_arch(path):
    """Parse a spec file; a bare name like ``mnist_fcn`` falls back to the bundled fixtures."""
    if not os.path.exists(path):
        path = bundled_arch_path(os.path.basename(path))
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ArchSpecError(f"{path}: not valid JSON ({exc})") from None
    return parse_arch(doc), path


def arch_to_dict(arch):
    layers = []
    for spec in arch.layers:
        if isinstance(spec, DenseSpec):
            d = {"type": "dense", "in": spec.in_features, "out": spec.out_features}
        elif isinstance(spec, RecurrentSpec):
            d = {"type": "recurrent", "hidden": spec.hidden}
        else:
            d = {"type": "conv2d", "spatial": list(spec.spatial), "kernel": list(spec.kernel),
                 "stride": list(spec.stride), "pad": list(spec.pad)}
        if spec.name:
            d["name"] = spec.name
        layers.append(d)
    out = {"layers": layers}
    if arch.name:
        out["name"] = arch.name
    return out
