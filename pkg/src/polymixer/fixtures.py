"""Golden fixtures: self-describing JSON documents holding a configuration,
its weights, an input, the expected output and a tolerance.

Floats are written with 17 significant digits so float64 values survive the
text round trip exactly.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .block import (FeedForwardParams, PolyMorpherParams, StackParams,
                    polymorpher_forward, stack_forward)
from .errors import FixtureSchemaError, ToleranceBreach
from .mixer import (MaskSpec, MixerConfig, MixerParams, pom_forward,
                    stream_decode, stream_decode_blocks)

SCHEMA_VERSION = 1
KINDS = ("mixer", "stream", "polymorpher", "stack")

_matrix = {"type": "array", "minItems": 1,
           "items": {"type": "array", "minItems": 1, "items": {"type": "number"}}}
_mixer_weights = {
    "type": "object",
    "required": ["W_h", "W_s", "W_o", "alpha"],
    "properties": {k: _matrix for k in ("W_h", "W_s", "W_o", "alpha")},
}
_layer = {
    "type": "object",
    "required": ["mixer", "ff"],
    "properties": {
        "mixer": _mixer_weights,
        "ff": {
            "type": "object",
            "required": ["W1", "b1", "W2", "b2", "activation"],
            "properties": {
                **{k: _matrix for k in ("W1", "b1", "W2", "b2")},
                "activation": {"enum": ["gelu", "relu", "tanh"]},
            },
        },
        "pre_norm": {"type": "boolean"},
    },
}

SCHEMA = {
    "type": "object",
    "required": ["schema_version", "kind", "seed", "config", "mask", "weights",
                 "input", "expected_output", "tolerance"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"enum": list(KINDS)},
        "seed": {"type": "integer"},
        "config": {
            "type": "object",
            "required": ["d", "D", "k", "activation", "aggregation"],
            "properties": {
                "d": {"type": "integer", "minimum": 1},
                "D": {"type": "integer", "minimum": 1},
                "k": {"type": "integer", "minimum": 1},
                "activation": {"enum": ["tanh", "identity", "relu"]},
                "aggregation": {"enum": ["sum", "mean"]},
            },
        },
        "mask": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["full", "causal", "block_causal", "explicit"]},
                "block_size": {"type": "integer", "minimum": 1},
                "matrix": _matrix,
            },
        },
        "weights": {"type": "object"},
        "input": _matrix,
        "expected_output": _matrix,
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "provenance": {"enum": ["batched", "streaming"]},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"enum": ["mixer", "stream"]}}},
         "then": {"properties": {"weights": _mixer_weights}}},
        {"if": {"properties": {"kind": {"const": "polymorpher"}}},
         "then": {"properties": {"weights": _layer}}},
        {"if": {"properties": {"kind": {"const": "stack"}}},
         "then": {"properties": {"weights": {
             "type": "object",
             "required": ["layers", "pos_encoding"],
             "properties": {"layers": {"type": "array", "items": _layer},
                            "pos_encoding": _matrix}}}}},
    ],
}


@dataclass(frozen=True)
class FixtureReport:
    path: str | None
    kind: str
    max_abs_diff: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_abs_diff <= self.tolerance


# ---------------------------------------------------------------- encoding

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _arr(m) -> list:
    return np.asarray(m, dtype=np.float64).tolist()


def dumps(doc: dict) -> str:
    """JSON text with every float written to 17 significant digits."""
    tokens: dict[str, str] = {}

    def encode(obj):
        if isinstance(obj, dict):
            return {k: encode(v) for k, v in obj.items()}
        if isinstance(obj, list) and obj and isinstance(obj[0], list):
            key = f"@@{len(tokens)}@@"
            rows = ",\n    ".join("[" + ", ".join(_fmt(x) for x in row) + "]" for row in obj)
            tokens[key] = "[\n    " + rows + "\n  ]"
            return key
        if isinstance(obj, list):
            return [encode(v) for v in obj]
        if isinstance(obj, float):
            key = f"@@{len(tokens)}@@"
            tokens[key] = _fmt(obj)
            return key
        return obj

    text = json.dumps(encode(doc), indent=1)
    return re.sub(r'"(@@\d+@@)"', lambda m: tokens[m.group(1)], text) + "\n"


def _config_doc(cfg: MixerConfig) -> dict:
    return {"d": cfg.d, "D": cfg.D, "k": cfg.k, "activation": cfg.activation,
            "aggregation": cfg.aggregation}


def _mask_doc(mask: MaskSpec) -> dict:
    doc = {"kind": mask.kind}
    if mask.kind == "block_causal":
        doc["block_size"] = int(mask.block_size)
    if mask.kind == "explicit":
        doc["matrix"] = _arr(mask.matrix)
    return doc


def _mixer_doc(p: MixerParams) -> dict:
    return {"W_h": _arr(p.W_h), "W_s": _arr(p.W_s), "W_o": _arr(p.W_o), "alpha": _arr(p.alpha)}


def _layer_doc(layer: PolyMorpherParams) -> dict:
    ff = layer.ff
    return {"mixer": _mixer_doc(layer.mixer),
            "ff": {"W1": _arr(ff.W1), "b1": _arr(ff.b1), "W2": _arr(ff.W2),
                   "b2": _arr(ff.b2), "activation": ff.activation},
            "pre_norm": layer.pre_norm}


# ---------------------------------------------------------------- decoding

def _mat(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _mixer_params(doc: dict) -> MixerParams:
    return MixerParams(*(_mat(doc[k]) for k in ("W_h", "W_s", "W_o", "alpha")))


def _layer_params(doc: dict, cfg: MixerConfig) -> PolyMorpherParams:
    ff = doc["ff"]
    return PolyMorpherParams(
        cfg, _mixer_params(doc["mixer"]),
        FeedForwardParams(_mat(ff["W1"]), _mat(ff["b1"]), _mat(ff["W2"]), _mat(ff["b2"]),
                          ff["activation"]),
        doc.get("pre_norm", False),
    )


def parse_mask(doc: dict) -> MaskSpec:
    kind = doc["kind"]
    if kind == "block_causal":
        return MaskSpec.block_causal(doc["block_size"])
    if kind == "explicit":
        return MaskSpec.explicit(doc["matrix"])
    return MaskSpec(kind)


def validate(doc: dict) -> None:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise FixtureSchemaError(f"fixture does not match schema: {exc.message}") from exc


def loads(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FixtureSchemaError(f"fixture is not valid JSON: {exc}") from exc
    validate(doc)
    return doc


def recompute(doc: dict) -> np.ndarray:
    """Recompute the fixture's output with the batched (non-streaming) path."""
    try:
        cfg = MixerConfig(**doc["config"])
        mask = parse_mask(doc["mask"])
        X = _mat(doc["input"])
        w = doc["weights"]
        kind = doc["kind"]
        if kind in ("mixer", "stream"):
            params = _mixer_params(w)
            params.validate(cfg)
            return pom_forward(X, mask, cfg, params)
        if kind == "polymorpher":
            return polymorpher_forward(X, _layer_params(w, cfg), mask)
        stack = StackParams(tuple(_layer_params(layer, cfg) for layer in w["layers"]),
                            _mat(w["pos_encoding"]))
        return stack_forward(X, stack, mask)
    except (ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, FixtureSchemaError):
            raise
        raise FixtureSchemaError(f"fixture content is inconsistent: {exc}") from exc


def verify(doc: dict, path=None) -> FixtureReport:
    out = recompute(doc)
    expected = _mat(doc["expected_output"])
    if out.shape != expected.shape:
        raise FixtureSchemaError(f"expected_output has shape {expected.shape}, "
                                 f"recomputation gives {out.shape}")
    diff = float(np.max(np.abs(out - expected)))
    report = FixtureReport(str(path) if path else None, doc["kind"], diff, float(doc["tolerance"]))
    if not report.passed:
        raise ToleranceBreach(diff, report.tolerance, path)
    return report


def fixture_roundtrip(path) -> FixtureReport:
    """Load, re-serialise, parse again and recompute a fixture file.

    Raises :class:`FixtureSchemaError` for malformed documents and
    :class:`ToleranceBreach` when the recomputation drifts past the stored
    tolerance.
    """
    doc = loads(Path(path).read_text())
    again = loads(dumps(doc))
    for key in ("input", "expected_output"):
        if not np.array_equal(_mat(doc[key]), _mat(again[key])):
            raise FixtureSchemaError(f"{key} did not survive re-serialisation")
    return verify(again, path)


# ---------------------------------------------------------------- generation

DEFAULTS = {
    "mixer": dict(d=3, D=4, k=3, n=5, mask=MaskSpec.full()),
    "stream": dict(d=4, D=8, k=3, n=8, mask=MaskSpec.causal()),
    "polymorpher": dict(d=4, D=8, k=2, n=6, mask=MaskSpec.full()),
    "stack": dict(d=4, D=8, k=2, n=6, mask=MaskSpec.causal(), layers=2, n_max=8),
}


def generate(kind: str = "mixer", seed: int = 0, *, d=None, D=None, k=None, n=None,
             mask: MaskSpec | None = None, activation="tanh", aggregation="sum",
             layers=None, n_max=None, tolerance: float = 1e-12) -> dict:
    """Build a fixture document from seeded random weights and input.

    ``stream`` fixtures take their expected output from token-by-token (or
    block-by-block) decoding; verification recomputes them in one batch.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown fixture kind {kind!r}")
    spec = {**DEFAULTS[kind]}
    for key, val in dict(d=d, D=D, k=k, n=n, mask=mask, layers=layers, n_max=n_max).items():
        if val is not None:
            spec[key] = val
    cfg = MixerConfig(spec["d"], spec["D"], spec["k"], activation, aggregation)
    mask = spec["mask"]
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((cfg.d, spec["n"]))
    provenance = "batched"

    if kind in ("mixer", "stream"):
        params = MixerParams.init(cfg, rng)
        # perturb alpha so higher-degree terms are not trivially small
        params = MixerParams(params.W_h, params.W_s, params.W_o,
                             params.alpha + rng.uniform(-0.5, 0.5, params.alpha.shape))
        weights = _mixer_doc(params)
        if kind == "stream":
            provenance = "streaming"
            if mask.kind == "causal":
                expected = stream_decode(X, cfg, params)
            elif mask.kind == "block_causal":
                expected = stream_decode_blocks(X, mask.block_size, cfg, params)
            else:
                raise ValueError("stream fixtures need a causal or block-causal mask")
        else:
            expected = pom_forward(X, mask, cfg, params)
    elif kind == "polymorpher":
        layer = PolyMorpherParams.init(cfg, rng)
        weights = _layer_doc(layer)
        expected = polymorpher_forward(X, layer, mask)
    else:
        stack = StackParams.init(cfg, spec["layers"], spec["n_max"], rng)
        weights = {"layers": [_layer_doc(layer) for layer in stack.layers],
                   "pos_encoding": _arr(stack.pos_encoding)}
        expected = stack_forward(X, stack, mask)

    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "seed": int(seed),
        "provenance": provenance,
        "config": _config_doc(cfg),
        "mask": _mask_doc(mask),
        "weights": weights,
        "input": _arr(X),
        "expected_output": _arr(expected),
        "tolerance": float(tolerance),
    }


def write(doc: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc))
    return path


def shipped_fixtures() -> list[Path]:
    """Paths of the golden fixtures bundled with the package."""
    root = resources.files("polymixer") / "fixtures"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".json"))
