"""JSON model files (schema version 1).

A model file is a JSON object::

    {"schema_version": 1, "kind": "cy3", "number_mode": "rational", "order": 6,
     "N": 1, "yukawa": [[[[2, 1]]]],
     "extra_coeffs": [{"index": [2], "vector": [0, 0, [3, 1], 0]}]}

Scalars are integers, rational pairs ``[num, den]`` or complex rationals
``[[num, den], [num, den]]`` in rational mode; decimal strings ``"0.5"`` or
``["re", "im"]`` string pairs in float mode.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from pathlib import Path

import numpy as np

from .family import ModelError, VHSModel, build_cy3_model, validate_model
from .field import QQi, from_json_scalar, to_json_scalar
from .hodge import HodgeData, HodgeError, PolarizationForm
from .hyperkahler import HKError, HKModel, build_hk_model
from .series import DEFAULT_ORDER

SCHEMA_VERSION = 1
KINDS = ("cy3", "abstract_vhs", "hyperkahler")
NUMBER_MODES = ("rational", "float")


class ModelFileError(ValueError):
    """Invalid model file; ``category`` is one of parse, schema, normalization."""

    def __init__(self, category: str, message: str):
        super().__init__(f"{category} error: {message}")
        self.category = category


def _require(data: dict, key: str, kind: str):
    if key not in data:
        raise ModelFileError("schema", f"field '{key}' is required for kind '{kind}'")
    return data[key]


def _scalar(v, mode: str, where: str):
    try:
        x = from_json_scalar(v)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ModelFileError("schema", f"{where}: {exc}") from None
    if mode == "rational" and not isinstance(x, QQi):
        raise ModelFileError("schema", f"{where}: float value {v!r} in a rational-mode file")
    if mode == "float":
        return complex(x)
    return x


def _vector(v, mode: str, where: str, length: int) -> np.ndarray:
    if not isinstance(v, list) or len(v) != length:
        raise ModelFileError("schema", f"{where}: expected a list of {length} scalars")
    out = np.empty(length, dtype=object if mode == "rational" else complex)
    for i, x in enumerate(v):
        out[i] = _scalar(x, mode, f"{where}[{i}]")
    return out


def _matrix(v, mode: str, where: str, shape: tuple) -> np.ndarray:
    if not isinstance(v, list) or len(v) != shape[0]:
        raise ModelFileError("schema", f"{where}: expected {shape[0]} rows")
    return np.array([_vector(r, mode, f"{where}[{i}]", shape[1]) for i, r in enumerate(v)],
                    dtype=object if mode == "rational" else complex)


def _yukawa(data: dict, mode: str, N: int) -> np.ndarray:
    C = np.empty((N, N, N), dtype=object if mode == "rational" else complex)
    C[...] = QQi(0) if mode == "rational" else 0
    if "yukawa" in data:
        raw = data["yukawa"]
        if not (isinstance(raw, list) and len(raw) == N):
            raise ModelFileError("schema", f"field 'yukawa' must be an {N}x{N}x{N} nested list")
        for i in range(N):
            C[i] = _matrix(raw[i], mode, f"yukawa[{i}]", (N, N))
        return C
    if "yukawa_entries" in data:
        seen = {}
        for e in data["yukawa_entries"]:
            idx = tuple(e.get("index", ())) if isinstance(e, dict) else ()
            if len(idx) != 3 or any(not isinstance(x, int) or not 0 <= x < N for x in idx):
                raise ModelFileError("schema", f"yukawa_entries index {list(idx)} must be 3 integers in [0, {N})")
            val = _scalar(e.get("value"), mode, f"yukawa_entries{list(idx)}")
            key = tuple(sorted(idx))
            if key in seen and seen[key][1] != val:
                raise ModelFileError("schema", f"Yukawa tensor not symmetric: C{seen[key][0]} != C{idx}")
            seen[key] = (idx, val)
            for p in set(itertools.permutations(key)):
                C[p] = val
        return C
    raise ModelFileError("schema", "cy3 models need 'yukawa' or 'yukawa_entries'")


def _extras(data: dict, mode: str, N: int, dim: int) -> dict:
    out = {}
    for k, e in enumerate(data.get("extra_coeffs", [])):
        if not isinstance(e, dict) or "index" not in e or "vector" not in e:
            raise ModelFileError("schema", f"extra_coeffs[{k}] needs 'index' and 'vector'")
        I = e["index"]
        if not (isinstance(I, list) and len(I) == N and all(isinstance(x, int) and x >= 0 for x in I)):
            raise ModelFileError("schema", f"extra_coeffs[{k}].index must be {N} non-negative integers")
        out[tuple(I)] = _vector(e["vector"], mode, f"extra_coeffs[{k}].vector", dim)
    return out


def _int_field(data, key, kind, minimum):
    v = _require(data, key, kind)
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise ModelFileError("schema", f"field '{key}' must be an integer >= {minimum}")
    return v


def parse_model(data) -> VHSModel | HKModel:
    if not isinstance(data, dict):
        raise ModelFileError("schema", "model file must contain a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelFileError("schema", f"unsupported schema_version {version!r} (this reader knows {SCHEMA_VERSION})")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ModelFileError("schema", f"field 'kind' must be one of {', '.join(KINDS)}, got {kind!r}")
    mode = data.get("number_mode", "rational")
    if mode not in NUMBER_MODES:
        raise ModelFileError("schema", f"field 'number_mode' must be rational or float, got {mode!r}")
    order = data.get("order", DEFAULT_ORDER)
    if not isinstance(order, int) or order < 2:
        raise ModelFileError("schema", "field 'order' must be an integer >= 2")
    try:
        if kind == "cy3":
            N = _int_field(data, "N", kind, 1)
            C = _yukawa(data, mode, N)
            return build_cy3_model(C, order, _extras(data, mode, N, 2 * N + 2))
        if kind == "hyperkahler":
            N = _int_field(data, "N", kind, 1)
            n = _int_field(data, "n", kind, 2)
            return build_hk_model(N, n, order)
        weight = _int_field(data, "weight", kind, 1)
        hn = _require(data, "hodge_numbers", kind)
        if not (isinstance(hn, list) and len(hn) == weight + 1 and all(isinstance(x, int) and x >= 0 for x in hn)):
            raise ModelFileError("schema", f"field 'hodge_numbers' must list h^(p, n-p) for p = 0..{weight}")
        hodge = HodgeData(weight, tuple(hn))
        d = hodge.total_dim
        G = _matrix(_require(data, "gram_Q", kind), mode, "gram_Q", (d, d))
        R = _matrix(_require(data, "real_structure", kind), mode, "real_structure", (d, d))
        P = PolarizationForm(weight, G, R)
        N = hodge.hodge_numbers[weight - 1]
        raw_E = _require(data, "E", kind)
        if not isinstance(raw_E, list) or len(raw_E) != N:
            raise ModelFileError("schema", f"field 'E' must list {N} matrices (one per h^(n-1,1) direction)")
        E = tuple(_matrix(e, mode, f"E[{i}]", (d, d)) for i, e in enumerate(raw_E))
        model = VHSModel(hodge, P, E, _extras(data, mode, N, d), order, "abstract_vhs")
        validate_model(model)
        return model
    except ModelFileError:
        raise
    except (ModelError, HKError, HodgeError) as exc:
        category = "normalization" if "normaliz" in str(exc) else "schema"
        raise ModelFileError(category, str(exc)) from None


def load_model(path) -> VHSModel | HKModel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelFileError("parse", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError("parse", f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_model(data)


def _enc(x, mode):
    if mode == "float":
        z = complex(x)
        return repr(z.real) if z.imag == 0 else [repr(z.real), repr(z.imag)]
    q = x if isinstance(x, QQi) else QQi(x)
    if q.im == 0:
        num, den = int(q.re.numerator), int(q.re.denominator)
        return num if den == 1 else [num, den]
    return to_json_scalar(q)


def _enc_array(a, mode):
    a = np.asarray(a)
    if a.ndim == 0:
        return _enc(a.item(), mode)
    return [_enc_array(x, mode) for x in a]


def dump_model(model: VHSModel | HKModel) -> dict:
    """Canonical JSON form; parse_model(dump_model(m)) rebuilds an identical model."""
    if isinstance(model, HKModel):
        return {"schema_version": SCHEMA_VERSION, "kind": "hyperkahler", "number_mode": "rational",
                "order": model.vhs.order, "N": model.N, "n": model.n}
    mode = "rational" if model.exact else "float"
    out = {"schema_version": SCHEMA_VERSION, "kind": model.kind, "number_mode": mode, "order": model.order}
    if model.kind == "cy3":
        out["N"] = model.N
        out["yukawa"] = _enc_array(model.yukawa_tensor, mode)
    elif model.kind == "hyperkahler":
        return {"schema_version": SCHEMA_VERSION, "kind": "hyperkahler", "number_mode": "rational",
                "order": model.order, "N": model.N, "n": model.n or 2}
    else:
        out["weight"] = model.weight
        out["hodge_numbers"] = list(model.hodge.hodge_numbers)
        out["gram_Q"] = _enc_array(model.polarization.gram_Q, mode)
        out["real_structure"] = _enc_array(model.polarization.real_structure, mode)
        out["E"] = [_enc_array(e, mode) for e in model.E]
    if model.extra_coeffs:
        out["extra_coeffs"] = [{"index": list(I), "vector": _enc_array(v, mode)}
                               for I, v in sorted(model.extra_coeffs.items())]
    return out


def model_digest(model) -> str:
    text = json.dumps(dump_model(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]
