"""JSON file formats: matrices, channels, relations, profiles.

Matrix: ``{"dim": n, "re": [[...]], "im": [[...]]}`` (row-major). Kraus
operators may be rectangular, in which case ``dim`` is ``[rows, cols]``.
Infinite divergence values are written as the string ``"inf"``.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .channels import DensityOperator, KrausChannel, NeighborRelation
from .errors import FormatError


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    dim = m.shape[0] if m.shape[0] == m.shape[1] else [m.shape[0], m.shape[1]]
    return {"dim": dim, "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj, where: str = "matrix") -> np.ndarray:
    if not isinstance(obj, dict):
        raise FormatError(where, "expected an object with keys dim, re, im")
    unknown = set(obj) - {"dim", "re", "im"}
    if unknown:
        raise FormatError(where, f"unknown keys {sorted(unknown)}")
    for key in ("dim", "re"):
        if key not in obj:
            raise FormatError(f"{where}.{key}", "missing")
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}.re", f"not a numeric 2-d array ({exc})") from None
    if re.ndim != 2:
        raise FormatError(f"{where}.re", "must be a 2-d array")
    if im.shape != re.shape:
        raise FormatError(f"{where}.im", f"shape {im.shape} differs from re {re.shape}")
    dim = obj["dim"]
    expected = list(re.shape) if re.shape[0] != re.shape[1] else re.shape[0]
    if isinstance(dim, list):
        dim = dim if dim[0] != dim[1] else dim[0]
    if dim != expected:
        raise FormatError(f"{where}.dim", f"{obj['dim']} does not match data shape {re.shape}")
    m = re + 1j * im
    if not np.all(np.isfinite(m)):
        raise FormatError(where, "non-finite entries")
    return m


def channel_to_json(ch: KrausChannel) -> dict:
    return {
        "dim_in": ch.dim_in,
        "dim_out": ch.dim_out,
        "kraus": [matrix_to_json(k) for k in ch.kraus],
        "label": ch.label,
    }


def channel_from_json(obj) -> KrausChannel:
    if not isinstance(obj, dict):
        raise FormatError("channel", "expected an object")
    unknown = set(obj) - {"dim_in", "dim_out", "kraus", "label"}
    if unknown:
        raise FormatError("channel", f"unknown keys {sorted(unknown)}")
    if "kraus" not in obj or not isinstance(obj["kraus"], list) or not obj["kraus"]:
        raise FormatError("kraus", "missing or empty list")
    kraus = [matrix_from_json(k, f"kraus[{i}]") for i, k in enumerate(obj["kraus"])]
    for key, axis in (("dim_out", 0), ("dim_in", 1)):
        if key in obj and obj[key] != kraus[0].shape[axis]:
            raise FormatError(key, f"{obj[key]} disagrees with Kraus shape {kraus[0].shape}")
    try:
        return KrausChannel(kraus, label=str(obj.get("label", "")))
    except ValueError as exc:
        raise FormatError("kraus", str(exc)) from None


def relation_to_json(rel: NeighborRelation) -> list:
    return [{"rho": matrix_to_json(r.mat), "sigma": matrix_to_json(s.mat)} for r, s in rel.pairs]


def relation_from_json(obj) -> NeighborRelation:
    if not isinstance(obj, list) or not obj:
        raise FormatError("relation", "expected a nonempty list of {rho, sigma}")
    pairs = []
    for i, item in enumerate(obj):
        if not isinstance(item, dict) or set(item) != {"rho", "sigma"}:
            raise FormatError(f"relation[{i}]", "expected exactly the keys rho, sigma")
        rho = matrix_from_json(item["rho"], f"relation[{i}].rho")
        sigma = matrix_from_json(item["sigma"], f"relation[{i}].sigma")
        try:
            pairs.append((DensityOperator(rho), DensityOperator(sigma)))
        except ValueError as exc:
            raise FormatError(f"relation[{i}]", str(exc)) from None
    try:
        return NeighborRelation(pairs)
    except ValueError as exc:
        raise FormatError("relation", str(exc)) from None


def ext_real(x: float):
    return "inf" if x == math.inf else float(x)


def ext_real_from(x) -> float:
    if x == "inf":
        return math.inf
    return float(x)


def load_json(path, what: str):
    p = Path(path)
    if not p.is_file():
        raise FormatError(what, f"file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(what, f"invalid JSON ({exc})") from None


def dumps(obj) -> str:
    """Canonical JSON used for every report (sorted keys, stable floats)."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"
