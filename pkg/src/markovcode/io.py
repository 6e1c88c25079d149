"""JSON file formats for matrices, policies and solve reports.

Matrix (transition or generator): ``{"n": N, "rows": [[...], ...]}``.
Policy: ``{"n_states": N, "matrix_sha256": ..., "eta": ..., "actions": {"n,l": [...]}}``
where ``matrix_sha256`` hashes the row-major float64 little-endian matrix bytes.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .codebook import assign_codewords
from .errors import ValidationError
from .mdp import CodingPolicy, SolveReport


def read_matrix(path) -> np.ndarray:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return parse_matrix(doc)


def parse_matrix(doc) -> np.ndarray:
    if not isinstance(doc, dict) or "rows" not in doc:
        raise ValidationError('matrix document must be an object with a "rows" field')
    rows = doc["rows"]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ValidationError('"rows" must be a list of lists')
    n = doc.get("n", len(rows))
    if n != len(rows) or any(len(r) != n for r in rows):
        raise ValidationError(f'matrix is not {n}x{n} as declared by "n"')
    try:
        return np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError("matrix entries must be numbers") from exc


def matrix_document(a) -> dict:
    a = np.asarray(a, dtype=float)
    return {"n": int(a.shape[0]), "rows": a.tolist()}


def matrix_sha256(a) -> str:
    a = np.ascontiguousarray(np.asarray(a, dtype="<f8"))
    return hashlib.sha256(a.tobytes()).hexdigest()


def policy_document(policy: CodingPolicy, P, eta: float | None = None, *, words: bool = False) -> dict:
    doc = {
        "n_states": policy.n_symbols,
        "matrix_sha256": matrix_sha256(P),
        "eta": eta,
        "actions": {str(s): list(code) for s, code in policy.items()},
    }
    if words:
        doc["codewords"] = {str(s): list(assign_codewords(code).words) for s, code in policy.items()}
    return doc


def parse_policy(doc) -> CodingPolicy:
    try:
        n = int(doc["n_states"])
        table = {tuple(int(x) for x in key.split(",")): code for key, code in doc["actions"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed policy document: {exc}") from exc
    return CodingPolicy.from_mapping(table, n)


def read_policy(path) -> CodingPolicy:
    try:
        return parse_policy(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def report_document(reports: dict, P) -> dict:
    out = {"n": int(np.asarray(P).shape[0]), "matrix": matrix_document(P), "matrix_sha256": matrix_sha256(P), "policies": {}}
    for kind, rep in reports.items():
        key = getattr(kind, "value", str(kind))
        if isinstance(rep, SolveReport):
            out["policies"][key] = rep.to_dict()
        else:
            out["policies"][key] = {"error": str(rep), "error_type": type(rep).__name__}
    return out


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")
