"""JSON serialization for plants, controllers, and plain state-space systems.

All writers emit deterministic bytes (sorted keys, fixed separators, trailing
newline); floats use Python's shortest exact representation, so a written
file parses back to bit-identical matrices.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ParseError
from .statespace import Controller, Plant, StateSpace

__all__ = [
    "load_plant",
    "save_plant",
    "load_controller",
    "save_controller",
    "load_statespace",
    "load_system",
]


def _read_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    return raw


def _require_int(raw: dict, key: str, path, minimum: int) -> int:
    if key not in raw:
        raise ParseError(f"{path}: missing required key '{key}'")
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{path}: key '{key}' must be an integer")
    if value < minimum:
        raise ParseError(f"{path}: key '{key}' must be >= {minimum}, got {value}")
    return value


def _matrix(raw: dict, key: str, rows: int, cols: int, path, required: bool) -> np.ndarray:
    if key not in raw:
        if required:
            raise ParseError(f"{path}: missing required key '{key}'")
        return np.zeros((rows, cols))
    try:
        arr = np.asarray(raw[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: key '{key}' is not a numeric matrix: {exc}") from exc
    if arr.size == 0:
        arr = arr.reshape(
            (0, cols) if rows == 0 else (rows, 0) if cols == 0 else arr.shape
        )
    if arr.ndim == 1 and rows == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape != (rows, cols):
        raise DimensionMismatch(
            f"{path}: block '{key}' must have shape ({rows}, {cols}), "
            f"got {tuple(arr.shape)}"
        )
    if arr.size and not np.all(np.isfinite(arr)):
        raise ParseError(f"{path}: block '{key}' contains non-finite entries")
    return arr


def load_plant(path) -> Plant:
    """Read a generalized plant from JSON.

    Required keys: n, m1, m2, p1, p2 and the blocks A, B1, B2, C1, C2.
    The D blocks default to zeros when absent.  Unknown keys (such as name
    or comment fields) are ignored.
    """
    raw = _read_json(path)
    n = _require_int(raw, "n", path, 1)
    m1 = _require_int(raw, "m1", path, 1)
    m2 = _require_int(raw, "m2", path, 1)
    p1 = _require_int(raw, "p1", path, 1)
    p2 = _require_int(raw, "p2", path, 1)
    return Plant(
        A=_matrix(raw, "A", n, n, path, True),
        B1=_matrix(raw, "B1", n, m1, path, True),
        B2=_matrix(raw, "B2", n, m2, path, True),
        C1=_matrix(raw, "C1", p1, n, path, True),
        C2=_matrix(raw, "C2", p2, n, path, True),
        D11=_matrix(raw, "D11", p1, m1, path, False),
        D12=_matrix(raw, "D12", p1, m2, path, False),
        D21=_matrix(raw, "D21", p2, m1, path, False),
        D22=_matrix(raw, "D22", p2, m2, path, False),
    )


def _dump(obj: dict, path) -> None:
    Path(path).write_text(
        json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=1) + "\n"
    )


def save_plant(plant: Plant, path, *, name: str | None = None) -> None:
    obj = {
        "n": plant.n,
        "m1": plant.m1,
        "m2": plant.m2,
        "p1": plant.p1,
        "p2": plant.p2,
        "A": plant.A.tolist(),
        "B1": plant.B1.tolist(),
        "B2": plant.B2.tolist(),
        "C1": plant.C1.tolist(),
        "C2": plant.C2.tolist(),
        "D11": plant.D11.tolist(),
        "D12": plant.D12.tolist(),
        "D21": plant.D21.tolist(),
        "D22": plant.D22.tolist(),
    }
    if name is not None:
        obj["name"] = name
    _dump(obj, path)


def load_controller(path) -> Controller:
    """Read a controller from JSON with keys nK, AK, BK, CK, DK.

    DK is always required and fixes the port widths; for nK = 0 the other
    blocks may be empty lists or omitted.
    """
    raw = _read_json(path)
    nK = _require_int(raw, "nK", path, 0)
    if "DK" not in raw:
        raise ParseError(f"{path}: missing required key 'DK'")
    try:
        DK = np.atleast_2d(np.asarray(raw["DK"], dtype=float))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: key 'DK' is not a numeric matrix: {exc}") from exc
    if DK.ndim != 2 or min(DK.shape) < 1:
        raise DimensionMismatch(f"{path}: block 'DK' must be a nonempty matrix")
    nu, ny = DK.shape
    required = nK > 0
    return Controller(
        AK=_matrix(raw, "AK", nK, nK, path, required),
        BK=_matrix(raw, "BK", nK, ny, path, required),
        CK=_matrix(raw, "CK", nu, nK, path, required),
        DK=DK,
    )


def save_controller(k: Controller, path) -> None:
    obj = {
        "nK": k.order,
        "AK": k.AK.tolist(),
        "BK": k.BK.tolist(),
        "CK": k.CK.tolist(),
        "DK": k.DK.tolist(),
    }
    _dump(obj, path)


def load_statespace(path) -> StateSpace:
    """Read a plain (A, B, C, D) system; D defaults to zeros."""
    raw = _read_json(path)
    for key in ("A", "B", "C"):
        if key not in raw:
            raise ParseError(f"{path}: missing required key '{key}'")
    try:
        A = np.atleast_2d(np.asarray(raw["A"], dtype=float))
        B = np.atleast_2d(np.asarray(raw["B"], dtype=float))
        C = np.atleast_2d(np.asarray(raw["C"], dtype=float))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: non-numeric matrix: {exc}") from exc
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatch(f"{path}: block 'A' must be square")
    if B.shape[0] != n and B.shape[1] == n:
        B = B.T
    m = B.shape[1]
    p = C.shape[0]
    D = _matrix(raw, "D", p, m, path, False)
    return StateSpace(A, B, C, D)


def load_system(path):
    """Dispatch on file keys: plant (B1), controller (DK), or state space (B)."""
    raw = _read_json(path)
    if "B1" in raw:
        return load_plant(path)
    if "DK" in raw or "nK" in raw:
        return load_controller(path)
    if "B" in raw:
        return load_statespace(path)
    raise ParseError(
        f"{path}: cannot identify file kind (expected plant, controller, "
        f"or state-space keys)"
    )
