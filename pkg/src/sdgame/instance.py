"""JSON instance files: parsing, serialization and content digests.

An instance document looks like::

    {
      "n": 1, "m1": 1, "m2": 1,
      "grid": {"t0": 0.0, "T": 1.0, "n_steps": 1000},
      "coefficients": {
        "A": [[0.0]], "B1": [[1.0]], "sigma": {"profile": "sinusoid",
          "params": {"offset": [0.0], "amplitude": [0.5], "omega": 6.28, "phase": 0.0}},
        "player1": {"G": [[1.0]], "R11": [[1.0]]},
        "player2": {"G": [[1.0]], "R22": [[1.0]]}
      }
    }

Each coefficient is a nested array or a profile object. Profiles:

``constant``
    ``{"value": M}``
``linear``
    ``{"a": M0, "b": M1}`` meaning ``M0 + M1 s``
``sinusoid``
    ``{"offset": M0, "amplitude": M1, "omega": w, "phase": p}`` meaning
    ``M0 + M1 sin(w s + p)``

Missing coefficients are zero.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import fields
from pathlib import Path
from typing import Any

import numpy as np

from .model import GameSpec, PlayerCost, TimeGrid

STATE_FIELDS = ("A", "B1", "B2", "C", "D1", "D2", "b", "sigma")
COST_FIELDS = tuple(f.name for f in fields(PlayerCost))
PROFILES = ("constant", "linear", "sinusoid")


class InstanceError(ValueError):
    """Malformed instance document; ``field`` locates the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


def _array(value: Any, field: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceError(field, f"expected a number or nested numeric array ({exc})") from None
    if not np.all(np.isfinite(arr)):
        raise InstanceError(field, "non-finite entry")
    return arr


def _param(params: dict, key: str, field: str) -> Any:
    if key not in params:
        raise InstanceError(f"{field}.params", f"missing '{key}'")
    return params[key]


def parse_coefficient(value: Any, field: str):
    """Turn a coefficient entry into a sampler accepted by :class:`GameSpec`."""
    if value is None:
        return None
    if not isinstance(value, dict):
        return _array(value, field)
    unknown = set(value) - {"profile", "params"}
    if unknown:
        raise InstanceError(field, f"unknown keys {sorted(unknown)}")
    name = value.get("profile")
    params = value.get("params")
    if name not in PROFILES:
        raise InstanceError(f"{field}.profile", f"expected one of {list(PROFILES)}, got {name!r}")
    if not isinstance(params, dict):
        raise InstanceError(f"{field}.params", "expected an object")
    if name == "constant":
        return _array(_param(params, "value", field), f"{field}.params.value")
    if name == "linear":
        a = _array(_param(params, "a", field), f"{field}.params.a")
        b = _array(_param(params, "b", field), f"{field}.params.b")
        if a.shape != b.shape:
            raise InstanceError(f"{field}.params", f"a has shape {a.shape} but b has {b.shape}")
        return lambda s, a=a, b=b: a + b * s
    off = _array(_param(params, "offset", field), f"{field}.params.offset")
    amp = _array(_param(params, "amplitude", field), f"{field}.params.amplitude")
    omega = float(_array(_param(params, "omega", field), f"{field}.params.omega"))
    phase = float(_array(params.get("phase", 0.0), f"{field}.params.phase"))
    if off.shape != amp.shape:
        raise InstanceError(f"{field}.params", f"offset has shape {off.shape} but amplitude has {amp.shape}")
    return lambda s, o=off, a=amp, w=omega, p=phase: o + a * np.sin(w * s + p)


def _int(doc: dict, key: str, minimum: int) -> int:
    if key not in doc:
        raise InstanceError(key, "missing")
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise InstanceError(key, f"expected an integer >= {minimum}, got {v!r}")
    return v


def parse_document(doc: Any) -> tuple[GameSpec, TimeGrid]:
    """Build the game and grid described by a decoded JSON document."""
    if not isinstance(doc, dict):
        raise InstanceError("<root>", "expected an object")
    n = _int(doc, "n", 1)
    m1 = _int(doc, "m1", 0)
    m2 = _int(doc, "m2", 0)
    g = doc.get("grid")
    if not isinstance(g, dict):
        raise InstanceError("grid", "expected an object with t0, T, n_steps")
    try:
        grid = TimeGrid(float(g.get("t0", 0.0)), float(g["T"]), g["n_steps"])
    except KeyError as exc:
        raise InstanceError("grid", f"missing {exc}") from None
    except (TypeError, ValueError) as exc:
        raise InstanceError("grid", str(exc)) from None
    coeffs = doc.get("coefficients", {})
    if not isinstance(coeffs, dict):
        raise InstanceError("coefficients", "expected an object")
    unknown = set(coeffs) - set(STATE_FIELDS) - {"player1", "player2"}
    if unknown:
        raise InstanceError("coefficients", f"unknown keys {sorted(unknown)}")
    state = {k: parse_coefficient(coeffs.get(k), f"coefficients.{k}") for k in STATE_FIELDS}
    players = []
    for p in ("player1", "player2"):
        pc = coeffs.get(p, {})
        if not isinstance(pc, dict):
            raise InstanceError(f"coefficients.{p}", "expected an object")
        bad = set(pc) - set(COST_FIELDS)
        if bad:
            raise InstanceError(f"coefficients.{p}", f"unknown keys {sorted(bad)}")
        players.append(
            PlayerCost(**{k: parse_coefficient(pc.get(k), f"coefficients.{p}.{k}") for k in COST_FIELDS})
        )
    return GameSpec(n=n, m1=m1, m2=m2, player1=players[0], player2=players[1], **state), grid


def load_document(path: str | Path) -> dict:
    """Read and decode a JSON instance file."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None


def _encode(value) -> Any:
    if value is None:
        return None
    if callable(value):
        raise ValueError("time-dependent callables cannot be serialized")
    return np.asarray(value, dtype=float).tolist()


def spec_to_document(spec: GameSpec, grid: TimeGrid) -> dict:
    """Serialize a game with constant coefficients."""
    coeffs: dict[str, Any] = {}
    for k in STATE_FIELDS:
        v = _encode(getattr(spec, k))
        if v is not None:
            coeffs[k] = v
    for name, pc in (("player1", spec.player1), ("player2", spec.player2)):
        coeffs[name] = {k: _encode(getattr(pc, k)) for k in COST_FIELDS if getattr(pc, k) is not None}
    return {
        "n": spec.n, "m1": spec.m1, "m2": spec.m2,
        "grid": {"t0": grid.t0, "T": grid.T, "n_steps": grid.n_steps},
        "coefficients": coeffs,
    }


def digest(doc: dict) -> str:
    """SHA-256 of the canonical JSON encoding (sorted keys, no whitespace)."""
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return "sha256:" + hashlib.sha256(canon.encode()).hexdigest()
