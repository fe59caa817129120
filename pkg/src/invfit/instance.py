"""JSON instance files.

An instance holds a polyhedron given row by row, an observed point and
optional structural constraints::

    {
      "rows":   [[2, 5], [2, -3], [2, 1], [-2, -1]],
      "senses": [">=", ">=", ">=", ">="],      # optional, default all >=
      "rhs":    [10, -6, 4, -10],
      "nonneg": false,                          # optional, append x >= 0
      "x_hat":  [2.5, 3],
      "c_constraints":   {...},                 # optional, see CostConstraintSet
      "eps_constraints": {...}                  # optional, see EpsConstraintSet
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from invfit.constrained import CostConstraintSet, EpsConstraintSet
from invfit.errors import InputError
from invfit.geometry import Polyhedron, as_point, canonicalize

_KEYS = {"rows", "senses", "rhs", "nonneg", "x_hat", "c_constraints", "eps_constraints",
         "name", "description"}


@dataclass(frozen=True, eq=False)
class Instance:
    poly: Polyhedron
    x_hat: np.ndarray | None = None
    cost_constraints: CostConstraintSet | None = None
    eps_constraints: EpsConstraintSet | None = None


def instance_from_dict(d: Mapping) -> Instance:
    extra = set(d) - _KEYS
    if extra:
        raise InputError(f"unknown instance keys: {sorted(extra)}")
    for key in ("rows", "rhs"):
        if key not in d:
            raise InputError(f"instance is missing '{key}'")
    rows, rhs = d["rows"], d["rhs"]
    senses = d.get("senses") or [">="] * len(rows)
    if not (len(rows) == len(rhs) == len(senses)):
        raise InputError("rows, rhs and senses must have the same length")
    try:
        poly = canonicalize(zip(rows, senses, rhs), nonneg=bool(d.get("nonneg", False)))
        x_hat = as_point(poly, d["x_hat"]) if d.get("x_hat") is not None else None
        cc = CostConstraintSet.from_dict(d["c_constraints"]) if d.get("c_constraints") else None
        ec = EpsConstraintSet.from_dict(d["eps_constraints"]) if d.get("eps_constraints") else None
    except InputError:
        raise
    except (ValueError, TypeError) as e:
        raise InputError(str(e)) from None
    return Instance(poly, x_hat, cc, ec)


def load_instance(path: str | Path) -> Instance:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read instance file: {e}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"instance file is not valid JSON: {e}") from None
    if not isinstance(d, dict):
        raise InputError("instance file must hold a JSON object")
    return instance_from_dict(d)
