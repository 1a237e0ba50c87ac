"""Whitney fields on finite point sets and their homogeneous C^m seminorm."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .jets import Jet, JetMismatchError, multi_indices, rebase_matrix

__all__ = ["WhitneyField", "seminorm", "taylor_compat_check", "CompatVerdict"]


@dataclass(frozen=True)
class WhitneyField:
    """One jet per point; each jet is based at its point."""

    points: np.ndarray
    jets: tuple[Jet, ...]

    def __init__(self, points, jets: Sequence[Jet]):
        jets = tuple(jets)
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, jets[0].n if jets else 1)
        if len(pts) != len(jets):
            raise ValueError("need exactly one jet per point")
        if jets:
            n, m, plus = jets[0].n, jets[0].m, jets[0].plus
            for x, P in zip(pts, jets):
                if P.n != n or P.m != m or P.plus != plus:
                    raise JetMismatchError("all jets in a field must share n and m")
                if not np.array_equal(P.base, x):
                    raise ValueError(f"jet based at {P.base.tolist()} attached to point {x.tolist()}")
        if len({tuple(x) for x in pts.tolist()}) != len(pts):
            raise ValueError("points must be pairwise distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "jets", jets)

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def m(self) -> int:
        return self.jets[0].m

    def to_dict(self) -> dict:
        return {"points": self.points.tolist(), "jets": [P.to_dict() for P in self.jets]}

    @classmethod
    def from_dict(cls, data: dict) -> "WhitneyField":
        return cls(data["points"], [Jet.from_dict(j) for j in data["jets"]])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class CompatVerdict:
    ok: bool
    value: float
    witness: tuple | None  # (x index, y index, beta) of the worst ratio


def _worst(W: WhitneyField):
    """Largest ``|d^b (P^x - P^y)(x)| / |x - y|^(m - |b|)`` over ordered pairs."""
    if len(W.jets) < 2:
        return 0.0, None
    n, m = W.n, W.m
    d = W.jets[0].degree
    idx = multi_indices(n, d)
    orders = np.array([sum(a) for a in idx])
    best, arg = -1.0, None
    for i, (x, Px) in enumerate(zip(W.points, W.jets)):
        for j, (y, Py) in enumerate(zip(W.points, W.jets)):
            if i == j:
                continue
            # bring P^y to base x; derivatives of order > m-1 of the difference vanish
            Py_at_x = rebase_matrix(n, d, x - y) @ Py.derivs
            diff = np.abs(Px.derivs - Py_at_x)
            dist = float(np.linalg.norm(x - y))
            ratios = diff / dist ** (m - orders)
            k = int(np.argmax(ratios))
            if ratios[k] > best:
                best, arg = float(ratios[k]), (i, j, idx[k])
    return best, arg


def seminorm(W: WhitneyField) -> float:
    """The homogeneous seminorm of a Whitney field (0 for a singleton).

    Terms with ``|b| = m`` vanish for jets of degree ``m - 1`` and are skipped.
    """
    return _worst(W)[0]


def taylor_compat_check(W: WhitneyField, M: float) -> CompatVerdict:
    """Is the seminorm at most ``M``?  Ties in the witness go to the first pair in index order."""
    if not M > 0:
        raise ValueError("M must be positive")
    value, arg = _worst(W)
    return CompatVerdict(ok=value <= M, value=value, witness=arg)
