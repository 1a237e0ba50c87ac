"""Dyadic cubes and the Calderon-Zygmund decomposition driven by a finite set.

A cube is *OK* for ``E`` when ``#(E & 5Q) <= 1`` and its side is at most 1.
The decomposition keeps the maximal OK dyadic cubes inside a region made of
unit cubes; each cube is then classified:

* type 1: ``5Q`` meets ``E`` (in exactly one point, the anchor);
* type 2: ``5Q`` misses ``E`` and the side is below 1; the anchor is taken
  from ``E & 5Q+`` where ``Q+`` is the dyadic parent;
* type 3: ``5Q`` misses ``E`` and the side is 1; no anchor.

All geometry is exact: corners are integers, sides are powers of two, and
every comparison is between dyadic rationals, which floats represent exactly.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DyadicCube",
    "CZDecomposition",
    "is_ok",
    "cz_decompose",
    "classify_and_anchor",
    "check_good_geometry",
    "padded_region",
    "decomposition_to_json",
    "decomposition_to_csv",
    "RegionError",
]


class RegionError(ValueError):
    """The region does not contain the point set strictly inside."""


@dataclass(frozen=True, order=True)
class DyadicCube:
    """``[2^k i_1, 2^k (i_1 + 1)) x ... x [2^k i_n, 2^k (i_n + 1))``."""

    level: int
    corner: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.corner)

    @property
    def side(self) -> float:
        return 2.0 ** self.level

    @property
    def lo(self) -> tuple[float, ...]:
        return tuple(self.side * i for i in self.corner)

    @property
    def hi(self) -> tuple[float, ...]:
        return tuple(self.side * (i + 1) for i in self.corner)

    @property
    def center(self) -> np.ndarray:
        return (np.array(self.lo) + np.array(self.hi)) / 2.0

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.level + 1, tuple(i >> 1 for i in self.corner))

    def children(self) -> list["DyadicCube"]:
        return [DyadicCube(self.level - 1, tuple(2 * i + b for i, b in zip(self.corner, bits)))
                for bits in itertools.product((0, 1), repeat=self.n)]

    def dilate_bounds(self, factor) -> tuple[np.ndarray, np.ndarray]:
        """Bounds of the concentric cube ``factor * Q`` (``factor`` dyadic, e.g. 5 or 65/64)."""
        factor = Fraction(factor)
        pad = (factor - 1) / 2
        s = Fraction(2) ** self.level
        lo = np.array([float(s * (i - pad)) for i in self.corner])
        hi = np.array([float(s * (i + 1 + pad)) for i in self.corner])
        return lo, hi

    def contains(self, X: np.ndarray, factor=1) -> np.ndarray:
        """Half-open membership of points in ``factor * Q``."""
        lo, hi = self.dilate_bounds(factor)
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.all((X >= lo) & (X < hi), axis=1)

    def contains_cube(self, other: "DyadicCube") -> bool:
        if other.level > self.level:
            return False
        shift = self.level - other.level
        return tuple(i >> shift for i in other.corner) == self.corner

    def to_dict(self) -> dict:
        return {"level": self.level, "corner": list(self.corner)}


def _as_points(E, n: int | None = None) -> np.ndarray:
    E = np.asarray(E, dtype=float)
    if E.size == 0:
        return E.reshape(0, n or 1)
    if E.ndim == 1:
        E = E.reshape(-1, n or 1)
    return E


def is_ok(Q: DyadicCube, E) -> bool:
    """``#(E & 5Q) <= 1`` and side at most 1."""
    E = _as_points(E, Q.n)
    return Q.level <= 0 and int(np.count_nonzero(Q.contains(E, 5))) <= 1


@dataclass
class CZDecomposition:
    cubes: list[DyadicCube]
    region: tuple[DyadicCube, ...]
    points: np.ndarray
    types: list[int] = field(default_factory=list)
    anchors: list[int | None] = field(default_factory=list)  # index into points

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def anchor_point(self, i: int) -> np.ndarray | None:
        a = self.anchors[i]
        return None if a is None else self.points[a]

    def levels(self) -> np.ndarray:
        return np.array([q.level for q in self.cubes])


def padded_region(E, pad: int = 5, n: int | None = None) -> tuple[DyadicCube, ...]:
    """Unit cubes covering the bounding box of ``E`` enlarged by ``pad`` on every side."""
    E = _as_points(E, n)
    if E.shape[0] == 0:
        lo = np.zeros(E.shape[1], dtype=int)
        hi = np.zeros(E.shape[1], dtype=int)
    else:
        lo = np.floor(E.min(axis=0)).astype(int)
        hi = np.floor(E.max(axis=0)).astype(int)
    ranges = [range(a - pad, b + pad + 1) for a, b in zip(lo, hi)]
    return tuple(DyadicCube(0, c) for c in itertools.product(*ranges))


def cz_decompose(E, region: Sequence[DyadicCube]) -> CZDecomposition:
    """Maximal OK dyadic cubes partitioning ``region`` (a union of unit cubes)."""
    region = tuple(region)
    if not region:
        raise RegionError("empty region")
    n = region[0].n
    E = _as_points(E, n)
    if any(q.level != 0 or q.n != n for q in region):
        raise RegionError("region must be a union of level-0 cubes in R^n")
    if len(set(region)) != len(region):
        raise RegionError("region cubes repeat")
    if E.shape[0] and len({tuple(x) for x in E.tolist()}) != E.shape[0]:
        raise RegionError("points of E must be distinct")
    if not np.all(np.isfinite(E)):
        raise RegionError("points must be finite")
    # strict interior: the unit cube containing each point and all of its
    # neighbours must belong to the region
    cells = set(q.corner for q in region)
    for x in E:
        base = np.floor(x).astype(int)
        for off in itertools.product((-1, 0, 1), repeat=n):
            if tuple(int(b + o) for b, o in zip(base, off)) not in cells:
                raise RegionError(f"point {x.tolist()} is not strictly inside the region")

    cubes: list[DyadicCube] = []

    def visit(Q: DyadicCube, local: np.ndarray) -> None:
        # points that could lie in 5Q of Q or any descendant
        inside = local[Q.contains(local, 5)] if local.shape[0] else local
        if inside.shape[0] <= 1:
            cubes.append(Q)
            return
        for child in Q.children():
            visit(child, inside)

    for Q in region:
        visit(Q, E)
    cubes.sort(key=lambda q: (q.lo, q.level))
    return CZDecomposition(cubes=cubes, region=region, points=E)


def classify_and_anchor(dec: CZDecomposition, E=None) -> CZDecomposition:
    """Fill in cube types and anchor indices (into ``dec.points``)."""
    pts = dec.points if E is None else _as_points(E, dec.n)
    types, anchors = [], []
    for Q in dec.cubes:
        hit = np.nonzero(Q.contains(pts, 5))[0]
        if hit.size:
            assert hit.size == 1, f"cube {Q} is not OK"
            types.append(1)
            anchors.append(int(hit[0]))
        elif Q.level < 0:
            near = np.nonzero(Q.parent().contains(pts, 5))[0]
            assert near.size >= 1, f"type-2 cube {Q} has no point in the parent's 5-dilate"
            c = Q.center
            key = [(float(np.sum((pts[i] - c) ** 2)), tuple(pts[i])) for i in near]
            anchors.append(int(near[min(range(len(near)), key=lambda j: key[j])]))
            types.append(2)
        else:
            types.append(3)
            anchors.append(None)
    return replace(dec, types=types, anchors=anchors)


def _touch(a: DyadicCube, b: DyadicCube, factor) -> bool:
    alo, ahi = a.dilate_bounds(factor)
    blo, bhi = b.dilate_bounds(factor)
    return bool(np.all(alo <= bhi) and np.all(blo <= ahi))


def check_good_geometry(cubes: Sequence[DyadicCube], factor=Fraction(65, 64)
                        ) -> list[tuple[DyadicCube, DyadicCube]]:
    """Pairs whose closed ``factor``-dilates meet but whose levels differ by more than one."""
    if not cubes:
        return []
    los = np.array([q.dilate_bounds(factor)[0] for q in cubes])
    his = np.array([q.dilate_bounds(factor)[1] for q in cubes])
    lv = np.array([q.level for q in cubes])
    bad = []
    for i in range(len(cubes)):
        meet = np.all((los[i] <= his) & (los <= his[i]), axis=1)
        far = np.abs(lv - lv[i]) > 1
        for j in np.nonzero(meet & far)[0]:
            if j > i:
                bad.append((cubes[i], cubes[int(j)]))
    return bad


def max_overlap(cubes: Sequence[DyadicCube], X: np.ndarray, factor=Fraction(65, 64)) -> int:
    """Largest number of closed ``factor``-dilates containing a single sample point."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    count = np.zeros(X.shape[0], dtype=int)
    for q in cubes:
        lo, hi = q.dilate_bounds(factor)
        count += np.all((X >= lo) & (X <= hi), axis=1)
    return int(count.max()) if count.size else 0


def decomposition_to_json(dec: CZDecomposition) -> str:
    rows = []
    for i, q in enumerate(dec.cubes):
        a = dec.anchor_point(i) if dec.anchors else None
        rows.append({"level": q.level, "corner": list(q.corner),
                     "type": dec.types[i] if dec.types else None,
                     "anchor": None if a is None else a.tolist()})
    return json.dumps(rows, indent=1)


def decomposition_to_csv(dec: CZDecomposition, header_comment: str | None = None) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    n = dec.n
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "type"] + [f"lo{i + 1}" for i in range(n)] + [f"hi{i + 1}" for i in range(n)]
               + [f"anchor{i + 1}" for i in range(n)])
    for i, q in enumerate(dec.cubes):
        a = dec.anchor_point(i) if dec.anchors else None
        anchor = [""] * n if a is None else [repr(float(v)) for v in a]
        w.writerow([q.level, dec.types[i] if dec.types else ""] + [repr(v) for v in q.lo]
                   + [repr(v) for v in q.hi] + anchor)
    return buf.getvalue()


def cubes_from_json(text: str) -> list[DyadicCube]:
    return [DyadicCube(int(r["level"]), tuple(int(c) for c in r["corner"])) for r in json.loads(text)]


def enumerate_ok_maximal(E, region: Iterable[DyadicCube], min_level: int = -10) -> list[DyadicCube]:
    """Brute-force maximal OK cubes by scanning every dyadic cube down to ``min_level``.

    Independent of :func:`cz_decompose`; used as a test oracle.
    """
    region = list(region)
    n = region[0].n
    E = _as_points(E, n)
    out = []
    for Q0 in region:
        for level in range(0, min_level - 1, -1):
            k = 2 ** (-level)
            for off in itertools.product(range(k), repeat=n):
                Q = DyadicCube(level, tuple(c * k + o for c, o in zip(Q0.corner, off)))
                if not is_ok(Q, E):
                    continue
                anc, ok_anc = Q, False
                while anc.level < 0:
                    anc = anc.parent()
                    if is_ok(anc, E):
                        ok_anc = True
                        break
                if not ok_anc:
                    out.append(Q)
    out.sort(key=lambda q: (q.lo, q.level))
    return out
