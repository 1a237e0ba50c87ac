"""Evaluable C^m functions with exact partial derivatives.

A :class:`FunctionHandle` is a small expression tree.  Evaluation works in
truncated-Taylor arithmetic: every node returns, at each query point, the
monomial coefficients of its Taylor polynomial up to the requested order,
so products, quotients and compositions are differentiated exactly by the
Leibniz and Faa di Bruno rules (see :func:`nonneg_whitney.jets.taylor_mul`).
Finite differences only appear in the tests.

Nodes may carry a bounding box outside which they vanish identically; the
evaluator returns exact zeros there without touching the subtree.

The bump and partition constructions built on top of this:

* :func:`smoothstep` -- the C^m profile ``S_m``;
* :func:`build_bumps` -- the cutoff ``chi``, the annular ``phi`` and its
  dyadic dilates ``phi_k``;
* :class:`BoxPartition` -- a normalized partition of unity subordinate to
  dilated boxes, used for the Whitney partition of a CZ decomposition
  (:func:`whitney_partition`) and for the unit-scale partition
  (:func:`unit_partition`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .jets import (Jet, factorials, multi_indices, taylor_compose,
                   taylor_mul, _monomials, _shift_table)

__all__ = [
    "FunctionHandle",
    "constant",
    "coordinate",
    "polynomial",
    "norm_power",
    "smoothstep",
    "Univariate",
    "SIN",
    "COS",
    "EXP",
    "radial_cutoff",
    "build_bumps",
    "Bumps",
    "BoxPartition",
    "whitney_partition",
    "unit_partition",
    "GeometryError",
    "grid_dump_csv",
]


class GeometryError(ValueError):
    """A partition was requested on cubes that violate good geometry."""


def as_points(X, n: int) -> np.ndarray:
    """Coerce ``X`` to shape ``(N, n)``; scalars and 1-D arrays are accepted for n=1."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X.reshape(-1, 1) if n == 1 else X.reshape(1, -1)
    if X.shape[-1] != n:
        raise ValueError(f"points have {X.shape[-1]} coordinates, function expects n={n}")
    return X


def _layout_size(n: int, d: int) -> int:
    return len(multi_indices(n, d))


# ==========================================================================
# univariate building blocks: objects returning g^(k)(u) for k = 0..d
# ==========================================================================

class Univariate:
    """A univariate function given by a callable ``(u, d) -> (N, d+1)`` array."""

    def __init__(self, name: str, derivs: Callable[[np.ndarray, int], np.ndarray]):
        self.name = name
        self._derivs = derivs

    def derivatives(self, u: np.ndarray, d: int) -> np.ndarray:
        return self._derivs(np.asarray(u, dtype=float), d)

    def __repr__(self):
        return f"Univariate({self.name})"


def _cyclic(u, d, cycle):
    s, c = np.sin(u), np.cos(u)
    table = {"s": s, "c": c, "-s": -s, "-c": -c}
    return np.stack([table[cycle[k % 4]] for k in range(d + 1)], axis=-1)


SIN = Univariate("sin", lambda u, d: _cyclic(u, d, ["s", "c", "-s", "-c"]))
COS = Univariate("cos", lambda u, d: _cyclic(u, d, ["c", "-s", "-c", "s"]))
EXP = Univariate("exp", lambda u, d: np.repeat(np.exp(u)[..., None], d + 1, axis=-1))


def power(a: float) -> Univariate:
    """``u -> u**a`` for ``u > 0``."""
    def derivs(u, d):
        out = np.empty(u.shape + (d + 1,))
        coef = 1.0
        for k in range(d + 1):
            out[..., k] = coef * u ** (a - k)
            coef *= a - k
        return out
    return Univariate(f"pow({a})", derivs)


RECIPROCAL = power(-1.0)
RSQRT = power(-0.5)


@lru_cache(maxsize=None)
def _smoothstep_poly(m: int) -> np.ndarray:
    # S_m(t) = int_0^t s^m (1-s)^m ds / B(m+1, m+1)
    base = npoly.polypow([0.0, 1.0], m)
    base = npoly.polymul(base, npoly.polypow([1.0, -1.0], m))
    integ = npoly.polyint(base)
    return integ / npoly.polyval(1.0, integ)


def smoothstep_derivs(t: np.ndarray, m: int, d: int) -> np.ndarray:
    """``S_m^(k)(t)`` for ``k = 0..d``; exactly 0 for ``t <= 0`` and 1 for ``t >= 1``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (d + 1,))
    out[..., 0] = np.where(t >= 1.0, 1.0, 0.0)
    inside = (t > 0.0) & (t < 1.0)
    if np.any(inside):
        c = _smoothstep_poly(m)
        ti = t[inside]
        for k in range(d + 1):
            out[inside, k] = npoly.polyval(ti, c)
            c = npoly.polyder(c)
    return out


def smoothstep(m: int) -> Univariate:
    """The C^m profile rising from 0 on ``t <= 0`` to 1 on ``t >= 1``."""
    return Univariate(f"S_{m}", lambda t, d: smoothstep_derivs(t, m, d))


# ==========================================================================
# handles
# ==========================================================================

class FunctionHandle:
    """Base class: a real function on R^n with Taylor evaluation.

    Subclasses implement ``_taylor(X, d)`` returning monomial coefficients of
    shape ``(N, D)`` at the points ``X`` (already masked to the support box).
    """

    def __init__(self, n: int, bbox=None):
        self.n = int(n)
        if bbox is not None:
            lo, hi = (np.asarray(b, dtype=float).reshape(self.n) for b in bbox)
            bbox = (lo, hi)
        self.bbox = bbox

    # -- core evaluation --------------------------------------------------
    def _taylor(self, X: np.ndarray, d: int) -> np.ndarray:
        raise NotImplementedError

    def taylor(self, X, d: int) -> np.ndarray:
        """Monomial Taylor coefficients of order ``<= d`` at each point."""
        X = as_points(X, self.n)
        D = _layout_size(self.n, d)
        if self.bbox is None:
            return self._taylor(X, d)
        lo, hi = self.bbox
        mask = np.all((X >= lo) & (X <= hi), axis=1)
        out = np.zeros((X.shape[0], D))
        if np.any(mask):
            out[mask] = self._taylor(X[mask], d)
        return out

    def derivs(self, X, d: int) -> np.ndarray:
        """Partial derivatives ``d^b F`` for all ``|b| <= d``, layout of :func:`multi_indices`."""
        return self.taylor(X, d) * factorials(self.n, d)

    def __call__(self, X) -> np.ndarray:
        return self.taylor(X, 0)[:, 0]

    def deriv(self, x, beta: Sequence[int]) -> float:
        beta = tuple(int(b) for b in beta)
        d = sum(beta)
        vals = self.derivs(as_points(x, self.n)[:1], d)[0]
        return float(vals[multi_indices(self.n, d).index(beta)])

    # -- algebra ------------------------------------------------------------
    def _coerce(self, other) -> "FunctionHandle":
        if isinstance(other, FunctionHandle):
            if other.n != self.n:
                raise ValueError("dimension mismatch")
            return other
        return constant(self.n, float(other))

    def __add__(self, other):
        return Sum(self, self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Sum(self, Scaled(-1.0, self._coerce(other)))

    def __rsub__(self, other):
        return Sum(self._coerce(other), Scaled(-1.0, self))

    def __neg__(self):
        return Scaled(-1.0, self)

    def __mul__(self, other):
        if isinstance(other, FunctionHandle):
            return Product(self, self._coerce(other))
        return Scaled(float(other), self)

    __rmul__ = __mul__

    def compose(self, g: Univariate, bbox=None) -> "FunctionHandle":
        return Compose(g, self, bbox=bbox)

    def rsqrt(self) -> "FunctionHandle":
        return Compose(RSQRT, self)

    def translate(self, shift) -> "FunctionHandle":
        """``y -> F(y - shift)``."""
        shift = np.asarray(shift, dtype=float).reshape(self.n)
        return Affine(self, 1.0, -shift)

    def dilate(self, s: float) -> "FunctionHandle":
        """``y -> F(s * y)``."""
        return Affine(self, float(s), np.zeros(self.n))


class Constant(FunctionHandle):
    def __init__(self, n: int, value: float):
        super().__init__(n, bbox=None)
        self.value = float(value)

    def _taylor(self, X, d):
        out = np.zeros((X.shape[0], _layout_size(self.n, d)))
        out[:, 0] = self.value
        return out

    def __repr__(self):
        return f"Constant({self.value})"


def constant(n: int, value: float) -> FunctionHandle:
    return Constant(n, value)


class Polynomial(FunctionHandle):
    """A polynomial given as a :class:`Jet` (any base)."""

    def __init__(self, jet: Jet):
        super().__init__(jet.n)
        self.jet = jet

    def _taylor(self, X, d):
        P = self.jet
        n, dj = P.n, P.degree
        bi, gi, ei, efac = _shift_table(n, dj)
        mono = _monomials(X - P.base, n, dj)
        # derivatives of P at every point, then normalized
        terms = mono[:, ei] * (P.derivs[gi] / efac)
        D = _layout_size(n, dj)
        scatter = np.zeros((len(bi), D))
        scatter[np.arange(len(bi)), bi] = 1.0
        at_x = (terms @ scatter) / factorials(n, dj)
        out = np.zeros((X.shape[0], _layout_size(n, d)))
        k = min(out.shape[1], D)
        out[:, :k] = at_x[:, :k]
        return out

    def __repr__(self):
        return f"Polynomial({self.jet!r})"


def polynomial(jet: Jet) -> FunctionHandle:
    return Polynomial(jet)


def coordinate(n: int, i: int) -> FunctionHandle:
    """``y -> y_i``."""
    derivs = np.zeros(_layout_size(n, 1))
    derivs[1 + i] = 1.0
    return Polynomial(Jet(np.zeros(n), 2, derivs))


class Sum(FunctionHandle):
    def __init__(self, a: FunctionHandle, b: FunctionHandle):
        bbox = None
        if a.bbox is not None and b.bbox is not None:
            bbox = (np.minimum(a.bbox[0], b.bbox[0]), np.maximum(a.bbox[1], b.bbox[1]))
        super().__init__(a.n, bbox)
        self.a, self.b = a, b

    def _taylor(self, X, d):
        return self.a.taylor(X, d) + self.b.taylor(X, d)


class Scaled(FunctionHandle):
    def __init__(self, c: float, a: FunctionHandle):
        super().__init__(a.n, a.bbox)
        self.c, self.a = float(c), a

    def _taylor(self, X, d):
        return self.c * self.a.taylor(X, d)


class Product(FunctionHandle):
    def __init__(self, a: FunctionHandle, b: FunctionHandle):
        boxes = [f.bbox for f in (a, b) if f.bbox is not None]
        bbox = None
        if boxes:
            lo = np.max([bx[0] for bx in boxes], axis=0)
            hi = np.min([bx[1] for bx in boxes], axis=0)
            bbox = (lo, np.maximum(hi, lo))
        super().__init__(a.n, bbox)
        self.a, self.b = a, b

    def _taylor(self, X, d):
        A = self.a.taylor(X, d)
        B = self.b.taylor(X, d)
        return taylor_mul(A, B, self.n, d)


class Compose(FunctionHandle):
    """``g(inner(y))`` for a univariate ``g``."""

    def __init__(self, g: Univariate, inner: FunctionHandle, bbox=None):
        super().__init__(inner.n, bbox)
        self.g, self.inner = g, inner

    def _taylor(self, X, d):
        A = self.inner.taylor(X, d)
        G = self.g.derivatives(A[:, 0], d)
        return taylor_compose(G, A, self.n, d)


class Affine(FunctionHandle):
    """``y -> F(s * y + t)`` with scalar ``s``."""

    def __init__(self, inner: FunctionHandle, s: float, t):
        t = np.asarray(t, dtype=float).reshape(inner.n)
        bbox = None
        if inner.bbox is not None:
            ends = np.stack([(inner.bbox[0] - t) / s, (inner.bbox[1] - t) / s])
            bbox = (ends.min(axis=0), ends.max(axis=0))
        super().__init__(inner.n, bbox)
        self.inner, self.s, self.t = inner, float(s), t

    def _taylor(self, X, d):
        A = self.inner.taylor(self.s * X + self.t, d)
        orders = np.array([sum(a) for a in multi_indices(self.n, d)])
        return A * self.s ** orders


class NormPower(FunctionHandle):
    """``y -> |y - center|^p`` (Euclidean norm, integer ``p >= 1``).

    Away from the center the derivatives are those of ``s^(p/2)`` with
    ``s = |y - center|^2``.  At the center, derivatives of order ``< p``
    vanish; order-``p`` derivatives are those of the polynomial ``s^(p/2)``
    when ``p`` is even and are reported as 0 when ``p`` is odd (they do not
    exist there; the point has measure zero for the ess-sup norm).
    """

    def __init__(self, n: int, p: int, center=None):
        super().__init__(n)
        self.p = int(p)
        self.center = np.zeros(n) if center is None else np.asarray(center, float).reshape(n)
        sq = [coordinate(n, i).translate(self.center) for i in range(n)]
        s = sq[0] * sq[0]
        for q in sq[1:]:
            s = s + q * q
        self._s = s
        self._even_poly = None
        if self.p % 2 == 0:
            e = s
            for _ in range(self.p // 2 - 1):
                e = e * s
            self._even_poly = e

    def _taylor(self, X, d):
        if self._even_poly is not None:
            return self._even_poly.taylor(X, d)
        out = np.zeros((X.shape[0], _layout_size(self.n, d)))
        S = self._s.taylor(X, d)
        away = S[:, 0] > 0.0
        if np.any(away):
            G = power(self.p / 2.0).derivatives(S[away, 0], d)
            out[away] = taylor_compose(G, S[away], self.n, d)
        return out


def norm_power(n: int, p: int, center=None) -> FunctionHandle:
    return NormPower(n, p, center)


# ==========================================================================
# bumps
# ==========================================================================

def radial_cutoff(n: int, r_in: float, r_out: float, m: int) -> FunctionHandle:
    """C^m radial function: 1 on ``|y| <= r_in``, 0 on ``|y| >= r_out``."""
    s = norm_power(n, 2)
    t = (s - r_in ** 2) * (1.0 / (r_out ** 2 - r_in ** 2))
    rise = t.compose(smoothstep(m))
    box = (-r_out * np.ones(n), r_out * np.ones(n))
    out = constant(n, 1.0) - rise
    out.bbox = box
    return out


@dataclass
class Bumps:
    """The cutoff ``chi`` and annular bump ``phi`` with dyadic dilates."""
    m: int
    n: int
    chi: FunctionHandle
    phi: FunctionHandle

    def phi_k(self, k: int) -> FunctionHandle:
        """``phi(2^k y)``: 1 on ``2^(-1-k) <= |y| <= 2^(1-k)``."""
        return self.phi.dilate(2.0 ** k)


def build_bumps(m: int, n: int) -> Bumps:
    """Cutoffs with: chi = 1 near 0 (on |y| <= 1/4), chi = 0 for |y| >= 1/2;
    phi = 1 on 1/2 <= |y| <= 2 and phi = 0 unless 1/4 < |y| < 4."""
    if m < 1:
        raise ValueError("m must be >= 1")
    chi = radial_cutoff(n, 0.25, 0.5, m)
    s = norm_power(n, 2)
    S = smoothstep(m)
    inner = ((s - 1.0 / 16) * (1.0 / (0.25 - 1.0 / 16))).compose(S)
    outer = constant(n, 1.0) - ((s - 4.0) * (1.0 / 12.0)).compose(S)
    phi = inner * outer
    phi.bbox = (-4.0 * np.ones(n), 4.0 * np.ones(n))
    return Bumps(m=m, n=n, chi=chi, phi=phi)


# ==========================================================================
# box partitions of unity
# ==========================================================================

def _plateau_derivs(y, a, b, w, m, d):
    """1-D profile: 1 on [a, b], C^m ramps of width w outside, 0 beyond.

    Returns ``g^(k)(y)`` for ``k = 0..d``; all arguments broadcast.
    """
    y, a, b, w = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (y, a, b, w)))
    out = np.zeros(y.shape + (d + 1,))
    out[..., 0] = 1.0
    left = y < a
    right = y > b
    scale = (1.0 / w)[..., None] ** np.arange(d + 1)
    if np.any(left):
        t = (y[left] - a[left] + w[left]) / w[left]
        out[left] = smoothstep_derivs(t, m, d) * scale[left]
    if np.any(right):
        t = (y[right] - b[right]) / w[right]
        sd = smoothstep_derivs(t, m, d) * scale[right]
        sd[:, 0] = 1.0 - sd[:, 0]
        sd[:, 1:] = -sd[:, 1:]
        out[right] = sd
    return out


class BoxPartition:
    """Partition of unity ``theta_i = psi_i / sum_j psi_j`` over boxes.

    ``psi_i`` is the tensor product of 1-D plateaus equal to 1 on the closed
    core box ``[lo_i, hi_i]`` and vanishing outside the core widened by
    ``width_i`` on every side.  When the cores cover a region, the
    denominator is ``>= 1`` there.  Outside the union of supports every
    ``theta_i`` is defined to be 0.
    """

    def __init__(self, lo, hi, width, m: int):
        self.lo = np.atleast_2d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_2d(np.asarray(hi, dtype=float))
        self.width = np.asarray(width, dtype=float).reshape(-1)
        self.m = int(m)
        self.n = self.lo.shape[1]
        self.K = self.lo.shape[0]

    @property
    def support_lo(self):
        return self.lo - self.width[:, None]

    @property
    def support_hi(self):
        return self.hi + self.width[:, None]

    def pairs(self, X: np.ndarray, candidates: np.ndarray | None = None):
        """``(point_idx, box_idx)`` for every point inside a box support.

        ``candidates`` restricts the search to a subset of boxes.
        """
        cand = np.arange(self.K) if candidates is None else np.asarray(candidates)
        slo, shi = self.support_lo[cand], self.support_hi[cand]
        pi, bi = [], []
        # chunk over boxes to bound memory
        step = max(1, 2_000_000 // max(1, X.shape[0]))
        for start in range(0, cand.size, step):
            sl = slice(start, start + step)
            inside = np.all((X[:, None, :] >= slo[None, sl]) & (X[:, None, :] <= shi[None, sl]), axis=2)
            p, b = np.nonzero(inside)
            pi.append(p)
            bi.append(cand[b + start])
        return np.concatenate(pi), np.concatenate(bi)

    def neighbours(self, i: int) -> np.ndarray:
        """Indices of the boxes whose supports meet the support of box ``i``."""
        slo, shi = self.support_lo, self.support_hi
        return np.nonzero(np.all((slo <= shi[i]) & (slo[i] <= shi), axis=1))[0]

    def psi_taylor(self, X: np.ndarray, pts: np.ndarray, boxes: np.ndarray, d: int) -> np.ndarray:
        """Taylor coefficients of ``psi_box`` at ``X[pts]`` (rows aligned with the pairs)."""
        n = self.n
        idx = multi_indices(n, d)
        out = np.ones((len(pts), len(idx)))
        for nu in range(n):
            g = _plateau_derivs(X[pts, nu], self.lo[boxes, nu], self.hi[boxes, nu],
                                self.width[boxes], self.m, d)
            g = g / np.array([math.factorial(k) for k in range(d + 1)])
            out *= g[:, [a[nu] for a in idx]]
        return out

    def evaluate(self, X, d: int, candidates: np.ndarray | None = None):
        """Return ``(pts, boxes, theta)``: Taylor coefficients of ``theta_box`` at ``X[pts]``.

        With ``candidates`` only those boxes enter the denominator, which is
        exact wherever no other support reaches.
        """
        X = as_points(X, self.n)
        pts, boxes = self.pairs(X, candidates)
        psi = self.psi_taylor(X, pts, boxes, d)
        D = psi.shape[1]
        denom = np.zeros((X.shape[0], D))
        np.add.at(denom, pts, psi)
        recip = np.zeros_like(denom)
        pos = denom[:, 0] > 0.0
        if np.any(pos):
            G = RECIPROCAL.derivatives(denom[pos, 0], d)
            recip[pos] = taylor_compose(G, denom[pos], self.n, d)
        theta = taylor_mul(psi, recip[pts], self.n, d)
        return pts, boxes, theta

    def sum_taylor(self, X, d: int) -> np.ndarray:
        X = as_points(X, self.n)
        pts, boxes, theta = self.evaluate(X, d)
        out = np.zeros((X.shape[0], theta.shape[1]))
        np.add.at(out, pts, theta)
        return out

    def member(self, i: int) -> "PartitionMember":
        return PartitionMember(self, i)

    def members(self) -> list["PartitionMember"]:
        return [PartitionMember(self, i) for i in range(self.K)]


class PartitionMember(FunctionHandle):
    """One function ``theta_i`` of a :class:`BoxPartition`."""

    def __init__(self, partition: BoxPartition, index: int):
        super().__init__(partition.n, bbox=(partition.support_lo[index], partition.support_hi[index]))
        self.partition = partition
        self.index = int(index)
        self._near = partition.neighbours(index)

    def _taylor(self, X, d):
        # only points in this member's support reach here (bbox masking), and
        # there every contributing box is a neighbour
        pts, boxes, theta = self.partition.evaluate(X, d, self._near)
        out = np.zeros((X.shape[0], theta.shape[1]))
        sel = boxes == self.index
        out[pts[sel]] = theta[sel]
        return out


def whitney_partition(dec, m: int, dilation: float = 65.0 / 64.0, check_geometry: bool = True
                      ) -> BoxPartition:
    """Partition of unity subordinate to the dilates ``dilation * Q`` of CZ cubes.

    ``psi_Q`` is 1 on the closed cube and vanishes outside ``dilation * Q``.
    """
    cubes = dec.cubes
    if check_geometry:
        from .czdecomp import check_good_geometry
        bad = check_good_geometry(cubes, dilation)
        if bad:
            q1, q2 = bad[0]
            raise GeometryError(f"cubes {q1} and {q2} touch after dilation but differ by more "
                                "than one level")
    lo = np.array([q.lo for q in cubes], dtype=float).reshape(len(cubes), -1)
    hi = np.array([q.hi for q in cubes], dtype=float).reshape(len(cubes), -1)
    width = np.array([q.side for q in cubes]) * (dilation - 1.0) / 2.0
    return BoxPartition(lo, hi, width, m)


def unit_partition(region_lo, region_hi, m: int, spacing: float = 0.25
                   ) -> tuple[BoxPartition, np.ndarray]:
    """Partition ``1 = sum chi_nu`` on a box, each ``chi_nu`` supported in ``(1/2) Q_nu``.

    ``Q_nu`` are unit cubes centred on the lattice ``spacing * Z^n``; the
    plateau of ``chi_nu`` is the centred cube of side ``spacing`` and its
    support the centred cube of side ``2 * spacing = 1/2``.  Returns the
    partition and the centres.
    """
    region_lo = np.atleast_1d(np.asarray(region_lo, dtype=float))
    region_hi = np.atleast_1d(np.asarray(region_hi, dtype=float))
    axes = [np.arange(np.floor(a / spacing) - 1, np.ceil(b / spacing) + 2) * spacing
            for a, b in zip(region_lo, region_hi)]
    centres = np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1).T
    half = spacing / 2.0
    part = BoxPartition(centres - half, centres + half, np.full(len(centres), half), m)
    return part, centres


# ==========================================================================
# export
# ==========================================================================

def grid_dump_csv(F: FunctionHandle, axes: Sequence[np.ndarray], order: int, path=None,
                  header_comment: str | None = None) -> str:
    """CSV rows ``x1..xn, F, dF...`` on the tensor grid of ``axes``."""
    n = F.n
    X = np.array(np.meshgrid(*axes, indexing="ij")).reshape(n, -1).T
    vals = F.derivs(X, order)
    idx = multi_indices(n, order)
    cols = [f"x{i + 1}" for i in range(n)] + ["F"] + [
        "d" + "".join(str(v) for v in a) for a in idx[1:]]
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    lines.append(",".join(cols))
    for row_x, row_v in zip(X, vals):
        lines.append(",".join(repr(float(v)) for v in (*row_x, *row_v)))
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
