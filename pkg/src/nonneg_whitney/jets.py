"""Polynomial jets stored as derivative values at a base point.

A jet of order ``m`` at ``x`` is the Taylor polynomial

    P(y) = sum_{|a| <= d} c_a / a! * (y - x)^a

with ``d = m - 1`` (``Jet``) or ``d = m`` (``plus=True``).  The stored
numbers ``c_a`` are the derivatives ``d^a P(x)``; monomial coefficients are
derived on demand.  Multi-indices are enumerated in graded lexicographic
order, which fixes the layout of every coefficient vector in the package.

The module also carries the vectorized truncated-Taylor arithmetic
(``taylor_mul``, ``taylor_compose``) that :mod:`nonneg_whitney.smoothfn`
uses to differentiate function trees exactly.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "Jet",
    "multi_indices",
    "index_map",
    "factorials",
    "jet_multiply",
    "jet_taylor",
    "jet_rebase",
    "deriv_at",
    "jet_project",
    "jet_embed",
    "jet_translate",
    "rebase_matrix",
    "taylor_mul",
    "taylor_compose",
    "JetMismatchError",
]


class JetMismatchError(ValueError):
    """Raised when two jets are combined across different bases or shapes."""


# --------------------------------------------------------------------------
# multi-index tables
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def multi_indices(n: int, d: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices of length ``n`` and order ``<= d``, graded lex order.

    Within one total degree the indices are sorted lexicographically in
    descending order, so for ``n=2, d=2`` the result is
    ``(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)``.
    """
    if n < 1 or d < 0:
        raise ValueError(f"need n >= 1 and d >= 0, got n={n}, d={d}")
    out = []
    for k in range(d + 1):
        level = [a for a in itertools.product(range(k + 1), repeat=n) if sum(a) == k]
        level.sort(reverse=True)
        out.extend(level)
    return tuple(out)


@lru_cache(maxsize=None)
def index_map(n: int, d: int) -> dict[tuple[int, ...], int]:
    return {a: i for i, a in enumerate(multi_indices(n, d))}


@lru_cache(maxsize=None)
def factorials(n: int, d: int) -> np.ndarray:
    """``a!`` for every multi-index in layout order."""
    f = np.array([math.prod(math.factorial(k) for k in a) for a in multi_indices(n, d)],
                 dtype=float)
    f.setflags(write=False)
    return f


@lru_cache(maxsize=None)
def _orders(n: int, d: int) -> np.ndarray:
    o = np.array([sum(a) for a in multi_indices(n, d)], dtype=int)
    o.setflags(write=False)
    return o


@lru_cache(maxsize=None)
def _exponents(n: int, d: int) -> np.ndarray:
    e = np.array(multi_indices(n, d), dtype=int).reshape(-1, n)
    e.setflags(write=False)
    return e


@lru_cache(maxsize=None)
def _product_table(n: int, d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Index pairs ``(i, j)`` with ``|a_i + a_j| <= d`` and the 0/1 scatter
    matrix sending each pair to the index of ``a_i + a_j``."""
    idx = multi_indices(n, d)
    pos = index_map(n, d)
    ii, jj, kk = [], [], []
    for i, a in enumerate(idx):
        for j, b in enumerate(idx):
            if sum(a) + sum(b) > d:
                continue
            ii.append(i)
            jj.append(j)
            kk.append(pos[tuple(p + q for p, q in zip(a, b))])
    scatter = np.zeros((len(kk), len(idx)))
    scatter[np.arange(len(kk)), kk] = 1.0
    return np.array(ii), np.array(jj), scatter


@lru_cache(maxsize=None)
def _shift_table(n: int, d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Pairs ``(b, g)`` with ``g >= b`` plus the exponent ``g - b`` and ``(g-b)!``."""
    idx = multi_indices(n, d)
    pos = index_map(n, d)
    bi, gi, ei = [], [], []
    for b in idx:
        for g in idx:
            if all(q >= p for p, q in zip(b, g)):
                bi.append(pos[b])
                gi.append(pos[g])
                ei.append(pos[tuple(q - p for p, q in zip(b, g))])
    return np.array(bi), np.array(gi), np.array(ei), factorials(n, d)[np.array(ei)]


def _monomials(h: np.ndarray, n: int, d: int) -> np.ndarray:
    """``h^a`` for every multi-index; ``h`` has shape ``(..., n)``."""
    h = np.asarray(h, dtype=float)
    e = _exponents(n, d)
    out = np.ones(h.shape[:-1] + (len(e),))
    for nu in range(n):
        pw = h[..., nu, None] ** np.arange(d + 1)
        out = out * pw[..., e[:, nu]]
    return out


# --------------------------------------------------------------------------
# vectorized truncated Taylor arithmetic on (..., D) coefficient arrays
# --------------------------------------------------------------------------

def taylor_mul(a: np.ndarray, b: np.ndarray, n: int, d: int) -> np.ndarray:
    """Truncated product of monomial-coefficient arrays of shape ``(..., D)``."""
    i, j, scatter = _product_table(n, d)
    return (a[..., i] * b[..., j]) @ scatter


def taylor_compose(g_derivs: np.ndarray, a: np.ndarray, n: int, d: int) -> np.ndarray:
    """Coefficients of ``g(u)`` where ``u`` has Taylor coefficients ``a``.

    ``g_derivs[..., k]`` holds ``g^(k)(u_0)`` for ``k = 0..d``.
    """
    h = np.array(a, dtype=float, copy=True)
    h[..., 0] = 0.0
    out = np.zeros_like(h)
    out[..., 0] = g_derivs[..., 0]
    power = None
    for k in range(1, d + 1):
        power = h if power is None else taylor_mul(power, h, n, d)
        out = out + (g_derivs[..., k] / math.factorial(k))[..., None] * power
    return out


# --------------------------------------------------------------------------
# the Jet value type
# --------------------------------------------------------------------------

class Jet:
    """Immutable polynomial jet ``P`` at ``base`` of smoothness order ``m``.

    ``plus=False`` gives degree ``m - 1``; ``plus=True``
    gives degree ``m``.  ``derivs`` is indexed by :func:`multi_indices`.
    """

    __slots__ = ("base", "m", "plus", "derivs")

    def __init__(self, base, m: int, derivs, plus: bool = False):
        base = np.atleast_1d(np.asarray(base, dtype=float)).copy()
        if base.ndim != 1:
            raise ValueError("base must be a point")
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        d = m - 1 + int(plus)
        size = len(multi_indices(base.size, d))
        derivs = np.asarray(derivs, dtype=float).reshape(-1).copy()
        if derivs.size != size:
            raise ValueError(f"expected {size} derivatives for n={base.size}, degree {d}; "
                             f"got {derivs.size}")
        base.setflags(write=False)
        derivs.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "m", int(m))
        object.__setattr__(self, "plus", bool(plus))
        object.__setattr__(self, "derivs", derivs)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    # shape ----------------------------------------------------------------
    @property
    def n(self) -> int:
        return self.base.size

    @property
    def degree(self) -> int:
        return self.m - 1 + int(self.plus)

    @property
    def indices(self) -> tuple[tuple[int, ...], ...]:
        return multi_indices(self.n, self.degree)

    @property
    def coeffs(self) -> np.ndarray:
        """Monomial coefficients in powers of ``(y - base)``."""
        return self.derivs / factorials(self.n, self.degree)

    # constructors ---------------------------------------------------------
    @classmethod
    def zero(cls, base, m: int, plus: bool = False) -> "Jet":
        base = np.atleast_1d(np.asarray(base, dtype=float))
        return cls(base, m, np.zeros(len(multi_indices(base.size, m - 1 + int(plus)))), plus)

    @classmethod
    def constant(cls, base, m: int, value: float, plus: bool = False) -> "Jet":
        z = cls.zero(base, m, plus)
        d = z.derivs.copy()
        d[0] = value
        return cls(z.base, m, d, plus)

    @classmethod
    def from_coeffs(cls, base, m: int, coeffs, plus: bool = False) -> "Jet":
        base = np.atleast_1d(np.asarray(base, dtype=float))
        fac = factorials(base.size, m - 1 + int(plus))
        return cls(base, m, np.asarray(coeffs, dtype=float) * fac, plus)

    @classmethod
    def from_dict(cls, data: dict) -> "Jet":
        base = np.atleast_1d(np.asarray(data["base"], dtype=float))
        m = int(data["m"])
        n = int(data.get("n", base.size))
        if n != base.size:
            raise ValueError(f"jet record says n={n} but base has {base.size} coordinates")
        entries = {tuple(int(v) for v in e["alpha"]): float(e["value"]) for e in data["derivs"]}
        max_order = max((sum(a) for a in entries), default=0)
        plus = bool(data.get("plus", max_order == m))
        d = m - 1 + int(plus)
        idx = multi_indices(n, d)
        if set(entries) != set(idx):
            raise ValueError("jet record must list every multi-index of order <= "
                             f"{d} exactly once")
        return cls(base, m, [entries[a] for a in idx], plus)

    def to_dict(self) -> dict:
        out = {
            "base": [float(v) for v in self.base],
            "m": self.m,
            "n": self.n,
            "derivs": [{"alpha": list(a), "value": float(v)}
                       for a, v in zip(self.indices, self.derivs)],
        }
        if self.plus:
            out["plus"] = True
        return out

    # evaluation -----------------------------------------------------------
    def __call__(self, y) -> np.ndarray:
        """Evaluate the polynomial at ``y`` of shape ``(..., n)`` (or scalars if n=1)."""
        y = np.asarray(y, dtype=float)
        if self.n == 1 and (y.ndim == 0 or y.shape[-1] != 1):
            y = y[..., None]
        mono = _monomials(y - self.base, self.n, self.degree)
        return mono @ self.coeffs

    def deriv(self, beta: Sequence[int]) -> float:
        return float(self.derivs[index_map(self.n, self.degree)[tuple(beta)]])

    # algebra --------------------------------------------------------------
    def _check_compatible(self, other: "Jet") -> None:
        if not isinstance(other, Jet):
            raise TypeError(f"expected Jet, got {type(other).__name__}")
        if other.n != self.n or other.m != self.m or other.plus != self.plus:
            raise JetMismatchError(
                f"jet shapes differ: (n={self.n}, m={self.m}, plus={self.plus}) vs "
                f"(n={other.n}, m={other.m}, plus={other.plus})")
        if not np.array_equal(self.base, other.base):
            raise JetMismatchError(f"jets based at {self.base} and {other.base}")

    def _new(self, derivs) -> "Jet":
        return Jet(self.base, self.m, derivs, self.plus)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            return self + Jet.constant(self.base, self.m, other, self.plus)
        self._check_compatible(other)
        return self._new(self.derivs + other.derivs)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return self + (-other)
        self._check_compatible(other)
        return self._new(self.derivs - other.derivs)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return self._new(-self.derivs)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_multiply(self, other)
        return self._new(self.derivs * float(other))

    def __rmul__(self, other):
        return self._new(self.derivs * float(other))

    def __truediv__(self, other):
        return self._new(self.derivs / float(other))

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return (self.m == other.m and self.plus == other.plus
                and np.array_equal(self.base, other.base)
                and np.array_equal(self.derivs, other.derivs))

    def __hash__(self):
        return hash((self.m, self.plus, self.base.tobytes(), self.derivs.tobytes()))

    def allclose(self, other: "Jet", rtol: float = 1e-12, atol: float = 1e-12) -> bool:
        self._check_compatible(other)
        return bool(np.allclose(self.derivs, other.derivs, rtol=rtol, atol=atol))

    def __repr__(self):
        terms = ", ".join(f"{''.join(map(str, a))}:{v:.6g}" for a, v in zip(self.indices, self.derivs))
        kind = "JetPlus" if self.plus else "Jet"
        return f"{kind}(base={self.base.tolist()}, m={self.m}, {{{terms}}})"


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def jet_multiply(P: Jet, Q: Jet) -> Jet:
    """``P (.)_x Q``: the product truncated to the jets' degree."""
    P._check_compatible(Q)
    c = taylor_mul(P.coeffs, Q.coeffs, P.n, P.degree)
    return Jet.from_coeffs(P.base, P.m, c, P.plus)


def rebase_matrix(n: int, d: int, h) -> np.ndarray:
    """Matrix ``A`` with ``derivs_at(x + h) = A @ derivs_at(x)`` for degree-``d`` jets."""
    h = np.asarray(h, dtype=float).reshape(n)
    bi, gi, ei, efac = _shift_table(n, d)
    mono = _monomials(h, n, d)
    A = np.zeros((len(multi_indices(n, d)),) * 2)
    np.add.at(A, (bi, gi), mono[ei] / efac)
    return A


def jet_rebase(P: Jet, y) -> Jet:
    """The same polynomial re-expressed as a jet at ``y``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.size != P.n:
        raise JetMismatchError(f"point has {y.size} coordinates, jet has n={P.n}")
    if not np.all(np.isfinite(y)):
        raise ValueError("rebase point must be finite")
    A = rebase_matrix(P.n, P.degree, y - P.base)
    return Jet(y, P.m, A @ P.derivs, P.plus)


def deriv_at(P: Jet, beta: Sequence[int], y) -> float:
    """``d^beta P(y)``."""
    return jet_rebase(P, y).deriv(beta)


def jet_translate(P: Jet, new_base) -> Jet:
    """The shifted polynomial ``y -> P(y - new_base + base)`` as a jet at ``new_base``.

    Derivative values are unchanged; only the base moves.  This is the map
    used to move jets between a data point and the origin under rescaling:
    the jet at ``x`` of ``M * F(. - x)`` equals ``M * (J_0 F)(. - x)``.
    """
    return Jet(new_base, P.m, P.derivs, P.plus)


def jet_project(P: Jet) -> Jet:
    """Drop the order-``m`` entries of an ``m``-jet."""
    if not P.plus:
        raise ValueError("jet_project expects a plus-jet (degree m)")
    keep = len(multi_indices(P.n, P.m - 1))
    return Jet(P.base, P.m, P.derivs[:keep], plus=False)


def jet_embed(P: Jet) -> Jet:
    """Zero-extend an ``(m-1)``-jet to an ``m``-jet."""
    if P.plus:
        raise ValueError("jet_embed expects an (m-1)-jet")
    full = np.zeros(len(multi_indices(P.n, P.m)))
    full[: P.derivs.size] = P.derivs
    return Jet(P.base, P.m, full, plus=True)


def jet_taylor(F, x, m: int, plus: bool = False) -> Jet:
    """``J_x(F)`` (or ``J_x^+(F)`` with ``plus=True``) from a function handle.

    ``F`` must provide ``derivs(points, order)`` returning derivative values
    in multi-index layout, as :class:`nonneg_whitney.smoothfn.FunctionHandle`
    does.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = m - 1 + int(plus)
    vals = np.asarray(F.derivs(x[None, :], d))[0]
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError(f"function is not defined (non-finite derivative) at {x}")
    return Jet(x, m, vals, plus)
