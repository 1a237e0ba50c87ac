"""Independent reference implementations used by the tests.

Nothing here calls into the library's arithmetic: jet products go through
sympy with exact rationals, dyadic cubes through ``fractions.Fraction`` and
1D nonnegativity through exact root isolation.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import sympy as sp


def _multi_indices(n, d):
    out = []
    for k in range(d + 1):
        for a in itertools.product(range(k + 1), repeat=n):
            if sum(a) == k:
                out.append(a)
    return out


def symbolic_product(base, derivs_p, derivs_q, indices, m):
    """Derivatives at ``base`` of J(PQ) truncated to degree m-1, computed with sympy."""
    n = len(base)
    ys = sp.symbols(f"y0:{n}")
    h = [ys[i] - sp.Rational(Fraction(base[i])) for i in range(n)]

    def poly(derivs):
        expr = 0
        for a, v in zip(indices, derivs):
            term = sp.Rational(Fraction(float(v))) / sp.prod([sp.factorial(k) for k in a])
            expr += term * sp.prod([h[i] ** a[i] for i in range(n)])
        return expr

    # work in shifted variables so truncation is by total degree in h
    zs = sp.symbols(f"z0:{n}")
    sub = {ys[i]: zs[i] + sp.Rational(Fraction(base[i])) for i in range(n)}
    prod = sp.Poly(sp.expand((poly(derivs_p) * poly(derivs_q)).subs(sub)), *zs)
    out = []
    for a in indices:
        if sum(a) > m - 1:
            raise ValueError("index outside jet range")
        c = prod.coeff_monomial(sp.prod([zs[i] ** a[i] for i in range(n)]))
        out.append(float(c * sp.prod([sp.factorial(k) for k in a])))
    return np.array(out)


def lipschitz_optimum(x, f):
    """max(max f, max pairwise slope): the minimal max(sup F, Lip F) of a nonnegative interpolant."""
    x = np.asarray(x, float).ravel()
    f = np.asarray(f, float)
    best = float(f.max()) if len(f) else 0.0
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            best = max(best, abs(f[i] - f[j]) / abs(x[i] - x[j]))
    return best


# --------------------------------------------------------------------------
# dyadic cubes with exact arithmetic
# --------------------------------------------------------------------------

def cube_bounds(level, corner, factor=1):
    side = Fraction(2) ** level
    lo = [Fraction(c) * side for c in corner]
    half = Fraction(factor) * side / 2
    centre = [a + side / 2 for a in lo]
    return [c - half for c in centre], [c + half for c in centre]


def count_in(level, corner, E, factor):
    lo, hi = cube_bounds(level, corner, factor)
    cnt = 0
    for p in E:
        if all(lo[i] <= Fraction(float(p[i])) < hi[i] for i in range(len(p))):
            cnt += 1
    return cnt


def ok_cube(level, corner, E):
    return level <= 0 and count_in(level, corner, E, 5) <= 1


def brute_cz(E, region_corners, min_level=-12):
    """Maximal OK dyadic cubes inside a union of unit cubes, by top-down enumeration.

    A cube is kept when it is OK and its parent is not OK (or is a region cube's
    parent, which has side 2 and is never OK)."""
    out = []
    stack = [(0, tuple(c)) for c in region_corners]
    while stack:
        lev, cor = stack.pop()
        if ok_cube(lev, cor, E):
            out.append((lev, cor))
            continue
        if lev <= min_level:
            raise RuntimeError("enumeration too deep")
        for bits in itertools.product((0, 1), repeat=len(cor)):
            stack.append((lev - 1, tuple(2 * c + b for c, b in zip(cor, bits))))
    return sorted(out)


# --------------------------------------------------------------------------
# exact 1D nonnegativity
# --------------------------------------------------------------------------

def min_on_halfline(coeffs, sign):
    """Exact infimum over y in [0, inf) (sign=+1) or (-inf, 0] (sign=-1) of sum c_k y^k."""
    y = sp.symbols("y")
    expr = sum(sp.Rational(Fraction(float(c))) * (sign * y) ** k for k, c in enumerate(coeffs))
    p = sp.Poly(expr, y)
    if p.degree() <= 0:
        return float(p.eval(0)) if p.degree() == 0 else 0.0
    lead = p.LC()
    if lead < 0:
        return -math.inf
    cands = [sp.Integer(0)]
    for r in sp.Poly(p.diff(y), y).real_roots():
        if r > 0:
            cands.append(r)
    return float(min(p.eval(c).evalf(40) for c in cands))


def gamma_prime_oracle_1d(coeffs, m):
    """Is P + |y|^m >= 0 on R and |P^(k)(0)| <= 1 for k < m (P of degree < m, monomial coeffs)?"""
    for k, c in enumerate(coeffs):
        if abs(c * math.factorial(k)) > 1 + 1e-12:
            return False
    plus = list(coeffs) + [0.0] * (m + 1 - len(coeffs))
    plus[m] += 1.0
    minus = list(coeffs) + [0.0] * (m + 1 - len(coeffs))
    minus[m] += (-1.0) ** m
    return min(min_on_halfline(plus, 1), min_on_halfline(minus, -1)) >= -1e-12


def fd_derivative(F, x, beta, h=1e-4):
    """Central finite difference of order beta (n <= 2, |beta| <= 3) at x."""
    x = np.asarray(x, float)
    n = len(x)
    stencils = {0: ([0], [1.0]), 1: ([-1, 1], [-0.5, 0.5]), 2: ([-1, 0, 1], [1.0, -2.0, 1.0]),
                3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5])}
    grids = [stencils[b] for b in beta]
    total = 0.0
    pts, wts = [], []
    for combo in itertools.product(*[range(len(g[0])) for g in grids]):
        off = np.array([grids[i][0][combo[i]] for i in range(n)], float) * h
        w = np.prod([grids[i][1][combo[i]] for i in range(n)])
        pts.append(x + off)
        wts.append(w)
    vals = F(np.array(pts))
    total = float(np.dot(wts, vals))
    return total / h ** sum(beta)
