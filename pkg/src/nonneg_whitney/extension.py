"""Nonnegative extensions: single jets, two-jet patching, and CZ gluing.

The end-to-end entry point is :func:`interpolate_nonneg`, which turns a
Whitney field of admissible jets into a nonnegative function reproducing
them:

1. decompose a padded region around ``E`` into maximal OK dyadic cubes;
2. extend the anchor jet of every type 1/2 cube to a nonnegative function
   supported near its anchor (type 3 cubes get 0);
3. glue with a partition of unity subordinate to dilated cubes.

Two extension flavors are available: ``"cm1"`` (Lipschitz top derivatives,
``F = chi(. - x) (P + M |. - x|^m)``) and ``"cm"`` (``C^m``, completing the
jet to degree ``m`` and adding annular corrections ``b_k phi_k``).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import smoothfn as sf
from .czdecomp import (CZDecomposition, DyadicCube, classify_and_anchor, cz_decompose,
                       padded_region)
from .gamma import (GammaConfig, bk_sequence, gamma0plus_member, gamma_prime_member,
                    gamma_tilde0_member, normalize_jet)
from .jets import Jet, jet_embed, jet_multiply, jet_rebase, jet_translate, multi_indices
from .whitney import WhitneyField, taylor_compat_check

__all__ = [
    "PreconditionError",
    "extend_jet_cm1",
    "extend_jet_cm",
    "patch_pair",
    "GluedFunction",
    "glue_cz",
    "defect_ratios",
    "interpolate_nonneg",
    "verify_interpolant",
    "GridConfig",
]


class PreconditionError(ValueError):
    """Inputs violate the hypotheses of a construction; ``detail`` names the offender."""

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.detail = detail or {}


# --------------------------------------------------------------------------
# single-jet extensions
# --------------------------------------------------------------------------

def _at(P: Jet, x) -> Jet:
    x = np.asarray(x, dtype=float).reshape(P.n)
    return P if np.array_equal(P.base, x) else jet_rebase(P, x)


def extend_jet_cm1(P: Jet, x, M: float, cfg: GammaConfig | None = None, check: bool = True
                   ) -> sf.FunctionHandle:
    """``F(y) = chi(y - x) (P(y) + M |y - x|^m)``.

    Nonnegative because ``P + M|. - x|^m >= 0`` for admissible ``P`` and
    ``0 <= chi <= 1``; its jet at ``x`` is ``P`` since ``chi = 1`` near 0 and
    ``|. - x|^m`` has no terms below order ``m``.  Supported in ``B(x, 1/2)``.
    """
    x = np.asarray(x, dtype=float).reshape(P.n)
    if check:
        v = gamma_prime_member(P, x, M, cfg=cfg)
        if not v.member:
            raise PreconditionError(f"jet at {x.tolist()} not admissible at M={M:g}: {v.reason}",
                                    {"point": x.tolist(), "verdict": v.status, "witness": v.witness})
    bumps = sf.build_bumps(P.m, P.n)
    body = sf.polynomial(_at(P, x)) + M * sf.norm_power(P.n, P.m, center=x)
    return bumps.chi.translate(x) * body


def extend_jet_cm(P: Jet, K_max: int = 20, x=None, M: float = 1.0, cfg: GammaConfig | None = None,
                  check: bool = True) -> sf.FunctionHandle:
    """``F = chi (R + sum_{k <= K_max} b_k phi_k)`` for the degree-``m`` jet ``R = P / M`` at 0.

    ``P`` is a plus-jet; when ``x``/``M`` are given the construction is done
    for the normalized jet and transported back: ``F(y) = M G(y - x)``.
    The neglected tail of the series is at most ``b_{K_max + 1}``.
    """
    if not P.plus:
        raise ValueError("extend_jet_cm expects a degree-m jet (plus=True)")
    x = P.base if x is None else np.asarray(x, dtype=float).reshape(P.n)
    R = normalize_jet(P, x, M)
    cfg = cfg or GammaConfig()
    if check:
        v = gamma0plus_member(R, cfg)
        if not v.member:
            raise PreconditionError(f"jet at {x.tolist()} rejected ({v.status}): {v.reason}",
                                    {"point": x.tolist(), "verdict": v.status, "witness": v.witness})
    bumps = sf.build_bumps(P.m, P.n)
    b = bk_sequence(R, K_max, cfg)
    G = sf.polynomial(R)
    for k, bk in enumerate(b):
        if bk > 0.0:
            G = G + bk * bumps.phi_k(k)
    G = bumps.chi * G
    G.b_sequence = b
    F = (M * G).translate(x) if (M != 1.0 or np.any(x != 0)) else G
    F.b_sequence = b
    return F


# --------------------------------------------------------------------------
# patching two extensions
# --------------------------------------------------------------------------

def _check_patch_inputs(Q1: Jet, Q2: Jet, x, delta: float, tol: float) -> None:
    n = Q1.n
    for name, Q in (("Q1", Q1), ("Q2", Q2)):
        for a, v in zip(Q.indices, Q.derivs):
            if abs(v) > delta ** (-sum(a)) * (1 + tol) + tol:
                raise PreconditionError(f"{name} derivative {a} = {v:g} exceeds delta^-|b|",
                                        {"jet": name, "beta": list(a)})
    s = jet_multiply(Q1, Q1) + jet_multiply(Q2, Q2)
    one = Jet.constant(s.base, s.m, 1.0, s.plus)
    if not s.allclose(one, rtol=0.0, atol=tol):
        raise PreconditionError("Q1.Q1 + Q2.Q2 != 1 at x", {"residual": (s - one).derivs.tolist()})


def _ball_grid(x: np.ndarray, r: float, per_axis: int) -> np.ndarray:
    n = x.size
    axes = [np.linspace(-r, r, per_axis)] * n
    G = np.array(np.meshgrid(*axes, indexing="ij")).reshape(n, -1).T
    G = G[np.linalg.norm(G, axis=1) <= r * (1 + 1e-12)]
    return G + x


def patch_pair(F1: sf.FunctionHandle, F2: sf.FunctionHandle, P1: Jet, P2: Jet, Q1: Jet, Q2: Jet,
               x, delta: float, M: float | None = None, tol: float = 1e-9,
               check_jets: bool = True, max_halvings: int = 20) -> sf.FunctionHandle:
    """``F = F1 + theta2^2 (F2 - F1)`` with ``theta1^2 + theta2^2 = 1``.

    ``theta_i`` agree with ``Q_i`` to order ``m - 1`` at ``x`` and
    ``theta2 = 0`` outside ``B(x, c0 delta)``, so ``J_x F = Q1 Q1 P1 + Q2 Q2 P2``
    and ``F = F1`` exactly away from ``x``.  The radius factor ``c0`` is found by
    halving from 1/2 until ``Q1 >= 1/10`` on the ball.  ``M`` is accepted for
    interface symmetry; the construction does not depend on it.

    The returned handle carries ``info`` with ``c0`` and whether the inputs
    were swapped.
    """
    x = np.asarray(x, dtype=float).reshape(P1.n)
    if not 0 < delta <= 1:
        raise PreconditionError("delta must lie in (0, 1]")
    Q1, Q2 = _at(Q1, x), _at(Q2, x)
    _check_patch_inputs(Q1, Q2, x, delta, tol)
    if check_jets:
        for name, F, P in (("F1", F1, P1), ("F2", F2, P2)):
            got = F.derivs(x[None], P.degree)[0]
            want = _at(P, x).derivs
            if not np.allclose(got, want, rtol=1e-7, atol=1e-9):
                raise PreconditionError(f"jet of {name} at x does not match", {"got": got.tolist()})
    swapped = False
    if abs(Q2.derivs[0]) > abs(Q1.derivs[0]):
        F1, F2, P1, P2, Q1, Q2 = F2, F1, P2, P1, Q2, Q1
        swapped = True
    if Q1.derivs[0] < 0:
        Q1 = -Q1
    c0 = 0.5
    for _ in range(max_halvings + 1):
        grid = _ball_grid(x, c0 * delta, 201 if x.size == 1 else 41)
        if float(np.min(Q1(grid))) >= 0.1:
            break
        c0 /= 2.0
    else:
        raise PreconditionError("no radius found with Q1 >= 1/10", {"c0": c0})
    n, m = P1.n, P1.m
    chi = sf.build_bumps(m, n).chi.dilate(1.0 / (2.0 * c0 * delta)).translate(x)
    q1, q2 = sf.polynomial(Q1), sf.polynomial(Q2)
    t1 = chi * q1 + (1.0 - chi)
    t2 = chi * q2
    t2sq = t2 * t2
    weight = t2sq * (t1 * t1 + t2sq).compose(sf.RECIPROCAL)
    weight.bbox = chi.bbox
    F = F1 + weight * (F2 - F1)
    F.info = {"c0": c0, "swapped": swapped, "radius": c0 * delta}
    return F


# --------------------------------------------------------------------------
# gluing over a CZ decomposition
# --------------------------------------------------------------------------

class GluedFunction(sf.FunctionHandle):
    """``sum_Q theta_Q F_Q`` with cubes sharing a local function evaluated together."""

    def __init__(self, partition: sf.BoxPartition, locals_: Sequence[sf.FunctionHandle | None]):
        super().__init__(partition.n)
        if len(locals_) != partition.K:
            raise ValueError("need one local function (or None) per cube")
        self.partition = partition
        self.locals = list(locals_)
        groups: dict[int, list[int]] = {}
        self._funcs: dict[int, sf.FunctionHandle] = {}
        for i, F in enumerate(self.locals):
            if F is None:
                continue
            groups.setdefault(id(F), []).append(i)
            self._funcs[id(F)] = F
        self._group_of = np.full(partition.K, -1)
        self._keys = list(groups)
        for g, key in enumerate(self._keys):
            self._group_of[groups[key]] = g
        lo, hi = partition.support_lo, partition.support_hi
        used = self._group_of >= 0
        if np.any(used):
            self.bbox = (lo[used].min(axis=0), hi[used].max(axis=0))

    def _taylor(self, X, d):
        pts, boxes, theta = self.partition.evaluate(X, d)
        D = theta.shape[1]
        out = np.zeros((X.shape[0], D))
        grp = self._group_of[boxes]
        keep = grp >= 0
        pts, grp, theta = pts[keep], grp[keep], theta[keep]
        for g in np.unique(grp):
            sel = grp == g
            w = np.zeros((X.shape[0], D))
            np.add.at(w, pts[sel], theta[sel])
            rows = np.unique(pts[sel])
            Fg = self._funcs[self._keys[g]].taylor(X[rows], d)
            out[rows] += sf.taylor_mul(w[rows], Fg, self.n, d)
        return out


def glue_cz(dec: CZDecomposition, partition: sf.BoxPartition,
            locals_: Sequence[sf.FunctionHandle | None]) -> GluedFunction:
    """``F = sum_Q theta_Q F_Q``; ``None`` marks a type 3 cube (``F_Q = 0``)."""
    if partition.K != len(dec.cubes):
        raise ValueError("partition and decomposition have different numbers of cubes")
    return GluedFunction(partition, locals_)


def defect_ratios(dec: CZDecomposition, partition: sf.BoxPartition,
                  locals_: Sequence[sf.FunctionHandle | None], M: float, m: int,
                  samples_per_axis: int = 5, max_pairs: int = 2000) -> list[dict]:
    """``sup |d^b (F_Q - F_Q')| / (M delta_Q^(m - |b|))`` over overlapping supports.

    Only pairs with different local functions are examined (identical ones
    have zero defect).
    """
    slo, shi = partition.support_lo, partition.support_hi
    n = partition.n
    idx = multi_indices(n, m)
    orders = np.array([sum(a) for a in idx])
    zero = sf.constant(n, 0.0)
    out = []
    for i, Q in enumerate(dec.cubes):
        meet = np.all((slo[i] <= shi) & (slo <= shi[i]), axis=1)
        for j in np.nonzero(meet)[0]:
            if j <= i or locals_[i] is locals_[j]:
                continue
            lo = np.maximum(slo[i], slo[j])
            hi = np.minimum(shi[i], shi[j])
            axes = [np.linspace(a, b, samples_per_axis) for a, b in zip(lo, hi)]
            X = np.array(np.meshgrid(*axes, indexing="ij")).reshape(n, -1).T
            Fi = locals_[i] if locals_[i] is not None else zero
            Fj = locals_[j] if locals_[j] is not None else zero
            diff = np.abs(Fi.derivs(X, m) - Fj.derivs(X, m)).max(axis=0)
            delta = Q.side
            ratio = diff / (M * delta ** (m - orders))
            out.append({"cubes": [i, int(j)], "level": Q.level, "ratio": float(ratio.max())})
            if len(out) >= max_pairs:
                return out
    return out


# --------------------------------------------------------------------------
# end-to-end
# --------------------------------------------------------------------------

@dataclass
class GridConfig:
    """Verification grid: ``points`` uniform samples over the window plus per-cube samples."""

    points: int = 10_000
    margin: float = 1.0
    per_cube: int = 9
    tol_interp: float = 1e-8
    tol_nonneg: float = -1e-10


def _local_extension(P: Jet, x, M: float, flavor: str, cfg: GammaConfig, K_max: int):
    if flavor == "cm1":
        return extend_jet_cm1(P, x, M, cfg, check=False)
    v = gamma_tilde0_member(normalize_jet(P, x, M), cfg)
    if not v.member:
        raise PreconditionError(f"jet at {np.asarray(x).tolist()} has no admissible completion",
                                {"point": np.asarray(x).tolist(), "verdict": v.status})
    R = v.witness  # normalized completion at 0
    Pplus = jet_translate(R, x) * M
    return extend_jet_cm(Pplus, K_max, x=x, M=M, cfg=cfg, check=False)


def _single_region(points: np.ndarray, jets: Sequence[Jet], M: float, m: int, flavor: str,
                   cfg: GammaConfig, dilation: float, K_max: int, pad: int = 5):
    n = points.shape[1]
    region = padded_region(points, pad=pad, n=n)
    dec = classify_and_anchor(cz_decompose(points, region))
    part = sf.whitney_partition(dec, m, dilation=dilation)
    cache: dict[int, sf.FunctionHandle] = {}
    locals_ = []
    for t, a in zip(dec.types, dec.anchors):
        if a is None:
            locals_.append(None)
            continue
        if a not in cache:
            cache[a] = _local_extension(jets[a], points[a], M, flavor, cfg, K_max)
        locals_.append(cache[a])
    return glue_cz(dec, part, locals_), dec, part, locals_


def interpolate_nonneg(E, f, W: WhitneyField, M: float, flavor: str = "cm1",
                       cfg: GammaConfig | None = None, dilation: float = 1.5, K_max: int = 20,
                       localize: str | bool = "auto", grid: GridConfig | None = None,
                       verify: bool = True) -> tuple[sf.FunctionHandle, dict]:
    """Nonnegative ``F`` with ``J_x F = P^x`` for every data point; returns ``(F, report)``.

    ``W`` must be Taylor-compatible at level ``M`` and each jet admissible for
    the chosen flavor with ``P^x(x) = f(x)``.  ``dilation`` is the ratio of the
    support of each partition function to its cube (see the README for why the
    default is wider than 65/64).  With ``localize="auto"`` data whose bounding
    box is wider than 1 is first split by a unit-scale partition of unity.
    """
    cfg = cfg or GammaConfig()
    if flavor not in ("cm", "cm1"):
        raise ValueError("flavor must be 'cm' or 'cm1'")
    E = np.asarray(E, dtype=float)
    f = np.asarray(f, dtype=float).reshape(-1)
    n = W.n if len(W.jets) else (E.shape[1] if E.ndim == 2 else 1)
    E = E.reshape(-1, n)
    if E.shape[0] != f.size or E.shape[0] != len(W.jets):
        raise PreconditionError("E, f and the Whitney field have different sizes")
    if not np.array_equal(E, W.points[: E.shape[0]]) and E.shape[0]:
        raise PreconditionError("field points differ from E")
    if np.any(f < 0):
        raise PreconditionError("f must be nonnegative", {"index": int(np.argmin(f))})
    t0 = time.perf_counter()
    if E.shape[0] == 0:
        F = sf.constant(n, 0.0)
        report = verify_interpolant(F, E, f, grid, M=M, m=1) if verify else {}
        return F, report
    m = W.m
    compat = taylor_compat_check(W, M * (1 + 1e-9))
    if not compat.ok:
        i, j, beta = compat.witness
        raise PreconditionError(f"field not Taylor-compatible at M={M:g} (value {compat.value:g})",
                                {"pair": [E[i].tolist(), E[j].tolist()], "beta": list(beta)})
    for x, P, fx in zip(E, W.jets, f):
        if flavor == "cm1":
            v = gamma_prime_member(P, x, M, f_value=fx, cfg=cfg)
        else:
            if abs(P.derivs[0] - fx) > cfg.tol * max(1.0, abs(fx)):
                raise PreconditionError(f"jet value at {x.tolist()} differs from f", {"point": x.tolist()})
            v = gamma_tilde0_member(normalize_jet(P, x, M), cfg)
        if not v.member:
            raise PreconditionError(f"jet at {x.tolist()} rejected ({v.status}): {v.reason}",
                                    {"point": x.tolist(), "witness": v.witness})

    span = float(np.max(E.max(axis=0) - E.min(axis=0)))
    use_unit = (span > 1.0) if localize == "auto" else bool(localize)
    pieces = []
    if not use_unit:
        F, dec, part, locals_ = _single_region(E, W.jets, M, m, flavor, cfg, dilation, K_max)
        pieces.append((dec, part, locals_))
    else:
        upart, centres = sf.unit_partition(E.min(axis=0) - 1.0, E.max(axis=0) + 1.0, m)
        terms = []
        for i, c in enumerate(centres):
            # chi_i lives in the cube of side 1/2 about c; the local problem uses
            # the data in the unit cube about c
            inside = np.all(np.abs(E - c) < 0.5, axis=1)
            if not np.any(inside):
                continue
            Fi, dec, part, locals_ = _single_region(E[inside], [W.jets[k] for k in np.nonzero(inside)[0]],
                                                    M, m, flavor, cfg, dilation, K_max)
            pieces.append((dec, part, locals_))
            terms.append(upart.member(i) * Fi)
        F = terms[0]
        for t in terms[1:]:
            F = F + t
    build_time = time.perf_counter() - t0
    report: dict = {"flavor": flavor, "M": M, "m": m, "n": n, "dilation": dilation,
                    "localized": use_unit, "cubes": int(sum(len(p[0].cubes) for p in pieces)),
                    "build_seconds": build_time}
    if verify:
        extra_pts = _cube_samples(pieces, grid or GridConfig())
        report.update(verify_interpolant(F, E, f, grid, M=M, m=m, extra_points=extra_pts))
        dr = []
        for dec, part, locals_ in pieces:
            dr += defect_ratios(dec, part, locals_, M, m)
        report["defect_ratios"] = [d["ratio"] for d in dr]
        report["max_defect_ratio"] = max(report["defect_ratios"], default=0.0)
    return F, report


def _cube_samples(pieces, grid: GridConfig) -> np.ndarray | None:
    """Samples resolving every partition collar (where derivatives peak) and cube interior."""
    pts = []
    k = grid.per_cube
    for dec, part, locals_ in pieces:
        n = part.n
        for i, F in enumerate(locals_):
            if F is None:
                continue
            w = part.width[i]
            axes = [np.concatenate([np.linspace(a - w, a + w, k), np.linspace(a, b, k),
                                    np.linspace(b - w, b + w, k)])
                    for a, b in zip(part.lo[i], part.hi[i])]
            pts.append(np.array(np.meshgrid(*axes, indexing="ij")).reshape(n, -1).T)
    return np.vstack(pts) if pts else None


def verify_interpolant(F: sf.FunctionHandle, E, f, grid: GridConfig | None = None, M: float | None = None,
                       m: int | None = None, extra_points: np.ndarray | None = None,
                       window=None) -> dict:
    """Interpolation, nonnegativity and derivative sups of ``F``.

    Returns ``{"interp_ok", "interp_max_err", "worst_point", "min_on_grid",
    "nonneg_ok", "norms", "norm", "norm_ratio", "ok"}``; ``norms`` maps each
    multi-index (as a string) to the sup of ``|d^b F|`` over the grid.
    """
    grid = grid or GridConfig()
    n = F.n
    E = np.asarray(E, dtype=float).reshape(-1, n)
    f = np.asarray(f, dtype=float).reshape(-1)
    m = 1 if m is None else m
    if window is None:
        if E.shape[0]:
            lo, hi = E.min(axis=0) - grid.margin, E.max(axis=0) + grid.margin
        else:
            lo, hi = -np.ones(n), np.ones(n)
    else:
        lo, hi = (np.asarray(w, dtype=float).reshape(n) for w in window)
    per_axis = max(2, int(round(grid.points ** (1.0 / n))))
    axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi)]
    X = np.array(np.meshgrid(*axes, indexing="ij")).reshape(n, -1).T
    if extra_points is not None and len(extra_points):
        X = np.vstack([X, extra_points.reshape(-1, n)])
    X = np.vstack([X, E]) if E.shape[0] else X
    vals = F.derivs(X, m)
    if E.shape[0]:
        FE = F(E)
        err = np.abs(FE - f)
        worst = int(np.argmax(err))
        interp_ok = bool(np.all(err <= grid.tol_interp * np.maximum(1.0, np.abs(f))))
        interp_err = float(err.max())
        worst_point = E[worst].tolist()
    else:
        interp_ok, interp_err, worst_point = True, 0.0, None
    fmin = float(vals[:, 0].min())
    idx = multi_indices(n, m)
    sups = np.abs(vals).max(axis=0)
    norms = {"".join(map(str, a)): float(s) for a, s in zip(idx, sups)}
    norm = float(sups.max())
    report = {
        "interp_ok": interp_ok,
        "interp_max_err": interp_err,
        "worst_point": worst_point,
        "min_on_grid": fmin,
        "nonneg_ok": fmin >= grid.tol_nonneg,
        "norms": norms,
        "norm": norm,
        "norm_ratio": (norm / M) if M else None,
        "grid_points": int(X.shape[0]),
    }
    report["ok"] = bool(report["interp_ok"] and report["nonneg_ok"])
    return report
