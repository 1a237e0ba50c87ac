"""Membership tests for the convex jet sets used by the extension machinery.

All sets live at the origin and are transported to a base point ``x`` and
scale ``M`` by ``P -> P(. + x) / M`` (see :func:`normalize_jet`).

``gamma0plus_member``
    Jets of degree ``m`` with all derivatives at 0 bounded by 1 in absolute
    value, ``P(y) + |y|^m >= 0`` everywhere, and for every ``eps > 0`` some
    ball around 0 on which ``P(y) + eps |y|^m >= 0``.
``gamma_tilde0_member``
    Degree ``m - 1`` jets admitting a degree-``m`` homogeneous completion in
    the previous set.
``gamma_prime_member``
    Degree ``m - 1`` jets with derivatives bounded by 1 and ``P + |y|^m``
    globally nonnegative (no small-ball condition), transported to ``(x, M)``.

Numerical scheme
----------------
Along a ray ``y = r u`` with ``|u| = 1`` the function ``P(r u) + |r u|^m`` is a
univariate polynomial in ``r``, so its minimum over ``[0, R]`` or
``[0, inf)`` is found exactly from the real roots of its derivative.  In one
dimension there are only the two rays ``u = +1, -1``, which makes every test
exact up to root-finding accuracy.  In two dimensions the ray minimum is a
continuous function of the angle; it is sampled on a uniform angular grid and
the best cells are refined with a bounded scalar minimizer.

The small-ball condition is examined through ``psi_u(s) = P(u / s) s^m`` for
``s >= 1``, again a polynomial in ``s``.  The condition holds exactly when
``inf_{s >= S, u} psi_u(s)`` has a nonnegative limit as ``S -> inf``.  We
evaluate these tail infima for ``S = 2^j``, ``j = 0..depth``; a value below
``-eps`` at every depth for some ``eps`` on the ladder is a violation, and a
tail that stays slightly negative past the whole ladder is reported as
``undetermined``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, minimize_scalar

from .jets import Jet, factorials, jet_rebase, jet_translate, multi_indices

__all__ = [
    "GammaConfig",
    "MembershipVerdict",
    "gamma0plus_member",
    "gamma_tilde0_member",
    "gamma_prime_member",
    "bk_sequence",
    "global_min",
    "ball_min",
    "normalize_jet",
    "minimal_scale",
]

MEMBER, NONMEMBER, UNDETERMINED = "member", "nonmember", "undetermined"


@dataclass
class GammaConfig:
    """Numerical knobs.

    ``grid_per_axis`` sets the angular resolution in two dimensions
    (``2 * grid_per_axis`` directions); in one dimension the scheme is exact
    and the value is unused.
    """

    grid_per_axis: int = 301
    eps_ladder: tuple[float, ...] = (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    tol: float = 1e-9
    nonneg_tol: float = 1e-12
    r_cut_slack: float = 0.05
    depth: int = 40
    lp_samples: int = 400

    @classmethod
    def from_dict(cls, data: dict) -> "GammaConfig":
        data = dict(data)
        if "eps_ladder" in data:
            data["eps_ladder"] = tuple(float(e) for e in data["eps_ladder"])
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eps_ladder"] = list(self.eps_ladder)
        return d


@dataclass
class MembershipVerdict:
    status: str
    margin: float
    witness: object = None
    reason: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def member(self) -> bool:
        return self.status == MEMBER

    def __bool__(self) -> bool:
        return self.member


# --------------------------------------------------------------------------
# ray machinery
# --------------------------------------------------------------------------

def _directions(n: int, count: int) -> tuple[np.ndarray, np.ndarray | None]:
    if n == 1:
        return np.array([[1.0], [-1.0]]), None
    if n == 2:
        th = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1), th
    raise NotImplementedError("membership tests support n <= 2")


def _homogeneous_parts(P: Jet, U: np.ndarray) -> np.ndarray:
    """``P_k(u)`` for each direction (rows) and degree ``k = 0..deg``."""
    n, d = P.n, P.degree
    idx = multi_indices(n, d)
    c = P.coeffs
    H = np.zeros((U.shape[0], d + 1))
    for a, ca in zip(idx, c):
        if ca != 0.0:
            H[:, sum(a)] += ca * np.prod(U ** np.array(a), axis=1)
    return H


def _trim(q: np.ndarray) -> np.ndarray:
    """Drop negligible leading (highest-degree) coefficients."""
    scale = max(1.0, float(np.max(np.abs(q)))) if q.size else 1.0
    k = len(q)
    while k > 1 and abs(q[k - 1]) <= 1e-14 * scale:
        k -= 1
    return q[:k]


def _poly_min(q: np.ndarray, lo: float, hi: float) -> tuple[float, float]:
    """Minimum of ``sum q_k t^k`` over ``[lo, hi]`` (``hi`` may be ``inf``)."""
    q = _trim(np.asarray(q, dtype=float))
    deg = len(q) - 1
    val = lambda t: float(np.polynomial.polynomial.polyval(t, q))
    if np.isinf(hi):
        if deg >= 1 and q[-1] < 0:
            # unbounded below: walk out until negative and keep going
            t = max(1.0, lo)
            while val(t) > -1.0 and t < 1e300:
                t *= 2.0
            return -math.inf, t
    cands = [lo] + ([] if np.isinf(hi) else [hi])
    if deg >= 2:
        roots = np.roots(np.polynomial.polynomial.polyder(q)[::-1])
        real = roots[np.abs(roots.imag) <= 1e-9 * (1 + np.abs(roots.real))].real
        cands += [t for t in real if lo <= t <= hi]
    vals = [val(t) for t in cands]
    i = int(np.argmin(vals))
    return vals[i], cands[i]


def _ray_min(H: np.ndarray, m: int, radius: float, add_norm: bool) -> tuple[np.ndarray, np.ndarray]:
    """Per direction, min over ``0 <= r <= radius`` of ``P(r u) (+ r^m)``."""
    vals, args = np.empty(H.shape[0]), np.empty(H.shape[0])
    for i, h in enumerate(H):
        q = np.zeros(max(len(h), m + 1))
        q[:len(h)] = h
        if add_norm:
            q[m] += 1.0
        vals[i], args[i] = _poly_min(q, 0.0, radius)
    return vals, args


def _angle_H(P: Jet, theta: float) -> np.ndarray:
    return _homogeneous_parts(P, np.array([[math.cos(theta), math.sin(theta)]]))


def _refined_min(P: Jet, m: int, radius: float, add_norm: bool, cfg: GammaConfig
                 ) -> tuple[float, np.ndarray]:
    """``min_{|y| <= radius} P(y) (+ |y|^m)`` with its minimizer."""
    U, th = _directions(P.n, 2 * cfg.grid_per_axis)
    H = _homogeneous_parts(P, U)
    vals, args = _ray_min(H, m, radius, add_norm)
    i = int(np.argmin(vals))
    best, best_y = float(vals[i]), args[i] * U[i]
    if th is None or not np.isfinite(best):
        return best, best_y
    step = th[1] - th[0]
    order = np.argsort(vals)[:4]
    for j in order:
        def f(t):
            return _ray_min(_angle_H(P, t), m, radius, add_norm)[0][0]
        res = minimize_scalar(f, bounds=(th[j] - step, th[j] + step), method="bounded",
                              options={"xatol": 1e-12})
        if res.fun < best:
            v, r = _ray_min(_angle_H(P, res.x), m, radius, add_norm)
            best = float(v[0])
            best_y = r[0] * np.array([math.cos(res.x), math.sin(res.x)])
    return best, best_y


def global_min(P: Jet, cfg: GammaConfig | None = None) -> tuple[float, np.ndarray]:
    """``inf_y P(y) + |y|^m`` for a jet based at 0, with a minimizer (or a witness if ``-inf``)."""
    cfg = cfg or GammaConfig()
    return _refined_min(P, P.m, math.inf, True, cfg)


def ball_min(P: Jet, radius: float, cfg: GammaConfig | None = None) -> tuple[float, np.ndarray]:
    """``min_{|y| <= radius} P(y)`` for a jet based at 0."""
    cfg = cfg or GammaConfig()
    return _refined_min(P, P.m, radius, False, cfg)


def _tail_profile(P: Jet, cfg: GammaConfig) -> tuple[np.ndarray, list]:
    """``T_j = inf_{s >= 2^j, u} P(u/s) s^m`` for ``j = 0..depth`` and the minimizing points."""
    m = P.m
    U, th = _directions(P.n, 2 * cfg.grid_per_axis)
    H = _homogeneous_parts(P, U)

    def tails(Hrows, dirs):
        out = np.full((len(Hrows), cfg.depth + 1), math.inf)
        pts = np.empty((len(Hrows), cfg.depth + 1), dtype=object)
        for i, h in enumerate(Hrows):
            # psi(s) = sum_k h_k s^(m-k)
            q = np.zeros(m + 1)
            for k, hk in enumerate(h[: m + 1]):
                q[m - k] += hk
            q = _trim(q)
            deg = len(q) - 1
            crit = []
            if deg >= 2:
                roots = np.roots(np.polynomial.polynomial.polyder(q)[::-1])
                crit = [r.real for r in roots if abs(r.imag) <= 1e-9 * (1 + abs(r.real)) and r.real >= 1.0]
            lead_neg = deg >= 1 and q[-1] < 0
            for j in range(cfg.depth + 1):
                S = 2.0 ** j
                if lead_neg:
                    v, s = _poly_min(q, S, math.inf)
                else:
                    cs = [S] + [c for c in crit if c >= S]
                    vs = [float(np.polynomial.polynomial.polyval(c, q)) for c in cs]
                    k = int(np.argmin(vs))
                    v, s = vs[k], cs[k]
                out[i, j] = v
                pts[i, j] = dirs[i] / s
        return out, pts

    T, pts = tails(H, U)
    best = np.argmin(T, axis=0)
    prof = T[best, np.arange(cfg.depth + 1)]
    wit = [pts[b, j] for j, b in enumerate(best)]
    if th is not None:
        step = th[1] - th[0]
        j = cfg.depth
        for i in np.argsort(T[:, j])[:4]:
            def f(t):
                return tails(_angle_H(P, t), [np.array([math.cos(t), math.sin(t)])])[0][0, j]
            res = minimize_scalar(f, bounds=(th[i] - step, th[i] + step), method="bounded",
                                  options={"xatol": 1e-12})
            if res.fun < prof[j]:
                u = np.array([math.cos(res.x), math.sin(res.x)])
                Tr, pr = tails(_angle_H(P, res.x), [u])
                better = Tr[0] < prof
                prof = np.where(better, Tr[0], prof)
                wit = [pr[0, k] if better[k] else wit[k] for k in range(len(wit))]
    return prof, wit


# --------------------------------------------------------------------------
# public membership tests
# --------------------------------------------------------------------------

def _check_finite(P: Jet) -> None:
    if not np.all(np.isfinite(P.derivs)) or not np.all(np.isfinite(P.base)):
        raise ValueError("jet has non-finite entries")


def _deriv_bound(P: Jet, max_order: int, tol: float) -> tuple[float, object]:
    idx = multi_indices(P.n, P.degree)
    worst, arg = -math.inf, None
    for a, v in zip(idx, P.derivs):
        if sum(a) <= max_order:
            slack = 1.0 - abs(v)
            if arg is None or slack < worst:
                worst, arg = slack, a
    return worst, arg


def small_ball_verdict(P: Jet, cfg: GammaConfig) -> MembershipVerdict:
    """The ``for every eps there is a ball`` condition on its own."""
    prof, wit = _tail_profile(P, cfg)
    deepest = float(prof[-1])
    if deepest >= -cfg.nonneg_tol:
        return MembershipVerdict(MEMBER, deepest, extra={"tail": prof.tolist()})
    for eps in cfg.eps_ladder:
        if not np.any(prof >= -eps):
            y = np.asarray(wit[-1], dtype=float)
            return MembershipVerdict(NONMEMBER, deepest, witness={"eps": eps, "point": y.tolist()},
                                     reason=f"P(y) + {eps:g}|y|^m < 0 arbitrarily close to 0",
                                     extra={"tail": prof.tolist()})
    return MembershipVerdict(UNDETERMINED, deepest, witness={"point": np.asarray(wit[-1]).tolist()},
                             reason="small-ball tail stays slightly negative beyond the eps ladder",
                             extra={"tail": prof.tolist()})


def gamma0plus_member(P: Jet, cfg: GammaConfig | None = None) -> MembershipVerdict:
    """Membership of a degree-``m`` jet at 0 in the set described in the module docstring."""
    cfg = cfg or GammaConfig()
    _check_finite(P)
    if not P.plus:
        raise ValueError("expects a degree-m jet (plus=True)")
    if np.any(P.base != 0):
        raise ValueError("expects a jet based at 0")
    slack, beta = _deriv_bound(P, P.m, cfg.tol)
    if slack < -cfg.tol:
        return MembershipVerdict(NONMEMBER, slack, witness={"beta": list(beta)},
                                 reason="derivative bound exceeded")
    gmin, y = global_min(P, cfg)
    if gmin < -cfg.nonneg_tol:
        return MembershipVerdict(NONMEMBER, gmin, witness={"point": np.asarray(y).tolist()},
                                 reason="P + |y|^m negative")
    sb = small_ball_verdict(P, cfg)
    margin = min(slack, gmin, sb.margin)
    if sb.status != MEMBER:
        return MembershipVerdict(sb.status, margin, witness=sb.witness, reason=sb.reason, extra=sb.extra)
    return MembershipVerdict(MEMBER, margin)


def bk_sequence(P: Jet, K: int, cfg: GammaConfig | None = None) -> list[float]:
    """``b_k = max(0, -min_{|y| <= 2^-k} P)`` for ``k = 0..K`` (nonincreasing)."""
    cfg = cfg or GammaConfig()
    if np.any(P.base != 0):
        raise ValueError("expects a jet based at 0")
    mins = [ball_min(P, 2.0 ** (-k), cfg)[0] for k in range(K + 1)]
    # balls are nested, so the true minima are nonincreasing as the ball grows;
    # enforce it against refinement noise
    for k in range(K - 1, -1, -1):
        mins[k] = min(mins[k], mins[k + 1])
    return [max(0.0, -v) for v in mins]


def _sample_directions_lp(n: int, cfg: GammaConfig) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    th = np.linspace(0.0, 2 * np.pi, max(16, cfg.lp_samples // 8), endpoint=False)
    return np.stack([np.cos(th), np.sin(th)], axis=1)


def gamma_tilde0_member(P: Jet, cfg: GammaConfig | None = None) -> MembershipVerdict:
    """Is there a homogeneous degree-``m`` completion ``T`` with ``P + T`` in the plus set?

    The completion is found by a linear program over the coefficients of
    ``T``.  Global nonnegativity is imposed at sampled points (radii on a
    geometric ladder in every sampled direction plus the origin); a second
    block of constraints at tiny radii pushes ``(P + T)(y) / |y|^m`` up, and
    the slack of that block is maximized.  An infeasible sampled program is a
    certificate of non-membership because sampling only relaxes the exact
    problem; a feasible candidate is re-checked exactly.
    """
    cfg = cfg or GammaConfig()
    _check_finite(P)
    if P.plus:
        raise ValueError("expects a degree-(m-1) jet")
    if np.any(P.base != 0):
        raise ValueError("expects a jet based at 0")
    n, m = P.n, P.m
    slack, beta = _deriv_bound(P, m - 1, cfg.tol)
    if slack < -cfg.tol:
        return MembershipVerdict(NONMEMBER, slack, witness={"beta": list(beta)},
                                 reason="derivative bound exceeded")
    top = [a for a in multi_indices(n, m) if sum(a) == m]
    afac = np.array([math.prod(math.factorial(v) for v in a) for a in top], dtype=float)
    # coefficient bound from |d^a T| = a! |t_a| <= 1
    tbound = 1.0 / afac
    B_T = float(np.sum(tbound))

    # a lower-order term that drives the small-ball profile below -sup|T| cannot be fixed
    prof0, wit0 = _tail_profile(P, cfg)
    if prof0[-1] < -B_T - cfg.tol:
        return MembershipVerdict(NONMEMBER, float(prof0[-1]),
                                 witness={"point": np.asarray(wit0[-1]).tolist()},
                                 reason="lower-order terms violate the small-ball condition for every completion")

    dirs = _sample_directions_lp(n, cfg)
    radii = np.concatenate([2.0 ** np.arange(6, -13, -0.5), [0.0]])
    deep = 2.0 ** np.arange(-8.0, -21.0, -1.0)

    def rows(y):
        mono_top = np.prod(y[:, None, :] ** np.array(top)[None], axis=2)   # (N, len(top))
        return mono_top, P(y)

    Y = (radii[:, None, None] * dirs[None]).reshape(-1, n)
    A1, p1 = rows(Y)
    r1 = np.linalg.norm(Y, axis=1)
    # P + T + |y|^m >= 0   <=>   -T(y) <= P(y) + |y|^m
    A_ub = [np.hstack([-A1, np.zeros((len(Y), 1))])]
    b_ub = [p1 + r1 ** m]
    Yd = (deep[:, None, None] * dirs[None]).reshape(-1, n)
    A2, p2 = rows(Yd)
    rd = np.linalg.norm(Yd, axis=1) ** m
    # s <= (P + T)(y) / |y|^m
    A_ub.append(np.hstack([-A2 / rd[:, None], np.ones((len(Yd), 1))]))
    b_ub.append(p2 / rd)
    A_ub = np.vstack(A_ub)
    b_ub = np.concatenate(b_ub)
    c = np.zeros(len(top) + 1)
    c[-1] = -1.0
    bounds = [(-t, t) for t in tbound] + [(None, 1.0)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status == 2:
        return MembershipVerdict(NONMEMBER, -math.inf, reason="no completion keeps P + T + |y|^m >= 0 at sample points")
    if res.status != 0:
        return MembershipVerdict(UNDETERMINED, math.nan, reason=f"LP solver: {res.message}")
    t = np.clip(res.x[:-1], -tbound, tbound)
    full = _embed(P)
    derivs = full.derivs.copy()
    pos = {a: i for i, a in enumerate(multi_indices(n, m))}
    for a, ta, fa in zip(top, t, afac):
        derivs[pos[a]] = ta * fa
    cand = Jet(P.base, m, derivs, plus=True)
    v = gamma0plus_member(cand, cfg)
    extra = {"completion": cand.to_dict(), "lp_slack": float(res.x[-1])}
    if v.member:
        return MembershipVerdict(MEMBER, v.margin, witness=cand, extra=extra)
    return MembershipVerdict(UNDETERMINED, v.margin, witness=cand,
                             reason=f"LP completion failed exact re-check: {v.reason}", extra=extra)


def _embed(P: Jet) -> Jet:
    from .jets import jet_embed
    return jet_embed(P)


def normalize_jet(P: Jet, x, M: float) -> Jet:
    """``P`` viewed at ``x`` and scale ``M``: the jet at 0 with derivatives ``d^b P(x) / M``."""
    x = np.asarray(x, dtype=float).reshape(P.n)
    at_x = jet_rebase(P, x) if not np.array_equal(P.base, x) else P
    return jet_translate(at_x, np.zeros(P.n)) / M


def gamma_prime_member(P: Jet, x, M: float, f_value: float | None = None,
                       cfg: GammaConfig | None = None) -> MembershipVerdict:
    """Membership in the ``(x, M)`` transport of the Lipschitz-flavor set, optionally sliced by ``P(x) = f``."""
    cfg = cfg or GammaConfig()
    if not M > 0:
        raise ValueError("M must be positive")
    _check_finite(P)
    R = normalize_jet(P, x, M)
    if f_value is not None:
        err = abs(R.derivs[0] * M - f_value)
        if err > cfg.tol * max(1.0, abs(f_value)):
            return MembershipVerdict(NONMEMBER, -err, witness={"value": float(R.derivs[0] * M)},
                                     reason="value does not match the data")
    slack, beta = _deriv_bound(R, R.m - 1, cfg.tol)
    if slack < -cfg.tol:
        return MembershipVerdict(NONMEMBER, slack, witness={"beta": list(beta)},
                                 reason="derivative bound exceeded")
    gmin, y = global_min(R, cfg)
    if gmin < -cfg.nonneg_tol:
        return MembershipVerdict(NONMEMBER, gmin, witness={"point": (np.asarray(y) + np.asarray(x).reshape(-1)).tolist()},
                                 reason="P + M|y - x|^m negative")
    return MembershipVerdict(MEMBER, min(slack, gmin))


def minimal_scale(P: Jet, x, cfg: GammaConfig | None = None, rel: float = 1e-9) -> float:
    """Smallest ``M`` at which :func:`gamma_prime_member` accepts (bisection; acceptance is monotone in ``M``)."""
    cfg = cfg or GammaConfig()
    R = normalize_jet(P, x, 1.0)
    orders = np.array([sum(a) for a in R.indices])
    lo = float(np.max(np.abs(R.derivs[orders <= R.m - 1]))) if R.derivs.size else 0.0
    if lo == 0.0 and gamma_prime_member(P, x, 1e-300, cfg=cfg).member:
        return 0.0
    lo = max(lo, 1e-300)
    hi = lo
    while not gamma_prime_member(P, x, hi, cfg=cfg).member:
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    if hi == lo:
        return lo
    lo = hi / 2.0 if hi > lo else lo
    while hi - lo > rel * hi:
        mid = 0.5 * (lo + hi)
        if gamma_prime_member(P, x, mid, cfg=cfg).member:
            hi = mid
        else:
            lo = mid
    return hi
