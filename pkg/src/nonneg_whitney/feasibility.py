"""Jet-level feasibility as linear programs.

For a finite set ``S`` with values ``f >= 0`` the unknowns are the jets
``P^x`` (derivatives at their own base point) for ``x`` in ``S``.  A field is
admissible at level ``M`` when

* ``P^x(x) = f(x)``;
* ``|d^b P^x(x)| <= M`` for ``|b| <= m - 1``;
* ``|d^b (P^x - P^y)(x)| <= M |x - y|^(m - |b|)`` for all ordered pairs;
* ``P^x(y) + M |y - x|^m >= 0`` for every ``y``.

All are linear in the jets and in ``M``.  The last family is infinite; it
is imposed at sample points and tightened by cutting planes: after each
solve, the exact minimizer of ``P^x + M|. - x|^m`` is added whenever it is
negative.  Every feasible answer is re-verified with the independent
checks in :mod:`nonneg_whitney.whitney` and :mod:`nonneg_whitney.gamma`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .gamma import GammaConfig, gamma_prime_member, global_min, normalize_jet
from .jets import Jet, multi_indices, rebase_matrix, _monomials, factorials
from .whitney import WhitneyField, taylor_compat_check

__all__ = [
    "FeasibilityConfig",
    "JetLP",
    "FeasibilityVerdict",
    "whitney_feasible",
    "min_norm",
    "finiteness_gap",
    "helly_check",
    "BudgetError",
]


class BudgetError(RuntimeError):
    """The requested enumeration exceeds the configured budget."""


@dataclass
class FeasibilityConfig:
    radii: tuple[float, ...] = tuple(np.geomspace(1e-4, 8.0, 40))
    directions: int = 32
    cut_rounds: int = 40
    cut_tol: float = 1e-13
    lp_tol: float = 1e-10
    verify_slack: float = 1e-7
    bisect_iters: int = 40
    bisect_rtol: float = 1e-3
    subset_budget: int = 1_000_000
    tuple_budget: int = 100_000
    gamma: GammaConfig = field(default_factory=GammaConfig)


@dataclass
class FeasibilityVerdict:
    status: str                      # "feasible" | "infeasible" | "undetermined"
    M: float | None = None
    witness: WhitneyField | None = None
    certificate: list | None = None
    message: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


# --------------------------------------------------------------------------

class JetLP:
    """The LP over stacked jets; the last variable is ``M`` when it is free.

    Each inequality row carries a tag naming the constraint family and the
    points involved, so infeasibility certificates can be read back.
    """

    def __init__(self, S: np.ndarray, f: np.ndarray, m: int, M: float | None,
                 cfg: FeasibilityConfig):
        self.S = S
        self.f = f
        self.m = m
        self.n = S.shape[1]
        self.cfg = cfg
        self.M_fixed = M
        self.idx = multi_indices(self.n, m - 1)
        self.D = len(self.idx)
        self.orders = np.array([sum(a) for a in self.idx])
        self.N = S.shape[0]
        self.floor = 0.0
        self.nvar = self.N * self.D + (1 if M is None else 0)
        self.rows: list[np.ndarray] = []
        self.rhs: list[float] = []
        self.tags: list[tuple] = []
        self._build()

    # variable helpers ----------------------------------------------------
    def _blk(self, i: int) -> slice:
        return slice(i * self.D, (i + 1) * self.D)

    def _add(self, coeffs: np.ndarray, m_coeff: float, rhs: float, tag: tuple) -> None:
        """Row ``coeffs . P - m_coeff * M <= rhs`` (``M`` folded into rhs when fixed)."""
        row = np.zeros(self.nvar)
        row[: self.N * self.D] = coeffs
        if self.M_fixed is None:
            row[-1] = -m_coeff
        else:
            rhs = rhs + m_coeff * self.M_fixed
        self.rows.append(row)
        self.rhs.append(rhs)
        self.tags.append(tag)

    def _build(self) -> None:
        N, D = self.N, self.D
        for i in range(N):
            for k, a in enumerate(self.idx):
                e = np.zeros(N * D)
                e[i * D + k] = 1.0
                self._add(e, 1.0, 0.0, ("bound", i, a))
                self._add(-e, 1.0, 0.0, ("bound", i, a))
        for i in range(N):
            for j in range(N):
                if i == j:
                    continue
                h = self.S[i] - self.S[j]
                A = rebase_matrix(self.n, self.m - 1, h)   # derivs of P^j at x_i
                dist = float(np.linalg.norm(h))
                for k, a in enumerate(self.idx):
                    e = np.zeros(N * D)
                    e[i * D + k] += 1.0
                    e[self._blk(j)] -= A[k]
                    scale = dist ** (self.m - self.orders[k])
                    self._add(e, scale, 0.0, ("pair", i, j, a))
                    self._add(-e, scale, 0.0, ("pair", i, j, a))
        for i in range(N):
            self.add_samples(i, self._sample_offsets())

    def _sample_offsets(self) -> np.ndarray:
        r = np.asarray(self.cfg.radii)
        if self.n == 1:
            return np.concatenate([r, -r])[:, None]
        th = np.linspace(0, 2 * np.pi, self.cfg.directions, endpoint=False)
        U = np.stack([np.cos(th), np.sin(th)], axis=1)
        return (r[:, None, None] * U[None]).reshape(-1, 2)

    def add_samples(self, i: int, Z: np.ndarray) -> None:
        """Impose ``P^i(x_i + z) + M |z|^m >= 0`` at the offsets ``Z``."""
        mono = _monomials(Z, self.n, self.m - 1) / factorials(self.n, self.m - 1)
        nz = np.linalg.norm(Z, axis=1) ** self.m
        for row, w, z in zip(mono, nz, Z):
            e = np.zeros(self.N * self.D)
            e[self._blk(i)] = -row
            self._add(e, w, 0.0, ("nonneg", i, tuple(np.round(z, 15))))

    def solve(self):
        A_ub = np.array(self.rows) if self.rows else None
        b_ub = np.array(self.rhs) if self.rhs else None
        A_eq = np.zeros((self.N, self.nvar))
        for i in range(self.N):
            A_eq[i, i * self.D] = 1.0
        c = np.zeros(self.nvar)
        bounds = [(None, None)] * (self.N * self.D)
        if self.M_fixed is None:
            c[-1] = 1.0
            bounds.append((self.floor, None))
        tol = self.cfg.lp_tol
        return linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=self.f, bounds=bounds,
                       method="highs", options={"primal_feasibility_tolerance": tol,
                                                "dual_feasibility_tolerance": tol})

    def jets(self, x: np.ndarray) -> list[Jet]:
        out = []
        for i in range(self.N):
            d = np.array(x[self._blk(i)], dtype=float)
            d[0] = self.f[i]
            out.append(Jet(self.S[i], self.m, d))
        return out


def _prepare(S, f, n: int | None):
    S = np.asarray(S, dtype=float)
    f = np.asarray(f, dtype=float).reshape(-1)
    if S.size == 0:
        return S.reshape(0, n or 1), f
    if S.ndim == 1:
        S = S.reshape(-1, n or 1)
    if S.shape[0] != f.size:
        raise ValueError("S and f differ in length")
    if np.any(f < 0):
        raise ValueError("f must be nonnegative")
    return S, f


def _solve_with_cuts(lp: JetLP) -> tuple[object, list[Jet] | None, int]:
    cfg = lp.cfg
    for rnd in range(cfg.cut_rounds + 1):
        res = lp.solve()
        if res.status != 0:
            return res, None, rnd
        jets = lp.jets(res.x)
        M = lp.M_fixed if lp.M_fixed is not None else float(res.x[-1])
        added = False
        for i, P in enumerate(jets):
            R = normalize_jet(P, lp.S[i], M)
            val, z = global_min(R, cfg.gamma)
            if val < -cfg.cut_tol:
                z = np.asarray(z, dtype=float).reshape(1, -1)
                if not np.all(np.isfinite(z)):
                    continue
                lp.add_samples(i, z)
                added = True
        if not added:
            return res, jets, rnd
    return res, jets, cfg.cut_rounds


def _verify(S, f, jets: list[Jet], M: float, cfg: FeasibilityConfig) -> tuple[bool, str]:
    if not jets:
        return True, ""
    W = WhitneyField(S, jets)
    c = taylor_compat_check(W, M)
    if not c.ok:
        return False, f"seminorm {c.value:.6g} exceeds M"
    for x, P, fx in zip(S, jets, f):
        v = gamma_prime_member(P, x, M, f_value=fx, cfg=cfg.gamma)
        if not v.member:
            return False, f"jet at {x.tolist()} rejected: {v.reason}"
    return True, ""


def whitney_feasible(S, f, M: float, m: int, cfg: FeasibilityConfig | None = None,
                     n: int | None = None) -> FeasibilityVerdict:
    """Is there an admissible field at level ``M``?  Feasible answers carry a verified witness."""
    cfg = cfg or FeasibilityConfig()
    S, f = _prepare(S, f, n)
    if S.shape[0] == 0:
        return FeasibilityVerdict("feasible", M, WhitneyField(S, []))
    lp = JetLP(S, f, m, M, cfg)
    res, jets, _ = _solve_with_cuts(lp)
    if res.status == 2:
        return FeasibilityVerdict("infeasible", M, certificate=_iis(lp), message=res.message)
    if res.status != 0:
        return FeasibilityVerdict("undetermined", M, message=res.message)
    Mv = M * (1 + cfg.verify_slack)
    ok, why = _verify(S, f, jets, Mv, cfg)
    if not ok:
        return FeasibilityVerdict("undetermined", M, message=f"witness failed re-verification: {why}")
    return FeasibilityVerdict("feasible", M, WhitneyField(S, jets))


def _iis(lp: JetLP) -> list:
    """A small infeasible subset of row tags, by deletion filtering over constraint families."""
    keep = list(range(len(lp.rows)))

    def feasible(rows):
        sub = JetLP.__new__(JetLP)
        sub.__dict__.update(lp.__dict__)
        sub.rows = [lp.rows[r] for r in rows]
        sub.rhs = [lp.rhs[r] for r in rows]
        return sub.solve().status != 2

    if len(keep) > 400:
        return sorted({t[0] for t in lp.tags})
    for r in list(keep):
        trial = [k for k in keep if k != r]
        if not feasible(trial):
            keep = trial
    return [lp.tags[r] for r in keep] + [("slice", i) for i in range(lp.N)]


def _floor(f: np.ndarray) -> float:
    fmax = float(np.max(f)) if f.size else 0.0
    return 1e-3 * fmax if fmax > 0 else 1e-9


def min_norm(S, f, m: int, cfg: FeasibilityConfig | None = None, method: str = "lp",
             n: int | None = None) -> FeasibilityVerdict:
    """Smallest admissible level ``M`` and a witness field.

    ``method="lp"`` treats ``M`` as an LP variable (exact for the sampled
    problem, then certified by cutting planes and re-verification);
    ``method="bisect"`` bisects on ``M`` with :func:`whitney_feasible`.  The
    search is floored at ``1e-3 * max f`` (or ``1e-9`` when ``f == 0``).
    """
    cfg = cfg or FeasibilityConfig()
    S, f = _prepare(S, f, n)
    if S.shape[0] == 0:
        raise ValueError("min_norm needs a nonempty set")
    floor = _floor(f)
    if method == "bisect":
        return _min_norm_bisect(S, f, m, cfg, floor)
    lp = JetLP(S, f, m, None, cfg)
    lp.floor = floor
    res, jets, _ = _solve_with_cuts(lp)
    if res.status != 0 or jets is None:
        return FeasibilityVerdict("undetermined", message=res.message)
    M = max(float(res.x[-1]), floor)
    for _ in range(20):
        Mv = M * (1 + cfg.verify_slack)
        ok, why = _verify(S, f, jets, Mv, cfg)
        if ok:
            return FeasibilityVerdict("feasible", M, WhitneyField(S, jets))
        # sampled optimum slightly optimistic: fall back to a fixed-M solve just above it
        M *= 1 + 1e-6
        v = whitney_feasible(S, f, M, m, cfg)
        if v.feasible:
            return v
    return FeasibilityVerdict("undetermined", M, message=f"could not certify a witness: {why}")


def _crude_upper(S: np.ndarray, f: np.ndarray, m: int) -> float:
    fmax = float(np.max(f))
    if S.shape[0] < 2:
        return max(fmax, 1e-9) * 2.0 ** m
    d = np.linalg.norm(S[:, None] - S[None], axis=2)
    dmin = float(np.min(d[d > 0]))
    return max(fmax, 1e-9) * (1.0 + 4.0 / dmin) ** m * 4.0


def _min_norm_bisect(S, f, m, cfg, floor) -> FeasibilityVerdict:
    hi = _crude_upper(S, f, m)
    best = whitney_feasible(S, f, hi, m, cfg)
    if not best.feasible:
        raise ValueError(f"upper bound M={hi:g} infeasible: {best.status} {best.message}")
    lo_v = whitney_feasible(S, f, floor, m, cfg)
    if lo_v.feasible:
        return lo_v
    lo = floor
    for _ in range(cfg.bisect_iters):
        if hi - lo <= cfg.bisect_rtol * hi:
            break
        mid = math.sqrt(lo * hi) if hi / lo > 4 else 0.5 * (lo + hi)
        v = whitney_feasible(S, f, mid, m, cfg)
        if v.feasible:
            hi, best = mid, v
        else:
            lo = mid
    return best


# --------------------------------------------------------------------------
# finiteness experiment
# --------------------------------------------------------------------------

def finiteness_gap(E, f, m: int, k_sharp: int, cfg: FeasibilityConfig | None = None,
                   n: int | None = None) -> dict:
    """Compare the worst subset level with the global level.

    ``M_subset`` is the largest minimal level over subsets of size
    ``min(k_sharp, #E)``; smaller subsets never raise it, because a witness
    on a set restricts to a witness on each subset.  ``ratio`` is
    ``M_global / M_subset``.
    """
    cfg = cfg or FeasibilityConfig()
    E, f = _prepare(E, f, n)
    N = E.shape[0]
    k = min(k_sharp, N)
    total = sum(math.comb(N, j) for j in range(1, k + 1))
    if total > cfg.subset_budget:
        raise BudgetError(f"{total} subsets exceed the budget of {cfg.subset_budget}; "
                          "use fewer points or a smaller k_sharp")
    table = []
    for sid, sub in enumerate(itertools.combinations(range(N), k)):
        v = min_norm(E[list(sub)], f[list(sub)], m, cfg)
        table.append({"subset": sid, "points": list(sub), "size": k,
                      "M": v.M, "status": v.status})
    glob = min_norm(E, f, m, cfg)
    M_sub = max(t["M"] for t in table if t["M"] is not None)
    return {"M_subset": M_sub, "M_global": glob.M, "ratio": glob.M / M_sub,
            "k_sharp": k_sharp, "subsets": table, "global_status": glob.status,
            "label": "empirical, relaxation-dependent"}


# --------------------------------------------------------------------------
# Helly harness
# --------------------------------------------------------------------------

def _nonempty(sets: Sequence[tuple[np.ndarray, np.ndarray]], D: int, tol: float = 1e-9) -> bool:
    A = np.vstack([np.atleast_2d(a) for a, _ in sets])
    b = np.concatenate([np.atleast_1d(bb) for _, bb in sets])
    res = linprog(np.zeros(D), A_ub=A, b_ub=b + tol, bounds=[(None, None)] * D, method="highs")
    return res.status == 0


def helly_check(sets: Sequence[tuple[np.ndarray, np.ndarray]], k: int | None = None,
                budget: int = 100_000) -> dict:
    """Check ``k``-wise intersections (default ``D + 1``) against the full intersection.

    Each set is ``{x : A x <= b}``.  The result reports whether every
    ``k``-subfamily intersects (``hypothesis``), whether the whole family does
    (``conclusion``) and whether the implication ``hypothesis -> conclusion``
    held.  ``consistent`` is False only if the implication failed while
    ``k >= D + 1``, which would contradict Helly's theorem; for smaller ``k``
    a failing implication is expected and not an inconsistency.
    """
    sets = [(np.atleast_2d(np.asarray(a, dtype=float)), np.atleast_1d(np.asarray(b, dtype=float)))
            for a, b in sets]
    if not sets:
        return {"hypothesis": True, "conclusion": True, "implication_holds": True,
                "consistent": True, "k": 0, "D": 0, "failing_subfamily": None, "helly_applies": True}
    D = sets[0][0].shape[1]
    k = D + 1 if k is None else k
    kk = min(k, len(sets))
    count = math.comb(len(sets), kk)
    if count > budget:
        raise BudgetError(f"{count} subfamilies exceed the budget of {budget}")
    failing = None
    for combo in itertools.combinations(range(len(sets)), kk):
        if not _nonempty([sets[i] for i in combo], D):
            failing = combo
            break
    hyp = failing is None
    concl = _nonempty(sets, D)
    implication = (not hyp) or concl
    return {"hypothesis": hyp, "conclusion": concl, "implication_holds": implication,
            "consistent": implication or k < D + 1, "k": k, "D": D,
            "failing_subfamily": failing, "helly_applies": k >= D + 1}
