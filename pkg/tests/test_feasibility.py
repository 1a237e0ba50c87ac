import numpy as np
import pytest
from scipy.optimize import linprog

from nonneg_whitney.feasibility import (BudgetError, FeasibilityConfig, finiteness_gap, helly_check,
                                        min_norm, whitney_feasible)
from nonneg_whitney.gamma import gamma_prime_member
from nonneg_whitney.whitney import taylor_compat_check

from oracles import lipschitz_optimum


def dense_grid_lipschitz(x, f, step=1e-3):
    """min M with a nonnegative piecewise-linear g on a grid, g = f on x, |g| <= M, |slope| <= M."""
    lo, hi = x.min(), x.max()
    grid = np.unique(np.concatenate([np.arange(lo, hi + step, step), x]))
    k = grid.size
    # variables: g_0..g_{k-1}, M ; minimise M
    c = np.zeros(k + 1)
    c[-1] = 1
    A, b = [], []
    for i in range(k - 1):
        h = grid[i + 1] - grid[i]
        for s in (1, -1):
            row = np.zeros(k + 1)
            row[i + 1], row[i], row[-1] = s / h, -s / h, -1
            A.append(row)
            b.append(0)
    for i in range(k):
        row = np.zeros(k + 1)
        row[i], row[-1] = 1, -1
        A.append(row)
        b.append(0)
    Aeq, beq = [], []
    for xi, fi in zip(x, f):
        row = np.zeros(k + 1)
        row[int(np.searchsorted(grid, xi))] = 1
        Aeq.append(row)
        beq.append(fi)
    res = linprog(c, A_ub=np.array(A), b_ub=b, A_eq=np.array(Aeq), b_eq=beq,
                  bounds=[(0, None)] * (k + 1), method="highs")
    return res.x[-1]


class TestWhitneyFeasible:
    def test_single_point_too_large(self):
        assert whitney_feasible([[0.0]], [2.0], 1.0, 1).status == "infeasible"

    def test_two_points(self):
        v = whitney_feasible([[0.0], [1.0]], [0.0, 1.0], 1.0, 1)
        assert v.feasible
        assert [P.derivs[0] for P in v.witness.jets] == pytest.approx([0.0, 1.0])

    def test_empty(self):
        v = whitney_feasible(np.zeros((0, 1)), [], 1.0, 1)
        assert v.feasible and len(v.witness.jets) == 0

    def test_infeasible_carries_certificate(self):
        v = whitney_feasible([[0.0], [0.1]], [0.0, 1.0], 1.0, 1)
        assert v.status == "infeasible" and v.certificate


class TestMinNorm:
    def test_single_point(self):
        assert min_norm([[0.0]], [2.0], 1).M == pytest.approx(2.0, rel=1e-6)

    def test_two_points(self):
        assert min_norm([[0.0], [1.0]], [0.0, 1.0], 1).M == pytest.approx(1.0, rel=1e-6)

    def test_zero_data_hits_floor(self):
        assert min_norm([[0.0], [1.0]], [0.0, 0.0], 2).M == pytest.approx(1e-9)

    def test_lipschitz_closed_form(self):
        rng = np.random.default_rng(0)
        for _ in range(15):
            k = int(rng.integers(1, 8))
            x = np.sort(rng.random(k)) * 3
            f = rng.random(k) * (rng.random(k) > 0.3)
            if f.max() == 0:
                f[0] = 0.5
            got = min_norm(x, f, 1).M
            assert got == pytest.approx(lipschitz_optimum(x, f), rel=5e-3)

    def test_closed_form_matches_dense_grid_lp(self):
        rng = np.random.default_rng(1)
        for _ in range(3):
            x = np.sort(rng.random(5))
            f = rng.random(5)
            assert dense_grid_lipschitz(x, f) == pytest.approx(lipschitz_optimum(x, f), rel=1e-6)

    def test_witness_verifies_independently(self):
        rng = np.random.default_rng(2)
        for m in (1, 2, 3):
            x = np.sort(rng.random(5))
            f = rng.random(5)
            v = min_norm(x, f, m)
            assert taylor_compat_check(v.witness, v.M * (1 + 1e-7)).ok
            for xi, P, fi in zip(v.witness.points, v.witness.jets, f):
                assert gamma_prime_member(P, xi, v.M * (1 + 1e-7), f_value=fi).member

    def test_lp_and_bisection_agree(self):
        rng = np.random.default_rng(3)
        for m in (1, 2):
            x = np.sort(rng.random(4))
            f = rng.random(4)
            a = min_norm(x, f, m).M
            b = min_norm(x, f, m, method="bisect").M
            assert a <= b * (1 + 1e-6) and b <= a * (1 + 2e-3)

    def test_restriction_monotone(self):
        rng = np.random.default_rng(4)
        for m in (1, 2):
            x = np.sort(rng.random(6))
            f = rng.random(6)
            full = min_norm(x, f, m).M
            for drop in range(6):
                keep = [i for i in range(6) if i != drop]
                assert min_norm(x[keep], f[keep], m).M <= full * (1 + 1e-6)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(5)
        x = np.sort(rng.random(5))
        f = rng.random(5)
        base = min_norm(x, f, 2).M
        for t in (0.1, 3.0):
            assert min_norm(x, t * f, 2).M == pytest.approx(t * base, rel=1e-3)

    def test_two_dimensional(self):
        rng = np.random.default_rng(6)
        E = rng.random((4, 2))
        f = rng.random(4)
        v = min_norm(E, f, 1)
        assert v.feasible
        # the sup of f and each pairwise slope are lower bounds
        slopes = [abs(f[i] - f[j]) / np.linalg.norm(E[i] - E[j])
                  for i in range(4) for j in range(i)]
        assert v.M >= max(f.max(), max(slopes)) * (1 - 1e-6)


class TestFinitenessGap:
    def test_full_subset_gives_ratio_one(self):
        x = np.array([0.0, 0.4, 1.0])
        r = finiteness_gap(x, [0.2, 0.0, 0.7], 2, k_sharp=5)
        assert r["ratio"] == pytest.approx(1.0)

    def test_three_points(self):
        r = finiteness_gap([-1.0, 0.0, 1.0], [1.0, 0.0, 1.0], 1, k_sharp=2)
        assert r["ratio"] >= 1 - 1e-9
        assert len(r["subsets"]) == 3
        assert r["label"] == "empirical, relaxation-dependent"

    def test_budget(self):
        cfg = FeasibilityConfig(subset_budget=10)
        with pytest.raises(BudgetError):
            finiteness_gap(np.arange(8.0), np.ones(8), 1, k_sharp=4, cfg=cfg)


def halfplane(a, b):
    return (np.array([a], float), np.array([b], float))


class TestHelly:
    def test_pairwise_but_not_triple(self):
        sets = [halfplane([-1, 0], 0), halfplane([0, -1], 0), halfplane([1, 1], -1)]
        pair = helly_check(sets, k=2)
        assert pair["hypothesis"] and not pair["conclusion"]
        assert not pair["implication_holds"] and pair["consistent"] and not pair["helly_applies"]
        triple = helly_check(sets)
        assert not triple["hypothesis"] and triple["consistent"]

    def test_four_halfplanes(self):
        sets = [halfplane([-1, 0], 0), halfplane([0, -1], 0), halfplane([1, 0], 1),
                halfplane([0, 1], 1)]
        r = helly_check(sets)
        assert r["hypothesis"] and r["conclusion"] and r["consistent"]

    def test_single_set(self):
        r = helly_check([halfplane([1, 0], 0)])
        assert r["hypothesis"] and r["conclusion"] and r["consistent"]
