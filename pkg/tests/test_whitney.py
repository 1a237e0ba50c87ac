import numpy as np
import pytest

from nonneg_whitney.jets import Jet
from nonneg_whitney.whitney import WhitneyField, seminorm, taylor_compat_check


def field_1d(points, derivs, m):
    return WhitneyField(np.array(points, float), [Jet([p], m, d) for p, d in zip(points, derivs)])


def random_field(rng, n=2, m=3, k=5, scale=1.0):
    pts = rng.normal(size=(k, n))
    size = {(1, 1): 1, (1, 2): 2, (1, 3): 3, (2, 1): 1, (2, 2): 3, (2, 3): 6}[(n, m)]
    return WhitneyField(pts, [Jet(p, m, scale * rng.normal(size=size)) for p in pts])


def brute_seminorm(W):
    """Direct double loop over ordered pairs, rebasing by explicit polynomial evaluation."""
    from nonneg_whitney.jets import jet_rebase
    best = 0.0
    for i, P in enumerate(W.jets):
        for j, Q in enumerate(W.jets):
            if i == j:
                continue
            x, y = W.points[i], W.points[j]
            D = P - jet_rebase(Q, x)
            dist = np.linalg.norm(x - y)
            for a, v in zip(D.indices, D.derivs):
                best = max(best, abs(v) / dist ** (W.m - sum(a)))
    return best


def test_constant_pair():
    assert seminorm(field_1d([0, 1], [[0, 0], [1, 0]], 2)) == pytest.approx(1.0)


def test_singleton_is_zero():
    assert seminorm(field_1d([0.3], [[5, 7]], 2)) == 0.0


def test_linear_pair():
    # P^0 = 0, P^1 = y - 1
    assert seminorm(field_1d([0, 1], [[0, 0], [0, 1]], 2)) == pytest.approx(1.0)


def test_compat_check_accepts_and_rejects():
    W = field_1d([0, 1], [[0, 0], [1, 0]], 2)
    assert taylor_compat_check(W, 1.0).ok
    v = taylor_compat_check(W, 0.5)
    assert not v.ok
    assert v.witness == (0, 1, (0,))


def test_singleton_always_compatible():
    assert taylor_compat_check(field_1d([2.0], [[9.0]], 1), 1e-6).ok


def test_check_requires_positive_level():
    with pytest.raises(ValueError):
        taylor_compat_check(field_1d([0.0], [[0.0]], 1), 0.0)


def test_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(10):
        W = random_field(rng)
        assert seminorm(W) == pytest.approx(brute_seminorm(W), rel=1e-12)


def test_homogeneous_and_subadditive():
    rng = np.random.default_rng(1)
    for _ in range(10):
        A = random_field(rng)
        B = WhitneyField(A.points, [Jet(P.base, P.m, rng.normal(size=P.derivs.size)) for P in A.jets])
        S = WhitneyField(A.points, [P + Q for P, Q in zip(A.jets, B.jets)])
        assert seminorm(S) <= seminorm(A) + seminorm(B) + 1e-12
        t = -2.5
        T = WhitneyField(A.points, [t * P for P in A.jets])
        assert seminorm(T) == pytest.approx(abs(t) * seminorm(A), rel=1e-12)


def test_translation_invariant():
    rng = np.random.default_rng(2)
    A = random_field(rng)
    shift = np.array([3.0, -7.0])
    B = WhitneyField(A.points + shift, [Jet(P.base + shift, P.m, P.derivs) for P in A.jets])
    assert seminorm(B) == pytest.approx(seminorm(A), rel=1e-10)


def test_field_validation():
    with pytest.raises(ValueError):
        WhitneyField(np.array([[0.0], [0.0]]), [Jet([0.0], 1, [1.0]), Jet([0.0], 1, [2.0])])
    with pytest.raises(ValueError):
        WhitneyField(np.array([[0.0]]), [Jet([1.0], 1, [1.0])])
    with pytest.raises(ValueError):
        WhitneyField(np.array([[0.0], [1.0]]), [Jet([0.0], 1, [1.0]), Jet([1.0], 2, [1.0, 0.0])])


def test_json_round_trip():
    W = random_field(np.random.default_rng(3))
    back = WhitneyField.from_dict(W.to_dict())
    assert np.array_equal(back.points, W.points)
    assert all(P == Q for P, Q in zip(back.jets, W.jets))
