import itertools
from fractions import Fraction

import numpy as np
import pytest

from nonneg_whitney.czdecomp import (DyadicCube, RegionError, check_good_geometry,
                                     classify_and_anchor, cubes_from_json, cz_decompose,
                                     decomposition_to_csv, decomposition_to_json,
                                     enumerate_ok_maximal, is_ok, max_overlap, padded_region)

from oracles import brute_cz, cube_bounds


def unit_cubes(lo, hi, n=1):
    return tuple(DyadicCube(0, c) for c in itertools.product(range(lo, hi), repeat=n))


def random_points(rng, n, k, span=2.0):
    E = rng.random((k, n)) * span
    # occasionally add a close pair so the decomposition goes deep
    if k >= 2 and rng.random() < 0.5:
        E[1] = E[0] + rng.choice([-1, 1], size=n) * 2.0 ** -rng.integers(3, 8)
    return E


class TestDyadicCube:
    def test_parent_and_children(self):
        Q = DyadicCube(-2, (3, -1))
        assert Q.parent() == DyadicCube(-1, (1, -1))
        assert Q in Q.parent().children()
        assert all(c.parent() == Q for c in Q.children())

    def test_dilate_is_concentric(self):
        Q = DyadicCube(-1, (1,))
        lo, hi = Q.dilate_bounds(5)
        assert (lo[0] + hi[0]) / 2 == pytest.approx(Q.center[0])
        assert hi[0] - lo[0] == pytest.approx(5 * Q.side)

    def test_half_open(self):
        Q = DyadicCube(0, (0,))
        assert Q.contains(np.array([[0.0]]))[0]
        assert not Q.contains(np.array([[1.0]]))[0]


class TestIsOk:
    def test_single_point_unit_cube(self):
        assert is_ok(DyadicCube(0, (0,)), [0.0])

    def test_too_large(self):
        assert not is_ok(DyadicCube(1, (0,)), [0.0])

    def test_two_points_in_dilate(self):
        assert not is_ok(DyadicCube(0, (0,)), [0.0, 0.1])

    def test_heredity(self):
        # if Q' is OK and 5Q is inside 5Q', then Q is OK
        rng = np.random.default_rng(0)
        for _ in range(300):
            E = rng.random((6, 2)) * 3
            Qp = DyadicCube(int(-rng.integers(0, 4)), tuple(rng.integers(-2, 6, size=2)))
            lev = Qp.level - int(rng.integers(0, 3))
            Q = DyadicCube(lev, tuple(rng.integers(-30, 60, size=2)))
            lo, hi = cube_bounds(Q.level, Q.corner, 5)
            plo, phi = cube_bounds(Qp.level, Qp.corner, 5)
            if all(plo[i] <= lo[i] and hi[i] <= phi[i] for i in range(2)) and is_ok(Qp, E):
                assert is_ok(Q, E)


class TestDecompose:
    def test_empty_set_gives_unit_cubes(self):
        dec = classify_and_anchor(cz_decompose(np.zeros((0, 2)), unit_cubes(0, 4, 2)))
        assert sorted(dec.cubes) == sorted(unit_cubes(0, 4, 2))
        assert set(dec.types) == {3} and set(dec.anchors) == {None}

    def test_single_point(self):
        dec = classify_and_anchor(cz_decompose([0.5], unit_cubes(-2, 2)))
        assert sorted(dec.cubes) == sorted(unit_cubes(-2, 2))
        i = dec.cubes.index(DyadicCube(0, (0,)))
        assert dec.types[i] == 1 and dec.anchor_point(i)[0] == 0.5

    def test_close_pair_matches_enumeration(self):
        E = [0.5, 0.5 + 2.0 ** -6]
        region = unit_cubes(-2, 2)
        dec = cz_decompose(E, region)
        oracle = brute_cz(np.array(E)[:, None], [q.corner for q in region])
        assert sorted((q.level, q.corner) for q in dec.cubes) == oracle
        assert sorted(dec.cubes) == sorted(enumerate_ok_maximal(E, region, min_level=-10))
        assert min(q.level for q in dec.cubes) < -3

    def test_close_pair_anchors_are_nearby(self):
        E = np.array([[0.5], [0.5 + 2.0 ** -6]])
        dec = classify_and_anchor(cz_decompose(E, unit_cubes(-2, 2)))
        for i, q in enumerate(dec.cubes):
            a = dec.anchor_point(i)
            if a is not None:
                # anchors lie in the parent's 5-dilate, whose half-width is 5 sides
                # and whose centre is half a side away
                assert np.max(np.abs(a - q.center)) <= 5.5 * q.side
        # anchors of touching cubes are within a fixed multiple of the side
        for i, j in itertools.combinations(range(len(dec.cubes)), 2):
            a, b = dec.anchor_point(i), dec.anchor_point(j)
            qi, qj = dec.cubes[i], dec.cubes[j]
            if a is None or b is None:
                continue
            lo_i, hi_i = qi.dilate_bounds(Fraction(65, 64))
            lo_j, hi_j = qj.dilate_bounds(Fraction(65, 64))
            if np.all(lo_i <= hi_j) and np.all(lo_j <= hi_i):
                assert np.max(np.abs(a - b)) <= 12 * qi.side

    def test_random_against_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(12):
            n = int(rng.integers(1, 3))
            E = random_points(rng, n, int(rng.integers(0, 8)))
            region = padded_region(E, n=n)
            dec = cz_decompose(E, region)
            oracle = brute_cz(E, [q.corner for q in region], min_level=-14)
            assert sorted((q.level, q.corner) for q in dec.cubes) == oracle

    def test_invariants(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            n = int(rng.integers(1, 3))
            E = random_points(rng, n, int(rng.integers(0, 20)))
            dec = classify_and_anchor(cz_decompose(E, padded_region(E, n=n)))
            vol = sum(Fraction(2) ** (n * q.level) for q in dec.cubes)
            assert vol == len(dec.region)
            assert len(set(dec.cubes)) == len(dec.cubes)
            for q in dec.cubes:
                assert q.level <= 0 and is_ok(q, E)
                if q.level < 0:
                    assert not is_ok(q.parent(), E)
            assert check_good_geometry(dec.cubes) == []
            X = np.concatenate([rng.random((400, n)) * 4 - 1, E]) if len(E) else rng.random((400, n))
            assert max_overlap(dec.cubes, X) <= 4 ** n

    def test_disjoint_interiors(self):
        rng = np.random.default_rng(3)
        E = random_points(rng, 2, 10)
        dec = cz_decompose(E, padded_region(E))
        for a, b in itertools.combinations(dec.cubes, 2):
            assert not (a.contains_cube(b) or b.contains_cube(a))

    def test_adding_a_point_refines(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            E = random_points(rng, 1, 5)
            extra = rng.random((1, 1)) * 2
            region = padded_region(np.vstack([E, extra]), n=1)
            before = cz_decompose(E, region)
            after = cz_decompose(np.vstack([E, extra]), region)
            for q in after.cubes:
                assert any(p.contains_cube(q) for p in before.cubes)

    def test_point_on_region_edge_rejected(self):
        with pytest.raises(RegionError):
            cz_decompose([1.5], unit_cubes(0, 2))

    def test_duplicates_rejected(self):
        with pytest.raises(RegionError):
            cz_decompose([0.5, 0.5], unit_cubes(-2, 3))


def test_type_two_anchor_tie_break():
    # type-2 anchors: nearest point of E in the parent's 5-dilate, ties broken lexicographically
    E = np.array([[0.25], [0.25 + 2.0 ** -4]])
    dec = classify_and_anchor(cz_decompose(E, unit_cubes(-3, 4)))
    for i, q in enumerate(dec.cubes):
        if dec.types[i] != 2:
            continue
        near = [p for p in E if q.parent().contains(p[None], 5)[0]]
        d = [float(np.sum((p - q.center) ** 2)) for p in near]
        best = min(range(len(near)), key=lambda j: (d[j], tuple(near[j])))
        assert np.array_equal(dec.anchor_point(i), near[best])


def test_exports():
    E = np.array([[0.5], [0.6]])
    dec = classify_and_anchor(cz_decompose(E, unit_cubes(-2, 3)))
    assert cubes_from_json(decomposition_to_json(dec)) == dec.cubes
    text = decomposition_to_csv(dec, header_comment="input_digest=abc")
    assert text.startswith("# input_digest=abc\nlevel,type,lo1,hi1,anchor1\n")
    assert len(text.strip().splitlines()) == len(dec.cubes) + 2
