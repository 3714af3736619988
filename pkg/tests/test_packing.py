import numpy as np
import pytest

from locent.bodies import HolderGrid, LinearEllipsoid, LinearL1, MonotoneGrid, dist
from locent.errors import CapExceeded, NonmemberCenter
from locent.packing import (
    exhaustive_max_packing,
    greedy_max_packing,
    greedy_select,
)
from locent.points import Ball

from conftest import UnitBox, brute_force_max_packing, sweep_max_separated_1d

INTERVAL = MonotoneGrid(1, 1)  # the interval [0, 1] as a 1-D class body


def interval_pt(x):
    return INTERVAL.point([x])


def test_greedy_interval_sep_half_two_centers():
    # exhaustive search over a 1001-point grid: max strict-0.5-separated
    # subset of [0,1] has size 2
    grid = np.linspace(0.0, 1.0, 1001)
    assert sweep_max_separated_1d(grid, 0.5) == 2
    pack = greedy_max_packing(
        INTERVAL, Ball(interval_pt(0.0), 1.0), 0.5, pool_seed=3, pool_size=128, validate=True
    )
    assert len(pack) == 2
    assert sorted(c.coords[0] for c in pack.centers) == [0.0, 1.0]


def test_greedy_separation_at_least_diameter_single_center():
    pack = greedy_max_packing(INTERVAL, Ball(interval_pt(0.0), 1.0), 1.0, pool_seed=3, pool_size=64)
    assert len(pack) == 1
    assert pack.centers[0].coords[0] == 0.0


def test_greedy_unit_square_from_corner():
    sq = UnitBox(2)
    pack = greedy_max_packing(
        sq,
        Ball(sq.point([0.0, 0.0]), np.sqrt(2.0)),
        1.0,
        pool_seed=5,
        pool_size=128,
        extra_candidates=sq.extreme_points(),
        validate=True,
    )
    assert len(pack) == 2
    got = sorted(tuple(c.coords) for c in pack.centers)
    assert got == [(0.0, 0.0), (1.0, 1.0)]


def test_greedy_rejects_nonmember_center():
    with pytest.raises(NonmemberCenter):
        greedy_max_packing(INTERVAL, Ball(INTERVAL.point([2.0]), 1.0), 0.5, 0, 8)


def test_greedy_deterministic_bit_identical():
    body = LinearL1(6, 1.0)
    ball = Ball(body.point(np.zeros(6)), 1.5)
    a = greedy_max_packing(body, ball, 0.3, pool_seed=11, pool_size=64)
    b = greedy_max_packing(body, ball, 0.3, pool_seed=11, pool_size=64)
    assert len(a) == len(b)
    for u, v in zip(a.centers, b.centers):
        assert np.array_equal(u.coords, v.coords)


def test_exhaustive_examples():
    seg = LinearL1(1, 2.0)  # the segment [-2, 2], Euclidean metric
    pts = [seg.point([x]) for x in (0.0, 0.6, 1.2)]
    assert len(exhaustive_max_packing(seg, pts, 0.5)) == 3
    pts = [seg.point([x]) for x in (0.0, 0.4, 0.8)]
    assert len(exhaustive_max_packing(seg, pts, 0.5)) == 2
    assert len(exhaustive_max_packing(seg, pts[:1], 0.5)) == 1


def test_exhaustive_cap():
    seg = LinearL1(1, 2.0)
    pts = [seg.point([x]) for x in np.linspace(-1, 1, 25)]
    with pytest.raises(CapExceeded):
        exhaustive_max_packing(seg, pts, 0.1)


def test_exhaustive_matches_subset_enumeration_oracle():
    rng = np.random.default_rng(7)
    body = UnitBox(2)
    for _ in range(40):
        k = int(rng.integers(2, 13))
        pts = rng.random((k, 2))
        sep = float(rng.uniform(0.05, 1.2))
        got = len(exhaustive_max_packing(body, pts, sep))
        assert got == brute_force_max_packing(pts, sep)


def test_exhaustive_at_least_greedy_on_shared_candidates():
    rng = np.random.default_rng(21)
    body = UnitBox(3)
    for _ in range(60):
        k = int(rng.integers(2, 16))
        pts = rng.random((k, 3))
        sep = float(rng.uniform(0.1, 1.0))
        ex = len(exhaustive_max_packing(body, pts, sep, cap=16))
        gr = len(greedy_select(body, pts, sep, start=0))
        assert ex >= gr


def test_exhaustive_matches_1d_sweep_oracle_and_bounds_greedy():
    # the left-to-right sweep is optimal for 1-D strict separation, so it is
    # an independent oracle for the branch-and-bound count; greedy is
    # maximal-not-maximum and can only undershoot
    rng = np.random.default_rng(3)
    seg = LinearL1(1, 2.0)
    for _ in range(30):
        pts = np.sort(rng.uniform(-2, 2, size=int(rng.integers(2, 17))))[:, None]
        sep = float(rng.uniform(0.05, 1.5))
        oracle = sweep_max_separated_1d(pts[:, 0], sep)
        ex = len(exhaustive_max_packing(seg, pts, sep))
        assert ex == oracle
        start = int(np.argmin(pts[:, 0]))
        gr = len(greedy_select(seg, pts, sep, start=start))
        assert gr <= oracle


@pytest.mark.parametrize(
    "body",
    [
        LinearL1(5, 1.0),
        LinearEllipsoid.sobolev(5),
        MonotoneGrid(1, 6),
        MonotoneGrid(2, 3),
        HolderGrid(0.7, 1.0, 6),
    ],
    ids=lambda b: b.kind + str(b.dim),
)
def test_packing_invariants_randomized(body):
    rng = np.random.default_rng(hash(body.kind) % 2**32)
    d = body.diameter()
    for trial in range(12):
        center = body.point(body.sample_rows(1, rng)[0])
        radius = float(rng.uniform(0.2, 1.2)) * d
        sep = float(rng.uniform(0.05, 0.5)) * radius
        pack = greedy_max_packing(
            body, Ball(center, radius), sep, pool_seed=trial, pool_size=24, validate=True
        )
        pts = pack.centers_array
        # strict separation, membership, and ball containment
        for i in range(len(pts)):
            assert body.contains_coords(pts[i], 1e-7)
            assert dist(body, pts[i], center) <= radius * (1 + 1e-9)
            for j in range(i + 1, len(pts)):
                assert dist(body, pts[i], pts[j]) > sep
