import math

import numpy as np
import pytest

from hhmeasure.lattice import Site, d_n
from hhmeasure.potential import (
    KAPPA,
    FiniteHitting,
    PotentialKernel,
    fit_c0,
    g0_halfplane,
    hm_infinity,
)

PI = math.pi


def test_classical_values(kernel):
    assert kernel.a(0, 0) == 0.0
    assert kernel.a(1, 0) == 1.0
    assert kernel.a(0, -1) == 1.0
    assert abs(kernel.a(1, 1) - 4.0 / PI) < 1e-12
    assert abs(kernel.a(2, 0) - (4.0 - 8.0 / PI)) < 1e-12


def test_symmetries(kernel):
    for (i, j) in [(3, 5), (10, 0), (7, 7), (40, 13)]:
        v = kernel.a(i, j)
        assert kernel.a(-i, j) == v == kernel.a(i, -j)
        assert kernel.a(j, i) == v


def test_harmonicity_small_block(kernel):
    # mean over neighbors equals the center value away from the origin,
    # and exceeds it by exactly 1 at the origin
    for (i, j) in [(1, 0), (2, 3), (0, 5), (12, 12)]:
        lap = sum(kernel.a(i + di, j + dj)
                  for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))) / 4.0 - kernel.a(i, j)
        assert abs(lap) < 1e-12
    lap0 = sum(kernel.a(di, dj) for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))) / 4.0
    assert abs(lap0 - 1.0) < 1e-14


def test_a_array_matches_scalar(kernel):
    dx = np.array([0, 1, -3, 17])
    dy = np.array([2, -1, 4, 0])
    arr = kernel.a_array(dx, dy)
    for k in range(len(dx)):
        assert arr[k] == kernel.a(int(dx[k]), int(dy[k]))


def test_lookup_outside_radius_raises():
    small = PotentialKernel.build(8)
    with pytest.raises(ValueError):
        small.a(9, 0)


def test_save_load_round_trip(tmp_path):
    k = PotentialKernel.build(12)
    path = tmp_path / "kernel.bin"
    k.save(path)
    k2 = PotentialKernel.load(path)
    assert k2.radius == 12
    assert np.array_equal(k.grid, k2.grid)


def test_c0_fit_matches_closed_form(kernel):
    fit = fit_c0(kernel, radii=range(400, 1200, 50))
    assert abs(fit["c0"] - KAPPA) < 1e-6


def test_g0_halfplane_positive_and_zero_on_line(kernel):
    assert g0_halfplane(kernel, (0, 3), (2, 4)) > 0.0
    assert abs(g0_halfplane(kernel, (0, 3), (5, 0))) < 1e-14


def test_equilibrium_masses_sum_to_one(kernel):
    eq = hm_infinity(d_n(20), kernel=kernel)
    total = sum(eq.masses.values())
    assert abs(total - 1.0) < 1e-10
    assert min(eq.masses.values()) > 0.0


def test_equilibrium_mirror_symmetry(kernel):
    eq = hm_infinity(d_n(15), kernel=kernel)
    for x in range(16):
        assert abs(eq.mass((x, 0)) - eq.mass((-x, 0))) < 1e-12


def test_robin_growth_in_n(kernel):
    # Robin constant of the segment grows, with increments approaching
    # the log-capacity rate
    robins = [hm_infinity(d_n(n), kernel=kernel).robin for n in (10, 20, 40, 80)]
    diffs = [b - a for a, b in zip(robins, robins[1:])]
    assert all(d > 0 for d in diffs)
    for d in diffs:
        assert abs(d - (2.0 / PI) * math.log(2.0)) < 0.05


def test_single_point_green_oracle(kernel):
    # B = {0}: G_B(u, z) = a(u) + a(z) - a(u - z)
    fh = FiniteHitting([Site(0, 0)], kernel=kernel)
    for u, z in [((1, 0), (1, 0)), ((1, 0), (0, 1)), ((2, 3), (-1, 4)), ((5, 0), (5, 0))]:
        want = (kernel.a(*u) + kernel.a(*z)
                - kernel.a(u[0] - z[0], u[1] - z[1]))
        assert abs(fh.green(u, z) - want) < 1e-12


def test_green_symmetry(kernel):
    fh = FiniteHitting(d_n(6), kernel=kernel)
    pairs = [((0, 3), (4, 1)), ((-2, 5), (7, 2)), ((10, 1), (0, 8))]
    for u, z in pairs:
        assert abs(fh.green(u, z) - fh.green(z, u)) < 1e-11


def test_green_many_matches_scalar(kernel):
    fh = FiniteHitting(d_n(4), kernel=kernel)
    us = [(0, 2), (3, 1), (-5, 4)]
    zs = [(1, 3), (-2, 2)]
    G = fh.green_many(us, zs)
    for i, u in enumerate(us):
        for j, z in enumerate(zs):
            assert abs(G[i, j] - fh.green(u, z)) < 1e-12


def test_escape_potential_properties(kernel):
    fh = FiniteHitting(d_n(8), kernel=kernel)
    # zero on the set itself
    assert abs(fh.escape_potential((3, 0))) < 1e-12
    # harmonic off the set
    u = (0, 4)
    lap = sum(fh.escape_potential((u[0] + di, u[1] + dj))
              for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))) / 4.0
    assert abs(lap - fh.escape_potential(u)) < 1e-11
    # positive away from the set
    assert fh.escape_potential((0, 30)) > 0.0


def test_hit_probs_rows_sum_to_one(kernel):
    fh = FiniteHitting(d_n(5), kernel=kernel)
    h = fh.hit_probs((2, 3))
    assert abs(float(np.sum(h)) - 1.0) < 1e-10
    assert float(np.min(h)) > -1e-13
