from hhmeasure.lattice import LINE, line_plus
from hhmeasure.montecarlo import (
    Estimate,
    RngSpec,
    mc_hit,
    mc_inharmonic,
    outer_circle,
    sample_walk,
)


def test_same_seed_same_answer():
    a = mc_hit((0, 10), LINE, (0, 0), samples=20_000, seed=3)
    b = mc_hit((0, 10), LINE, (0, 0), samples=20_000, seed=3)
    assert a.mean == b.mean
    assert a.std_error == b.std_error
    assert a.timeout_fraction == b.timeout_fraction


def test_seed_changes_the_stream():
    a = mc_hit((0, 10), LINE, (0, 0), samples=20_000, seed=3)
    b = mc_hit((0, 10), LINE, (0, 0), samples=20_000, seed=4)
    assert a.mean != b.mean


def test_gambler_barrier_within_three_sigma():
    n = 8
    est = mc_hit((0, 1), LINE, "barrier", samples=200_000, seed=11, barrier=n)
    assert est.std_error > 0.0
    assert est.within(1.0 / n, sigmas=3.0)


def test_line_site_equals_directed_edge():
    # every first arrival at a line site comes from directly above, so the
    # directed-edge count must match the site count walk for walk
    site = mc_hit((2, 6), LINE, (0, 0), samples=30_000, seed=5)
    edge = mc_hit((2, 6), LINE, ((0, 0), (0, 1)), samples=30_000, seed=5)
    assert site.mean == edge.mean


def test_decoration_absorbs():
    A = line_plus((0, 1))
    est = mc_hit((0, 4), A, (0, 1), samples=50_000, seed=9)
    assert est.mean > 0.2  # the decorated site shields the line below it


def test_timeouts_are_excluded_not_hidden():
    est = mc_hit((0, 40), LINE, (0, 0), samples=5_000, cap=100, seed=1)
    assert est.timeout_fraction > 0.5
    assert est.n_samples == 5_000
    assert 0.0 <= est.mean <= 1.0


def test_estimate_within_floor():
    e = Estimate(mean=0.5, std_error=0.0, n_samples=10, timeout_fraction=0.0)
    assert e.within(0.5000001, sigmas=3.0, floor=1e-3)
    assert not e.within(0.6, sigmas=3.0, floor=1e-3)


def test_mc_inharmonic_brackets_exact(kernel):
    from hhmeasure.measures import inharmonic

    # completed-walk estimator: the cap is chosen so the dropped-timeout
    # conditioning shift stays well under the statistical band
    n = 8
    exact = inharmonic(LINE, n, (0, 0), kernel=kernel)
    est = mc_inharmonic(LINE, n, (0, 0), samples=40_000, cap=6400 * n * n, seed=2)
    assert est.timeout_fraction < 0.03
    sig = abs(est.mean - exact.value) / est.std_error
    assert sig < 4.0


def test_outer_circle_ring():
    ring = outer_circle(12)
    assert len(ring) > 0
    assert all(x * x + y * y >= 12 * 12 for (x, y) in ring)
    assert all(abs(x) <= 13 and abs(y) <= 13 for (x, y) in ring)


def test_sample_walk_deterministic():
    a = sample_walk((0, 5), LINE, step_cap=10_000, rng=RngSpec(seed=7, stream=0))
    b = sample_walk((0, 5), LINE, step_cap=10_000, rng=RngSpec(seed=7, stream=0))
    assert a == b
    assert a.site is not None and a.site.x2 == 0
    assert a.prev is not None and a.prev.x2 == 1
