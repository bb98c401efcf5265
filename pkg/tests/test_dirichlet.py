from fractions import Fraction

import pytest

from hhmeasure.dirichlet import (
    AbsorbingProblem,
    auto_pad,
    below_class,
    disc_out_class,
    escape_probability,
    expected_visits,
    float_exit,
    hit_distribution,
    kick_start,
    rational_exit,
    row_class,
    segment_class,
    visits_from,
)
from hhmeasure.lattice import Site, Window, d_n, make_window
from hhmeasure.potential import FiniteHitting


def _gambler_problem(n: int, width: int) -> AbsorbingProblem:
    win = make_window(-width, width, 1, n - 1)
    return AbsorbingProblem(win, line_classes={"bottom": below_class(0),
                                               "top": row_class(n)})


def test_line_class_membership():
    prob = AbsorbingProblem(make_window(-3, 3, 1, 4),
                            line_classes={"bottom": below_class(0),
                                          "top": row_class(5),
                                          "seg": segment_class(2, 1)})
    assert prob.classify((100, 0)) == "bottom"
    assert prob.classify((0, -7)) == "bottom"
    assert prob.classify((-9, 5)) == "top"
    assert prob.classify((1, 2)) == "seg"
    assert prob.classify((2, 2)) is None


def test_disc_out_class():
    prob = AbsorbingProblem(make_window(-6, 6, -6, 6),
                            line_classes={"far": disc_out_class(5.0)})
    assert prob.classify((3, 4)) == "far"  # |x| = 5 is included
    assert prob.classify((5, 0)) == "far"
    assert prob.classify((3, 3)) is None


def test_gambler_kick_exact():
    for n in (2, 5, 10):
        prob = _gambler_problem(n, width=14 * n)
        esc = escape_probability((0, 0), "bottom", "top", prob)
        assert esc["defect"] < 1e-13
        assert abs(esc["value"] - 1.0 / (4 * n)) < 1e-12


def test_kick_direct_step_mass():
    # kick from an interior line site: the three immediate line neighbors
    # absorb 3/4 of the mass instantly
    prob = _gambler_problem(4, width=30)
    dist = kick_start((0, 0), prob)
    assert abs(dist.class_masses["bottom"] + dist.class_masses["top"]
               + dist.defect - 1.0) < 1e-12
    assert dist.class_masses["bottom"] > 0.75


def test_visits_from_rejects_absorbing_start():
    prob = _gambler_problem(4, width=10)
    with pytest.raises(ValueError):
        visits_from((0, 0), prob)


def test_mirror_symmetry_of_segment_hitting():
    win = make_window(-12, 12, -12, 12)
    prob = AbsorbingProblem(win, classes={"A": set(d_n(4))})
    dist = hit_distribution((0, 6), prob)
    for x in range(5):
        assert abs(dist.mass((x, 0)) - dist.mass((-x, 0))) < 1e-12


def test_window_leak_closure_reproduces_green(kernel):
    # visits inside the window plus leak mass times the capacitor green
    # function equals the free-space green function of the absorbing set
    B = d_n(3)
    fh = FiniteHitting(B, kernel=kernel)
    win = make_window(-9, 9, -6, 6)
    prob = AbsorbingProblem(win, classes={"A": set(B)})
    u, z = Site(0, 2), Site(1, 1)
    sol = visits_from(u, prob)
    dist = sol.absorbed()
    closed = sol.u_at(z) + sum(m * fh.green(w, z) for w, m in dist.leak.items())
    assert abs(closed - fh.green(u, z)) < 1e-11


def test_expected_visits_bracket():
    prob = _gambler_problem(6, width=20)
    out = expected_visits((0, 2), [(0, 3), (1, 3)], prob, visit_ceiling=10.0)
    assert out["lower"] == out["value"] <= out["upper"]
    assert out["value"] > 0.0


def test_auto_pad_stops_when_defect_met():
    def build(pad):
        return _gambler_problem(4, width=pad)

    problem, dist = auto_pad(build, lambda p: kick_start((0, 0), p),
                             target_defect=1e-10, pads=(8, 16, 32, 64))
    assert dist.defect <= 1e-10
    assert problem.window.x1_max >= 16


def test_rational_exit_exactness():
    r = rational_exit(3)
    assert r.total == 1
    assert r.edges["left"] == r.edges["right"]
    margin = r.edges["up"] - r.edges["left"] - r.edges["right"]
    assert isinstance(margin, Fraction)
    assert margin > 0


def test_float_exit_matches_rational():
    r = rational_exit(4)
    f = float_exit(4)
    for key in ("up", "down", "left", "right"):
        assert abs(f[key] - float(r.edges[key])) < 1e-12


def test_float_exit_large_box_mass_balance():
    f = float_exit(16)
    assert abs(sum(f.values()) - 1.0) < 1e-9
    assert f["up"] > f["left"] > 0.0


def test_site_class_equals_line_class():
    # the same strip absorbed by explicit site sets instead of line rules
    n, width = 4, 30
    line_prob = _gambler_problem(n, width)
    site_prob = AbsorbingProblem(
        make_window(-width, width, 1, n - 1),
        classes={"bottom": {Site(x, 0) for x in range(-width - 1, width + 2)},
                 "top": {Site(x, n) for x in range(-width - 1, width + 2)}},
    )
    a = escape_probability((0, 0), "bottom", "top", line_prob)
    b = escape_probability((0, 0), "bottom", "top", site_prob)
    assert abs(a["value"] - b["value"]) < 1e-12


def test_interior_puncture_blocks_mass():
    # adding an absorbing island strictly between start and target lowers
    # the target's hitting mass
    win = make_window(-8, 8, 1, 9)
    base = AbsorbingProblem(win, line_classes={"bottom": below_class(0),
                                               "top": row_class(10)})
    punct = AbsorbingProblem(win, classes={"isl": {Site(0, 5)}},
                             line_classes={"bottom": below_class(0),
                                           "top": row_class(10)})
    p0 = escape_probability((0, 2), "bottom", "top", base)
    p1 = escape_probability((0, 2), "bottom", "top", punct)
    assert p1["value"] < p0["value"]
    assert punct.classify((0, 5)) == "isl"
