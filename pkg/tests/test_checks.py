import csv
import json

import pytest

from hhmeasure.checks import (
    CHECK_IDS,
    CHECKS,
    EVIDENCE_COLUMNS,
    FAIL,
    INCONCLUSIVE,
    PASS,
    _decreasing_verdict,
    run_check,
)
from hhmeasure.lattice import line_plus

EXPECTED_IDS = {
    "reflection", "tail-escape", "flatness", "segment", "escape-bounds",
    "away", "line-decomposition", "box-coupling", "halfbox", "l6-schedule",
}


def test_registry_is_complete():
    assert set(CHECK_IDS) == EXPECTED_IDS
    assert all(callable(fn) for fn in CHECKS.values())


def test_unknown_check_raises():
    with pytest.raises(KeyError):
        run_check("perpetual-motion")


def test_decreasing_verdict_logic():
    v, reason = _decreasing_verdict([3.0, 2.0, 1.0], slack=0.0)
    assert v == PASS and "endpoint decrease" in reason
    v, reason = _decreasing_verdict([3.0, 3.5, 2.9], slack=0.0)
    assert v == PASS and "non-monotone" in reason
    v, _ = _decreasing_verdict([1.0, 2.0, 3.0], slack=0.0)
    assert v == FAIL
    v, reason = _decreasing_verdict([1.0, 0.9], slack=0.0)
    assert v == INCONCLUSIVE
    v, _ = _decreasing_verdict([1.0, 0.99, 0.999999], slack=0.1)
    assert v == INCONCLUSIVE  # drop smaller than the stated slack


def test_reflection_check_passes(kernel):
    rep = run_check("reflection", kernel=kernel, n_exact=(2, 3, 4), n_float=(8, 16))
    assert rep.verdict == PASS
    assert rep.check_id == "reflection"
    quantities = {r["quantity"] for r in rep.rows}
    assert "up_minus_sides" in quantities


def test_report_write_contract(tmp_path, kernel):
    rep = run_check("reflection", out_dir=tmp_path, kernel=kernel,
                    n_exact=(2, 3), n_float=(8,))
    csv_path = tmp_path / "check_reflection.csv"
    json_path = tmp_path / "check_reflection.json"
    assert csv_path.exists() and json_path.exists()
    with open(csv_path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        assert tuple(header) == EVIDENCE_COLUMNS
        assert sum(1 for _ in reader) == len(rep.rows)
    with open(json_path) as fh:
        payload = json.load(fh)
    assert payload["verdict"] == rep.verdict
    assert payload["check"] == "reflection"
    assert "params" in payload and "observed" in payload


def test_too_few_points_is_inconclusive(kernel):
    rep = run_check("flatness", kernel=kernel, n_values=(16, 32), deltas=(0.1,))
    assert rep.verdict == INCONCLUSIVE
    assert "3 points" in rep.reason or "points" in rep.reason


def test_tail_escape_small(kernel):
    rep = run_check("tail-escape", kernel=kernel, m_values=(4, 8, 16))
    assert rep.verdict == PASS
    scaled = [r for r in rep.rows if r["quantity"] == "scaled_escape"]
    vals = [float(r["value"]) for r in scaled]
    assert max(vals) <= 4.0 * min(vals)


def test_away_small_schedule(kernel):
    rep = run_check("away", kernel=kernel, n_values=(16, 32, 64))
    assert rep.verdict == PASS
    assert rep.params["n_values"] == [16, 32, 64]


def test_away_supports_custom_set(kernel):
    rep = run_check("away", kernel=kernel, set_spec=line_plus((1, 1)), x=(1, 1),
                    n_values=(16, 32, 48))
    assert rep.verdict in (PASS, FAIL, INCONCLUSIVE)
    assert all(float(r["value"]) > -1e-10 for r in rep.rows
               if r["quantity"] == "scaled_max_far_hit")


def test_segment_short_schedule(kernel):
    rep = run_check("segment", kernel=kernel, deltas=(0.5,),
                    n_values=(25, 50, 100, 200))
    assert rep.verdict in (PASS, INCONCLUSIVE)
    if rep.verdict == PASS:
        rows = [r for r in rep.rows if r["quantity"] == "segment_limit"]
        assert abs(float(rows[0]["value"]) - 1.0 / 3.0) < 0.02 / 3.0
