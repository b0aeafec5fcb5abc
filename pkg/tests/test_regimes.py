"""
Tests for the regime classification and the admissible exponent pairs.
"""

import math

import pytest

from drift_strichartz.core.regimes import (
    CASE_TAGS,
    PairSpec,
    admissible_pair,
    classify,
    fit_growth_exponent,
    pairs_for,
    strichartz_pair,
)
from drift_strichartz.core.structure import analyze_structure
from drift_strichartz.errors import DomainError, InconclusiveRegimeError
from drift_strichartz.gallery import fixture


def _classify(name, **params):
    spec = fixture(name, **params).spec
    return classify(spec, analyze_structure(spec))


@pytest.mark.parametrize("name, params, case, hypothesis", [
    ("ex-1.1", {}, "Thm1.3-i", "A"),
    ("conformal", {"n": 2}, "Thm1.3-i", "A"),
    ("smoluchowski-kramers", {}, "Thm1.3-i", "A"),
    ("fan-tilt", {"n": 3, "sign": 1}, "Thm1.3-i", "A"),
    ("fan-tilt", {"n": 3, "sign": -1}, "Thm1.3-i", "A"),
    ("free", {"n": 2}, "Thm1.3-ii", "A"),
    ("fan", {"n": 3, "k": 3}, "Thm1.3-ii", "A"),
    ("kolmogorov", {"m": 2}, "Thm1.3-iii", "A"),
    ("dym", {"n": 3}, "Thm1.3-iii", "A"),
    ("rotation-7.2", {}, "Thm1.4", "B"),
])
def test_case_table(name, params, case, hypothesis):
    report = _classify(name, **params)
    assert report.case_tag == case
    assert report.hypothesis == hypothesis
    assert report.case_tag in CASE_TAGS


def test_rotation_large_time_dimension():
    report = _classify("rotation-7.2")
    assert report.D == 4
    assert report.D_infty == 2.0
    assert report.fit_diagnostics["exponent"] == pytest.approx(2.0, abs=0.1)


@pytest.mark.parametrize("k, case, hypothesis", [(2, "anomalous-B", "B"), (3, "anomalous-A", "A")])
def test_anomalous_cases(k, case, hypothesis):
    report = _classify("anomalous-7.4", k=k)
    assert report.case_tag == case
    assert report.hypothesis == hypothesis
    assert report.D_infty == 6.0
    assert report.fit_diagnostics["exponent"] == pytest.approx(6.0, abs=0.3)


def test_fan_anomalous_growth():
    report = _classify("fan", n=3, k=2)
    assert report.D == 5
    assert report.case_tag == "anomalous-A"
    assert report.D_infty == 9.0


def test_noisy_fit_is_inconclusive(settings_with):
    settings_with(fit_residual_max=1e-12)
    with pytest.raises(InconclusiveRegimeError) as info:
        _classify("anomalous-7.4", k=2)
    assert info.value.exit_code == 3
    assert {"exponent", "residual", "t_lo", "t_hi", "samples"} <= set(info.value.diagnostics)


def test_growth_exponent_of_free_equation():
    exponent, residual = fit_growth_exponent(fixture("free", n=2).spec, 1.0, 100.0, 16)
    assert exponent == pytest.approx(2.0, abs=1e-10)
    assert residual < 1e-10


def test_growth_fit_validates_window():
    spec = fixture("free").spec
    with pytest.raises(DomainError):
        fit_growth_exponent(spec, 10.0, 1.0)
    with pytest.raises(DomainError):
        fit_growth_exponent(spec, 1.0, 10.0, 4)


@pytest.mark.parametrize("D, r", [(5, 2.8), (4, 3.0), (1, 6.0), (3, 10.0 / 3.0)])
def test_strichartz_pair_is_diagonal(D, r):
    pair = strichartz_pair(D)
    assert pair.r == pytest.approx(r)
    assert pair.q == pytest.approx(r)
    assert 2.0 / pair.q == pytest.approx(D * (0.5 - 1.0 / pair.r))


def test_admissible_pair_algebra():
    pair = admissible_pair(4, 3.0)
    assert pair.q == pytest.approx(3.0)
    assert pair.q_dual == pytest.approx(1.5)
    assert pair.r_dual == pytest.approx(1.5)
    assert pair.beta == pytest.approx(1.0 - 4.0 / 6.0)
    assert pair.q_infty is None


def test_pair_under_hypothesis_b_carries_large_time_exponent():
    pair = admissible_pair(4, 3.0, D_infty=2.0)
    assert pair.q_infty == pytest.approx(6.0)
    assert pair.q_infty_dual == pytest.approx(1.2)
    from_report = PairSpec(**pairs_for(_classify("rotation-7.2")))
    assert from_report.q_infty == pytest.approx(2.0 / (2.0 * (0.5 - 1.0 / from_report.r)))


@pytest.mark.parametrize("D, r", [(4, 4.0), (4, 5.0), (5, 2.0), (3, 1.5)])
def test_inadmissible_pairs(D, r):
    with pytest.raises(DomainError):
        admissible_pair(D, r)


def test_low_dimensions_have_no_upper_bound():
    assert admissible_pair(2, 1000.0).q == pytest.approx(2.0 / (2 * (0.5 - 1e-3)))
    assert math.isfinite(admissible_pair(1, 1e6).q)
    with pytest.raises(DomainError):
        admissible_pair(0.5, 3.0)
