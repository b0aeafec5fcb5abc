"""
Tests for canonical ranks, the homogeneous dimension and the principal drift.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from drift_strichartz.core.gramian import OperatorSpec, log_volume
from drift_strichartz.core.structure import (
    analyze_structure,
    canonical_layout_check,
    canonical_ranks,
    dilate_matrix,
    dilation_matrix,
    dilation_weights,
    homogeneous_dimension,
    shifted_drift,
)
from drift_strichartz.errors import DimensionError
from drift_strichartz.gallery import fixture


@pytest.mark.parametrize("name, params, ranks, D", [
    ("ex-1.1", {}, [2, 1], 5),
    ("kolmogorov", {"m": 1}, [1, 1], 4),
    ("kolmogorov", {"m": 2}, [2, 2], 8),
    ("anomalous-7.4", {"k": 2}, [2, 2], 8),
    ("anomalous-7.4", {"k": 3}, [3, 1], 6),
    ("rotation-7.2", {}, [1, 1], 4),
    ("smoluchowski-kramers", {}, [1, 1], 4),
    ("free", {"n": 3}, [3], 3),
])
def test_ranks_and_dimension(name, params, ranks, D):
    spec = fixture(name, **params).spec
    assert canonical_ranks(spec) == ranks
    assert homogeneous_dimension(ranks) == D


@pytest.mark.parametrize("n", [2, 3, 4])
def test_fan_dimension_table(n):
    for k in range(1, n + 1):
        report = analyze_structure(fixture("fan", n=n, k=k).spec)
        assert report.ranks == [k] + [1] * (n - k)
        assert report.D == n + (n - k + 1) * (n - k)


def test_dilation_weights():
    assert dilation_weights([2, 1]) == [1, 1, 3]
    assert dilation_weights([1, 1, 1]) == [1, 3, 5]
    assert_allclose(dilation_matrix([1, 1], 2.0), np.diag([2.0, 8.0]))


def test_ex_1_1_principal_part():
    spec = fixture("ex-1.1").spec
    B_bar, invariant = shifted_drift(spec, [2, 1])
    assert not invariant
    assert_allclose(B_bar, [[0, 0, 0], [0, 0, 0], [0, 1, 0]])


@pytest.mark.parametrize("name, params", [
    ("kolmogorov", {"m": 2}), ("fan", {"n": 3, "k": 1}), ("ex-1.1", {}), ("anomalous-7.4", {"k": 2}),
])
@pytest.mark.parametrize("lam", [0.5, 2.0, 3.0])
def test_principal_drift_scales_under_dilation(name, params, lam):
    report = analyze_structure(fixture(name, **params).spec)
    assert_allclose(dilate_matrix(report.B_bar, report.ranks, lam), lam ** 2 * report.B_bar, atol=1e-12)


@pytest.mark.parametrize("name, params", [("kolmogorov", {"m": 1}), ("fan", {"n": 3, "k": 1}), ("ex-1.1", {})])
def test_principal_volume_is_homogeneous(name, params):
    spec = fixture(name, **params).spec
    report = analyze_structure(spec)
    principal = spec.with_drift(report.B_bar)
    for lam in (0.5, 2.0):
        for t in (0.1, 1.0):
            lhs = log_volume(principal, lam ** 2 * t) - log_volume(principal, t)
            assert lhs == pytest.approx(2 * report.D * np.log(lam), rel=1e-9, abs=1e-9)


def test_dilation_invariance_flag():
    assert analyze_structure(fixture("kolmogorov").spec).is_dilation_invariant
    assert analyze_structure(fixture("dym-3").spec).is_dilation_invariant
    assert not analyze_structure(fixture("rotation-7.2").spec).is_dilation_invariant
    assert not analyze_structure(fixture("fan", n=3, k=2).spec).is_dilation_invariant


def test_dilate_matrix_checks_shape():
    with pytest.raises(DimensionError):
        dilate_matrix(np.eye(3), [1, 1], 2.0)
    with pytest.raises(DimensionError):
        shifted_drift(fixture("kolmogorov").spec, [1, 2])


def test_non_canonical_layout_is_reported_not_rejected():
    spec = OperatorSpec(Q=np.diag([0.0, 1.0]), B=[[0.0, 1.0], [0.0, 0.0]], label="swapped")
    report = analyze_structure(spec)
    assert report.ranks == [1, 1]
    assert any("outside its leading" in w for w in report.layout_warnings)
    assert canonical_layout_check(fixture("kolmogorov").spec, [1, 1]) == []


def test_report_to_dict():
    data = analyze_structure(fixture("ex-1.1").spec).to_dict()
    assert data["ranks"] == [2, 1]
    assert data["D"] == 5
    assert data["dilation_weights"] == [1, 1, 3]
    assert data["is_dilation_invariant"] is False
