"""
Tests for the Gramian, the volume function and condition (H).
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from drift_strichartz.core.gramian import (
    OperatorSpec,
    check_hoermander,
    conjugated_gramian,
    gramian_at,
    gramian_limit,
    gramian_matrix,
    gramian_semigroup_defect,
    gramian_series,
    log_volume,
    volume,
)
from drift_strichartz.core.linalg import expm
from drift_strichartz.errors import DimensionError, DomainError, HoermanderError
from drift_strichartz.gallery import fixture, kolmogorov_gramian

KOLMOGOROV = OperatorSpec(Q=np.diag([1.0, 0.0]), B=[[0.0, 0.0], [1.0, 0.0]], label="kolmogorov")


@pytest.mark.parametrize("method", ["augmented-exponential", "adaptive-quadrature"])
@pytest.mark.parametrize("t", [1e-3, 0.5, 1.0, 7.0])
def test_kolmogorov_closed_form(method, t):
    G = gramian_matrix(KOLMOGOROV.Q, KOLMOGOROV.B, t, method)
    assert_allclose(G, kolmogorov_gramian(t), rtol=1e-10)


def test_kolmogorov_volume_at_one():
    assert volume(KOLMOGOROV, 1.0) == pytest.approx(1.0 / 12.0, rel=1e-10)


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_conformal_volume(t):
    spec = OperatorSpec(Q=np.eye(2), B=-np.eye(2))
    assert volume(spec, t) == pytest.approx((-math.expm1(-2 * t) / 2) ** 2, rel=1e-12)


def test_free_volume_is_power():
    spec = OperatorSpec(Q=np.eye(2), B=np.zeros((2, 2)))
    assert volume(spec, 2.0) == pytest.approx(4.0, rel=1e-12)


def test_log_volume_survives_overflow():
    spec = OperatorSpec(Q=np.eye(2), B=3.0 * np.eye(2))
    sample = gramian_at(spec, 70.0)
    assert sample.V == float("inf")
    assert sample.logdet == pytest.approx(840.0 - math.log(36.0), rel=1e-12)
    assert log_volume(spec, 70.0) == sample.logdet


def test_gramian_rejects_non_positive_time():
    with pytest.raises(DomainError):
        gramian_matrix(KOLMOGOROV.Q, KOLMOGOROV.B, 0.0)
    with pytest.raises(DomainError):
        gramian_matrix(KOLMOGOROV.Q, KOLMOGOROV.B, -1.0)
    with pytest.raises(DomainError):
        gramian_matrix(KOLMOGOROV.Q, KOLMOGOROV.B, 1.0, "midpoint")


def test_spec_validation():
    with pytest.raises(DomainError):
        OperatorSpec(Q=[[1.0, 1.0], [0.0, 1.0]], B=np.zeros((2, 2)))
    with pytest.raises(DomainError):
        OperatorSpec(Q=np.diag([1.0, -1.0]), B=np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        OperatorSpec(Q=np.eye(2), B=np.zeros((3, 3)))


def test_hoermander_failure():
    holds, diagnostic = check_hoermander(np.diag([1.0, 0.0]), np.zeros((2, 2)))
    assert not holds
    assert diagnostic["profile"] == [1]
    assert diagnostic["gramian_min_eig"] < 1e-9
    with pytest.raises(HoermanderError, match=r"\(H\) fails") as info:
        OperatorSpec(Q=np.diag([1.0, 0.0]), B=np.zeros((2, 2)))
    assert info.value.exit_code == 2
    assert info.value.profile == [1]


def test_hoermander_holds_for_kolmogorov():
    holds, diagnostic = check_hoermander(KOLMOGOROV.Q, KOLMOGOROV.B)
    assert holds
    assert diagnostic["profile"] == [1, 2]


@pytest.mark.parametrize("name", ["ex-1.1", "smoluchowski-kramers", "anomalous-7.4", "rotation-7.2"])
@pytest.mark.parametrize("t, s", [(0.3, 0.7), (1.0, 2.0)])
def test_semigroup_identity(name, t, s):
    assert gramian_semigroup_defect(fixture(name).spec, t, s) <= 1e-8


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_conjugation_identity(t):
    spec = fixture("ex-1.1").spec
    E = expm(spec.B, t)
    lhs = gramian_matrix(spec.Q, spec.B, t)
    assert_allclose(E @ conjugated_gramian(spec, t) @ E.T, lhs, rtol=1e-8, atol=1e-12 * np.abs(lhs).max())


def test_series_keeps_order():
    ts = [3.0, 0.5, 1.0]
    samples = gramian_series(KOLMOGOROV, ts, workers=2)
    assert [s.t for s in samples] == ts
    assert_allclose([s.V for s in samples], [t ** 4 / 12 for t in ts], rtol=1e-10)


def test_stationary_limits():
    assert_allclose(gramian_limit(fixture("conformal", n=2).spec), np.eye(2) / 2, atol=1e-14)
    assert_allclose(gramian_limit(fixture("smoluchowski-kramers").spec), np.diag([0.25, 0.125]), atol=1e-14)
    assert gramian_limit(fixture("free-2d").spec) is None
    assert gramian_limit(KOLMOGOROV) is None


def test_test_mode_cross_checks_methods(settings_with):
    settings_with(test_mode=True)
    sample = gramian_at(fixture("ex-1.1").spec, 2.0)
    assert sample.V == pytest.approx(math.expm1(4.0) / 2 * 16 / 12, rel=1e-10)


@pytest.mark.slow
def test_methods_agree_on_random_specs():
    rng = np.random.default_rng(20240611)
    for _ in range(100):
        n = int(rng.integers(1, 4))
        A = rng.standard_normal((n, n))
        Q = A @ A.T + 0.1 * np.eye(n)
        B = rng.standard_normal((n, n))
        t = float(rng.uniform(0.1, 2.0))
        G = gramian_matrix(Q, B, t, "augmented-exponential")
        H = gramian_matrix(Q, B, t, "adaptive-quadrature")
        assert np.linalg.norm(G - H) <= 1e-8 * np.linalg.norm(H)
