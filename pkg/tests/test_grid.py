"""
Tests for the lattice, the lattice Fourier transform, norms and field files.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from drift_strichartz.errors import DimensionError, DomainError, ProblemFileError
from drift_strichartz.propagation.grid import (
    GridSpec,
    WaveField,
    frequency_half_widths,
    from_spectrum,
    gaussian_probe,
    lebesgue_norm,
    mixed_norm,
    read_field,
    support_half_widths,
    to_spectrum,
    write_field,
    write_field_csv,
)

GRID = GridSpec(n=1, L=8.0, N=64)


def test_grid_geometry():
    assert_allclose(GRID.h, [0.25])
    assert_allclose(GRID.nyquist, [2.0])
    assert GRID.coords(0)[0] == -8.0
    assert GRID.coords(0)[-1] == pytest.approx(8.0 - 0.25)
    assert GRID.refined().N == 128
    assert GridSpec(n=2, L=4.0, N=32).L == (4.0, 4.0)
    assert GridSpec(n=2, L=[4.0, 6.0], N=32).points().shape == (32 * 32, 2)


@pytest.mark.parametrize("kwargs", [
    {"n": 1, "L": 8.0, "N": 48},
    {"n": 4, "L": 8.0, "N": 16},
    {"n": 2, "L": [8.0, 8.0, 8.0], "N": 32},
    {"n": 1, "L": -1.0, "N": 32},
    {"n": 1, "L": 8.0, "N": 8},
    {"n": 1, "L": 8.0, "N": 32, "margin": 0.5},
])
def test_grid_validation(kwargs):
    with pytest.raises(ValidationError):
        GridSpec(**kwargs)


def test_field_shape_checks():
    with pytest.raises(DimensionError):
        WaveField(grid=GRID, samples=np.zeros(63))
    with pytest.raises(DomainError):
        WaveField(grid=GRID, samples=np.full(64, np.nan))
    field = WaveField(grid=GridSpec(n=2, L=4.0, N=16), samples=np.ones(256))
    assert field.samples.shape == (16, 16)
    assert not field.samples.flags.writeable


@pytest.mark.parametrize("sigma", [1.0, 1.5])
def test_gaussian_l2_norm(sigma):
    phi = gaussian_probe(GRID, sigma)
    assert lebesgue_norm(phi, 2) == pytest.approx(math.sqrt(sigma / math.sqrt(2)), rel=1e-10)
    assert lebesgue_norm(phi, float("inf")) == pytest.approx(1.0)


def test_gaussian_spectrum_closed_form():
    sigma = 1.5
    phi = gaussian_probe(GRID, sigma)
    xi = GRID.freqs(0)
    spectrum = to_spectrum(GRID, phi.samples)
    assert_allclose(spectrum, sigma * np.exp(-np.pi * sigma ** 2 * xi ** 2), atol=1e-12)
    assert_allclose(from_spectrum(GRID, spectrum), phi.samples, atol=1e-13)


def test_modulated_probe_moves_spectrum():
    phi = gaussian_probe(GRID, 1.5, omega=[0.5])
    spectrum = np.abs(to_spectrum(GRID, phi.samples))
    assert GRID.freqs(0)[int(np.argmax(spectrum))] == pytest.approx(0.5)


def test_half_widths_of_gaussian():
    sigma = 1.5
    phi = gaussian_probe(GRID, sigma)
    mass = 1 - 1e-6
    a = 4.89 * sigma / (2 * math.sqrt(math.pi))
    rho = 4.89 / (2 * math.sqrt(math.pi) * sigma)
    assert abs(support_half_widths(phi, mass)[0] - a) <= GRID.h[0]
    assert abs(frequency_half_widths(phi, mass)[0] - rho) <= 1 / (2 * GRID.L[0])


def test_lebesgue_norm_errors():
    phi = gaussian_probe(GRID, 1.0)
    with pytest.raises(DomainError):
        lebesgue_norm(phi, 0.5)
    with pytest.raises(DimensionError):
        lebesgue_norm(phi.samples, 2)
    assert lebesgue_norm(phi.samples, 2, GRID) == pytest.approx(lebesgue_norm(phi, 2))


def test_mixed_norm():
    ts = np.linspace(0.0, 1.0, 101)
    assert mixed_norm([(t, 1.0) for t in ts], 2, trB=0.0) == pytest.approx(1.0)
    # e^{trB t / 2} with trB = 2 gives int_0^1 e^{2t} dt under q = 2
    weighted = mixed_norm([(t, 1.0) for t in ts], 2, trB=2.0)
    assert weighted == pytest.approx(math.sqrt(math.expm1(2.0) / 2), rel=1e-4)
    assert mixed_norm([(t, 1.0) for t in ts], float("inf"), trB=-2.0) == pytest.approx(1.0)
    assert mixed_norm([(t, 1.0) for t in ts], float("inf"), trB=-2.0, weight_sign=-1) == pytest.approx(math.e)
    assert mixed_norm([], 2, trB=0.0) == 0.0


def test_mixed_norm_errors():
    with pytest.raises(DomainError):
        mixed_norm([(0.0, 1.0), (1.0, 1.0)], 2, trB=0.0, weight_sign=0)
    with pytest.raises(DomainError):
        mixed_norm([(1.0, 1.0), (0.0, 1.0)], 2, trB=0.0)


def test_field_file_round_trip(tmp_path):
    grid = GridSpec(n=2, L=[4.0, 5.0], N=16)
    phi = gaussian_probe(grid, 1.0, omega=[0.25, -0.5], t=0.3)
    path = write_field(phi, tmp_path / "phi.t+0.3.c16")
    assert (tmp_path / "phi.t+0.3.c16.meta").exists()
    back = read_field(path)
    assert back.grid == grid
    assert back.t == 0.3
    assert np.array_equal(back.samples, phi.samples)


def test_missing_sidecar(tmp_path):
    path = write_field(gaussian_probe(GRID, 1.0), tmp_path / "phi.c16")
    (tmp_path / "phi.c16.meta").unlink()
    with pytest.raises(ProblemFileError, match="sidecar"):
        read_field(path)


def test_truncated_field(tmp_path):
    path = write_field(gaussian_probe(GRID, 1.0), tmp_path / "phi.c16")
    path.write_bytes(path.read_bytes()[:160])
    with pytest.raises(ProblemFileError, match="samples"):
        read_field(path)


def test_field_csv(tmp_path):
    path = write_field_csv(gaussian_probe(GRID, 1.0), tmp_path / "phi.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "index,re,im"
    assert len(lines) == 65
    table = np.loadtxt(path, delimiter=",", skiprows=1)
    assert table[32, 1] == pytest.approx(1.0)
