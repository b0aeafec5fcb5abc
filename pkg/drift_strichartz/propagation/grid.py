"""
Periodic lattice discretization of R^n and the fields that live on it.
Includes the lattice Fourier transform, Lebesgue and mixed space-time norms,
Gaussian probes and field file I/O.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.integrate import trapezoid

from drift_strichartz.errors import DimensionError, DomainError, ProblemFileError

logger = logging.getLogger(__name__)


class GridSpec(BaseModel):
    """
    Lattice x_j = -L + j*h, h = 2L/N, on [-L, L)^n with periodic wrap.
    Frequencies xi_k = k/(2L) for k in [-N/2, N/2), stored in FFT order.
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1, le=3)
    L: Tuple[float, ...]
    N: int = Field(ge=16)
    margin: float = Field(0.25, gt=0, lt=0.5)

    @field_validator("L", mode="before")
    @classmethod
    def _broadcast_box(cls, value: Any) -> Tuple[float, ...]:
        if np.isscalar(value):
            return (float(value),)
        return tuple(float(v) for v in value)

    @field_validator("N")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError(f"N must be a power of two, got {value}")
        return value

    @model_validator(mode="after")
    def _check_box(self) -> "GridSpec":
        L = self.L
        if len(L) == 1 and self.n > 1:
            L = L * self.n
            object.__setattr__(self, "L", L)
        if len(L) != self.n:
            raise ValueError(f"L has {len(L)} entries for a {self.n}-D grid")
        if any(l <= 0 for l in L):
            raise ValueError("box half-widths must be positive")
        return self

    @property
    def box(self) -> np.ndarray:
        return np.array(self.L)

    @property
    def h(self) -> np.ndarray:
        return 2.0 * self.box / self.N

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N ** self.n

    @property
    def nyquist(self) -> np.ndarray:
        """Largest resolved frequency N/(4L) per axis."""
        return self.N / (4.0 * self.box)

    def coords(self, axis: int) -> np.ndarray:
        return -self.L[axis] + self.h[axis] * np.arange(self.N)

    def freqs(self, axis: int) -> np.ndarray:
        return np.fft.fftfreq(self.N, d=self.h[axis])

    def mesh(self) -> List[np.ndarray]:
        return np.meshgrid(*[self.coords(d) for d in range(self.n)], indexing="ij")

    def frequency_mesh(self) -> List[np.ndarray]:
        return np.meshgrid(*[self.freqs(d) for d in range(self.n)], indexing="ij")

    def points(self) -> np.ndarray:
        """All lattice points as a (N^n, n) array in row-major order."""
        return np.stack([m.ravel() for m in self.mesh()], axis=1)

    def frequency_points(self) -> np.ndarray:
        return np.stack([m.ravel() for m in self.frequency_mesh()], axis=1)

    def rescaled(self, L: Sequence[float]) -> "GridSpec":
        return GridSpec(n=self.n, L=tuple(L), N=self.N, margin=self.margin)

    def refined(self) -> "GridSpec":
        return GridSpec(n=self.n, L=self.L, N=2 * self.N, margin=self.margin)


class WaveField(BaseModel):
    """Complex samples of a field on a lattice at one time."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: GridSpec
    t: float = 0.0
    samples: np.ndarray

    @model_validator(mode="after")
    def _check_samples(self) -> "WaveField":
        samples = np.array(self.samples, dtype=np.complex128)
        if samples.size == self.grid.size and samples.shape != self.grid.shape:
            samples = samples.reshape(self.grid.shape)
        if samples.shape != self.grid.shape:
            raise DimensionError(f"samples have shape {samples.shape}, grid expects {self.grid.shape}")
        if not np.all(np.isfinite(samples)):
            raise DomainError("field samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        return self

    def replace(self, samples: np.ndarray, t: Optional[float] = None) -> "WaveField":
        return WaveField(grid=self.grid, t=self.t if t is None else t, samples=samples)


def sign_pattern(grid: GridSpec) -> np.ndarray:
    """(-1)^(k_1+...+k_n) over the lattice; shifts the transform origin to -L."""
    k = np.arange(grid.N)
    s = np.where(k % 2 == 0, 1.0, -1.0)
    out = s
    for _ in range(grid.n - 1):
        out = np.multiply.outer(out, s)
    return out


def to_spectrum(grid: GridSpec, samples: np.ndarray) -> np.ndarray:
    """Approximate phi_hat(xi_k) = int phi(x) e^{-2 pi i x.xi_k} dx on the frequency lattice (FFT order)."""
    return grid.cell_volume * sign_pattern(grid) * np.fft.fftn(samples)


def from_spectrum(grid: GridSpec, spectrum: np.ndarray) -> np.ndarray:
    """Inverse of to_spectrum."""
    return np.fft.ifftn(spectrum * sign_pattern(grid)) / grid.cell_volume


def lebesgue_norm(u: Union[WaveField, np.ndarray], r: float, grid: Optional[GridSpec] = None) -> float:
    """
    Riemann-sum L^r norm (h^n sum |u|^r)^{1/r}, or max |u| for r = inf.

    Args:
        u: Field, or raw samples together with grid
        r: Exponent >= 1 or inf
        grid: Needed only for raw samples

    Returns:
        The norm
    """
    if isinstance(u, WaveField):
        grid, samples = u.grid, u.samples
    else:
        samples = np.asarray(u)
    if r < 1:
        raise DomainError(f"Lebesgue exponent must be >= 1, got {r}")
    modulus = np.abs(samples)
    if np.isinf(r):
        return float(modulus.max(initial=0.0))
    if grid is None:
        raise DimensionError("a grid is needed to normalize raw samples")
    return float((grid.cell_volume * np.sum(modulus ** r)) ** (1.0 / r))


def mixed_norm(series: Sequence[Tuple[float, float]], q: float, trB: float, weight_sign: int = 1) -> float:
    """
    Weighted time norm (sum_k dt_k e^{s q trB t_k / 2} a_k^q)^{1/q} by the trapezoid rule.

    Args:
        series: (t_k, a_k) pairs on an increasing time grid
        q: Time exponent >= 1 or inf
        trB: Trace of the drift
        weight_sign: +1 or -1, sign of the exponential weight

    Returns:
        The weighted L^q norm in time
    """
    if weight_sign not in (1, -1):
        raise DomainError(f"weight_sign must be +1 or -1, got {weight_sign}")
    if len(series) == 0:
        return 0.0
    t = np.array([p[0] for p in series], dtype=float)
    a = np.array([p[1] for p in series], dtype=float)
    if np.any(np.diff(t) <= 0):
        raise DomainError("time grid must be strictly increasing")
    log_w = weight_sign * trB * t / 2.0
    if np.isinf(q):
        return float(np.max(np.exp(log_w) * a))
    if len(t) == 1:
        return 0.0
    values = np.exp(q * log_w) * a ** q
    return float(trapezoid(values, t) ** (1.0 / q))


def gaussian_probe(grid: GridSpec, sigma: float, center: Optional[Sequence[float]] = None,
                   omega: Optional[Sequence[float]] = None, t: float = 0.0,
                   scale: Optional[Sequence[float]] = None) -> WaveField:
    """
    e^{2 pi i omega.x} e^{-pi |S(x - c)/sigma|^2} on the lattice.

    Args:
        grid: Lattice
        sigma: Width
        center: Optional center c
        omega: Optional modulation frequency
        t: Time stamp of the field
        scale: Optional per-axis factors S (a dilation phi o delta_lambda)

    Returns:
        WaveField
    """
    if sigma <= 0:
        raise DomainError(f"probe width must be positive, got {sigma}")
    mesh = grid.mesh()
    c = np.zeros(grid.n) if center is None else np.asarray(center, dtype=float)
    s = np.ones(grid.n) if scale is None else np.asarray(scale, dtype=float)
    r2 = sum((s[d] * (mesh[d] - c[d]) / sigma) ** 2 for d in range(grid.n))
    samples = np.exp(-np.pi * r2).astype(np.complex128)
    if omega is not None:
        phase = sum(omega[d] * mesh[d] for d in range(grid.n))
        samples = samples * np.exp(2j * np.pi * phase)
    return WaveField(grid=grid, t=t, samples=samples)


def _half_width(values: np.ndarray, weights: np.ndarray, mass: float) -> float:
    order = np.argsort(np.abs(values))
    cumulative = np.cumsum(weights[order])
    total = cumulative[-1]
    if total <= 0:
        return 0.0
    idx = int(np.searchsorted(cumulative, mass * total))
    return float(np.abs(values[order][min(idx, len(values) - 1)]))


def support_half_widths(field: WaveField, mass: float) -> np.ndarray:
    """Per-axis half-widths of symmetric intervals holding `mass` of each |u|^2 marginal."""
    grid = field.grid
    density = np.abs(field.samples) ** 2
    widths = []
    for d in range(grid.n):
        others = tuple(a for a in range(grid.n) if a != d)
        marginal = density.sum(axis=others) if others else density
        widths.append(_half_width(grid.coords(d), marginal, mass))
    return np.array(widths)


def frequency_half_widths(field: WaveField, mass: float) -> np.ndarray:
    """Per-axis frequency half-widths of the |u_hat|^2 marginals."""
    grid = field.grid
    density = np.abs(np.fft.fftn(field.samples)) ** 2
    widths = []
    for d in range(grid.n):
        others = tuple(a for a in range(grid.n) if a != d)
        marginal = density.sum(axis=others) if others else density
        widths.append(_half_width(grid.freqs(d), marginal, mass))
    return np.array(widths)


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta")


def write_field(field: WaveField, path: Union[str, Path]) -> Path:
    """
    Write samples as flat little-endian complex128 plus a key=value sidecar.

    Args:
        field: Field to write
        path: Binary file path; the sidecar is path + '.meta'

    Returns:
        Path of the binary file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    field.samples.astype("<c16").ravel().tofile(path)
    grid = field.grid
    meta = {
        "n": grid.n,
        "N": grid.N,
        "L": ",".join(repr(l) for l in grid.L),
        "t": repr(float(field.t)),
        "margin": repr(grid.margin),
        "dtype": "<c16",
    }
    _meta_path(path).write_text("".join(f"{k}={v}\n" for k, v in meta.items()))
    logger.info(f"Wrote field {path} ({grid.size} samples, t={field.t})")
    return path


def read_field(path: Union[str, Path]) -> WaveField:
    """Read a field written by write_field."""
    path = Path(path)
    meta_file = _meta_path(path)
    if not meta_file.exists():
        raise ProblemFileError(f"missing sidecar {meta_file}")
    meta: Dict[str, str] = {}
    for number, line in enumerate(meta_file.read_text().splitlines(), 1):
        if not line.strip():
            continue
        if "=" not in line:
            raise ProblemFileError(f"expected key=value, got {line!r}", line=number)
        key, value = line.split("=", 1)
        meta[key.strip()] = value.strip()
    try:
        grid = GridSpec(n=int(meta["n"]), N=int(meta["N"]),
                        L=tuple(float(v) for v in meta["L"].split(",")),
                        margin=float(meta.get("margin", 0.25)))
        dtype = np.dtype(meta.get("dtype", "<c16"))
        t = float(meta.get("t", 0.0))
    except KeyError as e:
        raise ProblemFileError(f"sidecar lacks key {str(e)}", field=str(e).strip("'"))
    samples = np.fromfile(path, dtype=dtype)
    if samples.size != grid.size:
        raise ProblemFileError(f"expected {grid.size} samples, found {samples.size}")
    return WaveField(grid=grid, t=t, samples=samples.reshape(grid.shape))


def write_field_csv(field: WaveField, path: Union[str, Path]) -> Path:
    """Write a field as CSV with columns index, re, im (row-major flat index)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    flat = field.samples.ravel()
    table = np.column_stack([np.arange(flat.size), flat.real, flat.imag])
    np.savetxt(path, table, delimiter=",", header="index,re,im", comments="",
               fmt=["%d", "%.17g", "%.17g"])
    return path
