"""
The propagator group U(t) of u_t = i tr(Q D^2 u) + <Bx, Du> on lattice data.

Three interchangeable methods:
  sheared-spectral   u_hat(xi) = e^{-t trB} e^{-4 pi^2 i <Q(t) eta, eta>} phi_hat(eta), eta = e^{-tB^T} xi
  chirp-interp       chirp on the lattice spectrum, then a trigonometric interpolant at e^{tB} x
  kernel-quadrature  Riemann sum of the explicit oscillatory kernel (tiny grids only)

Negative times use the mirrored formulas directly. Every call runs an
aliasing guard first, so truncation of R^n to the periodic box stays
measurable rather than silent.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import scipy.linalg as la

from drift_strichartz.config import PROPAGATION_METHODS, get_settings
from drift_strichartz.core.gramian import OperatorSpec, conjugated_gramian, gramian_matrix
from drift_strichartz.core.linalg import expm
from drift_strichartz.errors import (
    DimensionError,
    DomainError,
    DriftStrichartzError,
    GeometryError,
    ResolutionError,
)
from drift_strichartz.propagation.grid import (
    GridSpec,
    WaveField,
    frequency_half_widths,
    from_spectrum,
    support_half_widths,
    to_spectrum,
)
from drift_strichartz.propagation.nudft import separable_transform

logger = logging.getLogger(__name__)

KERNEL_QUADRATURE_MAX_POINTS = 4096


def _quadratic_form(points: np.ndarray, M: np.ndarray) -> np.ndarray:
    return np.einsum("ki,ij,kj->k", points, M, points)


def _is_identity(E: np.ndarray) -> bool:
    return bool(np.array_equal(E, np.eye(E.shape[0])))


def guard_report(spec: OperatorSpec, phi: WaveField, t: float,
                 method: Optional[str] = None) -> Dict[str, Any]:
    """
    Measure everything the aliasing guard looks at for one propagation.

    Args:
        spec: Operator specification
        phi: Initial field
        t: Propagation time
        method: Propagation method (settings.method)

    Returns:
        Dictionary of per-axis measurements and limits plus 'violations', a
        list of (kind, message, details) for each failed condition
    """
    settings = get_settings()
    method = method or settings.method
    grid = phi.grid
    L = grid.box
    violations: List[Dict[str, Any]] = []
    report: Dict[str, Any] = {"t": t, "method": method, "violations": violations}
    if t == 0:
        return report

    # Step 1: support of the data inside the guard band
    a = support_half_widths(phi, settings.support_mass)
    inner = L * (1.0 - 2.0 * grid.margin)
    report["support"] = a.tolist()
    for i in np.flatnonzero(a > inner):
        violations.append({"kind": "geometry", "axis": int(i),
                           "message": f"data support {a[i]:.4g} exceeds guard band {inner[i]:.4g} on axis {i}"})

    # Step 2: image of the support box under the inverse flow
    E_back = expm(spec.B, -t)
    extents = np.abs(E_back) @ a
    report["extents"] = extents.tolist()
    for i in np.flatnonzero(extents > L):
        corner = (E_back @ (np.sign(E_back[i]) * a)).tolist()
        violations.append({"kind": "geometry", "axis": int(i), "corner": corner,
                           "message": f"support corner {np.round(corner, 4).tolist()} escapes the box "
                                      f"(|x_{i}| = {extents[i]:.4g} > {L[i]:.4g}) at t={t:.4g}"})

    # Step 3: output frequencies inside the Nyquist band; measured half-widths sit on
    # lattice frequencies, so the band carries half a frequency cell of slack
    rho = frequency_half_widths(phi, settings.support_mass)
    rho_out = np.abs(expm(spec.B.T, t)) @ rho
    cell = 0.25 / L
    band = grid.nyquist + cell
    report["frequency"] = rho.tolist()
    report["frequency_out"] = rho_out.tolist()
    for i in np.flatnonzero(rho_out > band):
        violations.append({"kind": "resolution", "axis": int(i), "measured": float(rho_out[i]),
                           "limit": float(band[i]),
                           "message": f"output frequency {rho_out[i]:.4g} exceeds Nyquist "
                                      f"{grid.nyquist[i]:.4g} on axis {i}"})

    # Step 4: chirp phase sampling, as the displacement 4 pi |C| rho_out it induces
    tau = abs(t)
    G = gramian_matrix(spec.Q, spec.B, tau)
    C = E_back @ G @ E_back.T if t > 0 else G
    shift = 4.0 * np.pi * (np.abs(C) @ rho_out)
    report["displacement"] = shift.tolist()
    for i in np.flatnonzero(shift > L / 2.0):
        violations.append({"kind": "resolution", "axis": int(i), "measured": float(shift[i]),
                           "limit": float(L[i] / 2.0),
                           "message": f"chirp phase varies by more than pi/2 per cell on axis {i} "
                                      f"(displacement {shift[i]:.4g} > {L[i] / 2.0:.4g})"})

    # Step 5: method-specific wrap conditions
    if method == "sheared-spectral":
        eta_max = np.abs(expm(spec.B.T, -t)) @ grid.nyquist
        limit = 2.0 * grid.nyquist - rho + cell
        report["eta_max"] = eta_max.tolist()
        for i in np.flatnonzero(eta_max > limit):
            violations.append({"kind": "resolution", "axis": int(i), "measured": float(eta_max[i]),
                               "limit": float(limit[i]),
                               "message": f"sheared frequencies {eta_max[i]:.4g} reach the periodic image "
                                          f"of the spectrum on axis {i}"})
    elif method == "chirp-interp":
        E = expm(spec.B, t)
        if not _is_identity(E):
            reach = np.abs(E) @ L
            spread = a
            if t > 0:
                # the chirped intermediate v spreads before it is resampled
                moved = 4.0 * np.pi * (np.abs(G) @ rho)
                for i in np.flatnonzero(moved > L / 2.0):
                    violations.append({"kind": "resolution", "axis": int(i), "measured": float(moved[i]),
                                       "limit": float(L[i] / 2.0),
                                       "message": f"chirped intermediate moves {moved[i]:.4g} on axis {i}, "
                                                  f"more than {L[i] / 2.0:.4g}"})
                spread = a + moved
            limit = 2.0 * L - spread
            report["interpolation_reach"] = reach.tolist()
            for i in np.flatnonzero(reach > limit):
                violations.append({"kind": "geometry", "axis": int(i),
                                   "corner": (E @ (np.sign(E[i]) * L)).tolist(),
                                   "message": f"interpolation points reach {reach[i]:.4g} on axis {i}, "
                                              f"past the periodic image at {limit[i]:.4g}"})
    return report


def check_guard(spec: OperatorSpec, phi: WaveField, t: float, method: Optional[str] = None) -> Dict[str, Any]:
    """Run guard_report and raise the first violation as GeometryError or ResolutionError."""
    report = guard_report(spec, phi, t, method)
    for v in report["violations"]:
        if v["kind"] == "geometry":
            raise GeometryError(v["message"], corner=v.get("corner"), t=t)
    for v in report["violations"]:
        raise ResolutionError(v["message"], axis=v["axis"], measured=v.get("measured"),
                              limit=v.get("limit"), t=t)
    return report


def _forward_offgrid(grid: GridSpec, samples: np.ndarray, eta: np.ndarray) -> np.ndarray:
    coords = [grid.coords(d) for d in range(grid.n)]
    values = separable_transform(samples, coords, eta, sign=-1.0)
    return grid.cell_volume * values.reshape(grid.shape)


def _interpolate(grid: GridSpec, spectrum: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Trigonometric interpolant of the field with lattice spectrum `spectrum` at arbitrary points."""
    freqs = [grid.freqs(d) for d in range(grid.n)]
    values = separable_transform(spectrum, freqs, points, sign=1.0)
    return values.reshape(grid.shape) / (grid.N ** grid.n * grid.cell_volume)


def _sheared_spectral(spec: OperatorSpec, phi: WaveField, t: float) -> np.ndarray:
    grid = phi.grid
    xi = grid.frequency_points()
    tau = abs(t)
    G = gramian_matrix(spec.Q, spec.B, tau)
    if t > 0:
        M = expm(spec.B.T, -t)
        eta = xi @ M.T
        phase = -4.0 * np.pi ** 2 * _quadratic_form(eta, G)
        amplitude = np.exp(-t * spec.trB)
    else:
        M = expm(spec.B.T, tau)
        eta = xi @ M.T
        phase = 4.0 * np.pi ** 2 * _quadratic_form(xi, G)
        amplitude = np.exp(tau * spec.trB)
    if _is_identity(M):
        phi_hat = to_spectrum(grid, phi.samples)
    else:
        phi_hat = _forward_offgrid(grid, phi.samples, eta)
    u_hat = amplitude * np.exp(1j * phase).reshape(grid.shape) * phi_hat
    return from_spectrum(grid, u_hat)


def _chirp_interp(spec: OperatorSpec, phi: WaveField, t: float) -> np.ndarray:
    grid = phi.grid
    xi = grid.frequency_points()
    x = grid.points()
    tau = abs(t)
    G = gramian_matrix(spec.Q, spec.B, tau)
    E = expm(spec.B, t)
    chirp = np.exp(-1j * np.sign(t) * 4.0 * np.pi ** 2 * _quadratic_form(xi, G)).reshape(grid.shape)
    if t > 0:
        v_hat = to_spectrum(grid, phi.samples) * chirp
        if _is_identity(E):
            return from_spectrum(grid, v_hat)
        return _interpolate(grid, v_hat, x @ E.T)
    w = phi.samples
    if not _is_identity(E):
        w = _interpolate(grid, to_spectrum(grid, phi.samples), x @ E.T)
    return from_spectrum(grid, to_spectrum(grid, w) * chirp)


def _kernel_quadrature(spec: OperatorSpec, phi: WaveField, t: float) -> np.ndarray:
    grid = phi.grid
    if grid.size > KERNEL_QUADRATURE_MAX_POINTS:
        raise DomainError(f"kernel-quadrature is limited to {KERNEL_QUADRATURE_MAX_POINTS} lattice points, "
                          f"grid has {grid.size}")
    n = spec.n
    pts = grid.points()
    tau = abs(t)
    G = gramian_matrix(spec.Q, spec.B, tau)
    G_inv = la.inv(G)
    prefactor = (4.0 * np.pi) ** (-n / 2.0) / np.sqrt(la.det(G))
    if t > 0:
        targets, sources = pts @ expm(spec.B, t).T, pts
        sign = 1.0
        prefactor = prefactor * np.exp(-1j * np.pi * n / 4.0)
    else:
        targets, sources = pts, pts @ expm(spec.B, tau).T
        sign = -1.0
        prefactor = prefactor * np.exp(1j * np.pi * n / 4.0) * np.exp(tau * spec.trB)

    weights = phi.samples.ravel() * grid.cell_volume
    out = np.empty(grid.size, dtype=np.complex128)
    for start in range(0, grid.size, 256):
        diff = targets[start:start + 256, None, :] - sources[None, :, :]
        quad = np.einsum("abi,ij,abj->ab", diff, G_inv, diff)
        out[start:start + 256] = prefactor * (np.exp(sign * 1j * quad / 4.0) @ weights)
    return out.reshape(grid.shape)


_METHODS = {
    "sheared-spectral": _sheared_spectral,
    "chirp-interp": _chirp_interp,
    "kernel-quadrature": _kernel_quadrature,
}


def propagate(spec: OperatorSpec, phi: WaveField, t: float, method: Optional[str] = None,
              guard: bool = True) -> WaveField:
    """
    Apply U(t) to a lattice field.

    Args:
        spec: Operator specification
        phi: Field at time phi.t
        t: Real propagation time (either sign)
        method: 'sheared-spectral', 'chirp-interp' or 'kernel-quadrature'
        guard: Run the aliasing guard first

    Returns:
        Field at time phi.t + t
    """
    method = method or get_settings().method
    if method not in PROPAGATION_METHODS:
        raise DomainError(f"unknown propagation method {method!r}; expected one of {PROPAGATION_METHODS}")
    if phi.grid.n != spec.n:
        raise DimensionError(f"{phi.grid.n}-D field cannot be propagated by a {spec.n}-D operator")
    t = float(t)
    if not np.isfinite(t):
        raise DomainError(f"propagation time must be finite, got {t}")
    if t == 0.0:
        return phi
    if guard:
        check_guard(spec, phi, t, method)
    logger.debug(f"Propagating '{spec.label}' by t={t:.6g} with {method}")
    samples = _METHODS[method](spec, phi, t)
    return phi.replace(samples, t=phi.t + t)


def propagate_many(spec: OperatorSpec, phi: WaveField, ts: Sequence[float], method: Optional[str] = None,
                   workers: Optional[int] = None) -> List[Union[WaveField, DriftStrichartzError]]:
    """
    Propagate one field to many times on a worker pool.

    Guard and resolution failures are returned in place of the field so
    callers can record and skip them.
    """
    workers = workers or get_settings().workers

    def run(t: float) -> Union[WaveField, DriftStrichartzError]:
        try:
            return propagate(spec, phi, t, method)
        except (GeometryError, ResolutionError) as e:
            logger.warning(f"Skipping t={t:.6g} for '{spec.label}': {str(e)}")
            return e

    if workers <= 1 or len(ts) < 2:
        return [run(t) for t in ts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, ts))


def weighted_field(spec: OperatorSpec, u: WaveField) -> WaveField:
    """e^{t trB / 2} u(t), the field whose L^2 norm U(t) preserves."""
    return u.replace(np.exp(u.t * spec.trB / 2.0) * u.samples)


def gaussian_lebesgue_norm(spec: OperatorSpec, widths: Union[float, Sequence[float]], t: float, r: float) -> float:
    """
    Closed-form ||U(t) phi||_r on R^n for the centred Gaussian phi = e^{-pi sum (x_j/s_j)^2}.

    U(t) phi has spectrum e^{-t trB} prod(s) e^{-pi <M xi, xi>} with
    M = E^T (S^2 + 4 pi i Q(t)) E, E = e^{-tB^T}, and Q(t) the signed Gramian
    (minus the Gramian of -B for t < 0). With P = Re M^{-1},
    ||U(t) phi||_r = e^{-t trB} prod(s) |det M|^{-1/2} (r^n det P)^{-1/(2r)}.

    Args:
        spec: Operator specification
        widths: Width s_j per axis (a scalar applies to every axis)
        t: Time, either sign
        r: Lebesgue exponent in [1, inf]

    Returns:
        The norm
    """
    s = np.broadcast_to(np.asarray(widths, dtype=float), (spec.n,))
    if np.any(s <= 0):
        raise DomainError(f"Gaussian widths must be positive, got {s.tolist()}")
    if not r >= 1.0:
        raise DomainError(f"Lebesgue exponent must be in [1, inf], got {r}")
    t = float(t)
    if t > 0:
        G = gramian_matrix(spec.Q, spec.B, t)
    elif t < 0:
        G = -conjugated_gramian(spec, -t)
    else:
        G = np.zeros((spec.n, spec.n))
    E = expm(spec.B.T, -t)
    M = E.T @ (np.diag(s ** 2) + 4j * np.pi * G) @ E
    _, log_det_M = np.linalg.slogdet(M)
    log_peak = -t * spec.trB + float(np.sum(np.log(s))) - 0.5 * float(log_det_M)
    if np.isinf(r):
        return float(np.exp(log_peak))
    _, log_det_P = np.linalg.slogdet(np.real(np.linalg.inv(M)))
    return float(np.exp(log_peak - (spec.n * np.log(r) + log_det_P) / (2.0 * r)))


def apply_generator(spec: OperatorSpec, u: WaveField) -> WaveField:
    """
    i tr(Q D^2 u) + <Bx, Du> by spectral differentiation.

    Args:
        spec: Operator specification
        u: Field

    Returns:
        Field of the generator applied to u (same time stamp)
    """
    grid = u.grid
    n = grid.n
    u_hat = np.fft.fftn(u.samples)
    k = grid.frequency_mesh()
    x = grid.mesh()
    result = np.zeros(grid.shape, dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            if spec.Q[i, j] != 0.0:
                second = np.fft.ifftn(-4.0 * np.pi ** 2 * k[i] * k[j] * u_hat)
                result += 1j * spec.Q[i, j] * second
    for j in range(n):
        drift = sum(spec.B[j, l] * x[l] for l in range(n))
        if np.any(drift != 0.0):
            result += drift * np.fft.ifftn(2j * np.pi * k[j] * u_hat)
    return u.replace(result)


def duhamel_solve(spec: OperatorSpec, phi: WaveField, forcing: Sequence[WaveField],
                  t_grid: Sequence[float], method: Optional[str] = None) -> List[WaveField]:
    """
    u(t_k) = U(t_k) phi + int_0^{t_k} U(t_k - s) F(s) ds with the composite trapezoid rule.

    The forcing integral is advanced step by step,
    S_{k+1} = U(dt)[S_k + dt/2 F_k] + dt/2 F_{k+1},
    which equals the trapezoid sum by the group law.

    Args:
        spec: Operator specification
        phi: Initial field
        forcing: Forcing fields sampled on t_grid
        t_grid: Increasing times starting at 0
        method: Propagation method

    Returns:
        Fields u(t_k), one per grid time
    """
    t_grid = [float(t) for t in t_grid]
    if not t_grid or t_grid[0] != 0.0:
        raise DomainError("Duhamel time grid must start at 0")
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise DomainError("Duhamel time grid must be strictly increasing")
    if len(forcing) != len(t_grid):
        raise DimensionError(f"{len(forcing)} forcing samples for {len(t_grid)} times")

    logger.info(f"Duhamel solve for '{spec.label}' on {len(t_grid)} times up to t={t_grid[-1]:.4g}")
    F = [np.asarray(f.samples) for f in forcing]
    S = np.zeros(phi.grid.shape, dtype=np.complex128)
    homogeneous = bool(np.any(phi.samples))
    solution = [phi.replace(phi.samples + S, t=0.0)]
    for k in range(len(t_grid) - 1):
        dt = t_grid[k + 1] - t_grid[k]
        carried = propagate(spec, phi.replace(S + 0.5 * dt * F[k], t=0.0), dt, method).samples
        S = carried + 0.5 * dt * F[k + 1]
        free = propagate(spec, phi.replace(phi.samples, t=0.0), t_grid[k + 1], method).samples if homogeneous else 0.0
        solution.append(phi.replace(free + S, t=t_grid[k + 1]))
    return solution
