"""
Direct nonuniform discrete Fourier sums over a tensor lattice.

    out[m] = sum_j samples[j] * prod_d exp(sign * 2 pi i * coords_d[j_d] * targets[m, d])

The sum is separable in the lattice axes, so each chunk of targets is
contracted one axis at a time instead of building the full N^n x K matrix.
Chunks run on a thread pool.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from drift_strichartz.config import get_settings
from drift_strichartz.errors import DimensionError

logger = logging.getLogger(__name__)

# Cap on the complex intermediate per chunk
_CHUNK_ELEMENTS = 1 << 22


def _contract_chunk(samples: np.ndarray, coords: Sequence[np.ndarray], targets: np.ndarray,
                    sign: float) -> np.ndarray:
    n = samples.ndim
    c = targets.shape[0]
    twopi = sign * 2.0 * np.pi

    # Last axis: (prod of leading axes, N) @ (N, c)
    E = np.exp(1j * twopi * np.outer(targets[:, n - 1], coords[n - 1]))
    acc = samples.reshape(-1, samples.shape[n - 1]) @ E.T

    # Remaining axes, innermost first, diagonal in the target index
    for d in range(n - 2, -1, -1):
        E = np.exp(1j * twopi * np.outer(targets[:, d], coords[d]))
        acc = np.einsum("ajk,kj->ak", acc.reshape(-1, samples.shape[d], c), E)
    return acc.reshape(c)


def separable_transform(samples: np.ndarray, coords: Sequence[np.ndarray], targets: np.ndarray,
                        sign: float, workers: Optional[int] = None) -> np.ndarray:
    """
    Evaluate a separable exponential sum at arbitrary target points.

    Args:
        samples: Complex array on the tensor lattice, shape (N_0, ..., N_{n-1})
        coords: Per-axis 1-D lattice coordinates
        targets: (K, n) points at which to evaluate
        sign: -1 for a forward transform, +1 for synthesis
        workers: Thread pool size (settings.workers)

    Returns:
        (K,) complex values
    """
    samples = np.asarray(samples, dtype=np.complex128)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    n = samples.ndim
    if len(coords) != n or targets.shape[1] != n:
        raise DimensionError(f"{n}-D samples need {n} coordinate axes and (K, {n}) targets")
    K = targets.shape[0]
    workers = workers or get_settings().workers

    lead = max(1, samples.size // samples.shape[-1])
    chunk = max(1, _CHUNK_ELEMENTS // lead)
    chunk = min(chunk, max(1, -(-K // workers)))
    starts = list(range(0, K, chunk))
    logger.debug(f"Separable transform: {samples.size} samples -> {K} targets in {len(starts)} chunks")

    def run(start: int) -> np.ndarray:
        return _contract_chunk(samples, coords, targets[start:start + chunk], sign)

    if workers <= 1 or len(starts) == 1:
        parts: List[np.ndarray] = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    return np.concatenate(parts)
