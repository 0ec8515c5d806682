"""Seeded random band-limited fields for experiments and tests."""
from typing import Optional

import numpy as np

from spectral.field import GridSpec, RANK_SHAPES, SpectralField
from spectral.operators import leray_project


def random_field(
    grid: GridSpec,
    rank: int = 1,
    band: int = 4,
    seed: int = 0,
    amplitude: float = 1.0,
    solenoidal: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> SpectralField:
    """
    Mean-free real field with random coefficients on modes |xi_i| <= band.

    The result is normalized to L^2 norm ``amplitude`` and, for vectors with
    ``solenoidal=True``, Leray-projected first.
    """
    rng = rng or np.random.default_rng(seed)
    shape = RANK_SHAPES[rank] + grid.spectral_shape
    n = grid.n
    k = np.abs(np.fft.fftfreq(n, 1.0 / n))
    kz = np.abs(np.fft.rfftfreq(n, 1.0 / n))
    # True frequencies, so Nyquist modes stay out of the band
    inside = (k.reshape(n, 1, 1) <= band) & (k.reshape(1, n, 1) <= band) & (kz.reshape(1, 1, -1) <= band)
    coeffs = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * inside
    coeffs[..., 0, 0, 0] = 0.0
    # Round trip through the grid restores Hermitian symmetry on the kz = 0 plane
    f = SpectralField.from_physical(SpectralField(coeffs, grid, rank).physical(), grid, rank)
    if solenoidal and rank == 1:
        f = leray_project(f)
    norm = float(np.sqrt(f.squared_l2()))
    f = f * (amplitude / norm) if norm > 0 else f
    return f.with_coeffs(f.coeffs, mean_free=True, divergence_free=solenoidal and rank == 1)
