"""
Fourier-multiplier operators, norms and pointwise products on T^3.

Every operator is a pure function returning a new field. Multipliers use
the grid wavenumbers with Nyquist modes zeroed, so odd and even multipliers
act consistently on the stored half spectrum.

Products are collocated by default: the grid values are multiplied point by
point, so pointwise algebra (tube supports, the cancellation of w_p ⊗ w_p
against the stress) holds exactly on the grid, at the price of aliasing
above N/2. ``truncate=True`` applies the two-thirds rule to the result;
products of factors band-limited below N/6 are exact either way.
"""
import logging
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.ndimage import convolve1d

from errors import InvalidParameterError, PreconditionViolation, ResolutionError
from spectral.field import GridSpec, ModelParams, SpectralField

logger = logging.getLogger(__name__)

DIFFERENTIAL_OPS = ("grad", "div", "curl", "laplacian")

# Fourth-order one-sided stencils for the first two and last two time samples
_FORWARD_0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_FORWARD_1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


# =============================================================================
# Norms
# =============================================================================

def _pointwise_magnitude(f: SpectralField) -> np.ndarray:
    """|f| per grid point: absolute value, Euclidean or Frobenius norm."""
    values = f.physical()
    if f.rank == 0:
        return np.abs(values)
    component_axes = (-5, -4) if f.rank == 2 else (-4,)
    return np.sqrt(np.sum(values ** 2, axis=component_axes))


def _lp_from_magnitude(magnitude: np.ndarray, p: float) -> np.ndarray:
    volume = (2.0 * np.pi) ** 3
    if np.isinf(p):
        return np.max(magnitude, axis=(-3, -2, -1))
    return (volume * np.mean(magnitude ** p, axis=(-3, -2, -1))) ** (1.0 / p)


def lp_norm(f: SpectralField, p: float, at_time: Optional[int] = None) -> float:
    """
    L^p(T^3) norm by grid quadrature.

    Args:
        f: Field of any rank (vectors and tensors use the pointwise
           Euclidean / Frobenius magnitude)
        p: Exponent in [1, inf]
        at_time: Time sample index; when omitted a time-sampled field returns
                 the supremum over samples (the C_t L^p norm)

    Returns:
        The norm as a float
    """
    if p < 1:
        raise InvalidParameterError(f"L^p exponent must be >= 1, got {p}")
    if at_time is not None:
        f = f.at(at_time)
    values = _lp_from_magnitude(_pointwise_magnitude(f), p)
    return float(np.max(values))


def lp_norm_series(f: SpectralField, p: float) -> np.ndarray:
    """Spatial L^p norm at every time sample."""
    if p < 1:
        raise InvalidParameterError(f"L^p exponent must be >= 1, got {p}")
    return np.atleast_1d(_lp_from_magnitude(_pointwise_magnitude(f), p))


def spacetime_norm(f: SpectralField, r: float, p: float) -> float:
    """L^r_t L^p_x norm of a time-sampled field (trapezoidal rule in time)."""
    if r < 1:
        raise InvalidParameterError(f"Time exponent must be >= 1, got {r}")
    series = lp_norm_series(f, p)
    if not f.time_sampled or len(series) == 1:
        return float(series[0])
    if np.isinf(r):
        return float(np.max(series))
    return float(trapezoid(series ** r, f.times) ** (1.0 / r))


def sobolev_norm(f: SpectralField, s: float, homogeneous: bool = False) -> float:
    """H^s (or homogeneous H^s) norm by Parseval; sup over time samples."""
    k2 = f.grid.wavenumber_squared()
    weight = k2 ** s if homogeneous else (1.0 + k2) ** s
    if homogeneous:
        weight = np.where(k2 == 0, 0.0, weight)
    weighted = f.with_coeffs(f.coeffs * np.sqrt(weight))
    return float(np.sqrt(np.max(weighted.squared_l2())))


def relative_residual(residual: SpectralField, reference: SpectralField) -> float:
    """||residual||_2 / ||reference||_2 over all samples (absolute when the reference vanishes)."""
    num = float(np.sqrt(np.sum(residual.squared_l2())))
    den = float(np.sqrt(np.sum(reference.squared_l2())))
    return num / den if den > 0 else num


# =============================================================================
# Differential operators and multipliers
# =============================================================================

def _ik(grid: GridSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    k1, k2, k3 = grid.wavenumbers()
    return (1j * k1, 1j * k2, 1j * k3)


def differentiate(f: SpectralField, op: str) -> SpectralField:
    """
    Exact Fourier-multiplier derivative.

    ``grad`` maps scalars to vectors and vectors to tensors with entries
    d_j v_i; ``div`` maps vectors to scalars and tensors to vectors
    (row-wise); ``curl`` acts on vectors; ``laplacian`` on any rank.
    """
    if op not in DIFFERENTIAL_OPS:
        raise InvalidParameterError(f"Unknown differential operator: {op}")
    ik = _ik(f.grid)
    c = f.coeffs

    if op == "laplacian":
        return f.with_coeffs(-f.grid.wavenumber_squared() * c, mean_free=True,
                             divergence_free=f.divergence_free)

    if op == "grad":
        if f.rank == 2:
            raise InvalidParameterError("Gradient of a rank-2 field is not supported")
        out = np.stack([ik[j] * c for j in range(3)], axis=-4)
        return f.with_coeffs(out, rank=f.rank + 1, mean_free=True)

    if op == "div":
        if f.rank == 0:
            raise InvalidParameterError("Divergence needs a vector or tensor field")
        if f.rank == 1:
            out = sum(ik[j] * c[..., j, :, :, :] for j in range(3))
            return f.with_coeffs(out, rank=0, mean_free=True)
        out = sum(ik[j] * c[..., j, :, :, :] for j in range(3))
        return f.with_coeffs(out, rank=1, mean_free=True)

    if f.rank != 1:
        raise InvalidParameterError("Curl needs a vector field")
    v1, v2, v3 = c[..., 0, :, :, :], c[..., 1, :, :, :], c[..., 2, :, :, :]
    out = np.stack([
        ik[1] * v3 - ik[2] * v2,
        ik[2] * v1 - ik[0] * v3,
        ik[0] * v2 - ik[1] * v1,
    ], axis=-4)
    return f.with_coeffs(out, mean_free=True, divergence_free=True)


def fractional_laplacian(f: SpectralField, alpha: float, nu: float = 1.0) -> SpectralField:
    """nu (-Delta)^alpha: coefficient at xi multiplied by nu |xi|^{2 alpha}."""
    if not 1.0 <= alpha < 2.0:
        raise InvalidParameterError(f"Dissipation exponent must lie in [1, 2), got {alpha}")
    symbol = nu * f.grid.wavenumber_squared() ** alpha
    return f.with_coeffs(f.coeffs * symbol, mean_free=True, divergence_free=f.divergence_free)


def fractional_gradient(f: SpectralField, s: float) -> SpectralField:
    """|grad|^s for any real s; the zero mode is sent to zero."""
    k2 = f.grid.wavenumber_squared()
    safe = np.where(k2 == 0, 1.0, k2)
    symbol = np.where(k2 == 0, 0.0, safe ** (s / 2.0))
    return f.with_coeffs(f.coeffs * symbol, mean_free=True, divergence_free=f.divergence_free)


def leray_project(v: SpectralField) -> SpectralField:
    """P_H = Id - grad Delta^{-1} div; the mean mode is preserved."""
    if v.rank != 1:
        raise InvalidParameterError("Leray projection needs a vector field")
    k = v.grid.wavenumbers()
    k2 = v.grid.wavenumber_squared()
    safe = np.where(k2 == 0, 1.0, k2)
    c = v.coeffs
    k_dot_v = sum(k[j] * c[..., j, :, :, :] for j in range(3))
    out = np.stack([c[..., i, :, :, :] - k[i] * k_dot_v / safe for i in range(3)], axis=-4)
    return v.with_coeffs(out, mean_free=v.mean_free, divergence_free=True)


def _check_mean_free(v: SpectralField, tol: float) -> None:
    mean = np.atleast_2d(v.mean())
    mean_norm = float(np.sqrt(np.sum(mean ** 2))) * (2.0 * np.pi) ** 1.5
    field_norm = float(np.sqrt(np.sum(v.squared_l2())))
    if mean_norm > tol * field_norm or (field_norm == 0 and mean_norm > 0):
        raise PreconditionViolation(
            f"Inverse divergence needs a mean-free input (mean {mean_norm:.3e}, norm {field_norm:.3e})"
        )


def inverse_divergence(v: SpectralField, mean_tol: float = 1e-12) -> SpectralField:
    """
    The operator R: mean-free vectors to symmetric trace-free tensors with div R v = v.

    In Fourier variables
    R^{kl} = -i(xi_k v^l + xi_l v^k)/|xi|^2 + (i/2)(delta_kl + xi_k xi_l/|xi|^2)(xi . v)/|xi|^2,
    and the zero mode maps to zero.
    """
    if v.rank != 1:
        raise InvalidParameterError("Inverse divergence needs a vector field")
    _check_mean_free(v, mean_tol)
    k = v.grid.wavenumbers()
    k2 = v.grid.wavenumber_squared()
    inv = np.where(k2 == 0, 0.0, 1.0 / np.where(k2 == 0, 1.0, k2))
    c = v.coeffs
    k_dot_v = sum(k[j] * c[..., j, :, :, :] for j in range(3))
    rows = []
    for a in range(3):
        row = []
        for b in range(3):
            entry = -1j * (k[a] * c[..., b, :, :, :] + k[b] * c[..., a, :, :, :]) * inv
            delta = 1.0 if a == b else 0.0
            entry = entry + 0.5j * (delta + k[a] * k[b] * inv) * k_dot_v * inv
            row.append(entry)
        rows.append(np.stack(row, axis=-4))
    out = np.stack(rows, axis=-5)
    return v.with_coeffs(out, rank=2, mean_free=True)


def freq_project(f: SpectralField, mode: str = "nonzero", kappa: float = 0.0) -> SpectralField:
    """P_{!=0} (``mode='nonzero'``) or P_{>=kappa} (``mode='geq'``)."""
    if kappa < 0:
        raise InvalidParameterError(f"Frequency threshold must be >= 0, got {kappa}")
    k2 = f.grid.wavenumber_squared()
    if mode == "nonzero":
        keep = k2 > 0
    elif mode == "geq":
        keep = k2 >= kappa ** 2
    else:
        raise InvalidParameterError(f"Unknown projection mode: {mode}")
    return f.with_coeffs(f.coeffs * keep, mean_free=bool(mode == "nonzero" or kappa > 0),
                         divergence_free=f.divergence_free)


def band_limit(f: SpectralField, cutoff: float) -> SpectralField:
    """Keep modes with |xi_i| < cutoff on every axis (Nyquist counts as N/2)."""
    n = f.grid.n
    k = np.abs(np.fft.fftfreq(n, 1.0 / n))
    kz = np.abs(np.fft.rfftfreq(n, 1.0 / n))
    keep = (k.reshape(n, 1, 1) < cutoff) & (k.reshape(1, n, 1) < cutoff) & (kz.reshape(1, 1, -1) < cutoff)
    return f.with_coeffs(f.coeffs * keep, mean_free=f.mean_free, divergence_free=f.divergence_free)


def dealias(f: SpectralField) -> SpectralField:
    """Two-thirds rule truncation."""
    return f.with_coeffs(f.coeffs * f.grid.dealias_mask(), mean_free=f.mean_free,
                         divergence_free=f.divergence_free)


def resample(f: SpectralField, n: int, time_samples: Optional[int] = None) -> SpectralField:
    """
    Zero-pad to an N-point grid and keep every k-th time sample.

    The old Nyquist modes are dropped. ``time_samples - 1`` must divide the
    number of time intervals of ``f`` so that the kept samples are exact.
    """
    old = f.grid.n
    if n < old or n % 2:
        raise InvalidParameterError(f"Cannot resample N = {old} onto N = {n}")
    coeffs = np.asarray(f.coeffs)
    grid = f.grid
    if f.time_sampled and time_samples is not None and time_samples != grid.time_samples:
        intervals = grid.time_samples - 1
        if time_samples < 2 or intervals % (time_samples - 1):
            raise InvalidParameterError(
                f"{grid.time_samples} time samples cannot be thinned to {time_samples}")
        coeffs = coeffs[::intervals // (time_samples - 1)]
        grid = grid.with_time(time_samples)
    half = old // 2
    idx = np.concatenate([np.arange(half), np.arange(1 - half, 0)])
    out = np.zeros(coeffs.shape[:-3] + (n, n, n // 2 + 1), dtype=complex)
    window = (Ellipsis,) + np.ix_(idx, idx, np.arange(half))
    out[window] = coeffs[window]
    return SpectralField(out, GridSpec(n, grid.time_samples, grid.period), f.rank, f.time_sampled,
                         f.mean_free, f.divergence_free, f.label)


def semigroup_apply(f: SpectralField, t: float, params: ModelParams) -> SpectralField:
    """exp(-t nu (-Delta)^alpha) as a multiplier."""
    if t < 0:
        raise InvalidParameterError(f"Semigroup time must be >= 0, got {t}")
    symbol = np.exp(-t * params.nu * f.grid.wavenumber_squared() ** params.alpha)
    return f.with_coeffs(f.coeffs * symbol, mean_free=f.mean_free, divergence_free=f.divergence_free)


# =============================================================================
# Mollification
# =============================================================================

def _bump(r: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r, dtype=float)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(1.0 / (r[inside] ** 2 - 1.0))
    return out


def _radial_bump_symbol(k_scaled: np.ndarray, nodes: int = 256) -> np.ndarray:
    """Fourier transform of the unit-mass radial bump on the unit ball of R^3."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * (x + 1.0)
    w = 0.5 * w
    profile = _bump(r) * r ** 2
    mass = np.sum(w * profile)
    unique, inverse = np.unique(k_scaled.ravel(), return_inverse=True)
    # np.sinc(z) = sin(pi z)/(pi z)
    table = np.array([np.sum(w * profile * np.sinc(kk * r / np.pi)) for kk in unique]) / mass
    return table[inverse].reshape(k_scaled.shape)


def mollify(f: SpectralField, length_scale: float, axes: str = "space") -> SpectralField:
    """
    Convolve with a compactly supported unit-mass bump of the given width.

    In space the convolution is the multiplier of the radial bump; in time it
    is a discrete normalized kernel on the sample grid with edge values held.
    """
    if not 0 < length_scale <= 1:
        raise InvalidParameterError(f"Mollifier scale must lie in (0, 1], got {length_scale}")
    if axes not in ("space", "time", "both"):
        raise InvalidParameterError(f"Unknown mollification axes: {axes}")
    out = f
    if axes in ("space", "both"):
        k_mag = np.sqrt(np.broadcast_to(f.grid.wavenumber_squared(), f.grid.spectral_shape))
        symbol = _radial_bump_symbol(k_mag * length_scale)
        out = out.with_coeffs(out.coeffs * symbol, mean_free=f.mean_free,
                              divergence_free=f.divergence_free)
    if axes in ("time", "both") and f.time_sampled and f.grid.time_samples > 1:
        half_width = int(np.floor(length_scale / f.grid.dt))
        if half_width >= 1:
            offsets = np.arange(-half_width, half_width + 1) / (half_width + 1.0)
            kernel = _bump(offsets)
            kernel /= kernel.sum()
            real = convolve1d(out.coeffs.real, kernel, axis=0, mode='nearest')
            imag = convolve1d(out.coeffs.imag, kernel, axis=0, mode='nearest')
            out = out.with_coeffs(real + 1j * imag, mean_free=f.mean_free,
                                  divergence_free=f.divergence_free)
        else:
            logger.debug("Time mollifier narrower than one sample; left unchanged")
    return out


# =============================================================================
# Time derivative
# =============================================================================

def time_derivative_array(values: np.ndarray, dt: float) -> np.ndarray:
    """
    Fourth-order finite difference along axis 0.

    Centered five-point stencil in the interior, one-sided five-point
    stencils at the first two and last two samples.
    """
    m = values.shape[0]
    if m < 5:
        raise ResolutionError(f"Fourth-order time derivative needs at least 5 samples, got {m}", 5)
    out = np.empty_like(values)
    out[2:-2] = (values[:-4] - 8.0 * values[1:-3] + 8.0 * values[3:-1] - values[4:]) / (12.0 * dt)
    head = values[:5]
    tail = values[-5:][::-1]
    out[0] = np.tensordot(_FORWARD_0, head, axes=(0, 0)) / dt
    out[1] = np.tensordot(_FORWARD_1, head, axes=(0, 0)) / dt
    out[-1] = -np.tensordot(_FORWARD_0, tail, axes=(0, 0)) / dt
    out[-2] = -np.tensordot(_FORWARD_1, tail, axes=(0, 0)) / dt
    return out


def time_derivative(f: SpectralField) -> SpectralField:
    """d/dt of a time-sampled field by fourth-order finite differences."""
    if not f.time_sampled:
        raise InvalidParameterError("Time derivative needs a time-sampled field")
    out = time_derivative_array(np.asarray(f.coeffs), f.grid.dt)
    return f.with_coeffs(out, mean_free=f.mean_free, divergence_free=f.divergence_free)


# =============================================================================
# Pointwise products
# =============================================================================

def _expand_scalar(values: np.ndarray, timed: bool, rank: int) -> np.ndarray:
    """Insert component axes after the optional time axis of a scalar grid array."""
    if rank == 0:
        return values
    lead = values.shape[:-3]
    return values.reshape(lead + (1,) * rank + values.shape[-3:])


def _align(a: SpectralField, b: SpectralField) -> Tuple[np.ndarray, np.ndarray, GridSpec, bool]:
    if a.grid.n != b.grid.n:
        raise InvalidParameterError("Fields live on different grids")
    pa, pb = a.physical(), b.physical()
    timed = a.time_sampled or b.time_sampled
    grid = a.grid if a.time_sampled else b.grid
    if timed and not a.time_sampled:
        pa = pa[np.newaxis]
    if timed and not b.time_sampled:
        pb = pb[np.newaxis]
    return pa, pb, grid, timed


def _finish(values: np.ndarray, grid: GridSpec, rank: int, timed: bool, truncate: bool) -> SpectralField:
    if timed and values.shape[0] != grid.time_samples:
        values = np.broadcast_to(values, (grid.time_samples,) + values.shape[1:])
    out = SpectralField.from_physical(values, grid, rank, timed)
    return dealias(out) if truncate else out


def multiply(a: SpectralField, f: SpectralField, truncate: bool = False) -> SpectralField:
    """Pointwise product of a scalar field with a field of any rank."""
    if a.rank != 0:
        raise InvalidParameterError("The first factor of multiply must be scalar")
    pa, pf, grid, timed = _align(a, f)
    return _finish(_expand_scalar(pa, timed, f.rank) * pf, grid, f.rank, timed, truncate)


def multiply_array(values: np.ndarray, f: SpectralField) -> SpectralField:
    """Pointwise product with scalar grid values of shape ``([M,] N, N, N)``."""
    if values.ndim == 4 and not f.time_sampled:
        raise InvalidParameterError("Time-sampled values need a time-sampled field")
    if f.time_sampled and values.ndim == 3:
        values = values[np.newaxis]
    product = _expand_scalar(values, f.time_sampled, f.rank) * f.physical()
    return _finish(product, f.grid, f.rank, f.time_sampled, False)


def tensor_product(u: SpectralField, v: SpectralField, truncate: bool = False) -> SpectralField:
    """(u ⊗ v)_{ij} = u_i v_j."""
    if u.rank != 1 or v.rank != 1:
        raise InvalidParameterError("Tensor product needs two vector fields")
    pu, pv, grid, timed = _align(u, v)
    values = pu[..., :, np.newaxis, :, :, :] * pv[..., np.newaxis, :, :, :, :]
    return _finish(values, grid, 2, timed, truncate)


def traceless(tensor: SpectralField) -> SpectralField:
    """Remove one third of the trace times the identity."""
    if tensor.rank != 2:
        raise InvalidParameterError("Trace-free part needs a rank-2 field")
    c = np.array(tensor.coeffs)
    trace = c[..., 0, 0, :, :, :] + c[..., 1, 1, :, :, :] + c[..., 2, 2, :, :, :]
    for i in range(3):
        c[..., i, i, :, :, :] -= trace / 3.0
    return tensor.with_coeffs(c)


def traceless_product(u: SpectralField, v: SpectralField, truncate: bool = False) -> SpectralField:
    """u ⊗̊ v = u ⊗ v - (u . v) Id / 3."""
    return traceless(tensor_product(u, v, truncate))


def trace(tensor: SpectralField) -> SpectralField:
    c = tensor.coeffs
    return tensor.with_coeffs(c[..., 0, 0, :, :, :] + c[..., 1, 1, :, :, :] + c[..., 2, 2, :, :, :], rank=0)


def dot(u: SpectralField, v: SpectralField) -> SpectralField:
    if u.rank != 1 or v.rank != 1:
        raise InvalidParameterError("Dot product needs two vector fields")
    pu, pv, grid, timed = _align(u, v)
    return _finish(np.sum(pu * pv, axis=-4), grid, 0, timed, False)


def cross(u: SpectralField, v: SpectralField, truncate: bool = False) -> SpectralField:
    if u.rank != 1 or v.rank != 1:
        raise InvalidParameterError("Cross product needs two vector fields")
    pu, pv, grid, timed = _align(u, v)
    return _finish(np.cross(pu, pv, axis=-4), grid, 1, timed, truncate)


def apply_pointwise(f: SpectralField, func: Callable[[np.ndarray], np.ndarray]) -> SpectralField:
    """Apply a function to the grid values of a scalar field."""
    return SpectralField.from_physical(func(f.physical()), f.grid, f.rank, f.time_sampled)


def constant_tensor(matrix: Union[np.ndarray, list], f: SpectralField) -> SpectralField:
    """Scalar field f times a constant 3x3 matrix."""
    matrix = np.asarray(matrix, dtype=float).reshape(3, 3)
    c = f.coeffs
    lead = c.shape[:-3]
    out = matrix.reshape((1,) * len(lead) + (3, 3, 1, 1, 1)) * c.reshape(lead + (1, 1) + c.shape[-3:])
    return f.with_coeffs(out, rank=2)


def constant_vector(vector: Union[np.ndarray, list], f: SpectralField) -> SpectralField:
    """Scalar field f times a constant vector."""
    vector = np.asarray(vector, dtype=float).reshape(3)
    c = f.coeffs
    lead = c.shape[:-3]
    out = vector.reshape((1,) * len(lead) + (3, 1, 1, 1)) * c.reshape(lead + (1,) + c.shape[-3:])
    return f.with_coeffs(out, rank=1)
