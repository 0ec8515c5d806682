"""
Truncated Fourier fields on the torus T^3.

A field is stored as the real-to-complex transform of its grid values,
divided by N^3 so that coefficients equal Fourier coefficients. Real fields
therefore carry Hermitian symmetry by construction. Optional leading time
axis holds uniform samples on [0, T].
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import InvalidParameterError

Number = Union[int, float]

# Components per rank: scalar, vector, rank-2 tensor
RANK_SHAPES: Dict[int, Tuple[int, ...]] = {0: (), 1: (3,), 2: (3, 3)}


@dataclass(frozen=True)
class GridSpec:
    """Spatial resolution, time sampling and time period."""
    n: int
    time_samples: int = 1
    period: float = 1.0

    def __post_init__(self):
        if self.n < 4 or self.n % 2:
            raise InvalidParameterError(f"Grid resolution must be even and >= 4, got {self.n}")
        if self.time_samples < 1:
            raise InvalidParameterError(f"Time sample count must be >= 1, got {self.time_samples}")
        if self.period <= 0:
            raise InvalidParameterError(f"Period must be positive, got {self.period}")

    @property
    def dealias_cutoff(self) -> int:
        """Two-thirds rule cutoff."""
        return self.n // 3

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n

    @property
    def spectral_shape(self) -> Tuple[int, int, int]:
        return (self.n, self.n, self.n // 2 + 1)

    @property
    def physical_shape(self) -> Tuple[int, int, int]:
        return (self.n, self.n, self.n)

    def times(self) -> np.ndarray:
        """Uniform time samples on [0, T]."""
        if self.time_samples == 1:
            return np.zeros(1)
        return np.linspace(0.0, self.period, self.time_samples)

    @property
    def dt(self) -> float:
        if self.time_samples == 1:
            return 0.0
        return self.period / (self.time_samples - 1)

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Grid points x_j = 2*pi*j/N as three full 3D arrays."""
        return _coordinates(self.n)

    def wavenumbers(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable integer wavenumbers with the Nyquist modes zeroed."""
        return _wavenumbers(self.n)

    def wavenumber_squared(self) -> np.ndarray:
        return _wavenumber_squared(self.n)

    def dealias_mask(self) -> np.ndarray:
        """Boolean mask keeping modes with 3|xi_i| < N on every axis."""
        return _dealias_mask(self.n)

    def with_time(self, time_samples: int, period: Optional[float] = None) -> "GridSpec":
        return GridSpec(self.n, time_samples, self.period if period is None else period)

    def to_dict(self) -> Dict[str, Any]:
        return {'n': self.n, 'time_samples': self.time_samples, 'period': self.period}


@dataclass(frozen=True)
class ModelParams:
    """Viscosity and dissipation exponent of the hyperdissipative equation."""
    nu: float = 1.0
    alpha: float = 1.25

    def __post_init__(self):
        if self.nu <= 0:
            raise InvalidParameterError(f"Viscosity must be positive, got {self.nu}")
        if not 1.0 <= self.alpha < 2.0:
            raise InvalidParameterError(f"Dissipation exponent must lie in [1, 2), got {self.alpha}")


@lru_cache(maxsize=8)
def _coordinates(n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = 2.0 * np.pi * np.arange(n) / n
    return tuple(np.meshgrid(x, x, x, indexing='ij'))


@lru_cache(maxsize=8)
def _wavenumbers(n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    k = np.fft.fftfreq(n, 1.0 / n)
    kz = np.fft.rfftfreq(n, 1.0 / n)
    k[n // 2] = 0.0
    kz[-1] = 0.0
    return (k.reshape(n, 1, 1), k.reshape(1, n, 1), kz.reshape(1, 1, n // 2 + 1))


@lru_cache(maxsize=8)
def _wavenumber_squared(n: int) -> np.ndarray:
    k1, k2, k3 = _wavenumbers(n)
    return k1 ** 2 + k2 ** 2 + k3 ** 2


@lru_cache(maxsize=8)
def _dealias_mask(n: int) -> np.ndarray:
    k = np.abs(np.fft.fftfreq(n, 1.0 / n))
    kz = np.abs(np.fft.rfftfreq(n, 1.0 / n))
    keep = 3 * k < n
    keep_z = 3 * kz < n
    return keep.reshape(n, 1, 1) & keep.reshape(1, n, 1) & keep_z.reshape(1, 1, n // 2 + 1)


@lru_cache(maxsize=8)
def rfft_weights(n: int) -> np.ndarray:
    """Multiplicity of each stored half-spectrum mode in the full spectrum."""
    weights = np.full(n // 2 + 1, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    return weights


@dataclass(frozen=True, eq=False)
class SpectralField:
    """
    Immutable truncated Fourier representation of a real field on T^3.

    Coefficient layout is ``([M,] *component_shape, N, N, N//2+1)``.
    """
    coeffs: np.ndarray
    grid: GridSpec
    rank: int = 0
    time_sampled: bool = False
    mean_free: bool = False
    divergence_free: bool = False
    label: str = ""

    def __post_init__(self):
        if self.rank not in RANK_SHAPES:
            raise InvalidParameterError(f"Unsupported rank {self.rank}")
        expected = RANK_SHAPES[self.rank] + self.grid.spectral_shape
        if self.time_sampled:
            expected = (self.grid.time_samples,) + expected
        if tuple(self.coeffs.shape) != expected:
            raise InvalidParameterError(
                f"Coefficient shape {self.coeffs.shape} does not match expected {expected}"
            )
        coeffs = np.asarray(self.coeffs, dtype=complex)
        coeffs.setflags(write=False)
        object.__setattr__(self, 'coeffs', coeffs)

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def from_physical(
        cls,
        values: np.ndarray,
        grid: GridSpec,
        rank: int = 0,
        time_sampled: bool = False,
        **flags: Any,
    ) -> "SpectralField":
        """Transform grid values into a field."""
        values = np.asarray(values, dtype=float)
        coeffs = np.fft.rfftn(values, axes=(-3, -2, -1)) / float(grid.n) ** 3
        return cls(coeffs, grid, rank, time_sampled, **flags)

    @classmethod
    def zeros(cls, grid: GridSpec, rank: int = 0, time_sampled: bool = False) -> "SpectralField":
        shape = RANK_SHAPES[rank] + grid.spectral_shape
        if time_sampled:
            shape = (grid.time_samples,) + shape
        return cls(np.zeros(shape, dtype=complex), grid, rank, time_sampled,
                   mean_free=True, divergence_free=True)

    @classmethod
    def constant(cls, value: Union[Number, Sequence[Number]], grid: GridSpec, rank: int = 0) -> "SpectralField":
        shape = RANK_SHAPES[rank] + grid.spectral_shape
        coeffs = np.zeros(shape, dtype=complex)
        coeffs[..., 0, 0, 0] = np.asarray(value, dtype=float)
        return cls(coeffs, grid, rank)

    @classmethod
    def stack_times(cls, fields: Sequence["SpectralField"], period: Optional[float] = None) -> "SpectralField":
        """Stack per-time fields into one time-sampled field."""
        if not fields:
            raise InvalidParameterError("Cannot stack an empty list of fields")
        first = fields[0]
        grid = first.grid.with_time(len(fields), period)
        coeffs = np.stack([f.coeffs for f in fields], axis=0)
        return cls(coeffs, grid, first.rank, True,
                   mean_free=all(f.mean_free for f in fields),
                   divergence_free=all(f.divergence_free for f in fields))

    def with_coeffs(self, coeffs: np.ndarray, rank: Optional[int] = None, **flags: Any) -> "SpectralField":
        """New field sharing grid and time layout."""
        return SpectralField(
            coeffs,
            self.grid,
            self.rank if rank is None else rank,
            self.time_sampled,
            mean_free=flags.get('mean_free', False),
            divergence_free=flags.get('divergence_free', False),
            label=flags.get('label', self.label),
        )

    # ------------------------------------------------------------------
    # Views
    # ------------------------------------------------------------------

    @property
    def components(self) -> int:
        """Component count 1, 3 or 9."""
        return int(np.prod(RANK_SHAPES[self.rank], dtype=int))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times() if self.time_sampled else np.zeros(1)

    def physical(self) -> np.ndarray:
        """Grid values, shape ``([M,] *component_shape, N, N, N)``."""
        n = self.grid.n
        return np.fft.irfftn(self.coeffs * float(n) ** 3, s=(n, n, n), axes=(-3, -2, -1))

    def at(self, index: int) -> "SpectralField":
        """Snapshot at one time sample."""
        if not self.time_sampled:
            return self
        return SpectralField(self.coeffs[index], self.grid, self.rank, False,
                             self.mean_free, self.divergence_free, self.label)

    def snapshots(self) -> List["SpectralField"]:
        if not self.time_sampled:
            return [self]
        return [self.at(i) for i in range(self.grid.time_samples)]

    def component(self, *index: int) -> "SpectralField":
        """Scalar component, e.g. ``v.component(0)`` or ``R.component(0, 1)``."""
        if len(index) != self.rank:
            raise InvalidParameterError(f"Rank {self.rank} field needs {self.rank} indices")
        lead = (slice(None),) if self.time_sampled else ()
        return SpectralField(self.coeffs[lead + tuple(index)], self.grid, 0, self.time_sampled)

    def mean(self) -> np.ndarray:
        """Spatial mean (zero mode), per time sample when time-sampled."""
        return self.coeffs[..., 0, 0, 0].real.copy()

    def transpose(self) -> "SpectralField":
        if self.rank != 2:
            raise InvalidParameterError("Transpose needs a rank-2 field")
        return self.with_coeffs(np.swapaxes(self.coeffs, -5, -4))

    def modulate(self, signal: np.ndarray) -> "SpectralField":
        """Multiply each time sample by a scalar signal value."""
        signal = np.asarray(signal, dtype=float)
        if not self.time_sampled:
            raise InvalidParameterError("Modulation needs a time-sampled field")
        shape = (self.grid.time_samples,) + (1,) * (self.coeffs.ndim - 1)
        return self.with_coeffs(self.coeffs * signal.reshape(shape),
                                mean_free=self.mean_free, divergence_free=self.divergence_free)

    def broadcast_times(self, grid: GridSpec) -> "SpectralField":
        """Repeat a static field over the time samples of ``grid``."""
        if self.time_sampled:
            return self
        coeffs = np.broadcast_to(self.coeffs, (grid.time_samples,) + self.coeffs.shape)
        return SpectralField(np.array(coeffs), grid, self.rank, True,
                             self.mean_free, self.divergence_free, self.label)

    def squared_l2(self) -> np.ndarray:
        """Parseval: (2*pi)^3 times the sum of |coefficient|^2 over the full spectrum."""
        weights = rfft_weights(self.grid.n)
        total = np.sum(np.abs(self.coeffs) ** 2 * weights, axis=(-3, -2, -1))
        component_axes = tuple(range(-self.rank, 0)) if self.rank else ()
        if component_axes:
            total = np.sum(total, axis=component_axes)
        return (2.0 * np.pi) ** 3 * total

    # ------------------------------------------------------------------
    # Arithmetic
    # ------------------------------------------------------------------

    def _check_compatible(self, other: "SpectralField") -> None:
        if other.grid.n != self.grid.n or other.rank != self.rank:
            raise InvalidParameterError("Fields differ in grid or rank")

    def _lift(self, other: "SpectralField") -> Tuple[np.ndarray, np.ndarray, GridSpec, bool]:
        self._check_compatible(other)
        if self.time_sampled == other.time_sampled:
            return self.coeffs, other.coeffs, self.grid, self.time_sampled
        if self.time_sampled:
            return self.coeffs, other.coeffs[np.newaxis], self.grid, True
        return self.coeffs[np.newaxis], other.coeffs, other.grid, True

    def __add__(self, other: "SpectralField") -> "SpectralField":
        a, b, grid, timed = self._lift(other)
        return SpectralField(a + b, grid, self.rank, timed,
                             self.mean_free and other.mean_free,
                             self.divergence_free and other.divergence_free)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self + (-other)

    def __neg__(self) -> "SpectralField":
        return self.with_coeffs(-self.coeffs, mean_free=self.mean_free,
                                divergence_free=self.divergence_free)

    def __mul__(self, scalar: Number) -> "SpectralField":
        if not np.isscalar(scalar):
            return NotImplemented
        return self.with_coeffs(self.coeffs * float(scalar), mean_free=self.mean_free,
                                divergence_free=self.divergence_free)

    __rmul__ = __mul__

    def __truediv__(self, scalar: Number) -> "SpectralField":
        return self * (1.0 / float(scalar))

    def __repr__(self) -> str:
        timed = f", M={self.grid.time_samples}" if self.time_sampled else ""
        return f"SpectralField(rank={self.rank}, N={self.grid.n}{timed}, label={self.label!r})"


def sum_fields(fields: Iterable[SpectralField]) -> SpectralField:
    """Sum in the given order (deterministic reduction)."""
    total: Optional[SpectralField] = None
    for item in fields:
        total = item if total is None else total + item
    if total is None:
        raise InvalidParameterError("Cannot sum an empty collection of fields")
    return total
