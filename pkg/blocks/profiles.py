"""
Concrete profile functions for the building blocks.

All profiles come from the standard bump exp(1/(|x|^2 - 1)). Their
derivatives are generated symbolically once and compiled with
``sympy.lambdify``; normalization constants are computed by adaptive
quadrature at construction time.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict

import numpy as np
import sympy as sp
from scipy import integrate
from scipy.special import comb

from errors import InvalidParameterError

logger = logging.getLogger(__name__)

_X, _Y = sp.symbols('x y', real=True)
_BUMP_1D = sp.exp(1 / (_X ** 2 - 1))
_BUMP_2D = sp.exp(1 / (_X ** 2 + _Y ** 2 - 1))

# Points closer to the unit sphere than this are treated as outside the support;
# the bump is below exp(-10^6) there.
_SUPPORT_EDGE = 1.0 - 1e-6

# Gauss-Legendre rule for primitives of the squared bump
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(160)


@lru_cache(maxsize=None)
def _bump_derivative(order: int) -> Callable[[np.ndarray], np.ndarray]:
    expr = _BUMP_1D
    for _ in range(order):
        expr = sp.diff(expr, _X)
    return sp.lambdify(_X, expr, 'numpy')


@lru_cache(maxsize=None)
def _planar_derivatives(name: str, order: int) -> Dict[int, Callable[[np.ndarray, np.ndarray], np.ndarray]]:
    """All partial derivatives of the given order, keyed by the x-derivative count."""
    base = _BUMP_2D
    if name == "phi":
        base = -(sp.diff(_BUMP_2D, _X, 2) + sp.diff(_BUMP_2D, _Y, 2))
    out = {}
    for ix in range(order + 1):
        expr = base
        for _ in range(ix):
            expr = sp.diff(expr, _X)
        for _ in range(order - ix):
            expr = sp.diff(expr, _Y)
        out[ix] = sp.lambdify((_X, _Y), expr, 'numpy')
    return out


def bump(x: np.ndarray, derivative: int = 0) -> np.ndarray:
    """The one-dimensional bump exp(1/(x^2 - 1)) or one of its derivatives, zero for |x| >= 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = x ** 2 < _SUPPORT_EDGE
    out[inside] = _bump_derivative(derivative)(x[inside])
    return out


def _planar(name: str, y1: np.ndarray, y2: np.ndarray, order: int = 0) -> Dict[int, np.ndarray]:
    y1, y2 = np.broadcast_arrays(np.asarray(y1, dtype=float), np.asarray(y2, dtype=float))
    inside = y1 ** 2 + y2 ** 2 < _SUPPORT_EDGE
    values = {}
    for ix, func in _planar_derivatives(name, order).items():
        out = np.zeros(y1.shape)
        out[inside] = func(y1[inside], y2[inside])
        values[ix] = out
    return values


def wrap(y: np.ndarray) -> np.ndarray:
    """Reduce to the fundamental cell [-pi, pi)."""
    return np.mod(np.asarray(y, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


def smooth_step(s: np.ndarray) -> np.ndarray:
    """C-infinity ramp: 0 for s <= 0, 1 for s >= 1."""
    s = np.asarray(s, dtype=float)
    left = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    right = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return left / (left + right)


def smooth_step_rate(s: np.ndarray) -> np.ndarray:
    """Derivative of :func:`smooth_step`, zero outside (0, 1)."""
    s = np.asarray(s, dtype=float)
    inside = (s > 0) & (s < 1)
    safe = np.where(inside, s, 0.5)
    left, right = np.exp(-1.0 / safe), np.exp(-1.0 / (1.0 - safe))
    rate = left * right * (1.0 / safe ** 2 + 1.0 / (1.0 - safe) ** 2) / (left + right) ** 2
    return np.where(inside, rate, 0.0)


def chi_cutoff(z: np.ndarray) -> np.ndarray:
    """
    Amplitude cutoff: 1 for z <= 1, z for z >= 2, a smooth blend in between.

    On (1, 2) the blend is a convex combination of 1 and z, so z/2 <= chi <= 2z.
    """
    z = np.asarray(z, dtype=float)
    ramp = smooth_step(z - 1.0)
    return (1.0 - ramp) + ramp * z


@dataclass(frozen=True)
class ProfileSet:
    """
    Normalized profiles with their scaling constants.

    Attributes:
        period: Time period T
        phi_scale: Factor making (1/4 pi^2) int phi^2 = 1, with phi = -Delta Phi
        psi_scale: Factor making (1/2 pi) int psi^2 = 1, with psi the bump derivative
        g_scale: Factor making the mean of g^2 over [0, T] equal to 1
        bump_square_integral: int of the squared 1D bump (same rule as the primitive)
    """
    period: float
    phi_scale: float
    psi_scale: float
    g_scale: float
    bump_square_integral: float

    # ------------------------------------------------------------------
    # Unscaled profiles on R and R^2
    # ------------------------------------------------------------------

    def psi(self, x: np.ndarray, derivative: int = 0) -> np.ndarray:
        return self.psi_scale * bump(x, derivative + 1)

    def phi(self, y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
        return self.phi_scale * _planar("phi", y1, y2)[0]

    def Phi(self, y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
        return self.phi_scale * _planar("Phi", y1, y2)[0]

    def planar_magnitude(self, name: str, y1: np.ndarray, y2: np.ndarray, order: int) -> np.ndarray:
        """Frobenius magnitude |D^order phi| (or Phi) summed over ordered multi-indices."""
        parts = _planar(name, y1, y2, order)
        total = sum(comb(order, ix) * value ** 2 for ix, value in parts.items())
        return self.phi_scale * np.sqrt(total)

    # ------------------------------------------------------------------
    # Rescaled periodized profiles
    # ------------------------------------------------------------------

    def psi_scaled(self, y: np.ndarray, r_par: float, derivative: int = 0) -> np.ndarray:
        """psi_{r_par}(y) = r_par^{-1/2} psi(y / r_par), periodized, or its derivative."""
        return r_par ** (-0.5 - derivative) * self.psi(wrap(y) / r_par, derivative)

    def phi_scaled(self, y1: np.ndarray, y2: np.ndarray, r_perp: float) -> np.ndarray:
        return self.phi(wrap(y1) / r_perp, wrap(y2) / r_perp) / r_perp

    def Phi_scaled(self, y1: np.ndarray, y2: np.ndarray, r_perp: float) -> np.ndarray:
        return self.Phi(wrap(y1) / r_perp, wrap(y2) / r_perp) / r_perp

    # ------------------------------------------------------------------
    # Temporal profile
    # ------------------------------------------------------------------

    def g(self, t: np.ndarray, derivative: int = 0) -> np.ndarray:
        """Cutoff supported in [T/4, 3T/4] with mean square 1 over [0, T]."""
        quarter = self.period / 4.0
        t = np.asarray(t, dtype=float)
        return self.g_scale * quarter ** (-derivative) * bump((t - 2.0 * quarter) / quarter, derivative)

    def g_square_primitive(self, t: np.ndarray) -> np.ndarray:
        """G(t) = int_0^t g^2, equal to T for t >= 3T/4."""
        quarter = self.period / 4.0
        z = np.clip((np.asarray(t, dtype=float) - 2.0 * quarter) / quarter, -1.0, 1.0)
        return self.g_scale ** 2 * quarter * _bump_square_primitive(z)


def _bump_square_primitive(z: np.ndarray) -> np.ndarray:
    """int_{-1}^{z} bump^2 by a fixed Gauss-Legendre rule on [-1, z]."""
    z = np.asarray(z, dtype=float)
    half = 0.5 * (z + 1.0)
    nodes = -1.0 + half[..., None] * (_GL_NODES + 1.0)
    return half * np.sum(_GL_WEIGHTS * bump(nodes) ** 2, axis=-1)


def _quad(func: Callable[[float], float], a: float, b: float) -> float:
    value, _ = integrate.quad(func, a, b, epsabs=1e-14, epsrel=1e-13, limit=400)
    return float(value)


@lru_cache(maxsize=8)
def make_profiles(period: float = 1.0) -> ProfileSet:
    """
    Build the normalized profile set for a time period T.

    Raises:
        InvalidParameterError: T is not positive
    """
    if period <= 0:
        raise InvalidParameterError(f"Period must be positive, got {period}")

    laplacian = _planar_derivatives("phi", 0)[0]
    radial = _quad(lambda r: laplacian(r, 0.0) ** 2 * r, 0.0, _SUPPORT_EDGE ** 0.5)
    phi_scale = 2.0 * np.pi / np.sqrt(2.0 * np.pi * radial)

    first = _bump_derivative(1)
    psi_scale = np.sqrt(2.0 * np.pi / _quad(lambda x: first(x) ** 2, -_SUPPORT_EDGE ** 0.5, _SUPPORT_EDGE ** 0.5))

    square = float(_bump_square_primitive(np.array(1.0)))
    g_scale = np.sqrt(4.0 / square)

    logger.debug("Profile constants: phi %.10g, psi %.10g, g %.10g", phi_scale, psi_scale, g_scale)
    return ProfileSet(
        period=float(period),
        phi_scale=float(phi_scale),
        psi_scale=float(psi_scale),
        g_scale=float(g_scale),
        bump_square_integral=square,
    )
