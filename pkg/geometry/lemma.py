"""
Decomposition of symmetric matrices near the identity.

For a spanning direction set every symmetric S near Id is written as
S = sum_k gamma_k(S)^2 k1 ⊗ k1 with positive weights. The weights here are
the (minimum-norm) linear solve of the span system, so gamma_k^2 is linear
in S and smooth on the ball where it stays positive.
"""
import logging
from dataclasses import replace
from typing import Optional, Tuple

import numpy as np

from config import get_config
from errors import OutOfDomainError
from geometry.directions import (
    AXIS_FRAMES,
    PYTHAGOREAN_FRAMES,
    GeometrySet,
    assemble_geometry,
    sym_vec,
)

logger = logging.getLogger(__name__)


def build_lambda(seed: Optional[int] = None, samples: Optional[int] = None) -> GeometrySet:
    """
    The bundled spanning direction set (3-4-5 family, N_Lambda = 5).

    The positivity radius and M* are estimated at build time.
    """
    geom = assemble_geometry(PYTHAGOREAN_FRAMES, "pythagorean", require_span=True)
    return _with_radius(geom, seed, samples)


def build_axis_lambda(seed: Optional[int] = None, samples: Optional[int] = None) -> GeometrySet:
    """
    Axis-aligned surrogate set (N_Lambda = 1).

    Only diagonal matrices are decomposed exactly; ``spans`` is False and the
    off-diagonal remainder is reported by :func:`unspanned_part`.
    """
    geom = assemble_geometry(AXIS_FRAMES, "axis", require_span=False)
    return _with_radius(geom, seed, samples)


def _with_radius(geom: GeometrySet, seed: Optional[int], samples: Optional[int]) -> GeometrySet:
    config = get_config()
    seed = config.get("seed") if seed is None else seed
    samples = config.get("epsilon_u_samples") if samples is None else samples
    radius = estimate_epsilon_u(geom, seed=seed, samples=samples)
    geom = replace(geom, epsilon_u_raw=radius)
    m_star = estimate_m_star(geom, seed=seed)
    logger.info("Built %s geometry: |Lambda|=%d, N_Lambda=%d, eps_u=%.4g, M*=%.4g",
                geom.name, len(geom), geom.n_lambda, geom.epsilon_u, m_star)
    return replace(geom, m_star=m_star)


def _random_symmetric_directions(count: int, rng: np.random.Generator) -> np.ndarray:
    """Random symmetric matrices of unit Frobenius norm, shape (count, 3, 3)."""
    raw = rng.standard_normal((count, 3, 3))
    sym = 0.5 * (raw + np.swapaxes(raw, 1, 2))
    norms = np.sqrt(np.sum(sym ** 2, axis=(1, 2)))
    return sym / norms[:, None, None]


def weights(S: np.ndarray, geom: GeometrySet) -> np.ndarray:
    """gamma_k(S)^2 for one matrix or a stack (..., 3, 3) without domain checks."""
    return np.einsum('kj,...j->...k', geom.decomposition, sym_vec(S))


def estimate_epsilon_u(
    geom: GeometrySet,
    seed: int = 0,
    samples: int = 10000,
    iterations: int = 40,
) -> float:
    """
    Largest radius r such that all weights stay positive on sampled matrices
    Id + r E, ||E||_F = 1 (bisection; the same seeded sample set at every radius).
    """
    rng = np.random.default_rng(seed)
    directions = _random_symmetric_directions(samples, rng)
    base = np.asarray(geom.golden_weights)
    slope = weights(directions, geom)

    def admissible(radius: float) -> bool:
        return bool(np.all(base + radius * slope > 0))

    lo, hi = 0.0, 1.0
    while admissible(hi) and hi < 1e6:
        lo, hi = hi, 2.0 * hi
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            lo = mid
        else:
            hi = mid
    logger.debug("epsilon_u search for %s: %.6g", geom.name, lo)
    return lo


def estimate_m_star(geom: GeometrySet, seed: int = 0, samples: int = 256, order: int = 4) -> float:
    """
    Sampled bound on sum_k ||gamma_k||_{C^order} over the epsilon_u ball.

    Derivatives are forward difference quotients along random unit
    directions; the estimate is reported, not a proof.
    """
    rng = np.random.default_rng(seed + 1)
    radius = geom.epsilon_u
    if radius <= 0:
        return float('inf')
    centers = _random_symmetric_directions(samples, rng) * rng.uniform(0, 0.5 * radius, samples)[:, None, None]
    steer = _random_symmetric_directions(samples, rng)
    h = radius / (8.0 * order)
    eye = np.eye(3)
    steps = np.arange(order + 1)
    points = eye + centers[:, None] + steps[None, :, None, None] * h * steer[:, None]
    gamma = np.sqrt(np.maximum(weights(points, geom), 0.0))
    total = np.zeros(len(geom))
    for j in range(order + 1):
        quotient = np.abs(np.diff(gamma, n=j, axis=1)[:, 0, :]) / h ** j
        total += np.max(quotient, axis=0)
    return float(np.sum(total))


def gamma_decompose(S: np.ndarray, geom: GeometrySet, tol: Optional[float] = None) -> np.ndarray:
    """
    Weights gamma_k(S) with S = sum_k gamma_k(S)^2 k1 ⊗ k1.

    Args:
        S: Symmetric 3x3 matrix with ||S - Id||_F <= epsilon_u
        geom: Direction set
        tol: Reconstruction tolerance (config ``decomposition_tol`` by default)

    Returns:
        Array of non-negative weights, one per direction

    Raises:
        OutOfDomainError: S is outside the epsilon_u ball or a solved weight
            is negative
    """
    S = np.asarray(S, dtype=float)
    distance = float(np.linalg.norm(S - np.eye(3)))
    if distance > geom.epsilon_u:
        raise OutOfDomainError(f"||S - Id||_F = {distance:.4g} exceeds epsilon_u = {geom.epsilon_u:.4g}")
    w = weights(S, geom)
    if np.any(w < 0):
        raise OutOfDomainError(f"Negative weight {w.min():.4g} at ||S - Id||_F = {distance:.4g}")
    if geom.spans:
        tol = float(get_config().get("decomposition_tol")) if tol is None else tol
        residual = float(np.linalg.norm(S - reconstruct(w, geom)))
        if residual > tol:
            raise OutOfDomainError(f"Reconstruction residual {residual:.3e} exceeds {tol:.1e}")
    return np.sqrt(w)


def reconstruct(w: np.ndarray, geom: GeometrySet) -> np.ndarray:
    """sum_k w_k k1 ⊗ k1 for weights of shape (..., |Lambda|)."""
    rank_ones = np.stack([d.rank_one() for d in geom.directions])
    return np.einsum('...k,kij->...ij', w, rank_ones)


def unspanned_part(S: np.ndarray, geom: GeometrySet) -> np.ndarray:
    """S minus its reconstruction; zero for spanning sets."""
    S = np.asarray(S, dtype=float)
    return S - reconstruct(weights(S, geom), geom)


def decompose_pointwise(S: np.ndarray, geom: GeometrySet) -> Tuple[np.ndarray, np.ndarray]:
    """
    Weights at every point of a matrix field of shape (..., 3, 3).

    Returns:
        Tuple of (weights with shape (..., |Lambda|), index of the worst point)

    Raises:
        OutOfDomainError: Some point leaves the epsilon_u ball or produces a
            negative weight; the message carries the grid location
    """
    S = np.asarray(S, dtype=float)
    distance = np.sqrt(np.sum((S - np.eye(3)) ** 2, axis=(-2, -1)))
    worst = tuple(int(i) for i in np.unravel_index(int(np.argmax(distance)), distance.shape))
    if distance[worst] > geom.epsilon_u * (1.0 + 1e-12):
        raise OutOfDomainError(
            f"||S - Id||_F = {distance[worst]:.4g} > epsilon_u = {geom.epsilon_u:.4g} at index {worst}"
        )
    w = weights(S, geom)
    if np.any(w < 0):
        bad = tuple(int(i) for i in np.unravel_index(int(np.argmin(np.min(w, axis=-1))), w.shape[:-1]))
        raise OutOfDomainError(f"Negative weight at index {bad}")
    return w, np.asarray(worst)
