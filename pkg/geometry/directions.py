"""
Rational direction sets with orthonormal frames.

A direction carries an exact frame (k, k1, k2) with k2 = k x k1; the jet or
Mikado flow for that direction points along k1 and concentrates in the
(k, k2) plane. Frames are stored as Fractions so orthonormality is checked
without floating error.
"""
import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import ConstructionFailure

logger = logging.getLogger(__name__)

RationalVector = Tuple[Fraction, Fraction, Fraction]

# Order of the six independent entries of a symmetric 3x3 matrix
SYM_INDEX: Tuple[Tuple[int, int], ...] = ((0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2))


def _rational(values: Sequence[Any]) -> RationalVector:
    return tuple(Fraction(v) for v in values)  # type: ignore[return-value]


def _dot(a: RationalVector, b: RationalVector) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _cross(a: RationalVector, b: RationalVector) -> RationalVector:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def sym_vec(matrix: np.ndarray) -> np.ndarray:
    """The six independent entries of symmetric matrices, shape (..., 6)."""
    matrix = np.asarray(matrix, dtype=float)
    return np.stack([matrix[..., i, j] for i, j in SYM_INDEX], axis=-1)


@dataclass(frozen=True)
class Direction:
    """
    One element of the direction set.

    Attributes:
        k: First transverse unit vector
        k1: Flow direction
        k2: Second transverse unit vector, k x k1
        shift: Translation alpha_k of the tube lattice
    """
    k: RationalVector
    k1: RationalVector
    k2: RationalVector
    shift: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    @classmethod
    def from_axes(cls, k: Sequence[Any], k1: Sequence[Any]) -> "Direction":
        """Build the frame from k and k1; k2 is their cross product."""
        kk = _rational(k)
        kk1 = _rational(k1)
        return cls(kk, kk1, _cross(kk, kk1))

    def is_orthonormal(self) -> bool:
        """Exact rational orthonormality and right-handedness."""
        vectors = (self.k, self.k1, self.k2)
        for i, a in enumerate(vectors):
            if _dot(a, a) != 1:
                return False
            for b in vectors[i + 1:]:
                if _dot(a, b) != 0:
                    return False
        return _cross(self.k, self.k1) == self.k2

    def scale_is_integral(self, n_lambda: int) -> bool:
        """N_Lambda k, N_Lambda k1, N_Lambda k2 all have integer coordinates."""
        return all((n_lambda * c).denominator == 1 for v in (self.k, self.k1, self.k2) for c in v)

    def array(self, name: str) -> np.ndarray:
        return np.array([float(c) for c in getattr(self, name)])

    @property
    def flow_axis(self) -> np.ndarray:
        return self.array("k1")

    def rank_one(self) -> np.ndarray:
        """k1 ⊗ k1 as a float matrix."""
        k1 = self.flow_axis
        return np.outer(k1, k1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'k': [[c.numerator, c.denominator] for c in self.k],
            'k1': [[c.numerator, c.denominator] for c in self.k1],
            'k2': [[c.numerator, c.denominator] for c in self.k2],
            'shift': list(self.shift),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Direction":
        def vec(key: str) -> RationalVector:
            return tuple(Fraction(num, den) for num, den in data[key])  # type: ignore[return-value]
        return cls(vec('k'), vec('k1'), vec('k2'), tuple(data.get('shift', (0.0, 0.0, 0.0))))


@dataclass(frozen=True, eq=False)
class GeometrySet:
    """
    Direction set Lambda with its decomposition data.

    ``epsilon_u_raw`` is the raw sampled radius; the halved ``epsilon_u`` is
    the value every consumer uses.
    """
    directions: Tuple[Direction, ...]
    n_lambda: int
    decomposition: np.ndarray
    golden_weights: Tuple[float, ...]
    epsilon_u_raw: float = 0.0
    m_star: float = 0.0
    spans: bool = True
    name: str = "lambda"
    shift_scale: Optional[Tuple[float, float]] = None

    @property
    def epsilon_u(self) -> float:
        return 0.5 * self.epsilon_u_raw

    def __len__(self) -> int:
        return len(self.directions)

    def span_matrix(self) -> np.ndarray:
        """Columns sym_vec(k1 ⊗ k1), shape (6, |Lambda|)."""
        return np.stack([sym_vec(d.rank_one()) for d in self.directions], axis=1)

    def with_shifts(self, shifts: Sequence[Sequence[float]], r_perp: float, lam: float) -> "GeometrySet":
        directions = tuple(replace(d, shift=tuple(float(c) for c in s))
                           for d, s in zip(self.directions, shifts))
        return replace(self, directions=directions, shift_scale=(float(r_perp), float(lam)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'n_lambda': self.n_lambda,
            'spans': self.spans,
            'epsilon_u_raw': self.epsilon_u_raw,
            'epsilon_u': self.epsilon_u,
            'm_star': self.m_star,
            'golden_weights': list(self.golden_weights),
            'directions': [d.to_dict() for d in self.directions],
            'shift_scale': list(self.shift_scale) if self.shift_scale else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GeometrySet":
        directions = tuple(Direction.from_dict(d) for d in data['directions'])
        matrix = np.stack([sym_vec(d.rank_one()) for d in directions], axis=1)
        scale = data.get('shift_scale')
        return cls(
            directions=directions,
            n_lambda=int(data['n_lambda']),
            decomposition=np.linalg.pinv(matrix),
            golden_weights=tuple(data['golden_weights']),
            epsilon_u_raw=float(data['epsilon_u_raw']),
            m_star=float(data.get('m_star', 0.0)),
            spans=bool(data.get('spans', True)),
            name=data.get('name', 'lambda'),
            shift_scale=tuple(scale) if scale else None,
        )


# =============================================================================
# Bundled direction families
# =============================================================================

# 3-4-5 Pythagorean flow directions, each paired with the coordinate axis
# orthogonal to it; N_Lambda = 5 clears every denominator.
PYTHAGOREAN_FRAMES: List[Tuple[Tuple[int, int, int], Tuple[Fraction, ...]]] = [
    ((0, 0, 1), (Fraction(3, 5), Fraction(4, 5), Fraction(0))),
    ((0, 0, 1), (Fraction(3, 5), Fraction(-4, 5), Fraction(0))),
    ((1, 0, 0), (Fraction(0), Fraction(3, 5), Fraction(4, 5))),
    ((1, 0, 0), (Fraction(0), Fraction(3, 5), Fraction(-4, 5))),
    ((0, 1, 0), (Fraction(4, 5), Fraction(0), Fraction(3, 5))),
    ((0, 1, 0), (Fraction(-4, 5), Fraction(0), Fraction(3, 5))),
]

# Axis-aligned frames: flow along e1, e2, e3 (spans only diagonal matrices)
AXIS_FRAMES: List[Tuple[Tuple[int, int, int], Tuple[int, int, int]]] = [
    ((0, 1, 0), (1, 0, 0)),
    ((0, 0, 1), (0, 1, 0)),
    ((1, 0, 0), (0, 0, 1)),
]


def _common_scale(directions: Sequence[Direction]) -> int:
    scale = 1
    for d in directions:
        for v in (d.k, d.k1, d.k2):
            for c in v:
                scale = np.lcm(scale, c.denominator)
    return int(scale)


def assemble_geometry(
    frames: Sequence[Tuple[Sequence[Any], Sequence[Any]]],
    name: str,
    require_span: bool = True,
) -> GeometrySet:
    """
    Build and verify a geometry set from (k, k1) pairs.

    Raises:
        ConstructionFailure: A frame is not orthonormal, the rank-one
            tensors fail to span, or a weight at the identity is not positive
    """
    directions = tuple(Direction.from_axes(k, k1) for k, k1 in frames)
    for d in directions:
        if not d.is_orthonormal():
            raise ConstructionFailure(f"Frame {d.to_dict()} is not orthonormal")
    n_lambda = _common_scale(directions)

    matrix = np.stack([sym_vec(d.rank_one()) for d in directions], axis=1)
    rank = int(np.linalg.matrix_rank(matrix))
    spans = rank == 6
    if require_span and not spans:
        raise ConstructionFailure(f"Direction family {name} spans rank {rank} < 6")

    decomposition = np.linalg.pinv(matrix)
    golden = decomposition @ sym_vec(np.eye(3))
    if np.any(golden <= 0):
        raise ConstructionFailure(f"Direction family {name} has non-positive weights at Id: {golden}")

    logger.debug("Assembled %s: |Lambda|=%d, N_Lambda=%d, spans=%s", name, len(directions), n_lambda, spans)
    return GeometrySet(
        directions=directions,
        n_lambda=n_lambda,
        decomposition=decomposition,
        golden_weights=tuple(float(w) for w in golden),
        spans=spans,
        name=name,
    )
