"""
Support-disjoint placement of the concentrated tubes.

The spatial profile of direction k is supported in the tubes of radius
rho0 = 1/(lambda N_Lambda) around the lines

    alpha_k + (2 pi / s)(m k + n k2) + t k1,   m, n in Z,  s = lambda r_perp N_Lambda.

For two directions with non-parallel flow axes the distance between a
k-line and a k'-line is |(p - p') . n| / |n| with n = k1 x k1'. The
offsets (p - p') . n range over (alpha - alpha') . n + (2 pi g / s) Z where g
is the gcd of the rationals k.n, k2.n, k'.n, k2'.n, so disjointness of the
two families reduces to one distance on a circle.
"""
import logging
import math
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import qmc

from config import get_config
from errors import ConstructionFailure, NoAdmissibleShifts
from geometry.directions import Direction, GeometrySet, _cross, _dot

logger = logging.getLogger(__name__)

DEFAULT_MARGIN = 0.05
DEFAULT_CANDIDATES = 4096


def _fraction_gcd(values: List[Fraction]) -> Fraction:
    values = [abs(v) for v in values if v != 0]
    if not values:
        return Fraction(0)
    denominator = 1
    for v in values:
        denominator = denominator * v.denominator // math.gcd(denominator, v.denominator)
    numerator = 0
    for v in values:
        numerator = math.gcd(numerator, int(v * denominator))
    return Fraction(numerator, denominator)


def snap_scale(r_perp: float, lam: float) -> Tuple[int, float]:
    """
    Round lambda r_perp to a positive integer.

    Returns:
        Tuple of (lambda r_perp as an integer, the adjusted r_perp)
    """
    product = max(1, int(round(lam * r_perp)))
    return product, product / float(lam)


class PairLattice:
    """Offset circle for one ordered pair of directions."""

    def __init__(self, first: Direction, second: Direction, lattice_scale: int):
        normal = _cross(first.k1, second.k1)
        if all(c == 0 for c in normal):
            raise ConstructionFailure("Parallel flow axes are not supported by the shift search")
        self.normal = np.array([float(c) for c in normal])
        self.normal_length = float(np.linalg.norm(self.normal))
        g = _fraction_gcd([
            _dot(first.k, normal), _dot(first.k2, normal),
            _dot(second.k, normal), _dot(second.k2, normal),
        ])
        self.gcd = g
        self.period = 2.0 * np.pi * float(g) / lattice_scale

    def max_radius(self, margin: float) -> float:
        """Largest r_perp for which some relative shift separates the pair."""
        return np.pi * float(self.gcd) / (2.0 * self.normal_length * (1.0 + margin))

    def separation(self, difference: np.ndarray) -> np.ndarray:
        """Distance between the two tube families for shift differences (..., 3)."""
        offset = np.asarray(difference, dtype=float) @ self.normal
        wrapped = offset - self.period * np.round(offset / self.period)
        return np.abs(wrapped) / self.normal_length


def pair_separation(geom: GeometrySet, r_perp: float, lam: float) -> Dict[Tuple[int, int], float]:
    """Closest approach of every pair of tube families for the stored shifts."""
    lattice_scale, _ = snap_scale(r_perp, lam)
    lattice_scale *= geom.n_lambda
    out: Dict[Tuple[int, int], float] = {}
    for i, first in enumerate(geom.directions):
        for j in range(i + 1, len(geom)):
            second = geom.directions[j]
            lattice = PairLattice(first, second, lattice_scale)
            difference = np.array(first.shift) - np.array(second.shift)
            out[(i, j)] = float(lattice.separation(difference))
    return out


def choose_shifts(
    geom: GeometrySet,
    r_perp: float,
    lam: float,
    seed: Optional[int] = None,
    margin: float = DEFAULT_MARGIN,
    candidates: int = DEFAULT_CANDIDATES,
) -> GeometrySet:
    """
    Pick shifts alpha_k so the tube supports are pairwise disjoint.

    The first direction keeps alpha = 0; each following one takes the first
    scrambled-Halton candidate in [0, 2 pi)^3 that clears every direction
    already placed by 2 rho0 (1 + margin).

    Args:
        geom: Direction set
        r_perp: Concentration parameter (snapped so lambda r_perp is an integer)
        lam: Frequency lambda
        seed: Candidate sequence seed (config ``seed`` by default)
        margin: Relative clearance on top of the touching distance
        candidates: Candidates tried per direction

    Returns:
        The direction set with shifts and (r_perp, lambda) recorded

    Raises:
        NoAdmissibleShifts: r_perp exceeds the pairwise limit, or the search
            finds no candidate for some direction
    """
    if r_perp <= 0 or lam <= 0:
        raise NoAdmissibleShifts(f"Need positive r_perp and lambda, got {r_perp}, {lam}")
    if len(geom) == 1:
        return geom.with_shifts([(0.0, 0.0, 0.0)], r_perp, lam)

    seed = get_config().get("seed") if seed is None else seed
    product, r_eff = snap_scale(r_perp, lam)
    if r_eff != r_perp:
        logger.debug("Snapped r_perp %.6g -> %.6g (lambda r_perp = %d)", r_perp, r_eff, product)
    lattice_scale = product * geom.n_lambda
    rho0 = 1.0 / (lam * geom.n_lambda)
    required = 2.0 * rho0 * (1.0 + margin)

    size = len(geom)
    lattices = {}
    for i in range(size):
        for j in range(i + 1, size):
            lattice = PairLattice(geom.directions[i], geom.directions[j], lattice_scale)
            limit = lattice.max_radius(margin)
            if r_eff > limit:
                raise NoAdmissibleShifts(
                    f"r_perp = {r_eff:.4g} exceeds the limit {limit:.4g} for directions {i} and {j}"
                )
            lattices[(i, j)] = lattice

    sampler = qmc.Halton(d=3, scramble=True, seed=seed)
    shifts = [np.zeros(3)]
    for j in range(1, size):
        pool = 2.0 * np.pi * sampler.random(candidates)
        admissible = np.ones(candidates, dtype=bool)
        for i in range(j):
            admissible &= lattices[(i, j)].separation(shifts[i] - pool) >= required
        hits = np.flatnonzero(admissible)
        if hits.size == 0:
            raise NoAdmissibleShifts(
                f"No admissible shift for direction {j} among {candidates} candidates "
                f"(r_perp = {r_eff:.4g}, lambda = {lam})"
            )
        shifts.append(pool[hits[0]])
        logger.debug("Direction %d placed at %s after %d candidates", j, pool[hits[0]], hits[0] + 1)

    logger.info("Chose shifts for %d directions at r_perp=%.4g, lambda=%s", size, r_eff, lam)
    return geom.with_shifts(shifts, r_eff, lam)


def tube_overlap(
    geom: GeometrySet,
    r_perp: Optional[float] = None,
    lam: Optional[float] = None,
    samples: int = 4096,
    seed: int = 0,
) -> float:
    """
    Largest pairwise overlap fraction between tube supports.

    Points are drawn uniformly inside the tubes of one direction and the
    indicator of every other direction's tubes is averaged over them; the
    result is 0 exactly when no sample lands in two supports.
    """
    if geom.shift_scale is not None:
        r_perp = geom.shift_scale[0] if r_perp is None else r_perp
        lam = geom.shift_scale[1] if lam is None else lam
    if r_perp is None or lam is None:
        raise ConstructionFailure("tube_overlap needs r_perp and lambda or a shifted geometry")
    if len(geom) == 1:
        return 0.0

    product, _ = snap_scale(r_perp, lam)
    lattice_scale = product * geom.n_lambda
    spacing = 2.0 * np.pi / lattice_scale
    rho0 = 1.0 / (lam * geom.n_lambda)
    rng = np.random.default_rng(seed)

    worst = 0.0
    for i, first in enumerate(geom.directions):
        k, k1, k2 = first.array("k"), first.array("k1"), first.array("k2")
        m = rng.integers(0, lattice_scale, samples)
        n = rng.integers(0, lattice_scale, samples)
        t = rng.uniform(0.0, 2.0 * np.pi, samples)
        radius = rho0 * np.sqrt(rng.uniform(0.0, 1.0, samples))
        angle = rng.uniform(0.0, 2.0 * np.pi, samples)
        points = (np.array(first.shift)
                  + spacing * (m[:, None] * k + n[:, None] * k2)
                  + t[:, None] * k1
                  + (radius * np.cos(angle))[:, None] * k
                  + (radius * np.sin(angle))[:, None] * k2)
        for j, second in enumerate(geom.directions):
            if j == i:
                continue
            relative = points - np.array(second.shift)
            coords = np.stack([relative @ second.array("k"), relative @ second.array("k2")], axis=-1)
            reduced = coords - spacing * np.round(coords / spacing)
            inside = np.sqrt(np.sum(reduced ** 2, axis=-1)) < rho0
            worst = max(worst, float(np.mean(inside)))
    return worst
