"""Parameters of the spatial and temporal building blocks for one frequency lambda."""
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from errors import InvalidParameterError

logger = logging.getLogger(__name__)

REGIMES = ("A1", "A2")


def block_exponents(regime: str, alpha: float, epsilon: float) -> Dict[str, float]:
    """
    Powers of lambda defining each parameter.

    A1 (intermittent jets): r_perp, r_par, mu, tau, sigma.
    A2 (Mikado flows): r_perp, tau, sigma.
    """
    if regime == "A1":
        return {
            'r_perp': -1.0 + 2.0 * epsilon,
            'r_par': -1.0 + 4.0 * epsilon,
            'mu': 2.0 * alpha - 1.0 + 2.0 * epsilon,
            'tau': 4.0 * alpha - 5.0 + 11.0 * epsilon,
            'sigma': 2.0 * epsilon,
        }
    if regime == "A2":
        return {
            'r_perp': -alpha + 1.0 - 8.0 * epsilon,
            'tau': 2.0 * alpha,
            'sigma': 2.0 * epsilon,
        }
    raise InvalidParameterError(f"Unknown regime: {regime}")


@dataclass(frozen=True)
class BlockParams:
    """
    Concentration, frequency and oscillation parameters.

    With ``snapped`` set, lambda r_perp and sigma were rounded to positive
    integers so the blocks are periodic on the torus and g_(tau) has exact
    mean square one over [0, T].
    """
    regime: str
    lam: float
    alpha: float
    epsilon: float
    r_perp: float
    tau: float
    sigma: float
    r_par: Optional[float] = None
    mu: Optional[float] = None
    n_lambda: int = 1
    snapped: bool = False

    @classmethod
    def from_regime(
        cls,
        regime: str,
        lam: float,
        alpha: float,
        epsilon: float,
        n_lambda: int = 1,
        snap: bool = True,
    ) -> "BlockParams":
        """
        Substitute lambda into the regime's parameter powers.

        Raises:
            InvalidParameterError: Unknown regime, lambda <= 1, non-positive
                epsilon, or a concentration that leaves the fundamental cell
        """
        if lam <= 1:
            raise InvalidParameterError(f"lambda must exceed 1, got {lam}")
        if epsilon <= 0:
            raise InvalidParameterError(f"epsilon must be positive, got {epsilon}")
        powers = block_exponents(regime, alpha, epsilon)
        values = {name: float(lam) ** power for name, power in powers.items()}

        r_perp, sigma = values['r_perp'], values['sigma']
        if snap:
            r_perp = max(1, int(round(lam * r_perp))) / float(lam)
            sigma = float(max(1, int(round(sigma))))
            logger.debug("Snapped lambda r_perp %.4g -> %d and sigma %.4g -> %d",
                         lam * values['r_perp'], round(lam * r_perp), values['sigma'], sigma)
        if r_perp >= 1.0:
            raise InvalidParameterError(f"r_perp = {r_perp:.4g} must be below 1 (lambda too small)")
        if values['tau'] < 1.0:
            raise InvalidParameterError(f"tau = {values['tau']:.4g} must be at least 1")

        return cls(
            regime=regime,
            lam=float(lam),
            alpha=float(alpha),
            epsilon=float(epsilon),
            r_perp=r_perp,
            tau=values['tau'],
            sigma=sigma,
            r_par=values.get('r_par'),
            mu=values.get('mu'),
            n_lambda=int(n_lambda),
            snapped=snap,
        )

    @property
    def lattice_scale(self) -> float:
        """lambda r_perp N_Lambda, the argument scale of the planar profiles."""
        return self.lam * self.r_perp * self.n_lambda

    @property
    def tube_radius(self) -> float:
        """Support radius 1 / (lambda N_Lambda) of the tubes in physical space."""
        return 1.0 / (self.lam * self.n_lambda)

    @property
    def is_jet(self) -> bool:
        return self.regime == "A1"

    def exponents(self) -> Dict[str, float]:
        return block_exponents(self.regime, self.alpha, self.epsilon)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BlockParams":
        return cls(**data)
