"""
Gluing local solutions into (u~, R~).

On [t_i, t_{i+1}] the glued velocity is (1 - chi_i) v_{i-1} + chi_i v_i and
the stress

    R~ = d_t chi_i R(v_i - v_{i-1}) - chi_i (1 - chi_i) (v_i - v_{i-1}) ⊗̊ (v_i - v_{i-1}),

nonzero only on the overlaps [t_i, t_i + theta]. The new bad set is the
union of [t_i - 2 theta, t_i + 3 theta] over the indices whose overlap
window meets the support of R_q.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from config import FAIL, PASS, get_config
from errors import InvalidParameterError
from gluing.initial import nsr_residual
from gluing.partition import PartitionOfUnity, Subdivision
from gluing.solver import LocalSolution, local_solve
from gluing.state import (
    ZERO_STRESS,
    IterationState,
    contains,
    merge_intervals,
    stress_profile,
    well_prepared,
)
from perturbation.identities import IdentityReport
from spectral.field import ModelParams, SpectralField
from spectral.operators import differentiate, inverse_divergence, relative_residual, traceless_product

logger = logging.getLogger(__name__)


@dataclass
class SolvePlan:
    """Sample indices of the breakpoints and the overlap length on the state's time grid."""
    starts: List[int]
    overlap: int

    def end(self, i: int, last: int) -> int:
        return min(self.starts[i + 1] + self.overlap, last) if i + 1 < len(self.starts) else last


def plan_solves(state: IterationState, partition: PartitionOfUnity) -> SolvePlan:
    """
    Raises:
        InvalidParameterError: Breakpoints or theta are not whole multiples of the time step
    """
    grid = state.grid
    if abs(grid.period - partition.period) > 1e-12:
        raise InvalidParameterError("Partition and state cover different periods")
    steps = (grid.time_samples - 1) / partition.m
    overlap = partition.theta / grid.dt
    if abs(steps - round(steps)) > 1e-9 or abs(overlap - round(overlap)) > 1e-9:
        raise InvalidParameterError(
            f"Need (M - 1) divisible by m and theta a multiple of dt (M={grid.time_samples}, "
            f"m={partition.m}, theta={partition.theta})"
        )
    return SolvePlan([int(round(i * steps)) for i in range(partition.m)], int(round(overlap)))


def bad_indices(state: IterationState, partition: PartitionOfUnity) -> List[int]:
    """The i >= 1 whose window [t_{i-1}, t_i + theta] meets the support of R_q."""
    times = state.times
    active = stress_profile(state.stress) > ZERO_STRESS
    out = []
    for i in range(1, partition.m):
        window = (times >= partition.breakpoints[i - 1]) & (times <= partition.breakpoints[i] + partition.theta)
        if np.any(active & window):
            out.append(i)
    return out


def solve_all(
    state: IterationState,
    partition: PartitionOfUnity,
    model: ModelParams,
    dt: float,
    chained: bool = True,
) -> List[LocalSolution]:
    """
    One local solve per breakpoint on [t_i, t_{i+1} + theta].

    With ``chained``, a breakpoint outside the bad index set restarts from
    the previous solve's value at t_i, which continues that solve exactly;
    otherwise every solve starts from u_q(t_i).
    """
    plan = plan_solves(state, partition)
    bad = set(bad_indices(state, partition))
    last = state.grid.time_samples - 1
    dt_grid = state.grid.dt
    solves: List[LocalSolution] = []
    for i, start in enumerate(plan.starts):
        end = plan.end(i, last)
        if chained and i > 0 and i not in bad:
            v0 = solves[-1].velocity.at(start - plan.starts[i - 1])
        else:
            v0 = state.velocity.at(start)
        v0 = v0.with_coeffs(v0.coeffs, mean_free=True, divergence_free=True)
        solves.append(local_solve(v0, (start * dt_grid, end * dt_grid), model, dt, samples=end - start + 1))
    logger.info("Solved %d local problems (%d restarted in the bad set)", len(solves), len(bad))
    return solves


@dataclass
class GlueResult:
    """Glued state, the solves behind it and its checks."""
    state: IterationState
    subdivision: Subdivision
    partition: PartitionOfUnity
    indices: List[int]
    solves: List[LocalSolution]
    checks: List[IdentityReport] = field(default_factory=list)
    flags: Dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and all(self.flags.values())

    @property
    def status(self) -> str:
        return PASS if self.passed else FAIL

    def to_dict(self) -> Dict[str, Any]:
        return {
            'state': self.state.to_dict(),
            'subdivision': self.subdivision.to_dict(),
            'partition': self.partition.to_dict(),
            'bad_indices': list(self.indices),
            'solves': [s.to_dict() for s in self.solves],
            'checks': [c.to_dict() for c in self.checks],
            'flags': {k: (PASS if v else FAIL) for k, v in self.flags.items()},
            'status': self.status,
        }


def glue(
    state: IterationState,
    subdivision: Subdivision,
    model: ModelParams,
    dt: float = 1e-3,
    solves: Optional[List[LocalSolution]] = None,
) -> GlueResult:
    """
    Glue local solutions into the next well-prepared state.

    ``solves`` defaults to :func:`solve_all` with chaining. The checks
    cover the Navier-Stokes-Reynolds residual of (u~, R~) with d_t u~ taken
    from the equations the v_i solve, divergence and mean of u~, the
    support property at 3 theta / 2, I_{q+1} within I_q and the partition
    sum.
    """
    partition = PartitionOfUnity.from_subdivision(subdivision)
    plan = plan_solves(state, partition)
    solves = solves or solve_all(state, partition, model, dt)
    if len(solves) != partition.m:
        raise InvalidParameterError(f"Expected {partition.m} local solves, got {len(solves)}")
    rates = [s.rate(model) for s in solves]
    times = state.times
    theta = partition.theta

    velocity, velocity_rate, stress = [], [], []
    for j, t in enumerate(times):
        i = int(np.searchsorted(plan.starts, j, side="right")) - 1
        v_i = solves[i].velocity.at(j - plan.starts[i])
        r_i = rates[i].at(j - plan.starts[i])
        chi = float(partition.chi(i, t)) if i > 0 else 1.0
        if i == 0 or chi == 1.0:
            velocity.append(v_i)
            velocity_rate.append(r_i)
            stress.append(SpectralField.zeros(state.grid, 2))
            continue
        local = j - plan.starts[i - 1]
        v_prev = solves[i - 1].velocity.at(local)
        r_prev = rates[i - 1].at(local)
        chi_rate = float(partition.chi(i, t, 1))
        difference = v_i - v_prev
        velocity.append(v_prev * (1.0 - chi) + v_i * chi)
        velocity_rate.append(r_prev * (1.0 - chi) + r_i * chi + difference * chi_rate)
        stress.append(inverse_divergence(difference) * chi_rate
                      - traceless_product(difference, difference) * (chi * (1.0 - chi)))

    period = state.grid.period
    u = SpectralField.stack_times(velocity, period)
    u_rate = SpectralField.stack_times(velocity_rate, period)
    R = SpectralField.stack_times(stress, period)
    u = u.with_coeffs(u.coeffs, label="u_tilde")
    R = R.with_coeffs(R.coeffs, label="R_tilde")

    indices = bad_indices(state, partition)
    bad_set = merge_intervals([(partition.breakpoints[i] - 2 * theta, partition.breakpoints[i] + 3 * theta)
                               for i in indices])
    glued = IterationState(u, R, bad_set, theta, state.q + 1, state.lambda_q, velocity_rate=u_rate)

    config = get_config()
    spectral_tol = float(config.get("spectral_tol"))
    scale = max(float(np.max(np.abs(u.physical()))), 1e-300)
    checks = [
        IdentityReport("glued_nsr", nsr_residual(u, R, model, u_rate), spectral_tol),
        IdentityReport("glued_divergence",
                       relative_residual(differentiate(u, "div"), differentiate(u, "grad")), spectral_tol),
        IdentityReport("glued_mean", float(np.max(np.abs(u.mean()))) / scale,
                       float(config.get("mean_free_tol")) * 1e2),
        IdentityReport("partition_sum", partition.sum_deviation(), float(config.get("partition_tol"))),
    ]
    flags = {
        'support_property': well_prepared(glued, 1.5 * theta),
        'well_prepared': well_prepared(glued),
        'bad_set_nested': contains(state.bad_set, bad_set),
    }
    result = GlueResult(glued, subdivision, partition, indices, solves, checks, flags)
    for check in checks:
        logger.info("%s residual %.3e (%s)", check.name, check.residual, check.status)
    logger.info("Glued state q=%d: %d bad indices, %s", glued.q, len(indices), result.status)
    return result
