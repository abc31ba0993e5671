"""
Migration decision by tabular Q-learning over candidate triples.

States and actions are both indexed by (out-domain, in-domain) pairs: the
evaluation matrix `Q` holds one estimate per candidate, and the reward matrix
`R` holds the balance improvement per unit of migration cost.

Note that `epsilon` here is the probability of *exploiting* (picking the
maximum estimate), the reverse of the usual naming.
"""

from __future__ import annotations
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .core import MigrationAction, MigrationPolicy, Topology
from .costs import CostModel
from .selection import CandidateTriple, build_candidate_set

from typing import Mapping, Sequence

__all__ = [
    "RlConfig",
    "QState",
    "compute_reward",
    "q_update",
    "q_converged",
    "init_q_state",
    "decide_migration",
    "RlLbm",
]

logger = logging.getLogger(__name__)

Key = tuple[int, int]


@dataclass(frozen=True)
class RlConfig:
    """
    Learning parameters for the migration decision.

    Parameters
    ----------
    alpha
        Learning rate, in (0, 1].
    gamma
        Discount factor, in [0, 1).
    epsilon
        Probability of picking the maximum-estimate triple, in (0, 1]. With
        probability `1 - epsilon` another triple is explored.
    q_init
        Initial value of every `Q` entry.
    convergence_tol
        `Q` is stable once no entry moves by more than this in an iteration.
    max_iterations
        Iteration cap for the learning loop.
    """

    alpha: float = 0.5
    gamma: float = 0.8
    epsilon: float = 0.9
    q_init: float = 1.0
    convergence_tol: float = 1e-6
    max_iterations: int = 10_000

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"`alpha` must be in (0, 1], got {self.alpha}.")
        if not 0 <= self.gamma < 1:
            raise ValueError(f"`gamma` must be in [0, 1), got {self.gamma}.")
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"`epsilon` must be in (0, 1], got {self.epsilon}.")
        if not math.isfinite(self.q_init):
            raise ValueError("`q_init` must be finite.")
        if not self.convergence_tol >= 0:
            raise ValueError("`convergence_tol` must be >= 0.")
        if self.max_iterations < 1:
            raise ValueError("`max_iterations` must be >= 1.")


@dataclass
class QState:
    """
    Evaluation matrix `q`, reward matrix `r`, and the candidate behind each
    (out-domain, in-domain) entry.
    """

    q: dict[Key, float] = field(default_factory=dict)
    r: dict[Key, float] = field(default_factory=dict)
    candidates: dict[Key, CandidateTriple] = field(default_factory=dict)


def compute_reward(d_before: float, d_after: float, migration_cost: float) -> float:
    """
    Balance improvement per unit of migration cost. Positive when the migration
    lowers the discrete coefficient, negative when it raises it.

    Raises
    ------
    ValueError
        If `migration_cost` isn't positive.
    """
    if not migration_cost > 0:
        raise ValueError(f"Migration cost must be > 0, got {migration_cost}.")
    return (d_before - d_after) / migration_cost


def q_update(
    q_state: QState,
    config: RlConfig,
    out_domain: int,
    in_domain: int,
    reward: float,
    max_next_q: float,
) -> float:
    """
    One temporal-difference step on the `(out_domain, in_domain)` estimate:
    `Q + alpha * (reward + gamma * max_next_q - Q)`.

    The new estimate is stored in `q_state.q` and returned.
    """
    key = (out_domain, in_domain)
    if key not in q_state.q:
        raise KeyError(f"No evaluation entry for {key}.")

    current = q_state.q[key]
    updated = current + config.alpha * (reward + config.gamma * max_next_q - current)
    q_state.q[key] = updated
    return updated


def q_converged(q_prev: Mapping[Key, float], q_next: Mapping[Key, float], tol: float) -> bool:
    """
    Whether no entry changed by more than `tol` (inclusive). Entries present in
    only one of the matrices count as changed.
    """
    if q_prev.keys() != q_next.keys():
        return False
    return all(abs(q_next[k] - q_prev[k]) <= tol for k in q_next)


def init_q_state(candidates: Sequence[CandidateTriple], config: RlConfig) -> QState:
    "Initialization phase: `Q` filled with `q_init`, `R` from each candidate's reward."
    state = QState()
    for c in candidates:
        key = (c.out_domain, c.in_domain)
        if key in state.candidates:
            raise ValueError(f"Duplicate candidate for (out, in) = {key}.")
        state.candidates[key] = c
        state.q[key] = config.q_init
        state.r[key] = compute_reward(
            c.pair.pair_deviation, c.predicted_pair_deviation, c.migration_cost
        )
    return state


def _conflicts(a: CandidateTriple, b: CandidateTriple) -> bool:
    controllers_a = {a.out_domain, a.in_domain}
    return bool(
        controllers_a & {b.out_domain, b.in_domain} or set(a.switches) & set(b.switches)
    )


def _is_stale(candidate: CandidateTriple, topology: Topology) -> bool:
    try:
        return any(topology.owner(s) != candidate.out_domain for s in candidate.switches)
    except KeyError:
        return True


def decide_migration(
    candidates: Sequence[CandidateTriple],
    topology: Topology,
    config: RlConfig,
    rng_seed: int | np.random.Generator,
) -> MigrationAction:
    """
    Select a conflict-free set of migration triples from `candidates`.

    Each iteration of the learning loop:

    a. For every out-domain still active, takes its in-domain with the largest
       reward as that out-domain's option.
    b. With probability `epsilon`, picks the option with the largest estimate;
       otherwise picks uniformly among the other options.
    c. Updates every active estimate, using the largest estimate among the
       other active triples as the next-state value (0 once none is left).
    d. Accepts the picked triple if its estimate didn't decrease, then drops
       every candidate sharing a controller or a switch with it.
    e. Stops when `Q` is stable, no candidate is left, or after
       `max_iterations`.

    Candidates still active at the end are then added in descending estimate
    order, skipping conflicts. When every reward is below `(1 - gamma) * q_init`
    (the usual case with the default `q_init` of 1), estimates only fall, so
    step d never accepts and this ending phase makes every decision.

    Parameters
    ----------
    candidates
        Output of `build_candidate_set()`.
    topology
        The snapshot the candidates were built from. Candidates whose switches
        aren't owned by their out-domain here are dropped.
    config
        Learning parameters.
    rng_seed
        Seed or generator for the exploration draws.

    Returns
    -------
    MigrationAction
        Empty when there are no candidates.
    """
    rng = np.random.default_rng(rng_seed)

    fresh = []
    for c in candidates:
        if _is_stale(c, topology):
            logger.warning("Dropping stale candidate %r.", c.triple)
        else:
            fresh.append(c)

    if not fresh:
        return MigrationAction()

    state = init_q_state(fresh, config)
    active: list[Key] = list(state.candidates)
    accepted: list[CandidateTriple] = []

    def rank(key: Key):
        # Larger estimate first, then larger reward, then ascending ids.
        return (-state.q[key], -state.r[key], key)

    iteration = 0
    while active and iteration < config.max_iterations:
        iteration += 1

        # a) Each out-domain's best in-domain by reward.
        options: dict[int, Key] = {}
        for key in sorted(active, key=lambda k: (-state.r[k], k)):
            options.setdefault(key[0], key)
        front = sorted(options.values(), key=rank)

        # b) Exploit with probability epsilon, explore otherwise.
        if len(front) == 1 or rng.random() < config.epsilon:
            chosen = front[0]
        else:
            chosen = front[1 + int(rng.integers(len(front) - 1))]

        # c) Synchronous update of every active estimate.
        previous = {k: state.q[k] for k in active}
        leader = max(active, key=lambda k: (previous[k], k))
        runner_up = max((previous[k] for k in active if k != leader), default=0.0)
        for key in active:
            q_update(
                state,
                config,
                key[0],
                key[1],
                state.r[key],
                runner_up if key == leader else previous[leader],
            )

        # d) Accept if the estimate didn't decrease.
        if state.q[chosen] >= previous[chosen]:
            picked = state.candidates[chosen]
            accepted.append(picked)
            active = [
                k for k in active if not _conflicts(picked, state.candidates[k])
            ]

        # e) Stop once Q is stable.
        if q_converged(previous, {k: state.q[k] for k in previous}, config.convergence_tol):
            break

    logger.debug(
        "Q-learning loop finished after %d iterations with %d accepted, %d still active.",
        iteration,
        len(accepted),
        len(active),
    )

    # Ending phase: the largest remaining estimates, conflict-free.
    for key in sorted(active, key=rank):
        candidate = state.candidates[key]
        if not any(_conflicts(candidate, a) for a in accepted):
            accepted.append(candidate)

    return MigrationAction(tuple(c.triple for c in accepted))


class RlLbm(MigrationPolicy):
    """
    Reinforcement-learning load balancing: candidate selection followed by the
    Q-learning migration decision.

    Parameters
    ----------
    config
        Learning parameters.
    cost_model
        Prices candidate triples for the reward.
    """

    name = "RL_LBM"

    def __init__(self, config: RlConfig | None = None, cost_model: CostModel | None = None):
        self.config = config or RlConfig()
        self.cost_model = cost_model or CostModel()

    def __call__(self, topology: Topology, rng: np.random.Generator) -> MigrationAction:
        candidates = build_candidate_set(topology, self.cost_model)
        return decide_migration(candidates, topology, self.config, rng)
