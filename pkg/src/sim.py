"""
Round-based simulation of the control plane.

Each round advances the traffic schedules, checks whether the plane has left
equilibrium, asks the policy for a migration action, executes it, and records
the balance, delay and cost metrics.
"""

from __future__ import annotations
from dataclasses import dataclass, field
import logging
import math

import numpy as np
import pyarrow as pa

from .baselines import PolicyKind, make_policy
from .core import MigrationAction, MigrationPolicy, MigrationTriple, Topology
from .costs import CostModel, DelayModel, mean_packet_in_delay, migration_cost
from .model import discrete_coefficient_all, load_ratios, mean_ratio_all
from .rl import RlConfig

from typing import Iterable, Sequence

__all__ = [
    "TrafficProfile",
    "CostModel",
    "DelayModel",
    "Scenario",
    "RoundRecord",
    "StaleActionError",
    "migration_cost",
    "mean_packet_in_delay",
    "apply_action",
    "run",
    "records_to_table",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrafficProfile:
    """
    Packet-in rate schedule of one switch.

    The rate is a step function of the round index: each `(round, rate)`
    breakpoint holds until the next one. Rounds before the first breakpoint use
    its rate.

    Parameters
    ----------
    breakpoints
        `(round, rate)` pairs, strictly increasing in round.
    jitter
        Relative amplitude of multiplicative noise, in [0, 1). The rate of a
        round is scaled by `1 + jitter * u` with `u` uniform in [-1, 1).
    jitter_seed
        Combined with the run seed, the switch id and the round to seed the noise.
    """

    breakpoints: tuple[tuple[int, float], ...]
    jitter: float = 0.0
    jitter_seed: int = 0

    def __post_init__(self):
        points = tuple((int(r), float(v)) for r, v in self.breakpoints)
        object.__setattr__(self, "breakpoints", points)

        if not points:
            raise ValueError("A traffic profile needs at least one breakpoint.")
        if any(v < 0 or not math.isfinite(v) for _, v in points):
            raise ValueError(f"Traffic rates must be finite and >= 0, got {points}.")
        if any(a[0] >= b[0] for a, b in zip(points, points[1:])):
            raise ValueError(f"Breakpoints must be strictly increasing in round: {points}.")
        if not 0 <= self.jitter < 1:
            raise ValueError(f"`jitter` must be in [0, 1), got {self.jitter}.")

    @classmethod
    def constant(cls, rate: float) -> TrafficProfile:
        return cls(((0, rate),))

    def base_rate(self, round_index: int) -> float:
        rate = self.breakpoints[0][1]
        for r, v in self.breakpoints:
            if r > round_index:
                break
            rate = v
        return rate

    def rate(self, round_index: int, switch_id: int, seed: int = 0) -> float:
        "Rate for a round, jitter included."
        rate = self.base_rate(round_index)
        if self.jitter == 0:
            return rate

        rng = np.random.default_rng([seed, self.jitter_seed, switch_id, round_index])
        return max(0.0, rate * (1 + self.jitter * rng.uniform(-1, 1)))


@dataclass(frozen=True)
class Scenario:
    """
    Everything needed for a simulation run.

    Parameters
    ----------
    topology
        Initial snapshot. Its switch rates are replaced by `traffic` every round.
    traffic
        Switch id -> rate schedule. Switches without a profile keep their
        initial rate.
    rounds
        Number of rounds to simulate (>= 1).
    trigger_threshold
        Migration only happens in rounds where the plane's discrete coefficient
        is above this value.
    """

    topology: Topology
    traffic: dict[int, TrafficProfile] = field(default_factory=dict)
    cost_model: CostModel = field(default_factory=CostModel)
    delay_model: DelayModel = field(default_factory=DelayModel)
    rl: RlConfig = field(default_factory=RlConfig)
    trigger_threshold: float = 0.3
    rounds: int = 1
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError(f"`rounds` must be >= 1, got {self.rounds}.")
        if self.trigger_threshold < 0:
            raise ValueError("`trigger_threshold` must be >= 0.")
        unknown = sorted(set(self.traffic) - set(self.topology.switches))
        if unknown:
            raise KeyError(f"Traffic profiles reference unknown switches: {unknown}.")

    def rates(self, round_index: int, seed: int) -> dict[int, float]:
        return {
            s: profile.rate(round_index, s, seed) for s, profile in self.traffic.items()
        }


@dataclass(frozen=True)
class RoundRecord:
    """
    Metrics of one simulated round. Loads and ratios are keyed by controller id
    and measured after the round's migrations.

    `controller_costs` splits `round_cost` over the controllers: each triple's
    cost is charged half to its out-domain and half to its in-domain, so the
    values sum to `round_cost`.
    """

    round: int
    loads: dict[int, float]
    ratios: dict[int, float]
    deviation_before: float
    deviation: float
    mean_delay: float
    migrations: tuple[MigrationTriple, ...]
    round_cost: float
    cumulative_cost: float
    triggered: bool = False
    action_error: str | None = None
    controller_costs: dict[int, float] = field(default_factory=dict)

    @property
    def migrated_switches(self) -> int:
        return sum(len(t.switches) for t in self.migrations)


class StaleActionError(ValueError):
    "A migration action no longer matches the topology it's applied to."


def apply_action(topology: Topology, action: MigrationAction) -> Topology:
    """
    Execute every triple of `action` at once.

    Raises
    ------
    StaleActionError
        If a switch isn't owned by its triple's out-domain (or an id is unknown).
        Nothing is applied in that case.
    """
    for t in action:
        for s in t.switches:
            try:
                owner = topology.owner(s)
                topology.controller(t.in_domain)
            except KeyError as e:
                raise StaleActionError(str(e)) from None
            if owner != t.out_domain:
                raise StaleActionError(
                    f"Switch {s} is owned by controller {owner}, not {t.out_domain}."
                )

    if not len(action):
        return topology
    return topology.migrate(action)


def run(
    scenario: Scenario,
    policy: PolicyKind | str | MigrationPolicy,
    seed: int | None = None,
) -> list[RoundRecord]:
    """
    Simulate `scenario` under `policy`.

    Per round: update switch rates, measure loads and the discrete coefficient,
    and, if some controller is above the mean load ratio and the coefficient is
    above the trigger threshold, execute the policy's action. The result is
    fully determined by `(scenario, policy, seed)`.

    Parameters
    ----------
    scenario
        What to simulate.
    policy
        A `PolicyKind` (or its name), or any `MigrationPolicy`.
    seed
        Seeds traffic jitter and the policy's random draws. Defaults to the
        scenario's seed.
    """
    if not isinstance(policy, MigrationPolicy):
        policy = make_policy(policy, scenario.rl, scenario.cost_model)
    seed = scenario.seed if seed is None else seed
    rng = np.random.default_rng(seed)

    logger.info(
        "Running %s under %s (seed %d, %d rounds).",
        scenario.name,
        policy.name,
        seed,
        scenario.rounds,
    )

    topology = scenario.topology
    cumulative = 0.0
    records = []
    for t in range(scenario.rounds):
        topology = topology.with_rates(scenario.rates(t, seed))

        ratios = load_ratios(topology)
        mean = mean_ratio_all(topology)
        deviation_before = discrete_coefficient_all(topology)
        triggered = (
            any(r > mean for r in ratios.values())
            and deviation_before > scenario.trigger_threshold
        )

        action = MigrationAction()
        if triggered:
            action = policy(topology, rng)
            logger.debug(
                "Round %d: D=%.4f triggered, %s chose %d triples moving %d switches.",
                t,
                deviation_before,
                policy.name,
                len(action),
                action.switch_count,
            )

        error = None
        triple_costs = [migration_cost(scenario.cost_model, topology, tr) for tr in action]
        round_cost = math.fsum(triple_costs)
        try:
            topology = apply_action(topology, action)
        except StaleActionError as e:
            logger.warning("Round %d: rejected stale action: %s", t, e)
            error = str(e)
            action = MigrationAction()
            triple_costs = []
            round_cost = 0.0

        cumulative += round_cost
        shares: dict[int, list[float]] = {c: [] for c in topology.controller_ids()}
        for triple, cost in zip(action, triple_costs):
            shares[triple.out_domain].append(cost / 2)
            shares[triple.in_domain].append(cost / 2)
        moved = {s for triple in action for s in triple.switches}
        after = load_ratios(topology)

        records.append(
            RoundRecord(
                round=t,
                loads={
                    c: after[c] * topology.controller(c).capacity for c in after
                },
                ratios=after,
                deviation_before=deviation_before,
                deviation=discrete_coefficient_all(topology),
                mean_delay=mean_packet_in_delay(scenario.delay_model, topology, moved),
                migrations=action.triples,
                round_cost=round_cost,
                cumulative_cost=cumulative,
                triggered=triggered,
                action_error=error,
                controller_costs={c: math.fsum(v) for c, v in shares.items()},
            )
        )

    logger.info(
        "Finished %s under %s: final D=%.4f, cumulative cost %.1f.",
        scenario.name,
        policy.name,
        records[-1].deviation,
        cumulative,
    )
    return records


def records_to_table(
    records: Sequence[RoundRecord], controller_ids: Iterable[int] | None = None
) -> pa.Table:
    """
    Per-round metrics as a PyArrow table, with columns `round`, one `R_<id>`
    load-ratio column per controller, `D`, `mean_delay`, `migrations` (number of
    switches moved), `round_cost`, `cum_cost`, and one `cost_<id>` column per
    controller holding its cumulative share of the migration cost.
    """
    if controller_ids is None:
        controller_ids = sorted(records[0].ratios) if records else []
    controller_ids = list(controller_ids)

    columns: dict[str, pa.Array] = {
        "round": pa.array([r.round for r in records], type=pa.int64())
    }
    for c in controller_ids:
        columns[f"R_{c}"] = pa.array([r.ratios[c] for r in records], type=pa.float64())
    columns["D"] = pa.array([r.deviation for r in records], type=pa.float64())
    columns["mean_delay"] = pa.array([r.mean_delay for r in records], type=pa.float64())
    columns["migrations"] = pa.array(
        [r.migrated_switches for r in records], type=pa.int64()
    )
    columns["round_cost"] = pa.array([r.round_cost for r in records], type=pa.float64())
    columns["cum_cost"] = pa.array(
        [r.cumulative_cost for r in records], type=pa.float64()
    )
    for c in controller_ids:
        running = np.cumsum([r.controller_costs.get(c, 0.0) for r in records], dtype=float)
        columns[f"cost_{c}"] = pa.array(running, type=pa.float64())

    return pa.table(columns)
