"""
Candidate generation for switch migration: pair overloaded controllers with
idle ones, then pick the switches to move between each pair.
"""

from dataclasses import dataclass
from itertools import combinations
import logging
import math

from .core import MigrationTriple, Topology
from .costs import CostModel, migration_cost
from .model import (
    deviation_coefficient,
    discrete_coefficient_all,
    load_ratio,
    load_ratios,
    mean_migration_efficiency,
    mean_ratio_all,
    migration_efficiency,
)

from typing import Sequence

__all__ = [
    "CandidatePair",
    "CandidateTriple",
    "select_migration_domains",
    "predict_pair_ratios",
    "eligible_switches",
    "select_migrating_switches",
    "build_candidate_set",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidatePair:
    """
    An (out-domain, in-domain) pairing, and the discrete coefficient of the
    pair's load ratios before any migration.
    """

    out_domain: int
    in_domain: int
    pair_deviation: float

    def __post_init__(self):
        if self.out_domain == self.in_domain:
            raise ValueError("A candidate pair needs two distinct controllers.")
        if self.pair_deviation < 0:
            raise ValueError(f"Pair deviation must be >= 0, got {self.pair_deviation}.")


@dataclass(frozen=True)
class CandidateTriple:
    """
    A candidate migration: a `CandidatePair` plus the switches to move, the
    pair deviation predicted after the move, and the move's cost.
    """

    pair: CandidatePair
    switches: tuple[int, ...]
    predicted_pair_deviation: float
    migration_cost: float
    predicted_in_ratio: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "switches", tuple(self.switches))
        if not self.switches:
            raise ValueError("A candidate triple must move at least one switch.")
        if not self.predicted_pair_deviation < self.pair.pair_deviation:
            raise ValueError(
                "A candidate triple must improve its pair: "
                f"{self.predicted_pair_deviation} >= {self.pair.pair_deviation}."
            )

    @property
    def out_domain(self) -> int:
        return self.pair.out_domain

    @property
    def in_domain(self) -> int:
        return self.pair.in_domain

    @property
    def triple(self) -> MigrationTriple:
        return MigrationTriple(self.pair.out_domain, self.pair.in_domain, self.switches)


def select_migration_domains(topology: Topology) -> list[CandidatePair]:
    """
    Pair up migrate-out and migrate-in domains.

    For every unordered pair of controllers, the pair is emitted (with the
    higher-ratio controller as the out-domain) when its discrete coefficient is
    above the whole plane's, and the higher-ratio controller is above the mean
    load ratio.

    Returns
    -------
    list[CandidatePair]
        Ordered by descending pair deviation, then ascending (out, in) ids.
    """
    if len(topology.controllers) < 2:
        raise ValueError("Migration domain selection needs at least 2 controllers.")

    ratios = load_ratios(topology)
    mean = mean_ratio_all(topology)
    deviation = discrete_coefficient_all(topology)

    pairs = []
    for c_i, c_j in combinations(topology.controller_ids(), 2):
        if ratios[c_i] == ratios[c_j]:
            continue

        out_domain, in_domain = (c_i, c_j) if ratios[c_i] > ratios[c_j] else (c_j, c_i)
        pair_deviation = deviation_coefficient([ratios[c_i], ratios[c_j]])

        if pair_deviation > deviation and ratios[out_domain] > mean:
            pairs.append(CandidatePair(out_domain, in_domain, pair_deviation))

    return sorted(pairs, key=lambda p: (-p.pair_deviation, p.out_domain, p.in_domain))


def predict_pair_ratios(
    topology: Topology, pair: CandidatePair, switches: Sequence[int]
) -> tuple[float, float]:
    """
    Load ratios of the pair's (out, in) controllers if `switches` were moved
    from the out-domain to the in-domain.
    """
    moved = math.fsum(topology.switch(s).packet_in_rate for s in switches)
    out_ratio = load_ratio(topology, pair.out_domain) - moved / topology.controller(
        pair.out_domain
    ).capacity
    in_ratio = load_ratio(topology, pair.in_domain) + moved / topology.controller(
        pair.in_domain
    ).capacity
    return out_ratio, in_ratio


def eligible_switches(topology: Topology, controller_id: int) -> list[int]:
    """
    Switches of a controller whose migration efficiency is at least the
    controller's mean, ordered by descending efficiency then ascending id.
    """
    mean = mean_migration_efficiency(topology, controller_id)
    efficiency = {
        s: migration_efficiency(topology, controller_id, s)
        for s in topology.owned_switches(controller_id)
    }
    return sorted(
        (s for s, e in efficiency.items() if e >= mean),
        key=lambda s: (-efficiency[s], s),
    )


def select_migrating_switches(
    topology: Topology, pair: CandidatePair, cost_model: CostModel | None = None
) -> CandidateTriple | None:
    """
    Choose the switches to migrate for a candidate pair.

    Eligible switches (efficiency at least the out-domain's mean) are taken in
    descending efficiency order, extending the migrated set while each extension
    strictly lowers the pair's predicted deviation. The search stops at the
    first extension that doesn't improve, or that would push the in-domain's
    load ratio above 1.

    Parameters
    ----------
    topology
        Current snapshot.
    pair
        Pair from `select_migration_domains()`.
    cost_model
        Used to price the resulting triple. Defaults to `CostModel()`.

    Returns
    -------
    CandidateTriple | None
        `None` if the out-domain owns no switches, or if no eligible switch
        improves the pair without overloading the in-domain.
    """
    cost_model = cost_model or CostModel()

    if not topology.owned_switches(pair.out_domain):
        logger.warning(
            "Controller %d owns no switches; nothing to migrate to %d.",
            pair.out_domain,
            pair.in_domain,
        )
        return None

    best = pair.pair_deviation
    chosen: list[int] = []
    chosen_in_ratio = load_ratio(topology, pair.in_domain)

    for s in eligible_switches(topology, pair.out_domain):
        out_ratio, in_ratio = predict_pair_ratios(topology, pair, [*chosen, s])
        if in_ratio > 1:
            break

        predicted = deviation_coefficient([out_ratio, in_ratio])
        if not predicted < best:
            break

        chosen.append(s)
        best = predicted
        chosen_in_ratio = in_ratio

    if not chosen:
        return None

    return CandidateTriple(
        pair=pair,
        switches=tuple(chosen),
        predicted_pair_deviation=best,
        migration_cost=migration_cost(
            cost_model,
            topology,
            MigrationTriple(pair.out_domain, pair.in_domain, tuple(chosen)),
        ),
        predicted_in_ratio=chosen_in_ratio,
    )


def build_candidate_set(
    topology: Topology, cost_model: CostModel | None = None
) -> list[CandidateTriple]:
    """
    Candidate triples for every migration-domain pair that yields one, in the
    pair order of `select_migration_domains()`.

    Controllers may appear in several candidates; resolving those conflicts is
    left to the migration decision.
    """
    candidates = []
    for pair in select_migration_domains(topology):
        triple = select_migrating_switches(topology, pair, cost_model)
        if triple is not None:
            candidates.append(triple)

    logger.debug("Built %d candidate triples for %r.", len(candidates), topology)
    return candidates
