"""
Comparison policies: deviation-coefficient migration (DC-LBM), minimum
migration overhead (MMO-LBM), and no migration at all.

Both baselines use the same trigger as RL-LBM (a controller above the mean load
ratio) and respect the same constraints: each controller takes part in at most
one triple per round, and no move may push its target above a load ratio of 1.
"""

from __future__ import annotations
from enum import Enum
import logging

import numpy as np

from .core import MigrationAction, MigrationPolicy, MigrationTriple, Topology
from .costs import CostModel
from .model import (
    controller_load,
    deviation_coefficient,
    discrete_coefficient_all,
    load_ratios,
    mean_ratio_all,
)
from .rl import RlConfig, RlLbm

__all__ = [
    "PolicyKind",
    "dc_lbm_decide",
    "mmo_lbm_decide",
    "DcLbm",
    "MmoLbm",
    "NoMigration",
    "make_policy",
]

logger = logging.getLogger(__name__)


class PolicyKind(str, Enum):
    RL_LBM = "RL_LBM"
    DC_LBM = "DC_LBM"
    MMO_LBM = "MMO_LBM"
    NONE = "NONE"

    @classmethod
    def parse(cls, value: str | PolicyKind) -> PolicyKind:
        """
        Parse a policy name, case-insensitively and accepting `-` for `_`
        (e.g. `"rl-lbm"`).
        """
        if isinstance(value, cls):
            return value
        try:
            return cls[value.strip().upper().replace("-", "_")]
        except KeyError:
            raise ValueError(
                f"Unknown policy {value!r}; expected one of {[k.value for k in cls]}."
            ) from None


def _overloaded(topology: Topology, ratios: dict[int, float]) -> list[int]:
    "Controllers above the mean load ratio, most loaded first."
    mean = mean_ratio_all(topology)
    return sorted((c for c, r in ratios.items() if r > mean), key=lambda c: (-ratios[c], c))


def dc_lbm_decide(topology: Topology) -> MigrationAction:
    """
    For each controller above the mean load ratio (most loaded first), move its
    single highest-rate switch to the least-loaded controller, provided the
    pair's discrete coefficient exceeds the whole plane's.
    """
    if len(topology.controllers) < 2:
        return MigrationAction()

    ratios = load_ratios(topology)
    deviation = discrete_coefficient_all(topology)

    used: set[int] = set()
    triples = []
    for source in _overloaded(topology, ratios):
        if source in used:
            continue

        targets = [c for c in ratios if c != source and c not in used]
        if not targets:
            break
        target = min(targets, key=lambda c: (ratios[c], c))

        if not deviation_coefficient([ratios[source], ratios[target]]) > deviation:
            continue

        owned = topology.owned_switches(source)
        if not owned:
            continue
        # Highest rate, ties to the lowest id.
        switch = min(owned, key=lambda s: (-topology.switch(s).packet_in_rate, s))

        rate = topology.switch(switch).packet_in_rate
        capacity = topology.controller(target).capacity
        if (controller_load(topology, target) + rate) / capacity > 1:
            logger.debug(
                "DC-LBM: moving switch %d to %d would overload it; skipping.", switch, target
            )
            continue

        triples.append(MigrationTriple(source, target, (switch,)))
        used.update((source, target))

    return MigrationAction(tuple(triples))


def mmo_lbm_decide(topology: Topology) -> MigrationAction:
    """
    For each controller above the mean load ratio (most loaded first), move
    switches to the neighbor controller with the fewest hops until the source
    is back at or under the mean.

    The target is the fewest-hop available controller of the source's closest
    switch; after that, only switches for which the target is also a fewest-hop
    controller are moved, closest first.
    """
    if len(topology.controllers) < 2:
        return MigrationAction()

    ratios = load_ratios(topology)
    mean = mean_ratio_all(topology)

    used: set[int] = set()
    triples = []
    for source in _overloaded(topology, ratios):
        if source in used:
            continue

        available = [c for c in ratios if c != source and c not in used]
        owned = topology.owned_switches(source)
        if not available or not owned:
            continue

        def min_hops(s: int) -> int:
            return min(topology.hop_count(s, c) for c in available)

        order = sorted(owned, key=lambda s: (min_hops(s), s))
        target = min(available, key=lambda c: (topology.hop_count(order[0], c), c))

        source_load = controller_load(topology, source)
        source_capacity = topology.controller(source).capacity
        target_load = controller_load(topology, target)
        target_capacity = topology.controller(target).capacity

        moved = []
        for s in order:
            if source_load / source_capacity <= mean:
                break
            if topology.hop_count(s, target) != min_hops(s):
                continue

            rate = topology.switch(s).packet_in_rate
            if (target_load + rate) / target_capacity > 1:
                continue

            moved.append(s)
            source_load -= rate
            target_load += rate

        if moved:
            triples.append(MigrationTriple(source, target, tuple(moved)))
            used.update((source, target))

    return MigrationAction(tuple(triples))


class DcLbm(MigrationPolicy):
    name = PolicyKind.DC_LBM.value

    def __call__(self, topology: Topology, rng: np.random.Generator) -> MigrationAction:
        return dc_lbm_decide(topology)


class MmoLbm(MigrationPolicy):
    name = PolicyKind.MMO_LBM.value

    def __call__(self, topology: Topology, rng: np.random.Generator) -> MigrationAction:
        return mmo_lbm_decide(topology)


class NoMigration(MigrationPolicy):
    "Control group: never migrates."

    name = PolicyKind.NONE.value

    def __call__(self, topology: Topology, rng: np.random.Generator) -> MigrationAction:
        return MigrationAction()


def make_policy(
    kind: PolicyKind | str,
    rl_config: RlConfig | None = None,
    cost_model: CostModel | None = None,
) -> MigrationPolicy:
    """
    Build the policy for a `PolicyKind`. `rl_config` and `cost_model` only
    matter for `RL_LBM`.
    """
    match PolicyKind.parse(kind):
        case PolicyKind.RL_LBM:
            return RlLbm(rl_config, cost_model)
        case PolicyKind.DC_LBM:
            return DcLbm()
        case PolicyKind.MMO_LBM:
            return MmoLbm()
        case PolicyKind.NONE:
            return NoMigration()
