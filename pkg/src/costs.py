from dataclasses import dataclass
import math

from .core import MigrationTriple, Topology
from .model import load_ratio

from typing import Collection

__all__ = [
    "CostModel",
    "DelayModel",
    "migration_cost",
    "mean_packet_in_delay",
]


@dataclass(frozen=True)
class CostModel:
    """
    Cost of executing a migration triple, in abstract cost units.

    Parameters
    ----------
    per_switch_base
        Signaling cost for each migrated switch (role change, flow-mod).
    per_hop
        Cost per hop between a migrated switch and its new controller.
    sync_penalty
        Fixed cost per triple for synchronizing controller state.
    """

    per_switch_base: float = 1.0
    per_hop: float = 1.0
    sync_penalty: float = 1.0

    def __post_init__(self):
        values = (self.per_switch_base, self.per_hop, self.sync_penalty)
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise ValueError(f"Cost model parameters must be finite and >= 0, got {values}.")
        if not any(values):
            raise ValueError("Cost model parameters can't all be zero.")


def migration_cost(cost_model: CostModel, topology: Topology, triple: MigrationTriple) -> float:
    """
    Total cost of a triple: a per-switch base plus a per-hop charge to the
    in-domain for every migrated switch, plus one synchronization penalty.
    """
    return (
        math.fsum(
            cost_model.per_switch_base
            + cost_model.per_hop * topology.hop_count(s, triple.in_domain)
            for s in triple.switches
        )
        + cost_model.sync_penalty
    )


@dataclass(frozen=True)
class DelayModel:
    """
    Packet-in processing delay as a function of a controller's load ratio.

    Below saturation the delay is `base_service_time / max(min_headroom, 1 - R)`;
    at or above `R = 1` the controller is saturated and the delay is
    `saturation_delay`. Switches migrated in a round pay `handoff_penalty` on
    top, for that round only.
    """

    base_service_time: float = 1.0
    min_headroom: float = 0.05
    saturation_delay: float = 50.0
    handoff_penalty: float = 2.0

    def __post_init__(self):
        if not self.base_service_time > 0:
            raise ValueError("`base_service_time` must be > 0.")
        if not self.min_headroom > 0:
            raise ValueError("`min_headroom` must be > 0.")
        if self.handoff_penalty < 0:
            raise ValueError("`handoff_penalty` must be >= 0.")
        if self.saturation_delay < self.base_service_time / self.min_headroom:
            raise ValueError(
                "`saturation_delay` must be at least the largest unsaturated delay "
                f"({self.base_service_time / self.min_headroom})."
            )

    def delay(self, ratio: float) -> float:
        if ratio >= 1:
            return self.saturation_delay
        return self.base_service_time / max(self.min_headroom, 1 - ratio)


def mean_packet_in_delay(
    delay_model: DelayModel, topology: Topology, moved: Collection[int] = ()
) -> float:
    """
    Mean packet-in delay across switches, weighted by packet-in rate.

    Each switch sees its controller's delay, plus the handoff penalty if it's in
    `moved`. With no traffic at all, switches are weighted equally.
    """
    if not topology.switches:
        return 0.0

    controller_delay = {
        c: delay_model.delay(load_ratio(topology, c)) for c in topology.controller_ids()
    }
    delays = []
    weights = []
    for s, state in topology.switches.items():
        d = controller_delay[topology.owner(s)]
        if s in moved:
            d += delay_model.handoff_penalty
        delays.append(d)
        weights.append(state.packet_in_rate)

    total = math.fsum(weights)
    if total == 0:
        return math.fsum(delays) / len(delays)
    return math.fsum(d * w for d, w in zip(delays, weights)) / total
