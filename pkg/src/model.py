"""
Load, balance, and migration-efficiency arithmetic over `Topology` snapshots.

All functions are pure. Ratios are 64-bit floats and no comparison in this
package uses a tolerance.
"""

import math

import numpy as np

from .core import Topology

from typing import Sequence

__all__ = [
    "controller_load",
    "load_ratio",
    "load_ratios",
    "mean_ratio_pair",
    "mean_ratio_all",
    "deviation_coefficient",
    "discrete_coefficient_pair",
    "discrete_coefficient_all",
    "migration_efficiency",
    "mean_migration_efficiency",
]


def controller_load(topology: Topology, controller_id: int) -> float:
    """
    Sum of the packet-in rates of the switches a controller owns.
    """
    controller = topology.controller(controller_id)
    return math.fsum(topology.switches[s].packet_in_rate for s in controller.switches)


def load_ratio(topology: Topology, controller_id: int) -> float:
    """
    Controller load divided by its capacity. Values above 1 mean the controller
    is overloaded.
    """
    return controller_load(topology, controller_id) / topology.controller(
        controller_id
    ).capacity


def load_ratios(topology: Topology) -> dict[int, float]:
    "Load ratio of every controller, keyed by id in ascending order."
    return {c: load_ratio(topology, c) for c in topology.controller_ids()}


def mean_ratio_pair(topology: Topology, c_i: int, c_j: int) -> float:
    return (load_ratio(topology, c_i) + load_ratio(topology, c_j)) / 2


def mean_ratio_all(topology: Topology) -> float:
    """
    Mean load ratio over all controllers.

    Raises
    ------
    ValueError
        If the topology has no controllers.
    """
    ratios = list(load_ratios(topology).values())
    if not ratios:
        raise ValueError("Mean load ratio is undefined for a topology without controllers.")
    return float(np.mean(ratios))


def deviation_coefficient(ratios: Sequence[float]) -> float:
    """
    Population standard deviation of `ratios` divided by their mean (the
    coefficient of variation). This is the discrete coefficient used for both
    controller pairs and the whole control plane; smaller is more balanced.

    An idle plane (all ratios 0) is defined as perfectly balanced, as is any set
    of identical ratios.

    Parameters
    ----------
    ratios
        Load ratios, all >= 0.
    """
    values = np.asarray(ratios, dtype=np.float64)
    if values.size == 0:
        raise ValueError("Deviation coefficient needs at least one ratio.")

    # Exact zero for identical inputs, which `np.std` doesn't guarantee.
    if np.all(values == values[0]):
        return 0.0

    mean = values.mean()
    if mean == 0:
        return 0.0
    return float(values.std() / mean)


def discrete_coefficient_pair(topology: Topology, c_i: int, c_j: int) -> float:
    return deviation_coefficient(
        [load_ratio(topology, c_i), load_ratio(topology, c_j)]
    )


def discrete_coefficient_all(topology: Topology) -> float:
    """
    Discrete coefficient of all controllers' load ratios: the load balancing
    rate of the whole control plane.
    """
    ratios = list(load_ratios(topology).values())
    if not ratios:
        raise ValueError("Discrete coefficient is undefined for a topology without controllers.")
    return deviation_coefficient(ratios)


def migration_efficiency(topology: Topology, controller_id: int, switch_id: int) -> float:
    """
    Packet-in rate of a switch per hop to its current controller: how much load
    migrating it sheds per unit of distance.

    Raises
    ------
    ValueError
        If the switch isn't owned by `controller_id`.
    """
    if topology.owner(switch_id) != controller_id:
        raise ValueError(
            f"Switch {switch_id} is owned by controller {topology.owner(switch_id)}, not {controller_id}."
        )
    return topology.switch(switch_id).packet_in_rate / topology.hop_count(
        switch_id, controller_id
    )


def mean_migration_efficiency(topology: Topology, controller_id: int) -> float:
    """
    Mean migration efficiency over the switches a controller owns.

    Raises
    ------
    ValueError
        If the controller owns no switches.
    """
    owned = topology.owned_switches(controller_id)
    if not owned:
        raise ValueError(
            f"Controller {controller_id} owns no switches, so it has no migration efficiency."
        )
    return math.fsum(
        migration_efficiency(topology, controller_id, s) for s in owned
    ) / len(owned)
