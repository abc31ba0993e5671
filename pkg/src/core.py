from __future__ import annotations  # For circular/"forward reference" annotations
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
import math

import numpy as np
import pyarrow as pa

from typing import Iterable, Mapping, NewType

__all__ = [
    "ControllerId",
    "SwitchId",
    "ControllerState",
    "SwitchState",
    "Topology",
    "MigrationTriple",
    "MigrationAction",
    "MigrationPolicy",
]

ControllerId = NewType("ControllerId", int)
SwitchId = NewType("SwitchId", int)


@dataclass(frozen=True)
class ControllerState:
    """
    A controller in the control plane.

    Parameters
    ----------
    id
        Controller identifier, unique within a `Topology`.
    capacity
        Load capacity in packet-in messages per second. Must be positive.
    switches
        Ids of the switches this controller currently manages.
    """

    id: int
    capacity: float
    switches: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if not (math.isfinite(self.capacity) and self.capacity > 0):
            raise ValueError(
                f"Controller {self.id} must have a positive capacity, got {self.capacity}."
            )
        # Accept any iterable of ids, but always store a frozenset.
        object.__setattr__(self, "switches", frozenset(self.switches))


@dataclass(frozen=True)
class SwitchState:
    """
    A switch, characterized by the rate at which it emits packet-in messages.

    Parameters
    ----------
    id
        Switch identifier, unique within a `Topology`.
    packet_in_rate
        Packet-in messages per second sent to the owning controller.
    """

    id: int
    packet_in_rate: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.packet_in_rate) and self.packet_in_rate >= 0):
            raise ValueError(
                f"Switch {self.id} must have a non-negative packet-in rate, got {self.packet_in_rate}."
            )


@dataclass(frozen=True)
class MigrationTriple:
    """
    One migration decision: move `switches` from `out_domain` to `in_domain`.
    """

    out_domain: int
    in_domain: int
    switches: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "switches", tuple(self.switches))

        if self.out_domain == self.in_domain:
            raise ValueError(
                f"Out-domain and in-domain must differ, both are {self.out_domain}."
            )
        if not self.switches:
            raise ValueError("A migration triple must move at least one switch.")
        if len(set(self.switches)) != len(self.switches):
            raise ValueError(f"Duplicate switches in triple: {self.switches}.")


@dataclass(frozen=True)
class MigrationAction:
    """
    The set of migration triples executed together in one round.

    Raises `ValueError` on construction if any controller appears in more than
    one role (or twice in the same role) across the triples, or if any switch
    is moved twice.
    """

    triples: tuple[MigrationTriple, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "triples", tuple(self.triples))

        controllers = [c for t in self.triples for c in (t.out_domain, t.in_domain)]
        if len(set(controllers)) != len(controllers):
            raise ValueError(
                f"Migration conflict: controllers appear in more than one role: {controllers}."
            )

        switches = [s for t in self.triples for s in t.switches]
        if len(set(switches)) != len(switches):
            raise ValueError(f"Migration conflict: switches moved twice: {switches}.")

    def __len__(self) -> int:
        "Get the number of triples."
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)

    @property
    def switch_count(self) -> int:
        return sum(len(t.switches) for t in self.triples)


class Topology:
    """
    A snapshot of the control plane: controllers, switches, switch ownership,
    and the hop count from every switch to every controller.

    Snapshots are never modified in place; `with_rates()` and `migrate()`
    return new `Topology` objects.

    Parameters
    ----------
    controllers
        Controllers, each listing the switches it owns. Switch sets must be
        disjoint and together cover every switch.
    switches
        Switches and their packet-in rates.
    hops
        Dense hop matrix, keyed by `(switch_id, controller_id)`. Every pair must
        be present with a hop count of at least 1, since a migration may re-home
        any switch to any controller.
    """

    def __init__(
        self,
        controllers: Iterable[ControllerState],
        switches: Iterable[SwitchState],
        hops: Mapping[tuple[int, int], int],
    ):
        controllers = list(controllers)
        switches = list(switches)

        self.controllers: dict[int, ControllerState] = {
            c.id: c for c in sorted(controllers, key=lambda c: c.id)
        }
        self.switches: dict[int, SwitchState] = {
            s.id: s for s in sorted(switches, key=lambda s: s.id)
        }
        if len(self.controllers) != len(controllers):
            raise ValueError("Controller ids must be unique.")
        if len(self.switches) != len(switches):
            raise ValueError("Switch ids must be unique.")

        self._owner: dict[int, int] = {}
        for c in self.controllers.values():
            for s in c.switches:
                if s not in self.switches:
                    raise KeyError(f"Controller {c.id} owns unknown switch {s}.")
                if s in self._owner:
                    raise ValueError(
                        f"Switch {s} is owned by both controller {self._owner[s]} and {c.id}."
                    )
                self._owner[s] = c.id

        orphans = sorted(set(self.switches) - set(self._owner))
        if orphans:
            raise ValueError(f"Switches without an owning controller: {orphans}.")

        self.hops: dict[tuple[int, int], int] = {}
        for s in self.switches:
            for c in self.controllers:
                if (s, c) not in hops:
                    raise ValueError(
                        f"Hop matrix is missing the (switch {s}, controller {c}) pair."
                    )
                h = hops[(s, c)]
                if int(h) != h or h < 1:
                    raise ValueError(
                        f"Hop count for (switch {s}, controller {c}) must be an integer >= 1, got {h}."
                    )
                self.hops[(s, c)] = int(h)

    @classmethod
    def from_mappings(
        cls,
        capacities: Mapping[int, float],
        owners: Mapping[int, int],
        rates: Mapping[int, float],
        hops: Mapping[tuple[int, int], int],
    ) -> Topology:
        """
        Build a topology from plain `{id: value}` mappings.

        Parameters
        ----------
        capacities
            Controller id -> capacity.
        owners
            Switch id -> owning controller id.
        rates
            Switch id -> packet-in rate. Switches missing here get a rate of 0.
        hops
            `(switch_id, controller_id)` -> hop count.
        """
        for s, c in owners.items():
            if c not in capacities:
                raise KeyError(f"Switch {s} is owned by unknown controller {c}.")

        controllers = [
            ControllerState(
                id=c,
                capacity=cap,
                switches=frozenset(s for s, o in owners.items() if o == c),
            )
            for c, cap in capacities.items()
        ]
        switches = [SwitchState(id=s, packet_in_rate=rates.get(s, 0.0)) for s in owners]

        return cls(controllers, switches, hops)

    def __repr__(self) -> str:
        return f"Topology(controllers={len(self.controllers)}, switches={len(self.switches)})"

    def controller(self, controller_id: int) -> ControllerState:
        try:
            return self.controllers[controller_id]
        except KeyError:
            raise KeyError(f"Unknown controller id: {controller_id}") from None

    def switch(self, switch_id: int) -> SwitchState:
        try:
            return self.switches[switch_id]
        except KeyError:
            raise KeyError(f"Unknown switch id: {switch_id}") from None

    def owner(self, switch_id: int) -> int:
        "Get the id of the controller that currently owns a switch."
        try:
            return self._owner[switch_id]
        except KeyError:
            raise KeyError(f"Unknown switch id: {switch_id}") from None

    def hop_count(self, switch_id: int, controller_id: int) -> int:
        try:
            return self.hops[(switch_id, controller_id)]
        except KeyError:
            raise KeyError(
                f"No hop count for (switch {switch_id}, controller {controller_id})."
            ) from None

    def controller_ids(self) -> list[int]:
        return list(self.controllers)

    def switch_ids(self) -> list[int]:
        return list(self.switches)

    def owned_switches(self, controller_id: int) -> list[int]:
        "Ids of the switches owned by a controller, in ascending order."
        return sorted(self.controller(controller_id).switches)

    def with_rates(self, rates: Mapping[int, float]) -> Topology:
        """
        Return a new snapshot with updated packet-in rates. Switches missing from
        `rates` keep their current rate.
        """
        switches = [
            SwitchState(id=s.id, packet_in_rate=rates.get(s.id, s.packet_in_rate))
            for s in self.switches.values()
        ]
        return Topology(self.controllers.values(), switches, self.hops)

    def migrate(self, triples: Iterable[MigrationTriple]) -> Topology:
        """
        Return a new snapshot with switch ownership reassigned according to
        `triples`. Every moved switch must currently be owned by its triple's
        out-domain.
        """
        owned = {c.id: set(c.switches) for c in self.controllers.values()}

        for t in triples:
            # Both ends must exist.
            self.controller(t.out_domain)
            self.controller(t.in_domain)
            for s in t.switches:
                if s not in owned[t.out_domain]:
                    raise ValueError(
                        f"Switch {s} is not owned by controller {t.out_domain}."
                    )
                owned[t.out_domain].remove(s)
                owned[t.in_domain].add(s)

        controllers = [
            ControllerState(id=c.id, capacity=c.capacity, switches=frozenset(owned[c.id]))
            for c in self.controllers.values()
        ]
        return Topology(controllers, self.switches.values(), self.hops)

    def to_arrow(self) -> pa.Table:
        """
        One row per switch, with its owner, packet-in rate, and hop count to
        that owner.
        """
        ids = self.switch_ids()
        return pa.table(
            {
                "switch": pa.array(ids, type=pa.int64()),
                "controller": pa.array([self._owner[s] for s in ids], type=pa.int64()),
                "packet_in_rate": pa.array(
                    [self.switches[s].packet_in_rate for s in ids], type=pa.float64()
                ),
                "hops": pa.array(
                    [self.hops[(s, self._owner[s])] for s in ids], type=pa.int64()
                ),
            }
        )


class MigrationPolicy(ABC):
    """
    `MigrationPolicy`s decide which switches to migrate in a round.

    A `MigrationPolicy` is a callable object, whose `__call__` method takes a
    `Topology` snapshot and a seeded random generator, and returns a
    `MigrationAction`. Policies must not keep state between calls; all
    randomness comes from the generator passed in.
    """

    name: str = "policy"

    @abstractmethod
    def __call__(self, topology: Topology, rng: np.random.Generator) -> MigrationAction:
        pass
