import numpy as np
import pytest
from sdnbalance import Topology
from sdnbalance.experiments import bundled_scenario


def make_topology(
    capacities: dict[int, float],
    owners: dict[int, int],
    rates: dict[int, float],
    hops: dict[tuple[int, int], int] | None = None,
) -> Topology:
    """
    Build a topology; unspecified hop counts are 1 to the owner and 2 elsewhere.
    """
    full_hops = {
        (s, c): 1 if owners[s] == c else 2 for s in owners for c in capacities
    }
    full_hops.update(hops or {})
    return Topology.from_mappings(capacities, owners, rates, full_hops)


def random_topology(
    rng: np.random.Generator,
    n_controllers: tuple[int, int] = (3, 8),
    n_switches: tuple[int, int] = (6, 24),
) -> Topology:
    """
    A random topology with unit-ish capacities and skewed switch rates, so
    some controllers end up overloaded relative to others.
    """
    n_c = int(rng.integers(n_controllers[0], n_controllers[1] + 1))
    n_s = int(rng.integers(max(n_switches[0], n_c), n_switches[1] + 1))

    capacities = {c: float(rng.uniform(500, 1500)) for c in range(1, n_c + 1)}
    owners = {s: int(rng.integers(1, n_c + 1)) for s in range(1, n_s + 1)}
    heat = {c: float(rng.uniform(0.1, 2.0)) for c in capacities}
    rates = {s: float(rng.uniform(0, 150) * heat[owners[s]]) for s in owners}
    hops = {(s, c): int(rng.integers(1, 6)) for s in owners for c in capacities}

    return Topology.from_mappings(capacities, owners, rates, hops)


@pytest.fixture
def skewed_topology():
    """
    Three equal-capacity controllers at load ratios 0.9, 0.1 and 0.5.

    C1 owns S1 (rate 40, 1 hop), S2 (30, 2 hops) and S3 (20, 1 hop).
    """
    return make_topology(
        capacities={1: 100, 2: 100, 3: 100},
        owners={1: 1, 2: 1, 3: 1, 4: 2, 5: 3},
        rates={1: 40, 2: 30, 3: 20, 4: 10, 5: 50},
        hops={(2, 1): 2},
    )


@pytest.fixture
def balanced_topology():
    return make_topology(
        capacities={1: 100, 2: 200, 3: 50},
        owners={1: 1, 2: 1, 3: 2, 4: 2, 5: 3},
        rates={1: 20, 2: 10, 3: 40, 4: 20, 5: 15},
    )


@pytest.fixture
def shared_in_topology():
    """
    Ratios 0.6, 0.6 and 0.0: both loaded controllers pair with idle C3.
    """
    return make_topology(
        capacities={1: 100, 2: 100, 3: 100},
        owners={1: 1, 2: 1, 3: 2, 4: 2, 5: 3},
        rates={1: 40, 2: 20, 3: 35, 4: 25, 5: 0},
    )


@pytest.fixture
def fig4():
    return bundled_scenario("fig4")
