import numpy as np
import pytest

from conftest import make_topology
from sdnbalance import CostModel, MigrationTriple, Topology
from sdnbalance.model import deviation_coefficient, load_ratio, migration_efficiency
from sdnbalance.selection import (
    CandidatePair,
    CandidateTriple,
    build_candidate_set,
    eligible_switches,
    predict_pair_ratios,
    select_migrating_switches,
    select_migration_domains,
)


def pair_for(topology: Topology, out_domain: int, in_domain: int) -> CandidatePair:
    return CandidatePair(
        out_domain,
        in_domain,
        deviation_coefficient([load_ratio(topology, out_domain), load_ratio(topology, in_domain)]),
    )


class TestSelectMigrationDomains:
    def test_single_pair(self, skewed_topology):
        pairs = select_migration_domains(skewed_topology)

        assert [(p.out_domain, p.in_domain) for p in pairs] == [(1, 2)]
        assert pairs[0].pair_deviation == pytest.approx(0.8)

    def test_balanced(self, balanced_topology):
        assert select_migration_domains(balanced_topology) == []

    def test_shared_in_domain(self, shared_in_topology):
        pairs = select_migration_domains(shared_in_topology)

        assert [(p.out_domain, p.in_domain) for p in pairs] == [(1, 3), (2, 3)]
        assert all(p.pair_deviation == pytest.approx(1.0) for p in pairs)

    def test_needs_two_controllers(self):
        topology = make_topology(capacities={1: 10}, owners={1: 1}, rates={1: 5})
        with pytest.raises(ValueError):
            select_migration_domains(topology)

    def test_ordering(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = 6
            topology = make_topology(
                capacities={c: 100 for c in range(1, n + 1)},
                owners={s: (s - 1) % n + 1 for s in range(1, 2 * n + 1)},
                rates={s: float(rng.uniform(0, 60)) for s in range(1, 2 * n + 1)},
            )
            pairs = select_migration_domains(topology)
            keys = [(-p.pair_deviation, p.out_domain, p.in_domain) for p in pairs]
            assert keys == sorted(keys)
            for p in pairs:
                assert load_ratio(topology, p.out_domain) > load_ratio(topology, p.in_domain)


class TestSelectMigratingSwitches:
    def test_worked_example(self, skewed_topology):
        triple = select_migrating_switches(skewed_topology, pair_for(skewed_topology, 1, 2))

        assert isinstance(triple, CandidateTriple)
        assert triple.switches == (1,)
        assert triple.predicted_pair_deviation == pytest.approx(0.0, abs=1e-12)
        assert triple.predicted_in_ratio == pytest.approx(0.5)
        # 1 base + 2 hops to C2 + 1 sync.
        assert triple.migration_cost == 4

    def test_eligibility(self, skewed_topology):
        # Efficiencies 40, 15, 20 against a mean of 25.
        assert eligible_switches(skewed_topology, 1) == [1]

    def test_boundary_efficiency_is_eligible(self):
        topology = make_topology(
            capacities={1: 100, 2: 100},
            owners={1: 1, 2: 1, 3: 2},
            rates={1: 30, 2: 30, 3: 0},
        )
        # Both efficiencies equal the mean.
        assert eligible_switches(topology, 1) == [1, 2]

        triple = select_migrating_switches(topology, pair_for(topology, 1, 2))
        assert triple.switches == (1,)

    def test_overload_guard(self):
        topology = make_topology(
            capacities={1: 100, 2: 100, 3: 100},
            owners={1: 1, 2: 1, 3: 2},
            rates={1: 60, 2: 60, 3: 50},
        )
        # Equal switches; moving either pushes C2 to 1.1.
        assert select_migrating_switches(topology, pair_for(topology, 1, 2)) is None

    def test_no_switches(self, shared_in_topology, caplog):
        empty = shared_in_topology.migrate([MigrationTriple(3, 1, (5,))])
        with caplog.at_level("WARNING"):
            assert select_migrating_switches(empty, CandidatePair(3, 2, 1.0)) is None
        assert "owns no switches" in caplog.text

    def test_greedy_extension(self):
        topology = make_topology(
            capacities={1: 100, 2: 100},
            owners={1: 1, 2: 1, 3: 1, 4: 1, 5: 2},
            rates={1: 20, 2: 20, 3: 20, 4: 20, 5: 0},
        )
        # Ratios 0.8 / 0.0: two moves balance the pair, a third overshoots.
        triple = select_migrating_switches(topology, pair_for(topology, 1, 2))

        assert triple.switches == (1, 2)
        assert triple.predicted_pair_deviation == pytest.approx(0.0, abs=1e-12)

    def test_cost_model(self, skewed_topology):
        cost = CostModel(per_switch_base=0, per_hop=2, sync_penalty=0)
        triple = select_migrating_switches(skewed_topology, pair_for(skewed_topology, 1, 2), cost)
        assert triple.migration_cost == 4

    def test_candidate_must_improve(self):
        with pytest.raises(ValueError):
            CandidateTriple(CandidatePair(1, 2, 0.5), (1,), 0.5, 3.0)


class TestBuildCandidateSet:
    def test_worked_example(self, skewed_topology):
        candidates = build_candidate_set(skewed_topology)

        assert [c.triple for c in candidates] == [MigrationTriple(1, 2, (1,))]

    def test_balanced(self, balanced_topology):
        assert build_candidate_set(balanced_topology) == []

    def test_shared_in_domain_keeps_both(self, shared_in_topology):
        candidates = build_candidate_set(shared_in_topology)
        assert [(c.out_domain, c.in_domain) for c in candidates] == [(1, 3), (2, 3)]

    def test_deterministic(self, shared_in_topology):
        assert build_candidate_set(shared_in_topology) == build_candidate_set(shared_in_topology)


def _oracle(topology: Topology, pair: CandidatePair) -> float | None:
    "Minimum D' over every guarded, improving prefix of the eligible switches."
    order = eligible_switches(topology, pair.out_domain)
    best = None
    for k in range(1, len(order) + 1):
        out_ratio, in_ratio = predict_pair_ratios(topology, pair, order[:k])
        if in_ratio > 1:
            continue
        d = deviation_coefficient([out_ratio, in_ratio])
        if d < pair.pair_deviation and (best is None or d < best):
            best = d
    return best


class TestOracleEquivalence:
    def test_greedy_matches_exhaustive_prefix_search(self):
        rng = np.random.default_rng(20240601)
        misses = []

        for i in range(1000):
            n = int(rng.integers(1, 9))
            out_capacity = float(rng.uniform(50, 300))
            in_capacity = float(rng.uniform(50, 300))
            rates = {s: float(rng.uniform(0, 80)) for s in range(1, n + 1)}
            in_load = float(rng.uniform(0, 0.9)) * in_capacity
            owners = {s: 1 for s in rates} | {n + 1: 2}
            rates[n + 1] = in_load
            hops = {(s, c): int(rng.integers(1, 5)) for s in owners for c in (1, 2)}

            topology = Topology.from_mappings({1: out_capacity, 2: in_capacity}, owners, rates, hops)
            if not load_ratio(topology, 1) > load_ratio(topology, 2):
                continue

            pair = pair_for(topology, 1, 2)
            greedy = select_migrating_switches(topology, pair)
            oracle = _oracle(topology, pair)

            if greedy is None or oracle is None:
                if greedy is not oracle:
                    misses.append(i)
                continue

            # Every prefix the greedy search keeps is efficiency-sorted.
            efficiencies = [migration_efficiency(topology, 1, s) for s in greedy.switches]
            assert efficiencies == sorted(efficiencies, reverse=True)
            assert greedy.predicted_in_ratio <= 1

            if abs(greedy.predicted_pair_deviation - oracle) > 1e-12:
                misses.append(i)

        assert misses == []
