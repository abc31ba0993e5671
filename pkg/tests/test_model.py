import math

import pytest
from hypothesis import given, strategies as st

from conftest import make_topology
from sdnbalance import ControllerState, MigrationAction, MigrationTriple, SwitchState, Topology
from sdnbalance.model import (
    controller_load,
    deviation_coefficient,
    discrete_coefficient_all,
    discrete_coefficient_pair,
    load_ratio,
    load_ratios,
    mean_migration_efficiency,
    mean_ratio_all,
    mean_ratio_pair,
    migration_efficiency,
)

ratio_lists = st.lists(
    st.one_of(st.just(0.0), st.floats(min_value=1e-6, max_value=5.0)), min_size=1, max_size=12
)


class TestTopology:
    def test_from_mappings(self, skewed_topology):
        assert skewed_topology.controller_ids() == [1, 2, 3]
        assert skewed_topology.owned_switches(1) == [1, 2, 3]
        assert skewed_topology.owner(4) == 2
        assert skewed_topology.hop_count(2, 1) == 2

    def test_rejects_non_positive_capacity(self):
        with pytest.raises(ValueError):
            ControllerState(id=1, capacity=0)

    def test_rejects_negative_rate(self):
        with pytest.raises(ValueError):
            SwitchState(id=1, packet_in_rate=-1)

    def test_rejects_shared_switch(self):
        with pytest.raises(ValueError):
            Topology(
                [ControllerState(1, 10, {1}), ControllerState(2, 10, {1})],
                [SwitchState(1, 1.0)],
                {(1, 1): 1, (1, 2): 1},
            )

    def test_rejects_orphan_switch(self):
        with pytest.raises(ValueError):
            Topology(
                [ControllerState(1, 10, {1})],
                [SwitchState(1, 1.0), SwitchState(2, 1.0)],
                {(1, 1): 1, (2, 1): 1},
            )

    def test_rejects_incomplete_hops(self):
        with pytest.raises(ValueError, match="missing"):
            Topology.from_mappings({1: 10, 2: 10}, {1: 1}, {1: 1.0}, {(1, 1): 1})

    def test_rejects_zero_hops(self):
        with pytest.raises(ValueError):
            Topology.from_mappings({1: 10}, {1: 1}, {1: 1.0}, {(1, 1): 0})

    def test_unknown_owner(self):
        with pytest.raises(KeyError):
            Topology.from_mappings({1: 10}, {1: 2}, {1: 1.0}, {(1, 1): 1})

    def test_unknown_ids(self, skewed_topology):
        with pytest.raises(KeyError):
            skewed_topology.controller(99)
        with pytest.raises(KeyError):
            skewed_topology.owner(99)

    def test_with_rates_returns_new_snapshot(self, skewed_topology):
        updated = skewed_topology.with_rates({1: 5.0})

        assert updated.switch(1).packet_in_rate == 5.0
        assert updated.switch(2).packet_in_rate == 30
        assert skewed_topology.switch(1).packet_in_rate == 40

    def test_migrate_conserves_load(self, skewed_topology):
        before = sum(controller_load(skewed_topology, c) for c in skewed_topology.controller_ids())
        moved = skewed_topology.migrate([MigrationTriple(1, 2, (1,))])
        after = sum(controller_load(moved, c) for c in moved.controller_ids())

        assert moved.owner(1) == 2
        assert moved.owned_switches(1) == [2, 3]
        assert controller_load(moved, 3) == controller_load(skewed_topology, 3)
        assert after == pytest.approx(before)

    def test_migrate_rejects_unowned_switch(self, skewed_topology):
        with pytest.raises(ValueError):
            skewed_topology.migrate([MigrationTriple(2, 3, (1,))])

    def test_to_arrow(self, skewed_topology):
        table = skewed_topology.to_arrow()

        assert table.column_names == ["switch", "controller", "packet_in_rate", "hops"]
        assert table["controller"].to_pylist() == [1, 1, 1, 2, 3]
        assert table["hops"].to_pylist() == [1, 2, 1, 1, 1]


class TestMigrationAction:
    def test_valid(self):
        action = MigrationAction((MigrationTriple(1, 2, (1, 2)), MigrationTriple(3, 4, (5,))))

        assert len(action) == 2
        assert action.switch_count == 3

    def test_controller_in_two_roles(self):
        with pytest.raises(ValueError, match="conflict"):
            MigrationAction((MigrationTriple(1, 2, (1,)), MigrationTriple(2, 3, (5,))))

    def test_shared_in_domain(self):
        with pytest.raises(ValueError, match="conflict"):
            MigrationAction((MigrationTriple(1, 3, (1,)), MigrationTriple(2, 3, (5,))))

    def test_triple_invariants(self):
        with pytest.raises(ValueError):
            MigrationTriple(1, 1, (1,))
        with pytest.raises(ValueError):
            MigrationTriple(1, 2, ())
        with pytest.raises(ValueError):
            MigrationTriple(1, 2, (3, 3))


class TestLoad:
    def test_controller_load(self):
        topology = make_topology(
            capacities={1: 100, 2: 100, 3: 100},
            owners={1: 1, 2: 1, 3: 1, 4: 2},
            rates={1: 10, 2: 20, 3: 30, 4: 7},
        )

        assert controller_load(topology, 1) == 60
        assert controller_load(topology, 2) == 7
        assert controller_load(topology, 3) == 0

    def test_unknown_controller(self, skewed_topology):
        with pytest.raises(KeyError):
            controller_load(skewed_topology, 42)

    def test_load_ratio(self):
        topology = make_topology(
            capacities={1: 100, 2: 100, 3: 100},
            owners={1: 1, 2: 2},
            rates={1: 50, 2: 120},
        )

        assert load_ratio(topology, 1) == 0.5
        assert load_ratio(topology, 2) == 1.2
        assert load_ratio(topology, 3) == 0.0

    def test_mean_ratios(self):
        topology = make_topology(
            capacities={1: 100, 2: 100, 3: 100, 4: 100},
            owners={1: 1, 2: 2, 3: 3, 4: 4},
            rates={1: 20, 2: 40, 3: 60, 4: 80},
        )

        assert mean_ratio_pair(topology, 1, 3) == pytest.approx(0.4)
        assert mean_ratio_all(topology) == pytest.approx(0.5)
        assert list(load_ratios(topology)) == [1, 2, 3, 4]

    def test_mean_ratio_single_controller(self):
        topology = make_topology(capacities={1: 10}, owners={1: 1}, rates={1: 7})
        assert mean_ratio_all(topology) == pytest.approx(0.7)


class TestDiscreteCoefficient:
    @pytest.mark.parametrize(
        "ratios, expected",
        [
            ([0.5, 0.5], 0.0),
            ([0.2, 0.6], 0.5),
            ([0.1, 0.9], 0.8),
            ([0.2, 0.4, 0.6, 0.8], 0.4472),
            ([0.9, 0.1, 0.5], 0.6532),
        ],
    )
    def test_values(self, ratios, expected):
        assert deviation_coefficient(ratios) == pytest.approx(expected, abs=1e-4)

    def test_idle_plane(self):
        assert deviation_coefficient([0.0, 0.0, 0.0]) == 0.0

    def test_empty(self):
        with pytest.raises(ValueError):
            deviation_coefficient([])

    def test_topology_forms(self, skewed_topology):
        assert discrete_coefficient_pair(skewed_topology, 1, 2) == pytest.approx(0.8)
        assert discrete_coefficient_all(skewed_topology) == pytest.approx(0.6532, abs=1e-4)

    def test_balanced(self, balanced_topology):
        assert discrete_coefficient_all(balanced_topology) == 0.0

    @given(ratio_lists, st.floats(min_value=0.01, max_value=100.0))
    def test_scale_invariance(self, ratios, factor):
        scaled = [r * factor for r in ratios]
        assert deviation_coefficient(scaled) == pytest.approx(
            deviation_coefficient(ratios), rel=1e-9, abs=1e-9
        )

    @given(ratio_lists, st.randoms(use_true_random=False))
    def test_permutation_invariance(self, ratios, random):
        shuffled = list(ratios)
        random.shuffle(shuffled)
        assert deviation_coefficient(shuffled) == pytest.approx(
            deviation_coefficient(ratios), rel=1e-9, abs=1e-12
        )

    @given(ratio_lists)
    def test_zero_iff_equal(self, ratios):
        d = deviation_coefficient(ratios)
        assert d >= 0
        if len(set(ratios)) == 1:
            assert d == 0.0
        elif sum(ratios) > 0:
            assert d > 0


class TestMigrationEfficiency:
    def test_values(self):
        topology = make_topology(
            capacities={1: 100, 2: 100},
            owners={1: 1, 2: 1, 3: 1},
            rates={1: 30, 2: 0, 3: 40},
            hops={(1, 1): 3},
        )

        assert migration_efficiency(topology, 1, 1) == 10
        assert migration_efficiency(topology, 1, 2) == 0
        assert migration_efficiency(topology, 1, 3) == 40

    def test_not_owned(self, skewed_topology):
        with pytest.raises(ValueError):
            migration_efficiency(skewed_topology, 2, 1)

    def test_mean(self, skewed_topology):
        # Efficiencies 40, 15, 20.
        assert mean_migration_efficiency(skewed_topology, 1) == pytest.approx(25)
        assert mean_migration_efficiency(skewed_topology, 2) == 10

    def test_mean_without_switches(self, shared_in_topology):
        empty = shared_in_topology.migrate([MigrationTriple(3, 1, (5,))])
        with pytest.raises(ValueError):
            mean_migration_efficiency(empty, 3)

    @given(st.floats(min_value=0.1, max_value=1000.0))
    def test_scale_invariant_ordering(self, factor):
        topology = make_topology(
            capacities={1: 100, 2: 100},
            owners={1: 1, 2: 1, 3: 1, 4: 2},
            rates={1: 40, 2: 30, 3: 20, 4: 5},
            hops={(2, 1): 2, (3, 1): 3},
        )
        scaled = Topology.from_mappings(
            {c: topology.controller(c).capacity * factor for c in topology.controller_ids()},
            {s: topology.owner(s) for s in topology.switch_ids()},
            {s: topology.switch(s).packet_in_rate * factor for s in topology.switch_ids()},
            topology.hops,
        )

        def order(t):
            return sorted(t.owned_switches(1), key=lambda s: -migration_efficiency(t, 1, s))

        assert order(scaled) == order(topology)
        assert load_ratio(scaled, 1) == pytest.approx(load_ratio(topology, 1))
        assert math.isclose(
            discrete_coefficient_all(scaled), discrete_coefficient_all(topology), rel_tol=1e-9
        )
