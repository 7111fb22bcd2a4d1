"""Tests for exact placement pricing."""

import pytest

from slice_planner.graphs.ledger import ResidualLedger
from slice_planner.model.scenario import parse_scenario
from slice_planner.planner.costing import (
    LINK_CAPACITY,
    Hop,
    PricedPlacement,
    PricingFailure,
    allowed_hosts,
    chain_slots,
    delay_budget,
    hop_rules,
    hosting_cost,
    price_placement,
)
from slice_planner.planner.decompose import ChainTask


@pytest.fixture
def scenario():
    return parse_scenario(
        {
            "nodes": [
                {
                    "id": "a",
                    "resources": {"cpu": 10.0, "mem": 4.0},
                    "interfaces": ["x"],
                    "coverage": ["loc"],
                    "resource_unit_cost": {"cpu": 1.0, "mem": 0.5},
                    "vnf_instantiation_cost": {"f": 2.0, "g": 2.0},
                },
                {
                    "id": "b",
                    "resources": {"cpu": 10.0},
                    "interfaces": ["y"],
                    "resource_unit_cost": {"cpu": 4.0},
                    "vnf_instantiation_cost": {"g": 1.0},
                },
            ],
            "links": [
                {"id": "loc-a", "source": "loc", "target": "a", "delay": 1.0,
                 "capacity": 10.0, "unit_cost": 1.0},
                {"id": "a-b", "source": "a", "target": "b", "delay": 2.0,
                 "capacity": 0.5, "unit_cost": 3.0},
            ],
            "vnfs": [
                {"id": "f", "per_unit_resource": {"cpu": 1.0, "mem": 0.5},
                 "required_interfaces": ["x"]},
                {"id": "g", "per_unit_resource": {"cpu": 0.5}},
            ],
            "services": [
                {
                    "id": "s",
                    "chains": [
                        {
                            "vnfs": ["f", "g"],
                            "chi": [{"prev": "endpoint", "cur": "f", "next": "g", "value": 0.5}],
                        }
                    ],
                    "endpoints": [{"location": "loc", "load": 2.0}],
                    "max_delay": 10.0,
                }
            ],
            "costs": {"transport_unit": "mbps"},
        }
    )


def slots_of(scenario):
    req = scenario.services[0]
    chain = req.chains[0]
    return req, chain_slots(ChainTask(0, chain), chain, req.endpoints[0].load, {})


class TestSlots:
    """Test cases for instance slots and per-layer rules."""

    def test_chain_slots_scale_traffic(self, scenario):
        """Test that scaling coefficients shrink the traffic reaching later VNFs."""
        _, slots = slots_of(scenario)
        assert [(s.vnf, s.load, s.hop_traffic) for s in slots] == [
            ("f", 2.0, 2.0),
            ("g", 1.0, 1.0),
        ]

    def test_replicas_split_load_not_hop_traffic(self, scenario):
        """Test that each replica processes a share while its hop carries the full input."""
        req = scenario.services[0]
        chain = req.chains[0].with_extra_instance("g")
        slots = chain_slots(ChainTask(0, chain), chain, 2.0, {})
        g_slots = [s for s in slots if s.vnf == "g"]
        assert [(s.replica, s.load, s.hop_traffic) for s in g_slots] == [
            (0, 0.5, 1.0),
            (1, 0.5, 1.0),
        ]

    def test_anchored_prefix_is_skipped_and_pinned(self, scenario):
        """Test that leading anchored VNFs are skipped and later anchors pinned."""
        chain = scenario.services[0].chains[0]
        slots = chain_slots(ChainTask(1, chain, anchors=("f",)), chain, 2.0, {"f": "a"})
        assert [s.vnf for s in slots] == ["g"]
        pinned = chain_slots(ChainTask(1, chain, anchors=("g",)), chain, 2.0, {"g": "b"})
        assert pinned[1].pinned == "b"
        assert allowed_hosts(scenario, pinned[1]) == frozenset({"b"})

    def test_allowed_hosts_follow_interfaces(self, scenario):
        """Test that only nodes with the required interfaces may host a VNF."""
        _, slots = slots_of(scenario)
        assert allowed_hosts(scenario, slots[0]) == frozenset({"a"})
        assert allowed_hosts(scenario, slots[1]) == frozenset({"a", "b"})

    def test_hosting_cost_and_rules(self, scenario):
        """Test provisional hosting costs: instantiation, CPU at b and other resources."""
        req, slots = slots_of(scenario)
        ledger = ResidualLedger(scenario.graph)
        # 2.0 setup + 1.0 * (1.0 * 2.0) cpu + 0.5 * (0.5 * 2.0) mem
        assert hosting_cost(scenario, req, ledger, slots[0], "a") == pytest.approx(4.5)
        rules = hop_rules(scenario, req, ledger, slots)
        assert rules[0].demand == 2.0
        assert rules[1].head_cost["b"] == pytest.approx(1.0 + 4.0 * 0.5)
        assert rules[1].transport_rate == pytest.approx(1.0)
        relaxed = hop_rules(scenario, req, ledger, slots, relaxed=True)
        assert all(rule.demand == 0.0 for rule in relaxed)

    def test_delay_budget_defaults_when_unbounded(self, scenario):
        """Test that a service without a delay target gets the configured budget."""
        req = scenario.services[0]
        assert delay_budget(req) == 10.0
        assert delay_budget(req.model_copy(update={"max_delay": None})) > 0


class TestPricePlacement:
    """Test cases for price_placement."""

    def test_colocated_placement(self, scenario):
        """Test cost components of both VNFs on the access node."""
        req, slots = slots_of(scenario)
        ledger = ResidualLedger(scenario.graph)
        hops = [Hop("a", ("loc", "a"), ("loc-a",)), Hop("a", ("a",), ())]
        priced = price_placement(scenario, req, ledger, req.endpoints[0], 0, "loc", slots, hops)
        assert isinstance(priced, PricedPlacement)
        cost = priced.deployment.cost
        assert cost.instantiation == pytest.approx(4.0)
        assert cost.transport == pytest.approx(2.0)
        assert priced.network_delay == pytest.approx(1.0)
        assert priced.solution.processing_delay == pytest.approx(9.0)
        assert priced.provisional_cost <= priced.cost
        assert set(priced.deployment.created_instances) == {("f", "a"), ("g", "a")}
        placement = priced.deployment.placements[0]
        assert placement.other_resources == {"mem": 1.0}

    def test_link_capacity_failure(self, scenario):
        """Test that traffic above a link's residual fails before the CPU assignment."""
        req, slots = slots_of(scenario)
        ledger = ResidualLedger(scenario.graph)
        hops = [Hop("a", ("loc", "a"), ("loc-a",)), Hop("b", ("a", "b"), ("a-b",))]
        failure = price_placement(scenario, req, ledger, req.endpoints[0], 0, "loc", slots, hops)
        assert isinstance(failure, PricingFailure)
        assert failure.reason == LINK_CAPACITY

    def test_reused_instances_cost_nothing_to_start(self, scenario):
        """Test that instances already deployed for the service are not paid again."""
        req, slots = slots_of(scenario)
        ledger = ResidualLedger(scenario.graph)
        hops = [Hop("a", ("loc", "a"), ("loc-a",)), Hop("a", ("a",), ())]
        first = price_placement(scenario, req, ledger, req.endpoints[0], 0, "loc", slots, hops)
        ledger.commit(first.deployment)
        again = price_placement(scenario, req, ledger, req.endpoints[0], 0, "loc", slots, hops)
        assert again.deployment.cost.instantiation == 0.0
        assert again.deployment.created_instances == ()

    def test_hop_count_must_match(self, scenario):
        """Test that every slot needs a hop."""
        req, slots = slots_of(scenario)
        with pytest.raises(ValueError):
            price_placement(scenario, req, ResidualLedger(scenario.graph), req.endpoints[0], 0,
                            "loc", slots, [])
