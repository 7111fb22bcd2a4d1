"""Tests for the planner on the bundled and small inline scenarios."""

import pytest

from slice_planner.graphs.decision_graph import build_decision_graph
from slice_planner.graphs.expanded_graph import assign_weights, prune_availability, steepness
from slice_planner.graphs.ledger import ResidualLedger
from slice_planner.model.kpi import evaluate_deployment
from slice_planner.model.scenario import parse_scenario
from slice_planner.optimisation.cpu_assign import CAPACITY
from slice_planner.oracle.brute_force import optimal
from slice_planner.planner.costing import PricingFailure
from slice_planner.planner.planner import (
    ChainSearch,
    PlanStatus,
    RejectReason,
    plan,
    plan_all,
)
from slice_planner.planner.sweep import SweepAxis, apply_axis
from slice_planner.scenarios import open_scenario


@pytest.fixture(scope="module")
def robots():
    return open_scenario("robots")


@pytest.fixture(scope="module")
def vehicular():
    return open_scenario("vehicular")


def radio_host(outcome):
    (host,) = {p.node for p in outcome.deployment.placements if p.vnf == "radio"}
    return host


def plan_fresh(scenario, gamma=None, req=None):
    config = scenario.config
    if gamma is not None:
        config = config.model_copy(update={"gamma": gamma})
    req = req or scenario.services[0]
    return plan(req, scenario, ResidualLedger(scenario.graph), config)


def hosts_of(outcome, endpoint_id, vnf):
    return {p.node for p in outcome.deployment.placements
            if p.endpoint == endpoint_id and p.vnf == vnf}


class TestRobots:
    """Test cases on the factory scenario."""

    def test_coarse_resolution_misses_femto(self, robots):
        """Test that at gamma 3 the femto cell is out of reach and pico is chosen."""
        outcome = plan_fresh(robots, gamma=3)
        assert outcome.status == PlanStatus.ACCEPTED
        assert radio_host(outcome) == "pico"

    def test_fine_resolution_finds_femto(self, robots):
        """Test that at gamma 10 the cheaper femto deployment is found."""
        coarse = plan_fresh(robots, gamma=3)
        fine = plan_fresh(robots, gamma=10)
        assert radio_host(fine) == "femto"
        assert fine.cost < coarse.cost

    def test_femto_reliability_steepness(self, robots):
        """Test that the femto hop takes two of three reliability levels at gamma 3."""
        req = robots.services[0]
        dg = build_decision_graph(robots.graph, ResidualLedger(robots.graph), req, k_paths=1)
        dg = prune_availability(dg, req, robots.graph, robots.vnfs["robo_master"])
        weighted = assign_weights(dg, req.max_delay, req.min_reliability)
        femto = [
            e for e in weighted.edges
            if e.head.name == "femto" and e.tail.name.startswith("robo")
        ]
        assert femto
        assert {steepness(e.weight.rel_frac, 3) for e in femto} == {2}

    def test_strict_reliability_is_rejected(self, robots):
        """Test that no route reaches six nines and the reason is the additive KPI."""
        req = robots.services[0].model_copy(update={"min_reliability": 0.999999})
        ledger = ResidualLedger(robots.graph)
        before = ledger.snapshot()
        outcome = plan(req, robots, ledger)
        assert outcome.status == PlanStatus.REJECTED
        assert outcome.reason == RejectReason.ADDITIVE_KPI
        assert outcome.deployment is None
        assert ledger.snapshot() == before

    def test_accepted_deployment_meets_kpis(self, robots):
        """Test that the accepted deployment passes the independent KPI check."""
        outcome = plan_fresh(robots)
        report = evaluate_deployment(outcome.deployment, robots.services[0], robots)
        assert report.feasible
        assert report.delay["factory@room"] <= 50.0
        assert outcome.deployment.points_of_access(robots.graph.nodes) == ("femto",)

    def test_deterministic(self, robots):
        """Test that planning twice gives the same deployment."""
        assert plan_fresh(robots).deployment == plan_fresh(robots).deployment

    def test_commit_and_reuse(self, robots):
        """Test that a second service reuses shared instances and an isolated one does not."""
        req = robots.services[0]
        ledger = ResidualLedger(robots.graph)
        first = plan(req, robots, ledger)
        second = plan(req.model_copy(update={"id": "factory-2"}), robots, ledger)
        assert first.accepted and second.accepted
        assert not set(first.deployment.created_instances) & set(
            second.deployment.created_instances
        )
        isolated = plan(req.model_copy(update={"id": "factory-iso", "isolated": True}),
                        robots, ledger)
        assert isolated.accepted
        assert len(isolated.deployment.created_instances) == 3
        assert isolated.deployment.cost.instantiation > 0


class TestVehicular:
    """Test cases on the collision-avoidance scenario."""

    def strict(self, scenario, multiplier):
        req = scenario.services[0].scaled(multiplier, min_reliability=0.999999)
        return plan_fresh(scenario, req=req)

    def test_nominal_and_double_load_accepted(self, vehicular):
        """Test that the macro backhaul fills up and the overflow moves to micro2."""
        assert self.strict(vehicular, 1.0).accepted
        doubled = self.strict(vehicular, 2.0)
        assert doubled.accepted
        assert hosts_of(doubled, "collision-avoidance@I1", "ran") == {"macro1"}
        assert hosts_of(doubled, "collision-avoidance@I8", "ran") == {"micro2"}
        assert hosts_of(doubled, "collision-avoidance@I9", "ran") == {"micro2"}

    def test_triple_load_runs_out_of_capacity(self, vehicular):
        """Test that I5, reachable through the macro cell only, is rejected for capacity."""
        outcome = self.strict(vehicular, 3.0)
        assert outcome.status == PlanStatus.REJECTED
        assert outcome.reason == RejectReason.CAPACITY
        assert outcome.diagnostics["endpoint"] == "collision-avoidance@I5"

    def test_delay_target_moves_tiers(self, vehicular):
        """Test that loose targets use macro and cloud while tight ones need the MEC server."""
        graph = vehicular.graph

        def tiers(outcome):
            return {graph.nodes[p.node].tier for p in outcome.deployment.placements}

        loose, config = apply_axis(vehicular, SweepAxis.DELAY, 120.0)
        relaxed = plan(loose.services[0], loose, ResidualLedger(graph), config)
        assert tiers(relaxed) == {"macro", "cloud"}

        tight, config = apply_axis(vehicular, SweepAxis.DELAY, 8.0)
        pressed = plan(tight.services[0], tight, ResidualLedger(graph), config)
        assert pressed.accepted
        assert "mec" in tiers(pressed)
        assert "cloud" not in tiers(pressed)
        assert hosts_of(pressed, "collision-avoidance@I5", "ran") == {"macro1"}
        assert hosts_of(pressed, "collision-avoidance@I5", "cad") == {"mec1"}


def replication_scenario(max_instance_replication):
    """Two small nodes: the VNF only fits when split over both."""
    return parse_scenario(
        {
            "nodes": [
                {"id": "a", "resources": {"cpu": 1.5}, "interfaces": ["x"],
                 "coverage": ["loc"], "resource_unit_cost": {"cpu": 1.0}},
                {"id": "b", "resources": {"cpu": 1.5}, "interfaces": ["x"],
                 "resource_unit_cost": {"cpu": 1.0}},
            ],
            "links": [
                {"id": "loc-a", "source": "loc", "target": "a", "delay": 1.0, "capacity": 10.0},
                {"id": "a-b", "source": "a", "target": "b", "delay": 1.0, "capacity": 10.0},
            ],
            "vnfs": [{"id": "f", "per_unit_resource": {"cpu": 2.0}}],
            "services": [
                {
                    "id": "s",
                    "chains": [["f"]],
                    "endpoints": [{"location": "loc", "load": 1.0}],
                    "max_delay": 20.0,
                }
            ],
            "config": {"max_instance_replication": max_instance_replication},
        }
    )


class TestReplication:
    """Test cases for bottleneck replication."""

    def test_bottleneck_is_replicated(self):
        """Test that a second instance of the CPU-starved VNF is added and placed apart."""
        scenario = replication_scenario(1)
        outcome = plan_fresh(scenario)
        assert outcome.accepted
        placements = outcome.deployment.placements
        assert [(p.vnf, p.replica, p.node) for p in placements] == [("f", 0, "a"), ("f", 1, "b")]
        assert all(p.load == pytest.approx(0.5) for p in placements)
        assert outcome.diagnostics["replications"] == 1
        assert evaluate_deployment(outcome.deployment, scenario.services[0], scenario).feasible

    def test_without_replication_rejected_for_capacity(self):
        """Test that the same request is rejected when replication is disabled."""
        outcome = plan_fresh(replication_scenario(0))
        assert outcome.reason == RejectReason.CAPACITY

    def test_slowest_bottleneck_is_kept(self):
        """Test that the slowest bottleneck over all CPU failures is kept, not the cheapest."""
        search = ChainSearch()
        search.record(PricingFailure(CAPACITY, 1.0, "f", 2.0))
        search.record(PricingFailure(CAPACITY, 5.0, "g", 7.5))
        search.record(PricingFailure(CAPACITY, 9.0, "h", 3.0))
        search.record(PricingFailure("delay", 0.5))
        assert search.capacity_failure.bottleneck == "g"
        assert search.failures[CAPACITY] == 3
        assert search.reason() == RejectReason.CAPACITY


class TestPlanAll:
    """Test cases for sequential planning."""

    def test_services_share_one_ledger(self, robots):
        """Test that later services plan against what earlier ones left."""
        req = robots.services[0]
        scenario = robots.with_services([req, req.model_copy(update={"id": "factory-2"})])
        ledger, outcomes = plan_all(scenario)
        assert [o.accepted for o in outcomes] == [True, True]
        owners = {owner for owner, _ in ledger.instances("radio", "femto")}
        assert "factory" in owners
        assert ledger.node_residual("femto", "cpu") < 8.0


def lifetime_scenario():
    """Two endpoints living at different steps; loc1's only link fails at step 1."""
    return parse_scenario(
        {
            "nodes": [
                {"id": "a", "resources": {"cpu": 10.0}, "interfaces": ["x"],
                 "coverage": ["loc1"], "resource_unit_cost": {"cpu": 1.0}},
                {"id": "b", "resources": {"cpu": 10.0}, "interfaces": ["x"],
                 "coverage": ["loc2"], "resource_unit_cost": {"cpu": 1.0}},
            ],
            "links": [
                {"id": "l1", "source": "loc1", "target": "a", "delay": 1.0, "capacity": 10.0,
                 "reliability": {"steps": {0: 0.99999, 1: 0.5}}},
                {"id": "l2", "source": "loc2", "target": "b", "delay": 1.0, "capacity": 10.0},
            ],
            "vnfs": [{"id": "f", "per_unit_resource": {"cpu": 1.0}}],
            "services": [
                {
                    "id": "s",
                    "chains": [["f"]],
                    "endpoints": [
                        {"location": "loc1", "load": 1.0, "lifetime": [0]},
                        {"location": "loc2", "load": 1.0, "lifetime": [1]},
                    ],
                    "max_delay": 20.0,
                    "min_reliability": 0.999,
                }
            ],
            "config": {"time_steps": [0, 1]},
        }
    )


def two_chain_scenario():
    """Two chains per endpoint whose links are weak at opposite steps."""
    return parse_scenario(
        {
            "nodes": [
                {"id": "a", "resources": {"cpu": 10.0}, "interfaces": ["fx"],
                 "coverage": ["loc"], "resource_unit_cost": {"cpu": 1.0}},
                {"id": "b", "resources": {"cpu": 10.0}, "interfaces": ["gx"],
                 "coverage": ["loc"], "resource_unit_cost": {"cpu": 1.0}},
            ],
            "links": [
                {"id": "loc-a", "source": "loc", "target": "a", "delay": 1.0, "capacity": 10.0,
                 "reliability": {"steps": {0: 0.9993, 1: 0.99999}}},
                {"id": "loc-b", "source": "loc", "target": "b", "delay": 1.0, "capacity": 10.0,
                 "reliability": {"steps": {0: 0.99999, 1: 0.9993}}},
            ],
            "vnfs": [
                {"id": "f", "per_unit_resource": {"cpu": 1.0}, "required_interfaces": ["fx"]},
                {"id": "g", "per_unit_resource": {"cpu": 1.0}, "required_interfaces": ["gx"]},
            ],
            "services": [
                {
                    "id": "s",
                    "chains": [["f"], ["g"]],
                    "endpoints": [{"location": "loc", "load": 1.0}],
                    "max_delay": 20.0,
                    "min_reliability": 0.999,
                }
            ],
            "config": {"time_steps": [0, 1]},
        }
    )


class TestLifetimes:
    """Test cases for time-resolved reliability."""

    def test_reliability_only_counts_the_endpoint_lifetime(self):
        """Test that a link failing outside an endpoint's lifetime does not block it."""
        scenario = lifetime_scenario()
        req = scenario.services[0]
        outcome = plan_fresh(scenario)
        assert outcome.accepted
        assert hosts_of(outcome, "s@loc1", "f") == {"a"}
        assert hosts_of(outcome, "s@loc2", "f") == {"b"}
        report = evaluate_deployment(outcome.deployment, req, scenario)
        assert report.reliability["s@loc1"] == {0: pytest.approx(0.99999)}
        reference = optimal(req, scenario, ResidualLedger(scenario.graph))
        assert outcome.cost == pytest.approx(reference.cost, rel=1e-9)

    def test_later_chains_get_the_remaining_target_per_step(self):
        """Test that a second chain is held to what the first left at each step."""
        scenario = two_chain_scenario()
        req = scenario.services[0]
        outcome = plan_fresh(scenario)
        assert outcome.accepted
        report = evaluate_deployment(outcome.deployment, req, scenario)
        assert report.feasible
        assert min(report.reliability["s@loc"].values()) >= 0.999
        reference = optimal(req, scenario, ResidualLedger(scenario.graph))
        assert reference.accepted
        assert outcome.cost == pytest.approx(reference.cost, rel=1e-9)
