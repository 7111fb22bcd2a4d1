"""Tests for scenario loading and validation."""

import copy

import pytest

from slice_planner.errors import ScenarioError
from slice_planner.model.scenario import dump_scenario, load_scenario, parse_scenario
from slice_planner.scenarios import BUNDLED, open_scenario, resolve_scenario

BASE_DOCUMENT = {
    "nodes": [
        {
            "id": "a",
            "resources": {"cpu": 4.0},
            "interfaces": ["x"],
            "coverage": ["loc"],
            "reliability": 0.999,
            "resource_unit_cost": {"cpu": 1.0},
            "vnf_instantiation_cost": {"f": 1.0},
        },
        {
            "id": "b",
            "resources": {"cpu": 4.0},
            "interfaces": ["x"],
            "reliability": 0.999,
            "resource_unit_cost": {"cpu": 1.0},
        },
    ],
    "links": [
        {"id": "loc-a", "source": "loc", "target": "a", "delay": 1.0, "capacity": 10.0},
        {
            "id": "a-b",
            "source": "a",
            "target": "b",
            "delay": 1.0,
            "capacity": 10.0,
            "unit_cost": 1.0,
        },
    ],
    "vnfs": [
        {"id": "f", "per_unit_resource": {"cpu": 1.0}, "required_interfaces": ["x"]},
        {"id": "g", "per_unit_resource": {"cpu": 0.5}},
    ],
    "services": [
        {
            "id": "s",
            "chains": [["f", "g"]],
            "endpoints": [{"location": "loc", "load": 1.0}],
            "max_delay": 20.0,
            "min_reliability": 0.99,
        }
    ],
}


@pytest.fixture
def document():
    """A fresh copy of a small valid scenario document."""
    return copy.deepcopy(BASE_DOCUMENT)


class TestParseScenario:
    """Test cases for parse_scenario."""

    def test_valid_document(self, document):
        """Test that a valid document resolves into a scenario."""
        scenario = parse_scenario(document, name="tiny")
        assert scenario.name == "tiny"
        assert scenario.graph.compute_nodes() == ("a", "b")
        assert scenario.graph.locations == frozenset({"loc"})
        assert scenario.graph.link_between("b", "a").id == "a-b"
        assert scenario.service("s").endpoints[0].location == "loc"
        with pytest.raises(KeyError):
            scenario.service("missing")

    def test_unknown_key_names_its_location(self, document):
        """Test that unknown keys are rejected with the entry they appear in."""
        document["nodes"][0]["bogus"] = 1
        with pytest.raises(ScenarioError) as excinfo:
            parse_scenario(document)
        assert excinfo.value.location == "nodes[0].bogus"

    def test_duplicate_ids(self, document):
        """Test that node ids must be unique."""
        document["nodes"][1]["id"] = "a"
        with pytest.raises(ScenarioError, match="duplicate id"):
            parse_scenario(document)

    def test_dangling_link(self, document):
        """Test that links must join known vertices."""
        document["links"][1]["target"] = "nowhere"
        with pytest.raises(ScenarioError, match="unknown node or location"):
            parse_scenario(document)

    def test_link_between_locations(self, document):
        """Test that two locations cannot be linked directly."""
        document["locations"] = ["loc", "other"]
        document["links"].append(
            {"id": "loc-other", "source": "loc", "target": "other", "delay": 1.0, "capacity": 1.0}
        )
        with pytest.raises(ScenarioError, match="two locations"):
            parse_scenario(document)

    def test_unknown_vnf(self, document):
        """Test that chains may only name catalogued VNFs."""
        document["services"][0]["chains"] = [["f", "h"]]
        with pytest.raises(ScenarioError, match="unknown vnf"):
            parse_scenario(document)

    def test_unknown_location(self, document):
        """Test that endpoints must live at a known location."""
        document["services"][0]["endpoints"][0]["location"] = "mars"
        with pytest.raises(ScenarioError, match="unknown location"):
            parse_scenario(document)

    def test_reliability_must_cover_time_steps(self, document):
        """Test that a per-step profile must define every declared step."""
        document["config"] = {"time_steps": [0, 1]}
        document["nodes"][0]["reliability"] = {"steps": {0: 0.99}}
        with pytest.raises(ScenarioError, match="every time step"):
            parse_scenario(document)

    def test_lifetime_must_use_declared_steps(self, document):
        """Test that endpoint lifetimes are subsets of the time steps."""
        document["services"][0]["endpoints"][0]["lifetime"] = [3]
        with pytest.raises(ScenarioError, match="lifetime"):
            parse_scenario(document)

    def test_service_graph_must_be_acyclic(self, document):
        """Test that a service graph with a cycle is rejected."""
        service = document["services"][0]
        del service["chains"]
        service["graph"] = [["endpoint", "f"], ["f", "g"], ["g", "f"]]
        with pytest.raises(ScenarioError, match="cycle"):
            parse_scenario(document)

    def test_not_a_mapping(self):
        """Test that a non-mapping document is rejected."""
        with pytest.raises(ScenarioError, match="mapping"):
            parse_scenario(["nodes"])

    def test_request_steps_follow_lifetimes(self, document):
        """Test that a request is active in the union of its endpoints' lifetimes."""
        document["config"] = {"time_steps": [0, 1, 2]}
        document["services"][0]["endpoints"][0]["lifetime"] = [2, 1]
        scenario = parse_scenario(document)
        assert scenario.request_steps(scenario.services[0]) == (1, 2)


class TestLoadScenario:
    """Test cases for reading scenario files."""

    def test_missing_file(self, tmp_path):
        """Test that an unreadable file is a scenario error."""
        with pytest.raises(ScenarioError, match="cannot read"):
            load_scenario(tmp_path / "missing.yaml")

    def test_invalid_yaml(self, tmp_path):
        """Test that malformed YAML is a scenario error naming the file."""
        path = tmp_path / "broken.yaml"
        path.write_text("nodes: [unclosed\n", encoding="utf-8")
        with pytest.raises(ScenarioError) as excinfo:
            load_scenario(path)
        assert excinfo.value.path == str(path)

    def test_dump_then_load(self, document, tmp_path):
        """Test that a dumped document loads under the file's name."""
        path = tmp_path / "tiny.yaml"
        dump_scenario(document, path)
        assert load_scenario(path).name == "tiny"

    @pytest.mark.parametrize("name", BUNDLED)
    def test_bundled_scenarios_load(self, name):
        """Test that every bundled scenario validates."""
        scenario = open_scenario(name)
        assert scenario.name == name
        assert scenario.services

    def test_vehicular_load_is_split(self):
        """Test that the vehicular total load is spread over its nine endpoints."""
        req = open_scenario("vehicular").services[0]
        assert len(req.endpoints) == 9
        assert sum(e.load for e in req.endpoints) == pytest.approx(1.5)

    def test_unknown_scenario_name(self):
        """Test that a name that is neither a file nor bundled is rejected."""
        with pytest.raises(ScenarioError, match="bundled"):
            resolve_scenario("atlantis")
