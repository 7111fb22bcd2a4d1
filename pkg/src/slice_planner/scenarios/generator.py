"""Seeded random scenarios for property checks and ``validate --random``.

Instances are small on purpose: the brute-force oracle must be able to solve them.
Every generated document goes through the same validation as a scenario file.
"""

from typing import Any, Dict, List

import numpy as np

from slice_planner.model.scenario import Scenario, parse_scenario

INTERFACE = "generic"


def _round(value: float) -> float:
    return float(round(value, 6))


def _reliability(rng: np.random.Generator, low: float, high: float, steps: List[int]) -> Any:
    if len(steps) == 1:
        return _round(rng.uniform(low, high))
    return {"steps": {step: _round(rng.uniform(low, high)) for step in steps}}


def random_document(
    rng: np.random.Generator,
    n_nodes: int = 4,
    n_vnfs: int = 2,
    n_locations: int = 1,
    n_steps: int = 1,
    homogeneous: bool = False,
    gamma: int = 10,
    name: str = "random",
) -> Dict[str, Any]:
    """Draw a scenario document.

    Compute nodes form a ring with random chords; each location is covered by one
    or two nodes. A homogeneous document gives every node and every link the same
    capabilities and prices.

    Args:
        rng: Source of randomness.
        n_nodes: Compute nodes, at least two.
        n_vnfs: Length of the single service chain.
        n_locations: Locations, one endpoint each.
        n_steps: Time steps; with more than one, reliabilities vary per step and
            endpoints get random lifetimes.
        homogeneous: Use identical nodes and links.
        gamma: Resolution written into the document's settings.
        name: Scenario name.

    Returns:
        A mapping ready for ``parse_scenario``.
    """
    if n_nodes < 2:
        raise ValueError("a random scenario needs at least two nodes")
    steps = list(range(n_steps))
    node_ids = [f"n{i}" for i in range(n_nodes)]
    vnf_ids = [f"f{i}" for i in range(n_vnfs)]
    locations = [f"L{i}" for i in range(n_locations)]

    coverage: Dict[str, List[str]] = {node: [] for node in node_ids}
    for location in locations:
        count = 1 if homogeneous else int(rng.integers(1, 3))
        for node in rng.choice(node_ids, size=min(count, n_nodes), replace=False):
            coverage[str(node)].append(location)

    nodes = []
    for node in node_ids:
        if homogeneous:
            cpu, reliability, cpu_cost, setup = 8.0, 0.9999, 1.0, 1.0
        else:
            cpu = _round(rng.uniform(2.0, 10.0))
            reliability = _reliability(rng, 0.999, 0.99999, steps)
            cpu_cost = _round(rng.uniform(0.1, 2.0))
            setup = _round(rng.uniform(0.5, 3.0))
        nodes.append(
            {
                "id": node,
                "resources": {"cpu": cpu},
                "interfaces": [INTERFACE],
                "coverage": coverage[node],
                "reliability": reliability,
                "resource_unit_cost": {"cpu": cpu_cost},
                "vnf_instantiation_cost": {vnf: setup for vnf in vnf_ids},
            }
        )

    pairs = [(node_ids[i], node_ids[(i + 1) % n_nodes]) for i in range(n_nodes)]
    if n_nodes == 2:
        pairs = pairs[:1]
    for i in range(n_nodes):
        for j in range(i + 2, n_nodes):
            if (i, j) != (0, n_nodes - 1) and not homogeneous and rng.random() < 0.3:
                pairs.append((node_ids[i], node_ids[j]))

    links = []
    for source, target in pairs:
        links.append(_link(rng, source, target, homogeneous, steps, access=False))
    for node in node_ids:
        for location in coverage[node]:
            links.append(_link(rng, location, node, homogeneous, steps, access=True))

    vnfs = [
        {
            "id": vnf,
            "per_unit_resource": {"cpu": 0.5 if homogeneous else _round(rng.uniform(0.2, 1.5))},
            "required_interfaces": [INTERFACE],
        }
        for vnf in vnf_ids
    ]

    endpoints = []
    for location in locations:
        endpoint: Dict[str, Any] = {
            "location": location,
            "load": 0.5 if homogeneous else _round(rng.uniform(0.2, 1.0)),
        }
        if n_steps > 1:
            size = int(rng.integers(1, n_steps + 1))
            endpoint["lifetime"] = sorted(int(s) for s in rng.choice(steps, size, replace=False))
        endpoints.append(endpoint)

    service = {
        "id": "svc",
        "chains": [vnf_ids],
        "endpoints": endpoints,
        "max_delay": _round(rng.uniform(15.0, 60.0)),
        "min_reliability": _round(rng.uniform(0.99, 0.9995)),
    }
    return {
        "name": name,
        "locations": locations,
        "nodes": nodes,
        "links": links,
        "vnfs": vnfs,
        "services": [service],
        "costs": {"currency": "USD", "transport_unit": "mbps", "period_seconds": 1.0},
        "config": {
            "gamma": gamma,
            "k_paths": 2,
            "max_candidates": 64,
            "max_instance_replication": 0,
            "time_steps": steps,
        },
    }


def _link(
    rng: np.random.Generator,
    source: str,
    target: str,
    homogeneous: bool,
    steps: List[int],
    access: bool,
) -> Dict[str, Any]:
    link: Dict[str, Any] = {"id": f"{source}-{target}", "source": source, "target": target}
    if homogeneous:
        link.update(delay=1.0, capacity=10.0, unit_cost=1.0)
    elif access:
        link.update(
            delay=_round(rng.uniform(0.5, 3.0)),
            capacity=_round(rng.uniform(5.0, 20.0)),
            unit_cost=_round(rng.uniform(0.0, 2.0)),
        )
    else:
        link.update(
            delay=_round(rng.uniform(0.5, 5.0)),
            capacity=_round(rng.uniform(2.0, 20.0)),
            unit_cost=_round(rng.uniform(0.5, 5.0)),
            reliability=_reliability(rng, 0.9999, 1.0, steps),
        )
    return link


def random_scenario(seed: int, homogeneous: bool = False, **kwargs: Any) -> Scenario:
    """Validated random scenario for a seed; extra arguments go to ``random_document``."""
    rng = np.random.default_rng(seed)
    document = random_document(rng, homogeneous=homogeneous, name=f"random-{seed}", **kwargs)
    return parse_scenario(document, name=f"random-{seed}")


def random_scenarios(
    count: int, seed: int = 0, homogeneous: bool = False, **kwargs: Any
) -> List[Scenario]:
    """``count`` scenarios with seeds ``seed``, ``seed + 1``, ..."""
    return [random_scenario(seed + i, homogeneous=homogeneous, **kwargs) for i in range(count)]

