"""Residual capacity bookkeeping for the slice planner.

The ledger tracks what is left of every link and node resource once services are
committed, and which VNF instances are deployed where so later services can reuse
them.
"""

from collections import defaultdict
from typing import Dict, List, Optional, Tuple

from slice_planner.errors import LedgerError
from slice_planner.model.kpi import EPS, link_usage, node_usage
from slice_planner.model.types import Deployment, PhysicalGraph
from slice_planner.utils.logging_utils import get_logger

logger = get_logger("graphs.ledger")

InstanceKey = Tuple[str, str]  # (vnf, node)
Owner = Tuple[str, bool]  # (service, isolated)


class _Entry:
    """Journal record for one committed deployment."""

    def __init__(
        self,
        deployment: Deployment,
        links: Dict[str, float],
        nodes: Dict[Tuple[str, str], float],
        instances: List[InstanceKey],
    ):
        self.deployment = deployment
        self.links = links
        self.nodes = nodes
        self.instances = instances


class ResidualLedger:
    """Residual link/node capacities plus the registry of deployed instances.

    The ledger is single-writer. Commits are atomic: either every residual is
    decremented or none is.
    """

    def __init__(self, graph: PhysicalGraph):
        self.graph = graph
        self._links: Dict[str, float] = {
            link_id: link.capacity for link_id, link in graph.links.items()
        }
        self._nodes: Dict[Tuple[str, str], float] = {
            (node_id, kind): amount
            for node_id, node in graph.nodes.items()
            for kind, amount in node.resources.items()
        }
        self._instances: Dict[InstanceKey, List[Owner]] = defaultdict(list)
        self._journal: List[_Entry] = []

    def link_residual(self, link_id: str) -> float:
        return self._links[link_id]

    def node_residual(self, node_id: str, kind: str) -> float:
        return self._nodes.get((node_id, kind), 0.0)

    def instances(self, vnf: str, node_id: str) -> Tuple[Owner, ...]:
        return tuple(self._instances.get((vnf, node_id), ()))

    def can_reuse(self, vnf: str, node_id: str, service: str, isolated: bool) -> bool:
        """Whether ``service`` may reuse an instance of ``vnf`` already on ``node_id``.

        Instances are shared between non-isolated services; an isolated service only
        reuses its own.
        """
        for owner, owner_isolated in self._instances.get((vnf, node_id), ()):
            if owner == service:
                return True
            if not isolated and not owner_isolated:
                return True
        return False

    def commit(self, deployment: Deployment) -> None:
        """Take a deployment's resources out of the residuals.

        Raises:
            LedgerError: If any residual is insufficient. Nothing is changed then.
        """
        links = link_usage(deployment)
        nodes = node_usage(deployment)
        for link_id, used in links.items():
            available = self._links.get(link_id)
            if available is None:
                raise LedgerError(f"Unknown link {link_id}")
            if used > available + EPS * max(1.0, available):
                raise LedgerError(
                    f"Insufficient capacity on {link_id}: need {used:.6g}, have {available:.6g}"
                )
        for (node_id, kind), used in nodes.items():
            available = self.node_residual(node_id, kind)
            if used > available + EPS * max(1.0, available):
                raise LedgerError(
                    f"Insufficient {kind} on {node_id}: need {used:.6g}, have {available:.6g}"
                )

        prior_links = {link_id: self._links[link_id] for link_id in links}
        prior_nodes = {key: self.node_residual(*key) for key in nodes}
        for link_id, used in links.items():
            self._links[link_id] = max(0.0, self._links[link_id] - used)
        for key, used in nodes.items():
            self._nodes[key] = max(0.0, self.node_residual(*key) - used)

        registered = sorted({(item.vnf, item.node) for item in deployment.placements})
        for key in registered:
            self._instances[key].append((deployment.service, deployment.isolated))

        self._journal.append(_Entry(deployment, prior_links, prior_nodes, registered))
        logger.debug(
            f"Committed {deployment.service}: {len(links)} links, {len(nodes)} node resources"
        )

    def rollback(self, deployment: Deployment) -> None:
        """Return a committed deployment's resources to the residuals.

        Rolling back the most recent commit restores the exact prior values;
        older commits are added back arithmetically.

        Raises:
            LedgerError: If the deployment was never committed.
        """
        index = self._find(deployment)
        if index is None:
            raise LedgerError(f"Deployment of {deployment.service} is not committed")
        entry = self._journal.pop(index)

        if index == len(self._journal):
            self._links.update(entry.links)
            self._nodes.update(entry.nodes)
        else:
            for link_id, used in link_usage(deployment).items():
                self._links[link_id] += used
            for key, used in node_usage(deployment).items():
                self._nodes[key] = self.node_residual(*key) + used

        for key in entry.instances:
            owners = self._instances[key]
            owners.remove((deployment.service, deployment.isolated))
            if not owners:
                del self._instances[key]
        logger.debug(f"Rolled back {deployment.service}")

    def _find(self, deployment: Deployment) -> Optional[int]:
        for index in range(len(self._journal) - 1, -1, -1):
            if self._journal[index].deployment is deployment:
                return index
        for index in range(len(self._journal) - 1, -1, -1):
            if self._journal[index].deployment == deployment:
                return index
        return None

    def copy(self) -> "ResidualLedger":
        """Independent working copy; the journal starts empty."""
        clone = ResidualLedger.__new__(ResidualLedger)
        clone.graph = self.graph
        clone._links = dict(self._links)
        clone._nodes = dict(self._nodes)
        clone._instances = defaultdict(
            list, {key: list(value) for key, value in self._instances.items()}
        )
        clone._journal = []
        return clone

    def snapshot(self) -> Dict[str, object]:
        """Plain-data view of the residuals and registry, for comparisons."""
        return {
            "links": dict(self._links),
            "nodes": dict(self._nodes),
            "instances": {key: tuple(value) for key, value in self._instances.items() if value},
        }
