import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, NewType, Optional, Tuple

import networkx as nx

from utils.errors import InvalidNetwork, NodeSetMismatch

logger = logging.getLogger(__name__)

NodeId = NewType("NodeId", int)
Edge = Tuple[NodeId, NodeId]

ROLES = ("substation", "feeder", "transformer-phase", "consumer")


@dataclass(frozen=True)
class NodeLabel:
    name: str
    role: str = "consumer"

    def __post_init__(self):
        if self.role not in ROLES:
            raise InvalidNetwork(f"Unknown role '{self.role}', expected one of {ROLES}")


@dataclass(frozen=True)
class Layer:
    """Meters operating at one voltage level; level 1 holds the consumers."""

    level: int
    members: Tuple[NodeId, ...]

    def __post_init__(self):
        if self.level < 1:
            raise InvalidNetwork(f"Layer level must be positive, got {self.level}")
        object.__setattr__(self, "members", tuple(sorted(NodeId(int(m)) for m in self.members)))
        if len(set(self.members)) != len(self.members):
            raise InvalidNetwork(f"Layer {self.level} lists a node twice")

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, node: object) -> bool:
        return node in self.members


@dataclass(frozen=True)
class LayeredNetwork:
    """
    Directed forest of meters organised into voltage layers.

    Edges point from a parent at level l+1 to a child at level l. Every node
    outside the top layer has exactly one parent.
    """

    layers: Tuple[Layer, ...]
    edges: FrozenSet[Edge]
    labels: Mapping[NodeId, NodeLabel] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        layers = tuple(sorted(self.layers, key=lambda layer: layer.level))
        object.__setattr__(self, "layers", layers)
        object.__setattr__(
            self, "edges", frozenset((NodeId(int(p)), NodeId(int(c))) for p, c in self.edges)
        )
        labels = {NodeId(int(k)): v for k, v in dict(self.labels).items()}
        for node in self.nodes:
            labels.setdefault(node, NodeLabel(name=f"M{node}"))
        object.__setattr__(self, "labels", labels)
        self._validate()

    def _validate(self) -> None:
        levels = [layer.level for layer in self.layers]
        if len(set(levels)) != len(levels):
            raise InvalidNetwork("Layer levels must be unique")
        if levels and levels != list(range(levels[0], levels[0] + len(levels))):
            raise InvalidNetwork(f"Layer levels must be consecutive, got {levels}")

        level_of = self.level_of
        if len(level_of) != sum(len(layer) for layer in self.layers):
            raise InvalidNetwork("Layers must partition the nodes")

        top = levels[-1] if levels else None
        graph = self.to_digraph()
        for parent, child in self.edges:
            if parent == child:
                raise InvalidNetwork(f"Self-loop on node {parent}")
            if parent not in level_of or child not in level_of:
                raise InvalidNetwork(f"Edge ({parent}, {child}) references an unknown node")
            if level_of[parent] != level_of[child] + 1:
                raise InvalidNetwork(
                    f"Edge ({parent}, {child}) does not connect consecutive layers "
                    f"({level_of[parent]} -> {level_of[child]})"
                )
        for node, level in level_of.items():
            in_degree = graph.in_degree(node)
            if level == top and in_degree != 0:
                raise InvalidNetwork(f"Top-layer node {node} has a parent")
            if level != top and in_degree != 1:
                raise InvalidNetwork(f"Node {node} at level {level} has {in_degree} parents, expected 1")
        if graph.number_of_nodes() and not nx.is_forest(graph):
            raise InvalidNetwork("Network is not a forest")

    @property
    def nodes(self) -> Tuple[NodeId, ...]:
        return tuple(sorted(node for layer in self.layers for node in layer.members))

    @property
    def level_of(self) -> Dict[NodeId, int]:
        return {node: layer.level for layer in self.layers for node in layer.members}

    @property
    def top_level(self) -> int:
        return self.layers[-1].level

    def layer(self, level: int) -> Layer:
        for layer in self.layers:
            if layer.level == level:
                return layer
        raise KeyError(f"No layer at level {level}")

    def parent_of(self, child: NodeId) -> Optional[NodeId]:
        for parent, node in self.edges:
            if node == child:
                return parent
        return None

    def parent_map(self) -> Dict[NodeId, NodeId]:
        return {child: parent for parent, child in self.edges}

    def children_of(self, parent: NodeId) -> List[NodeId]:
        return sorted(child for node, child in self.edges if node == parent)

    def children_map(self) -> Dict[NodeId, List[NodeId]]:
        children: Dict[NodeId, List[NodeId]] = {node: [] for node in self.nodes}
        for parent, child in sorted(self.edges, key=lambda edge: edge[1]):
            children[parent].append(child)
        return children

    def edges_between(self, parent_level: int) -> List[Edge]:
        """Edges from layer ``parent_level`` into the layer below, ordered by child id."""
        parents = set(self.layer(parent_level).members)
        return sorted((edge for edge in self.edges if edge[0] in parents), key=lambda edge: edge[1])

    def to_digraph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        for node, level in self.level_of.items():
            label = self.labels.get(node)
            graph.add_node(node, layer=level, name=label.name if label else None, role=label.role if label else None)
        graph.add_edges_from(self.edges)
        return graph

    def to_dict(self) -> Dict:
        level_of = self.level_of
        return {
            "nodes": [
                {
                    "id": int(node),
                    "name": self.labels[node].name,
                    "role": self.labels[node].role,
                    "layer": level_of[node],
                }
                for node in self.nodes
            ],
            "edges": [
                {"parent": int(parent), "child": int(child)}
                for parent, child in sorted(self.edges, key=lambda edge: edge[1])
            ],
        }

    @classmethod
    def from_dict(cls, document: Mapping) -> "LayeredNetwork":
        members: Dict[int, List[NodeId]] = {}
        labels: Dict[NodeId, NodeLabel] = {}
        for node in document.get("nodes", []):
            node_id = NodeId(int(node["id"]))
            members.setdefault(int(node["layer"]), []).append(node_id)
            labels[node_id] = NodeLabel(name=str(node.get("name", f"M{node_id}")), role=node.get("role", "consumer"))
        layers = tuple(Layer(level, tuple(nodes)) for level, nodes in members.items())
        edges = frozenset((NodeId(int(e["parent"])), NodeId(int(e["child"]))) for e in document.get("edges", []))
        return cls(layers=layers, edges=edges, labels=labels)


def layers_from_levels(levels: Mapping[NodeId, int]) -> Tuple[Layer, ...]:
    """Group a node -> level mapping into Layer objects, lowest level first."""
    members: Dict[int, List[NodeId]] = {}
    for node, level in levels.items():
        members.setdefault(int(level), []).append(NodeId(int(node)))
    return tuple(Layer(level, tuple(nodes)) for level, nodes in sorted(members.items()))


def two_layer_network(
    parents: Iterable[int],
    children: Iterable[int],
    edges: Iterable[Tuple[int, int]],
    labels: Optional[Mapping[NodeId, NodeLabel]] = None,
) -> LayeredNetwork:
    layers = [Layer(1, tuple(children)), Layer(2, tuple(parents))]
    layers = tuple(layer for layer in layers if len(layer))
    return LayeredNetwork(layers=layers, edges=frozenset(edges), labels=labels or {})


def connectivity_equal(a: LayeredNetwork, b: LayeredNetwork) -> bool:
    """
    Compare two networks over the same nodes and layers by their parent -> child edges.

    Raises:
        NodeSetMismatch: The node sets or layer partitions differ.
    """
    partition_a = {layer.level: layer.members for layer in a.layers}
    partition_b = {layer.level: layer.members for layer in b.layers}
    if partition_a != partition_b:
        raise NodeSetMismatch("Networks have different node sets or layer partitions")
    return a.edges == b.edges
