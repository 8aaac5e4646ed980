import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from grid.network import Edge, Layer, LayeredNetwork, NodeId, two_layer_network
from utils.errors import EmptyParentSet, MalformedColumn, NonConsecutiveLayers, OrphanChild

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IncidenceMatrix:
    """
    Signed node-by-edge matrix of a two-layer forest.

    Entry (i, j) is +1 when edge j enters node i, -1 when it leaves node i and
    0 otherwise. Rows list the parents first, then the children.
    """

    entries: np.ndarray
    node_order: Tuple[NodeId, ...]
    edge_order: Tuple[Edge, ...]
    parent_rows: Tuple[int, ...]
    child_rows: Tuple[int, ...]

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.int8).reshape(len(self.node_order), len(self.edge_order))
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        if entries.shape != (len(self.node_order), len(self.edge_order)):
            raise ValueError(
                f"Entries shape {entries.shape} does not match "
                f"{len(self.node_order)} nodes x {len(self.edge_order)} edges"
            )
        rows = sorted(self.parent_rows + self.child_rows)
        if rows != list(range(len(self.node_order))):
            raise ValueError("parent_rows and child_rows must cover every row exactly once")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape

    def column_permuted(self, order) -> "IncidenceMatrix":
        order = list(order)
        return IncidenceMatrix(
            entries=self.entries[:, order],
            node_order=self.node_order,
            edge_order=tuple(self.edge_order[j] for j in order),
            parent_rows=self.parent_rows,
            child_rows=self.child_rows,
        )

    def same_up_to_columns(self, other: "IncidenceMatrix") -> bool:
        """True when both matrices have the same rows and the same multiset of columns."""
        if self.node_order != other.node_order or self.parent_rows != other.parent_rows:
            return False
        if self.shape != other.shape:
            return False
        mine = sorted(map(tuple, self.entries.T.tolist()))
        theirs = sorted(map(tuple, other.entries.T.tolist()))
        return mine == theirs


def build_incidence(net: LayeredNetwork, parent_layer: Layer, child_layer: Layer) -> IncidenceMatrix:
    """
    Incidence matrix of the forest between two consecutive layers.

    Args:
        net: Network holding both layers.
        parent_layer: Upper layer (level l + 1).
        child_layer: Lower layer (level l).

    Returns:
        IncidenceMatrix with one column per edge, ordered by child id.

    Raises:
        NonConsecutiveLayers: The layers are not adjacent levels of ``net``.
        OrphanChild: A child-layer node has no parent in ``parent_layer``.
    """
    known = {layer.level: layer.members for layer in net.layers}
    if (
        parent_layer.level != child_layer.level + 1
        or known.get(parent_layer.level) != parent_layer.members
        or known.get(child_layer.level) != child_layer.members
    ):
        raise NonConsecutiveLayers(
            f"Layers {parent_layer.level} and {child_layer.level} are not consecutive layers of the network"
        )

    parents = parent_layer.members
    children = child_layer.members
    node_order = parents + children
    row_of = {node: i for i, node in enumerate(node_order)}
    parent_of = net.parent_map()

    edges = []
    for child in children:
        parent = parent_of.get(child)
        if parent is None or parent not in row_of or row_of[parent] >= len(parents):
            raise OrphanChild(f"Child node {child} has no parent in layer {parent_layer.level}")
        edges.append((parent, child))

    entries = np.zeros((len(node_order), len(edges)), dtype=np.int8)
    for j, (parent, child) in enumerate(edges):
        entries[row_of[parent], j] = -1
        entries[row_of[child], j] = 1

    return IncidenceMatrix(
        entries=entries,
        node_order=node_order,
        edge_order=tuple(edges),
        parent_rows=tuple(range(len(parents))),
        child_rows=tuple(range(len(parents), len(node_order))),
    )


def split_incidence(A: IncidenceMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """Split A into the parent block A_d and the child block A_i."""
    if not A.parent_rows:
        raise EmptyParentSet("Incidence matrix has no parent rows")
    A_d = A.entries[list(A.parent_rows), :]
    A_i = A.entries[list(A.child_rows), :]
    return A_d, A_i


def reconstruct_from_incidence(A: IncidenceMatrix, labels: Optional[dict] = None) -> LayeredNetwork:
    """
    Rebuild the unique two-layer forest encoded by an incidence matrix.

    A matrix without columns encodes no edges: its meters come back isolated,
    all in a single layer.

    Raises:
        MalformedColumn: A column does not hold exactly one +1 and one -1.
    """
    entries = A.entries
    edges = []
    for j in range(entries.shape[1]):
        column = entries[:, j]
        leaving = np.flatnonzero(column == -1)
        entering = np.flatnonzero(column == 1)
        if len(leaving) != 1 or len(entering) != 1 or np.count_nonzero(column) != 2:
            raise MalformedColumn(f"Column {j} does not hold exactly one +1 and one -1")
        edges.append((A.node_order[leaving[0]], A.node_order[entering[0]]))

    parents = [A.node_order[i] for i in A.parent_rows]
    children = [A.node_order[i] for i in A.child_rows]
    logger.debug(f"Reconstructed {len(edges)} edges over {len(parents)} parents and {len(children)} children")
    if not edges:
        return LayeredNetwork(layers=(Layer(1, tuple(A.node_order)),), edges=frozenset(), labels=labels or {})
    return two_layer_network(parents, children, edges, labels=labels)
