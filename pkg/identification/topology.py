import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from grid.network import Edge, Layer, LayeredNetwork, NodeId, NodeLabel
from identification.phase import LayerPairResult, identify_phase
from simulation.readings import NoiseConfig, ReadingsMatrix
from utils.errors import GridTopError, LayerMetadataMissing, LayerPairError, MissingChildRow, NodeSetMismatch
from utils.thread_utils import worker_count

logger = logging.getLogger(__name__)

# Failures that end one layer pair or one benchmark trial, never the whole run
RECOVERABLE_ERRORS = (GridTopError, ValueError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class TopologyResult:
    """
    Identification outcome of every consecutive layer pair.

    ``network`` is assembled only when every pair succeeded; ``failures``
    holds the pairs that did not, keyed by parent level.
    """

    layers: Tuple[Layer, ...]
    pairs: Tuple[LayerPairResult, ...]
    failures: Mapping[int, LayerPairError] = field(default_factory=dict)
    network: Optional[LayeredNetwork] = None
    seconds: float = 0.0

    @property
    def complete(self) -> bool:
        return not self.failures

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return tuple(edge for pair in self.pairs for edge in pair.inferred_edges)

    @property
    def nodes(self) -> Tuple[NodeId, ...]:
        return tuple(sorted(node for layer in self.layers for node in layer.members))

    def pair(self, parent_level: int) -> LayerPairResult:
        for result in self.pairs:
            if result.parent_level == parent_level:
                return result
        raise KeyError(f"No result for layer pair {parent_level}")


class Score(NamedTuple):
    success: bool
    accuracy: float


def identify_topology(
    Z: ReadingsMatrix,
    layers: Sequence[Layer],
    cfg: Optional[NoiseConfig] = None,
    whiten: bool = True,
    labels: Optional[Mapping[NodeId, NodeLabel]] = None,
    max_workers: Optional[int] = None,
) -> TopologyResult:
    """
    Identify the connectivity of a layered network one layer pair at a time.

    Every pair (l+1, l) is solved on the rows of its own meters only, with
    noise statistics re-estimated on those rows. Pairs run concurrently; a
    failing pair is recorded and the others still report.

    Args:
        Z: Readings of every meter in ``layers``.
        layers: At least two consecutive layers.
        cfg: Accuracy class and interval length used by the estimators.
        whiten: If False, run plain PCA.
        labels: Names and roles carried onto the assembled network.
        max_workers: Worker threads, defaults to and capped by GRIDTOP_THREADS.

    Returns:
        TopologyResult with per-pair results and, if all succeeded, the network.
    """
    start = time.perf_counter()
    layers = tuple(sorted(layers, key=lambda layer: layer.level))
    if len(layers) < 2:
        raise LayerMetadataMissing(f"Topology identification needs at least 2 layers, got {len(layers)}")
    covered = {node for layer in layers for node in layer.members}
    unassigned = [node for node in Z.node_order if node not in covered]
    if unassigned:
        raise LayerMetadataMissing(f"No layer given for meters {unassigned[:5]}")
    unread = sorted(covered - set(Z.node_order))
    if unread:
        raise MissingChildRow(f"No readings for meters {unread[:5]}")

    cfg = cfg or NoiseConfig(interval_minutes=Z.interval_minutes)
    pairs = list(zip(layers[1:], layers[:-1]))
    workers = worker_count(max_workers, len(pairs))

    def run_pair(parent_layer: Layer, child_layer: Layer) -> Union[LayerPairResult, LayerPairError]:
        try:
            return identify_phase(Z, parent_layer.members, child_layer.members, cfg, whiten, parent_layer.level)
        except RECOVERABLE_ERRORS as e:
            logger.error(f"Layer pair {parent_layer.level} failed: {type(e).__name__}: {e}")
            return LayerPairError(parent_layer.level, e)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        outcomes = list(executor.map(lambda pair: run_pair(*pair), pairs))

    results: List[LayerPairResult] = []
    failures: Dict[int, LayerPairError] = {}
    for outcome in outcomes:
        if isinstance(outcome, LayerPairError):
            failures[outcome.parent_level] = outcome
        else:
            results.append(outcome)
    results.sort(key=lambda result: result.parent_level)

    network = None
    if not failures:
        edges = frozenset(edge for result in results for edge in result.inferred_edges)
        network = LayeredNetwork(layers=layers, edges=edges, labels=labels or {})

    elapsed = time.perf_counter() - start
    logger.info(
        f"Identified {len(results)} of {len(pairs)} layer pairs over {len(covered)} meters in {elapsed:.2f}s"
    )
    return TopologyResult(
        layers=layers,
        pairs=tuple(results),
        failures=failures,
        network=network,
        seconds=elapsed,
    )


def score(inferred: Union[TopologyResult, LayeredNetwork], truth: LayeredNetwork) -> Score:
    """
    Compare inferred connectivity with the true network.

    Returns:
        Score with success for an exact edge-set match and accuracy as the
        fraction of non-top meters assigned their true parent.

    Raises:
        NodeSetMismatch: The two sides cover different meters or layers.
    """
    if isinstance(inferred, LayeredNetwork):
        layers, edges = inferred.layers, tuple(inferred.edges)
    else:
        layers, edges = inferred.layers, inferred.edges
    partition = {layer.level: layer.members for layer in layers}
    if partition != {layer.level: layer.members for layer in truth.layers}:
        raise NodeSetMismatch("Inferred and true networks cover different meters or layers")

    true_parent = truth.parent_map()
    inferred_parent = {child: parent for parent, child in edges}
    if not true_parent:
        return Score(success=True, accuracy=1.0)
    correct = sum(1 for child, parent in true_parent.items() if inferred_parent.get(child) == parent)
    accuracy = correct / len(true_parent)
    return Score(success=frozenset(edges) == truth.edges, accuracy=accuracy)
