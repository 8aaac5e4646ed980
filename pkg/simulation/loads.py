import logging
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from config.noise import INTERVAL_MINUTES
from config.simulation import LOAD_RANGES_WH
from grid.network import LayeredNetwork, NodeId
from simulation.readings import ReadingsMatrix
from utils.errors import InfeasibleLoadSpec, MissingChildRow

logger = logging.getLogger(__name__)


def gen_consumer_loads(
    net: LayeredNetwork,
    N: int,
    seed: int = 0,
    load_ranges: Sequence[Tuple[float, float]] = LOAD_RANGES_WH,
    interval_minutes: float = INTERVAL_MINUTES,
) -> ReadingsMatrix:
    """
    Draw consumer readings from one of several uniform ranges per consumer.

    Each consumer picks a range with equal probability, then receives N
    independent draws from it.

    Args:
        net: Network whose lowest layer holds the consumers.
        N: Number of intervals.
        seed: Seed of the load stream.
        load_ranges: Candidate (low, high) ranges in watt-hours.
        interval_minutes: Interval length recorded on the result.

    Returns:
        ReadingsMatrix over the consumers only.
    """
    if N < 1:
        raise ValueError(f"Number of intervals must be at least 1, got {N}")
    consumers = net.layers[0].members
    rng = np.random.default_rng(seed)
    ranges = np.asarray(load_ranges, dtype=float)
    picks = rng.integers(0, len(ranges), size=len(consumers))
    low = ranges[picks, 0][:, None]
    high = ranges[picks, 1][:, None]
    values = rng.uniform(low, high, size=(len(consumers), N))
    return ReadingsMatrix(values, consumers, interval_minutes)


def uniform_bounds_from_mean_peak(average: float, peak: float) -> Tuple[float, float]:
    """
    Bounds of the unique uniform distribution with the given mean and maximum.

    Raises:
        InfeasibleLoadSpec: average > peak, or 2 * average - peak < 0.
    """
    if average > peak:
        raise InfeasibleLoadSpec(f"Average load {average} exceeds peak load {peak}")
    low = 2.0 * average - peak
    if low < 0:
        raise InfeasibleLoadSpec(
            f"No non-negative uniform load has mean {average} and maximum {peak} (minimum would be {low})"
        )
    return low, peak


def gen_mean_peak_loads(
    net: LayeredNetwork,
    N: int,
    mean_peak_wh: Mapping[NodeId, Tuple[float, float]],
    seed: int = 0,
    interval_minutes: float = INTERVAL_MINUTES,
) -> ReadingsMatrix:
    """Consumer readings drawn uniformly with a per-consumer mean and maximum."""
    if N < 1:
        raise ValueError(f"Number of intervals must be at least 1, got {N}")
    consumers = net.layers[0].members
    bounds = np.array([uniform_bounds_from_mean_peak(*mean_peak_wh[node]) for node in consumers], dtype=float)
    rng = np.random.default_rng(seed)
    values = rng.uniform(bounds[:, :1], bounds[:, 1:], size=(len(consumers), N))
    return ReadingsMatrix(values, consumers, interval_minutes)


def aggregate_up(net: LayeredNetwork, consumer_readings: ReadingsMatrix) -> ReadingsMatrix:
    """
    Fill every non-consumer meter with the sum of its children, layer by layer.

    Args:
        net: Network to aggregate over.
        consumer_readings: Readings covering exactly the lowest layer.

    Returns:
        Noise-free ReadingsMatrix over all nodes, in ascending NodeId order.

    Raises:
        MissingChildRow: consumer_readings does not cover the lowest layer.
    """
    consumers = set(net.layers[0].members)
    provided = set(consumer_readings.node_order)
    if provided != consumers:
        missing = sorted(consumers - provided)
        extra = sorted(provided - consumers)
        raise MissingChildRow(f"Consumer readings mismatch: missing {missing[:5]}, unexpected {extra[:5]}")

    nodes = net.nodes
    row_of = {node: i for i, node in enumerate(nodes)}
    values = np.zeros((len(nodes), consumer_readings.N))
    values[[row_of[node] for node in consumer_readings.node_order], :] = consumer_readings.values

    _sum_children_into_parents(net, values, row_of)
    return ReadingsMatrix(values, nodes, consumer_readings.interval_minutes)


def _sum_children_into_parents(
    net: LayeredNetwork,
    values: np.ndarray,
    row_of: Mapping[NodeId, int],
    extra: Optional[np.ndarray] = None,
) -> None:
    """In-place bottom-up aggregation; ``extra`` (same shape) is added on every edge."""
    for layer in net.layers[1:]:
        parent_rows = [row_of[node] for node in layer.members]
        values[parent_rows, :] = 0.0
        edges = net.edges_between(layer.level)
        parents = np.array([row_of[parent] for parent, _ in edges], dtype=int)
        children = np.array([row_of[child] for _, child in edges], dtype=int)
        if len(edges):
            flow = values[children, :]
            if extra is not None:
                flow = flow + extra[children, :]
            np.add.at(values, parents, flow)
