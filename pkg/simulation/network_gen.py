import logging
from typing import Tuple

import numpy as np

from config.simulation import CONSUMERS_PER_PHASE_RANGE, PHASE_COUNT
from grid.network import Layer, LayeredNetwork, NodeId, NodeLabel

logger = logging.getLogger(__name__)

PHASE_NAMES = ("A", "B", "C")


def phase_name(index: int) -> str:
    return PHASE_NAMES[index] if index < len(PHASE_NAMES) else str(index + 1)


def gen_phase_network(
    consumers_per_phase_range: Tuple[int, int] = CONSUMERS_PER_PHASE_RANGE,
    seed: int = 0,
    phases: int = PHASE_COUNT,
) -> LayeredNetwork:
    """
    Random phase-connectivity network: transformer phase meters over consumer meters.

    Each phase independently receives a uniform number of consumers in the
    inclusive range. Phase meters take ids 0..phases-1; consumer ids follow and
    are shuffled across phases.

    Args:
        consumers_per_phase_range: Inclusive (low, high) consumers per phase.
        seed: Seed of the topology stream.
        phases: Number of parent meters.

    Returns:
        Two-layer LayeredNetwork.
    """
    low, high = (int(v) for v in consumers_per_phase_range)
    if low < 1 or high < low:
        raise ValueError(f"Consumers per phase range must satisfy 1 <= low <= high, got ({low}, {high})")

    rng = np.random.default_rng(seed)
    counts = rng.integers(low, high + 1, size=phases)
    total = int(counts.sum())

    consumer_ids = np.arange(phases, phases + total)
    rng.shuffle(consumer_ids)

    labels = {NodeId(k): NodeLabel(name=f"TX-{phase_name(k)}", role="transformer-phase") for k in range(phases)}
    edges = []
    start = 0
    for phase, count in enumerate(counts):
        for consumer in consumer_ids[start:start + count]:
            edges.append((NodeId(phase), NodeId(int(consumer))))
        start += count
    for consumer in range(phases, phases + total):
        labels[NodeId(consumer)] = NodeLabel(name=f"C{consumer - phases + 1:04d}", role="consumer")

    net = LayeredNetwork(
        layers=(Layer(1, tuple(range(phases, phases + total))), Layer(2, tuple(range(phases)))),
        edges=frozenset(edges),
        labels=labels,
    )
    logger.debug(f"Generated phase network with {phases} phases and {total} consumers (counts {counts.tolist()})")
    return net
