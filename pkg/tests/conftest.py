from typing import Callable, Sequence

import numpy as np
import pytest

from grid.network import Layer, LayeredNetwork
from simulation.loads import aggregate_up, gen_consumer_loads
from simulation.readings import ReadingsMatrix


@pytest.fixture
def three_phase_forest() -> LayeredNetwork:
    """Phase meters P1..P3 (ids 0..2), each feeding three consumers C1..C9 (ids 3..11)."""
    edges = [(p, 3 + 3 * p + k) for p in range(3) for k in range(3)]
    return LayeredNetwork(
        layers=(Layer(1, tuple(range(3, 12))), Layer(2, (0, 1, 2))),
        edges=frozenset(edges),
    )


@pytest.fixture
def three_layer_network() -> LayeredNetwork:
    """Eight meters: root 0 over meters 1 and 2, which feed 3, 4 and 5, 6, 7."""
    return LayeredNetwork(
        layers=(Layer(1, (3, 4, 5, 6, 7)), Layer(2, (1, 2)), Layer(3, (0,))),
        edges=frozenset({(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6), (2, 7)}),
    )


@pytest.fixture
def make_forest() -> Callable[[np.random.Generator, Sequence[int]], LayeredNetwork]:
    """Random layered forest with the given layer sizes, lowest layer first; every parent has a child."""

    def build(rng: np.random.Generator, sizes: Sequence[int]) -> LayeredNetwork:
        layers, edges = [], []
        next_id = 0
        ids = []
        for size in sizes:
            ids.append(list(range(next_id, next_id + size)))
            next_id += size
        for level, members in enumerate(ids, start=1):
            layers.append(Layer(level, tuple(members)))
        for children, parents in zip(ids[:-1], ids[1:]):
            order = rng.permutation(children)
            for k, child in enumerate(order):
                parent = parents[k] if k < len(parents) else parents[rng.integers(len(parents))]
                edges.append((parent, int(child)))
        return LayeredNetwork(layers=tuple(layers), edges=frozenset(edges))

    return build


@pytest.fixture
def noise_free_readings() -> Callable[[LayeredNetwork, int, int], ReadingsMatrix]:
    def build(net: LayeredNetwork, N: int, seed: int = 0) -> ReadingsMatrix:
        return aggregate_up(net, gen_consumer_loads(net, N, seed))

    return build
