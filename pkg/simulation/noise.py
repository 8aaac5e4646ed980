import logging
from dataclasses import replace
from typing import Mapping, Tuple

import numpy as np

from config.noise import DISTANCE_CHOICES
from grid.network import LayeredNetwork, NodeId
from simulation.ground_truth import GroundTruth
from simulation.readings import NoiseConfig, ReadingsMatrix
from utils.errors import NonPositiveDistance

logger = logging.getLogger(__name__)


def draw_distances(net: LayeredNetwork, seed: int, choices=DISTANCE_CHOICES) -> dict:
    """Relative distance of every non-top meter from its source, drawn from ``choices``."""
    rng = np.random.default_rng(seed)
    children = [node for layer in net.layers[:-1] for node in layer.members]
    picks = rng.choice(np.asarray(choices, dtype=float), size=len(children))
    return {node: float(d) for node, d in zip(children, picks)}


def scale_to_range(products: np.ndarray, loss_pct_range: Tuple[float, float]) -> np.ndarray:
    """Affine map of the products onto [low, high]; equal products map to the midpoint."""
    low, high = loss_pct_range
    if products.size == 0:
        return products
    spread = products.max() - products.min()
    if spread <= 0:
        return np.full_like(products, (low + high) / 2.0, dtype=float)
    return low + (products - products.min()) / spread * (high - low)


def inject_losses(gt: GroundTruth, cfg: NoiseConfig, distances: Mapping[NodeId, float]) -> GroundTruth:
    """
    Add technical line losses to every parent meter.

    Layer pairs are processed bottom-up. For each child, the product of its
    distance and its mean flow is mapped onto the loss range of the pair; that
    percentage of the child's flow, interval by interval, is lost on the line
    and metered by the parent. Consumer rows never carry losses.

    Args:
        gt: Ground truth whose noise-free readings define the flows.
        cfg: Noise configuration (loss range and the losses toggle).
        distances: Relative distance of each non-top meter from its parent.

    Returns:
        GroundTruth with the losses added to noisy_readings and recorded in injected.

    Raises:
        NonPositiveDistance: A distance is missing, zero or negative.
    """
    net = gt.network
    readings = gt.true_readings
    row_of = readings.row_of
    children_all = [node for layer in net.layers[:-1] for node in layer.members]
    bad = [node for node in children_all if not distances.get(node, 0) > 0]
    if bad:
        raise NonPositiveDistance(f"Distances must be positive; offending meters {bad[:5]}")

    flows = np.array(readings.values, copy=True)
    edge_loss = np.zeros_like(flows)
    loss_pct = np.zeros(readings.n)
    distance_vector = np.zeros(readings.n)
    for node in children_all:
        distance_vector[row_of[node]] = distances[node]

    if cfg.losses:
        for layer in net.layers[1:]:
            edges = net.edges_between(layer.level)
            if not edges:
                continue
            children = np.array([row_of[child] for _, child in edges], dtype=int)
            parents = np.array([row_of[parent] for parent, _ in edges], dtype=int)
            products = distance_vector[children] * flows[children].mean(axis=1)
            pct = scale_to_range(products, cfg.loss_pct_range)
            loss_pct[children] = pct
            edge_loss[children] = pct[:, None] / 100.0 * flows[children]

            flows[[row_of[node] for node in layer.members]] = 0.0
            np.add.at(flows, parents, flows[children] + edge_loss[children])
            logger.debug(f"Layer pair {layer.level}: loss percentages in [{pct.min():.2f}, {pct.max():.2f}]")

    noisy = gt.noisy_readings.values + (flows - readings.values)
    injected = replace(gt.injected, edge_loss=edge_loss, loss_pct=loss_pct, distances=distance_vector)
    return gt.with_readings(noisy=gt.noisy_readings.with_values(noisy), injected=injected)


def meter_error_variance(readings: ReadingsMatrix, accuracy_class_pct: float) -> np.ndarray:
    """Variance whose 3-sigma equals the accuracy class percentage of each row mean."""
    sigma = accuracy_class_pct / 100.0 * np.abs(readings.row_means()) / 3.0
    return sigma ** 2


def sync_error_variance(readings: ReadingsMatrix, interval_minutes: float) -> np.ndarray:
    """Variance of the reading change caused by a one-second shift of the interval."""
    sigma = np.abs(readings.row_means()) / (60.0 * interval_minutes)
    return sigma ** 2


def inject_meter_error(readings: ReadingsMatrix, cfg: NoiseConfig, seed: int) -> ReadingsMatrix:
    """Zero-mean Gaussian meter error, sigma = (alpha / 100) * row mean / 3."""
    if not cfg.meter_error:
        return readings
    rng = np.random.default_rng(seed)
    sigma = np.sqrt(meter_error_variance(readings, cfg.accuracy_class_pct))
    return readings.with_values(readings.values + rng.normal(size=readings.values.shape) * sigma[:, None])


def inject_sync_error(readings: ReadingsMatrix, cfg: NoiseConfig, seed: int) -> ReadingsMatrix:
    """Zero-mean Gaussian clock-synchronization error, sigma = row mean / (60 T)."""
    if not cfg.sync_error:
        return readings
    rng = np.random.default_rng(seed)
    sigma = np.sqrt(sync_error_variance(readings, cfg.interval_minutes))
    return readings.with_values(readings.values + rng.normal(size=readings.values.shape) * sigma[:, None])
