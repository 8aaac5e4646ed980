import logging
from typing import Mapping, Optional, Tuple

import numpy as np

from config.simulation import (
    CONSUMERS_PER_PHASE_RANGE,
    STREAM_DISTANCES,
    STREAM_LOADS,
    STREAM_METER_ERROR,
    STREAM_SYNC_ERROR,
    STREAM_TOPOLOGY,
)
from grid.network import LayeredNetwork, NodeId
from simulation.ground_truth import GroundTruth, InjectedNoise
from simulation.loads import aggregate_up, gen_consumer_loads
from simulation.network_gen import gen_phase_network
from simulation.noise import (
    draw_distances,
    inject_losses,
    inject_meter_error,
    inject_sync_error,
    meter_error_variance,
    sync_error_variance,
)
from simulation.readings import NoiseConfig, ReadingsMatrix
from utils.random_utils import derive_seed

logger = logging.getLogger(__name__)


def simulate_ground_truth(
    net: LayeredNetwork,
    consumer_readings: ReadingsMatrix,
    cfg: NoiseConfig,
    seed: int,
    distances: Optional[Mapping[NodeId, float]] = None,
) -> GroundTruth:
    """
    Aggregate consumer readings up the network and add losses, meter and sync errors.

    Each noise source draws from its own stream derived from ``seed``.
    """
    true_readings = aggregate_up(net, consumer_readings)
    gt = GroundTruth(
        network=net,
        true_readings=true_readings,
        noisy_readings=true_readings,
        injected=InjectedNoise.empty(true_readings.n, true_readings.N, seed),
        config=cfg,
        seed=seed,
    )

    if distances is None:
        distances = draw_distances(net, derive_seed(seed, STREAM_DISTANCES))
    gt = inject_losses(gt, cfg, distances)

    # Error variances follow the lossy readings, before any random error is added
    lossy = gt.noisy_readings
    sigma_epsilon = meter_error_variance(lossy, cfg.accuracy_class_pct) if cfg.meter_error else np.zeros(lossy.n)
    sigma_delta = sync_error_variance(lossy, cfg.interval_minutes) if cfg.sync_error else np.zeros(lossy.n)

    noisy = inject_meter_error(lossy, cfg, derive_seed(seed, STREAM_METER_ERROR))
    noisy = _add_sync_error(lossy, noisy, cfg, derive_seed(seed, STREAM_SYNC_ERROR))

    injected = InjectedNoise(
        edge_loss=gt.injected.edge_loss,
        loss_pct=gt.injected.loss_pct,
        distances=gt.injected.distances,
        sigma_epsilon=sigma_epsilon,
        sigma_delta=sigma_delta,
        seed=seed,
    )
    return gt.with_readings(noisy=noisy, injected=injected)


def _add_sync_error(lossy: ReadingsMatrix, noisy: ReadingsMatrix, cfg: NoiseConfig, seed: int) -> ReadingsMatrix:
    # Sync error is sized from the lossy readings so it does not depend on the meter-error draw
    jitter = inject_sync_error(lossy, cfg, seed)
    return noisy.with_values(noisy.values + (jitter.values - lossy.values))


class GroundTruthGenerator:
    """Generates a random phase-identification ground truth following the phase protocol."""

    def __init__(
        self,
        seed: int,
        cfg: Optional[NoiseConfig] = None,
        consumers_per_phase_range: Tuple[int, int] = CONSUMERS_PER_PHASE_RANGE,
        samples: Optional[int] = None,
        samples_multiplier: float = 2.0,
        auto_execute: bool = True,
    ):
        """
        Args:
            seed: Master seed; every random stream is derived from it.
            cfg: Noise configuration, defaults to NoiseConfig().
            consumers_per_phase_range: Inclusive consumer count range per phase.
            samples: Number of intervals N; when None, N = samples_multiplier * consumers.
            samples_multiplier: Multiple of the consumer count used when samples is None.
            auto_execute: If True, generates immediately.
        """
        self.logger = logging.getLogger(__name__)
        self.seed = int(seed)
        self.cfg = cfg or NoiseConfig(rng_seed=self.seed)
        self.consumers_per_phase_range = consumers_per_phase_range
        self.samples = samples
        self.samples_multiplier = samples_multiplier
        self.ground_truth: Optional[GroundTruth] = None

        if auto_execute:
            self.run()

    def run(self) -> GroundTruth:
        net = gen_phase_network(self.consumers_per_phase_range, derive_seed(self.seed, STREAM_TOPOLOGY))
        consumers = len(net.layers[0])
        N = self.samples or max(1, int(round(self.samples_multiplier * consumers)))
        loads = gen_consumer_loads(
            net, N, derive_seed(self.seed, STREAM_LOADS), interval_minutes=self.cfg.interval_minutes
        )
        self.ground_truth = simulate_ground_truth(net, loads, self.cfg, self.seed)
        self.logger.info(f"Generated phase ground truth: {len(net.nodes)} meters, {consumers} consumers, N={N}")
        return self.ground_truth

