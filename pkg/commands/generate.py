import logging
import os
from dataclasses import replace
from typing import Dict, Optional

from commands.run_config import RunConfig
from config.path import NOISE_MANIFEST_FILE, READINGS_FILE, TOPOLOGY_FILE
from config.simulation import CONSUMERS_PER_PHASE_RANGE
from simulation.generator import GroundTruthGenerator
from simulation.ground_truth import GroundTruth
from simulation.rbts import RbtsSpec, gen_rbts_like
from utils.file_utils import write_manifest, write_readings, write_topology


def load_rbts_spec(path: Optional[str]) -> RbtsSpec:
    return RbtsSpec.from_json(path) if path else RbtsSpec.default()


def simulate(
    cfg: RunConfig,
    seed: int,
    multiplier: float,
    spec: Optional[RbtsSpec] = None,
    consumers_per_phase: Optional[int] = None,
) -> GroundTruth:
    """
    One ground-truth bundle for the configured network at N = multiplier x (n_i or n).

    ``consumers_per_phase`` fixes the phase network size instead of drawing it.
    A multilayer spec carrying an accuracy class overrides the configured one
    unless the class was set explicitly.
    """
    noise = replace(cfg.noise, rng_seed=seed)
    if cfg.network == "phase":
        size_range = (consumers_per_phase,) * 2 if consumers_per_phase else CONSUMERS_PER_PHASE_RANGE
        return GroundTruthGenerator(seed, noise, size_range, samples_multiplier=multiplier).ground_truth
    spec = spec or load_rbts_spec(cfg.spec_path)
    if cfg.profile_accuracy and spec.accuracy_class_pct is not None:
        noise = replace(noise, accuracy_class_pct=spec.accuracy_class_pct)
    samples = max(1, int(round(multiplier * spec.node_count)))
    return gen_rbts_like(spec, samples, seed, noise)


class BundleGenerator:
    """Simulates a ground-truth bundle and writes topology, readings and noise manifest."""

    def __init__(self, cfg: RunConfig, auto_execute: bool = True):
        """
        Args:
            cfg: Run configuration; the first N-multiplier sets the sample count.
            auto_execute: If True, generates and writes immediately.
        """
        self.logger = logging.getLogger(__name__)
        self.cfg = cfg
        self.ground_truth: Optional[GroundTruth] = None
        self.paths: Dict[str, str] = {
            "topology": os.path.join(cfg.out, TOPOLOGY_FILE),
            "readings": os.path.join(cfg.out, READINGS_FILE),
            "manifest": os.path.join(cfg.out, NOISE_MANIFEST_FILE),
        }

        if auto_execute:
            self.run()

    def run(self) -> Dict[str, str]:
        seed = self.cfg.resolved_seed()
        self.ground_truth = simulate(self.cfg, seed, self.cfg.n_multipliers[0])
        self.save()
        self.logger.info(
            f"Generated {self.cfg.network} bundle in {self.cfg.out}: "
            f"{self.ground_truth.n} meters, {self.ground_truth.N} intervals, seed {seed}"
        )
        return self.paths

    def save(self) -> None:
        gt = self.ground_truth
        write_topology(gt.network, self.paths["topology"])
        write_readings(gt.noisy_readings, self.paths["readings"], self.cfg.orientation)
        write_manifest(gt.manifest(), self.paths["manifest"])


def cmd_generate(cfg: RunConfig) -> Dict[str, str]:
    return BundleGenerator(cfg).paths
