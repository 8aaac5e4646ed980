from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from grid.network import LayeredNetwork, NodeId
from simulation.readings import NoiseConfig, ReadingsMatrix


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class InjectedNoise:
    """
    Exact record of the noise added to a ground-truth bundle.

    All per-meter vectors follow the readings' row order (ascending NodeId).
    ``edge_loss[i, j]`` is the loss on the line feeding meter i during interval
    j; it is booked on the parent of i.
    """

    edge_loss: np.ndarray
    loss_pct: np.ndarray
    distances: np.ndarray
    sigma_epsilon: np.ndarray
    sigma_delta: np.ndarray
    seed: int = 0

    def __post_init__(self):
        for name in ("edge_loss", "loss_pct", "distances", "sigma_epsilon", "sigma_delta"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @classmethod
    def empty(cls, n: int, N: int, seed: int = 0) -> "InjectedNoise":
        return cls(
            edge_loss=np.zeros((n, N)),
            loss_pct=np.zeros(n),
            distances=np.zeros(n),
            sigma_epsilon=np.zeros(n),
            sigma_delta=np.zeros(n),
            seed=seed,
        )


@dataclass(frozen=True)
class GroundTruth:
    """A simulated network with its noise-free readings, noisy readings and the injected noise."""

    network: LayeredNetwork
    true_readings: ReadingsMatrix
    noisy_readings: ReadingsMatrix
    injected: InjectedNoise
    config: NoiseConfig = field(default_factory=NoiseConfig)
    seed: int = 0

    @property
    def n(self) -> int:
        return self.true_readings.n

    @property
    def N(self) -> int:
        return self.true_readings.N

    def parent_loss(self) -> np.ndarray:
        """Per-meter realized loss term (n x N): the summed line losses of each meter's children."""
        row_of = self.true_readings.row_of
        loss = np.zeros_like(self.injected.edge_loss)
        for parent, child in self.network.edges:
            loss[row_of[parent]] += self.injected.edge_loss[row_of[child]]
        return loss

    @property
    def mu_lambda(self) -> np.ndarray:
        return self.parent_loss().mean(axis=1)

    @property
    def sigma_lambda(self) -> np.ndarray:
        return self.parent_loss().var(axis=1)

    @property
    def sigma_e(self) -> np.ndarray:
        return self.sigma_lambda + self.injected.sigma_epsilon + self.injected.sigma_delta

    def total_loss(self, parent_level: int) -> np.ndarray:
        """Realized total line loss per interval between ``parent_level`` and the layer below."""
        row_of = self.true_readings.row_of
        children = [row_of[child] for child in self.network.layer(parent_level - 1).members]
        return self.injected.edge_loss[children, :].sum(axis=0)

    def balance_noise_var(self, parent_level: int) -> float:
        """Variance the injected meter and sync errors add to the parents-minus-children balance."""
        row_of = self.true_readings.row_of
        rows = [
            row_of[node]
            for level in (parent_level, parent_level - 1)
            for node in self.network.layer(level).members
        ]
        return float((self.injected.sigma_epsilon[rows] + self.injected.sigma_delta[rows]).sum())

    def layer_pair_summary(self) -> List[Dict]:
        summary = []
        for layer in self.network.layers[1:]:
            loss = self.total_loss(layer.level)
            summary.append({
                "parent_level": layer.level,
                "total_loss_mean": float(loss.mean()),
                "total_loss_var": float(loss.var()),
                "balance_noise_var": self.balance_noise_var(layer.level),
            })
        return summary

    def node_summary(self) -> List[Dict]:
        mu_lambda = self.mu_lambda
        sigma_lambda = self.sigma_lambda
        rows = []
        for i, node in enumerate(self.true_readings.node_order):
            rows.append({
                "id": int(node),
                "mu_lambda": float(mu_lambda[i]),
                "sigma_lambda": float(sigma_lambda[i]),
                "sigma_epsilon": float(self.injected.sigma_epsilon[i]),
                "sigma_delta": float(self.injected.sigma_delta[i]),
                "sigma_e": float(sigma_lambda[i] + self.injected.sigma_epsilon[i] + self.injected.sigma_delta[i]),
                "loss_pct": float(self.injected.loss_pct[i]),
                "distance": float(self.injected.distances[i]),
            })
        return rows

    def manifest(self) -> Dict:
        return {
            "seed": int(self.seed),
            "samples": int(self.N),
            "config": self.config.to_dict(),
            "nodes": self.node_summary(),
            "layer_pairs": self.layer_pair_summary(),
        }

    def names(self) -> Dict[NodeId, str]:
        return {node: label.name for node, label in self.network.labels.items()}

    def with_readings(self, noisy: Optional[ReadingsMatrix] = None, injected: Optional[InjectedNoise] = None) -> "GroundTruth":
        return GroundTruth(
            network=self.network,
            true_readings=self.true_readings,
            noisy_readings=noisy if noisy is not None else self.noisy_readings,
            injected=injected if injected is not None else self.injected,
            config=self.config,
            seed=self.seed,
        )
