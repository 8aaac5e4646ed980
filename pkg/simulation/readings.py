from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
import pandas as pd

from config.noise import ACCURACY_CLASS_PCT, INTERVAL_MINUTES, LOSS_PCT_RANGE
from grid.network import NodeId
from utils.errors import InvalidNoiseConfig, MissingChildRow


@dataclass(frozen=True)
class ReadingsMatrix:
    """
    Energy readings Z in watt-hours, one row per meter and one column per interval.

    Row i belongs to ``node_order[i]``.
    """

    values: np.ndarray
    node_order: Tuple[NodeId, ...]
    interval_minutes: float = INTERVAL_MINUTES

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values.reshape(1, -1)
        node_order = tuple(NodeId(int(node)) for node in self.node_order)
        if values.shape[0] != len(node_order):
            raise ValueError(f"{values.shape[0]} rows but {len(node_order)} meters in node_order")
        if len(set(node_order)) != len(node_order):
            raise ValueError("node_order lists a meter twice")
        if not np.all(np.isfinite(values)):
            raise ValueError("Readings must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "node_order", node_order)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]

    @property
    def row_of(self) -> Dict[NodeId, int]:
        return {node: i for i, node in enumerate(self.node_order)}

    def row_means(self) -> np.ndarray:
        return self.values.mean(axis=1)

    def rows(self, nodes: Iterable[NodeId]) -> "ReadingsMatrix":
        """Sub-matrix with the given meters, in the given order."""
        row_of = self.row_of
        nodes = list(nodes)
        missing = [node for node in nodes if node not in row_of]
        if missing:
            raise MissingChildRow(f"No readings for meters {missing[:5]}")
        return ReadingsMatrix(self.values[[row_of[node] for node in nodes], :], tuple(nodes), self.interval_minutes)

    def with_values(self, values: np.ndarray) -> "ReadingsMatrix":
        return ReadingsMatrix(values, self.node_order, self.interval_minutes)

    def scaled(self, factor: float) -> "ReadingsMatrix":
        return self.with_values(self.values * factor)

    def to_frame(self, names: Optional[Dict[NodeId, str]] = None) -> pd.DataFrame:
        """One row per interval, one column per meter id (or name)."""
        columns = [names[node] if names else str(int(node)) for node in self.node_order]
        frame = pd.DataFrame(self.values.T, columns=columns)
        frame.index.name = "interval"
        return frame


@dataclass(frozen=True)
class NoiseConfig:
    """Parameters of the simulated losses, meter errors and clock-synchronization errors."""

    loss_pct_range: Tuple[float, float] = LOSS_PCT_RANGE
    accuracy_class_pct: float = ACCURACY_CLASS_PCT
    interval_minutes: float = INTERVAL_MINUTES
    rng_seed: int = 0
    losses: bool = True
    meter_error: bool = True
    sync_error: bool = True

    def __post_init__(self):
        low, high = (float(v) for v in self.loss_pct_range)
        object.__setattr__(self, "loss_pct_range", (low, high))
        if not 0 <= low <= high:
            raise InvalidNoiseConfig(f"Loss range must satisfy 0 <= low <= high, got ({low}, {high})")
        if self.accuracy_class_pct <= 0:
            raise InvalidNoiseConfig(f"Accuracy class must be positive, got {self.accuracy_class_pct}")
        if self.interval_minutes < 1:
            raise InvalidNoiseConfig(f"Interval must be at least 1 minute, got {self.interval_minutes}")

    @classmethod
    def noise_free(cls, **overrides) -> "NoiseConfig":
        settings = dict(losses=False, meter_error=False, sync_error=False)
        settings.update(overrides)
        return cls(**settings)

    def to_dict(self) -> Dict:
        return {
            "loss_pct_range": list(self.loss_pct_range),
            "accuracy_class_pct": self.accuracy_class_pct,
            "interval_minutes": self.interval_minutes,
            "rng_seed": self.rng_seed,
            "losses": self.losses,
            "meter_error": self.meter_error,
            "sync_error": self.sync_error,
        }

    @classmethod
    def from_dict(cls, document: Dict) -> "NoiseConfig":
        return cls(
            loss_pct_range=tuple(document.get("loss_pct_range", LOSS_PCT_RANGE)),
            accuracy_class_pct=document.get("accuracy_class_pct", ACCURACY_CLASS_PCT),
            interval_minutes=document.get("interval_minutes", INTERVAL_MINUTES),
            rng_seed=document.get("rng_seed", 0),
            losses=document.get("losses", True),
            meter_error=document.get("meter_error", True),
            sync_error=document.get("sync_error", True),
        )

