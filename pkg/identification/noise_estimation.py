"""
Estimation of the error mean and diagonal error covariance from raw readings.

The parents-minus-children balance of a layer pair measures the total line
loss per interval. Its mean and variance are shared out over the parent
meters; meter and clock-synchronization error variances follow from the row
means alone.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from grid.network import NodeId
from identification.pca import ErrorCovariance
from simulation.readings import ReadingsMatrix
from utils.errors import EmptyPartition, MissingChildRow, NegativeVariance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseStats:
    """Estimated error statistics, one entry per row of the readings they came from."""

    node_order: Tuple[NodeId, ...]
    mu_lambda: np.ndarray
    sigma_lambda: np.ndarray
    sigma_epsilon: np.ndarray
    sigma_delta: np.ndarray
    mu_t: float
    var_lt: float

    @property
    def sigma_e(self) -> np.ndarray:
        return self.sigma_lambda + self.sigma_epsilon + self.sigma_delta

    def covariance(self) -> ErrorCovariance:
        return combine(self.sigma_lambda, self.sigma_epsilon, self.sigma_delta)

    def to_dict(self, parent_level: Optional[int] = None) -> Dict:
        """Same node schema as the simulator's noise manifest."""
        sigma_e = self.sigma_e
        nodes: List[Dict] = []
        for i, node in enumerate(self.node_order):
            nodes.append({
                "id": int(node),
                "mu_lambda": float(self.mu_lambda[i]),
                "sigma_lambda": float(self.sigma_lambda[i]),
                "sigma_epsilon": float(self.sigma_epsilon[i]),
                "sigma_delta": float(self.sigma_delta[i]),
                "sigma_e": float(sigma_e[i]),
            })
        document = {"mu_t": self.mu_t, "var_lt": self.var_lt, "nodes": nodes}
        if parent_level is not None:
            document = {"parent_level": parent_level, **document}
        return document


def _partition_rows(Z: ReadingsMatrix, parents: Iterable[NodeId], children: Iterable[NodeId]) -> Tuple[List[int], List[int]]:
    parents, children = list(parents), list(children)
    if not parents or not children:
        raise EmptyPartition(f"Need parents and children, got {len(parents)} parents and {len(children)} children")
    overlap = set(parents) & set(children)
    if overlap:
        raise EmptyPartition(f"Meters listed as both parent and child: {sorted(overlap)[:5]}")
    row_of = Z.row_of
    missing = [node for node in parents + children if node not in row_of]
    if missing:
        raise MissingChildRow(f"No readings for meters {missing[:5]}")
    return [row_of[node] for node in parents], [row_of[node] for node in children]


def _balance(Z: ReadingsMatrix, parent_rows: List[int], child_rows: List[int]) -> np.ndarray:
    """Per-interval sum of parent readings minus sum of child readings."""
    return Z.values[parent_rows].sum(axis=0) - Z.values[child_rows].sum(axis=0)


def estimate_mu(Z: ReadingsMatrix, parents: Iterable[NodeId], children: Iterable[NodeId]) -> Tuple[float, np.ndarray]:
    """
    Mean total loss and its share per parent meter.

    Each parent receives a fraction of the mean total loss proportional to the
    sum of its readings; all-zero parents share it uniformly.

    Returns:
        (mu_t, mu_lambda) with mu_lambda over the rows of Z, zero outside the parents.
    """
    parent_rows, child_rows = _partition_rows(Z, parents, children)
    mu_t = float(_balance(Z, parent_rows, child_rows).mean())

    totals = Z.values[parent_rows].sum(axis=1)
    grand_total = totals.sum()
    if grand_total == 0:
        shares = np.full(len(parent_rows), 1.0 / len(parent_rows))
    else:
        shares = totals / grand_total

    mu_lambda = np.zeros(Z.n)
    mu_lambda[parent_rows] = mu_t * shares
    return mu_t, mu_lambda


def separate_mean(Z: ReadingsMatrix, mu_lambda: np.ndarray) -> ReadingsMatrix:
    mu_lambda = np.asarray(mu_lambda, dtype=float)
    if mu_lambda.shape != (Z.n,):
        raise ValueError(f"Mean vector has shape {mu_lambda.shape}, expected ({Z.n},)")
    return Z.with_values(Z.values - mu_lambda[:, None])


def estimate_sigma_lambda(
    Z: ReadingsMatrix,
    parents: Iterable[NodeId],
    children: Iterable[NodeId],
    mu_t: float,
    balance_noise_var: float = 0.0,
) -> Tuple[float, np.ndarray]:
    """
    Total-loss variance and its share per parent meter.

    The variance of the balance uses the 1/N form; ``balance_noise_var``, the
    meter and sync error variance the balance carries, is subtracted from it
    and the result floored at zero. Each parent receives a share proportional
    to the variance of its raw readings; parents with constant readings share
    it uniformly.

    Returns:
        (var_lt, sigma_lambda) with sigma_lambda over the rows of Z, zero outside the parents.
    """
    parent_rows, child_rows = _partition_rows(Z, parents, children)
    if Z.N < 2:
        raise ValueError(f"Loss variance needs at least 2 intervals, got {Z.N}")
    if balance_noise_var < 0:
        raise NegativeVariance(f"Balance noise variance must be non-negative, got {balance_noise_var}")
    raw_var = float(np.mean((_balance(Z, parent_rows, child_rows) - mu_t) ** 2))
    var_lt = max(raw_var - balance_noise_var, 0.0)

    parent_var = Z.values[parent_rows].var(axis=1)
    total_var = parent_var.sum()
    shares = parent_var / total_var if total_var > 0 else np.full(len(parent_rows), 1.0 / len(parent_rows))

    sigma_lambda = np.zeros(Z.n)
    sigma_lambda[parent_rows] = var_lt * shares
    return var_lt, sigma_lambda


def estimate_sigma_epsilon(Z: ReadingsMatrix, alpha: float) -> np.ndarray:
    """(alpha * row mean / 300) squared: the accuracy class bounds three standard deviations."""
    if alpha <= 0:
        raise ValueError(f"Accuracy class must be positive, got {alpha}")
    return (alpha * Z.row_means() / 300.0) ** 2


def estimate_sigma_delta(Z: ReadingsMatrix, T: float) -> np.ndarray:
    """(row mean / (60 T)) squared for a one-second shift of a T-minute interval."""
    if T < 1:
        raise ValueError(f"Interval must be at least 1 minute, got {T}")
    return (Z.row_means() / (60.0 * T)) ** 2


def combine(sigma_lambda: np.ndarray, sigma_epsilon: np.ndarray, sigma_delta: np.ndarray) -> ErrorCovariance:
    """
    Sum the three variance vectors into a floored diagonal error covariance.

    Raises:
        NegativeVariance: Some input variance is negative.
    """
    parts = [np.asarray(part, dtype=float) for part in (sigma_lambda, sigma_epsilon, sigma_delta)]
    if len({part.shape for part in parts}) != 1:
        raise ValueError(f"Variance vectors differ in shape: {[part.shape for part in parts]}")
    for name, part in zip(("sigma_lambda", "sigma_epsilon", "sigma_delta"), parts):
        if np.any(part < 0):
            raise NegativeVariance(f"{name} has negative entries at rows {np.flatnonzero(part < 0)[:5].tolist()}")
    return ErrorCovariance.from_variances(parts[0] + parts[1] + parts[2])


def estimate_noise_stats(
    Z: ReadingsMatrix,
    parents: Iterable[NodeId],
    children: Iterable[NodeId],
    alpha: float,
    T: float,
) -> NoiseStats:
    """
    All error statistics of one layer pair from its raw readings.

    The loss variance excludes the meter and sync error variance of the pair's
    rows, which the balance also carries.

    Args:
        Z: Raw readings of the pair.
        parents: Parent meters.
        children: Child meters.
        alpha: Accuracy class in percent.
        T: Interval length in minutes.

    Returns:
        NoiseStats over the rows of Z.
    """
    parents, children = list(parents), list(children)
    parent_rows, child_rows = _partition_rows(Z, parents, children)
    sigma_epsilon = estimate_sigma_epsilon(Z, alpha)
    sigma_delta = estimate_sigma_delta(Z, T)
    pair_rows = parent_rows + child_rows
    balance_noise_var = float(sigma_epsilon[pair_rows].sum() + sigma_delta[pair_rows].sum())

    mu_t, mu_lambda = estimate_mu(Z, parents, children)
    var_lt, sigma_lambda = estimate_sigma_lambda(Z, parents, children, mu_t, balance_noise_var)
    stats = NoiseStats(
        node_order=Z.node_order,
        mu_lambda=mu_lambda,
        sigma_lambda=sigma_lambda,
        sigma_epsilon=sigma_epsilon,
        sigma_delta=sigma_delta,
        mu_t=mu_t,
        var_lt=var_lt,
    )
    logger.debug(f"Estimated loss mean {mu_t:.4f} Wh and variance {var_lt:.4f} Wh^2 over {len(parents)} parents")
    return stats
