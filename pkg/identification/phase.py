import logging
import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from config.pca import AMBIGUITY_TOLERANCE
from grid.network import Edge, NodeId
from identification.noise_estimation import NoiseStats, estimate_noise_stats, separate_mean
from identification.pca import PcaModel, estimate_constraint_count, fit_constraint_model
from simulation.readings import NoiseConfig, ReadingsMatrix
from utils.errors import InsufficientSamples, SingularDependentBlock

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PairDiagnostics:
    """Numerical health of one layer-pair identification."""

    parent_level: int
    n_parents: int
    n_children: int
    samples: int
    spectral_gap: float
    condition_number: float
    estimated_constraints: int
    margins: np.ndarray
    max_deviation: float
    ambiguous_columns: Tuple[int, ...] = ()
    seconds: float = 0.0

    @property
    def min_margin(self) -> float:
        return float(self.margins.min()) if self.margins.size else float("inf")

    def to_row(self) -> Dict:
        return {
            "parent_level": self.parent_level,
            "n_parents": self.n_parents,
            "n_children": self.n_children,
            "samples": self.samples,
            "spectral_gap": self.spectral_gap,
            "condition_number": self.condition_number,
            "estimated_constraints": self.estimated_constraints,
            "min_margin": self.min_margin,
            "max_deviation": self.max_deviation,
            "ambiguous_columns": len(self.ambiguous_columns),
            "seconds": self.seconds,
        }


@dataclass(frozen=True)
class LayerPairResult:
    """Connectivity between one parent layer and the layer below it."""

    parent_level: int
    parents: Tuple[NodeId, ...]
    children: Tuple[NodeId, ...]
    raw_regression: np.ndarray
    rounded_regression: np.ndarray
    inferred_edges: Tuple[Edge, ...]
    diagnostics: PairDiagnostics
    noise_stats: Optional[NoiseStats] = None
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def ambiguous(self) -> bool:
        return bool(self.diagnostics.ambiguous_columns)


def rounding_margins(R_hat: np.ndarray) -> np.ndarray:
    """Per column, distance to 1 of the runner-up entry minus that of the chosen entry."""
    distance = np.abs(np.asarray(R_hat, dtype=float) - 1.0)
    if distance.shape[0] < 2:
        return np.full(distance.shape[1], np.inf)
    ordered = np.sort(distance, axis=0)
    return ordered[1] - ordered[0]


def round_regression(R_hat: np.ndarray) -> np.ndarray:
    """
    Per column, set the entry closest to 1 to 1 and every other entry to 0.

    Ties go to the lowest row index.
    """
    R_hat = np.asarray(R_hat, dtype=float)
    rounded = np.zeros(R_hat.shape, dtype=np.int8)
    if R_hat.size:
        winners = np.argmin(np.abs(R_hat - 1.0), axis=0)
        rounded[winners, np.arange(R_hat.shape[1])] = 1
    return rounded


def ambiguous_columns(R_hat: np.ndarray, tolerance: float = AMBIGUITY_TOLERANCE) -> Tuple[int, ...]:
    return tuple(int(j) for j in np.flatnonzero(rounding_margins(R_hat) <= tolerance))


def identify_phase(
    Z: ReadingsMatrix,
    parents: Iterable[NodeId],
    children: Iterable[NodeId],
    cfg: Optional[NoiseConfig] = None,
    whiten: bool = True,
    parent_level: int = 2,
) -> LayerPairResult:
    """
    Assign every child meter to one parent meter.

    Estimates the loss mean and the error covariance of the pair, subtracts
    the loss mean, fits the whitened constraint model with one constraint per
    parent and rounds the regression matrix.

    Args:
        Z: Readings covering at least the parents and the children.
        parents: Parent meters (dependent variables).
        children: Child meters (independent variables).
        cfg: Accuracy class and interval length used by the estimators.
        whiten: If False, run plain PCA on the mean-separated data.
        parent_level: Level of the parent layer, recorded on the result.

    Returns:
        LayerPairResult with the inferred edges and diagnostics.

    Raises:
        InsufficientSamples: Fewer intervals than meters in the pair.
        SingularDependentBlock: The parent block of the constraint matrix is singular, or
            a meter reads zero in every interval.
    """
    start = time.perf_counter()
    parents = tuple(sorted(NodeId(int(p)) for p in parents))
    children = tuple(sorted(NodeId(int(c)) for c in children))
    cfg = cfg or NoiseConfig(interval_minutes=Z.interval_minutes)

    pair = Z.rows(parents + children)
    n, p = pair.n, len(parents)
    if pair.N < n:
        raise InsufficientSamples(f"Layer pair {parent_level} has {n} meters but only {pair.N} intervals")
    idle = [int(node) for node, row in zip(pair.node_order, pair.values) if not np.any(row)]
    if idle:
        raise SingularDependentBlock(
            f"Layer pair {parent_level}: meters {idle[:5]} read zero in every interval; "
            f"an empty phase cannot be identified"
        )

    stats = estimate_noise_stats(pair, parents, children, cfg.accuracy_class_pct, cfg.interval_minutes)
    separated = separate_mean(pair, stats.mu_lambda)
    cov = stats.covariance() if whiten else None
    model: PcaModel = fit_constraint_model(separated, p, cov)

    R_hat = model.regression_matrix
    rounded = round_regression(R_hat)
    winners = np.argmax(rounded, axis=0)
    edges = tuple((parents[winners[j]], child) for j, child in enumerate(children))

    ambiguous = ambiguous_columns(R_hat)
    if ambiguous:
        logger.warning(
            f"Layer pair {parent_level}: ambiguous rounding for {len(ambiguous)} children, "
            f"e.g. meter {children[ambiguous[0]]}; assigned to the lowest parent"
        )

    diagnostics = PairDiagnostics(
        parent_level=parent_level,
        n_parents=p,
        n_children=len(children),
        samples=pair.N,
        spectral_gap=model.spectral_gap,
        condition_number=float(model.condition_number),
        estimated_constraints=estimate_constraint_count(model.singular_values),
        margins=rounding_margins(R_hat),
        max_deviation=float(np.abs(R_hat - rounded).max()) if R_hat.size else 0.0,
        ambiguous_columns=ambiguous,
        seconds=time.perf_counter() - start,
    )
    logger.info(
        f"Layer pair {parent_level}: {len(children)} children over {p} parents, "
        f"gap {diagnostics.spectral_gap:.3g}, min margin {diagnostics.min_margin:.3f}"
    )
    return LayerPairResult(
        parent_level=parent_level,
        parents=parents,
        children=children,
        raw_regression=R_hat,
        rounded_regression=rounded,
        inferred_edges=edges,
        diagnostics=diagnostics,
        noise_stats=stats,
        singular_values=model.singular_values,
    )

