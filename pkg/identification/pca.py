import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from config.pca import ABSOLUTE_VARIANCE_FLOOR, CONDITION_LIMIT, VARIANCE_FLOOR_RATIO
from simulation.readings import ReadingsMatrix
from utils.errors import InsufficientSamples, NegativeVariance, SingularCovariance, SingularDependentBlock

logger = logging.getLogger(__name__)

Matrix = Union[ReadingsMatrix, np.ndarray]


def _values(Z: Matrix) -> np.ndarray:
    return Z.values if isinstance(Z, ReadingsMatrix) else np.asarray(Z, dtype=float)


@dataclass(frozen=True)
class ErrorCovariance:
    """Diagonal error covariance of the readings, in watt-hours squared."""

    diagonal: np.ndarray

    def __post_init__(self):
        diagonal = np.array(self.diagonal, dtype=float, copy=True).ravel()
        if np.any(diagonal < 0) or not np.all(np.isfinite(diagonal)):
            raise NegativeVariance(f"Error variances must be finite and non-negative, got min {diagonal.min()}")
        diagonal.setflags(write=False)
        object.__setattr__(self, "diagonal", diagonal)

    @property
    def n(self) -> int:
        return self.diagonal.size

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.diagonal)

    @property
    def cholesky_factor(self) -> np.ndarray:
        """Lower-triangular L with L @ L.T equal to the covariance."""
        # A diagonal covariance factors into the element-wise square root
        return np.diag(self.std)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal)

    @classmethod
    def identity(cls, n: int) -> "ErrorCovariance":
        return cls(np.ones(n))

    @classmethod
    def from_variances(
        cls,
        variances: Sequence[float],
        floor_ratio: float = VARIANCE_FLOOR_RATIO,
        absolute_floor: float = ABSOLUTE_VARIANCE_FLOOR,
    ) -> "ErrorCovariance":
        """
        Covariance with every entry clamped to ``floor_ratio`` times the largest entry.

        An all-zero input is clamped to ``absolute_floor``.
        """
        variances = np.asarray(variances, dtype=float)
        if np.any(variances < 0):
            raise NegativeVariance(f"Negative error variance at rows {np.flatnonzero(variances < 0)[:5].tolist()}")
        largest = variances.max() if variances.size else 0.0
        floor = floor_ratio * largest if largest > 0 else absolute_floor
        clamped = int(np.sum(variances < floor))
        if clamped:
            logger.debug(f"Clamped {clamped} of {variances.size} error variances to {floor:.3e}")
        return cls(np.maximum(variances, floor))


@dataclass(frozen=True)
class PcaModel:
    """
    Constraint model z_d = R z_i identified from data.

    ``constraint_matrix`` holds C (p x n) in the coordinates of the input
    data; ``regression_matrix`` is None until a dependent/independent
    partition has been solved.
    """

    n_vars: int
    n_constraints: int
    singular_values: np.ndarray
    constraint_matrix: np.ndarray
    dependent_indices: Tuple[int, ...]
    independent_indices: Tuple[int, ...]
    regression_matrix: Optional[np.ndarray] = None
    condition_number: Optional[float] = None
    whitened: bool = True

    @property
    def spectral_gap(self) -> float:
        return spectral_gap(self.singular_values, self.n_constraints)


def whiten(Z: Matrix, cov: ErrorCovariance) -> np.ndarray:
    """
    Scale each row of Z by the inverse standard deviation of its error.

    Raises:
        SingularCovariance: Some error variance is zero.
    """
    values = _values(Z)
    if cov.n != values.shape[0]:
        raise ValueError(f"Covariance has {cov.n} entries for {values.shape[0]} rows")
    if np.any(cov.diagonal <= 0):
        raise SingularCovariance(
            f"Cannot whiten with zero error variance at rows {np.flatnonzero(cov.diagonal <= 0)[:5].tolist()}"
        )
    return values / cov.std[:, None]


def fit(Z_s: np.ndarray, p: int) -> PcaModel:
    """
    Left singular vectors of the p smallest singular values of Z_s.

    Args:
        Z_s: Whitened data, n variables by N samples.
        p: Number of constraints.

    Returns:
        PcaModel whose constraint matrix is U2s.T, still in whitened coordinates.

    Raises:
        InsufficientSamples: N < n.
    """
    Z_s = np.asarray(Z_s, dtype=float)
    n, N = Z_s.shape
    if N < n:
        raise InsufficientSamples(f"PCA needs at least as many samples as variables: N={N} < n={n}")
    if not 1 <= p < n:
        raise ValueError(f"Constraint count must satisfy 1 <= p < n, got p={p}, n={n}")
    if N == n:
        logger.warning(f"Sample count equals variable count (N = n = {n}); the constraint subspace is barely determined")

    try:
        U, s, _ = scipy.linalg.svd(Z_s, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        logger.debug("gesdd did not converge, retrying with gesvd")
        U, s, _ = scipy.linalg.svd(Z_s, full_matrices=False, lapack_driver="gesvd")

    U2s = U[:, n - p:]
    logger.debug(f"Singular values (smallest {p + 1}): {s[-(p + 1):]}")
    return PcaModel(
        n_vars=n,
        n_constraints=p,
        singular_values=s,
        constraint_matrix=U2s.T,
        dependent_indices=tuple(range(p)),
        independent_indices=tuple(range(p, n)),
    )


def unwhiten_constraints(U2s_T: np.ndarray, cov: ErrorCovariance) -> np.ndarray:
    """C = U2s.T L^-1; with a diagonal L, column j is divided by sqrt of variance j."""
    U2s_T = np.asarray(U2s_T, dtype=float)
    if U2s_T.shape[1] != cov.n:
        raise ValueError(f"Constraint matrix has {U2s_T.shape[1]} columns for {cov.n} variances")
    return U2s_T / cov.std[None, :]


def dependent_condition(C_hat: np.ndarray, dependent_indices: Sequence[int]) -> float:
    C_d = np.asarray(C_hat)[:, list(dependent_indices)]
    if C_d.shape[0] != C_d.shape[1]:
        raise ValueError(f"Dependent block must be square, got {C_d.shape}")
    return float(np.linalg.cond(C_d))


def regression(
    C_hat: np.ndarray,
    dependent_indices: Sequence[int],
    independent_indices: Sequence[int],
    condition_limit: float = CONDITION_LIMIT,
) -> np.ndarray:
    """
    Unique regression matrix R = -(C_d)^-1 C_i.

    Raises:
        SingularDependentBlock: The condition number of C_d exceeds ``condition_limit``.
    """
    C_hat = np.asarray(C_hat, dtype=float)
    condition = dependent_condition(C_hat, dependent_indices)
    if not np.isfinite(condition) or condition > condition_limit:
        raise SingularDependentBlock(
            f"Dependent block is singular (condition number {condition:.3e} > {condition_limit:.0e})"
        )
    C_d = C_hat[:, list(dependent_indices)]
    C_i = C_hat[:, list(independent_indices)]
    return -scipy.linalg.solve(C_d, C_i)


def spectral_gap(singular_values: np.ndarray, p: int) -> float:
    """Ratio of the (n-p)-th to the (n-p+1)-th singular value (descending order)."""
    s = np.asarray(singular_values, dtype=float)
    above, below = s[len(s) - p - 1], s[len(s) - p]
    return float(above / below) if below > 0 else float("inf")


def estimate_constraint_count(singular_values: np.ndarray) -> int:
    """Number of singular values below the largest gap of the log spectrum."""
    s = np.asarray(singular_values, dtype=float)
    if s.size < 2:
        return 0
    tiny = np.finfo(float).tiny
    logs = np.log(np.maximum(s, max(s.max() * 1e-300, tiny)))
    gaps = logs[:-1] - logs[1:]
    return int(s.size - (np.argmax(gaps) + 1))


def fit_constraint_model(
    Z: Matrix,
    p: int,
    cov: Optional[ErrorCovariance] = None,
    dependent_indices: Optional[Sequence[int]] = None,
    condition_limit: float = CONDITION_LIMIT,
) -> PcaModel:
    """
    Identify C and R from data with a known diagonal error covariance.

    Without ``cov`` the data are used as they are (plain PCA, appropriate
    when all errors share one variance).

    Args:
        Z: Data, n variables by N samples.
        p: Number of constraints.
        cov: Error covariance used for whitening.
        dependent_indices: Rows of the dependent variables, defaults to the first p.
        condition_limit: Largest accepted condition number of C_d.

    Returns:
        PcaModel with the constraint matrix in data coordinates and the regression matrix.
    """
    values = _values(Z)
    n = values.shape[0]
    whitened = cov is not None
    cov = cov if cov is not None else ErrorCovariance.identity(n)
    dependent = tuple(int(i) for i in (dependent_indices if dependent_indices is not None else range(p)))
    independent = tuple(i for i in range(n) if i not in set(dependent))
    if len(dependent) != p:
        raise ValueError(f"Expected {p} dependent indices, got {len(dependent)}")

    model = fit(whiten(values, cov), p)
    C_hat = unwhiten_constraints(model.constraint_matrix, cov)
    condition = dependent_condition(C_hat, dependent)
    R_hat = regression(C_hat, dependent, independent, condition_limit)
    return replace(
        model,
        constraint_matrix=C_hat,
        dependent_indices=dependent,
        independent_indices=independent,
        regression_matrix=R_hat,
        condition_number=condition,
        whitened=whitened,
    )
