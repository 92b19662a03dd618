import logging
import math
from typing import Optional

import numpy as np

from catch_subsampling.catch_core import compress, orthonormal_basis
from catch_subsampling.catch_types import (
    CatchLsReport, CompressedRule, CompressionOptions, DiscreteMeasure, InvalidInputError, LSFit,
    OrthoFactorization, PolynomialSpace, SolverKind, StabilityFactors, StabilityViolatedError,
)
from catch_subsampling.pointsets import halton

logger = logging.getLogger(__name__)

_CONTROL_FACTOR = 20

_MAX_CONTROL_POINTS = 100_000

_KERNEL_CHUNK = 1024


def _as_values(f_values: np.ndarray, length: int) -> np.ndarray:
    values = np.asarray(f_values, dtype=float).reshape(-1)
    if values.shape[0] != length:
        raise InvalidInputError(f"Expected {length} function values, got {values.shape[0]}")
    return values


def ls_fit(measure: DiscreteMeasure, f_values: np.ndarray, n: int,
           space: Optional[PolynomialSpace] = None, rtol: Optional[float] = None) -> LSFit:
    """Weighted discrete least squares polynomial of degree n, the lambda-orthogonal projection of f."""
    values = _as_values(f_values, measure.size)
    if space is None:
        space = PolynomialSpace.enclosing(measure.points, n)
    elif space.degree != n:
        space = space.with_degree(n)
    fact = orthonormal_basis(measure, space, rtol=rtol)
    coefficients = fact.v.T @ (measure.masses * values)
    return LSFit(degree=n, coefficients=coefficients, basis_fact=fact)


def evaluate_fit(fit: LSFit, query_points: np.ndarray) -> np.ndarray:
    return fit.basis_fact.evaluate(query_points) @ fit.coefficients


def rmse(f_values: np.ndarray, fit_values: np.ndarray, total_count: int) -> float:
    f_values = np.asarray(f_values, dtype=float).reshape(-1)
    fit_values = np.asarray(fit_values, dtype=float).reshape(-1)
    if f_values.shape != fit_values.shape:
        raise InvalidInputError(f"Cannot compare {f_values.shape[0]} values with {fit_values.shape[0]} values")
    return float(np.linalg.norm(f_values - fit_values) / math.sqrt(total_count))


def weighted_l2_norm(values: np.ndarray, weights: np.ndarray) -> float:
    return float(math.sqrt(np.asarray(weights, dtype=float) @ np.square(np.asarray(values, dtype=float))))


def catchls(measure: DiscreteMeasure, f_values: np.ndarray, n: int, solver: SolverKind = SolverKind.NNLS,
            options: Optional[CompressionOptions] = None, rule: Optional[CompressedRule] = None,
            space: Optional[PolynomialSpace] = None) -> CatchLsReport:
    """Least squares of degree n on X against least squares on the CATCH points of exactness 2n.

    Compression does not depend on f, so a `rule` computed once can be passed in for several functions; it
    must have exactness 2n for this measure.
    """
    values = _as_values(f_values, measure.size)
    if space is None:
        space = PolynomialSpace.enclosing(measure.points, n)
    if rule is None:
        rule = compress(measure, 2 * n, solver, options, space=space.with_degree(2 * n))
    elif rule.exactness_degree != 2 * n or rule.original_size != measure.size:
        raise InvalidInputError(
            f"Rule of exactness {rule.exactness_degree} on {rule.original_size} points does not fit degree {n} "
            f"least squares on {measure.size} points")

    rtol = options.rtol if options else None
    ls = ls_fit(measure, values, n, space=space, rtol=rtol)
    cls = ls_fit(rule.as_measure(), values[rule.node_indices], n, space=space, rtol=rtol)
    rmse_ls = rmse(values, evaluate_fit(ls, measure.points), measure.size)
    rmse_cls = rmse(values, evaluate_fit(cls, measure.points), measure.size)
    logger.debug(f"Degree {n}: RMSE {rmse_ls:.3e} by LS and {rmse_cls:.3e} by CATCHLS on {rule.size} points")
    return CatchLsReport(ls=ls, cls=cls, rule=rule, rmse_ls=rmse_ls, rmse_cls=rmse_cls)


def stability_factors(epsilon: float, big_m: int) -> StabilityFactors:
    """alpha = (1 - eps sqrt(M))^(-1/2) and beta = alpha (1 + eps / sqrt(M))^(1/2), defined for eps sqrt(M) < 1."""
    if epsilon < 0:
        raise InvalidInputError(f"Residual must be nonnegative, got {epsilon}")
    sqrt_m = math.sqrt(big_m)
    epsilon_sqrt_m = epsilon * sqrt_m
    if epsilon_sqrt_m >= 1:
        raise StabilityViolatedError(f"Residual {epsilon:.3e} is too large for {big_m} points, eps*sqrt(M) >= 1")
    alpha = (1.0 - epsilon_sqrt_m) ** -0.5
    beta = alpha * math.sqrt(1.0 + epsilon / sqrt_m)
    return StabilityFactors(alpha=alpha, beta=beta, epsilon_sqrt_m=epsilon_sqrt_m)


def _kernel_row_sums(fact: OrthoFactorization, control_points: np.ndarray) -> np.ndarray:
    sample_basis = fact.v
    masses = fact.measure.masses
    sums = np.empty(control_points.shape[0])
    for start in range(0, control_points.shape[0], _KERNEL_CHUNK):
        chunk = control_points[start:start + _KERNEL_CHUNK]
        kernel = fact.evaluate(chunk) @ sample_basis.T
        sums[start:start + _KERNEL_CHUNK] = np.abs(kernel) @ masses
    return sums


def default_control_points(fact: OrthoFactorization) -> np.ndarray:
    """Halton points of the space box, 20 times the sample size and at most 10^5."""
    count = min(_CONTROL_FACTOR * fact.measure.size, _MAX_CONTROL_POINTS)
    unit = halton(count, fact.space.dim_d)
    lower = np.array([a for a, _ in fact.space.bbox])
    upper = np.array([b for _, b in fact.space.bbox])
    return lower + unit * (upper - lower)


def operator_norm_estimate(fit_basis: OrthoFactorization, control_points: Optional[np.ndarray] = None) -> float:
    """Max over the control points of sum_i lambda_i |K_n(x, x_i)|, K_n(x, y) = sum_j psi_j(x) psi_j(y).

    This is the Lebesgue function of the discrete projection, estimating its uniform operator norm.
    """
    if control_points is None:
        control_points = default_control_points(fit_basis)
    control_points = np.atleast_2d(np.asarray(control_points, dtype=float))
    return float(_kernel_row_sums(fit_basis, control_points).max())


def ls_operator_bound(c_n: float, big_m: int) -> float:
    """C_n sqrt(M), the bound on the least squares operator norm on a polynomial mesh."""
    return c_n * math.sqrt(big_m)


def catch_mesh_bound(c_n: float, big_m: int, epsilon: float) -> float:
    """C_n sqrt(M) beta_M(eps), the mesh constant certified for the CATCH points of a polynomial mesh."""
    return ls_operator_bound(c_n, big_m) * stability_factors(epsilon, big_m).beta


def catchls_l2_error_bound(epsilon: float, big_m: int, best_approx: float) -> float:
    """(1 + beta_M(eps)) sqrt(M) E_n(f), bounding ||f - CATCHLS f|| in ell^2(X)."""
    return (1.0 + stability_factors(epsilon, big_m).beta) * math.sqrt(big_m) * best_approx


def approximate_rmse_factor(epsilon: float, big_m: int) -> float:
    """2 + eps sqrt(M) / 2, the RMSE factor in front of E_n(f) when eps sqrt(M) << 1."""
    return 2.0 + epsilon * math.sqrt(big_m) / 2.0


def uniform_error_bound(operator_norm: float, best_approx: float) -> float:
    return (1.0 + operator_norm) * best_approx
