import logging
import math
from typing import Optional

import numpy as np

from catch_subsampling.catch_types import (
    CompressedRule, CompressionOptions, DiscreteMeasure, InternalToleranceError, InvalidInputError, LpStatus,
    NoConvergenceError, OrthoFactorization, PolynomialSpace, SolverKind,
)
from catch_subsampling.dense_linalg import numerical_rank, pivoted_qr, solve_upper_triangular
from catch_subsampling.polyspace import vandermonde
from catch_subsampling.sparse_solvers import nnls, power_sum, simplex_lp

logger = logging.getLogger(__name__)


def orthonormal_basis(measure: DiscreteMeasure, space: PolynomialSpace, rtol: Optional[float] = None,
                      known_rank: Optional[int] = None) -> OrthoFactorization:
    """Orthonormalizes the generators of `space` on the support of `measure`.

    N is the numerical rank of U = (phi_k(x_i)) unless `known_rank` is given. The pivoted QR of sqrt(Lambda) U
    selects N independent generators, and rescaling the rows of Q(:, :N) by 1/sqrt(lambda_i) gives
    psi_j(x_i), orthonormal in the ell^2 product weighted by lambda.
    """
    if measure.dim != space.dim_d:
        raise InvalidInputError(f"Measure has dimension {measure.dim} but the space has {space.dim_d}")
    u = vandermonde(measure.points, space)
    rank_n = known_rank if known_rank is not None else numerical_rank(u, rtol)
    if not 1 <= rank_n <= min(u.shape):
        raise InvalidInputError(f"Rank {rank_n} is impossible for a {u.shape[0]}x{u.shape[1]} Vandermonde matrix")
    if rank_n < space.dimension:
        logger.debug(f"Generators are rank deficient on the support, rank {rank_n} < {space.dimension}")

    sqrt_masses = np.sqrt(measure.masses)
    qr = pivoted_qr(sqrt_masses[:, np.newaxis] * u)
    v = qr.q[:, :rank_n] / sqrt_masses[:, np.newaxis]
    return OrthoFactorization(v=v, r_n=qr.r[:rank_n, :rank_n], perm=qr.perm, rank_n=rank_n, space=space,
                              measure=measure)


def evaluate_basis(fact: OrthoFactorization, points: np.ndarray) -> np.ndarray:
    """psi_j at arbitrary points of the space box, one row per point."""
    generators = vandermonde(points, fact.space)[:, fact.perm[:fact.rank_n]]
    return solve_upper_triangular(fact.r_n, generators.T, transposed=True).T


def moments(fact: OrthoFactorization, measure: DiscreteMeasure) -> np.ndarray:
    """b_j = sum_i lambda_i psi_j(x_i)."""
    return fact.v.T @ measure.masses


def integrate(measure: DiscreteMeasure, f_values: np.ndarray) -> float:
    return float(measure.masses @ _as_values(f_values, measure.size))


def _as_values(f_values: np.ndarray, length: int) -> np.ndarray:
    values = np.asarray(f_values, dtype=float).reshape(-1)
    if values.shape[0] != length:
        raise InvalidInputError(f"Expected {length} function values, got {values.shape[0]}")
    return values


def _identity_rule(measure: DiscreteMeasure, exactness_degree: int, rank_n: int,
                   solver: SolverKind) -> CompressedRule:
    return CompressedRule(
        node_indices=np.arange(measure.size),
        nodes=measure.points.copy(),
        weights=measure.masses.copy(),
        residual=0.0,
        exactness_degree=exactness_degree,
        rank_n=rank_n,
        solver_used=solver,
        original_size=measure.size,
    )


def compress(measure: DiscreteMeasure, exactness_degree: int, solver: SolverKind = SolverKind.NNLS,
             options: Optional[CompressionOptions] = None,
             space: Optional[PolynomialSpace] = None) -> CompressedRule:
    """Caratheodory-Tchakaloff compression of a discrete measure.

    Returns a positive rule on at most N = dim(P_nu|_X) of the support points whose moments match those of
    the measure up to the reported residual. `space` defaults to degree-nu polynomials on the box
    surrounding the support.
    """
    options = options or CompressionOptions()
    solver = SolverKind(solver)
    if space is None:
        space = PolynomialSpace.enclosing(measure.points, exactness_degree)
    elif space.degree != exactness_degree:
        space = space.with_degree(exactness_degree)

    fact = orthonormal_basis(measure, space, rtol=options.rtol, known_rank=options.known_rank)
    if measure.size <= fact.rank_n:
        logger.debug(f"Nothing to compress, {measure.size} points for rank {fact.rank_n}")
        return _identity_rule(measure, exactness_degree, fact.rank_n, solver)

    a = fact.v.T
    b = moments(fact, measure)
    if solver == SolverKind.NNLS:
        try:
            u = nnls(a, b, ktol=options.ktol, max_iterations=options.max_iterations).u
        except NoConvergenceError as e:
            if e.partial is not None:
                logger.warning(f"NNLS stopped with residual {e.partial.residual_norm:.3e}")
            raise
    else:
        # Same as default_objective when nu = 2n
        c = power_sum(measure.points, exactness_degree + 1, space)
        result = simplex_lp(a, b, c)
        if result.status == LpStatus.INFEASIBLE:
            logger.error(f"Simplex phase 1 objective is {result.objective:.3e} although the moments are feasible")
            raise InternalToleranceError(
                "Linear program reported infeasible moments, internal tolerances are too tight",
                phase_one_objective=result.objective)
        if result.status != LpStatus.OPTIMAL:
            raise NoConvergenceError(f"Linear program ended {result.status.value}")
        u = result.u

    threshold = options.zero_tol * u.max(initial=0.0)
    node_indices = np.flatnonzero(u > threshold)
    weights = u[node_indices]
    residual = float(np.linalg.norm(fact.v[node_indices].T @ weights - b))
    logger.info(f"Compressed {measure.size} points to {node_indices.shape[0]} with {solver.value}, "
                f"rank {fact.rank_n}, residual {residual:.3e}")
    return CompressedRule(
        node_indices=node_indices,
        nodes=measure.points[node_indices],
        weights=weights,
        residual=residual,
        exactness_degree=exactness_degree,
        rank_n=fact.rank_n,
        solver_used=solver,
        original_size=measure.size,
    )


def compression_ratio(rule: CompressedRule, original_m: int) -> float:
    if rule.size < 1:
        raise InvalidInputError("Rule has no nodes")
    return original_m / rule.size


def error_bound(rule: CompressedRule, total_mass: float, best_approx_bound: float, f_l2_norm: float) -> float:
    """C_eps * E_S(f) + eps * ||f||, with C_eps = 2 (mu(X) + eps sqrt(mu(X)))."""
    epsilon = rule.residual
    c_epsilon = 2.0 * (total_mass + epsilon * math.sqrt(total_mass))
    return c_epsilon * best_approx_bound + epsilon * f_l2_norm


def apply_rule(rule: CompressedRule, f_values_on_x: np.ndarray) -> float:
    values = _as_values(f_values_on_x, rule.original_size)
    return float(rule.weights @ values[rule.node_indices])


def is_determining(points: np.ndarray, space: PolynomialSpace, rtol: Optional[float] = None) -> bool:
    """Whether no nonzero polynomial of the space vanishes on all the points."""
    return numerical_rank(vandermonde(points, space), rtol) == space.dimension
