import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from catch_subsampling.catch_types import (
    InvalidInputError, LpResult, LpStatus, NnlsResult, NoConvergenceError, PolynomialSpace,
)
from catch_subsampling.dense_linalg import as_finite_matrix
from catch_subsampling.polyspace import to_reference_box

logger = logging.getLogger(__name__)

# Pivot elements below this fraction of their column maximum are treated as zero
_PIVOT_RTOL = 1e-7

_FEASIBILITY_RTOL = 1e-9

_OPTIMALITY_RTOL = 1e-9

# Consecutive degenerate pivots tolerated before switching from Dantzig to Bland pricing
_STALL_LIMIT = 50

# Rounding allowance on the objective, in units of eps * rows * ||b||_1 * max |cost|
_MONOTONE_FACTOR = 1e3


def _as_vector(b: np.ndarray, length: int, name: str) -> np.ndarray:
    vector = np.asarray(b, dtype=float).reshape(-1)
    if vector.shape[0] != length:
        raise InvalidInputError(f"The {name} has length {vector.shape[0]}, expected {length}")
    if not np.all(np.isfinite(vector)):
        raise InvalidInputError(f"The {name} has non-finite entries")
    return vector


def _passive_solve(a: np.ndarray, b: np.ndarray, passive: np.ndarray) -> np.ndarray:
    s = np.zeros(a.shape[1])
    s[passive], *_ = scipy.linalg.lstsq(a[:, passive], b, lapack_driver="gelsy")
    return s


def nnls(a: np.ndarray, b: np.ndarray, ktol: Optional[float] = None,
         max_iterations: Optional[int] = None) -> NnlsResult:
    """Lawson-Hanson active set method for min ||a u - b||_2 subject to u >= 0.

    Stops when the dual vector a^t (b - a u) is <= ktol on the zero set. The default ktol is
    10 * eps * ||a||_1 * ||b||_2 and the default cap is 10 * cols iterations; reaching the cap raises
    NoConvergenceError carrying the current iterate.
    """
    a = as_finite_matrix(a, "NNLS matrix")
    b = _as_vector(b, a.shape[0], "NNLS right-hand side")
    cols = a.shape[1]
    if ktol is None:
        ktol = 10 * np.finfo(float).eps * np.linalg.norm(a, 1) * np.linalg.norm(b)
    if max_iterations is None:
        max_iterations = 10 * cols

    u = np.zeros(cols)
    passive = np.zeros(cols, dtype=bool)
    # Columns whose entry would not become positive, skipped until the iterate moves
    blocked = np.zeros(cols, dtype=bool)
    iterations = 0

    def best_iterate() -> NnlsResult:
        return NnlsResult(u=u.copy(), residual_norm=float(np.linalg.norm(b - a @ u)), iterations=iterations)

    while True:
        dual = a.T @ (b - a @ u)
        candidates = ~passive & ~blocked
        if not np.any(candidates) or dual[candidates].max() <= ktol:
            stuck = blocked & (dual > ktol)
            if np.any(stuck):
                logger.warning(f"NNLS stopped with dual {dual[stuck].max():.3e} above ktol {ktol:.3e} on "
                               f"{int(np.count_nonzero(stuck))} columns that cannot enter")
            break
        if iterations >= max_iterations:
            raise NoConvergenceError(f"NNLS did not converge in {max_iterations} iterations", best_iterate())

        entering = int(np.argmax(np.where(candidates, dual, -np.inf)))
        passive[entering] = True
        s = _passive_solve(a, b, passive)
        if s[entering] <= 0:
            passive[entering] = False
            blocked[entering] = True
            continue
        blocked[:] = False
        iterations += 1

        while np.any(s[passive] <= 0):
            if iterations >= max_iterations:
                raise NoConvergenceError(f"NNLS did not converge in {max_iterations} iterations", best_iterate())
            iterations += 1
            leaving = np.flatnonzero(passive & (s <= 0))
            ratios = u[leaving] / (u[leaving] - s[leaving])
            step = int(np.argmin(ratios))
            u = u + ratios[step] * (s - u)
            u[leaving[step]] = 0.0
            passive &= u > 0
            u[~passive] = 0.0
            s = _passive_solve(a, b, passive)
        u = s

    u[~passive] = 0.0
    residual_norm = float(np.linalg.norm(b - a @ u))
    logger.debug(f"NNLS converged in {iterations} iterations with {int(np.count_nonzero(passive))} "
                 f"positive entries and residual {residual_norm:.3e}")
    return NnlsResult(u=u, residual_norm=residual_norm, iterations=iterations)


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])


@dataclass(frozen=True)
class _Tolerances:
    """Simplex tolerances, scaled to the magnitude of the problem they are used on."""
    pivot_rtol: float
    feasibility: float
    optimality: float
    monotone_slack: float

    @classmethod
    def for_problem(cls, a: np.ndarray, b: np.ndarray, cost_row: np.ndarray) -> "_Tolerances":
        eps = np.finfo(float).eps
        b_scale = max(1.0, float(np.abs(b).max(initial=0.0)))
        cost_scale = max(1.0, float(np.abs(cost_row).max(initial=0.0)))
        return cls(
            pivot_rtol=_PIVOT_RTOL,
            feasibility=_FEASIBILITY_RTOL * b_scale,
            optimality=_OPTIMALITY_RTOL * cost_scale,
            monotone_slack=_MONOTONE_FACTOR * eps * a.shape[0] * max(1.0, float(np.abs(b).sum())) * cost_scale,
        )


def _entering_column(reduced_costs: np.ndarray, allowed: np.ndarray, use_bland: bool,
                     tolerances: _Tolerances) -> int:
    eligible = allowed & (reduced_costs < -tolerances.optimality)
    if not np.any(eligible):
        return -1
    if use_bland:
        return int(np.argmax(eligible))
    return int(np.argmin(np.where(eligible, reduced_costs, np.inf)))


def _leaving_row(tableau: np.ndarray, col: int, basis: List[int], use_bland: bool,
                 tolerances: _Tolerances) -> int:
    """Two-pass ratio test: bound the step with relaxed bounds, then take the largest pivot under it."""
    rows = tableau.shape[0] - 1
    column = tableau[:rows, col]
    rhs = tableau[:rows, -1]
    eligible = column > tolerances.pivot_rtol * max(1.0, float(np.abs(column).max()))
    if not np.any(eligible):
        return -1
    step_bound = np.min((rhs[eligible] + tolerances.feasibility) / column[eligible])
    ratios = np.full(rows, np.inf)
    ratios[eligible] = rhs[eligible] / column[eligible]
    ties = np.flatnonzero(ratios <= step_bound)
    if use_bland:
        # Bland tie-break: the row whose basic variable has the lowest index leaves
        return int(min(ties, key=lambda i: basis[i]))
    return int(ties[np.argmax(column[ties])])


def _run_simplex(tableau: np.ndarray, basis: List[int], allowed: np.ndarray, max_pivots: int,
                 phase: int, tolerances: _Tolerances) -> Tuple[LpStatus, int]:
    """Pivots until optimal or unbounded. The last row holds reduced costs and -objective."""
    use_bland = False
    stalled = 0
    pivots = 0
    objective = -tableau[-1, -1]
    while True:
        col = _entering_column(tableau[-1, :-1], allowed, use_bland, tolerances)
        if col < 0:
            return LpStatus.OPTIMAL, pivots
        row = _leaving_row(tableau, col, basis, use_bland, tolerances)
        if row < 0:
            return LpStatus.UNBOUNDED, pivots
        if pivots >= max_pivots:
            raise NoConvergenceError(f"Simplex phase {phase} exceeded {max_pivots} pivots")

        # The relaxed ratio test may pick a row a little below zero; it leaves at zero
        tableau[row, -1] = max(tableau[row, -1], 0.0)
        degenerate = tableau[row, -1] <= tolerances.feasibility
        _pivot(tableau, row, col)
        basis[row] = col
        pivots += 1

        new_objective = -tableau[-1, -1]
        if new_objective > objective + tolerances.monotone_slack:
            raise NoConvergenceError(
                f"Simplex phase {phase} objective increased from {objective:.6e} to {new_objective:.6e}")
        objective = min(objective, new_objective)

        stalled = stalled + 1 if degenerate else 0
        if stalled >= _STALL_LIMIT and not use_bland:
            logger.debug(f"Simplex phase {phase} stalled for {stalled} pivots, switching to Bland's rule")
            use_bland = True


def simplex_lp(a: np.ndarray, b: np.ndarray, c: np.ndarray, ftol: float = 1e-9,
               max_pivots: Optional[int] = None) -> LpResult:
    """Two-phase primal simplex on a dense tableau for min c^t u subject to a u = b, u >= 0.

    Dantzig pricing, falling back to Bland's rule after a run of degenerate pivots. An optimal result is a
    vertex, so it has at most rows nonzero entries.
    """
    a = as_finite_matrix(a, "LP matrix")
    rows, cols = a.shape
    b = _as_vector(b, rows, "LP right-hand side")
    c = _as_vector(c, cols, "LP objective")
    if max_pivots is None:
        max_pivots = 50 * (rows + cols)

    flip = np.where(b < 0, -1.0, 1.0)
    tableau = np.zeros((rows + 1, cols + rows + 1))
    tableau[:rows, :cols] = a * flip[:, np.newaxis]
    tableau[:rows, cols:cols + rows] = np.eye(rows)
    tableau[:rows, -1] = b * flip
    # Phase 1 minimizes the sum of the artificial variables
    tableau[-1, :cols] = -tableau[:rows, :cols].sum(axis=0)
    tableau[-1, -1] = -tableau[:rows, -1].sum()
    basis = list(range(cols, cols + rows))

    allowed = np.ones(cols + rows, dtype=bool)
    tolerances = _Tolerances.for_problem(a, b, tableau[-1, :-1])
    status, pivots = _run_simplex(tableau, basis, allowed, max_pivots, 1, tolerances)
    phase_one_objective = float(-tableau[-1, -1])
    if status != LpStatus.OPTIMAL or phase_one_objective > ftol * (1.0 + np.linalg.norm(b)):
        logger.warning(f"Simplex phase 1 ended {status.value} with objective {phase_one_objective:.3e}")
        return LpResult(u=np.zeros(cols), objective=phase_one_objective, basis=tuple(basis),
                        status=LpStatus.INFEASIBLE, pivots=pivots)

    # Drive the artificial variables out of the basis, dropping redundant rows
    keep_rows = []
    zero_entry = tolerances.pivot_rtol * max(1.0, float(np.abs(a).max()))
    for row in range(rows):
        if basis[row] >= cols:
            candidates = np.flatnonzero(np.abs(tableau[row, :cols]) > zero_entry)
            if candidates.shape[0] == 0:
                logger.debug(f"Simplex drops redundant constraint {row}")
                continue
            col = int(candidates[np.argmax(np.abs(tableau[row, candidates]))])
            _pivot(tableau, row, col)
            basis[row] = col
            pivots += 1
        keep_rows.append(row)
    basis = [basis[row] for row in keep_rows]

    phase_two = np.zeros((len(keep_rows) + 1, cols + 1))
    phase_two[:-1, :cols] = tableau[keep_rows, :cols]
    phase_two[:-1, -1] = np.maximum(tableau[keep_rows, -1], 0.0)
    basic_costs = c[basis]
    phase_two[-1, :cols] = c - basic_costs @ phase_two[:-1, :cols]
    phase_two[-1, -1] = -basic_costs @ phase_two[:-1, -1]
    tableau = phase_two

    status, phase_two_pivots = _run_simplex(
        tableau, basis, np.ones(cols, dtype=bool), max_pivots, 2, _Tolerances.for_problem(a, b, c))
    pivots += phase_two_pivots
    if status == LpStatus.UNBOUNDED:
        return LpResult(u=np.zeros(cols), objective=-np.inf, basis=tuple(basis), status=status, pivots=pivots)

    u = np.zeros(cols)
    u[basis] = np.maximum(tableau[:-1, -1], 0.0)
    u = _polish_basic_solution(a, b, basis, u)
    objective = float(c @ u)
    logger.debug(f"Simplex finished after {pivots} pivots with objective {objective:.6e}")
    return LpResult(u=u, objective=objective, basis=tuple(basis), status=LpStatus.OPTIMAL, pivots=pivots)


def _polish_basic_solution(a: np.ndarray, b: np.ndarray, basis: List[int], u: np.ndarray) -> np.ndarray:
    """Recomputes the basic variables from the original columns, keeping the tableau values on failure."""
    columns = np.array(sorted(set(basis)), dtype=int)
    solved, *_ = scipy.linalg.lstsq(a[:, columns], b, lapack_driver="gelsy")
    if np.any(solved < 0):
        return u
    polished = np.zeros_like(u)
    polished[columns] = solved
    if np.linalg.norm(a @ polished - b) > np.linalg.norm(a @ u - b):
        return u
    return polished


def default_objective(points: np.ndarray, n: int, space: PolynomialSpace) -> np.ndarray:
    """c_i = sum_j z_ij^(2n+1), with z the points mapped from the space box onto [-1, 1]^d."""
    return power_sum(points, 2 * n + 1, space)


def power_sum(points: np.ndarray, power: int, space: PolynomialSpace) -> np.ndarray:
    reference = to_reference_box(points, space.bbox)
    return np.sum(reference ** power, axis=1)
