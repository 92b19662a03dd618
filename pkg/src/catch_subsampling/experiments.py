import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from catch_subsampling.catch_core import compress, compression_ratio, orthonormal_basis
from catch_subsampling.catch_types import (
    CompressionOptions, DiscreteMeasure, PolynomialSpace, SolverKind, StabilityViolatedError,
)
from catch_subsampling.catchls import (
    catch_mesh_bound, catchls, ls_operator_bound, operator_norm_estimate,
)
from catch_subsampling.pointsets import LevelSetDomain, control_points, level_set_mesh
from catch_subsampling.polyspace import space_dimension

logger = logging.getLogger(__name__)

_CONTROL_FACTOR = 20

_MAX_CONTROL_POINTS = 100_000


def _radius(points: np.ndarray) -> np.ndarray:
    return np.linalg.norm(points, axis=1)


def gaussian(points: np.ndarray) -> np.ndarray:
    """f1(rho) = exp(-rho^2)."""
    return np.exp(-_radius(points) ** 2)


def power(points: np.ndarray) -> np.ndarray:
    """f2(rho) = (rho / 2)^5."""
    return (_radius(points) / 2) ** 5


TEST_FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "f1": gaussian,
    "f2": power,
}


@dataclass(frozen=True)
class SolverColumns:
    size: int
    compression_ratio: float
    residual: float
    rmse_cls: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class TableRow:
    degree: int
    space_dimension: int
    rmse_ls: Dict[str, float]
    by_solver: Dict[SolverKind, SolverColumns]


@dataclass(frozen=True)
class NormsRow:
    degree: int
    mesh_size: int
    rule_size: int
    residual: float
    ls_norm: float
    catchls_norm: float
    ls_bound: float
    catchls_bound: float

    @property
    def is_stable(self) -> bool:
        return not math.isnan(self.catchls_bound)


def table_row(measure: DiscreteMeasure, n: int, solvers: Tuple[SolverKind, ...],
              options: Optional[CompressionOptions] = None) -> TableRow:
    """One degree of the LS against CATCHLS comparison, for every solver and test function."""
    space = PolynomialSpace.enclosing(measure.points, n)
    values = {name: function(measure.points) for name, function in TEST_FUNCTIONS.items()}
    rmse_ls: Dict[str, float] = {}
    by_solver: Dict[SolverKind, SolverColumns] = {}
    for solver in solvers:
        rule = compress(measure, 2 * n, solver, options, space=space.with_degree(2 * n))
        rmse_cls: Dict[str, float] = {}
        for name, f_values in values.items():
            report = catchls(measure, f_values, n, solver, options, rule=rule, space=space)
            rmse_ls[name] = report.rmse_ls
            rmse_cls[name] = report.rmse_cls
        by_solver[solver] = SolverColumns(
            size=rule.size,
            compression_ratio=compression_ratio(rule, measure.size),
            residual=rule.residual,
            rmse_cls=rmse_cls,
        )
    logger.info(f"Finished degree {n} on {measure.size} points")
    return TableRow(degree=n, space_dimension=space_dimension(measure.dim, 2 * n), rmse_ls=rmse_ls,
                    by_solver=by_solver)


def norms_row(domain: LevelSetDomain, n: int, solver: SolverKind, mesh_constant: float, skip: int = 0,
              options: Optional[CompressionOptions] = None) -> NormsRow:
    """LS and CATCHLS uniform operator norms of degree n on a mesh of a level set domain."""
    measure = DiscreteMeasure.with_unit_masses(level_set_mesh(domain, n, skip))
    space = PolynomialSpace(dim_d=2, degree=n, bbox=domain.bounding_box())
    rule = compress(measure, 2 * n, solver, options, space=space.with_degree(2 * n))
    rtol = options.rtol if options else None
    ls_basis = orthonormal_basis(measure, space, rtol=rtol)
    catchls_basis = orthonormal_basis(rule.as_measure(), space, rtol=rtol)

    controls = control_points(domain, min(_CONTROL_FACTOR * measure.size, _MAX_CONTROL_POINTS), skip)
    try:
        catchls_bound = catch_mesh_bound(mesh_constant, measure.size, rule.residual)
    except StabilityViolatedError:
        logger.error(f"Degree {n}: residual {rule.residual:.3e} breaks eps*sqrt(M) < 1 on {measure.size} points")
        catchls_bound = math.nan
    row = NormsRow(
        degree=n,
        mesh_size=measure.size,
        rule_size=rule.size,
        residual=rule.residual,
        ls_norm=operator_norm_estimate(ls_basis, controls),
        catchls_norm=operator_norm_estimate(catchls_basis, controls),
        ls_bound=ls_operator_bound(mesh_constant, measure.size),
        catchls_bound=catchls_bound,
    )
    logger.info(f"Degree {n}: operator norm {row.ls_norm:.3f} by LS and {row.catchls_norm:.3f} by CATCHLS")
    return row


def table_header(solvers: Tuple[SolverKind, ...]) -> List[str]:
    header = ["n", "N_2n"]
    for solver in solvers:
        header += [f"m_{solver.value}", f"c_ratio_{solver.value}", f"epsilon_{solver.value}"]
    for name in TEST_FUNCTIONS:
        header.append(f"{name}_ls")
        header += [f"{name}_{solver.value}_catchls" for solver in solvers]
    return header


def table_values(row: TableRow, solvers: Tuple[SolverKind, ...]) -> List[object]:
    values: List[object] = [row.degree, row.space_dimension]
    for solver in solvers:
        columns = row.by_solver[solver]
        values += [columns.size, columns.compression_ratio, columns.residual]
    for name in TEST_FUNCTIONS:
        values.append(row.rmse_ls[name])
        values += [row.by_solver[solver].rmse_cls[name] for solver in solvers]
    return values


def table_text(rows: List[TableRow], solvers: Tuple[SolverKind, ...]) -> str:
    """Quantities as rows and degrees as columns, in the order of the printed comparison table."""
    lines: List[Tuple[str, List[str]]] = [
        ("deg n", [str(row.degree) for row in rows]),
        ("N_2n", [str(row.space_dimension) for row in rows]),
    ]
    for solver in solvers:
        lines.append((f"{solver.name}: m", [str(row.by_solver[solver].size) for row in rows]))
    for solver in solvers:
        lines.append((f"{solver.name}: C_ratio",
                      [f"{row.by_solver[solver].compression_ratio:.0f}" for row in rows]))
    for solver in solvers:
        lines.append((f"{solver.name}: residual", [f"{row.by_solver[solver].residual:.1e}" for row in rows]))
    for name in TEST_FUNCTIONS:
        lines.append((f"{name}: LS", [f"{row.rmse_ls[name]:.1e}" for row in rows]))
        for solver in solvers:
            lines.append((f"{solver.name}-CATCHLS", [f"{row.by_solver[solver].rmse_cls[name]:.1e}" for row in rows]))

    label_width = max(len(label) for label, _ in lines)
    cell_width = max(len(cell) for _, cells in lines for cell in cells)
    return "\n".join(
        f"{label:<{label_width}}  " + "  ".join(f"{cell:>{cell_width}}" for cell in cells)
        for label, cells in lines
    )


NORMS_HEADER = ["n", "M", "m", "epsilon", "ls_norm", "catchls_norm", "ls_bound", "catchls_bound"]


def norms_values(row: NormsRow) -> List[object]:
    return [row.degree, row.mesh_size, row.rule_size, row.residual, row.ls_norm, row.catchls_norm,
            row.ls_bound, row.catchls_bound]


def norms_text(rows: List[NormsRow]) -> str:
    lines = ["  ".join(f"{name:>13}" for name in NORMS_HEADER)]
    for row in rows:
        lines.append("  ".join([
            f"{row.degree:>13d}", f"{row.mesh_size:>13d}", f"{row.rule_size:>13d}", f"{row.residual:>13.1e}",
            f"{row.ls_norm:>13.3f}", f"{row.catchls_norm:>13.3f}", f"{row.ls_bound:>13.1f}",
            f"{row.catchls_bound:>13.1f}",
        ]))
    return "\n".join(lines)
