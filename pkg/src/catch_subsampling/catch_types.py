import enum
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np


class CatchError(Exception):
    pass


class InvalidInputError(CatchError):
    pass


class OutOfDomainError(CatchError):
    pass


class SingularSystemError(CatchError):
    pass


class GeometryError(CatchError):
    pass


class PointFileError(CatchError):
    def __init__(self, path: str, line: int, reason: str) -> None:
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line


class StabilityViolatedError(CatchError):
    pass


class NoConvergenceError(CatchError):
    """Raised when an iterative solver hits its iteration cap; `partial` is its best iterate."""

    def __init__(self, message: str, partial: object = None) -> None:
        super().__init__(message)
        self.partial = partial


class InternalToleranceError(CatchError):
    """Raised when the LP phase 1 ends infeasible although the moments lie in the cone."""

    def __init__(self, message: str, phase_one_objective: float) -> None:
        super().__init__(message)
        self.phase_one_objective = phase_one_objective


@enum.unique
class SolverKind(str, enum.Enum):
    NNLS = "nnls"
    LP = "lp"


@enum.unique
class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class PivotedQR:
    q: np.ndarray
    r: np.ndarray
    perm: np.ndarray


@dataclass(frozen=True)
class NnlsResult:
    u: np.ndarray
    residual_norm: float
    iterations: int

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.u > 0)


@dataclass(frozen=True)
class LpResult:
    u: np.ndarray
    objective: float
    basis: Tuple[int, ...]
    status: LpStatus
    pivots: int = 0


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Points of R^d (one per row) carrying strictly positive masses."""
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self) -> None:
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        masses = np.asarray(self.masses, dtype=float).reshape(-1)
        if points.shape[0] < 1 or points.shape[0] != masses.shape[0]:
            raise InvalidInputError(
                f"Measure needs as many masses as points, got {points.shape[0]} points and {masses.shape[0]} masses")
        if not np.all(np.isfinite(points)) or not np.all(np.isfinite(masses)):
            raise InvalidInputError("Measure points and masses must be finite")
        if np.any(masses <= 0):
            raise InvalidInputError("Measure masses must be strictly positive")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "masses", masses)

    @staticmethod
    def with_unit_masses(points: np.ndarray) -> "DiscreteMeasure":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return DiscreteMeasure(points=points, masses=np.ones(points.shape[0]))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    @property
    def has_unit_masses(self) -> bool:
        return bool(np.all(self.masses == 1.0))


@dataclass(frozen=True)
class PolynomialSpace:
    """Total-degree polynomials of degree <= `degree` in `dim_d` variables on the box `bbox`."""
    dim_d: int
    degree: int
    bbox: Tuple[Tuple[float, float], ...]
    exponents: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        # Delay import, polyspace needs these types
        from catch_subsampling.polyspace import exponent_list

        if self.dim_d not in (1, 2, 3):
            raise InvalidInputError(f"Only dimensions 1 to 3 are supported, got {self.dim_d}")
        if self.degree < 0:
            raise InvalidInputError(f"Degree must be nonnegative, got {self.degree}")
        bbox = tuple((float(a), float(b)) for a, b in self.bbox)
        if len(bbox) != self.dim_d:
            raise InvalidInputError(f"Bounding box has {len(bbox)} sides for dimension {self.dim_d}")
        if any(not np.isfinite(a) or not np.isfinite(b) or b <= a for a, b in bbox):
            raise InvalidInputError(f"Bounding box {bbox} must have positive volume")
        object.__setattr__(self, "bbox", bbox)
        object.__setattr__(self, "exponents", tuple(exponent_list(self.dim_d, self.degree)))

    @staticmethod
    def enclosing(points: np.ndarray, degree: int) -> "PolynomialSpace":
        """The space on the minimal box surrounding `points`; flat sides get a unit half-width."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        lower = points.min(axis=0)
        upper = points.max(axis=0)
        bbox = []
        for a, b in zip(lower, upper):
            if b <= a:
                a, b = a - 1.0, b + 1.0
            bbox.append((float(a), float(b)))
        return PolynomialSpace(dim_d=points.shape[1], degree=degree, bbox=tuple(bbox))

    def with_degree(self, degree: int) -> "PolynomialSpace":
        return PolynomialSpace(dim_d=self.dim_d, degree=degree, bbox=self.bbox)

    @property
    def dimension(self) -> int:
        return len(self.exponents)


@dataclass(frozen=True, eq=False)
class OrthoFactorization:
    """A basis of S|_X that is orthonormal in the ell^2 product weighted by the measure masses.

    Row i of `v` holds psi_1(x_i), ..., psi_N(x_i); psi = phi[:, perm[:N]] R_N^{-1}.
    """
    v: np.ndarray
    r_n: np.ndarray
    perm: np.ndarray
    rank_n: int
    space: PolynomialSpace
    measure: DiscreteMeasure

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        # Delay import, catch_core needs these types
        from catch_subsampling.catch_core import evaluate_basis
        return evaluate_basis(self, points)


@dataclass(frozen=True, eq=False)
class CompressedRule:
    node_indices: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    residual: float
    exactness_degree: int
    rank_n: int
    solver_used: SolverKind
    original_size: int

    @property
    def size(self) -> int:
        return self.node_indices.shape[0]

    @property
    def is_identity(self) -> bool:
        return self.size == self.original_size and self.residual == 0.0

    def as_measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(points=self.nodes, masses=self.weights)


@dataclass(frozen=True, eq=False)
class LSFit:
    degree: int
    coefficients: np.ndarray
    basis_fact: OrthoFactorization

    @property
    def sample(self) -> DiscreteMeasure:
        return self.basis_fact.measure


@dataclass(frozen=True)
class StabilityFactors:
    alpha: float
    beta: float
    epsilon_sqrt_m: float


@dataclass(frozen=True, eq=False)
class CatchLsReport:
    ls: LSFit
    cls: LSFit
    rule: CompressedRule
    rmse_ls: float
    rmse_cls: float


@dataclass(frozen=True)
class CompressionOptions:
    rtol: Optional[float] = None
    ktol: Optional[float] = None
    zero_tol: float = 1e-13
    max_iterations: Optional[int] = None
    known_rank: Optional[int] = None
