import csv
import logging
import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.optimize
from scipy.stats import qmc

from catch_subsampling.catch_types import (
    CompressedRule, DiscreteMeasure, GeometryError, InvalidInputError, PointFileError,
)

logger = logging.getLogger(__name__)

Box = Tuple[Tuple[float, float], ...]

_BOUNDARY_XTOL = 1e-15

_DEFAULT_FILE_DIM = 2

_DIM_COMMENT = re.compile(r"^#\s*dim\s*=\s*(\d+)\s*$")


class DomainSpec(ABC):
    dim: int

    @abstractmethod
    def contains(self, points: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def bounding_box(self) -> Box:
        ...


@dataclass(frozen=True)
class BoxDomain(DomainSpec):
    bounds: Box

    def __post_init__(self) -> None:
        if not self.bounds or any(b <= a for a, b in self.bounds):
            raise GeometryError(f"Box bounds {self.bounds} must be ordered")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def contains(self, points: np.ndarray) -> np.ndarray:
        lower, upper = np.array(self.bounds).T
        return np.all((points >= lower) & (points <= upper), axis=1)

    def bounding_box(self) -> Box:
        return tuple((float(a), float(b)) for a, b in self.bounds)


@dataclass(frozen=True)
class DiskUnionDomain(DomainSpec):
    centers: Tuple[Tuple[float, float], ...]
    radii: Tuple[float, ...]
    dim: int = 2

    def __post_init__(self) -> None:
        if not self.centers or len(self.centers) != len(self.radii):
            raise GeometryError(f"Need one radius per center, got {len(self.centers)} and {len(self.radii)}")
        if any(r <= 0 for r in self.radii):
            raise GeometryError(f"Disk radii must be positive, got {self.radii}")

    def contains(self, points: np.ndarray) -> np.ndarray:
        centers = np.array(self.centers)
        radii = np.array(self.radii)
        distances = np.linalg.norm(points[:, np.newaxis, :] - centers[np.newaxis, :, :], axis=2)
        return np.any(distances <= radii, axis=1)

    def bounding_box(self) -> Box:
        centers = np.array(self.centers)
        radii = np.array(self.radii)[:, np.newaxis]
        lower = (centers - radii).min(axis=0)
        upper = (centers + radii).max(axis=0)
        return tuple((float(a), float(b)) for a, b in zip(lower, upper))


@dataclass(frozen=True)
class LevelSetDomain(DomainSpec):
    """The sublevel set {a x^4 + b y^4 <= threshold}, a smooth convex domain."""
    threshold: float
    x_weight: float = 1.0
    y_weight: float = 4.0
    dim: int = 2

    def __post_init__(self) -> None:
        if self.threshold <= 0 or self.x_weight <= 0 or self.y_weight <= 0:
            raise GeometryError(
                f"Level set needs positive threshold and weights, got {self.threshold}, "
                f"{self.x_weight} and {self.y_weight}")

    def level(self, points: np.ndarray) -> np.ndarray:
        return self.x_weight * points[:, 0] ** 4 + self.y_weight * points[:, 1] ** 4

    def contains(self, points: np.ndarray) -> np.ndarray:
        return self.level(points) <= self.threshold

    def bounding_box(self) -> Box:
        half_x = (self.threshold / self.x_weight) ** 0.25
        half_y = (self.threshold / self.y_weight) ** 0.25
        return (-half_x, half_x), (-half_y, half_y)


# Keeps 5625 of the first 10000 Halton points of its bounding box
FOUR_DISKS = DiskUnionDomain(
    centers=((0.0, 0.0), (1.5, 0.0), (3.0, 0.0), (1.5, 1.45)),
    radii=(0.8, 0.8, 0.8, 0.8),
)

QUARTIC = LevelSetDomain(threshold=1.0)

PRESETS: Dict[str, DomainSpec] = {
    "four_disks": FOUR_DISKS,
    "quartic": QUARTIC,
}


def get_preset(name: str) -> DomainSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise InvalidInputError(f"Unknown preset {name!r}, expected one of {sorted(PRESETS)}")


def halton(count: int, d: int, skip: int = 0) -> np.ndarray:
    """Halton points in (0, 1)^d with bases 2, 3, 5; point i is the radical inverse of i + skip + 1."""
    if not 1 <= d <= 3:
        raise InvalidInputError(f"Halton points are generated in dimensions 1 to 3, got {d}")
    if count < 0 or skip < 0:
        raise InvalidInputError(f"Count and skip must be nonnegative, got {count} and {skip}")
    sampler = qmc.Halton(d=d, scramble=False)
    # Index 0 is the origin
    sampler.fast_forward(skip + 1)
    return sampler.random(count)


def _scale_to_box(unit_points: np.ndarray, box: Box) -> np.ndarray:
    lower = np.array([a for a, _ in box])
    upper = np.array([b for _, b in box])
    return np.clip(lower + unit_points * (upper - lower), lower, upper)


def filter_domain(points: np.ndarray, spec: DomainSpec) -> Tuple[np.ndarray, int]:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != spec.dim:
        raise InvalidInputError(f"Points have dimension {points.shape[1]} but the domain has {spec.dim}")
    kept = points[spec.contains(points)]
    return kept, kept.shape[0]


def domain_halton(spec: DomainSpec, count: int, skip: int = 0) -> np.ndarray:
    """The Halton points of the domain, taken from `count` Halton points of its bounding box."""
    candidates = _scale_to_box(halton(count, spec.dim, skip), spec.bounding_box())
    kept, accepted = filter_domain(candidates, spec)
    logger.debug(f"Kept {accepted} of {count} Halton points inside the domain")
    return kept


def preset_points(name: str, halton_count: int = 10_000, skip: int = 0) -> DiscreteMeasure:
    return DiscreteMeasure.with_unit_masses(domain_halton(get_preset(name), halton_count, skip))


def boundary_sample(spec: LevelSetDomain, per_arc: int) -> np.ndarray:
    """Points of the level curve at 4 * per_arc equally spaced angles, found by bracketed root finding."""
    if not isinstance(spec, LevelSetDomain):
        raise GeometryError(f"Boundary sampling needs a level set domain, got {type(spec).__name__}")
    if per_arc < 1:
        raise InvalidInputError(f"Need at least one point per arc, got {per_arc}")
    radius_max = 2.0 * max(b for _, b in spec.bounding_box())
    points: List[Tuple[float, float]] = []
    for k in range(4 * per_arc):
        angle = k * (math.pi / 2) / per_arc
        direction = np.array([math.cos(angle), math.sin(angle)])

        def excess(radius: float) -> float:
            return float(spec.level((radius * direction)[np.newaxis, :])[0] - spec.threshold)

        try:
            radius = scipy.optimize.brentq(excess, 0.0, radius_max, xtol=_BOUNDARY_XTOL)
        except ValueError as e:
            raise GeometryError(f"Could not bracket the boundary at angle {angle:.6f}: {e}")
        points.append(tuple(radius * direction))
    lower, upper = np.array(spec.bounding_box()).T
    # Roots may land an ulp outside the box
    return np.clip(np.array(points), lower, upper)


def level_set_mesh(spec: LevelSetDomain, n: int, skip: int = 0) -> np.ndarray:
    """Boundary plus interior sample used as a degree-n mesh of a level set domain.

    4(n+1) boundary points per quarter arc, and the Halton points of the domain taken from 26(n+1)^2 Halton
    points of its bounding box.
    """
    boundary = boundary_sample(spec, 4 * (n + 1))
    interior = domain_halton(spec, 26 * (n + 1) ** 2, skip)
    return np.vstack([boundary, interior])


def control_points(spec: DomainSpec, count: int, skip: int = 0) -> np.ndarray:
    """A fine control set of the domain: Halton points of the domain, plus a dense boundary when there is one."""
    points = domain_halton(spec, count, skip)
    if isinstance(spec, LevelSetDomain):
        per_arc = max(1, int(math.sqrt(count)))
        points = np.vstack([points, boundary_sample(spec, per_arc)])
    return points


def read_points(path: str, dim: Optional[int] = None) -> DiscreteMeasure:
    """Reads a point file: rows x[,y[,z]][,weight], '#' comments; weights default to 1.

    A '# dim=d' comment fixes the dimension. Without it the dimension is `dim`, or 2 when that is missing.
    """
    rows: List[Tuple[int, List[str]]] = []
    header_dim: Optional[int] = None
    with open(path, "r", encoding="utf-8", newline="") as f:
        for line_number, row in enumerate(csv.reader(f), start=1):
            if not row or not "".join(row).strip():
                continue
            if row[0].lstrip().startswith("#"):
                match = _DIM_COMMENT.match(",".join(row).strip())
                if match:
                    header_dim = int(match.group(1))
                continue
            rows.append((line_number, row))

    if header_dim is not None and dim is not None and header_dim != dim:
        raise PointFileError(path, 0, f"file declares dim={header_dim} but dimension {dim} was requested")
    if header_dim is not None and header_dim < 1:
        raise PointFileError(path, 0, f"dimension must be positive, got dim={header_dim}")
    dim = header_dim or dim or _DEFAULT_FILE_DIM

    coordinates: List[List[float]] = []
    masses: List[float] = []
    for line_number, row in rows:
        if len(row) not in (dim, dim + 1):
            raise PointFileError(path, line_number, f"expected {dim} or {dim + 1} columns, got {len(row)}")
        try:
            values = [float(cell) for cell in row]
        except ValueError:
            raise PointFileError(path, line_number, f"not a number in {row}")
        if not all(math.isfinite(value) for value in values):
            raise PointFileError(path, line_number, "values must be finite")
        coordinates.append(values[:dim])
        masses.append(values[dim] if len(values) > dim else 1.0)
    if not coordinates:
        raise PointFileError(path, 0, "no points found")
    if header_dim is None and all(len(row) == dim + 1 for _, row in rows):
        logger.warning(f"{path} has no '# dim=' comment, reading column {dim + 1} as weights of {dim}D points")
    try:
        return DiscreteMeasure(points=np.array(coordinates), masses=np.array(masses))
    except InvalidInputError as e:
        raise PointFileError(path, 0, str(e))


def _format_row(values: np.ndarray) -> List[str]:
    return [repr(float(value)) for value in values]


def write_points(path: str, measure: DiscreteMeasure, header: Tuple[str, ...] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        for comment in header:
            f.write(f"# {comment}\n")
        f.write(f"# dim={measure.dim}\n")
        writer = csv.writer(f, lineterminator="\n")
        for point, mass in zip(measure.points, measure.masses):
            writer.writerow(_format_row(np.append(point, mass)))


def write_rule(path: str, rule: CompressedRule) -> None:
    header = (
        f"epsilon={rule.residual!r}",
        f"exactness_degree={rule.exactness_degree}",
        f"solver={rule.solver_used.value}",
        f"rank={rule.rank_n}",
        f"original_size={rule.original_size}",
    )
    write_points(path, rule.as_measure(), header)
