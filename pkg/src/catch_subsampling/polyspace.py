import math
from typing import Iterator, List, Tuple

import numpy as np
from numpy.polynomial import chebyshev

from catch_subsampling.catch_types import InvalidInputError, OutOfDomainError, PolynomialSpace

MultiIndex = Tuple[int, ...]


def space_dimension(d: int, degree: int) -> int:
    if d < 1 or degree < 0:
        raise InvalidInputError(f"Need d >= 1 and degree >= 0, got d={d} and degree={degree}")
    return math.comb(degree + d, d)


def _compositions(total: int, parts: int) -> Iterator[MultiIndex]:
    # Descending lexicographic order, e.g. (1, 0) before (0, 1)
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def exponent_list(d: int, degree: int) -> List[MultiIndex]:
    """Multi-indices of total degree <= `degree`, graded so that truncating by degree is a prefix."""
    space_dimension(d, degree)
    return [alpha for k in range(degree + 1) for alpha in _compositions(k, d)]


def to_reference_box(points: np.ndarray, bbox: Tuple[Tuple[float, float], ...]) -> np.ndarray:
    """Affine map of the box onto [-1, 1]^d; points outside the box raise OutOfDomainError."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != len(bbox):
        raise InvalidInputError(f"Points have dimension {points.shape[1]} but the box has {len(bbox)} sides")
    if not np.all(np.isfinite(points)):
        raise InvalidInputError("Points must be finite")
    lower = np.array([a for a, _ in bbox])
    upper = np.array([b for _, b in bbox])
    outside = np.any((points < lower) | (points > upper), axis=1)
    if np.any(outside):
        first = int(np.argmax(outside))
        raise OutOfDomainError(
            f"{int(np.count_nonzero(outside))} points lie outside the box {bbox}, first is {points[first].tolist()}")
    mapped = (2.0 * points - (lower + upper)) / (upper - lower)
    return np.clip(mapped, -1.0, 1.0)


def vandermonde(points: np.ndarray, space: PolynomialSpace) -> np.ndarray:
    """Product Chebyshev basis of `space` at the points, one row per point and one column per exponent."""
    reference = to_reference_box(points, space.bbox)
    exponents = np.array(space.exponents, dtype=int).reshape(-1, space.dim_d)
    matrix = np.ones((reference.shape[0], exponents.shape[0]))
    for j in range(space.dim_d):
        table = chebyshev.chebvander(reference[:, j], space.degree)
        matrix *= table[:, exponents[:, j]]
    return matrix
