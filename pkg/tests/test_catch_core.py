import dataclasses

import numpy as np
import pytest

from catch_subsampling.catch_core import (
    apply_rule, compress, compression_ratio, error_bound, integrate, is_determining, moments, orthonormal_basis,
)
from catch_subsampling.catch_types import (
    CompressedRule, CompressionOptions, DiscreteMeasure, InternalToleranceError, InvalidInputError, LpResult,
    LpStatus, NoConvergenceError, PolynomialSpace, SolverKind,
)
from catch_subsampling.pointsets import preset_points
from catch_subsampling.polyspace import space_dimension, vandermonde


def _random_measure(rng: np.random.Generator, size: int, d: int) -> DiscreteMeasure:
    return DiscreteMeasure(points=rng.uniform(-1.0, 1.0, size=(size, d)), masses=rng.uniform(0.5, 2.0, size=size))


def _rule(size: int, original_size: int) -> CompressedRule:
    return CompressedRule(
        node_indices=np.arange(size),
        nodes=np.zeros((size, 2)),
        weights=np.ones(size),
        residual=0.0,
        exactness_degree=6,
        rank_n=28,
        solver_used=SolverKind.NNLS,
        original_size=original_size,
    )


def test_orthonormal_basis_of_single_point():
    measure = DiscreteMeasure.with_unit_masses(np.array([[0.3]]))
    fact = orthonormal_basis(measure, PolynomialSpace(dim_d=1, degree=0, bbox=((0.0, 1.0),)))
    assert fact.rank_n == 1
    np.testing.assert_allclose(fact.v, [[1.0]])


def test_orthonormal_basis_of_two_points():
    measure = DiscreteMeasure.with_unit_masses(np.array([[-1.0], [1.0]]))
    fact = orthonormal_basis(measure, PolynomialSpace(dim_d=1, degree=1, bbox=((-1.0, 1.0),)))
    assert fact.rank_n == 2
    np.testing.assert_allclose(np.abs(fact.v), np.full((2, 2), 1 / np.sqrt(2)))
    np.testing.assert_allclose(fact.v.T @ fact.v, np.eye(2), atol=1e-14)


def test_orthonormal_basis_detects_collinear_points():
    t = np.linspace(0.0, 1.0, 7)
    measure = DiscreteMeasure.with_unit_masses(np.column_stack([t, 2 * t - 1]))
    fact = orthonormal_basis(measure, PolynomialSpace(dim_d=2, degree=1, bbox=((0.0, 1.0), (-1.0, 1.0))))
    assert fact.rank_n == 2
    assert fact.space.dimension == 3


def test_orthonormal_basis_is_orthonormal_in_weighted_product(rng):
    measure = _random_measure(rng, 120, 2)
    fact = orthonormal_basis(measure, PolynomialSpace.enclosing(measure.points, 5))
    gram = fact.v.T @ (measure.masses[:, np.newaxis] * fact.v)
    np.testing.assert_allclose(gram, np.eye(fact.rank_n), atol=1e-10)


def test_evaluate_matches_sample_rows(rng):
    measure = _random_measure(rng, 60, 2)
    fact = orthonormal_basis(measure, PolynomialSpace.enclosing(measure.points, 4))
    np.testing.assert_allclose(fact.evaluate(measure.points), fact.v, atol=1e-10)


def test_moments_of_unit_masses(rng):
    measure = DiscreteMeasure.with_unit_masses(rng.uniform(-1.0, 1.0, size=(50, 2)))
    fact = orthonormal_basis(measure, PolynomialSpace.enclosing(measure.points, 3))
    b = moments(fact, measure)
    assert b[0] == pytest.approx(np.sqrt(50))
    assert np.linalg.norm(b) <= np.sqrt(measure.total_mass * fact.rank_n) + 1e-10


def test_moments_of_symmetric_measure_vanish_on_odd_functions():
    measure = DiscreteMeasure.with_unit_masses(np.array([[-1.0], [1.0]]))
    fact = orthonormal_basis(measure, PolynomialSpace(dim_d=1, degree=1, bbox=((-1.0, 1.0),)))
    np.testing.assert_allclose(moments(fact, measure), [np.sqrt(2), 0.0], atol=1e-14)


def test_compress_with_nothing_to_compress():
    measure = DiscreteMeasure.with_unit_masses(np.array([[-1.0], [0.2], [0.9]]))
    rule = compress(measure, 2)
    assert rule.is_identity
    assert rule.residual == 0.0
    assert compression_ratio(rule, measure.size) == 1.0
    assert apply_rule(rule, np.array([1.0, 2.0, 3.0])) == pytest.approx(6.0)


@pytest.mark.parametrize("solver", [SolverKind.NNLS, SolverKind.LP])
def test_compress_equispaced_points(solver):
    x = np.linspace(-1.0, 1.0, 10)
    measure = DiscreteMeasure.with_unit_masses(x[:, np.newaxis])
    rule = compress(measure, 2, solver)
    assert rule.size <= 3
    assert np.all(rule.weights > 0)
    t = rule.nodes[:, 0]
    for k in range(3):
        assert rule.weights @ t ** k == pytest.approx(np.sum(x ** k), abs=1e-12)


@pytest.mark.parametrize("solver", [SolverKind.NNLS, SolverKind.LP])
@pytest.mark.parametrize("d, size, degree", [(1, 60, 8), (2, 250, 6), (3, 300, 4)])
def test_compressed_rule_integrates_polynomials(rng, solver, d, size, degree):
    measure = _random_measure(rng, size, d)
    space = PolynomialSpace.enclosing(measure.points, degree)
    rule = compress(measure, degree, solver, space=space)
    assert rule.size <= rule.rank_n == space.dimension
    assert np.all(rule.weights > 0)

    full = vandermonde(measure.points, space)
    for _ in range(100):
        values = full @ rng.standard_normal(space.dimension)
        norm = np.sqrt(measure.masses @ values ** 2)
        error = abs(apply_rule(rule, values) - integrate(measure, values))
        assert error <= rule.residual * norm + 1e-10 * measure.total_mass

    assert abs(rule.weights.sum() - measure.total_mass) <= rule.residual * np.sqrt(measure.total_mass) + 1e-10


def test_compressed_rule_reproduces_basis_moments(rng):
    measure = _random_measure(rng, 150, 2)
    space = PolynomialSpace.enclosing(measure.points, 4)
    rule = compress(measure, 4, space=space)
    fact = orthonormal_basis(measure, space)
    b = moments(fact, measure)
    for j in range(fact.rank_n):
        assert apply_rule(rule, fact.v[:, j]) == pytest.approx(b[j], abs=rule.residual + 1e-12)


def test_compressed_points_are_determining_for_half_degree(rng):
    measure = DiscreteMeasure.with_unit_masses(rng.uniform(-1.0, 1.0, size=(300, 2)))
    space = PolynomialSpace.enclosing(measure.points, 3)
    rule = compress(measure, 6, space=space.with_degree(6))
    assert is_determining(rule.nodes, space)


def test_compress_is_deterministic(rng):
    measure = _random_measure(rng, 200, 2)
    first = compress(measure, 6, SolverKind.LP)
    second = compress(measure, 6, SolverKind.LP)
    np.testing.assert_array_equal(first.node_indices, second.node_indices)
    np.testing.assert_array_equal(first.weights, second.weights)
    assert first.residual == second.residual


def test_compress_reports_nnls_iteration_cap(rng):
    measure = _random_measure(rng, 80, 2)
    with pytest.raises(NoConvergenceError):
        compress(measure, 4, SolverKind.NNLS, CompressionOptions(max_iterations=2))


def test_compress_reports_lp_infeasibility_as_tolerance_failure(rng, monkeypatch):
    def infeasible(a, b, c):
        return LpResult(u=np.zeros(a.shape[1]), objective=1e-3, basis=(), status=LpStatus.INFEASIBLE)

    monkeypatch.setattr("catch_subsampling.catch_core.simplex_lp", infeasible)
    with pytest.raises(InternalToleranceError) as info:
        compress(_random_measure(rng, 80, 2), 4, SolverKind.LP)
    assert info.value.phase_one_objective == 1e-3


@pytest.mark.parametrize("solver", [SolverKind.NNLS, SolverKind.LP])
def test_compress_four_disks_subset(solver):
    measure = preset_points("four_disks", 3000)
    rule = compress(measure, 6, solver)
    assert rule.rank_n == 28
    assert rule.size <= 28
    assert rule.residual <= 1e-10


@pytest.fixture(scope="module")
def four_disks() -> DiscreteMeasure:
    return preset_points("four_disks")


# Compression ratios of the reference run, n -> M / N_2n
_REFERENCE_RATIOS = {3: 200.0, 6: 62.0, 9: 29.0}


@pytest.mark.slow
@pytest.mark.parametrize("solver, n", [
    (SolverKind.NNLS, 3), (SolverKind.NNLS, 6), (SolverKind.NNLS, 9), (SolverKind.LP, 3), (SolverKind.LP, 6),
])
def test_compress_four_disks_preset(four_disks, solver, n):
    dimension = space_dimension(2, 2 * n)
    rule = compress(four_disks, 2 * n, solver)
    assert rule.rank_n == dimension
    assert rule.size <= dimension
    if solver == SolverKind.NNLS:
        assert rule.size == dimension
    assert rule.residual <= 1e-10
    assert compression_ratio(rule, four_disks.size) == pytest.approx(_REFERENCE_RATIOS[n], rel=0.15)


def test_compression_ratio_by_hand():
    assert compression_ratio(_rule(190, 5600), 5600) == pytest.approx(29.47, abs=0.01)
    assert compression_ratio(_rule(28, 200 * 28), 200 * 28) == pytest.approx(200.0)


def test_error_bound_by_hand():
    assert error_bound(_rule(3, 10), total_mass=1.0, best_approx_bound=0.1, f_l2_norm=7.0) == pytest.approx(0.2)
    rule = dataclasses.replace(_rule(3, 10), residual=0.5)
    assert error_bound(rule, total_mass=4.0, best_approx_bound=1.0, f_l2_norm=3.0) == pytest.approx(11.5)
    assert error_bound(rule, total_mass=4.0, best_approx_bound=0.0, f_l2_norm=3.0) == pytest.approx(1.5)


def test_measure_rejects_nonpositive_masses():
    with pytest.raises(InvalidInputError):
        DiscreteMeasure(points=np.zeros((2, 1)), masses=np.array([1.0, 0.0]))
