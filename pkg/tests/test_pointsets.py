import logging

import numpy as np
import pytest

from catch_subsampling.catch_core import compress
from catch_subsampling.catch_types import DiscreteMeasure, GeometryError, InvalidInputError, PointFileError
from catch_subsampling.pointsets import (
    FOUR_DISKS, QUARTIC, BoxDomain, DiskUnionDomain, LevelSetDomain, boundary_sample, control_points,
    domain_halton, filter_domain, get_preset, halton, level_set_mesh, preset_points, read_points, write_points,
    write_rule,
)


def test_halton_base_two_prefix():
    np.testing.assert_allclose(halton(3, 1)[:, 0], [1 / 2, 1 / 4, 3 / 4])


def test_halton_coordinates_use_independent_bases():
    points = halton(4, 2)
    np.testing.assert_allclose(points[:, 0], [1 / 2, 1 / 4, 3 / 4, 1 / 8])
    np.testing.assert_allclose(points[:, 1], [1 / 3, 2 / 3, 1 / 9, 4 / 9])


def test_halton_skip_and_prefix_stability():
    long = halton(50, 3)
    np.testing.assert_array_equal(halton(20, 3), long[:20])
    np.testing.assert_array_equal(halton(10, 3, skip=5), long[5:15])
    assert np.all((long > 0) & (long < 1))


def test_halton_rejects_large_dimensions():
    with pytest.raises(InvalidInputError):
        halton(10, 4)


def test_filter_domain_keeps_centers_and_drops_far_points():
    points = np.array([[0.0, 0.0], [1.5, 1.45], [5.0, 5.0], [3.0, 0.0]])
    kept, count = filter_domain(points, FOUR_DISKS)
    assert count == 3
    np.testing.assert_array_equal(kept, points[[0, 1, 3]])


def test_filter_domain_is_idempotent():
    points = halton(500, 2) * 3 - 1
    once, _ = filter_domain(points, FOUR_DISKS)
    twice, _ = filter_domain(once, FOUR_DISKS)
    np.testing.assert_array_equal(once, twice)


def test_box_domain_filter():
    box = BoxDomain(bounds=((0.0, 1.0), (0.0, 0.5)))
    kept, count = filter_domain(np.array([[0.5, 0.25], [0.5, 0.75]]), box)
    assert count == 1
    assert box.bounding_box() == ((0.0, 1.0), (0.0, 0.5))


def test_domains_reject_bad_parameters():
    with pytest.raises(GeometryError):
        DiskUnionDomain(centers=((0.0, 0.0),), radii=(-1.0,))
    with pytest.raises(GeometryError):
        LevelSetDomain(threshold=0.0)
    with pytest.raises(GeometryError):
        BoxDomain(bounds=((1.0, 0.0),))


def test_four_disks_preset_acceptance():
    measure = preset_points("four_disks")
    assert measure.size == pytest.approx(5600, rel=0.05)
    assert measure.has_unit_masses
    assert np.all(FOUR_DISKS.contains(measure.points))


def test_unknown_preset():
    with pytest.raises(InvalidInputError):
        get_preset("five_disks")


def test_boundary_sample_by_hand():
    points = boundary_sample(QUARTIC, 1)
    np.testing.assert_allclose(points[0], [1.0, 0.0], atol=1e-14)
    points = boundary_sample(LevelSetDomain(threshold=4.0), 1)
    np.testing.assert_allclose(points[1], [0.0, 1.0], atol=1e-14)


def test_boundary_sample_lies_on_the_level_curve():
    points = boundary_sample(QUARTIC, 25)
    assert points.shape == (100, 2)
    assert np.max(np.abs(QUARTIC.level(points) - QUARTIC.threshold)) <= 1e-10


def test_boundary_sample_needs_a_level_set():
    with pytest.raises(GeometryError):
        boundary_sample(FOUR_DISKS, 4)


def test_level_set_mesh_and_control_points_stay_in_the_domain():
    mesh = level_set_mesh(QUARTIC, 2)
    assert mesh.shape[0] > 4 * 4 * 3
    assert np.all(QUARTIC.level(mesh) <= QUARTIC.threshold + 1e-10)
    controls = control_points(QUARTIC, 400)
    assert np.all(QUARTIC.level(controls) <= QUARTIC.threshold + 1e-10)
    lower, upper = np.array(QUARTIC.bounding_box()).T
    assert np.all((controls >= lower) & (controls <= upper))


def test_domain_halton_is_deterministic():
    np.testing.assert_array_equal(domain_halton(QUARTIC, 300, 7), domain_halton(QUARTIC, 300, 7))


def test_points_round_trip(tmp_path, rng):
    measure = DiscreteMeasure(points=rng.standard_normal((3, 2)), masses=rng.uniform(0.1, 1.0, size=3))
    path = str(tmp_path / "points.csv")
    write_points(path, measure, header=("three points",))
    loaded = read_points(path, 2)
    np.testing.assert_array_equal(loaded.points, measure.points)
    np.testing.assert_array_equal(loaded.masses, measure.masses)


def test_read_points_defaults_to_unit_masses(tmp_path):
    path = tmp_path / "points.csv"
    path.write_text("# x, y\n0.1,0.2\n\n0.3,0.4\n", encoding="utf-8")
    measure = read_points(str(path), 2)
    assert measure.size == 2
    assert measure.has_unit_masses


def test_dim_comment_fixes_the_dimension(tmp_path, rng):
    measure = DiscreteMeasure.with_unit_masses(rng.uniform(-1.0, 1.0, size=(4, 3)))
    path = str(tmp_path / "cube.csv")
    write_points(path, measure)
    loaded = read_points(path)
    assert loaded.dim == 3
    np.testing.assert_array_equal(loaded.points, measure.points)
    with pytest.raises(PointFileError):
        read_points(path, 2)


def test_read_points_warns_when_weights_may_be_coordinates(tmp_path, caplog):
    path = tmp_path / "points.csv"
    path.write_text("0.1,0.2,0.3\n0.4,0.5,0.6\n", encoding="utf-8")
    with caplog.at_level(logging.WARNING, logger="catch_subsampling.pointsets"):
        measure = read_points(str(path))
    assert measure.dim == 2
    np.testing.assert_allclose(measure.masses, [0.3, 0.6])
    assert "dim=" in caplog.text

    caplog.clear()
    path.write_text("# dim=2\n0.1,0.2,0.3\n", encoding="utf-8")
    with caplog.at_level(logging.WARNING, logger="catch_subsampling.pointsets"):
        read_points(str(path))
    assert caplog.text == ""


def test_read_points_reports_the_bad_line(tmp_path):
    path = tmp_path / "points.csv"
    path.write_text("0.1,0.2\n0.5\n", encoding="utf-8")
    with pytest.raises(PointFileError) as info:
        read_points(str(path), 2)
    assert info.value.line == 2
    assert ":2:" in str(info.value)

    path.write_text("# header\n0.1,abc\n", encoding="utf-8")
    with pytest.raises(PointFileError) as info:
        read_points(str(path), 2)
    assert info.value.line == 2


def test_read_points_rejects_nonpositive_weights(tmp_path):
    path = tmp_path / "points.csv"
    path.write_text("0.1,0.2,-1\n", encoding="utf-8")
    with pytest.raises(PointFileError):
        read_points(str(path), 2)


def test_write_rule_header(tmp_path, rng):
    measure = DiscreteMeasure.with_unit_masses(rng.uniform(-1.0, 1.0, size=(40, 2)))
    rule = compress(measure, 2)
    path = tmp_path / "rule.csv"
    write_rule(str(path), rule)
    text = path.read_text(encoding="utf-8")
    assert "# exactness_degree=2" in text
    assert "# solver=nnls" in text
    assert "# original_size=40" in text
    loaded = read_points(str(path), 2)
    np.testing.assert_array_equal(loaded.masses, rule.weights)
