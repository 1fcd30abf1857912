import numpy as np
import pytest
from scipy.special import jn_zeros

from core.errors import ParameterError
from shapes.disk import Disk
from shapes.registry import registry
from shapes.square import Square


def test_registry_discovers_both_shapes():
    assert registry.registered_shapes == ["disk", "square"]


def test_aliases_resolve():
    assert isinstance(registry.get("circle"), Disk)
    assert isinstance(registry.get("BOX"), Square)


def test_unknown_shape():
    with pytest.raises(ParameterError, match="Unknown shape"):
        registry.get("triangle")


def test_diameter_is_one():
    disk, square = Disk(), Square()
    assert 2 * disk.half_extent == pytest.approx(1.0)
    assert np.hypot(2 * square.half_extent, 2 * square.half_extent) == pytest.approx(1.0)


def test_closed_form_eigenvalues():
    assert Disk().exact_lambda1 == pytest.approx(4.0 * jn_zeros(0, 1)[0] ** 2)
    assert Square().exact_lambda1 == pytest.approx(4.0 * np.pi ** 2)


def test_membership_is_strict():
    disk = Disk()
    assert not disk.contains(np.array([0.5]), np.array([0.0]))[0]
    assert disk.contains(np.array([0.49]), np.array([0.0]))[0]
    square = Square()
    edge = square.half_extent
    assert not square.contains(np.array([edge]), np.array([0.0]))[0]


def test_bubble_vanishes_outside():
    for shape in (Disk(), Square()):
        x = np.array([0.0, 2.0])
        values = shape.bubble(x, np.zeros(2))
        assert values[0] == pytest.approx(1.0)
        assert values[1] == 0.0


def test_shapes_are_star_shaped_and_hashable():
    assert Disk().star_shaped and Square().star_shaped
    assert Disk() == registry.get("disk")
    assert len({Disk(), registry.get("ball")}) == 1


@pytest.mark.parametrize("shape, perimeter", [(Disk(), np.pi), (Square(), 4.0 / np.sqrt(2.0))])
def test_boundary_samples_cover_the_boundary(shape, perimeter):
    points, normals, weights = shape.boundary_samples(200)
    assert weights.sum() == pytest.approx(perimeter, rel=1e-12)
    np.testing.assert_allclose(np.linalg.norm(normals, axis=1), 1.0, rtol=1e-12)
    assert np.all(np.einsum("ij,ij->i", points, normals) > 0)
    inner = points - 1e-6 * normals
    outer = points + 1e-6 * normals
    assert shape.contains(*inner.T).all()
    assert not shape.contains(*outer.T).any()


def test_only_the_square_is_grid_aligned():
    assert Square().grid_aligned
    assert not Disk().grid_aligned
