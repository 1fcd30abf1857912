import numpy as np
import pytest

from core.errors import GridMismatchError, OracleTooLargeError, ParameterError
from core.grid import Field, build_grid, random_bumps
from core.logkernel import (
    brute_force_chi0,
    cell_average,
    chi0,
    chi_forms,
    convolve_density,
    dense_log_convolve,
    kernel_matrix,
    log_cell_average_exact,
    log_convolve,
)


@pytest.mark.parametrize("h", [0.03125, 0.1, 0.5, 2.0])
def test_log_cell_average_matches_closed_form(h):
    assert cell_average("chi0", h) == pytest.approx(log_cell_average_exact(h), abs=1e-10)


def test_cell_averages_respect_kernel_split():
    h = 0.05
    assert cell_average("chi0", h) == pytest.approx(cell_average("chi1", h) - cell_average("chi2", h), abs=1e-10)


def test_unknown_kernel(disk17):
    with pytest.raises(ParameterError):
        convolve_density(disk17, np.ones(disk17.size), "chi3")


@pytest.mark.parametrize("seed", range(10))
def test_fft_path_matches_dense_oracle(disk33, seed):
    u = random_bumps(disk33, np.random.default_rng(seed), rho=1.0)
    fast = log_convolve(u).values
    dense = dense_log_convolve(u).values
    assert np.linalg.norm(fast - dense) <= 1e-10 * np.linalg.norm(dense)


@pytest.mark.parametrize("kind", ["chi1", "chi2"])
def test_fft_path_matches_dense_oracle_for_split_kernels(square33, kind, rng):
    u = random_bumps(square33, rng, rho=1.0)
    fast = log_convolve(u, kind).values
    dense = dense_log_convolve(u, kind).values
    assert np.linalg.norm(fast - dense) <= 1e-10 * np.linalg.norm(dense)


def test_brute_force_oracle_agrees(disk17, rng):
    u = random_bumps(disk17, rng, rho=1.0)
    assert chi0(u) == pytest.approx(brute_force_chi0(u), rel=1e-10)


def test_kernel_split_identity(bump_field):
    forms = chi_forms(bump_field, bump_field)
    assert forms.chi0 == pytest.approx(forms.chi1 - forms.chi2, rel=1e-10)
    assert forms.chi0 == pytest.approx(chi0(bump_field), rel=1e-10)
    assert forms.chi1 >= 0 and forms.chi2 >= 0


def test_chi_forms_need_one_grid(disk17, disk33):
    with pytest.raises(GridMismatchError):
        chi_forms(Field(disk17, np.ones(disk17.size)), Field(disk33, np.ones(disk33.size)))


def test_oracles_refuse_large_grids():
    grid = build_grid("disk", 1.0, 129)
    with pytest.raises(OracleTooLargeError):
        kernel_matrix(grid)
    with pytest.raises(OracleTooLargeError):
        brute_force_chi0(Field(grid, np.ones(grid.size)))


def test_kernel_matrix_is_symmetric(disk17):
    table = kernel_matrix(disk17).table
    np.testing.assert_array_equal(table, table.T)


def test_chi0_dilation_law_on_scaled_grid(bump_field):
    t = 3.0
    grid = bump_field.grid
    moved = Field(grid.scaled(grid.R / t), t * bump_field.values)
    rho = bump_field.mass
    assert moved.mass == pytest.approx(rho, rel=1e-13)
    assert chi0(moved) == pytest.approx(chi0(bump_field) - rho ** 2 * np.log(t), abs=1e-9)


def test_point_mass_potential_far_away(disk33):
    # a density concentrated at the centre acts like ρ·log|x| at distance
    density = np.zeros(disk33.size)
    x, y = disk33.coords
    centre = np.argmin(np.hypot(x, y))
    density[centre] = 2.0
    potential = convolve_density(disk33, density)
    far = np.hypot(x, y) > 0.2
    np.testing.assert_allclose(potential[far], 2.0 * np.log(np.hypot(x[far], y[far])), rtol=1e-12)


def test_chi0_is_invariant_under_lattice_reflections(disk33, rng):
    u = random_bumps(disk33, rng)
    U = disk33.embed(u.values)
    value = chi0(u)
    for image in (U[::-1, :], U[:, ::-1], U.T):
        assert chi0(Field(disk33, disk33.restrict(image))) == pytest.approx(value, rel=1e-10)
