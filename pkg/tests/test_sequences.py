import numpy as np
import pytest

from core.errors import ParameterError, ResolutionError
from core.functional import Params
from modules.fibration import FiberInvariants, pohozaev_time
from modules.sequences import (
    _bump_count,
    build_bumps,
    divergence_witness,
    energy_on_P,
    landscape_table,
    profile_pair,
    vn_energy_on_P,
    wn_energy_on_P,
)

PRM = Params(p=6.0, alpha=-0.1, rho=1.0)


@pytest.fixture(scope="module")
def psi():
    return profile_pair("disk", PRM.p, PRM.rho, nodes=33)


def test_profile_carries_the_mass(psi):
    assert psi.rho == pytest.approx(1.0, rel=1e-12)
    assert psi.psi.gradient_sq == pytest.approx(psi.lambda1, rel=1e-8)


def test_bumps_split_the_mass(psi):
    for kind, n in (("V", 5), ("W", 4)):
        fam = build_bumps(psi, kind, n, PRM)
        assert fam.mass == pytest.approx(PRM.rho)
        # each copy carries rho/k
        assert fam.amplitude ** 2 / fam.scale ** 2 == pytest.approx(1.0 / fam.count)
        assert len(fam.cross) == int(fam.count) - 1


def test_v_pohozaev_time_does_not_depend_on_n(psi):
    times = {energy_on_P(psi, "V", n, PRM).t for n in (5, 10, 40, 160)}
    assert len(times) == 1


def test_v_energy_decreases_like_log(psi):
    table = landscape_table(psi, PRM, "V", [5, 10, 20, 40, 80])
    energies = [row.energy for row in table.rows]
    assert all(b < a for a, b in zip(energies, energies[1:]))
    assert table.slope == pytest.approx(PRM.alpha * PRM.rho ** 2 / 8.0, rel=5e-2)
    assert table.abscissa == "log(n^2-1)"
    for row in table.rows:
        assert abs(row.pohozaev_residual) < 1e-10


def test_w_energy_grows_with_bump_count(psi):
    p, rho = PRM.p, PRM.rho
    table = landscape_table(psi, PRM, "W", [2, 4, 8, 16])
    energies = [row.energy for row in table.rows]
    assert all(b > a for a, b in zip(energies, energies[1:]))

    t_hat = pohozaev_time(FiberInvariants.of(psi.psi, p), Params(p=p, alpha=0.0, rho=rho))
    predicted = (p - 4) / (2 * (p - 2)) * t_hat ** 2 * psi.lambda1 * rho
    assert table.slope / predicted == pytest.approx(1.0, abs=0.1)


def test_w_terms_respect_their_bounds(psi):
    p, rho = PRM.p, PRM.rho
    for n in (2, 4, 8):
        row = energy_on_P(psi, "W", n, PRM)
        assert (p - 4) / (2 * (p - 2)) * row.kinetic >= (p - 4) / (2 * (p - 2)) * psi.lambda1 * rho * n
        assert row.chi0 <= rho ** 2 * np.log(n ** 3 + 1.0)


def test_energy_shortcuts(psi):
    assert vn_energy_on_P(psi, 10, PRM) == energy_on_P(psi, "V", 10, PRM).energy
    assert wn_energy_on_P(psi, 4, PRM) == energy_on_P(psi, "W", 4, PRM).energy


@pytest.mark.parametrize("kind, n", [("X", 3), ("V", 1), ("W", 2.5)])
def test_bump_count_guards(kind, n):
    with pytest.raises(ParameterError):
        _bump_count(kind, n)


def test_profile_grid_guards():
    with pytest.raises(ParameterError):
        profile_pair("disk", 6.0, 1.0, nodes=51)
    with pytest.raises(ResolutionError):
        profile_pair("disk", 6.0, 1.0, nodes=5)


def test_empty_table_has_no_slope(psi):
    table = landscape_table(psi, PRM, "W", [2])
    assert table.slope is None
    assert len(table.rows) == 1


def test_v_family_eventually_leaves_the_unit_band(psi):
    witness = divergence_witness(psi, PRM, "V")
    assert witness.found
    assert witness.n > 1e15
    assert witness.energy < witness.reference_energy - 1.0


def test_w_family_leaves_the_unit_band(psi):
    witness = divergence_witness(psi, PRM, "W")
    assert witness.found
    assert witness.reference_n == 2.0
    assert witness.energy > witness.reference_energy + 1.0
