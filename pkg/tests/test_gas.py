import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import angstrom, k as k_B

from gassense.errors import ConfigurationError, DomainError, SingularityError
from gassense.gas import (
    BAR,
    GasMedium,
    GasSpecies,
    MixtureState,
    effective_permittivity,
    load_species_db,
    mixture_alpha,
    permittivity_from_alpha,
    species_alpha,
)


def test_db_has_ten_species(species):
    assert species.names == ("CO2", "CH4", "N2O", "O3", "O2", "NO", "CO", "NO2", "H2S", "N2")


def test_co2_static_polarisability(species):
    # CRC electronic value 2.911 A^3 plus the two vibrational terms
    co2 = species["CO2"]
    assert species_alpha(co2, 0.0) == pytest.approx((2.911 + 0.13 + 0.03) * angstrom**3, rel=1e-12)
    assert species_alpha(co2, 0.0) == pytest.approx(co2.static_alpha)


def test_single_term_half_point():
    s = GasSpecies("x", (2e-30,), (1e16,))
    assert species_alpha(s, 1e16) == pytest.approx(1e-30, rel=1e-15)


def test_transparency_and_domain(species):
    for s in species.species:
        assert species_alpha(s, 1e22) < 1e-10 * s.static_alpha
    with pytest.raises(DomainError):
        species_alpha(species["N2"], -1.0)


def test_mixture_alpha_vacuum_and_linearity(species):
    assert mixture_alpha(MixtureState({}), species, 1e14) == 0.0
    a1 = mixture_alpha(MixtureState({"CO2": 1e4}), species, 1e14)
    a2 = mixture_alpha(MixtureState({"CO2": 2e4}), species, 1e14)
    assert a2 == pytest.approx(2 * a1, rel=1e-15)


def test_co2_mixture_alpha_value(species):
    # P alpha / (k_B T) by hand: 2e4 Pa * 3.071 A^3 / (k_B 300 K)
    expected = 2e4 * 3.071e-30 / (k_B * 300.0)
    got = mixture_alpha(MixtureState({"CO2": 0.2 * BAR}), species, 0.0)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(1.4828e-5, rel=1e-4)


def test_unknown_species_rejected(species):
    with pytest.raises(ConfigurationError, match="XE"):
        mixture_alpha(MixtureState({"XE": 1.0}), species, 0.0)
    with pytest.raises(ConfigurationError):
        GasMedium(MixtureState({"XE": 1.0}), species)


def test_permittivity_mapping():
    assert permittivity_from_alpha(0.0) == 1.0
    assert permittivity_from_alpha(0.001) == pytest.approx(1.002 / 0.999, rel=1e-15)
    with pytest.raises(SingularityError):
        permittivity_from_alpha(1.0)


@pytest.mark.parametrize("a", [1e-4, 1e-6, 1e-8])
def test_dilute_limit(a):
    # (1 + 2a)/(1 - a) = 1 + 3a + 3a^2 + O(a^3)
    assert permittivity_from_alpha(a) - 1 == pytest.approx(3 * a + 3 * a * a, rel=2 * a)


def test_medium_is_callable(species):
    mix = MixtureState({"N2": 0.1 * BAR, "O2": 0.1 * BAR})
    med = GasMedium(mix, species)
    xi = np.array([0.0, 1e14, 1e16])
    np.testing.assert_array_equal(med(xi), effective_permittivity(mix, species, xi))
    assert np.all(med(xi) > 1.0)


def test_pressure_validation():
    with pytest.raises(ConfigurationError):
        MixtureState({"CO2": -1.0})
    with pytest.raises(ConfigurationError):
        MixtureState({"CO2": 3e4}, pressure_cap=2e4)


def test_unquoted_yaml_name_rejected(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text("species:\n  - name: NO\n    strength_unit: A3\n    resonance_unit: eV\n"
                 "    oscillators: [[1.7, 9.264]]\n")
    with pytest.raises(ConfigurationError, match="quote"):
        load_species_db(p)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 2e4), min_size=10, max_size=10), st.floats(0, 1e17))
def test_mixture_alpha_nonnegative_and_linear(species_list, xi):
    db = load_species_db()
    mix = MixtureState.from_vector(db.names, species_list)
    a = mixture_alpha(mix, db, xi)
    assert a >= 0
    mix2 = MixtureState.from_vector(db.names, [2 * p for p in species_list])
    assert mixture_alpha(mix2, db, xi) == pytest.approx(2 * a, rel=1e-12, abs=1e-300)
