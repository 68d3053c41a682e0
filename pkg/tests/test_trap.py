import dataclasses

import numpy as np
import pytest
from scipy.constants import c

from gassense.casimir import SphereSpec, cp_radial_curvature
from gassense.errors import ConfigurationError, InstabilityError
from gassense.gas import BAR, VACUUM, GasMedium, MixtureState
from gassense.trap import (
    LaserSpec,
    SensorConfig,
    SensorModel,
    axial_omega,
    e0_from_power,
    frequency_sweep,
    laser_alpha,
    optical_potential,
    radial_omega,
    radial_omega_em_only,
    sensor_response,
)

R = 4.9325e-7
# sqrt(8 P / (pi R^2 eps0 c)) evaluated by hand with CODATA 2022 constants
E0_LOW_POWER = 76.90664681180485  # P = 1.5e-12 W


@pytest.fixture(scope="module")
def laser():
    return LaserSpec(8.95e-7, R, 1.5e-6)


def test_e0_reference_and_scaling():
    e0 = e0_from_power(1.5e-12, R)
    assert e0 == pytest.approx(E0_LOW_POWER, rel=1e-12)
    assert e0_from_power(6e-12, R) == pytest.approx(2 * e0, rel=1e-14)
    assert e0_from_power(1.5e-12, 2 * R) == pytest.approx(e0 / 2, rel=1e-14)


def test_optical_potential_points(laser):
    a = 1e-35
    u0 = -0.5 * a * laser.e0() ** 2
    assert optical_potential(0, 0, a, laser) == pytest.approx(u0, rel=1e-15)
    node = np.pi * c / (2 * laser.omega)
    assert abs(optical_potential(0, node, a, laser)) < 1e-30 * abs(u0)
    assert optical_potential(R / 2, 0, a, laser) == pytest.approx(u0 / np.e, rel=1e-15)


def _second_difference(f, h):
    return (f(h) - 2 * f(0.0) + f(-h)) / h**2


def test_axial_frequency_matches_finite_difference(silica, laser):
    alpha, eps = laser_alpha(silica, VACUUM, laser)
    k_fd = _second_difference(lambda z: optical_potential(0.0, z, alpha, laser, eps), 1e-10)
    closed = (laser.e0() * laser.omega / c) ** 2 * alpha
    assert k_fd == pytest.approx(closed, rel=1e-6)
    assert axial_omega(silica, VACUUM, laser) == pytest.approx(np.sqrt(closed / silica.mass), rel=1e-14)


def test_radial_optical_curvature_matches_finite_difference(silica, laser):
    alpha, eps = laser_alpha(silica, VACUUM, laser)
    k_fd = _second_difference(lambda r: optical_potential(r, 0.0, alpha, laser, eps), 1e-10)
    closed = 4 * alpha * laser.e0() ** 2 / R**2
    assert k_fd == pytest.approx(closed, rel=1e-6)
    assert radial_omega_em_only(silica, VACUUM, laser) ** 2 * silica.mass == pytest.approx(closed, rel=1e-13)


def test_mass_quadrupled_halves_axial(mats, laser):
    s = SphereSpec(1e-8, mats["silica"])
    heavy = dataclasses.replace(s.material, mass_density=4 * s.material.mass_density)
    ratio = axial_omega(SphereSpec(1e-8, heavy), VACUUM, laser) / axial_omega(s, VACUUM, laser)
    assert ratio == pytest.approx(0.5, rel=1e-14)


def test_radial_below_em_only_and_rises_with_gas(silica, laser, geom, species):
    vac = radial_omega(silica, VACUUM, laser, geom)
    assert vac < radial_omega_em_only(silica, VACUUM, laser)
    gas = radial_omega(silica, GasMedium(MixtureState({"CO2": 0.2 * BAR}), species), laser, geom)
    assert gas > vac


def test_axial_shift_small_against_radial(silica, laser, geom, species):
    med = GasMedium(MixtureState({"N2": 0.2 * BAR}), species)
    dz = axial_omega(silica, med, laser) / axial_omega(silica, VACUUM, laser) - 1
    dr = radial_omega(silica, med, laser, geom) / radial_omega(silica, VACUUM, laser, geom) - 1
    assert dz != 0
    assert abs(dz) < abs(dr)


def test_index_matched_fiber_gives_pure_optical(silica, laser, geom):
    class Matched:
        # index-matched on the Matsubara axis, vacuum at the laser line
        def __call__(self, xi):
            return 1.0 if xi == laser.omega else geom.material.permittivity(xi)

    wr = radial_omega(silica, Matched(), laser, geom)
    assert wr == pytest.approx(radial_omega_em_only(silica, Matched(), laser), rel=1e-15)


def test_instability_is_reported(silica, geom):
    weak = LaserSpec(8.95e-7, R, 1.5e-12)
    with pytest.raises(InstabilityError, match="silica"):
        radial_omega(silica, VACUUM, weak, geom)


def test_vacuum_response(model, run_config):
    f = sensor_response(MixtureState({}), model)
    assert f.omega_z.shape == f.omega_r.shape == (10,)
    assert np.all(f.as_array() > 0)
    em = model.em_only_radial(np.zeros(10))
    assert np.all(f.omega_r < em)


def test_cp_curvature_negative_for_all_materials(model):
    _, cp, _ = model.curvatures(np.zeros(10))
    assert np.all(cp < 0)


def test_fast_path_matches_full(model, species, rng):
    p = rng.dirichlet(np.ones(10)) * 0.2 * BAR
    mix = MixtureState.from_vector(species.names, p)
    fast = model.response(mix).as_array()
    full = model.response_full(mix).as_array()
    np.testing.assert_allclose(fast, full, rtol=1e-6)


def test_sphere_permutation(run_config, species):
    cfg = run_config.sensor
    perm = [3, 1, 4, 0, 9, 2, 6, 5, 8, 7]
    cfg2 = dataclasses.replace(cfg, spheres=tuple(cfg.spheres[i] for i in perm))
    p = np.full(10, 2e3)
    a = SensorModel(cfg, species).response_array(p)
    b = SensorModel(cfg2, species).response_array(p)
    np.testing.assert_array_equal(b[:10], a[:10][perm])
    np.testing.assert_array_equal(b[10:], a[10:][perm])


def test_small_pressure_change_is_resolved(model):
    p = np.full(10, 2e3)
    q = p.copy()
    q[0] += 0.1  # 1e-6 bar
    d = model.response_array(q) - model.response_array(p)
    assert np.any(d != 0)
    assert np.max(np.abs(d / model.response_array(p))) < 1e-8


def test_sweep_monotone_for_silica(model, species):
    grid = np.linspace(0, 0.2 * BAR, 11)
    for s in species.names:
        rows = frequency_sweep(model, s, grid, ["silica"])
        wr = [r["omega_r"] for r in rows]
        assert np.all(np.diff(wr) > 0), s
        assert rows[0]["rel_change_vacuum"] == 0.0
        assert all(r["rel_change_em_only"] < 0 for r in rows)


def test_sweep_errors(model):
    with pytest.raises(ConfigurationError, match="valid"):
        frequency_sweep(model, "Xe", [0.0])
    with pytest.raises(ConfigurationError, match="valid"):
        frequency_sweep(model, "CO2", [0.0], ["unobtainium"])
    with pytest.raises(ConfigurationError):
        frequency_sweep(model, "CO2", [])


def test_sensor_config_validation(run_config):
    cfg = run_config.sensor
    with pytest.raises(ConfigurationError):
        dataclasses.replace(cfg, spheres=cfg.spheres[:9])
    with pytest.raises(ConfigurationError):
        dataclasses.replace(cfg, spheres=(cfg.spheres[0],) * 10)
    with pytest.raises(ConfigurationError):
        dataclasses.replace(cfg, laser=LaserSpec(8.95e-7, 6e-7, 1e-6))


def test_curvature_used_by_model_matches_direct(model, run_config, geom):
    cfg = run_config.sensor
    _, cp, _ = model.curvatures(np.zeros(10))
    direct = cp_radial_curvature(cfg.spheres[0], VACUUM, geom, cfg.grid, cfg.quad, h=cfg.h)
    assert cp[0] == pytest.approx(direct, rel=1e-7)
