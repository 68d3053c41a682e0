import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import c, epsilon_0

from gassense.casimir import (
    GreenCache,
    MatsubaraGrid,
    QuadratureSpec,
    SphereSpec,
    cp_potential,
    cp_radial_curvature,
    cp_terms,
    hard_sphere_alpha,
    kernel_difference,
    kernel_integral,
    matsubara_xi,
    reduced_green_trace,
    regular_green_tensor,
    trace_rr_closed_form,
)
from gassense.errors import AccuracyError, DomainError, SingularityError
from gassense.gas import BAR, VACUUM, GasMedium, MixtureState

XI1 = float(matsubara_xi(300.0, 1))

# Fibre-wall integrals from scipy dblquad/nquad (adaptive QUADPACK, epsrel
# 1e-11 on axis and 1e-9 off axis), fibre R_i = 500 nm, R_o = 1000 nm, vacuum.
K_ORACLE = {
    (0.0, 1): 1.2822149289358917e-06,
    (2.5e-7, 1): 4.102241126333679e-06,
    (0.0, 10): 1.7111234055666555e-12,
    (2.5e-7, 10): 5.491683620511796e-11,
}
# U_CP on axis, 10 nm silica sphere, vacuum, T = 300 K: same dblquad kernel
# summed over n = 1..60 with hand-written prefactors.
U_ORACLE = -2.8489823865020407e-26


def _green_trace_direct(kappa, rho, direction):
    r = regular_green_tensor(1j * kappa, rho * direction)
    return (r @ r).trace()


def test_tensor_definitions_at_x1():
    # with q rho = 1: f = x + i x^2 - x^3 = i and g = x + 3i x^2 - 3x^3 = -2 + 3i
    q, rho = 2.0, 0.5
    t = regular_green_tensor(q, np.array([0.0, 0.0, rho]))
    pref = q / (4 * np.pi) * np.exp(1j)
    assert t[0, 0] / pref == pytest.approx(1j, abs=1e-15)
    assert t[2, 2] / pref == pytest.approx(1j - (-2 + 3j), abs=1e-15)


def test_trace_kappa_rho_one():
    kappa, rho = 3.0e6, 1.0 / 3.0e6
    expected = (kappa / (4 * np.pi)) ** 2 * 34 * np.exp(-2)
    assert trace_rr_closed_form(kappa, rho) == pytest.approx(expected, rel=1e-14)


def test_trace_far_field():
    kappa = 1e7
    rho = 300 / kappa
    x = 1 / (kappa * rho)
    lead = 2 * x * x * (kappa / (4 * np.pi)) ** 2 * np.exp(-2 * kappa * rho)
    assert trace_rr_closed_form(kappa, rho) == pytest.approx(lead, rel=3 * x)


def test_trace_matches_complex_tensor(rng):
    kr = np.exp(rng.uniform(np.log(1e-3), np.log(50), 200))
    kappa = np.exp(rng.uniform(np.log(1e5), np.log(1e9), 200))
    for k, q in zip(kappa, kr):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        direct = _green_trace_direct(k, q / k, d)
        assert abs(direct.imag) < 1e-12 * abs(direct.real)
        assert trace_rr_closed_form(k, q / k) == pytest.approx(direct.real, rel=1e-12)


def test_matsubara():
    assert XI1 == pytest.approx(2.4679e14, rel=1e-4)
    assert matsubara_xi(300.0, 0) == 0.0
    assert matsubara_xi(600.0, 3) == pytest.approx(2 * matsubara_xi(300.0, 3), rel=1e-15)


def test_hard_sphere_alpha():
    assert hard_sphere_alpha(2.0, 2.0, 1e-8) == 0.0
    pc = hard_sphere_alpha(np.inf, 1.0, 1e-8) / (4 * np.pi * epsilon_0)
    assert pc == pytest.approx(1e-24, rel=1e-15)
    with pytest.raises(SingularityError):
        hard_sphere_alpha(-2.0, 1.0, 1e-8)


def test_static_polarisability_ordering(mats):
    # higher static permittivity, larger Clausius-Mossotti factor
    a = {n: hard_sphere_alpha(mats[n].permittivity(0.0), 1.0, 1e-8)
         for n in ("ptfe", "polystyrene", "silica", "mica", "rutile", "gold")}
    vals = list(a.values())
    assert all(v > 0 for v in vals)
    assert vals == sorted(vals)


@pytest.mark.parametrize("key", sorted(K_ORACLE))
def test_kernel_against_adaptive_quadrature(geom, key):
    r_a, n = key
    kappa = float(matsubara_xi(300.0, n)) / c
    assert kernel_integral(r_a, kappa, geom) == pytest.approx(K_ORACLE[key], rel=1e-9)


def test_green_trace_increases_off_axis(geom):
    j0 = reduced_green_trace(0.0, XI1, 1.0, geom)
    j1 = reduced_green_trace(2.5e-7, XI1, 1.0, geom)
    assert 0 < j0 < j1


def test_green_trace_index_matched_is_zero(geom):
    eps_f = geom.material.permittivity(XI1)
    assert reduced_green_trace(0.0, XI1, eps_f, geom) == 0.0


def test_green_trace_domain(geom):
    with pytest.raises(DomainError):
        reduced_green_trace(5e-7, XI1, 1.0, geom)
    with pytest.raises(DomainError):
        reduced_green_trace(0.0, 0.0, 1.0, geom)


def test_quadrature_doubling(geom):
    base = QuadratureSpec(max_doublings=0)
    for r_a in (0.0, 2.5e-7, 4.5e-7):
        a = reduced_green_trace(r_a, XI1, 1.0, geom, base.doubled(1))
        b = reduced_green_trace(r_a, XI1, 1.0, geom, base.doubled(2))
        assert abs(a - b) < 1e-3 * abs(b)


def test_nonconvergence_raises(geom):
    with pytest.raises(AccuracyError):
        kernel_integral(4.9e-7, XI1 / c, geom, QuadratureSpec(n_r=4, n_phi=4, n_z=4,
                                                               rtol=1e-15, max_doublings=1))


def test_cp_potential_oracle(silica, geom, grid, quad):
    u = cp_potential(0.0, silica, VACUUM, geom, grid, quad)
    assert u == pytest.approx(U_ORACLE, rel=1e-8)
    assert u < 0


def test_zeroth_matsubara_term_vanishes(silica, geom, grid, quad):
    t = cp_terms(0.0, silica, VACUUM, geom, grid, quad, n_max=5)
    assert t[0] == 0.0
    assert np.all(t[1:] < 0)


def test_truncation_against_four_times(silica, geom, grid, quad):
    u, n = cp_potential(0.0, silica, VACUUM, geom, grid, quad, return_n=True)
    assert 10 < n < 100
    u4 = cp_potential(0.0, silica, VACUUM, geom, grid, quad, n_max=4 * n)
    assert abs(u - u4) < 1e-6 * abs(u4)


def test_index_matched_fiber_gives_no_potential(mats, geom, grid, quad):
    sphere = SphereSpec(1e-8, mats["silica"])

    class Matched:
        def __call__(self, xi):
            return geom.material.permittivity(xi)

    assert cp_potential(0.0, sphere, Matched(), geom, grid, quad) == 0.0
    assert cp_radial_curvature(sphere, Matched(), geom, grid, quad) == 0.0


def test_curvature_negative_and_step_halving(silica, geom, grid, quad):
    k1 = cp_radial_curvature(silica, VACUUM, geom, grid, quad, h=5e-9)
    k2 = cp_radial_curvature(silica, VACUUM, geom, grid, quad, h=2.5e-9)
    assert k1 < 0
    assert abs(k1 - k2) < 0.01 * abs(k2)


def test_curvature_five_point_stencil(silica, geom, grid, quad):
    # U is even in r, so a 5-point stencil at 0 uses U(0), U(h), U(2h)
    h = 5e-9
    u = [cp_potential(k * h, silica, VACUUM, geom, grid, quad) for k in (0, 1, 2)]
    five = (-2 * u[2] + 32 * u[1] - 30 * u[0]) / (12 * h * h)
    k = cp_radial_curvature(silica, VACUUM, geom, grid, quad, h=h)
    assert k == pytest.approx(five, rel=1e-3)


def test_curvature_step_domain(silica, geom, grid, quad):
    with pytest.raises(DomainError):
        cp_radial_curvature(silica, VACUUM, geom, grid, quad, h=1.25e-7)


def test_gas_weakens_attraction(silica, geom, grid, quad, species):
    med = GasMedium(MixtureState({"CO2": 0.2 * BAR}), species)
    k_gas = cp_radial_curvature(silica, med, geom, grid, quad)
    k_vac = cp_radial_curvature(silica, VACUUM, geom, grid, quad)
    assert k_vac < k_gas < 0


def test_green_cache_fidelity(geom, grid, quad):
    cache = GreenCache(geom, quad, grid, 5e-9, n_top=64)
    for n in (1, 7, 33, 60):
        kappa = float(matsubara_xi(300.0, n)) / c * np.sqrt(1.003)
        assert cache.kernel(kappa) == pytest.approx(kernel_integral(0.0, kappa, geom, quad), rel=1e-7)
        assert cache.difference(kappa) == pytest.approx(
            kernel_difference(5e-9, kappa, geom, quad), rel=1e-7)
    with pytest.raises(DomainError):
        cache.kernel(XI1 / c / 2)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e5, 1e9), st.floats(1e-3, 50.0))
def test_trace_positive(kappa, kr):
    assert trace_rr_closed_form(kappa, kr / kappa) > 0
