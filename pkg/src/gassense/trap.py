"""Optical trap plus Casimir-Polder softening: axial and radial frequencies.

The trapping laser is a standing wave

    E(r, z) = E0 exp(-2 r^2 / R^2) cos(w z / c)

so the optical potential -alpha E^2 / 2 has curvatures

    d2U/dz2 (0) = alpha E0^2 w^2 / c^2,     d2U/dr2 (0) = 4 alpha E0^2 / R^2.

The Casimir-Polder term only adds to the radial curvature (an infinite
fibre is translation invariant along z). Material responses at the laser
frequency use eps(w) ~ eps(i w).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as C, epsilon_0, k as k_B, mu_0

from .casimir import (
    FiberGeometry,
    GreenCache,
    MatsubaraGrid,
    QuadratureSpec,
    SphereSpec,
    cp_radial_curvature,
    hard_sphere_alpha,
    local_field_factor,
)
from .errors import ConfigurationError, InstabilityError
from .gas import VACUUM, GasMedium, MixtureState, SpeciesDb, permittivity_from_alpha

__all__ = [
    "LaserSpec",
    "SensorConfig",
    "FrequencyVector",
    "SensorModel",
    "e0_from_power",
    "optical_potential",
    "laser_alpha",
    "axial_omega",
    "radial_omega",
    "radial_omega_em_only",
    "sensor_response",
    "frequency_sweep",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LaserSpec:
    wavelength: float  # m
    beam_radius: float  # R, m (beam width is 2R)
    power: float  # W

    def __post_init__(self):
        if min(self.wavelength, self.beam_radius, self.power) <= 0:
            raise ConfigurationError("laser wavelength, radius and power must be positive")

    @property
    def omega(self) -> float:
        return 2 * np.pi * C / self.wavelength

    def e0(self, eps_m: float = 1.0) -> float:
        return e0_from_power(self.power, self.beam_radius, eps_m)


def e0_from_power(power, beam_radius, eps_m=1.0):
    """Peak field amplitude (V/m) of a beam exp(-2r^2/R^2) carrying ``power``."""
    return np.sqrt(8.0 * power / (np.pi * beam_radius**2 * epsilon_0 * C * np.sqrt(eps_m)))


def optical_potential(r, z, alpha_laser, laser: LaserSpec, eps_m: float = 1.0):
    """U_EM(r, z) = -alpha E^2 / 2 for the standing-wave beam, in J."""
    e0 = laser.e0(eps_m)
    field_sq = e0**2 * np.exp(-4.0 * np.asarray(r) ** 2 / laser.beam_radius**2) * np.cos(
        laser.omega * np.asarray(z) / C
    ) ** 2
    return -0.5 * alpha_laser * field_sq


@dataclass(frozen=True)
class SensorConfig:
    geometry: FiberGeometry
    laser: LaserSpec
    spheres: tuple[SphereSpec, ...]
    temperature: float = 300.0
    grid: MatsubaraGrid = field(default_factory=MatsubaraGrid)
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    fd_step: float | None = None
    n_spheres: int = 10

    def __post_init__(self):
        if len(self.spheres) != self.n_spheres:
            raise ConfigurationError(f"expected {self.n_spheres} spheres, got {len(self.spheres)}")
        names = [s.material.name for s in self.spheres]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"sphere materials must be distinct: {names}")
        if self.grid.temperature != self.temperature:
            raise ConfigurationError("Matsubara grid temperature differs from sensor temperature")
        if 2 * self.laser.beam_radius > 2 * self.geometry.inner_radius:
            raise ConfigurationError("laser beam wider than the hollow core")
        for s in self.spheres:
            if s.radius >= 0.1 * self.geometry.inner_radius:
                raise ConfigurationError(f"sphere {s.name} is not small against the core radius")

    @property
    def h(self) -> float:
        return self.geometry.inner_radius / 100.0 if self.fd_step is None else self.fd_step

    @property
    def sphere_names(self) -> tuple[str, ...]:
        return tuple(s.material.name for s in self.spheres)


@dataclass(frozen=True)
class FrequencyVector:
    omega_z: np.ndarray
    omega_r: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.omega_z, self.omega_r])

    def __eq__(self, other):
        return (isinstance(other, FrequencyVector)
                and np.array_equal(self.omega_z, other.omega_z)
                and np.array_equal(self.omega_r, other.omega_r))


def laser_alpha(sphere: SphereSpec, medium, laser: LaserSpec):
    """Sphere polarisability and eps_M at the laser frequency."""
    w = laser.omega
    eps_m = float(medium(w))
    return hard_sphere_alpha(sphere.material.permittivity(w), eps_m, sphere.radius), eps_m


def axial_omega(sphere: SphereSpec, medium, laser: LaserSpec) -> float:
    """omega_z = (E0 w / c) sqrt(alpha / m)."""
    alpha, eps_m = laser_alpha(sphere, medium, laser)
    curv = alpha * laser.e0(eps_m) ** 2 * laser.omega**2 / C**2
    if not curv > 0:
        raise InstabilityError(f"{sphere.name}: axial curvature {curv:.3e} J/m^2 is not positive")
    return float(np.sqrt(curv / sphere.mass))


def _optical_radial_curvature(sphere, medium, laser):
    alpha, eps_m = laser_alpha(sphere, medium, laser)
    return 4.0 * alpha * laser.e0(eps_m) ** 2 / laser.beam_radius**2


def radial_omega_em_only(sphere: SphereSpec, medium, laser: LaserSpec) -> float:
    curv = _optical_radial_curvature(sphere, medium, laser)
    if not curv > 0:
        raise InstabilityError(f"{sphere.name}: optical radial curvature is not positive")
    return float(np.sqrt(curv / sphere.mass))


def radial_omega(sphere: SphereSpec, medium, laser: LaserSpec, geom: FiberGeometry,
                 grid: MatsubaraGrid = MatsubaraGrid(), quad: QuadratureSpec = QuadratureSpec(),
                 h: float | None = None) -> float:
    """omega_r from the optical plus Casimir-Polder radial curvature at the axis."""
    opt = _optical_radial_curvature(sphere, medium, laser)
    cp = cp_radial_curvature(sphere, medium, geom, grid, quad, h=h)
    total = opt + cp
    if not total > 0:
        raise InstabilityError(
            f"{sphere.name}: Casimir-Polder softening {cp:.3e} J/m^2 exceeds optical "
            f"stiffness {opt:.3e} J/m^2 (medium {medium!r})"
        )
    return float(np.sqrt(total / sphere.mass))


class SensorModel:
    """Precomputed forward model for one sensor configuration and species set.

    Material permittivities are evaluated once on the Matsubara grid and at
    the laser frequency; the fibre kernel is tabulated in a ``GreenCache``.
    After construction the object is read-only and may be shared between
    workers.
    """

    def __init__(self, cfg: SensorConfig, species: SpeciesDb, eps_max: float = 1.01,
                 n_top: int = 64, cache_points_per_decade: int = 48):
        self.cfg = cfg
        self.species = species
        self.n_top = n_top
        grid, geom, laser = cfg.grid, cfg.geometry, cfg.laser
        n = np.arange(1, n_top + 1)
        self.xi = grid.xi(n)
        # columns: Matsubara frequencies then the laser frequency
        self._freqs = np.append(self.xi, laser.omega)
        self._alpha_species = species.alpha_matrix(self._freqs) / (k_B * cfg.temperature)
        self.eps_fiber = geom.material.permittivity(self.xi)
        self.eps_np = np.stack([s.material.permittivity(self.xi) for s in cfg.spheres])
        self.eps_np_laser = np.array([s.material.permittivity(laser.omega) for s in cfg.spheres])
        self.radii = np.array([s.radius for s in cfg.spheres])
        self.masses = np.array([s.mass for s in cfg.spheres])
        self.cache = GreenCache(geom, cfg.quad, grid, cfg.h, n_top, eps_max=eps_max,
                                points_per_decade=cache_points_per_decade)
        self._pre = mu_0 * k_B * cfg.temperature / C**2
        self.n_terms = self._truncation()
        self._mask = n[None, :] <= self.n_terms[:, None]

    def _cp_terms(self, eps_m_xi):
        """Radial-curvature Matsubara terms, shape (..., n_spheres, n_top)."""
        eps_m = eps_m_xi[..., None, :]
        alpha = (4 * np.pi * epsilon_0 * eps_m * self.radii[:, None] ** 3
                 * (self.eps_np - eps_m) / (self.eps_np + 2 * eps_m))
        chi = local_field_factor(self.eps_fiber - eps_m_xi)[..., None, :]
        kappa = np.sqrt(eps_m_xi) * self.xi / C
        dk = self.cache.difference(kappa)[..., None, :]
        return -self._pre * self.xi**4 * alpha * chi * dk * 2.0 / self.cfg.h**2

    def _truncation(self):
        terms = np.abs(self._cp_terms(np.ones_like(self.xi)))
        grid = self.cfg.grid
        out = []
        for s, row in enumerate(terms):
            total, quiet = 0.0, 0
            for i, t in enumerate(row):
                total += t
                quiet = quiet + 1 if t < grid.rtol * total else 0
                if quiet >= grid.patience:
                    out.append(i + 1)
                    break
            else:
                raise ConfigurationError(
                    f"{self.cfg.spheres[s].name}: Matsubara sum needs more than n_top={self.n_top} terms"
                )
        return np.array(out)

    def eps_medium(self, pressures):
        """eps_M at [xi_1..xi_top, w_laser] for pressure rows (Pa), shape (..., n_top+1)."""
        alpha_mix = np.asarray(pressures, dtype=float) @ self._alpha_species
        return permittivity_from_alpha(alpha_mix)

    def curvatures(self, pressures):
        """(optical radial, CP radial, axial) curvatures in J/m^2 per sphere."""
        eps = np.asarray(self.eps_medium(pressures))
        eps_xi, eps_l = eps[..., :-1], eps[..., -1:]
        alpha_l = (4 * np.pi * epsilon_0 * eps_l * self.radii ** 3
                   * (self.eps_np_laser - eps_l) / (self.eps_np_laser + 2 * eps_l))
        laser = self.cfg.laser
        e0sq = 8.0 * laser.power / (np.pi * laser.beam_radius**2 * epsilon_0 * C * np.sqrt(eps_l))
        opt_r = 4.0 * alpha_l * e0sq / laser.beam_radius**2
        axial = alpha_l * e0sq * laser.omega**2 / C**2
        cp = np.sum(np.where(self._mask, self._cp_terms(eps_xi), 0.0), axis=-1)
        return opt_r, cp, axial

    def response_array(self, pressures):
        """Frequencies [omega_z(10), omega_r(10)] for pressure rows; NaN marks unstable."""
        opt_r, cp, axial = self.curvatures(pressures)
        radial = opt_r + cp
        with np.errstate(invalid="ignore"):
            wz = np.where(axial > 0, np.sqrt(np.abs(axial) / self.masses), np.nan)
            wr = np.where(radial > 0, np.sqrt(np.abs(radial) / self.masses), np.nan)
        return np.concatenate([wz, wr], axis=-1)

    def response(self, mix: MixtureState) -> FrequencyVector:
        p = mix.vector(self.species.names)
        if mix.temperature != self.cfg.temperature:
            raise ConfigurationError("mixture temperature differs from sensor temperature")
        out = self.response_array(p)
        bad = np.flatnonzero(~np.isfinite(out))
        if bad.size:
            names = [self.cfg.spheres[i % len(self.cfg.spheres)].name for i in bad]
            raise InstabilityError(f"unstable trap for spheres {sorted(set(names))} at {dict(mix.pressures)}")
        k = len(self.cfg.spheres)
        return FrequencyVector(out[:k], out[k:])

    def response_full(self, mix: MixtureState) -> FrequencyVector:
        """Same as ``response`` but with direct quadrature instead of the cache."""
        cfg = self.cfg
        medium = GasMedium(mix, self.species)
        wz = [axial_omega(s, medium, cfg.laser) for s in cfg.spheres]
        wr = [radial_omega(s, medium, cfg.laser, cfg.geometry, cfg.grid, cfg.quad, cfg.h)
              for s in cfg.spheres]
        return FrequencyVector(np.array(wz), np.array(wr))

    def em_only_radial(self, pressures):
        opt_r, _, _ = self.curvatures(pressures)
        return np.sqrt(opt_r / self.masses)


def sensor_response(mix: MixtureState, cfg: SensorConfig | SensorModel,
                    species: SpeciesDb | None = None) -> FrequencyVector:
    """The 20 trapping frequencies of the sensor for ``mix``."""
    model = cfg if isinstance(cfg, SensorModel) else SensorModel(cfg, species)
    return model.response(mix)


def frequency_sweep(model: SensorModel, species: str, pressures, spheres=None):
    """Single-gas sweep rows for pressure-response plots.

    Each row holds the pressure, sphere, both frequencies, the relative change
    of omega_r against vacuum and against the EM-only radial frequency.
    """
    names = model.species.names
    if species not in names:
        raise ConfigurationError(f"unknown species '{species}'; valid: {', '.join(names)}")
    sphere_names = model.cfg.sphere_names
    spheres = list(sphere_names) if spheres is None else list(spheres)
    for s in spheres:
        if s not in sphere_names:
            raise ConfigurationError(f"unknown sphere '{s}'; valid: {', '.join(sphere_names)}")
    pressures = np.asarray(pressures, dtype=float)
    if pressures.size == 0:
        raise ConfigurationError("empty pressure grid")
    k = len(sphere_names)
    p = np.zeros((pressures.size, len(names)))
    p[:, names.index(species)] = pressures
    freqs = model.response_array(p)
    vac = model.response_array(np.zeros(len(names)))
    em = model.em_only_radial(p)
    rows = []
    for s in spheres:
        i = sphere_names.index(s)
        for j, pj in enumerate(pressures):
            wr = freqs[j, k + i]
            rows.append({
                "species": species,
                "pressure_pa": float(pj),
                "sphere": s,
                "omega_z": float(freqs[j, i]),
                "omega_r": float(wr),
                "rel_change_vacuum": float(wr / vac[k + i] - 1.0),
                "rel_change_em_only": float(wr / em[j, i] - 1.0),
            })
    return rows
