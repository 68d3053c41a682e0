r"""Casimir-Polder potential of a small sphere inside a hollow-core fibre.

The scattering Green function is taken to first Born order over the fibre
volume. On the imaginary axis, with :math:`\kappa = \sqrt{\varepsilon_M}\xi/c`,
its trace reduces to

.. math::

    \mathrm{Tr}\,G(r_A, r_A, i\xi) = -\frac{\xi^2}{c^2} J(r_A, \xi),\qquad
    J = \frac{\chi}{1+\chi/3}\int_V d^3s\, \mathrm{Tr}[R\cdot R],

with :math:`\chi = \varepsilon_F - \varepsilon_M`, and the Matsubara sum gives

.. math::

    U_{CP}(r_A) = -\frac{\mu_0 k_B T}{c^2}\sum_{n\ge1}\xi_n^4\,
                  \alpha^\star(i\xi_n)\,J(r_A,\xi_n).

The n = 0 term vanishes because of the explicit :math:`\xi^2` prefactor.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.constants import c as C, epsilon_0, hbar, k as k_B, mu_0
from scipy.interpolate import CubicSpline

from .errors import AccuracyError, ConfigurationError, DomainError, SingularityError
from .materials import MaterialResponse

__all__ = [
    "FiberGeometry",
    "SphereSpec",
    "MatsubaraGrid",
    "QuadratureSpec",
    "hard_sphere_alpha",
    "matsubara_xi",
    "regular_green_tensor",
    "trace_rr_closed_form",
    "kernel_integral",
    "kernel_difference",
    "reduced_green_trace",
    "cp_terms",
    "cp_potential",
    "cp_radial_curvature",
    "local_field_factor",
    "GreenCache",
]


@dataclass(frozen=True)
class FiberGeometry:
    inner_radius: float
    outer_radius: float
    material: MaterialResponse

    def __post_init__(self):
        if not (0 < self.inner_radius < self.outer_radius):
            raise ConfigurationError("fibre radii must satisfy 0 < R_i < R_o")


@dataclass(frozen=True)
class SphereSpec:
    radius: float
    material: MaterialResponse

    def __post_init__(self):
        if not (self.radius > 0):
            raise ConfigurationError("sphere radius must be positive")

    @property
    def mass(self) -> float:
        return 4.0 / 3.0 * np.pi * self.radius**3 * self.material.mass_density

    @property
    def name(self) -> str:
        return self.material.name


@dataclass(frozen=True)
class MatsubaraGrid:
    """Matsubara frequencies and the truncation rule of the sum.

    The sum stops once ``patience`` consecutive terms are each smaller than
    ``rtol`` times the running sum. ``n_cap`` bounds the search.
    """

    temperature: float = 300.0
    rtol: float = 1e-8
    patience: int = 3
    n_cap: int = 400

    def __post_init__(self):
        if not (self.temperature > 0):
            raise ConfigurationError("temperature must be positive")

    def xi(self, n):
        return matsubara_xi(self.temperature, n)


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts for the fibre-volume integral and its refinement loop.

    The integral is refined by doubling every node count until two
    successive results agree to ``rtol``. ``max_doublings=0`` evaluates the
    base rule once without a check.
    """

    n_r: int = 12
    n_phi: int = 8
    n_z: int = 24
    z_cut: float = 30.0
    rtol: float = 1e-7
    max_doublings: int = 5

    def __post_init__(self):
        if min(self.n_r, self.n_phi, self.n_z) < 4:
            raise ConfigurationError("quadrature node counts must be >= 4")
        if not (self.z_cut > 0):
            raise ConfigurationError("z_cut must be positive")

    def doubled(self, times: int = 1) -> "QuadratureSpec":
        f = 2**times
        return replace(self, n_r=self.n_r * f, n_phi=self.n_phi * f, n_z=self.n_z * f)


def matsubara_xi(temperature, n):
    """xi_n = 2 pi k_B T n / hbar in rad/s."""
    return 2.0 * np.pi * k_B * temperature * np.asarray(n, dtype=float) / hbar


def hard_sphere_alpha(eps_np, eps_m, a):
    """Medium-screened sphere polarisability (SI units, C^2 m^2 / J).

    ``eps_np = inf`` gives the perfect-conductor limit.
    """
    if not (a > 0):
        raise DomainError("sphere radius must be positive")
    eps_np = np.asarray(eps_np, dtype=float)
    eps_m = np.asarray(eps_m, dtype=float)
    den = eps_np + 2.0 * eps_m
    if np.any(den == 0):
        raise SingularityError("eps_NP + 2 eps_M = 0")
    with np.errstate(invalid="ignore"):
        ratio = np.where(np.isinf(eps_np), 1.0, (eps_np - eps_m) / den)
    out = 4.0 * np.pi * epsilon_0 * eps_m * a**3 * ratio
    return float(out) if out.ndim == 0 else out


def local_field_factor(chi):
    """chi / (1 + chi/3)."""
    return chi / (1.0 + chi / 3.0)


def regular_green_tensor(q, rvec):
    """Regular part of the bulk Green tensor R(r, r') for separation ``rvec``.

    ``q`` may be complex; on the imaginary axis q = i kappa.
    """
    rvec = np.asarray(rvec, dtype=float)
    rho = np.linalg.norm(rvec)
    x = 1.0 / (q * rho)
    f = x + 1j * x**2 - x**3
    g = x + 3j * x**2 - 3 * x**3
    unit = np.outer(rvec, rvec) / rho**2
    return q / (4 * np.pi) * (f * np.eye(3) - g * unit) * np.exp(1j * q * rho)


def trace_rr_closed_form(kappa, rho):
    """Tr[R . R] at q = i kappa, in 1/m^2.

    With x = 1/(kappa rho), F = x + x^2 + x^3 and G = x + 3x^2 + 3x^3 the
    trace is (kappa/4pi)^2 e^{-2 kappa rho} (3F^2 - 2FG + G^2). The
    bracket is evaluated as 2F^2 + (G - F)^2, which is free of cancellation.
    """
    kappa = np.asarray(kappa, dtype=float)
    rho = np.asarray(rho, dtype=float)
    x = 1.0 / (kappa * rho)
    x2 = x * x
    F = x + x2 + x2 * x
    GmF = 2.0 * x2 * (1.0 + x)
    return (kappa / (4 * np.pi)) ** 2 * np.exp(-2.0 * kappa * rho) * (2.0 * F * F + GmF * GmF)


# --- fibre volume integral --------------------------------------------------

@lru_cache(maxsize=64)
def _gauss(n):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def _nodes(offsets, kappa, geom: FiberGeometry, n_r, n_phi, n_z, z_cut):
    """Quadrature nodes (r_s, z_s, phi_s) and weights, z folded onto z >= 0."""
    ri, ro = geom.inner_radius, geom.outer_radius
    gap = ri - max(offsets)
    # radial: geometric clustering at the inner wall, s = r_s - R_i
    s0 = 1.0 / (2.0 * kappa + 3.0 / gap)
    depth = ro - ri
    beta = np.log1p(depth / s0)
    t, w = _gauss(n_r)
    s = depth * np.expm1(beta * t) / np.expm1(beta)
    r_s = ri + s
    w_r = w * depth * beta * np.exp(beta * t) / np.expm1(beta) * r_s
    # axial: z = L sinh(u) on [0, Z_max]
    z_max = z_cut / (2.0 * kappa)
    scale = gap * min(1.0, 1.0 / np.sqrt(kappa * gap))
    u_max = np.arcsinh(z_max / scale)
    t, w = _gauss(n_z)
    u = t * u_max
    z_s = scale * np.sinh(u)
    w_z = 2.0 * w * u_max * scale * np.cosh(u)
    # azimuth: periodic trapezoid in theta, phi = theta - a sin(theta) clusters
    # nodes near the closest wall point when the sphere sits off-axis
    if max(offsets) == 0.0:
        phi = np.zeros(1)
        w_phi = np.full(1, 2 * np.pi)
    else:
        a = 1.0 - gap / ri
        theta = 2 * np.pi * np.arange(n_phi) / n_phi
        phi = theta - a * np.sin(theta)
        w_phi = (2 * np.pi / n_phi) * (1.0 - a * np.cos(theta))
    return r_s, w_r, z_s, w_z, phi, w_phi


def _rho(r_a, r_s, z_s, phi):
    rr = r_a**2 + r_s[:, None, None] ** 2 - 2 * r_a * r_s[:, None, None] * np.cos(phi)[None, None, :]
    return np.sqrt(rr + z_s[None, :, None] ** 2)


def _shell(offsets, kappa, geom, n_r, n_phi, n_z, z_cut, diff):
    r_s, w_r, z_s, w_z, phi, w_phi = _nodes(offsets, kappa, geom, n_r, n_phi, n_z, z_cut)
    weights = w_r[:, None, None] * w_z[None, :, None] * w_phi[None, None, :]
    vals = [trace_rr_closed_form(kappa, _rho(o, r_s, z_s, phi)) for o in offsets]
    if diff:
        return np.array([np.sum(weights * (vals[1] - vals[0]))])
    return np.array([np.sum(weights * v) for v in vals])


def _refine(offsets, kappa, geom, quad: QuadratureSpec, diff):
    prev = _shell(offsets, kappa, geom, quad.n_r, quad.n_phi, quad.n_z, quad.z_cut, diff)
    for k in range(1, quad.max_doublings + 1):
        f = 2**k
        cur = _shell(offsets, kappa, geom, quad.n_r * f, quad.n_phi * f, quad.n_z * f,
                     quad.z_cut, diff)
        if np.all(np.abs(cur - prev) <= quad.rtol * np.abs(cur)):
            return cur
        prev = cur
    if quad.max_doublings == 0:
        return prev
    raise AccuracyError(
        f"fibre integral did not converge to rtol={quad.rtol} after "
        f"{quad.max_doublings} doublings (kappa={kappa:.4g} 1/m, offsets={offsets})"
    )


def _check_offset(r_a, geom):
    if not (0 <= r_a < geom.inner_radius):
        raise DomainError(f"radial offset {r_a} m outside [0, R_i={geom.inner_radius})")


def kernel_integral(r_a, kappa, geom: FiberGeometry, quad: QuadratureSpec = QuadratureSpec()):
    """int_V d^3s Tr[R.R] over the fibre wall (m), without the chi factor."""
    _check_offset(r_a, geom)
    if not (kappa > 0):
        raise DomainError("kappa must be positive")
    return float(_refine((float(r_a),), float(kappa), geom, quad, diff=False)[0])


def kernel_difference(h, kappa, geom: FiberGeometry, quad: QuadratureSpec = QuadratureSpec()):
    """kernel_integral(h) - kernel_integral(0), integrated pointwise on shared nodes."""
    _check_offset(h, geom)
    if not (kappa > 0):
        raise DomainError("kappa must be positive")
    return float(_refine((0.0, float(h)), float(kappa), geom, quad, diff=True)[0])


def reduced_green_trace(r_a, xi, eps_m, geom: FiberGeometry, quad: QuadratureSpec = QuadratureSpec()):
    """J(r_A, xi) in m; Tr G = -(xi/c)^2 J on the imaginary axis."""
    _check_offset(r_a, geom)
    if not (xi > 0):
        raise DomainError("xi must be positive")
    chi = geom.material.permittivity(xi) - eps_m
    if chi == 0:
        return 0.0
    kappa = np.sqrt(eps_m) * xi / C
    return local_field_factor(chi) * kernel_integral(r_a, kappa, geom, quad)


# --- Matsubara sums ---------------------------------------------------------

def _prefactor(temperature):
    return mu_0 * k_B * temperature / C**2


def _weights(n, sphere, medium, geom, grid):
    """xi_n^4 alpha*(i xi_n) chi'(i xi_n) and kappa_n for n >= 1."""
    xi = grid.xi(n)
    eps_m = np.asarray(medium(xi), dtype=float)
    eps_np = sphere.material.permittivity(xi)
    alpha = hard_sphere_alpha(eps_np, eps_m, sphere.radius)
    chi = geom.material.permittivity(xi) - eps_m
    kappa = np.sqrt(eps_m) * xi / C
    return xi**4 * alpha * local_field_factor(chi), kappa


def _sum_terms(term, grid: MatsubaraGrid, n_max):
    """Sum term(n) for n = 1.. either to n_max or by the truncation rule."""
    if n_max is not None:
        terms = np.array([term(n) for n in range(1, n_max + 1)])
        return float(np.sum(terms)), n_max
    total = 0.0
    quiet = 0
    for n in range(1, grid.n_cap + 1):
        t = term(n)
        total += t
        if abs(t) < grid.rtol * abs(total) or t == 0.0:
            quiet += 1
            if quiet >= grid.patience:
                return total, n
        else:
            quiet = 0
    raise AccuracyError(f"Matsubara sum not converged within n_cap={grid.n_cap}")


def cp_terms(r_a, sphere: SphereSpec, medium, geom: FiberGeometry, grid: MatsubaraGrid,
             quad: QuadratureSpec, n_max: int):
    """Matsubara terms n = 0..n_max of U_CP(r_A) in J; entry 0 is exactly zero."""
    _check_offset(r_a, geom)
    pre = _prefactor(grid.temperature)
    out = np.zeros(n_max + 1)
    for n in range(1, n_max + 1):
        wgt, kappa = _weights(n, sphere, medium, geom, grid)
        if wgt != 0:
            out[n] = -pre * wgt * kernel_integral(r_a, kappa, geom, quad)
    return out


def cp_potential(r_a, sphere: SphereSpec, medium, geom: FiberGeometry,
                 grid: MatsubaraGrid = MatsubaraGrid(), quad: QuadratureSpec = QuadratureSpec(),
                 n_max: int | None = None, return_n: bool = False):
    """Casimir-Polder potential U_CP(r_A) in J.

    ``medium`` is a callable xi -> eps_M(i xi) (see ``gas.GasMedium``).
    With ``n_max=None`` the sum is truncated by the grid's rule.
    """
    _check_offset(r_a, geom)
    pre = _prefactor(grid.temperature)

    def term(n):
        wgt, kappa = _weights(n, sphere, medium, geom, grid)
        if wgt == 0:
            return 0.0
        return -pre * wgt * kernel_integral(r_a, kappa, geom, quad)

    total, n_used = _sum_terms(term, grid, n_max)
    return (total, n_used) if return_n else total


def cp_radial_curvature(sphere: SphereSpec, medium, geom: FiberGeometry,
                        grid: MatsubaraGrid = MatsubaraGrid(),
                        quad: QuadratureSpec = QuadratureSpec(), h: float | None = None,
                        n_max: int | None = None, return_n: bool = False):
    """d^2 U_CP / dr^2 at the axis, as 2 [U(h) - U(0)] / h^2 (J/m^2).

    The difference U(h) - U(0) is integrated pointwise on shared nodes, so
    quadrature error does not swamp the small O(h^2) difference.
    """
    ri = geom.inner_radius
    h = ri / 100.0 if h is None else float(h)
    if not (0 < h < ri / 4):
        raise DomainError(f"finite-difference step must satisfy 0 < h < R_i/4, got {h}")
    pre = _prefactor(grid.temperature)

    def term(n):
        wgt, kappa = _weights(n, sphere, medium, geom, grid)
        if wgt == 0:
            return 0.0
        return -pre * wgt * kernel_difference(h, kappa, geom, quad) * 2.0 / h**2

    total, n_used = _sum_terms(term, grid, n_max)
    return (total, n_used) if return_n else total


# --- interpolation cache ----------------------------------------------------

class GreenCache:
    """Tabulated kernel integrals for fast mixture sweeps.

    For fixed geometry the mixture enters the kernel only through
    kappa = sqrt(eps_M) xi / c, so K(0, kappa) and K(h, kappa) - K(0, kappa)
    are tabulated once on a log-kappa grid and interpolated with cubic
    splines in (ln kappa, ln K). The local-field and polarisability factors
    are applied afterwards per mixture.
    """

    def __init__(self, geom: FiberGeometry, quad: QuadratureSpec, grid: MatsubaraGrid,
                 h: float, n_top: int, eps_max: float = 1.01, points_per_decade: int = 48):
        self.geom = geom
        self.quad = quad
        self.grid = grid
        self.h = float(h)
        self.n_top = int(n_top)
        self.eps_max = float(eps_max)
        k_lo = grid.xi(1) / C * 0.999
        k_hi = grid.xi(self.n_top) * np.sqrt(self.eps_max) / C * 1.001
        n = max(8, int(np.ceil(np.log10(k_hi / k_lo) * points_per_decade)) + 1)
        self.kappa = np.geomspace(k_lo, k_hi, n)
        k0 = np.array([kernel_integral(0.0, k, geom, quad) for k in self.kappa])
        dk = np.array([kernel_difference(self.h, k, geom, quad) for k in self.kappa])
        if np.any(k0 <= 0) or np.any(dk <= 0):
            raise AccuracyError("non-positive kernel values while building the cache")
        lnk = np.log(self.kappa)
        self._k0 = CubicSpline(lnk, np.log(k0))
        self._dk = CubicSpline(lnk, np.log(dk))
        self._range = (self.kappa[0], self.kappa[-1])

    def _check(self, kappa):
        kappa = np.asarray(kappa, dtype=float)
        if np.any(kappa < self._range[0]) or np.any(kappa > self._range[1]):
            raise DomainError("kappa outside the cached range; rebuild with larger eps_max/n_top")
        return np.log(kappa)

    def kernel(self, kappa):
        return np.exp(self._k0(self._check(kappa)))

    def difference(self, kappa):
        return np.exp(self._dk(self._check(kappa)))
