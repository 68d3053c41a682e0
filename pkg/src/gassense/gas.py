"""Gas species polarisabilities and the effective permittivity of a mixture.

Each species carries a Lorentz-oscillator polarisability volume

    alpha_i(i xi) = sum_j c_ij / (1 + (xi/w_ij)^2)          [m^3]

Partial pressures enter through the ideal-gas number density, giving the
dimensionless mixture polarisability

    alpha_mix(i xi) = sum_i P_i alpha_i(i xi) / (k_B T)

which is mapped to a permittivity with the Clausius-Mossotti form
eps_M = (1 + 2 alpha_mix) / (1 - alpha_mix).
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.constants import angstrom, e, hbar, k as k_B

from .errors import ConfigurationError, SingularityError
from .materials import _check_xi, _pairs, load_yaml_records

__all__ = [
    "GasSpecies",
    "SpeciesDb",
    "MixtureState",
    "GasMedium",
    "VACUUM",
    "species_alpha",
    "mixture_alpha",
    "effective_permittivity",
    "permittivity_from_alpha",
    "load_species_db",
    "default_species_db_path",
    "BAR",
]

BAR = 1.0e5  # Pa

_STRENGTH_UNITS = {"m3": 1.0, "A3": angstrom**3}
_RESONANCE_UNITS = {"rad/s": 1.0, "eV": e / hbar}


@dataclass(frozen=True)
class GasSpecies:
    name: str
    strengths: tuple[float, ...]  # m^3
    resonances: tuple[float, ...]  # rad/s
    source: str = ""

    def __post_init__(self):
        if not self.strengths or len(self.strengths) != len(self.resonances):
            raise ConfigurationError(f"{self.name}: need matching, non-empty oscillator lists")
        for v in (*self.strengths, *self.resonances):
            if not (np.isfinite(v) and v > 0):
                raise ConfigurationError(f"{self.name}: oscillator parameters must be positive")

    @property
    def static_alpha(self) -> float:
        return float(sum(self.strengths))


def species_alpha(s: GasSpecies, xi):
    """Polarisability volume (m^3) of species ``s`` at imaginary frequency ``xi``."""
    xi = _check_xi(xi)
    c = np.asarray(s.strengths)
    w = np.asarray(s.resonances)
    out = np.sum(c / (1.0 + (xi[..., None] / w) ** 2), axis=-1)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SpeciesDb:
    species: tuple[GasSpecies, ...]

    def __post_init__(self):
        names = [s.name for s in self.species]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate species names in {names}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.species)

    def __getitem__(self, name: str) -> GasSpecies:
        for s in self.species:
            if s.name == name:
                return s
        raise ConfigurationError(f"unknown species '{name}'; known: {', '.join(self.names)}")

    def __len__(self):
        return len(self.species)

    def alpha_matrix(self, xi) -> np.ndarray:
        """Array of shape (n_species, len(xi)) with alpha_i(i xi_k)."""
        xi = np.atleast_1d(_check_xi(xi))
        return np.stack([species_alpha(s, xi) for s in self.species])


@dataclass(frozen=True)
class MixtureState:
    """Partial pressures (Pa) of the mixture constituents at temperature T (K)."""

    pressures: Mapping[str, float]
    temperature: float = 300.0
    pressure_cap: float | None = None

    def __post_init__(self):
        if not (self.temperature > 0):
            raise ConfigurationError("temperature must be positive")
        for name, p in self.pressures.items():
            if not (np.isfinite(p) and p >= 0):
                raise ConfigurationError(f"partial pressure of {name} must be >= 0, got {p}")
        if self.pressure_cap is not None and self.total_pressure > self.pressure_cap * (1 + 1e-12):
            raise ConfigurationError(
                f"total pressure {self.total_pressure} Pa exceeds cap {self.pressure_cap} Pa"
            )

    @property
    def total_pressure(self) -> float:
        return float(sum(self.pressures.values()))

    @classmethod
    def from_vector(cls, names, pressures, temperature=300.0, pressure_cap=None):
        return cls(dict(zip(names, map(float, pressures))), temperature, pressure_cap)

    def vector(self, names) -> np.ndarray:
        unknown = set(self.pressures) - set(names)
        if unknown:
            raise ConfigurationError(f"species {sorted(unknown)} not in species db")
        return np.array([self.pressures.get(n, 0.0) for n in names])


def mixture_alpha(mix: MixtureState, db: SpeciesDb, xi):
    """Dimensionless mixture polarisability sum_i P_i alpha_i / (k_B T)."""
    p = mix.vector(db.names)
    xi = _check_xi(xi)
    out = (p / (k_B * mix.temperature)) @ db.alpha_matrix(np.ravel(xi))
    out = out.reshape(np.shape(xi))
    return float(out) if out.ndim == 0 else out


def permittivity_from_alpha(alpha_mix):
    alpha_mix = np.asarray(alpha_mix, dtype=float)
    if np.any(alpha_mix >= 1.0):
        raise SingularityError("mixture polarisability >= 1: unphysical density")
    out = (1.0 + 2.0 * alpha_mix) / (1.0 - alpha_mix)
    return float(out) if out.ndim == 0 else out


def effective_permittivity(mix: MixtureState, db: SpeciesDb, xi):
    """eps_M(i xi) of the mixture."""
    return permittivity_from_alpha(mixture_alpha(mix, db, xi))


class GasMedium:
    """Callable xi -> eps_M(i xi) for a fixed mixture."""

    def __init__(self, mix: MixtureState, db: SpeciesDb):
        self.mix = mix
        self.db = db
        # raises early on unknown species
        mix.vector(db.names)

    def __call__(self, xi):
        return effective_permittivity(self.mix, self.db, xi)

    def __repr__(self):
        return f"GasMedium({dict(self.mix.pressures)!r}, T={self.mix.temperature})"


class _Vacuum:
    def __call__(self, xi):
        xi = _check_xi(xi)
        return 1.0 if xi.ndim == 0 else np.ones_like(xi)

    def __repr__(self):
        return "VACUUM"


VACUUM = _Vacuum()


def _parse_species(rec, path) -> GasSpecies:
    if not isinstance(rec, dict):
        raise ConfigurationError(f"{path}: species records must be mappings")
    line = rec.pop("__line__", "?")
    where = f"{path}:{line} (species '{rec.get('name', '<unnamed>')}')"
    allowed = {"name", "oscillators", "strength_unit", "resonance_unit", "source"}
    unknown = set(rec) - allowed
    if unknown:
        raise ConfigurationError(f"{where}: unknown keys {sorted(unknown)}")
    for key in ("name", "oscillators", "strength_unit", "resonance_unit"):
        if key not in rec:
            raise ConfigurationError(f"{where}: missing field '{key}'")
    if rec["strength_unit"] not in _STRENGTH_UNITS:
        raise ConfigurationError(f"{where}: strength_unit must be one of {list(_STRENGTH_UNITS)}")
    if rec["resonance_unit"] not in _RESONANCE_UNITS:
        raise ConfigurationError(f"{where}: resonance_unit must be one of {list(_RESONANCE_UNITS)}")
    if not isinstance(rec["name"], str):
        raise ConfigurationError(f"{where}: name must be a string (quote names like \"NO\")")
    osc = _pairs(rec["oscillators"], where, "oscillators")
    try:
        return GasSpecies(
            name=str(rec["name"]),
            strengths=tuple(osc[:, 0] * _STRENGTH_UNITS[rec["strength_unit"]]),
            resonances=tuple(osc[:, 1] * _RESONANCE_UNITS[rec["resonance_unit"]]),
            source=str(rec.get("source", "")),
        )
    except ConfigurationError as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def default_species_db_path() -> Path:
    return Path(str(resources.files("gassense") / "data" / "species.yaml"))


def load_species_db(path=None) -> SpeciesDb:
    path = Path(path) if path is not None else default_species_db_path()
    species = tuple(_parse_species(r, path) for r in load_yaml_records(path, "species"))
    try:
        return SpeciesDb(species)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
