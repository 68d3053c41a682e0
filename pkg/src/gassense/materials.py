"""Dielectric response of solids on the imaginary frequency axis.

Two representations are supported:

* oscillator models, eps(i xi) = 1 + sum_j c_j / (1 + (xi/w_j)^2)
  (optionally with Debye relaxation terms d_k / (1 + xi/r_k)),
* tabulated Im eps(w) on the real axis, mapped to the imaginary axis with
  the Kramers-Kronig relation

      eps(i xi) = 1 + (2/pi) int_0^inf w Im eps(w) / (w^2 + xi^2) dw.

All frequencies are angular frequencies in rad/s.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Union

import numpy as np
import yaml

from .errors import ConfigurationError, DomainError

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

__all__ = [
    "OscillatorModel",
    "TabulatedResponse",
    "MaterialResponse",
    "eval_permittivity",
    "kk_transform",
    "load_material_db",
    "default_material_db_path",
]


def _check_xi(xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0) or np.any(~np.isfinite(xi)):
        raise DomainError("imaginary frequency xi must be finite and >= 0")
    return xi


@dataclass(frozen=True)
class OscillatorModel:
    """Lorentz oscillators (and optional Debye terms) on the imaginary axis."""

    strengths: tuple[float, ...]
    resonances: tuple[float, ...]
    debye_strengths: tuple[float, ...] = ()
    debye_rates: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.strengths) == 0:
            raise ConfigurationError("oscillator model needs at least one term")
        if len(self.strengths) != len(self.resonances):
            raise ConfigurationError("strengths and resonances differ in length")
        if len(self.debye_strengths) != len(self.debye_rates):
            raise ConfigurationError("debye strengths and rates differ in length")
        for v in (*self.strengths, *self.resonances, *self.debye_strengths, *self.debye_rates):
            if not (np.isfinite(v) and v > 0):
                raise ConfigurationError(f"oscillator parameters must be positive, got {v!r}")

    def __call__(self, xi):
        xi = _check_xi(xi)
        c = np.asarray(self.strengths)
        w = np.asarray(self.resonances)
        x = xi[..., None]
        eps = 1.0 + np.sum(c / (1.0 + (x / w) ** 2), axis=-1)
        if self.debye_strengths:
            d = np.asarray(self.debye_strengths)
            r = np.asarray(self.debye_rates)
            eps = eps + np.sum(d / (1.0 + x / r), axis=-1)
        return eps

    @property
    def static(self) -> float:
        return 1.0 + sum(self.strengths) + sum(self.debye_strengths)


@dataclass(frozen=True)
class TabulatedResponse:
    """Im eps(w) sampled on an ascending real-frequency grid.

    Parameters
    ----------
    grid : array
        Strictly ascending angular frequencies in rad/s.
    values : array
        Non-negative Im eps at the grid points.
    points_per_decade, pad_decades :
        Resolution and extent of the log-spaced Kramers-Kronig grid.
    """

    grid: np.ndarray
    values: np.ndarray
    points_per_decade: int = 400
    pad_decades: float = 1.0

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.ndim != 1 or grid.size < 2:
            raise ConfigurationError("tabulated response needs at least 2 points")
        if grid.shape != values.shape:
            raise ConfigurationError("grid and values differ in shape")
        if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
            raise ConfigurationError("table frequencies must be positive and strictly ascending")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ConfigurationError("Im eps must be finite and non-negative")

    def __call__(self, xi):
        return kk_transform(self, xi)


Model = Union[OscillatorModel, TabulatedResponse]


@dataclass(frozen=True)
class MaterialResponse:
    name: str
    model: Model
    mass_density: float
    source: str = ""

    def __post_init__(self):
        if not (np.isfinite(self.mass_density) and self.mass_density > 0):
            raise ConfigurationError(f"{self.name}: mass density must be positive")

    def permittivity(self, xi):
        return eval_permittivity(self, xi)


def kk_transform(tab: TabulatedResponse, xi, points_per_decade: int | None = None):
    """Map tabulated Im eps(w) onto eps(i xi) by Kramers-Kronig quadrature.

    The integral is evaluated with the trapezoid rule in ln(w) on a
    log-spaced grid reaching ``pad_decades`` beyond each end of the table.
    Outside the table Im eps is taken as zero; inside it is interpolated
    linearly in ln(w).
    """
    if tab is None or np.size(getattr(tab, "grid", ())) == 0:
        raise ConfigurationError("empty Kramers-Kronig table")
    xi = _check_xi(xi)
    ppd = points_per_decade or tab.points_per_decade
    lo = np.log10(tab.grid[0]) - tab.pad_decades
    hi = np.log10(tab.grid[-1]) + tab.pad_decades
    n = int(np.ceil((hi - lo) * ppd)) + 1
    lnw = np.linspace(lo, hi, n) * np.log(10.0)
    w = np.exp(lnw)
    im = np.interp(lnw, np.log(tab.grid), tab.values, left=0.0, right=0.0)
    w2 = w * w
    integrand = (w2 * im) / (w2 + xi[..., None] ** 2)
    integral = _trapezoid(integrand, lnw, axis=-1)
    return 1.0 + (2.0 / np.pi) * integral


def eval_permittivity(material: MaterialResponse, xi):
    """eps(i xi) of ``material``; scalar in, scalar out."""
    out = material.model(xi)
    return float(out) if np.ndim(out) == 0 else out


# --- database loading -------------------------------------------------------

class _LineLoader(yaml.SafeLoader):
    """SafeLoader that remembers the source line of every mapping."""


def _construct_mapping(loader, node, deep=False):
    mapping = yaml.SafeLoader.construct_mapping(loader, node, deep=deep)
    mapping["__line__"] = node.start_mark.line + 1
    return mapping


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def load_yaml_records(path, top_key: str):
    """Load ``path`` and return the list under ``top_key`` with line info."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    try:
        doc = yaml.load(text, Loader=_LineLoader)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: YAML parse error: {exc}") from exc
    if not isinstance(doc, dict) or top_key not in doc:
        raise ConfigurationError(f"{path}: expected a top-level '{top_key}' list")
    extra = set(doc) - {top_key, "__line__"}
    if extra:
        raise ConfigurationError(f"{path}: unknown top-level keys {sorted(extra)}")
    records = doc[top_key]
    if not isinstance(records, list) or not records:
        raise ConfigurationError(f"{path}: '{top_key}' must be a non-empty list")
    return records


def _pairs(value, where, what):
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
        raise ConfigurationError(f"{where}: '{what}' must be a list of [a, b] pairs")
    return arr


_MATERIAL_KEYS = {
    "oscillator": {"name", "kind", "oscillators", "debye", "mass_density", "source"},
    "table": {"name", "kind", "table", "mass_density", "source", "points_per_decade"},
}


def _parse_material(rec, path) -> MaterialResponse:
    if not isinstance(rec, dict):
        raise ConfigurationError(f"{path}: material records must be mappings")
    line = rec.pop("__line__", "?")
    name = rec.get("name", "<unnamed>")
    where = f"{path}:{line} (material '{name}')"
    kind = rec.get("kind")
    if kind not in _MATERIAL_KEYS:
        raise ConfigurationError(f"{where}: kind must be one of {sorted(_MATERIAL_KEYS)}")
    unknown = set(rec) - _MATERIAL_KEYS[kind]
    if unknown:
        raise ConfigurationError(f"{where}: unknown keys {sorted(unknown)}")
    missing = {"name", "mass_density"} - set(rec)
    if missing:
        raise ConfigurationError(f"{where}: missing fields {sorted(missing)}")
    try:
        if kind == "oscillator":
            if "oscillators" not in rec:
                raise ConfigurationError(f"{where}: missing field 'oscillators'")
            osc = _pairs(rec["oscillators"], where, "oscillators")
            debye = _pairs(rec["debye"], where, "debye") if rec.get("debye") else np.empty((0, 2))
            model = OscillatorModel(
                tuple(osc[:, 0]), tuple(osc[:, 1]), tuple(debye[:, 0]), tuple(debye[:, 1])
            )
        else:
            if "table" not in rec:
                raise ConfigurationError(f"{where}: missing field 'table'")
            tab = _pairs(rec["table"], where, "table")
            kwargs = {}
            if "points_per_decade" in rec:
                kwargs["points_per_decade"] = int(rec["points_per_decade"])
            model = TabulatedResponse(tab[:, 0], tab[:, 1], **kwargs)
        return MaterialResponse(
            name=str(name),
            model=model,
            mass_density=float(rec["mass_density"]),
            source=str(rec.get("source", "")),
        )
    except ConfigurationError as exc:
        if str(exc).startswith(str(path)):
            raise
        raise ConfigurationError(f"{where}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def default_material_db_path() -> Path:
    return Path(str(resources.files("gassense") / "data" / "materials.yaml"))


def load_material_db(path=None) -> list[MaterialResponse]:
    """Parse a material database file (YAML, top-level key ``materials``)."""
    path = Path(path) if path is not None else default_material_db_path()
    out = []
    seen = set()
    for rec in load_yaml_records(path, "materials"):
        mat = _parse_material(rec, path)
        if mat.name in seen:
            raise ConfigurationError(f"{path}: duplicate material name '{mat.name}'")
        seen.add(mat.name)
        out.append(mat)
    return out
