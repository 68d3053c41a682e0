"""Run configuration: one YAML file describing sensor, sampling and training.

Missing sections fall back to the shipped ``default_config.yaml``. Unknown
keys are rejected so typos do not pass silently. The configuration hash
covers every value that influences results, including the contents of the
material and species databases.
"""
from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .casimir import FiberGeometry, MatsubaraGrid, QuadratureSpec, SphereSpec
from .dataset import SamplingSpec
from .errors import ConfigurationError, FormatError
from .gas import SpeciesDb, load_species_db, default_species_db_path
from .materials import MaterialResponse, default_material_db_path, load_material_db
from .mlp import TrainSchedule
from .trap import LaserSpec, SensorConfig

__all__ = ["RunConfig", "load_config", "default_config_path", "OUT_DIR_ENV"]

OUT_DIR_ENV = "GASSENSE_OUT_DIR"

_SCHEMA = {
    "seed": None,
    "temperature": None,
    "paths": {"material_db": None, "species_db": None, "output_dir": None},
    "fiber": {"material": None, "inner_radius": None, "outer_radius": None},
    "laser": {"wavelength": None, "beam_radius": None, "power": None},
    "spheres": {"radius": None, "materials": None},
    "numerics": {
        "quadrature": {"n_r": None, "n_phi": None, "n_z": None, "z_cut": None,
                       "rtol": None, "max_doublings": None},
        "matsubara": {"rtol": None, "patience": None, "n_cap": None},
        "fd_step": None,
        "cache": {"n_top": None, "eps_max": None, "points_per_decade": None},
    },
    "sampling": {"target": None, "total_pressure": None, "presets": "free"},
    "training": {"hidden_layers": None, "hidden_units": None, "batch_size": None,
                 "n_validation": None, "schedule": None},
}


def default_config_path() -> Path:
    return Path(str(resources.files("gassense") / "data" / "default_config.yaml"))


def _check_keys(data, schema, where):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{where}: expected a mapping")
    unknown = set(data) - set(schema)
    if unknown:
        raise ConfigurationError(f"{where}: unknown keys {sorted(unknown)}; allowed {sorted(schema)}")
    for k, v in data.items():
        sub = schema[k]
        if isinstance(sub, dict) and v is not None:
            _check_keys(v, sub, f"{where}.{k}")


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "presets":
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _num(x, where, kind=float):
    # YAML reads "5e-9" (no dot) as a string; accept it
    try:
        v = kind(x) if kind is float else int(x)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{where}: expected a number, got {x!r}") from None
    if kind is int and v != float(x):
        raise ConfigurationError(f"{where}: expected an integer, got {x!r}")
    return v


def _file_hash(path: Path) -> str:
    try:
        return hashlib.sha256(path.read_bytes()).hexdigest()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    source: str
    seed: int
    sensor: SensorConfig
    species: SpeciesDb
    materials: dict[str, MaterialResponse]
    presets: dict[str, SamplingSpec]
    schedule: TrainSchedule
    hidden: tuple[int, ...]
    n_validation: int
    cache: dict
    output_dir: Path
    config_hash: str

    def preset(self, name: str, seed: int | None = None) -> SamplingSpec:
        if name not in self.presets:
            raise ConfigurationError(f"unknown preset '{name}'; known: {', '.join(self.presets)}")
        spec = self.presets[name]
        if seed is None:
            return spec
        return SamplingSpec(spec.species, spec.total_pressure, spec.target, spec.target_range, seed)

    def sensor_model(self):
        from .trap import SensorModel
        return SensorModel(self.sensor, self.species, eps_max=self.cache["eps_max"],
                           n_top=self.cache["n_top"],
                           cache_points_per_decade=self.cache["points_per_decade"])


def load_config(path=None, seed: int | None = None, output_dir=None) -> RunConfig:
    """Read a run configuration, overlaying it on the shipped defaults.

    ``seed`` and ``output_dir`` override the file. The environment variable
    ``GASSENSE_OUT_DIR`` overrides the output directory only, and loses to an
    explicit ``output_dir``.
    """
    base = yaml.safe_load(default_config_path().read_text())
    src = "<default>"
    if path is not None:
        path = Path(path)
        try:
            user = yaml.safe_load(path.read_text()) or {}
        except OSError as exc:
            raise FormatError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{path}: invalid YAML: {exc}") from exc
        _check_keys(user, _SCHEMA, str(path))
        base = _merge(base, user)
        src = str(path)
    raw = base
    if seed is not None:
        raw["seed"] = int(seed)
    where = src

    paths = raw["paths"]
    rel = Path(src).parent if path is not None else Path.cwd()
    mat_path = Path(paths["material_db"]) if paths["material_db"] else default_material_db_path()
    spc_path = Path(paths["species_db"]) if paths["species_db"] else default_species_db_path()
    if not mat_path.is_absolute() and paths["material_db"]:
        mat_path = rel / mat_path
    if not spc_path.is_absolute() and paths["species_db"]:
        spc_path = rel / spc_path
    for p in (mat_path, spc_path):
        if not p.exists():
            raise ConfigurationError(f"{where}: database file {p} does not exist")
    materials = {m.name: m for m in load_material_db(mat_path)}
    species = load_species_db(spc_path)

    def material(name):
        if name not in materials:
            raise ConfigurationError(
                f"{where}: unknown material '{name}'; known: {', '.join(materials)}")
        return materials[name]

    T = _num(raw["temperature"], f"{where}: temperature")
    f = raw["fiber"]
    geom = FiberGeometry(_num(f["inner_radius"], "fiber.inner_radius"),
                         _num(f["outer_radius"], "fiber.outer_radius"), material(f["material"]))
    l = raw["laser"]
    laser = LaserSpec(_num(l["wavelength"], "laser.wavelength"),
                      _num(l["beam_radius"], "laser.beam_radius"), _num(l["power"], "laser.power"))
    s = raw["spheres"]
    radius = _num(s["radius"], "spheres.radius")
    spheres = tuple(SphereSpec(radius, material(m)) for m in s["materials"])
    nq = raw["numerics"]["quadrature"]
    quad = QuadratureSpec(
        n_r=_num(nq["n_r"], "n_r", int), n_phi=_num(nq["n_phi"], "n_phi", int),
        n_z=_num(nq["n_z"], "n_z", int), z_cut=_num(nq["z_cut"], "z_cut"),
        rtol=_num(nq["rtol"], "quadrature.rtol"),
        max_doublings=_num(nq["max_doublings"], "max_doublings", int))
    nm = raw["numerics"]["matsubara"]
    grid = MatsubaraGrid(T, _num(nm["rtol"], "matsubara.rtol"),
                         _num(nm["patience"], "patience", int), _num(nm["n_cap"], "n_cap", int))
    fd = raw["numerics"]["fd_step"]
    sensor = SensorConfig(geom, laser, spheres, T, grid, quad,
                          None if fd is None else _num(fd, "fd_step"), n_spheres=len(spheres))
    nc = raw["numerics"]["cache"]
    cache = {"n_top": _num(nc["n_top"], "cache.n_top", int),
             "eps_max": _num(nc["eps_max"], "cache.eps_max"),
             "points_per_decade": _num(nc["points_per_decade"], "cache.points_per_decade", int)}

    seed_v = _num(raw["seed"], "seed", int)
    sp = raw["sampling"]
    cap = _num(sp["total_pressure"], "sampling.total_pressure")
    presets = {}
    for name, pr in (sp.get("presets") or {}).items():
        if not isinstance(pr, dict) or set(pr) - {"target_range", "total_pressure", "target"}:
            raise ConfigurationError(f"{where}: preset '{name}' must set only target_range/total_pressure/target")
        lo, hi = (_num(v, f"preset {name}") for v in pr["target_range"])
        presets[name] = SamplingSpec(species.names, _num(pr.get("total_pressure", cap), name),
                                     pr.get("target", sp["target"]), (lo, hi), seed_v)

    tr = raw["training"]
    stages = tuple((_num(r, "schedule rate"), _num(e, "schedule epochs", int)) for r, e in tr["schedule"])
    schedule = TrainSchedule(stages, _num(tr["batch_size"], "batch_size", int))
    hidden = (_num(tr["hidden_units"], "hidden_units", int),) * _num(tr["hidden_layers"], "hidden_layers", int)

    out = output_dir or os.environ.get(OUT_DIR_ENV) or paths["output_dir"]

    canon = copy.deepcopy(raw)
    canon.pop("paths")
    canon["_db"] = {"materials": _file_hash(mat_path), "species": _file_hash(spc_path)}
    digest = hashlib.sha256(json.dumps(canon, sort_keys=True, default=str).encode()).hexdigest()

    return RunConfig(raw=raw, source=src, seed=seed_v, sensor=sensor, species=species,
                     materials=materials, presets=presets, schedule=schedule, hidden=hidden,
                     n_validation=_num(tr["n_validation"], "n_validation", int), cache=cache,
                     output_dir=Path(out), config_hash=digest[:16])
