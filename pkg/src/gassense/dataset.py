"""Random gas mixtures, their sensor responses, and the dataset file format.

File layout (all numbers little-endian float64)::

    GASSENSE-DATASET\n
    <one line of JSON header>\n
    rows: n x (n_species pressures [Pa] + n_freq frequencies [rad/s])
    sha256 digest (32 bytes) of everything above
"""
from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, FormatError, InstabilityError

__all__ = [
    "SamplingSpec",
    "Dataset",
    "sample_pressures",
    "generate_dataset",
    "write_dataset",
    "read_dataset",
    "export_text",
    "split_indices",
    "FORMAT_VERSION",
]

log = logging.getLogger(__name__)

MAGIC = b"GASSENSE-DATASET\n"
FORMAT_VERSION = 1
_MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class SamplingSpec:
    """Constrained mixture sampling.

    Partial pressures always sum to ``total_pressure``. If ``target_range``
    spans the whole ``[0, total_pressure]`` interval every species is drawn
    uniformly on the simplex (flat Dirichlet). Otherwise the target species
    is drawn uniformly on ``target_range`` first and the remaining species
    share the rest uniformly on their simplex.
    """

    species: tuple[str, ...]
    total_pressure: float = 2.0e4
    target: str = "CO2"
    target_range: tuple[float, float] = (0.0, 2.0e4)
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.target_range
        if self.target not in self.species:
            raise ConfigurationError(f"target species '{self.target}' not in {self.species}")
        if not (0 <= lo <= hi <= self.total_pressure):
            raise ConfigurationError(
                f"need 0 <= lo <= hi <= cap, got [{lo}, {hi}] with cap {self.total_pressure}"
            )
        if len(self.species) < 2:
            raise ConfigurationError("need at least two species")

    @property
    def target_index(self) -> int:
        return self.species.index(self.target)

    @property
    def full_simplex(self) -> bool:
        return self.target_range[0] == 0 and self.target_range[1] == self.total_pressure


def _simplex(rng, k):
    """k non-negative spacings summing to 1 (sorted-uniform construction)."""
    u = np.sort(rng.random(k - 1))
    return np.diff(np.concatenate(([0.0], u, [1.0])))


def sample_pressures(rng: np.random.Generator, spec: SamplingSpec) -> np.ndarray:
    """One pressure vector (Pa) in ``spec.species`` order."""
    k = len(spec.species)
    cap = spec.total_pressure
    if spec.full_simplex:
        return _simplex(rng, k) * cap
    lo, hi = spec.target_range
    target = lo if lo == hi else rng.uniform(lo, hi)
    rest = _simplex(rng, k - 1) * (cap - target)
    out = np.insert(rest, spec.target_index, target)
    return out


def _row_rng(seed, row, attempt):
    return np.random.default_rng(np.random.SeedSequence([seed, row, attempt]))


def _generate_rows(model, spec, start, stop):
    n_species = len(spec.species)
    pressures = np.empty((stop - start, n_species))
    freqs = None
    skipped = 0
    for i, row in enumerate(range(start, stop)):
        for attempt in range(_MAX_ATTEMPTS):
            p = sample_pressures(_row_rng(spec.seed, row, attempt), spec)
            f = model.response_array(p)
            if np.all(np.isfinite(f)):
                break
            skipped += 1
            log.warning("row %d attempt %d: unstable trap, resampling", row, attempt)
        else:
            raise InstabilityError(f"row {row}: no stable mixture in {_MAX_ATTEMPTS} attempts")
        if freqs is None:
            freqs = np.empty((stop - start, f.size))
        pressures[i] = p
        freqs[i] = f
    return pressures, freqs, skipped


@dataclass
class Dataset:
    pressures: np.ndarray  # (n, n_species) Pa
    frequencies: np.ndarray  # (n, 2 * n_spheres) rad/s, [omega_z..., omega_r...]
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return self.pressures.shape[0]

    def __eq__(self, other):
        return (isinstance(other, Dataset)
                and self.metadata == other.metadata
                and self.pressures.tobytes() == other.pressures.tobytes()
                and self.frequencies.tobytes() == other.frequencies.tobytes())

    @property
    def species(self) -> list[str]:
        return list(self.metadata["species"])

    def target(self, name: str | None = None) -> np.ndarray:
        name = name or self.metadata["target"]
        return self.pressures[:, self.species.index(name)]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.pressures[idx], self.frequencies[idx], dict(self.metadata))

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.pressures, "<f8").tobytes())
        h.update(np.ascontiguousarray(self.frequencies, "<f8").tobytes())
        return h.hexdigest()


def generate_dataset(spec: SamplingSpec, model, n: int, workers: int = 1,
                     chunk: int = 2000, config_hash: str = "", extra_meta: dict | None = None) -> Dataset:
    """Sample ``n`` mixtures and evaluate the sensor response for each.

    Row ``i`` draws from a generator seeded by ``(seed, i, attempt)``, so the
    result does not depend on ``workers`` or ``chunk``. Unstable mixtures are
    redrawn with the next attempt index and counted in the metadata.
    """
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    if tuple(model.species.names) != tuple(spec.species):
        raise ConfigurationError("sampling species order differs from the sensor model")
    bounds = [(s, min(s + chunk, n)) for s in range(0, n, chunk)]
    if workers <= 1:
        parts = [_generate_rows(model, spec, a, b) for a, b in bounds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_generate_rows, model, spec, a, b) for a, b in bounds]
            parts = [f.result() for f in futs]
    pressures = np.concatenate([p for p, _, _ in parts])
    freqs = np.concatenate([f for _, f, _ in parts])
    skipped = sum(s for _, _, s in parts)
    meta = {
        "version": FORMAT_VERSION,
        "species": list(spec.species),
        "spheres": list(model.cfg.sphere_names),
        "target": spec.target,
        "units": {"pressure": "Pa", "frequency": "rad/s"},
        "columns": [f"P_{s}" for s in spec.species]
        + [f"omega_z_{s}" for s in model.cfg.sphere_names]
        + [f"omega_r_{s}" for s in model.cfg.sphere_names],
        "seed": int(spec.seed),
        "config_hash": config_hash,
        "total_pressure": spec.total_pressure,
        "target_range": list(spec.target_range),
        "row_count": int(n),
        "skipped": int(skipped),
    }
    if extra_meta:
        meta.update(extra_meta)
    return Dataset(pressures, freqs, meta)


def write_dataset(ds: Dataset, path) -> None:
    meta = dict(ds.metadata)
    meta["version"] = FORMAT_VERSION
    meta["row_count"] = len(ds)
    meta["n_species"] = ds.pressures.shape[1]
    meta["n_frequencies"] = ds.frequencies.shape[1]
    header = MAGIC + json.dumps(meta, sort_keys=True).encode() + b"\n"
    rows = np.hstack([ds.pressures, ds.frequencies]).astype("<f8", copy=False)
    body = header + rows.tobytes()
    digest = hashlib.sha256(body).digest()
    try:
        with open(path, "wb") as fh:
            fh.write(body)
            fh.write(digest)
    except OSError as exc:
        raise FormatError(f"cannot write dataset {path}: {exc}") from exc


def read_dataset(path) -> Dataset:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read dataset {path}: {exc}") from exc
    if not raw.startswith(MAGIC):
        raise FormatError(f"{path}: not a dataset file (bad magic)")
    end = raw.find(b"\n", len(MAGIC))
    if end < 0:
        raise FormatError(f"{path}: truncated header")
    try:
        meta = json.loads(raw[len(MAGIC):end])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: corrupt header: {exc}") from exc
    if meta.get("version") != FORMAT_VERSION:
        raise FormatError(f"{path}: format version {meta.get('version')} != {FORMAT_VERSION}")
    n, ns, nf = meta["row_count"], meta["n_species"], meta["n_frequencies"]
    expected = end + 1 + n * (ns + nf) * 8 + 32
    if len(raw) != expected:
        raise FormatError(f"{path}: truncated or padded file ({len(raw)} bytes, expected {expected})")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise FormatError(f"{path}: checksum mismatch")
    rows = np.frombuffer(body[end + 1:], dtype="<f8").reshape(n, ns + nf).astype(float)
    for key in ("n_species", "n_frequencies"):
        meta.pop(key)
    return Dataset(rows[:, :ns].copy(), rows[:, ns:].copy(), meta)


def export_text(ds: Dataset, path) -> None:
    """Lossless comma-separated export (shortest round-trip float repr)."""
    cols = ds.metadata.get("columns") or (
        [f"p{i}" for i in range(ds.pressures.shape[1])]
        + [f"f{i}" for i in range(ds.frequencies.shape[1])]
    )
    with open(path, "w") as fh:
        fh.write(f"# config_hash={ds.metadata.get('config_hash', '')} seed={ds.metadata.get('seed', '')}\n")
        fh.write(",".join(cols) + "\n")
        for p, f in zip(ds.pressures, ds.frequencies):
            fh.write(",".join(repr(float(v)) for v in np.concatenate([p, f])) + "\n")


def split_indices(n: int, n_val: int, seed: int):
    """Disjoint (train, validation) index arrays, reproducible from ``seed``."""
    if not (0 < n_val < n):
        raise ConfigurationError(f"validation size {n_val} must be in (0, {n})")
    perm = np.random.default_rng(np.random.SeedSequence([seed, 1])).permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])
