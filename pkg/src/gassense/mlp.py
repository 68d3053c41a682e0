"""Dense ReLU regressor trained with RMSprop, written directly on numpy.

Inputs are the 20 trap frequencies, min-max normalised per component over
the training set. The target is the partial pressure of one species in bar.
Every layer, including the scalar output, uses max(0, x).
"""
from __future__ import annotations

import hashlib
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, FormatError, NumericError

__all__ = [
    "Normalizer",
    "MlpModel",
    "RmsProp",
    "TrainSchedule",
    "TrainResult",
    "fit_normalizer",
    "train",
    "evaluate",
    "save_model",
    "load_model",
    "write_history",
    "write_scatter",
]

log = logging.getLogger(__name__)

MODEL_MAGIC = b"GASSENSE-MLP\n"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Normalizer:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        if self.lo.shape != self.hi.shape:
            raise ConfigurationError("normaliser bounds have different shapes")
        if not np.all(self.hi > self.lo):
            bad = np.flatnonzero(~(self.hi > self.lo)).tolist()
            raise NumericError(f"degenerate normaliser scale in components {bad}")

    def __call__(self, x):
        return (np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo)


def fit_normalizer(x) -> Normalizer:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise NumericError("need at least two rows to fit a normaliser")
    return Normalizer(x.min(axis=0), x.max(axis=0))


def _relu(x):
    return np.maximum(x, 0.0)


class MlpModel:
    """Weights ``W[l]`` have shape (fan_in, fan_out); biases ``b[l]`` (fan_out,)."""

    def __init__(self, weights, biases):
        if len(weights) != len(biases) or not weights:
            raise ConfigurationError("need one bias per weight matrix")
        for l, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ConfigurationError(f"layer {l}: bias shape {b.shape} vs weight {w.shape}")
            if l and w.shape[0] != weights[l - 1].shape[1]:
                raise ConfigurationError(f"layer {l}: input dim {w.shape[0]} != {weights[l - 1].shape[1]}")
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]

    @classmethod
    def init(cls, dims, seed: int) -> "MlpModel":
        """He-normal weights (variance 2/fan_in), zero biases."""
        rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
        ws, bs = [], []
        for a, b in zip(dims[:-1], dims[1:]):
            ws.append(rng.normal(0.0, np.sqrt(2.0 / a), size=(a, b)))
            bs.append(np.zeros(b))
        return cls(ws, bs)

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def params(self):
        return [*self.weights, *self.biases]

    def copy(self) -> "MlpModel":
        return MlpModel([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def _forward(self, x):
        acts = [np.atleast_2d(np.asarray(x, dtype=float))]
        pre = []
        for w, b in zip(self.weights, self.biases):
            z = acts[-1] @ w + b
            if not np.all(np.isfinite(z)):
                raise NumericError("non-finite pre-activation in forward pass")
            pre.append(z)
            acts.append(_relu(z))
        return pre, acts

    def forward(self, x):
        """Prediction(s) for normalised input(s); returns shape (n,) or a float."""
        x = np.asarray(x, dtype=float)
        out = self._forward(x)[1][-1][:, 0]
        return float(out[0]) if x.ndim == 1 else out

    __call__ = forward

    def loss_and_grads(self, x, y):
        """MSE over the batch and its gradient for every parameter (params order)."""
        pre, acts = self._forward(x)
        y = np.asarray(y, dtype=float).reshape(-1, 1)
        n = y.shape[0]
        if n == 0:
            raise ConfigurationError("empty batch")
        r = acts[-1] - y
        loss = float(np.mean(r**2))
        delta = (2.0 / n) * r * (pre[-1] > 0)
        gw = [None] * len(self.weights)
        gb = [None] * len(self.weights)
        for l in range(len(self.weights) - 1, -1, -1):
            gw[l] = acts[l].T @ delta
            gb[l] = delta.sum(axis=0)
            if l:
                delta = (delta @ self.weights[l].T) * (pre[l - 1] > 0)
        grads = [*gw, *gb]
        if not all(np.all(np.isfinite(g)) for g in grads):
            raise NumericError("non-finite gradient")
        return loss, grads

    def backward(self, x, y):
        return self.loss_and_grads(x, y)[1]


@dataclass
class RmsProp:
    """s <- rho s + (1 - rho) g^2;  p <- p - lr g / sqrt(s + eps)."""

    rho: float = 0.9
    eps: float = 1e-8
    state: list = field(default_factory=list)

    def step(self, model: MlpModel, grads, lr: float) -> None:
        params = model.params
        if not self.state:
            self.state = [np.zeros_like(p) for p in params]
        for p, g, s in zip(params, grads, self.state):
            s *= self.rho
            s += (1.0 - self.rho) * g * g
            p -= lr * g / np.sqrt(s + self.eps)


@dataclass(frozen=True)
class TrainSchedule:
    stages: tuple[tuple[float, int], ...] = ((1e-7, 500), (1e-8, 500), (1e-9, 500), (1e-10, 500))
    batch_size: int = 100

    def __post_init__(self):
        if not self.stages:
            raise ConfigurationError("empty learning-rate schedule")
        rates = [float(r) for r, _ in self.stages]
        if any(r <= 0 for r in rates) or any(b > a for a, b in zip(rates, rates[1:])):
            raise ConfigurationError(f"learning rates must be positive and non-increasing: {rates}")
        if any(int(e) < 1 for _, e in self.stages):
            raise ConfigurationError("every stage needs at least one epoch")
        if self.batch_size < 1:
            raise ConfigurationError("batch size must be >= 1")

    @property
    def epochs(self) -> int:
        return sum(int(e) for _, e in self.stages)

    def rates(self):
        for lr, e in self.stages:
            for _ in range(int(e)):
                yield float(lr)


@dataclass
class TrainResult:
    model: MlpModel
    normalizer: Normalizer
    history: np.ndarray  # (epochs, 3): epoch, train MSE, validation MSE (bar^2)
    aborted: bool = False
    message: str = ""


def _mse(model, x, y, chunk=20000):
    tot = 0.0
    for i in range(0, len(y), chunk):
        tot += float(np.sum((model.forward(x[i:i + chunk]) - y[i:i + chunk]) ** 2))
    return tot / len(y)


def train(x_train, y_train, x_val, y_val, hidden, schedule: TrainSchedule, seed: int,
          progress=None) -> TrainResult:
    """Train a fresh net with ``hidden`` = list of hidden-layer widths.

    ``x_*`` are raw frequencies, ``y_*`` targets in bar. The normaliser is
    fitted on ``x_train`` only. Divergence stops training and returns the
    history so far with ``aborted`` set.
    """
    x_train = np.asarray(x_train, dtype=float)
    y_train = np.asarray(y_train, dtype=float)
    norm = fit_normalizer(x_train)
    xt, xv = norm(x_train), norm(x_val)
    yv = np.asarray(y_val, dtype=float)
    model = MlpModel.init([xt.shape[1], *hidden, 1], seed)
    # Start the output unit at the mean target so it is not dead at init.
    z = (model._forward(xt)[1][-2] @ model.weights[-1])[:, 0]
    model.biases[-1][:] = np.mean(y_train) - np.mean(z)
    opt = RmsProp()
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    n = len(y_train)
    bs = schedule.batch_size
    history = []
    for epoch, lr in enumerate(schedule.rates()):
        perm = rng.permutation(n)
        try:
            # overflow shows up as a non-finite loss or NumericError below
            with np.errstate(over="ignore", invalid="ignore"):
                for i in range(0, n, bs):
                    idx = perm[i:i + bs]
                    _, grads = model.loss_and_grads(xt[idx], y_train[idx])
                    opt.step(model, grads, lr)
                tr, va = _mse(model, xt, y_train), _mse(model, xv, yv)
        except NumericError as exc:
            return TrainResult(model, norm, np.array(history).reshape(-1, 3), True,
                               f"diverged in epoch {epoch}: {exc}")
        if not (np.isfinite(tr) and np.isfinite(va)):
            return TrainResult(model, norm, np.array(history).reshape(-1, 3), True,
                               f"non-finite loss in epoch {epoch}")
        history.append((epoch, tr, va))
        if progress is not None:
            progress(epoch, tr, va)
    return TrainResult(model, norm, np.array(history, dtype=float).reshape(-1, 3))


def evaluate(model: MlpModel, norm: Normalizer, x, y) -> dict:
    """MSE (bar^2), RMSE (bar) and (true, predicted) scatter pairs."""
    y = np.asarray(y, dtype=float)
    pred = model.forward(norm(x))
    pred = np.atleast_1d(pred)
    mse = float(np.mean((pred - y) ** 2))
    return {"mse": mse, "rmse": float(np.sqrt(mse)), "n": int(len(y)),
            "scatter": np.column_stack([y, pred])}


def save_model(model: MlpModel, norm: Normalizer, path, meta: dict | None = None) -> None:
    header = dict(meta or {})
    header.update(version=MODEL_VERSION, dims=model.dims)
    blocks = [norm.lo, norm.hi, *model.params]
    payload = b"".join(np.ascontiguousarray(a, "<f8").tobytes() for a in blocks)
    body = MODEL_MAGIC + json.dumps(header, sort_keys=True).encode() + b"\n" + payload
    try:
        Path(path).write_bytes(body + hashlib.sha256(body).digest())
    except OSError as exc:
        raise FormatError(f"cannot write model {path}: {exc}") from exc


def load_model(path, species=None):
    """Returns (model, normaliser, header). Warns if ``species`` order differs."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read model {path}: {exc}") from exc
    if not raw.startswith(MODEL_MAGIC):
        raise FormatError(f"{path}: not a model file")
    end = raw.find(b"\n", len(MODEL_MAGIC))
    if end < 0:
        raise FormatError(f"{path}: truncated header")
    try:
        header = json.loads(raw[len(MODEL_MAGIC):end])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: corrupt header: {exc}") from exc
    if header.get("version") != MODEL_VERSION:
        raise FormatError(f"{path}: model version {header.get('version')} != {MODEL_VERSION}")
    dims = header["dims"]
    shapes = [(dims[0],), (dims[0],)]
    shapes += [(a, b) for a, b in zip(dims[:-1], dims[1:])]
    shapes += [(b,) for b in dims[1:]]
    size = sum(int(np.prod(s)) for s in shapes)
    if len(raw) != end + 1 + 8 * size + 32:
        raise FormatError(f"{path}: truncated or padded; size does not match dims {dims}")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise FormatError(f"{path}: checksum mismatch")
    flat = np.frombuffer(body[end + 1:], dtype="<f8").astype(float)
    arrays, pos = [], 0
    for s in shapes:
        k = int(np.prod(s))
        arrays.append(flat[pos:pos + k].reshape(s).copy())
        pos += k
    nl = len(dims) - 1
    norm = Normalizer(arrays[0], arrays[1])
    model = MlpModel(arrays[2:2 + nl], arrays[2 + nl:])
    if species is not None and header.get("species") is not None \
            and list(species) != list(header["species"]):
        warnings.warn(f"model species order {header['species']} differs from {list(species)}",
                      stacklevel=2)
    return model, norm, header


def write_history(history, path, config_hash="") -> None:
    np.savetxt(path, np.asarray(history).reshape(-1, 3), delimiter=",",
               header=f"config_hash={config_hash}\nepoch,train_mse_bar2,val_mse_bar2",
               fmt=["%d", "%.17g", "%.17g"])


def write_scatter(pairs, path, config_hash="") -> None:
    np.savetxt(path, np.asarray(pairs).reshape(-1, 2), delimiter=",",
               header=f"config_hash={config_hash}\ntrue_bar,predicted_bar", fmt="%.17g")
