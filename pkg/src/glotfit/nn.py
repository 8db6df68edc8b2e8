"""Feed-forward regressor mapping feature windows to LF parameters.

Plain-numpy implementation: two sigmoid hidden layers of 300 units, each
preceded by batch normalization of the affine output, and a linear
4-output head in the fixed order (tp, te, ta, ee). Training uses Adam on
the summed-square error averaged over the batch. Everything (init, batch
order, batch-norm statistics) is driven by one seed, so identical runs
produce bit-identical models.

Checkpoints use a small self-describing binary container (JSON header +
raw little-endian float64 buffers) so that equal models produce equal
bytes; zip-based containers embed timestamps and do not.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import Diverged, FormatError, InvalidParams

__all__ = [
    "MlpModel",
    "TrainConfig",
    "LFLabel",
    "init_model",
    "forward",
    "loss",
    "loss_and_grads",
    "train",
    "predict_lf",
    "clamp_outputs",
    "save_model",
    "load_model",
]

IN_DIM = 1000
HIDDEN = 300
OUT_DIM = 4
BN_EPS = 1e-5
BN_MOMENTUM = 0.1

_MAGIC = b"GFNN"
_VERSION = 1

# checkpoint buffer order; also the order used by the Adam state
_TENSORS = ("w1", "b1", "g1", "be1", "w2", "b2", "g2", "be2", "w3", "b3")
_STATS = ("rm1", "rv1", "rm2", "rv2")


@dataclass
class TrainConfig:
    lr: float = 0.01
    batch: int = 64
    epochs: int = 30
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise InvalidParams("lr must be positive")
        if self.batch < 1:
            raise InvalidParams("batch must be >= 1")
        if self.epochs < 1:
            raise InvalidParams("epochs must be >= 1")


@dataclass(frozen=True)
class LFLabel:
    """LF parameters as regression targets: times are fractions of T0."""

    tp: float
    te: float
    ta: float
    ee: float

    def __post_init__(self):
        if not (0.0 < self.tp < self.te < 1.0):
            raise InvalidParams(f"need 0 < tp < te < 1, got tp={self.tp} te={self.te}")
        if self.ta <= 0.0 or self.te + self.ta >= 1.0:
            raise InvalidParams(f"need ta > 0 and te+ta < 1, got ta={self.ta}")
        if self.ee <= 0.0:
            raise InvalidParams(f"ee must be positive, got {self.ee}")

    def as_array(self) -> np.ndarray:
        return np.array([self.tp, self.te, self.ta, self.ee])


@dataclass
class MlpModel:
    """Weights, batch-norm affine parameters, and running statistics."""

    w1: np.ndarray
    b1: np.ndarray
    g1: np.ndarray
    be1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    g2: np.ndarray
    be2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    rm1: np.ndarray = field(default=None)
    rv1: np.ndarray = field(default=None)
    rm2: np.ndarray = field(default=None)
    rv2: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.rm1 is None:
            self.rm1 = np.zeros(self.w1.shape[1])
        if self.rv1 is None:
            self.rv1 = np.ones(self.w1.shape[1])
        if self.rm2 is None:
            self.rm2 = np.zeros(self.w2.shape[1])
        if self.rv2 is None:
            self.rv2 = np.ones(self.w2.shape[1])
        if np.any(self.rv1 <= 0.0) or np.any(self.rv2 <= 0.0):
            raise InvalidParams("running variances must stay positive")

    def param_count(self) -> int:
        """Trainable parameters (weights, biases, batch-norm gamma/beta)."""
        return sum(getattr(self, t).size for t in _TENSORS)

    def copy(self) -> "MlpModel":
        return MlpModel(**{t: getattr(self, t).copy() for t in _TENSORS + _STATS})


def init_model(rng: np.random.Generator,
               in_dim: int = IN_DIM,
               hidden: int = HIDDEN,
               out_dim: int = OUT_DIM) -> MlpModel:
    """Uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases."""

    def xavier(n_in, n_out):
        lim = np.sqrt(6.0 / (n_in + n_out))
        return rng.uniform(-lim, lim, size=(n_in, n_out))

    return MlpModel(
        w1=xavier(in_dim, hidden), b1=np.zeros(hidden),
        g1=np.ones(hidden), be1=np.zeros(hidden),
        w2=xavier(hidden, hidden), b2=np.zeros(hidden),
        g2=np.ones(hidden), be2=np.zeros(hidden),
        w3=xavier(hidden, out_dim), b3=np.zeros(out_dim),
    )


def _as_matrix(x) -> np.ndarray:
    """Accept a FeatureWindow, a 1-D vector, or a (batch, dim) matrix."""
    if hasattr(x, "values"):
        x = x.values
    elif isinstance(x, (list, tuple)) and x and hasattr(x[0], "values"):
        x = np.stack([w.values for w in x])
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise InvalidParams(f"expected 1-D or 2-D input, got shape {x.shape}")
    return x


def _bn_forward(z, gamma, beta, rmean, rvar, mode):
    if mode == "train":
        m = z.mean(axis=0)
        v = z.var(axis=0)
    else:
        m, v = rmean, rvar
    inv = 1.0 / np.sqrt(v + BN_EPS)
    xhat = (z - m) * inv
    return gamma * xhat + beta, (xhat, inv, m, v)


def _forward_cached(model: MlpModel, x: np.ndarray, mode: str):
    z1 = x @ model.w1 + model.b1
    h1, bn1 = _bn_forward(z1, model.g1, model.be1, model.rm1, model.rv1, mode)
    a1 = expit(h1)
    z2 = a1 @ model.w2 + model.b2
    h2, bn2 = _bn_forward(z2, model.g2, model.be2, model.rm2, model.rv2, mode)
    a2 = expit(h2)
    y = a2 @ model.w3 + model.b3
    return y, (x, z1, bn1, a1, z2, bn2, a2)


def forward(model: MlpModel, x, mode: str = "eval") -> np.ndarray:
    """Batch forward pass; (batch, 4) output in the order (tp, te, ta, ee)."""
    if mode not in ("train", "eval"):
        raise InvalidParams(f"mode must be 'train' or 'eval', got {mode!r}")
    xm = _as_matrix(x)
    if xm.shape[1] != model.w1.shape[0]:
        raise InvalidParams(
            f"input dim {xm.shape[1]} does not match model ({model.w1.shape[0]})")
    y, _ = _forward_cached(model, xm, mode)
    return y


def loss(pred: np.ndarray, label: np.ndarray) -> float:
    """Squared error summed over the 4 outputs, averaged over the batch."""
    pred = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    label = np.atleast_2d(np.asarray(label, dtype=np.float64))
    if pred.shape != label.shape:
        raise InvalidParams(f"shape mismatch {pred.shape} vs {label.shape}")
    d = pred - label
    return float(np.sum(d * d) / pred.shape[0])


def _bn_backward(dh, gamma, cache):
    xhat, inv, _, _ = cache
    n = xhat.shape[0]
    dgamma = np.sum(dh * xhat, axis=0)
    dbeta = np.sum(dh, axis=0)
    dxhat = dh * gamma
    # combined form of the mean/variance chain terms
    dz = (inv / n) * (n * dxhat
                      - np.sum(dxhat, axis=0)
                      - xhat * np.sum(dxhat * xhat, axis=0))
    return dz, dgamma, dbeta


def loss_and_grads(model: MlpModel, x, labels) -> tuple:
    """Train-mode loss and analytic gradients for every trainable tensor."""
    xm = _as_matrix(x)
    ym = np.atleast_2d(np.asarray(labels, dtype=np.float64))
    n = xm.shape[0]
    y, (x0, z1, bn1, a1, z2, bn2, a2) = _forward_cached(model, xm, "train")
    d = y - ym
    lval = float(np.sum(d * d) / n)

    dy = 2.0 * d / n
    dw3 = a2.T @ dy
    db3 = dy.sum(axis=0)
    da2 = dy @ model.w3.T
    dh2 = da2 * a2 * (1.0 - a2)
    dz2, dg2, dbe2 = _bn_backward(dh2, model.g2, bn2)
    dw2 = a1.T @ dz2
    db2 = dz2.sum(axis=0)
    da1 = dz2 @ model.w2.T
    dh1 = da1 * a1 * (1.0 - a1)
    dz1, dg1, dbe1 = _bn_backward(dh1, model.g1, bn1)
    dw1 = x0.T @ dz1
    db1 = dz1.sum(axis=0)

    grads = {"w1": dw1, "b1": db1, "g1": dg1, "be1": dbe1,
             "w2": dw2, "b2": db2, "g2": dg2, "be2": dbe2,
             "w3": dw3, "b3": db3}
    return lval, grads


def _update_running(model: MlpModel, x: np.ndarray):
    """Refresh batch-norm running statistics from one train-mode pass."""
    z1 = x @ model.w1 + model.b1
    m1, v1 = z1.mean(axis=0), z1.var(axis=0)
    model.rm1 = (1 - BN_MOMENTUM) * model.rm1 + BN_MOMENTUM * m1
    model.rv1 = (1 - BN_MOMENTUM) * model.rv1 + BN_MOMENTUM * np.maximum(v1, 1e-30)
    h1 = model.g1 * (z1 - m1) / np.sqrt(v1 + BN_EPS) + model.be1
    z2 = expit(h1) @ model.w2 + model.b2
    m2, v2 = z2.mean(axis=0), z2.var(axis=0)
    model.rm2 = (1 - BN_MOMENTUM) * model.rm2 + BN_MOMENTUM * m2
    model.rv2 = (1 - BN_MOMENTUM) * model.rv2 + BN_MOMENTUM * np.maximum(v2, 1e-30)


def train(dataset, cfg: TrainConfig = None):
    """Adam training over (window, label) pairs.

    Returns (model, loss_curve); the curve holds one mean batch loss per
    epoch. Raises Diverged on a non-finite loss.
    """
    if cfg is None:
        cfg = TrainConfig()
    pairs = list(dataset)
    if not pairs:
        raise InvalidParams("dataset is empty")
    X = _as_matrix([p[0] for p in pairs])
    Y = np.stack([
        p[1].as_array() if isinstance(p[1], LFLabel)
        else np.asarray(p[1], dtype=np.float64)
        for p in pairs
    ])
    if not np.all(np.isfinite(Y)):
        raise InvalidParams("labels must be finite")

    rng = np.random.default_rng(cfg.seed)
    model = init_model(rng, in_dim=X.shape[1])
    mstate = {t: np.zeros_like(getattr(model, t)) for t in _TENSORS}
    vstate = {t: np.zeros_like(getattr(model, t)) for t in _TENSORS}
    step = 0
    curve = []
    n = X.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for lo in range(0, n, cfg.batch):
            idx = order[lo:lo + cfg.batch]
            lval, grads = loss_and_grads(model, X[idx], Y[idx])
            if not np.isfinite(lval):
                raise Diverged(f"loss became {lval} at step {step}")
            _update_running(model, X[idx])
            step += 1
            bc1 = 1.0 - cfg.beta1 ** step
            bc2 = 1.0 - cfg.beta2 ** step
            for t in _TENSORS:
                g = grads[t]
                mstate[t] = cfg.beta1 * mstate[t] + (1 - cfg.beta1) * g
                vstate[t] = cfg.beta2 * vstate[t] + (1 - cfg.beta2) * g * g
                mhat = mstate[t] / bc1
                vhat = vstate[t] / bc2
                getattr(model, t)[...] -= cfg.lr * mhat / (np.sqrt(vhat) + cfg.eps)
            epoch_losses.append(lval)
        curve.append(float(np.mean(epoch_losses)))
    return model, curve


def clamp_outputs(raw: np.ndarray) -> LFLabel:
    """Force a raw 4-vector into a valid LF parameter set."""
    tp, te, ta, ee = (float(v) for v in np.asarray(raw, dtype=np.float64))
    tp = min(max(tp, 0.1), 0.95)
    te = min(max(te, tp + 1e-3), max(0.98, tp + 1e-3))
    ta_hi = min(0.2, 0.9 * (1.0 - te))
    ta = min(max(ta, 0.005), max(ta_hi, 0.005))
    if te + ta >= 1.0:
        ta = 0.5 * (1.0 - te)
    ee = max(ee, 1e-6)
    return LFLabel(tp=tp, te=te, ta=ta, ee=ee)


def predict_lf(model: MlpModel, window):
    """Predict one window; returns (clamped LFLabel, raw 4-vector)."""
    raw = forward(model, window, mode="eval")[0]
    return clamp_outputs(raw), raw


def save_model(model: MlpModel, path, cfg: TrainConfig = None,
               meta: dict = None):
    """Write the checkpoint container; equal models give equal bytes.

    meta holds caller tags (e.g. which front-end fed the features); it
    must be JSON-serializable with sorted keys for byte determinism.
    """
    header = {
        "version": _VERSION,
        "tensors": {t: list(getattr(model, t).shape) for t in _TENSORS + _STATS},
        "order": list(_TENSORS + _STATS),
        "train_config": None if cfg is None else {
            "lr": cfg.lr, "batch": cfg.batch, "epochs": cfg.epochs,
            "beta1": cfg.beta1, "beta2": cfg.beta2, "eps": cfg.eps,
            "seed": cfg.seed,
        },
        "meta": meta,
    }
    hjson = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(hjson)))
        f.write(hjson)
        for t in _TENSORS + _STATS:
            arr = np.ascontiguousarray(getattr(model, t), dtype="<f8")
            f.write(arr.tobytes())


def load_model(path):
    """Read a checkpoint; returns (MlpModel, TrainConfig-or-None, meta)."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != _MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r}, expected {_MAGIC!r}", offset=0)
    if len(blob) < 8:
        raise FormatError("truncated header length", offset=4)
    (hlen,) = struct.unpack("<I", blob[4:8])
    if len(blob) < 8 + hlen:
        raise FormatError(f"header runs past end of file", offset=8)
    try:
        header = json.loads(blob[8:8 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable header: {exc}", offset=8) from exc
    if header.get("version") != _VERSION:
        raise FormatError(f"unsupported version {header.get('version')}", offset=8)
    pos = 8 + hlen
    arrays = {}
    for t in header["order"]:
        shape = tuple(header["tensors"][t])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if len(blob) < pos + nbytes:
            raise FormatError(f"buffer {t!r} truncated", offset=pos)
        arrays[t] = np.frombuffer(
            blob[pos:pos + nbytes], dtype="<f8").reshape(shape).copy()
        pos += nbytes
    if pos != len(blob):
        raise FormatError(f"{len(blob) - pos} trailing bytes", offset=pos)
    model = MlpModel(**arrays)
    tc = header.get("train_config")
    cfg = None if tc is None else TrainConfig(**tc)
    return model, cfg, header.get("meta")
