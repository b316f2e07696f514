"""From-scratch LSTM forecaster: model, training, gradients, snapshots.

One or two LSTM layers (standard sigmoid-gated cell; the configurable
activation drives the candidate cell and the hidden output) feed a dense
head that predicts the next day's 8 normalized features. Training is
minibatch backprop-through-time under RMSE loss with Adam, fully
deterministic for a fixed seed. Inverted dropout is applied to each
LSTM layer's output sequence during training only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import NonFiniteLoss, NoSamples, ShapeMismatch
from .features import N_FEATURES, Normalizer

ACTIVATION_IDS = {"tanh": kernels.ACT_TANH, "relu": kernels.ACT_RELU}
VALID_WIDTHS = (8, 14)

GRID_UNITS1 = (16, 32, 64, 128, 256)
GRID_UNITS2 = (0, 16, 32, 64, 128, 256)
GRID_ACTIVATIONS = ("tanh", "relu")
GRID_DROPOUTS = (0.0, 0.04, 0.1, 0.15)
GRID_EPOCHS = (5, 10, 15, 25, 50, 75, 100)

SNAPSHOT_FORMAT = "cachescope-model"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class HyperParams:
    units1: int = 128
    units2: int = 0
    act1: str = "tanh"
    act2: str = "tanh"
    dropout: float = 0.0
    epochs: int = 50
    window_len: int = 7
    learning_rate: float = 1e-3
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if self.act1 not in ACTIVATION_IDS or self.act2 not in ACTIVATION_IDS:
            raise ValueError("activations must be tanh or relu")
        if self.window_len < 1:
            raise ValueError("window_len must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.units1 < 1 or self.units2 < 0 or self.epochs < 0 or self.batch_size < 1:
            raise ValueError("bad hyperparameter value")

    def validate_on_grid(self) -> None:
        """Check the grid-searched fields against their allowed values."""
        ok = (
            self.units1 in GRID_UNITS1
            and self.units2 in GRID_UNITS2
            and self.act1 in GRID_ACTIVATIONS
            and self.act2 in GRID_ACTIVATIONS
            and self.dropout in GRID_DROPOUTS
            and self.epochs in GRID_EPOCHS
        )
        if not ok:
            raise ValueError(f"hyperparameters outside the search grid: {self}")

    def to_dict(self) -> dict:
        return {
            "units1": self.units1,
            "units2": self.units2,
            "act1": self.act1,
            "act2": self.act2,
            "dropout": self.dropout,
            "epochs": self.epochs,
            "window_len": self.window_len,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "HyperParams":
        return cls(**obj)


@dataclass
class LayerWeights:
    """One LSTM layer's parameters, gates packed [input|forget|candidate|output]."""

    wx: np.ndarray  # (input_dim, 4*units)
    wh: np.ndarray  # (units, 4*units)
    b: np.ndarray  # (4*units,)

    @property
    def units(self) -> int:
        return self.wh.shape[0]


@dataclass
class ForecastModel:
    """Trained forecaster: LSTM stack, dense head, normalizer, hyperparams."""

    layers: list[LayerWeights]
    activations: list[str]
    dense_w: np.ndarray  # (units_last, 8)
    dense_b: np.ndarray  # (8,)
    normalizer: Normalizer
    hyperparams: HyperParams

    @property
    def input_width(self) -> int:
        return self.layers[0].wx.shape[0]

    @property
    def use_dow(self) -> bool:
        return self.input_width == 14

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        """All weight arrays in a fixed order, named for snapshots."""
        out = []
        for li, layer in enumerate(self.layers, start=1):
            out.append((f"lstm{li}.wx", layer.wx))
            out.append((f"lstm{li}.wh", layer.wh))
            out.append((f"lstm{li}.b", layer.b))
        out.append(("dense.w", self.dense_w))
        out.append(("dense.b", self.dense_b))
        return out

    def n_parameters(self) -> int:
        return sum(int(arr.size) for _, arr in self.parameters())

    def predict(self, window: np.ndarray) -> np.ndarray:
        """Normalized next-day features for one (L, width) window."""
        return self.predict_batch(window[None, :, :])[0]

    def predict_batch(self, x: np.ndarray) -> np.ndarray:
        """Normalized predictions for (B, L, width) windows; no dropout."""
        pred, _ = _forward(self, x, masks=None)
        return pred


def init_model(
    hp: HyperParams,
    input_width: int,
    rng: np.random.Generator,
    normalizer: Optional[Normalizer] = None,
) -> ForecastModel:
    """Fresh model with uniform(-1/sqrt(fan_in), +) weights and zero biases."""
    if input_width not in VALID_WIDTHS:
        raise ShapeMismatch(f"input width must be one of {VALID_WIDTHS}, got {input_width}")
    layers = []
    activations = []
    dims = [(input_width, hp.units1, hp.act1)]
    if hp.units2 > 0:
        dims.append((hp.units1, hp.units2, hp.act2))
    for d_in, units, act in dims:
        kx = 1.0 / np.sqrt(d_in)
        kh = 1.0 / np.sqrt(units)
        layers.append(
            LayerWeights(
                wx=rng.uniform(-kx, kx, size=(d_in, 4 * units)),
                wh=rng.uniform(-kh, kh, size=(units, 4 * units)),
                b=np.zeros(4 * units),
            )
        )
        activations.append(act)
    kd = 1.0 / np.sqrt(dims[-1][1])
    dense_w = rng.uniform(-kd, kd, size=(dims[-1][1], N_FEATURES))
    dense_b = np.zeros(N_FEATURES)
    return ForecastModel(
        layers=layers,
        activations=activations,
        dense_w=dense_w,
        dense_b=dense_b,
        normalizer=normalizer or Normalizer.identity(N_FEATURES),
        hyperparams=hp,
    )


def _forward(model: ForecastModel, x: np.ndarray, masks: Optional[list]) -> tuple:
    """Batched forward pass; returns (pred (B, 8), caches for backward)."""
    if x.ndim != 3 or x.shape[2] != model.input_width:
        raise ShapeMismatch(
            f"input shape {x.shape} incompatible with model width {model.input_width}"
        )
    seq = np.ascontiguousarray(np.swapaxes(x, 0, 1))  # (L, B, width)
    caches = []
    for li, layer in enumerate(model.layers):
        act_id = ACTIVATION_IDS[model.activations[li]]
        h_seq, i_s, f_s, g_s, o_s, c_s = kernels.lstm_forward(
            seq, layer.wx, layer.wh, layer.b, act_id
        )
        out_seq = h_seq
        if masks is not None and masks[li] is not None:
            out_seq = h_seq * masks[li]
        caches.append((seq, h_seq, i_s, f_s, g_s, o_s, c_s, out_seq))
        seq = np.ascontiguousarray(out_seq)
    last_h = seq[-1]
    pred = np.dot(last_h, model.dense_w) + model.dense_b
    return pred, caches


def rmse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Root mean squared error over every element, equal feature weights."""
    diff = pred - target
    return float(np.sqrt(np.mean(diff * diff)))


def _loss_and_grads(
    model: ForecastModel, x: np.ndarray, y: np.ndarray, masks: Optional[list] = None
) -> tuple[float, list[np.ndarray]]:
    """RMSE loss and gradients for every parameter, in parameters() order."""
    pred, caches = _forward(model, x, masks)
    loss = rmse_loss(pred, y)
    if loss > 0.0:
        dpred = (pred - y) / (pred.size * loss)
    else:
        dpred = np.zeros_like(pred)  # loss floor: RMSE gradient vanishes with the numerator

    last_out = caches[-1][7]
    d_dense_w = np.dot(last_out[-1].T, dpred)
    d_dense_b = dpred.sum(axis=0)
    d_last = np.dot(dpred, model.dense_w.T)

    layer_grads: list = [None] * len(model.layers)
    d_out_seq = None  # gradient w.r.t. the (masked) output sequence of the layer below
    for li in range(len(model.layers) - 1, -1, -1):
        seq, h_seq, i_s, f_s, g_s, o_s, c_s, _ = caches[li]
        dh_seq = np.zeros_like(h_seq)
        if li == len(model.layers) - 1:
            dh_seq[-1] += d_last
        if d_out_seq is not None:
            dh_seq += d_out_seq
        if masks is not None and masks[li] is not None:
            dh_seq = dh_seq * masks[li]
        act_id = ACTIVATION_IDS[model.activations[li]]
        dx_seq, dwx, dwh, db = kernels.lstm_backward(
            seq, model.layers[li].wx, model.layers[li].wh,
            i_s, f_s, g_s, o_s, c_s, h_seq, np.ascontiguousarray(dh_seq), act_id,
        )
        layer_grads[li] = (dwx, dwh, db)
        d_out_seq = dx_seq

    grads: list[np.ndarray] = []
    for dwx, dwh, db in layer_grads:
        grads.extend([dwx, dwh, db])
    grads.extend([d_dense_w, d_dense_b])
    return loss, grads


def _dropout_masks(
    model: ForecastModel, shape_lb: tuple[int, int], rate: float, rng: np.random.Generator
) -> Optional[list]:
    if rate <= 0.0:
        return None
    L, B = shape_lb
    masks = []
    for layer in model.layers:
        keep = rng.random((L, B, layer.units)) >= rate
        masks.append(keep.astype(np.float64) / (1.0 - rate))
    return masks


def train_model(
    x: np.ndarray,
    y: np.ndarray,
    hp: HyperParams,
    normalizer: Optional[Normalizer] = None,
) -> ForecastModel:
    """Train on windowed samples x (n, L, width), y (n, 8).

    Deterministic for a fixed hp.seed: weight init, epoch shuffles, and
    dropout masks all come from one seeded generator. Returns the
    final-epoch weights.
    """
    if len(x) == 0:
        raise NoSamples("training needs at least one sample")
    if x.ndim != 3 or y.ndim != 2 or y.shape[1] != N_FEATURES or len(x) != len(y):
        raise ShapeMismatch(f"bad sample shapes x{x.shape} y{y.shape}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rng = np.random.default_rng(hp.seed)
    model = init_model(hp, x.shape[2], rng, normalizer)
    opt = AdamState.for_model(model, hp.learning_rate)
    n = len(x)
    for _ in range(hp.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hp.batch_size):
            idx = order[start : start + hp.batch_size]
            xb = np.ascontiguousarray(x[idx])
            yb = y[idx]
            masks = _dropout_masks(model, (xb.shape[1], xb.shape[0]), hp.dropout, rng)
            loss, grads = _loss_and_grads(model, xb, yb, masks)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss diverged to {loss}")
            opt.step(model, grads)
    return model


@dataclass
class AdamState:
    """Adam optimizer state over a model's parameter list."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_model(cls, model: ForecastModel, lr: float) -> "AdamState":
        state = cls(lr=lr)
        for _, arr in model.parameters():
            state.m.append(np.zeros_like(arr))
            state.v.append(np.zeros_like(arr))
        return state

    def step(self, model: ForecastModel, grads: Sequence[np.ndarray]) -> None:
        if self.lr == 0.0:
            return
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for (name, arr), g, m, v in zip(model.parameters(), grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            arr -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def gradient_check(
    model: ForecastModel, x: np.ndarray, y: np.ndarray, step: float = 1e-5
) -> float:
    """Max relative error of analytic BPTT gradients vs central differences.

    Intended for small models (few units, few steps); perturbs every
    scalar weight. Dropout is off: the checked loss is the plain
    RMSE of the deterministic forward pass.
    """
    _, grads = _loss_and_grads(model, x, y)
    worst = 0.0
    for (_, arr), g in zip(model.parameters(), grads):
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            hi, _ = _loss_and_grads(model, x, y)
            flat[j] = orig - step
            lo, _ = _loss_and_grads(model, x, y)
            flat[j] = orig
            numeric = (hi - lo) / (2.0 * step)
            denom = max(abs(gflat[j]), abs(numeric), 1e-6)
            worst = max(worst, abs(gflat[j] - numeric) / denom)
    return worst


def save_model(model: ForecastModel, path: Path | str) -> None:
    """Write a JSON snapshot: hyperparams, normalizer, and flat weights."""
    obj = {
        "format": SNAPSHOT_FORMAT,
        "format_version": SNAPSHOT_VERSION,
        "hyperparams": model.hyperparams.to_dict(),
        "activations": list(model.activations),
        "input_width": model.input_width,
        "normalizer": {
            "mean": model.normalizer.mean.tolist(),
            "std": model.normalizer.std.tolist(),
        },
        "weights": [
            {"name": name, "shape": list(arr.shape), "data": arr.reshape(-1).tolist()}
            for name, arr in model.parameters()
        ],
    }
    with Path(path).open("w", encoding="utf-8") as f:
        json.dump(obj, f)
        f.write("\n")


def load_model(path: Path | str) -> ForecastModel:
    """Rebuild a model from its JSON snapshot."""
    with Path(path).open("r", encoding="utf-8") as f:
        obj = json.load(f)
    if obj.get("format") != SNAPSHOT_FORMAT:
        raise ShapeMismatch(f"{path}: not a model snapshot")
    if obj.get("format_version") != SNAPSHOT_VERSION:
        raise ShapeMismatch(f"{path}: unsupported snapshot version {obj.get('format_version')}")
    hp = HyperParams.from_dict(obj["hyperparams"])
    normalizer = Normalizer(
        mean=np.array(obj["normalizer"]["mean"], dtype=np.float64),
        std=np.array(obj["normalizer"]["std"], dtype=np.float64),
    )
    weights = {
        w["name"]: np.array(w["data"], dtype=np.float64).reshape(w["shape"])
        for w in obj["weights"]
    }
    layers = []
    li = 1
    while f"lstm{li}.wx" in weights:
        layers.append(
            LayerWeights(
                wx=weights[f"lstm{li}.wx"],
                wh=weights[f"lstm{li}.wh"],
                b=weights[f"lstm{li}.b"],
            )
        )
        li += 1
    model = ForecastModel(
        layers=layers,
        activations=list(obj["activations"]),
        dense_w=weights["dense.w"],
        dense_b=weights["dense.b"],
        normalizer=normalizer,
        hyperparams=hp,
    )
    _validate_shapes(model)
    return model


def _validate_shapes(model: ForecastModel) -> None:
    width = model.input_width
    if width not in VALID_WIDTHS:
        raise ShapeMismatch(f"input width {width} not in {VALID_WIDTHS}")
    prev = width
    for li, layer in enumerate(model.layers, start=1):
        units = layer.units
        if layer.wx.shape != (prev, 4 * units) or layer.b.shape != (4 * units,):
            raise ShapeMismatch(f"layer {li} weight shapes inconsistent")
        prev = units
    if model.dense_w.shape != (prev, N_FEATURES) or model.dense_b.shape != (N_FEATURES,):
        raise ShapeMismatch("dense head shapes inconsistent")


def derive_seed(base_seed: int, index: int) -> int:
    """Per-combination training seed for parallel-safe grid search."""
    return base_seed ^ index
