"""
Causal dilated temporal convolutional network.

One stack of residual blocks, one block per dilation. Each block applies two
causal convolutions with ReLU after each, adds the input (through a 1x1
projection when the channel count changes) and applies a final ReLU. A linear
head reads the last timestep and a sigmoid turns it into a score.

Parameters live in a flat dict of numpy arrays:

    b{i}.conv1.w  (C_out, C_in, k)     b{i}.conv1.b  (C_out,)
    b{i}.conv2.w  (C_out, C_out, k)    b{i}.conv2.b  (C_out,)
    b{i}.proj.w   (C_out, C_in, 1)     b{i}.proj.b   (C_out,)   only when C_in != C_out
    head.w        (C_out,)             head.b        (1,)

Tap k-1 of every kernel is the current timestep; tap j looks back
(k-1-j)*d steps. Gradients are derived by hand for exactly this layout.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..core.types import Task, Window
from ..data.ingestion import FeatureMask
from ..errors import EmptySplit, ShapeMismatch
from .optim import AdamState, adam_step

logger = logging.getLogger(__name__)

Params = Dict[str, np.ndarray]


class TcnConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kernel_size: int = Field(default=3, ge=2)
    dilations: Tuple[int, ...] = (1, 2, 4)
    channels: int = Field(default=32, ge=1)
    convs_per_block: int = Field(default=2, ge=2, le=2)
    dropout: float = Field(default=0.0, ge=0.0, lt=1.0)
    epochs: int = Field(default=30, ge=1)
    batch_size: int = Field(default=32, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)
    standardize: bool = True
    task: Task = Task.CLASSIFY
    seed: int = 0

    @field_validator("dilations")
    @classmethod
    def _increasing(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if not value:
            raise ValueError("dilations must be non-empty")
        if any(d < 1 for d in value):
            raise ValueError("dilations must be >= 1")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("dilations must be strictly increasing")
        return value


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-channel z-score fitted on training windows; a zero std scales by 1."""

    mean: np.ndarray
    std: np.ndarray

    def apply(self, windows: np.ndarray) -> np.ndarray:
        return (np.asarray(windows, dtype=np.float64) - self.mean) / self.std

    def to_dict(self) -> Dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def identity(cls, n_channels: int) -> "Standardizer":
        return cls(mean=np.zeros(n_channels), std=np.ones(n_channels))


def fit_standardizer(windows: np.ndarray) -> Standardizer:
    flat = np.asarray(windows, dtype=np.float64).reshape(-1, windows.shape[-1])
    std = flat.std(axis=0)
    return Standardizer(mean=flat.mean(axis=0), std=np.where(std == 0, 1.0, std))


@dataclass(frozen=True, eq=False)
class TcnModel:
    config: TcnConfig
    params: Params
    standardizer: Standardizer
    n_inputs: int
    feature_mask: Optional[FeatureMask] = None


@dataclass
class TrainReport:
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    selected_epoch: int = 0
    params: Params = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "selected_epoch": self.selected_epoch,
        }


def receptive_field(kernel_size: int, dilations: Sequence[int], convs_per_block: int = 2) -> int:
    return 1 + convs_per_block * (kernel_size - 1) * sum(dilations)


def expected_shapes(config: TcnConfig, n_inputs: int) -> Dict[str, Tuple[int, ...]]:
    shapes: Dict[str, Tuple[int, ...]] = {}
    k, c = config.kernel_size, config.channels
    c_in = n_inputs
    for i in range(len(config.dilations)):
        shapes[f"b{i}.conv1.w"] = (c, c_in, k)
        shapes[f"b{i}.conv1.b"] = (c,)
        shapes[f"b{i}.conv2.w"] = (c, c, k)
        shapes[f"b{i}.conv2.b"] = (c,)
        if c_in != c:
            shapes[f"b{i}.proj.w"] = (c, c_in, 1)
            shapes[f"b{i}.proj.b"] = (c,)
        c_in = c
    shapes["head.w"] = (c,)
    shapes["head.b"] = (1,)
    return shapes


def init_params(config: TcnConfig, n_inputs: int, rng: np.random.Generator) -> Params:
    """Uniform fan-in init, bound sqrt(1/(C_in*k)), for weights and biases alike."""
    params: Params = {}
    shapes = expected_shapes(config, n_inputs)
    for name, shape in shapes.items():
        if name.endswith(".w"):
            fan_in = int(np.prod(shape[1:])) if len(shape) > 1 else shape[0]
        elif name == "head.b":
            fan_in = config.channels
        else:
            fan_in = int(np.prod(shapes[name[:-2] + ".w"][1:]))
        bound = np.sqrt(1.0 / fan_in)
        params[name] = rng.uniform(-bound, bound, size=shape)
    return params


def _as_batch(x: np.ndarray) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[None], True
    if x.ndim != 3:
        raise ShapeMismatch(f"Expected T x C or B x T x C input, got shape {x.shape}")
    return x, False


def _im2col(x: np.ndarray, k: int, dilation: int) -> np.ndarray:
    """(B, T, C) -> (B, T, k, C) where [..., j, :] is x shifted back (k-1-j)*d steps."""
    batch, steps, channels = x.shape
    pad = (k - 1) * dilation
    padded = np.concatenate([np.zeros((batch, pad, channels)), x], axis=1)
    return np.stack([padded[:, j * dilation : j * dilation + steps, :] for j in range(k)], axis=2)


def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, dilation: int):
    c_out, c_in, k = w.shape
    if x.shape[-1] != c_in or b.shape != (c_out,):
        raise ShapeMismatch(
            f"Conv expects {c_in} input channels and bias ({c_out},), "
            f"got input {x.shape} bias {b.shape}"
        )
    batch, steps, _ = x.shape
    cols = _im2col(x, k, dilation).reshape(batch * steps, k * c_in)
    w_mat = w.transpose(2, 1, 0).reshape(k * c_in, c_out)
    out = (cols @ w_mat).reshape(batch, steps, c_out) + b
    return out, cols


def _conv_backward(
    dout: np.ndarray, cols: np.ndarray, w: np.ndarray, dilation: int, need_dx: bool = True
):
    c_out, c_in, k = w.shape
    batch, steps, _ = dout.shape
    dout2d = dout.reshape(batch * steps, c_out)
    dw = (cols.T @ dout2d).reshape(k, c_in, c_out).transpose(2, 1, 0)
    db = dout2d.sum(axis=0)
    if not need_dx:
        return None, dw, db
    w_mat = w.transpose(2, 1, 0).reshape(k * c_in, c_out)
    dcols = (dout2d @ w_mat.T).reshape(batch, steps, k, c_in)
    pad = (k - 1) * dilation
    dpadded = np.zeros((batch, steps + pad, c_in))
    for j in range(k):
        dpadded[:, j * dilation : j * dilation + steps, :] += dcols[:, :, j, :]
    return dpadded[:, pad:, :], dw, db


def causal_conv1d(x: np.ndarray, w: np.ndarray, b: np.ndarray, dilation: int = 1) -> np.ndarray:
    """
    Dilated causal convolution with zero left padding.

    out[t, o] = b[o] + sum over c, j of w[o, c, j] * x[t - (k-1-j) * dilation, c],
    where x before time 0 counts as zero, so out[t] never sees x after t.

    Args:
        x: T x C_in sequence, or B x T x C_in batch.
        w: Kernel of shape C_out x C_in x k; tap k-1 multiplies the current step.
        b: Bias of shape (C_out,).
        dilation: Spacing between taps, at least 1.

    Returns:
        T x C_out (or B x T x C_out), the same length as the input.

    Raises:
        ShapeMismatch: bad dilation, kernel rank, channel count or bias shape.
    """
    if dilation < 1:
        raise ShapeMismatch(f"dilation must be >= 1, got {dilation}")
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 3:
        raise ShapeMismatch(f"Kernel must be C_out x C_in x k, got shape {w.shape}")
    batch, squeeze = _as_batch(x)
    out, _ = _conv_forward(batch, w, np.asarray(b, dtype=np.float64), dilation)
    return out[0] if squeeze else out


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _block_forward(x, params, i, dilation, dropout=0.0, rng=None):
    cache = {"x": x}
    pre1, cache["cols1"] = _conv_forward(
        x, params[f"b{i}.conv1.w"], params[f"b{i}.conv1.b"], dilation
    )
    h1 = _relu(pre1)
    if dropout > 0 and rng is not None:
        cache["drop1"] = (rng.random(h1.shape) >= dropout) / (1.0 - dropout)
        h1 = h1 * cache["drop1"]
    pre2, cache["cols2"] = _conv_forward(
        h1, params[f"b{i}.conv2.w"], params[f"b{i}.conv2.b"], dilation
    )
    h2 = _relu(pre2)
    if dropout > 0 and rng is not None:
        cache["drop2"] = (rng.random(h2.shape) >= dropout) / (1.0 - dropout)
        h2 = h2 * cache["drop2"]
    if f"b{i}.proj.w" in params:
        skip, cache["cols_proj"] = _conv_forward(
            x, params[f"b{i}.proj.w"], params[f"b{i}.proj.b"], 1
        )
    else:
        if x.shape[-1] != h2.shape[-1]:
            raise ShapeMismatch(
                f"Block {i} needs a projection: {x.shape[-1]} -> {h2.shape[-1]} channels"
            )
        skip = x
    total = h2 + skip
    cache.update(pre1=pre1, pre2=pre2, total=total)
    return _relu(total), cache


def _block_backward(dout, cache, params, i, dilation, grads, need_dx):
    dtotal = dout * (cache["total"] > 0)
    dh2 = dtotal * cache["drop2"] if "drop2" in cache else dtotal
    dpre2 = dh2 * (cache["pre2"] > 0)
    dh1, grads[f"b{i}.conv2.w"], grads[f"b{i}.conv2.b"] = _conv_backward(
        dpre2, cache["cols2"], params[f"b{i}.conv2.w"], dilation
    )
    if "drop1" in cache:
        dh1 = dh1 * cache["drop1"]
    dpre1 = dh1 * (cache["pre1"] > 0)
    dx, grads[f"b{i}.conv1.w"], grads[f"b{i}.conv1.b"] = _conv_backward(
        dpre1, cache["cols1"], params[f"b{i}.conv1.w"], dilation, need_dx
    )
    if "cols_proj" in cache:
        dskip, grads[f"b{i}.proj.w"], grads[f"b{i}.proj.b"] = _conv_backward(
            dtotal, cache["cols_proj"], params[f"b{i}.proj.w"], 1, need_dx
        )
    else:
        dskip = dtotal
    return dx + dskip if need_dx else None


def residual_block(x: np.ndarray, params: Params, index: int, dilation: int) -> np.ndarray:
    """relu(conv2(relu(conv1(x))) + skip(x)) for block `index`; skip is a 1x1 projection or x."""
    batch, squeeze = _as_batch(x)
    out, _ = _block_forward(batch, params, index, dilation)
    return out[0] if squeeze else out


def _forward(params: Params, x: np.ndarray, config: TcnConfig, rng=None):
    caches = []
    h = x
    dropout = config.dropout if rng is not None else 0.0
    for i, dilation in enumerate(config.dilations):
        h, cache = _block_forward(h, params, i, dilation, dropout, rng)
        caches.append(cache)
    last = h[:, -1, :]
    if last.shape[-1] != params["head.w"].shape[0]:
        raise ShapeMismatch(
            f"Head expects {params['head.w'].shape[0]} features, got {last.shape[-1]}"
        )
    logits = last @ params["head.w"] + params["head.b"][0]
    return logits, caches, h


def hidden_states(params: Params, x: np.ndarray, config: TcnConfig) -> np.ndarray:
    """Output of the last residual block, B x T x C."""
    batch, squeeze = _as_batch(x)
    _, _, h = _forward(params, batch, config)
    return h[0] if squeeze else h


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


def forward_scores(params: Params, x: np.ndarray, config: TcnConfig) -> np.ndarray:
    """Scores for a B x T x C batch of already-standardized windows."""
    batch, _ = _as_batch(x)
    logits, _, _ = _forward(params, batch, config)
    return sigmoid(logits)


def forward(model: TcnModel, window: np.ndarray) -> float:
    """Score in (0,1) for one already-standardized T x C window."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2 or window.shape[1] != model.n_inputs:
        raise ShapeMismatch(f"Model expects T x {model.n_inputs} windows, got shape {window.shape}")
    return float(forward_scores(model.params, window[None], model.config)[0])


def loss(score, target, task: Task) -> float:
    """Mean binary cross-entropy (Classify) or squared error (Regress) over scores."""
    s = np.atleast_1d(np.asarray(score, dtype=np.float64))
    y = np.atleast_1d(np.asarray(target, dtype=np.float64))
    if Task(task) == Task.REGRESS:
        return float(np.mean((s - y) ** 2))
    s = np.clip(s, 1e-15, 1.0 - 1e-15)
    return float(np.mean(-(y * np.log(s) + (1.0 - y) * np.log1p(-s))))


def _loss_from_logits(logits: np.ndarray, y: np.ndarray, task: Task) -> Tuple[float, np.ndarray]:
    """Batch-mean loss and its gradient w.r.t. the logits."""
    n = len(y)
    s = sigmoid(logits)
    if task == Task.REGRESS:
        return float(np.mean((s - y) ** 2)), 2.0 * (s - y) * s * (1.0 - s) / n
    value = np.mean(np.logaddexp(0.0, logits) - y * logits)
    return float(value), (s - y) / n


def batch_loss(params: Params, x: np.ndarray, y: np.ndarray, config: TcnConfig) -> float:
    logits, _, _ = _forward(params, np.asarray(x, dtype=np.float64), config)
    value, _ = _loss_from_logits(logits, np.asarray(y, dtype=np.float64), config.task)
    return value


def backward(
    params: Params, x: np.ndarray, y: np.ndarray, config: TcnConfig, rng=None
) -> Tuple[float, Params]:
    """Mean batch loss and exact gradients for every parameter."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    logits, caches, h = _forward(params, x, config, rng)
    value, dlogits = _loss_from_logits(logits, y, config.task)

    grads: Params = {}
    last = h[:, -1, :]
    grads["head.w"] = last.T @ dlogits
    grads["head.b"] = np.array([dlogits.sum()])
    dh = np.zeros_like(h)
    dh[:, -1, :] = np.outer(dlogits, params["head.w"])
    for i in reversed(range(len(config.dilations))):
        dh = _block_backward(dh, caches[i], params, i, config.dilations[i], grads, need_dx=i > 0)
    return value, grads


def _loss_and_signature(params: Params, x: np.ndarray, y: np.ndarray, config: TcnConfig):
    """Batch loss plus the on/off pattern of every ReLU."""
    logits, caches, _ = _forward(params, x, config)
    value, _ = _loss_from_logits(logits, y, config.task)
    parts = []
    for cache in caches:
        parts.extend([cache["pre1"] > 0, cache["pre2"] > 0, cache["total"] > 0])
    return value, np.concatenate([p.ravel() for p in parts])


def grad_check(
    params: Params,
    x: np.ndarray,
    y: np.ndarray,
    config: TcnConfig,
    eps: float = 1e-5,
    max_per_param: Optional[int] = None,
    seed: int = 0,
) -> Dict[str, Any]:
    """
    Compare analytic gradients with central differences.

    Coordinates whose +-eps perturbation flips any ReLU are skipped; the
    finite difference is meaningless across a kink. Relative error is
    |a - n| / max(|a| + |n|, 1e-6).
    """
    config = config.model_copy(update={"dropout": 0.0})
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _, analytic = backward(params, x, y, config)
    _, base_signature = _loss_and_signature(params, x, y, config)
    rng = np.random.Generator(np.random.PCG64(seed))

    worst = 0.0
    checked = skipped = 0
    per_param: Dict[str, float] = {}
    for name, value in params.items():
        coords = np.arange(value.size)
        if max_per_param is not None and value.size > max_per_param:
            coords = np.sort(rng.choice(value.size, size=max_per_param, replace=False))
        param_worst = 0.0
        for flat in coords:
            index = np.unravel_index(flat, value.shape)
            losses = []
            flipped = False
            for sign in (1.0, -1.0):
                trial = dict(params)
                trial[name] = value.copy()
                trial[name][index] += sign * eps
                value_at, signature = _loss_and_signature(trial, x, y, config)
                if not np.array_equal(signature, base_signature):
                    flipped = True
                    break
                losses.append(value_at)
            if flipped:
                skipped += 1
                continue
            numeric = (losses[0] - losses[1]) / (2.0 * eps)
            a = analytic[name][index]
            error = abs(a - numeric) / max(abs(a) + abs(numeric), 1e-6)
            param_worst = max(param_worst, error)
            checked += 1
        per_param[name] = param_worst
        worst = max(worst, param_worst)
    logger.debug(
        f"Gradient check: {checked} coordinates, {skipped} skipped, max rel error {worst:.3e}"
    )
    return {"max_rel_error": worst, "checked": checked, "skipped": skipped, "per_param": per_param}


def _window_arrays(windows: Sequence[Window], task: Task) -> Tuple[np.ndarray, np.ndarray]:
    x = np.stack([np.asarray(w.values, dtype=np.float64) for w in windows])
    if task == Task.CLASSIFY:
        y = np.array([1.0 if w.class_label else 0.0 for w in windows])
    else:
        y = np.array([w.prob_target for w in windows], dtype=np.float64)
    return x, y


def train(
    train_windows: Sequence[Window],
    val_windows: Sequence[Window],
    config: TcnConfig,
    init: Optional[Params] = None,
    feature_mask: Optional[FeatureMask] = None,
) -> Tuple[TcnModel, TrainReport]:
    """
    Seeded mini-batch Adam training; keeps the epoch with the lowest validation
    loss (earliest on ties).

    Args:
        train_windows: Windows to fit on. Their targets follow config.task.
        val_windows: Windows scored after every epoch to pick the kept weights.
        config: Architecture, optimizer settings, epochs and seed. Weights are
            initialized from seed, batches are shuffled from seed + 1 and
            dropout masks come from seed + 2.
        init: Starting weights instead of a seeded initialization.
        feature_mask: Channel selection the windows were built with, stored on
            the model for inference.

    Returns:
        (model, report): the model carries the selected weights and the
        training standardizer; the report holds per-epoch train and validation
        losses and the selected epoch.

    Raises:
        EmptySplit: either window list is empty.
    """
    if not train_windows or not val_windows:
        raise EmptySplit(
            "TCN training needs non-empty train and validation windows",
            {"n_train": len(train_windows), "n_val": len(val_windows)},
        )
    x_train, y_train = _window_arrays(train_windows, config.task)
    x_val, y_val = _window_arrays(val_windows, config.task)
    n_inputs = x_train.shape[-1]

    if config.standardize:
        standardizer = fit_standardizer(x_train)
    else:
        standardizer = Standardizer.identity(n_inputs)
    x_train = standardizer.apply(x_train)
    x_val = standardizer.apply(x_val)

    params = init if init is not None else init_params(
        config, n_inputs, np.random.Generator(np.random.PCG64(config.seed))
    )
    shuffle_rng = np.random.Generator(np.random.PCG64(config.seed + 1))
    dropout_rng = None
    if config.dropout > 0:
        dropout_rng = np.random.Generator(np.random.PCG64(config.seed + 2))

    state = AdamState()
    report = TrainReport()
    best_val = np.inf
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(x_train))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            value, grads = backward(params, x_train[batch], y_train[batch], config, dropout_rng)
            params, state = adam_step(
                params,
                grads,
                state,
                config.learning_rate,
                config.beta1,
                config.beta2,
                config.epsilon,
            )
            total += value * len(batch)
        report.train_loss.append(total / len(order))
        val = batch_loss(params, x_val, y_val, config)
        report.val_loss.append(val)
        if val < best_val:
            best_val = val
            report.selected_epoch = epoch
            report.params = {name: value.copy() for name, value in params.items()}
        logger.debug(f"epoch {epoch}: train {report.train_loss[-1]:.5f} val {val:.5f}")

    if not report.params:
        # every validation loss was NaN
        report.selected_epoch = config.epochs
        report.params = {name: value.copy() for name, value in params.items()}
    logger.info(
        f"Trained TCN ({config.task.value}): selected epoch {report.selected_epoch} "
        f"of {config.epochs}, val loss {best_val:.5f}"
    )
    model = TcnModel(
        config=config,
        params=report.params,
        standardizer=standardizer,
        n_inputs=n_inputs,
        feature_mask=feature_mask,
    )
    return model, report


def score_window(model: TcnModel, raw_window: np.ndarray) -> float:
    """Standardize a raw window with the model's statistics and score it."""
    window = np.ascontiguousarray(raw_window, dtype=np.float64)
    return forward(model, model.standardizer.apply(window))


def predict_windows(model: TcnModel, windows: Sequence[Window]) -> np.ndarray:
    # one window at a time so batch and streaming scores match bit for bit
    return np.array([score_window(model, w.values) for w in windows])
