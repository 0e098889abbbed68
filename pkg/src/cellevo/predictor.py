"""Tiny convolutional classifier for "will this grid still be active?".

Fixed architecture on 32x32 inputs:

    conv 3x3 (1 -> 8 ch, valid) + tanh      30x30
    2x2 average pool                        15x15
    conv 3x3 (8 -> 8 ch, valid) + tanh      13x13
    global average pool                     8
    dense 8 -> 1 + logistic                 probability of "active"

673 parameters total. Forward pass and backprop are hand-rolled numpy so
gradients can be finite-difference checked; training is plain SGD with
momentum on binary cross-entropy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .grid import block_mean, substream

INPUT_SIDE = 32
N_CHANNELS = 8

_SHAPES = (
    ("conv1_w", (N_CHANNELS, 1, 3, 3)),
    ("conv1_b", (N_CHANNELS,)),
    ("conv2_w", (N_CHANNELS, N_CHANNELS, 3, 3)),
    ("conv2_b", (N_CHANNELS,)),
    ("dense_w", (N_CHANNELS,)),
    ("dense_b", ()),
)
PARAM_COUNT = sum(int(np.prod(s)) for _, s in _SHAPES)  # 673


@dataclass
class PredictorWeights:
    conv1_w: np.ndarray
    conv1_b: np.ndarray
    conv2_w: np.ndarray
    conv2_b: np.ndarray
    dense_w: np.ndarray
    dense_b: np.ndarray

    def __post_init__(self):
        for name, shape in _SHAPES:
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            setattr(self, name, arr)

    def pack(self) -> np.ndarray:
        return np.concatenate(
            [np.asarray(getattr(self, name)).ravel() for name, _ in _SHAPES]
        )

    @classmethod
    def unpack(cls, flat) -> "PredictorWeights":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (PARAM_COUNT,):
            raise ValueError(f"expected {PARAM_COUNT} parameters, got {flat.shape}")
        fields = {}
        pos = 0
        for name, shape in _SHAPES:
            size = int(np.prod(shape))
            fields[name] = flat[pos : pos + size].reshape(shape)
            pos += size
        return cls(**fields)


def init_weights(rng: np.random.Generator) -> PredictorWeights:
    """All 673 parameters drawn N(0, 0.1^2) in packing order."""
    return PredictorWeights.unpack(rng.normal(0.0, 0.1, PARAM_COUNT))


def _conv_valid(x, w, b):
    """x: (B, C, H, W), w: (O, C, 3, 3) -> (B, O, H-2, W-2)."""
    windows = sliding_window_view(x, (3, 3), axis=(2, 3))
    return np.einsum("bcijuv,ocuv->boij", windows, w) + b[None, :, None, None]


def _conv_backward(x, w, gout):
    """Gradients of a valid 3x3 correlation: returns (gw, gb, gx)."""
    windows = sliding_window_view(x, (3, 3), axis=(2, 3))
    gw = np.einsum("boij,bcijuv->ocuv", gout, windows)
    gb = gout.sum(axis=(0, 2, 3))
    padded = np.pad(gout, ((0, 0), (0, 0), (2, 2), (2, 2)))
    gwin = sliding_window_view(padded, (3, 3), axis=(2, 3))
    gx = np.einsum("boijuv,ocuv->bcij", gwin, w[:, :, ::-1, ::-1])
    return gw, gb, gx


def _forward(w: PredictorWeights, x: np.ndarray) -> dict:
    """x: (B, 32, 32). Returns every intermediate needed for backprop."""
    x1 = x[:, None, :, :]
    z1 = _conv_valid(x1, w.conv1_w, w.conv1_b)
    a1 = np.tanh(z1)
    b, c, h, wd = a1.shape
    pooled = a1.reshape(b, c, h // 2, 2, wd // 2, 2).mean(axis=(3, 5))
    z2 = _conv_valid(pooled, w.conv2_w, w.conv2_b)
    a2 = np.tanh(z2)
    feat = a2.mean(axis=(2, 3))
    logit = feat @ w.dense_w + w.dense_b
    return {
        "x1": x1, "a1": a1, "pooled": pooled, "a2": a2, "feat": feat,
        "logit": logit,
    }


def _pool_input(grid: np.ndarray) -> np.ndarray:
    side = grid.shape[-1]
    if side == INPUT_SIDE:
        return np.asarray(grid, dtype=np.float64)
    return block_mean(grid, INPUT_SIDE)


def predict(w: PredictorWeights, grid: np.ndarray) -> float:
    """Probability that a single grid is "active"; pools to 32x32 if needed."""
    return float(predict_batch(w, _pool_input(grid)[None])[0])


def _sigmoid(z):
    # exp(-softplus(-z)): overflow-free on both tails.
    return np.exp(-np.logaddexp(0.0, -z))


def predict_batch(w: PredictorWeights, grids: np.ndarray) -> np.ndarray:
    return _sigmoid(_forward(w, _pool_input(grids))["logit"])


def loss_and_grads(w: PredictorWeights, grids, labels):
    """Mean binary cross-entropy and its gradient, packed to (673,).

    grids: (B, 32, 32); labels: (B,) in {0, 1}.
    """
    x = np.asarray(grids, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    batch = x.shape[0]
    cache = _forward(w, x)
    logit = cache["logit"]
    # softplus(l) - y*l is the numerically stable form of BCE on logits.
    loss = float(np.mean(np.logaddexp(0.0, logit) - y * logit))

    glogit = (_sigmoid(logit) - y) / batch
    g_dense_w = glogit @ cache["feat"]
    g_dense_b = glogit.sum()
    gfeat = np.outer(glogit, w.dense_w)

    ga2 = np.broadcast_to(
        gfeat[:, :, None, None] / (13 * 13), cache["a2"].shape
    )
    gz2 = ga2 * (1.0 - cache["a2"] ** 2)
    g_conv2_w, g_conv2_b, gpooled = _conv_backward(cache["pooled"], w.conv2_w, gz2)

    ga1 = np.repeat(np.repeat(gpooled, 2, axis=2), 2, axis=3) / 4.0
    gz1 = ga1 * (1.0 - cache["a1"] ** 2)
    g_conv1_w, g_conv1_b, _ = _conv_backward(cache["x1"], w.conv1_w, gz1)

    grads = PredictorWeights(
        g_conv1_w, g_conv1_b, g_conv2_w, g_conv2_b, g_dense_w,
        np.asarray(g_dense_b),
    )
    return loss, grads.pack()


def accuracy(predictions, labels) -> float:
    """Fraction of examples where (prediction >= 0.5) matches the label."""
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if p.size == 0:
        raise ValueError("accuracy of empty prediction list is undefined")
    if p.shape != y.shape:
        raise ValueError("predictions and labels must have equal length")
    return float(np.mean((p >= 0.5) == y))


@dataclass
class TrainResult:
    weights: PredictorWeights
    val_accuracy: float
    single_class_train: bool
    n_train: int
    n_val: int


def train(
    grids,
    labels,
    *,
    epochs: int,
    seed,
    split: float = 0.75,
    lr: float = 0.05,
    momentum: float = 0.9,
    batch_size: int = 16,
) -> TrainResult:
    """SGD-with-momentum training on a shuffled train/validation split.

    Everything random (split, init, batch order) comes from one stream
    seeded by `seed`, so results are reproducible.
    """
    x = _pool_input(np.asarray(grids, dtype=np.float64))
    y = np.asarray(labels, dtype=np.float64)
    m = x.shape[0]
    if m < 4:
        raise ValueError("need at least 4 examples to split")
    n_train = int(m * split)
    if not (0 < n_train < m):
        raise ValueError(f"split {split} leaves an empty train or validation set")

    rng = substream(seed)
    perm = rng.permutation(m)
    train_idx, val_idx = perm[:n_train], perm[n_train:]
    single_class = len(np.unique(y[train_idx])) < 2

    flat = init_weights(rng).pack()
    velocity = np.zeros_like(flat)
    for _ in range(epochs):
        order = train_idx[rng.permutation(n_train)]
        for lo in range(0, n_train, batch_size):
            batch = order[lo : lo + batch_size]
            _, g = loss_and_grads(PredictorWeights.unpack(flat), x[batch], y[batch])
            velocity = momentum * velocity - lr * g
            flat = flat + velocity

    weights = PredictorWeights.unpack(flat)
    val_acc = accuracy(predict_batch(weights, x[val_idx]), y[val_idx] > 0.5)
    return TrainResult(weights, val_acc, single_class, n_train, m - n_train)
