"""Per-component convolutional upsampling networks.

Small stacks of same-size convolution layers (cross-correlation with
edge-replicate padding) trained by plain mini-batch SGD on MSE.  The
standard architecture is 1 -> 64 -> 32 -> 1 channels with 9, 1, 5
kernels and ReLU on the two hidden layers.

Training loss ignores a border margin of sum((k_i - 1) / 2) pixels so
the objective never depends on replicated padding content.
"""

import struct
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import CategoryMismatchError, FormatError
from .regions import CATEGORIES

ACTIVATIONS = ("none", "relu")

_MAGIC = b"LCGECNN1"

# im2col is faster but materializes (h*w, in_ch*k*k); above this element
# count fall back to shift-and-accumulate slices.
_IM2COL_LIMIT = 25_000_000


@dataclass
class ConvLayer:
    weights: np.ndarray  # (out_ch, in_ch, k, k)
    biases: np.ndarray  # (out_ch,)
    activation: str

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.weights.ndim != 4 or self.weights.shape[2] != self.weights.shape[3]:
            raise ValueError(f"weights must be (out, in, k, k), got {self.weights.shape}")
        if self.kernel_size % 2 == 0:
            raise ValueError(f"kernel size must be odd, got {self.kernel_size}")
        if self.biases.shape != (self.out_channels,):
            raise ValueError(
                f"biases shape {self.biases.shape} does not match {self.out_channels} outputs"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation '{self.activation}'")

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel_size(self) -> int:
        return self.weights.shape[2]


@dataclass
class ConvNet:
    category: str
    layers: List[ConvLayer]

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category '{self.category}'")
        if not self.layers:
            raise ValueError("net needs at least one layer")
        if self.layers[0].in_channels != 1 or self.layers[-1].out_channels != 1:
            raise ValueError("net must map one plane to one plane")
        for prev, cur in zip(self.layers, self.layers[1:]):
            if prev.out_channels != cur.in_channels:
                raise ValueError(
                    f"channel chain broken: {prev.out_channels} -> {cur.in_channels}"
                )

    @property
    def interior_margin(self) -> int:
        return sum((layer.kernel_size - 1) // 2 for layer in self.layers)


STANDARD_ARCH = ((1, 64, 9, "relu"), (64, 32, 1, "relu"), (32, 1, 5, "none"))


def standard_net(category: str, seed: int = 0, init: str = "identity") -> ConvNet:
    """Build the standard three-layer net.

    init "identity" routes the input unchanged through channel 0 (zero
    everywhere else), so an untrained net reproduces its input; init
    "gaussian" draws all weights from N(0, 0.001^2).
    """
    rng = np.random.default_rng(seed)
    layers = []
    for in_ch, out_ch, k, act in STANDARD_ARCH:
        if init == "gaussian":
            w = rng.normal(0.0, 0.001, size=(out_ch, in_ch, k, k))
        elif init == "identity":
            w = np.zeros((out_ch, in_ch, k, k))
            w[0, 0, k // 2, k // 2] = 1.0
        else:
            raise ValueError(f"unknown init '{init}'")
        layers.append(ConvLayer(w, np.zeros(out_ch), act))
    return ConvNet(category=category, layers=layers)


def identity_net(category: str) -> ConvNet:
    """Standard architecture configured as an exact pass-through."""
    return standard_net(category, init="identity")


def _pad_replicate(x, pad):
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (pad, pad), (pad, pad)), mode="edge")


def _fold_replicate(d_padded, pad, h, w):
    """Adjoint of edge-replicate padding: border gradients fold inward."""
    if pad == 0:
        return d_padded
    rows = d_padded[:, pad : pad + h, :].copy()
    rows[:, 0, :] += d_padded[:, :pad, :].sum(axis=1)
    rows[:, -1, :] += d_padded[:, pad + h :, :].sum(axis=1)
    out = rows[:, :, pad : pad + w].copy()
    out[:, :, 0] += rows[:, :, :pad].sum(axis=2)
    out[:, :, -1] += rows[:, :, pad + w :].sum(axis=2)
    return out


def _conv_raw(layer: ConvLayer, x):
    """Cross-correlation with edge-replicate padding, same spatial dims.

    Returns (pre_activation, padded_input); the padded input is cached
    for the backward pass.
    """
    k = layer.kernel_size
    pad = (k - 1) // 2
    _, h, w = x.shape
    xp = _pad_replicate(x, pad)
    if k == 1:
        z = np.einsum("oi,ihw->ohw", layer.weights[:, :, 0, 0], x)
    elif h * w * layer.in_channels * k * k <= _IM2COL_LIMIT:
        cols = sliding_window_view(xp, (k, k), axis=(1, 2))  # (in, h, w, k, k)
        cols = cols.transpose(1, 2, 0, 3, 4).reshape(h * w, layer.in_channels * k * k)
        wmat = layer.weights.reshape(layer.out_channels, -1)
        z = (cols @ wmat.T).T.reshape(layer.out_channels, h, w)
    else:
        z = np.zeros((layer.out_channels, h, w), dtype=np.float64)
        for dy in range(k):
            for dx in range(k):
                z += np.einsum(
                    "oi,ihw->ohw",
                    layer.weights[:, :, dy, dx],
                    xp[:, dy : dy + h, dx : dx + w],
                )
    z += layer.biases[:, None, None]
    return z, xp


def conv_forward(layer: ConvLayer, x):
    """Apply one layer to (in_ch, h, w); output keeps the spatial dims."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] != layer.in_channels:
        raise ValueError(
            f"input shape {x.shape} does not match {layer.in_channels} input channels"
        )
    z, _ = _conv_raw(layer, x)
    if layer.activation == "relu":
        return np.maximum(z, 0.0)
    return z


def net_forward(net: ConvNet, plane):
    """Run a plane through the net; output is unclamped."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ValueError(f"expected a 2-D plane, got shape {plane.shape}")
    x = plane[None, :, :]
    for layer in net.layers:
        x = conv_forward(layer, x)
    return x[0]


def mse_loss(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


def _forward_cached(net: ConvNet, plane):
    x = plane[None, :, :]
    caches = []
    for layer in net.layers:
        z, xp = _conv_raw(layer, x)
        out = np.maximum(z, 0.0) if layer.activation == "relu" else z
        caches.append((x, xp, z))
        x = out
    return x[0], caches


def _loss_and_grads(net: ConvNet, x_plane, y_plane):
    """Interior-margin MSE loss and gradients for every parameter."""
    pred, caches = _forward_cached(net, x_plane)
    m = net.interior_margin
    h, w = pred.shape
    if h - 2 * m < 1 or w - 2 * m < 1:
        raise ValueError(
            f"sample {h}x{w} has no interior at margin {m}; use larger samples"
        )
    sl = (slice(m, h - m), slice(m, w - m))
    diff = pred[sl] - y_plane[sl]
    n_interior = diff.size
    loss = float(np.mean(diff * diff))
    d_pred = np.zeros_like(pred)
    d_pred[sl] = (2.0 / n_interior) * diff
    d_out = d_pred[None, :, :]

    grads = []
    for layer, (x_in, xp, z) in zip(reversed(net.layers), reversed(caches)):
        if layer.activation == "relu":
            d_z = d_out * (z > 0.0)
        else:
            d_z = d_out
        k = layer.kernel_size
        pad = (k - 1) // 2
        _, h_in, w_in = x_in.shape
        d_b = d_z.sum(axis=(1, 2))
        d_w = np.empty_like(layer.weights)
        d_xp = np.zeros_like(xp)
        for dy in range(k):
            for dx in range(k):
                patch = xp[:, dy : dy + h_in, dx : dx + w_in]
                d_w[:, :, dy, dx] = np.tensordot(d_z, patch, axes=([1, 2], [1, 2]))
                d_xp[:, dy : dy + h_in, dx : dx + w_in] += np.einsum(
                    "oi,ohw->ihw", layer.weights[:, :, dy, dx], d_z
                )
        d_out = _fold_replicate(d_xp, pad, h_in, w_in)
        grads.append((d_w, d_b))
    grads.reverse()
    return loss, grads


@dataclass
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-3
    batch_size: int = 8
    sample_size: int = 33
    seed: int = 0


def train(
    net: ConvNet, pairs: Sequence[Tuple[np.ndarray, np.ndarray]], cfg: TrainConfig
) -> Tuple[ConvNet, List[float]]:
    """Mini-batch SGD over randomly positioned square sub-patches.

    Updates the net in place and returns it with the per-epoch mean
    training loss.  Runs are bit-reproducible for a fixed seed.
    """
    if not pairs:
        raise ValueError("no training pairs")
    pairs = [
        (np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
        for a, b in pairs
    ]
    for a, b in pairs:
        if a.shape != b.shape:
            raise ValueError(f"pair shape mismatch: {a.shape} vs {b.shape}")
    margin = net.interior_margin
    rng = np.random.default_rng(cfg.seed)
    losses = []
    for _ in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        epoch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            acc = None
            batch_loss = 0.0
            for idx in batch:
                x_full, y_full = pairs[idx]
                h, w = x_full.shape
                ps = min(cfg.sample_size, h, w)
                if ps - 2 * margin < 1:
                    raise ValueError(
                        f"sample size {ps} leaves no interior at margin {margin}"
                    )
                top = int(rng.integers(0, h - ps + 1))
                left = int(rng.integers(0, w - ps + 1))
                x = x_full[top : top + ps, left : left + ps]
                y = y_full[top : top + ps, left : left + ps]
                loss, grads = _loss_and_grads(net, x, y)
                batch_loss += loss
                if acc is None:
                    acc = [(dw.copy(), db.copy()) for dw, db in grads]
                else:
                    for (aw, ab), (dw, db) in zip(acc, grads):
                        aw += dw
                        ab += db
            scale = cfg.learning_rate / len(batch)
            for layer, (aw, ab) in zip(net.layers, acc):
                layer.weights -= scale * aw
                layer.biases -= scale * ab
            epoch_losses.append(batch_loss / len(batch))
        losses.append(float(np.mean(epoch_losses)))
    return net, losses


def gradient_check(net: ConvNet, sample: Tuple[np.ndarray, np.ndarray], h: float = 1e-3):
    """Max relative error between backprop and central finite differences.

    Every weight and bias is perturbed by +-h; relative error divides by
    the larger gradient magnitude floored at 1e-8 so exact zeros compare
    cleanly.
    """
    x, y = sample
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)

    def loss_only():
        pred, _ = _forward_cached(net, x)
        m = net.interior_margin
        hh, ww = pred.shape
        sl = (slice(m, hh - m), slice(m, ww - m))
        d = pred[sl] - y[sl]
        return float(np.mean(d * d))

    _, grads = _loss_and_grads(net, x, y)
    worst = 0.0
    for layer, (d_w, d_b) in zip(net.layers, grads):
        for arr, grad in ((layer.weights, d_w), (layer.biases, d_b)):
            flat = arr.reshape(-1)
            gflat = grad.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = loss_only()
                flat[i] = orig - h
                down = loss_only()
                flat[i] = orig
                fd = (up - down) / (2.0 * h)
                denom = max(abs(gflat[i]), abs(fd), 1e-8)
                worst = max(worst, abs(gflat[i] - fd) / denom)
    return worst


_ACT_CODES = {name: i for i, name in enumerate(ACTIVATIONS)}


def save_net(net: ConvNet, path):
    """Binary little-endian weights file (magic LCGECNN1)."""
    blob = bytearray()
    blob += _MAGIC
    blob += struct.pack("<BB", CATEGORIES.index(net.category), len(net.layers))
    for layer in net.layers:
        blob += struct.pack(
            "<HHHB",
            layer.kernel_size,
            layer.in_channels,
            layer.out_channels,
            _ACT_CODES[layer.activation],
        )
    for layer in net.layers:
        blob += layer.weights.astype("<f8").tobytes()
        blob += layer.biases.astype("<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def load_net(path, expected_category: Optional[str] = None) -> ConvNet:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(_MAGIC)] != _MAGIC:
        raise FormatError(f"{path}: bad magic, not a weights file")
    off = len(_MAGIC)
    try:
        cat_code, n_layers = struct.unpack_from("<BB", blob, off)
    except struct.error:
        raise FormatError(f"{path}: truncated header")
    off += 2
    if cat_code >= len(CATEGORIES):
        raise FormatError(f"{path}: invalid category code {cat_code}")
    category = CATEGORIES[cat_code]
    if n_layers < 1:
        raise FormatError(f"{path}: layer count must be >= 1")
    shapes = []
    for _ in range(n_layers):
        try:
            k, in_ch, out_ch, act_code = struct.unpack_from("<HHHB", blob, off)
        except struct.error:
            raise FormatError(f"{path}: truncated layer table")
        off += 7
        if act_code >= len(ACTIVATIONS):
            raise FormatError(f"{path}: unknown activation code {act_code}")
        shapes.append((k, in_ch, out_ch, ACTIVATIONS[act_code]))
    layers = []
    for k, in_ch, out_ch, act in shapes:
        n_w = out_ch * in_ch * k * k
        end = off + 8 * (n_w + out_ch)
        if end > len(blob):
            raise FormatError(f"{path}: truncated weight payload")
        w = np.frombuffer(blob, dtype="<f8", count=n_w, offset=off).reshape(
            out_ch, in_ch, k, k
        )
        b = np.frombuffer(blob, dtype="<f8", count=out_ch, offset=off + 8 * n_w)
        off = end
        try:
            layers.append(ConvLayer(w.copy(), b.copy(), act))
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}")
    if off != len(blob):
        raise FormatError(f"{path}: {len(blob) - off} trailing bytes")
    try:
        net = ConvNet(category=category, layers=layers)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}")
    if expected_category is not None and net.category != expected_category:
        raise CategoryMismatchError(
            f"{path}: holds '{net.category}' weights, expected '{expected_category}'"
        )
    return net
