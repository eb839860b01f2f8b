"""Two fixed model families with hand-derived gradients.

* ``MlpArch``      -- fully connected classifier: ReLU hidden layers, linear
                      logit head (softmax lives inside the cross-entropy loss).
* ``ConvDensityArch`` -- small density regressor: two same-padded square
                      convolutions with ReLU, then a 1x1 convolution down to a
                      single-channel map the size of the input image.

Parameters, activations, and gradients are float64 numpy arrays throughout.
No autodiff: each architecture's backward pass is written out explicitly and
is checked against central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..errors import NonFiniteError, ShapeError
from .tensor import as_f64, require_finite

LOSS_KINDS = ("cross_entropy", "pixelwise_l2")


@dataclass(frozen=True)
class MlpArch:
    input_dim: int
    hidden: tuple[int, ...]
    num_classes: int

    kind = "mlp"

    def layer_shapes(self) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        dims = [self.input_dim, *self.hidden, self.num_classes]
        return [((dims[i], dims[i + 1]), (dims[i + 1],)) for i in range(len(dims) - 1)]

    def input_shape(self) -> tuple[int, ...]:
        return (self.input_dim,)

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "input_dim": self.input_dim,
            "hidden": list(self.hidden),
            "num_classes": self.num_classes,
        }


@dataclass(frozen=True)
class ConvDensityArch:
    image_height: int
    image_width: int
    channels: tuple[int, int] = (8, 8)
    kernel_size: int = 3

    kind = "conv_density"

    def __post_init__(self):
        if self.kernel_size % 2 != 1:
            raise ShapeError("conv kernel size must be odd for same padding")

    def layer_shapes(self) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        c1, c2 = self.channels
        k = self.kernel_size
        return [
            ((c1, 1, k, k), (c1,)),
            ((c2, c1, k, k), (c2,)),
            ((1, c2, 1, 1), (1,)),
        ]

    def input_shape(self) -> tuple[int, ...]:
        return (self.image_height, self.image_width)

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "image_height": self.image_height,
            "image_width": self.image_width,
            "channels": list(self.channels),
            "kernel_size": self.kernel_size,
        }


Architecture = Union[MlpArch, ConvDensityArch]


def arch_from_descriptor(desc: dict) -> Architecture:
    kind = desc.get("kind")
    if kind == "mlp":
        return MlpArch(
            input_dim=int(desc["input_dim"]),
            hidden=tuple(int(h) for h in desc["hidden"]),
            num_classes=int(desc["num_classes"]),
        )
    if kind == "conv_density":
        return ConvDensityArch(
            image_height=int(desc["image_height"]),
            image_width=int(desc["image_width"]),
            channels=tuple(int(c) for c in desc["channels"]),
            kernel_size=int(desc["kernel_size"]),
        )
    raise ShapeError(f"unknown architecture kind: {kind!r}")


@dataclass
class ModelParams:
    """All learnable state of one model: per-layer weights and biases.

    The architecture descriptor fully determines every array shape, which is
    what makes the checkpoint format and the Adam state layout unambiguous.
    """

    arch: Architecture
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        expected = self.arch.layer_shapes()
        if len(self.weights) != len(expected) or len(self.biases) != len(expected):
            raise ShapeError(
                f"expected {len(expected)} layers, got {len(self.weights)} weights "
                f"and {len(self.biases)} biases"
            )
        for i, (w_shape, b_shape) in enumerate(expected):
            if tuple(self.weights[i].shape) != w_shape:
                raise ShapeError(
                    f"layer {i} weights: expected shape {w_shape}, "
                    f"got {tuple(self.weights[i].shape)}"
                )
            if tuple(self.biases[i].shape) != b_shape:
                raise ShapeError(
                    f"layer {i} bias: expected shape {b_shape}, "
                    f"got {tuple(self.biases[i].shape)}"
                )

    @property
    def num_parameters(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy(self) -> "ModelParams":
        return ModelParams(
            arch=self.arch,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def allclose(self, other: "ModelParams", atol: float = 0.0) -> bool:
        if self.arch != other.arch:
            return False
        pairs = zip(self.weights + self.biases, other.weights + other.biases)
        if atol == 0.0:
            return all(np.array_equal(a, b) for a, b in pairs)
        return all(np.allclose(a, b, atol=atol, rtol=0.0) for a, b in pairs)


def init_params(arch: Architecture, rng: np.random.Generator) -> ModelParams:
    """He-initialised weights, zero biases."""
    weights, biases = [], []
    for w_shape, b_shape in arch.layer_shapes():
        fan_in = int(np.prod(w_shape[1:])) if len(w_shape) == 4 else w_shape[0]
        weights.append(rng.standard_normal(w_shape) * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(b_shape))
    return ModelParams(arch=arch, weights=weights, biases=biases)


@dataclass
class LossBatchResult:
    """Per-sample losses plus gradients of the batch-mean loss."""

    per_sample_losses: np.ndarray
    mean_loss: float
    grad_weights: list[np.ndarray]
    grad_biases: list[np.ndarray]


# ---------------------------------------------------------------------------
# forward passes


def _check_batch(arch: Architecture, batch: np.ndarray) -> np.ndarray:
    batch = as_f64(batch)
    want = arch.input_shape()
    if batch.ndim != len(want) + 1 or tuple(batch.shape[1:]) != want:
        raise ShapeError(
            f"{arch.kind} input: expected (batch, {', '.join(map(str, want))}), "
            f"got {tuple(batch.shape)}"
        )
    return batch


def _mlp_forward(params: ModelParams, x: np.ndarray):
    # Cache post-activation of every layer; activations[0] is the input.
    activations = [x]
    a = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        a = z if i == last else np.maximum(z, 0.0)
        activations.append(a)
    return a, activations


def _mlp_backward(params: ModelParams, activations, d_out: np.ndarray):
    grad_w = [np.empty(0)] * len(params.weights)
    grad_b = [np.empty(0)] * len(params.biases)
    delta = d_out
    for i in range(len(params.weights) - 1, -1, -1):
        a_prev = activations[i]
        grad_w[i] = a_prev.T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i].T) * (activations[i] > 0.0)
    return grad_w, grad_b


def _conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Stride-1 same-padded convolution; x (N,Cin,H,W), w (Cout,Cin,k,k)."""
    n, cin, h, wid = x.shape
    kh, kw = w.shape[2], w.shape[3]
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    out = np.zeros((n, w.shape[0], h, wid))
    for i in range(kh):
        for j in range(kw):
            out += np.einsum(
                "nchw,oc->nohw", xp[:, :, i : i + h, j : j + wid], w[:, :, i, j]
            )
    return out + b[None, :, None, None]


def _conv2d_backward(x: np.ndarray, w: np.ndarray, d_out: np.ndarray):
    n, cin, h, wid = x.shape
    kh, kw = w.shape[2], w.shape[3]
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    d_xp = np.zeros_like(xp)
    d_w = np.zeros_like(w)
    for i in range(kh):
        for j in range(kw):
            patch = xp[:, :, i : i + h, j : j + wid]
            d_w[:, :, i, j] = np.einsum("nchw,nohw->oc", patch, d_out)
            d_xp[:, :, i : i + h, j : j + wid] += np.einsum(
                "nohw,oc->nchw", d_out, w[:, :, i, j]
            )
    d_b = d_out.sum(axis=(0, 2, 3))
    d_x = d_xp[:, :, ph : ph + h, pw : pw + wid]
    return d_x, d_w, d_b


def _conv_forward(params: ModelParams, x: np.ndarray):
    # x arrives (N, H, W); channel axis is implicit single-channel.
    x4 = x[:, None, :, :]
    z1 = _conv2d(x4, params.weights[0], params.biases[0])
    a1 = np.maximum(z1, 0.0)
    z2 = _conv2d(a1, params.weights[1], params.biases[1])
    a2 = np.maximum(z2, 0.0)
    z3 = _conv2d(a2, params.weights[2], params.biases[2])
    out = z3[:, 0, :, :]
    return out, (x4, z1, a1, z2, a2)


def _conv_backward(params: ModelParams, cache, d_out: np.ndarray):
    x4, z1, a1, z2, a2 = cache
    d_z3 = d_out[:, None, :, :]
    d_a2, d_w3, d_b3 = _conv2d_backward(a2, params.weights[2], d_z3)
    d_z2 = d_a2 * (z2 > 0.0)
    d_a1, d_w2, d_b2 = _conv2d_backward(a1, params.weights[1], d_z2)
    d_z1 = d_a1 * (z1 > 0.0)
    _, d_w1, d_b1 = _conv2d_backward(x4, params.weights[0], d_z1)
    return [d_w1, d_w2, d_w3], [d_b1, d_b2, d_b3]


def _forward_cached(params: ModelParams, batch: np.ndarray):
    batch = _check_batch(params.arch, batch)
    if params.arch.kind == "mlp":
        return _mlp_forward(params, batch)
    return _conv_forward(params, batch)


def forward(params: ModelParams, batch) -> np.ndarray:
    """Model output: (batch, num_classes) logits or (batch, H, W) density."""
    out, _ = _forward_cached(params, as_f64(batch))
    return require_finite(out, f"{params.arch.kind} forward output")


# ---------------------------------------------------------------------------
# losses


def _cross_entropy(output: np.ndarray, targets) -> tuple[np.ndarray, np.ndarray]:
    n = output.shape[0]
    logits = output.reshape(n, -1)
    y = np.asarray(targets)
    if y.shape != (n,):
        raise ShapeError(
            f"cross_entropy targets: expected shape ({n},) of class indices, "
            f"got {tuple(y.shape)}"
        )
    y = y.astype(np.int64)
    num_classes = logits.shape[1]
    if y.min(initial=0) < 0 or y.max(initial=0) >= num_classes:
        raise ShapeError(
            f"cross_entropy targets out of range [0, {num_classes}): "
            f"min {y.min()}, max {y.max()}"
        )
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    sum_exp = exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(sum_exp)
    per_sample = -log_probs[np.arange(n), y]
    probs = exp / sum_exp
    d_logits = probs.copy()
    d_logits[np.arange(n), y] -= 1.0
    d_logits /= n  # gradient of the batch-mean loss
    return per_sample, d_logits.reshape(output.shape)


def _pixelwise_l2(output: np.ndarray, targets) -> tuple[np.ndarray, np.ndarray]:
    t = as_f64(targets)
    if t.shape != output.shape:
        raise ShapeError(
            f"pixelwise_l2 targets: expected shape {tuple(output.shape)}, "
            f"got {tuple(t.shape)}"
        )
    n = output.shape[0]
    per_element = output.size // n
    diff = output - t
    per_sample = (diff * diff).reshape(n, -1).mean(axis=1)
    d_out = (2.0 / (n * per_element)) * diff
    return per_sample, d_out


def loss_and_grad(
    params: ModelParams,
    batch,
    targets,
    loss_kind: str,
    sample_ids: Sequence[int] | None = None,
) -> LossBatchResult:
    """Per-sample losses plus gradients of the batch-mean loss.

    ``cross_entropy`` treats the model output flattened per sample as class
    logits; ``pixelwise_l2`` is the per-sample mean squared element
    difference.  Both apply to either architecture, so gradient checks can
    cover the full model/loss cross product.
    """
    if loss_kind not in LOSS_KINDS:
        raise ShapeError(f"unknown loss kind {loss_kind!r}; expected one of {LOSS_KINDS}")
    batch = as_f64(batch)
    # overflow here surfaces as a NonFiniteError below, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        out, cache = _forward_cached(params, batch)
        if loss_kind == "cross_entropy":
            per_sample, d_out = _cross_entropy(out, targets)
        else:
            per_sample, d_out = _pixelwise_l2(out, targets)

    bad = np.flatnonzero(~np.isfinite(per_sample))
    if bad.size:
        idx = int(bad[0])
        sid = int(sample_ids[idx]) if sample_ids is not None else idx
        raise NonFiniteError(
            f"non-finite {loss_kind} loss for sample id {sid}", sample_id=sid
        )

    if params.arch.kind == "mlp":
        grad_w, grad_b = _mlp_backward(params, cache, d_out)
    else:
        grad_w, grad_b = _conv_backward(params, cache, d_out)
    return LossBatchResult(
        per_sample_losses=per_sample,
        mean_loss=float(per_sample.mean()),
        grad_weights=grad_w,
        grad_biases=grad_b,
    )


def per_sample_losses(params: ModelParams, batch, targets, loss_kind: str) -> np.ndarray:
    """Forward-only per-sample losses (used to refresh excluded samples)."""
    with np.errstate(over="ignore", invalid="ignore"):
        out, _ = _forward_cached(params, as_f64(batch))
        if loss_kind == "cross_entropy":
            per_sample, _ = _cross_entropy(out, targets)
        elif loss_kind == "pixelwise_l2":
            per_sample, _ = _pixelwise_l2(out, targets)
        else:
            raise ShapeError(f"unknown loss kind {loss_kind!r}; expected one of {LOSS_KINDS}")
    return require_finite(per_sample, f"{loss_kind} per-sample losses")
