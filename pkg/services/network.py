"""
The classifier: initialization, forward pass, cross-entropy with hand-written
per-layer backward passes (parameter and input gradients), SGD and accuracy.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from models.layer import LayerSpec
from models.network import LossReport, Network
from utils.errors import DimensionError, ValidationError
from utils.tensor_core import Gradients, Tensor, elementwise, freeze, log_softmax, matmul

logger = logging.getLogger(__name__)

PREDICT_CHUNK = 512


def infer_shapes(layers: Sequence[LayerSpec], input_shape: Sequence[int]) -> List[Tuple[int, ...]]:
    """Per-example activation shapes: input first, then one entry per layer"""
    shapes: List[Tuple[int, ...]] = [tuple(int(s) for s in input_shape)]
    for i, spec in enumerate(layers):
        shape = shapes[-1]
        previous = layers[i - 1].describe() if i else f"input{shape}"

        def mismatch() -> ValidationError:
            return ValidationError(
                f"{previous} (output {shape}) does not chain into layer {i} {spec.describe()}"
            )

        if spec.kind == "dense":
            if shape != (spec.in_dim,):
                raise mismatch()
            shapes.append((spec.out_dim,))
        elif spec.kind == "relu":
            shapes.append(shape)
        elif spec.kind == "conv2d":
            if len(shape) != 3 or shape[0] != spec.in_ch or min(shape[1:]) < spec.kernel:
                raise mismatch()
            out_h = (shape[1] - spec.kernel) // spec.stride + 1
            out_w = (shape[2] - spec.kernel) // spec.stride + 1
            shapes.append((spec.out_ch, out_h, out_w))
        elif spec.kind == "maxpool2d":
            if len(shape) != 3 or min(shape[1:]) < spec.kernel:
                raise mismatch()
            shapes.append((shape[0], shape[1] // spec.kernel, shape[2] // spec.kernel))
        elif spec.kind == "flatten":
            shapes.append((int(np.prod(shape)),))
    return shapes


def init_network(
    specs: Sequence[LayerSpec],
    seed: int,
    input_shape: Optional[Sequence[int]] = None,
) -> Network:
    """
    Build a network with weights ~ U(±sqrt(6/fan_in)) and zero biases.
    Dense weights are out×in; conv weights are out_ch×in_ch×k×k.
    """
    layers = tuple(specs)
    if not layers:
        raise ValidationError("a network needs at least one layer")
    if input_shape is None:
        if layers[0].kind != "dense":
            raise ValidationError(f"a network starting with {layers[0].describe()} needs an explicit input shape")
        input_shape = (layers[0].in_dim,)

    shapes = infer_shapes(layers, input_shape)
    if len(shapes[-1]) != 1 or shapes[-1][0] < 2 or not any(spec.kind == "dense" for spec in layers):
        raise ValidationError(f"network must end in K >= 2 logits, final shape is {shapes[-1]}")

    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    params: Dict[str, Tensor] = {}
    for i, spec in enumerate(layers):
        if spec.kind == "dense":
            fan_in, weight_shape, bias_len = spec.in_dim, (spec.out_dim, spec.in_dim), spec.out_dim
        elif spec.kind == "conv2d":
            fan_in = spec.in_ch * spec.kernel * spec.kernel
            weight_shape, bias_len = (spec.out_ch, spec.in_ch, spec.kernel, spec.kernel), spec.out_ch
        else:
            continue
        bound = np.sqrt(6.0 / fan_in)
        params[f"{i}.weight"] = freeze(rng.uniform(-bound, bound, size=weight_shape))
        params[f"{i}.bias"] = freeze(np.zeros(bias_len))

    net = Network(layers=layers, params=params, input_shape=tuple(shapes[0]), rng_seed=int(seed))
    logger.debug(f"Initialized network {[s.describe() for s in layers]} with {net.num_parameters()} parameters")
    return net


def _check_input(net: Network, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise DimensionError("input batch does not match the network input", x.shape, ("B", net.input_dim))
    return x


def _check_labels(y, batch: int, num_classes: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (batch,):
        raise DimensionError("labels do not match the batch", y.shape, (batch,))
    bad = np.flatnonzero((y < 0) | (y >= num_classes))
    if bad.size:
        raise ValidationError(f"label {int(y[bad[0]])} at index {int(bad[0])} is outside [0, {num_classes})")
    return y.astype(np.int64)


def _forward(net: Network, x: np.ndarray, keep_cache: bool):
    batch = x.shape[0]
    h = x.reshape((batch,) + net.input_shape)
    caches = []
    for i, spec in enumerate(net.layers):
        cache = None
        if spec.kind == "dense":
            weight, bias = net.params[f"{i}.weight"], net.params[f"{i}.bias"]
            cache = h
            h = matmul(h, weight.T) + bias
        elif spec.kind == "relu":
            cache = h
            h = elementwise("relu", h)
        elif spec.kind == "conv2d":
            weight, bias = net.params[f"{i}.weight"], net.params[f"{i}.bias"]
            k, s = spec.kernel, spec.stride
            windows = sliding_window_view(h, (k, k), axis=(2, 3))[:, :, ::s, ::s]
            cache = (h.shape, windows)
            h = np.einsum("bchwij,ocij->bohw", windows, weight, optimize=True) + bias[None, :, None, None]
        elif spec.kind == "maxpool2d":
            k = spec.kernel
            b, c, height, width = h.shape
            hk, wk = height // k, width // k
            windows = (
                h[:, :, : hk * k, : wk * k]
                .reshape(b, c, hk, k, wk, k)
                .transpose(0, 1, 2, 4, 3, 5)
                .reshape(b, c, hk, wk, k * k)
            )
            # argmax keeps the first maximum, so ties route the gradient to one input
            argmax = windows.argmax(axis=-1)
            cache = (h.shape, argmax)
            h = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]
        elif spec.kind == "flatten":
            cache = h.shape
            h = h.reshape(batch, -1)
        caches.append(cache if keep_cache else None)
    return h, caches


def _backward(
    net: Network,
    caches,
    grad_logits: np.ndarray,
    need_input_grad: bool,
    need_param_grad: bool,
) -> Gradients:
    by_parameter: Dict[str, Tensor] = {}
    g = grad_logits
    for i in range(len(net.layers) - 1, -1, -1):
        spec, cache = net.layers[i], caches[i]
        propagate = i > 0 or need_input_grad
        if spec.kind == "dense":
            weight = net.params[f"{i}.weight"]
            if need_param_grad:
                by_parameter[f"{i}.weight"] = freeze(g.T @ cache)
                by_parameter[f"{i}.bias"] = freeze(g.sum(axis=0))
            if propagate:
                g = g @ weight
        elif spec.kind == "relu":
            g = g * (cache > 0)
        elif spec.kind == "conv2d":
            weight = net.params[f"{i}.weight"]
            in_shape, windows = cache
            if need_param_grad:
                by_parameter[f"{i}.weight"] = freeze(np.einsum("bchwij,bohw->ocij", windows, g, optimize=True))
                by_parameter[f"{i}.bias"] = freeze(g.sum(axis=(0, 2, 3)))
            if propagate:
                k, s = spec.kernel, spec.stride
                out_h, out_w = g.shape[2], g.shape[3]
                dx = np.zeros(in_shape)
                for a in range(k):
                    for c in range(k):
                        dx[:, :, a : a + s * (out_h - 1) + 1 : s, c : c + s * (out_w - 1) + 1 : s] += np.einsum(
                            "bohw,oc->bchw", g, weight[:, :, a, c], optimize=True
                        )
                g = dx
        elif spec.kind == "maxpool2d":
            in_shape, argmax = cache
            k = spec.kernel
            b, c, hk, wk = g.shape
            routed = np.zeros((b, c, hk, wk, k * k))
            np.put_along_axis(routed, argmax[..., None], g[..., None], axis=-1)
            dx = np.zeros(in_shape)
            dx[:, :, : hk * k, : wk * k] = (
                routed.reshape(b, c, hk, wk, k, k).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, hk * k, wk * k)
            )
            g = dx
        elif spec.kind == "flatten":
            g = g.reshape(cache)

    by_input = freeze(g.reshape(g.shape[0], -1)) if need_input_grad else None
    return Gradients(by_parameter=by_parameter, by_input=by_input)


def forward(net: Network, x: Tensor) -> Tensor:
    """B×in inputs → B×K logits"""
    x = _check_input(net, x)
    logits, _ = _forward(net, x, keep_cache=False)
    return freeze(logits)


def loss_and_grads(
    net: Network,
    x: Tensor,
    y,
    need_input_grad: bool = False,
    need_param_grad: bool = True,
) -> Tuple[LossReport, Gradients]:
    """
    Mean cross-entropy over the batch and, on request, its gradients with
    respect to the parameters and/or the input batch.
    """
    x = _check_input(net, x)
    logits, caches = _forward(net, x, keep_cache=need_input_grad or need_param_grad)
    y = _check_labels(y, x.shape[0], logits.shape[1])

    log_probs = log_softmax(logits)
    rows = np.arange(x.shape[0])
    per_example = np.maximum(-log_probs[rows, y], 0.0)
    report = LossReport(
        mean_loss=float(per_example.mean()),
        per_example_loss=freeze(per_example),
        log_probs=log_probs,
    )
    if not (need_input_grad or need_param_grad):
        return report, Gradients()

    grad_logits = np.exp(log_probs)
    grad_logits[rows, y] -= 1.0
    grad_logits /= x.shape[0]
    grads = _backward(net, caches, grad_logits, need_input_grad, need_param_grad)
    return report, grads


def sgd_step(net: Network, grads: Gradients, lr: float) -> Network:
    """θ ← θ − lr·∇θ, returned as a new network"""
    if lr < 0 or not np.isfinite(lr):
        raise ValidationError(f"learning rate must be a finite value >= 0, got {lr}")
    missing = [name for name in net.params if name not in grads.by_parameter]
    if missing:
        raise ValidationError(f"no gradient for parameter(s) {', '.join(sorted(missing))}")
    grads.check_against(net.params)

    params = {name: freeze(value - lr * grads.by_parameter[name]) for name, value in net.params.items()}
    return Network(layers=net.layers, params=params, input_shape=net.input_shape, rng_seed=net.rng_seed)


def predict(net: Network, x: Tensor) -> np.ndarray:
    """Argmax class per row; ties go to the lowest class index"""
    x = _check_input(net, x)
    predictions = [
        _forward(net, x[start : start + PREDICT_CHUNK], keep_cache=False)[0].argmax(axis=1)
        for start in range(0, x.shape[0], PREDICT_CHUNK)
    ]
    return np.concatenate(predictions) if predictions else np.zeros(0, dtype=np.int64)


def accuracy(net: Network, x: Tensor, y) -> float:
    x = _check_input(net, x)
    if x.shape[0] == 0:
        return 0.0
    y = _check_labels(y, x.shape[0], net.num_classes)
    return float(np.mean(predict(net, x) == y))
