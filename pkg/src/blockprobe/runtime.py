"""Executes the exported inference graph on CPU.

Supports the op set a tapped ResNet needs: Conv, BatchNormalization (eval
mode), Relu, MaxPool, Add, GlobalAveragePool. Activations flow NHWC
internally so the dominant 1x1 convolutions become plain GEMMs; convolution
weights are repacked once at load. Inputs and outputs keep the ONNX NCHW
convention.
"""

import numpy as np

from .errors import ModelError
from .onnx_io import OnnxModel, load_model

SUPPORTED_OPS = (
    "Conv",
    "BatchNormalization",
    "Relu",
    "MaxPool",
    "Add",
    "GlobalAveragePool",
)


def _conv_nhwc(x, w_hwio, bias, stride, pad):
    n, h, w, cin = x.shape
    kh, kw, _, cout = w_hwio.shape
    if kh == 1 and kw == 1 and pad == 0:
        if stride > 1:
            x = np.ascontiguousarray(x[:, ::stride, ::stride, :])
        n, oh, ow, _ = x.shape
        out = x.reshape(-1, cin) @ w_hwio.reshape(cin, cout)
    else:
        if pad:
            x = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
        hp, wp = x.shape[1], x.shape[2]
        oh = (hp - kh) // stride + 1
        ow = (wp - kw) // stride + 1
        s = x.strides
        windows = np.lib.stride_tricks.as_strided(
            x,
            (n, oh, ow, kh, kw, cin),
            (s[0], s[1] * stride, s[2] * stride, s[1], s[2], s[3]),
        )
        cols = np.ascontiguousarray(windows).reshape(n * oh * ow, kh * kw * cin)
        out = cols @ w_hwio.reshape(kh * kw * cin, cout)
    if bias is not None:
        out += bias
    return out.reshape(n, oh, ow, cout)


def _maxpool_nhwc(x, kernel, stride, pad):
    if pad:
        x = np.pad(
            x, ((0, 0), (pad, pad), (pad, pad), (0, 0)), constant_values=-np.inf
        )
    n, hp, wp, c = x.shape
    oh = (hp - kernel) // stride + 1
    ow = (wp - kernel) // stride + 1
    s = x.strides
    windows = np.lib.stride_tricks.as_strided(
        x,
        (n, oh, ow, kernel, kernel, c),
        (s[0], s[1] * stride, s[2] * stride, s[1], s[2], s[3]),
    )
    return windows.max(axis=(3, 4))


def _scalar(values, what):
    values = list(values)
    if any(v != values[0] for v in values):
        raise ModelError(f"anisotropic {what} {values} not supported")
    return values[0]


def _sym_pads(pads, what):
    pads = list(pads)
    if len(pads) == 2:
        pads = pads + pads
    if len(pads) != 4 or pads[0] != pads[2] or pads[1] != pads[3] or pads[0] != pads[1]:
        raise ModelError(f"asymmetric {what} pads {pads} not supported")
    return pads[0]


class GraphExecutor:
    """Prepared, reusable executor for one parsed model."""

    def __init__(self, model: OnnxModel):
        if not model.inputs:
            raise ModelError("graph declares no inputs")
        self.model = model
        self.input_name, self.input_shape = model.inputs[0]
        self.output_names = [name for name, _ in model.outputs]
        if not self.output_names:
            raise ModelError("graph declares no outputs")
        self._steps = []
        consumers: dict[str, int] = {}
        for node in model.nodes:
            for name in node.inputs:
                if name not in model.initializers:
                    consumers[name] = consumers.get(name, 0) + 1
        for name in self.output_names:
            consumers[name] = consumers.get(name, 0) + 1
        self._consumers = consumers
        inits = model.initializers

        def init(name):
            if name not in inits:
                raise ModelError(f"missing initializer {name!r}")
            return inits[name]

        for node in model.nodes:
            if node.op_type not in SUPPORTED_OPS:
                raise ModelError(f"unsupported op {node.op_type!r} ({node.name})")
            if node.op_type == "Conv":
                if node.attrs.get("group", 1) != 1:
                    raise ModelError("grouped conv not supported")
                if _scalar(node.attrs.get("dilations", [1, 1]), "dilations") != 1:
                    raise ModelError("dilated conv not supported")
                w = init(node.inputs[1]).astype(np.float32)  # (K, C, kh, kw)
                w_hwio = np.ascontiguousarray(w.transpose(2, 3, 1, 0))
                bias = (
                    init(node.inputs[2]).astype(np.float32)
                    if len(node.inputs) > 2
                    else None
                )
                params = (
                    w_hwio,
                    bias,
                    _scalar(node.attrs.get("strides", [1, 1]), "strides"),
                    _sym_pads(node.attrs.get("pads", [0, 0, 0, 0]), "conv"),
                )
            elif node.op_type == "BatchNormalization":
                scale, shift, mean, var = (init(n) for n in node.inputs[1:5])
                eps = float(node.attrs.get("epsilon", 1e-5))
                mul = (scale / np.sqrt(var + eps)).astype(np.float32)
                add = (shift - mean * mul).astype(np.float32)
                params = (mul, add)
            elif node.op_type == "MaxPool":
                params = (
                    _scalar(node.attrs["kernel_shape"], "kernel"),
                    _scalar(node.attrs.get("strides", [1, 1]), "strides"),
                    _sym_pads(node.attrs.get("pads", [0, 0, 0, 0]), "pool"),
                )
            else:
                params = ()
            self._steps.append((node.op_type, node.inputs, node.outputs[0], params))

    def run(self, batch: np.ndarray) -> dict[str, np.ndarray]:
        """Run an (N, C, H, W) float32 batch; returns {output_name: NCHW}."""
        batch = np.asarray(batch, dtype=np.float32)
        if batch.ndim == 3:
            batch = batch[None]
        expected = self.input_shape[1:]
        if list(batch.shape[1:]) != [int(d) for d in expected]:
            raise ModelError(
                f"input shape {batch.shape[1:]} does not match graph {tuple(expected)}"
            )
        live: dict[str, np.ndarray] = {
            self.input_name: np.ascontiguousarray(batch.transpose(0, 2, 3, 1))
        }
        remaining = dict(self._consumers)
        outputs: dict[str, np.ndarray] = {}

        def fetch(name):
            if name not in live:
                raise ModelError(f"tensor {name!r} not produced before use")
            value = live[name]
            remaining[name] -= 1
            if remaining[name] == 0:
                del live[name]
            return value

        for op, inputs, out_name, params in self._steps:
            if op == "Conv":
                w_hwio, bias, stride, pad = params
                result = _conv_nhwc(fetch(inputs[0]), w_hwio, bias, stride, pad)
            elif op == "BatchNormalization":
                mul, add = params
                result = fetch(inputs[0]) * mul + add
            elif op == "Relu":
                result = np.maximum(fetch(inputs[0]), 0.0)
            elif op == "MaxPool":
                kernel, stride, pad = params
                result = _maxpool_nhwc(fetch(inputs[0]), kernel, stride, pad)
            elif op == "Add":
                result = fetch(inputs[0]) + fetch(inputs[1])
            elif op == "GlobalAveragePool":
                x = fetch(inputs[0])
                result = x.mean(axis=(1, 2), dtype=np.float64, keepdims=True).astype(
                    np.float32
                )
            live[out_name] = result
            if out_name in self.output_names:
                outputs[out_name] = result
        missing = [n for n in self.output_names if n not in outputs]
        if missing:
            raise ModelError(f"graph never produced outputs {missing}")
        return {
            name: np.ascontiguousarray(value.transpose(0, 3, 1, 2))
            for name, value in outputs.items()
        }


def load_executor(path) -> GraphExecutor:
    return GraphExecutor(load_model(path))
