"""Construct a five-tap ResNet-50 inference graph with seeded random weights.

Used where pretrained weights are not available (demo pipelines, tests): the
topology, tap points, and tensor naming match the export contract exactly
(input "input" 1x3x224x224; outputs "block1".."block5"), so any graph from
the real export tool is interchangeable with a generated one.

Batch-norm layers are emitted in eval form with zero running mean and unit
variance; convolutions draw Kaiming-normal weights (std = sqrt(2/fan_out))
from a PCG64 stream, so one seed always yields byte-identical files.
"""

import json
from pathlib import Path

import numpy as np

from . import onnx_io

STAGES = ((64, 256, 3, 1), (128, 512, 4, 2), (256, 1024, 6, 2), (512, 2048, 3, 2))

BLOCK_CHANNELS = {1: 64, 2: 256, 3: 512, 4: 1024, 5: 2048}
BLOCK_SPATIAL = {1: 112, 2: 56, 3: 28, 4: 14, 5: 7}


def tap_manifest() -> dict:
    return {
        str(b): {
            "output_name": f"block{b}",
            "channels": BLOCK_CHANNELS[b],
            "spatial": BLOCK_SPATIAL[b],
        }
        for b in range(1, 6)
    }


def write_tap_manifest(path) -> None:
    Path(path).write_text(
        json.dumps(tap_manifest(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


class _Builder:
    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)
        self.nodes: list[bytes] = []
        self.inits: list[bytes] = []

    def conv(self, x, cin, cout, k, stride, pad, name):
        std = np.sqrt(2.0 / (cout * k * k))
        w = (self.rng.standard_normal((cout, cin, k, k)) * std).astype(np.float32)
        self.inits.append(onnx_io.tensor_proto(f"{name}.weight", w))
        out = f"{name}.out"
        self.nodes.append(
            onnx_io.node_proto(
                "Conv",
                [x, f"{name}.weight"],
                [out],
                name=name,
                kernel_shape=[k, k],
                strides=[stride, stride],
                pads=[pad, pad, pad, pad],
                dilations=[1, 1],
                group=1,
            )
        )
        return out

    def bn(self, x, channels, name):
        ones = np.ones(channels, dtype=np.float32)
        zeros = np.zeros(channels, dtype=np.float32)
        for suffix, tensor in (
            ("scale", ones),
            ("bias", zeros),
            ("mean", zeros),
            ("var", ones),
        ):
            self.inits.append(onnx_io.tensor_proto(f"{name}.{suffix}", tensor))
        out = f"{name}.out"
        self.nodes.append(
            onnx_io.node_proto(
                "BatchNormalization",
                [x] + [f"{name}.{s}" for s in ("scale", "bias", "mean", "var")],
                [out],
                name=name,
                epsilon=1e-5,
            )
        )
        return out

    def relu(self, x, name, out=None):
        out = out or f"{name}.out"
        self.nodes.append(onnx_io.node_proto("Relu", [x], [out], name=name))
        return out

    def add(self, a, b, name):
        out = f"{name}.out"
        self.nodes.append(onnx_io.node_proto("Add", [a, b], [out], name=name))
        return out

    def maxpool(self, x, name):
        out = f"{name}.out"
        self.nodes.append(
            onnx_io.node_proto(
                "MaxPool",
                [x],
                [out],
                name=name,
                kernel_shape=[3, 3],
                strides=[2, 2],
                pads=[1, 1, 1, 1],
            )
        )
        return out

    def bottleneck(self, x, cin, cmid, cout, stride, name, out=None):
        y = self.conv(x, cin, cmid, 1, 1, 0, f"{name}.conv1")
        y = self.relu(self.bn(y, cmid, f"{name}.bn1"), f"{name}.relu1")
        y = self.conv(y, cmid, cmid, 3, stride, 1, f"{name}.conv2")
        y = self.relu(self.bn(y, cmid, f"{name}.bn2"), f"{name}.relu2")
        y = self.conv(y, cmid, cout, 1, 1, 0, f"{name}.conv3")
        y = self.bn(y, cout, f"{name}.bn3")
        if stride != 1 or cin != cout:
            shortcut = self.conv(x, cin, cout, 1, stride, 0, f"{name}.down.conv")
            shortcut = self.bn(shortcut, cout, f"{name}.down.bn")
        else:
            shortcut = x
        return self.relu(self.add(y, shortcut, f"{name}.add"), f"{name}.relu3", out)


def build_resnet50(seed: int = 0) -> bytes:
    """Serialized five-tap ResNet-50 ONNX model with seeded random weights."""
    b = _Builder(seed)
    x = b.conv("input", 3, 64, 7, 2, 3, "stem.conv")
    block1 = b.relu(b.bn(x, 64, "stem.bn"), "stem.relu", out="block1")
    x = b.maxpool(block1, "stem.pool")
    cin = 64
    for stage_idx, (cmid, cout, blocks, stride) in enumerate(STAGES, start=1):
        for unit in range(blocks):
            unit_stride = stride if unit == 0 else 1
            tap = f"block{stage_idx + 1}" if unit == blocks - 1 else None
            x = b.bottleneck(
                x, cin, cmid, cout, unit_stride, f"layer{stage_idx}.{unit}", out=tap
            )
            cin = cout
    graph_inputs = [onnx_io.value_info("input", (1, 3, 224, 224))]
    graph_outputs = [
        onnx_io.value_info(f"block{i}", (1, BLOCK_CHANNELS[i], BLOCK_SPATIAL[i], BLOCK_SPATIAL[i]))
        for i in range(1, 6)
    ]
    return onnx_io.model_proto(
        b.nodes,
        b.inits,
        graph_inputs,
        graph_outputs,
        graph_name=f"resnet50-tapped-seed{seed}",
    )


def write_resnet50(path, seed: int = 0) -> None:
    Path(path).write_bytes(build_resnet50(seed))


def write_default_sidecar(path) -> None:
    """ImageNet-style preprocessing constants (recorded, never hardcoded
    downstream)."""
    doc = {
        "input_size": [224, 224],
        "channel_order": "RGB",
        "mean": [0.485, 0.456, 0.406],
        "std": [0.229, 0.224, 0.225],
        "resize_filter": "bilinear",
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
