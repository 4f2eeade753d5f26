"""Minimal ONNX protobuf reader/writer.

Covers the subset this project exchanges: float32 tensors, the node types a
tapped ResNet emits, explicit input/output value infos, and one opset import.
The wire encoding is hand-rolled (no protobuf dependency); repeated numeric
fields are written packed and read in either form. Unknown fields are
skipped on read, so files from richer exporters still parse as long as they
stay inside the supported op set.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError

FLOAT32 = 1
INT64 = 7

_ATTR_FLOAT = 1
_ATTR_INT = 2
_ATTR_STRING = 3
_ATTR_TENSOR = 4
_ATTR_FLOATS = 6
_ATTR_INTS = 7


# ---------------------------------------------------------------- encoding

def _varint(value: int) -> bytes:
    if value < 0:
        value &= (1 << 64) - 1
    out = bytearray()
    while True:
        bits = value & 0x7F
        value >>= 7
        out.append(bits | (0x80 if value else 0))
        if not value:
            return bytes(out)


def _key(field_no: int, wire: int) -> bytes:
    return _varint((field_no << 3) | wire)


def _fv(field_no: int, value: int) -> bytes:
    return _key(field_no, 0) + _varint(value)


def _fb(field_no: int, payload: bytes) -> bytes:
    return _key(field_no, 2) + _varint(len(payload)) + payload


def _fs(field_no: int, text: str) -> bytes:
    return _fb(field_no, text.encode("utf-8"))


def _packed_varints(field_no: int, values) -> bytes:
    return _fb(field_no, b"".join(_varint(int(v)) for v in values))


def tensor_proto(name: str, array: np.ndarray) -> bytes:
    array = np.asarray(array)
    if array.dtype == np.float32:
        dtype = FLOAT32
        raw = array.astype("<f4").tobytes()
    elif array.dtype == np.int64:
        dtype = INT64
        raw = array.astype("<i8").tobytes()
    else:
        raise ModelError(f"unsupported tensor dtype {array.dtype}")
    return (
        _packed_varints(1, array.shape)
        + _fv(2, dtype)
        + _fs(8, name)
        + _fb(9, raw)
    )


def _attribute(name: str, value) -> bytes:
    body = _fs(1, name)
    if isinstance(value, (bool, int, np.integer)):
        body += _fv(3, int(value)) + _fv(20, _ATTR_INT)
    elif isinstance(value, float):
        body += _key(2, 5) + struct.pack("<f", value) + _fv(20, _ATTR_FLOAT)
    elif isinstance(value, str):
        body += _fb(4, value.encode("utf-8")) + _fv(20, _ATTR_STRING)
    elif isinstance(value, np.ndarray):
        body += _fb(5, tensor_proto(name, value)) + _fv(20, _ATTR_TENSOR)
    elif isinstance(value, (list, tuple)) and all(
        isinstance(v, (bool, int, np.integer)) for v in value
    ):
        body += _packed_varints(8, value) + _fv(20, _ATTR_INTS)
    elif isinstance(value, (list, tuple)):
        body += (
            _fb(7, b"".join(struct.pack("<f", float(v)) for v in value))
            + _fv(20, _ATTR_FLOATS)
        )
    else:
        raise ModelError(f"unsupported attribute value {value!r}")
    return body


def node_proto(op_type: str, inputs, outputs, name: str = "", **attrs) -> bytes:
    body = b"".join(_fs(1, s) for s in inputs)
    body += b"".join(_fs(2, s) for s in outputs)
    if name:
        body += _fs(3, name)
    body += _fs(4, op_type)
    for attr_name in sorted(attrs):
        body += _fb(5, _attribute(attr_name, attrs[attr_name]))
    return body


def value_info(name: str, shape, elem_type: int = FLOAT32) -> bytes:
    dims = b"".join(_fb(1, _fv(1, int(d))) for d in shape)
    tensor_type = _fv(1, elem_type) + _fb(2, dims)
    return _fs(1, name) + _fb(2, _fb(1, tensor_type))


def model_proto(
    nodes: list[bytes],
    initializers: list[bytes],
    graph_inputs: list[bytes],
    graph_outputs: list[bytes],
    graph_name: str = "graph",
    opset: int = 13,
    ir_version: int = 8,
    producer: str = "blockprobe",
) -> bytes:
    graph = b"".join(_fb(1, n) for n in nodes)
    graph += _fs(2, graph_name)
    graph += b"".join(_fb(5, t) for t in initializers)
    graph += b"".join(_fb(11, vi) for vi in graph_inputs)
    graph += b"".join(_fb(12, vi) for vi in graph_outputs)
    return (
        _fv(1, ir_version)
        + _fs(2, producer)
        + _fb(7, graph)
        + _fb(8, _fs(1, "") + _fv(2, opset))
    )


# ---------------------------------------------------------------- decoding

def _scan(buf: memoryview):
    pos = 0
    n = len(buf)
    while pos < n:
        key, pos = _read_varint(buf, pos)
        field_no, wire = key >> 3, key & 7
        if wire == 0:
            value, pos = _read_varint(buf, pos)
        elif wire == 2:
            length, pos = _read_varint(buf, pos)
            if pos + length > n:
                raise ModelError("truncated length-delimited field")
            value = buf[pos : pos + length]
            pos += length
        elif wire == 5:
            value = buf[pos : pos + 4]
            pos += 4
        elif wire == 1:
            value = buf[pos : pos + 8]
            pos += 8
        else:
            raise ModelError(f"unsupported wire type {wire}")
        yield field_no, wire, value


def _read_varint(buf, pos):
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise ModelError("truncated varint")
        byte = buf[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 70:
            raise ModelError("varint too long")


def _unpack_varints(payload) -> list[int]:
    out, pos = [], 0
    while pos < len(payload):
        value, pos = _read_varint(payload, pos)
        out.append(value)
    return out


def _decode_tensor(buf) -> tuple[str, np.ndarray]:
    dims: list[int] = []
    dtype = FLOAT32
    name = ""
    raw = b""
    floats: list[bytes] = []
    ints: list[int] = []
    for field_no, wire, value in _scan(buf):
        if field_no == 1:
            dims.extend(_unpack_varints(value) if wire == 2 else [value])
        elif field_no == 2:
            dtype = value
        elif field_no == 4:
            floats.append(bytes(value))
        elif field_no == 7:
            ints.extend(_unpack_varints(value) if wire == 2 else [value])
        elif field_no == 8:
            name = bytes(value).decode("utf-8")
        elif field_no == 9:
            raw = bytes(value)
    if dtype == FLOAT32:
        data = (
            np.frombuffer(raw, dtype="<f4")
            if raw
            else np.frombuffer(b"".join(floats), dtype="<f4")
        )
    elif dtype == INT64:
        data = (
            np.frombuffer(raw, dtype="<i8")
            if raw
            else np.array(ints, dtype=np.int64)
        )
    else:
        raise ModelError(f"unsupported tensor data_type {dtype}")
    try:
        return name, data.reshape(dims)
    except ValueError as exc:
        raise ModelError(f"tensor {name!r} shape/data mismatch") from exc


def _decode_attribute(buf):
    name = ""
    payload = {}
    for field_no, wire, value in _scan(buf):
        if field_no == 1:
            name = bytes(value).decode("utf-8")
        elif field_no == 2:
            payload["f"] = struct.unpack("<f", bytes(value))[0]
        elif field_no == 3:
            payload["i"] = value
        elif field_no == 4:
            payload["s"] = bytes(value).decode("utf-8")
        elif field_no == 5:
            payload["t"] = _decode_tensor(value)[1]
        elif field_no == 7:
            raw = bytes(value)
            payload.setdefault("floats", []).extend(
                struct.unpack(f"<{len(raw) // 4}f", raw)
                if wire == 2
                else [struct.unpack("<f", raw)[0]]
            )
        elif field_no == 8:
            payload.setdefault("ints", []).extend(
                _unpack_varints(value) if wire == 2 else [value]
            )
    for key in ("ints", "floats", "t", "s", "f", "i"):
        if key in payload:
            return name, payload[key]
    return name, None


def _decode_value_info(buf):
    name = ""
    shape: list[int] = []
    for field_no, _, value in _scan(buf):
        if field_no == 1:
            name = bytes(value).decode("utf-8")
        elif field_no == 2:
            for f2, _, tensor_type in _scan(value):
                if f2 != 1:
                    continue
                for f3, _, shape_buf in _scan(tensor_type):
                    if f3 != 2:
                        continue
                    for f4, _, dim_buf in _scan(shape_buf):
                        if f4 != 1:
                            continue
                        dim_value = -1
                        for f5, _, v in _scan(dim_buf):
                            if f5 == 1:
                                dim_value = v
                        shape.append(dim_value)
    return name, shape


@dataclass
class OnnxNode:
    op_type: str
    inputs: list[str]
    outputs: list[str]
    name: str = ""
    attrs: dict = field(default_factory=dict)


@dataclass
class OnnxModel:
    nodes: list[OnnxNode]
    initializers: dict[str, np.ndarray]
    inputs: list[tuple[str, list[int]]]
    outputs: list[tuple[str, list[int]]]
    graph_name: str = ""
    producer: str = ""
    opset: int = 0
    ir_version: int = 0


def _decode_node(buf) -> OnnxNode:
    node = OnnxNode(op_type="", inputs=[], outputs=[])
    for field_no, _, value in _scan(buf):
        if field_no == 1:
            node.inputs.append(bytes(value).decode("utf-8"))
        elif field_no == 2:
            node.outputs.append(bytes(value).decode("utf-8"))
        elif field_no == 3:
            node.name = bytes(value).decode("utf-8")
        elif field_no == 4:
            node.op_type = bytes(value).decode("utf-8")
        elif field_no == 5:
            attr_name, attr_value = _decode_attribute(value)
            node.attrs[attr_name] = attr_value
    return node


def parse_model(data: bytes) -> OnnxModel:
    """Decode a serialized ModelProto; raises ModelError on malformed input."""
    model = OnnxModel(nodes=[], initializers={}, inputs=[], outputs=[])
    buf = memoryview(data)
    graph_buf = None
    for field_no, wire, value in _scan(buf):
        if field_no == 1 and wire == 0:
            model.ir_version = value
        elif field_no == 2 and wire == 2:
            model.producer = bytes(value).decode("utf-8")
        elif field_no == 7 and wire == 2:
            graph_buf = value
        elif field_no == 8 and wire == 2:
            for f2, _, v in _scan(value):
                if f2 == 2:
                    model.opset = max(model.opset, v)
    if graph_buf is None:
        raise ModelError("no graph in model file")
    init_names = set()
    for field_no, _, value in _scan(graph_buf):
        if field_no == 1:
            model.nodes.append(_decode_node(value))
        elif field_no == 2:
            model.graph_name = bytes(value).decode("utf-8")
        elif field_no == 5:
            name, array = _decode_tensor(value)
            model.initializers[name] = array
            init_names.add(name)
        elif field_no == 11:
            model.inputs.append(_decode_value_info(value))
        elif field_no == 12:
            model.outputs.append(_decode_value_info(value))
    model.inputs = [(n, s) for n, s in model.inputs if n not in init_names]
    return model


def load_model(path) -> OnnxModel:
    with open(path, "rb") as fh:
        return parse_model(fh.read())
