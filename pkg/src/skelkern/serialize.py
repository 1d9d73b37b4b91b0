"""Descriptor and model files.

Descriptor record, all integers and floats little-endian::

    magic   4s   b"SKDS"
    version u16
    kind    u8   1 = sck, 2 = dck
    _pad    u8
    J       u32
    Z2      u32
    Z3      u32
    gamma   f64
    length  u64  number of payload floats
    seq_id  u16 byte count + utf-8
    dck only:
      gamma_star  f64
      pair_mode   u8   0 = paper-size, 1 = strict
      subset name u16 byte count + utf-8
      joint ids   J x u32
    payload length x f64

The text form carries the same fields as ``key value`` lines followed by
``vector`` and one ``%.17g`` number per line, so it round-trips exactly.

Models are stored as ``.npz`` archives (no pickling) with a JSON header.
"""

import json
import struct

import numpy as np

from .classifier import TrainedModel
from .dck import DckDescriptor
from .errors import ParseError
from .sck import SckDescriptor

__all__ = [
    "MAGIC",
    "VERSION",
    "descriptor_to_bytes",
    "descriptor_from_bytes",
    "write_descriptor",
    "read_descriptor",
    "descriptor_to_text",
    "descriptor_from_text",
    "describe",
    "save_model",
    "load_model",
]

MAGIC = b"SKDS"
VERSION = 1
MODEL_VERSION = 1
_KINDS = {1: "sck", 2: "dck"}
_PAIR_MODES = ("paper-size", "strict")
_HEAD = struct.Struct("<4sHBBIIIdQ")


def _pack_str(s):
    b = s.encode("utf-8")
    return struct.pack("<H", len(b)) + b


class _Reader:
    def __init__(self, buf, path):
        self.buf, self.pos, self.path = buf, 0, path

    def take(self, fmt):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.buf):
            raise ParseError(f"truncated record at byte {self.pos}", self.path)
        out = struct.unpack_from(fmt, self.buf, self.pos)
        self.pos += size
        return out

    def string(self):
        (n,) = self.take("<H")
        (raw,) = self.take(f"<{n}s")
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise ParseError(f"bad utf-8 string at byte {self.pos - n}", self.path) from None


def descriptor_to_bytes(desc):
    v = np.ascontiguousarray(desc.vector, dtype="<f8")
    if isinstance(desc, SckDescriptor):
        kind, j = 1, desc.joint_count
    elif isinstance(desc, DckDescriptor):
        kind, j = 2, len(desc.joint_ids)
    else:
        raise TypeError(f"not a descriptor: {type(desc).__name__}")
    out = [_HEAD.pack(MAGIC, VERSION, kind, 0, j, desc.z2, desc.z3, desc.gamma, v.size),
           _pack_str(desc.seq_id)]
    if kind == 2:
        out.append(struct.pack("<dB", desc.gamma_star, _PAIR_MODES.index(desc.pair_mode)))
        out.append(_pack_str(desc.subset_name))
        out.append(struct.pack(f"<{j}I", *desc.joint_ids))
    out.append(v.tobytes())
    return b"".join(out)


def descriptor_from_bytes(buf, path=None):
    r = _Reader(buf, path)
    magic, version, kind, _, j, z2, z3, gamma, length = r.take(_HEAD.format)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}", path)
    if version != VERSION:
        raise ParseError(f"unsupported version {version}", path)
    if kind not in _KINDS:
        raise ParseError(f"unknown descriptor kind {kind}", path)
    seq_id = r.string()
    if kind == 2:
        gamma_star, mode = r.take("<dB")
        if mode >= len(_PAIR_MODES):
            raise ParseError(f"unknown pair mode {mode}", path)
        subset = r.string()
        ids = r.take(f"<{j}I")
    if len(buf) - r.pos != 8 * length:
        raise ParseError(
            f"payload holds {len(buf) - r.pos} bytes, header promises {8 * length}", path)
    vector = np.frombuffer(buf, dtype="<f8", count=length, offset=r.pos).astype(np.float64)
    if kind == 1:
        return SckDescriptor(vector, j, z2, z3, gamma, seq_id=seq_id)
    return DckDescriptor(vector, tuple(ids), z2, z3, gamma, gamma_star, _PAIR_MODES[mode],
                         subset_name=subset, seq_id=seq_id)


def write_descriptor(path, desc):
    with open(path, "wb") as fh:
        fh.write(descriptor_to_bytes(desc))


def read_descriptor(path):
    with open(path, "rb") as fh:
        return descriptor_from_bytes(fh.read(), str(path))


def _header_fields(desc):
    if isinstance(desc, SckDescriptor):
        fields = [("kind", "sck"), ("J", desc.joint_count)]
    else:
        fields = [("kind", "dck"), ("J", len(desc.joint_ids))]
    fields += [("Z2", desc.z2), ("Z3", desc.z3), ("gamma", repr(float(desc.gamma))),
               ("length", desc.vector.size), ("seq_id", desc.seq_id)]
    if isinstance(desc, DckDescriptor):
        fields += [("gamma_star", repr(float(desc.gamma_star))),
                   ("pair_mode", desc.pair_mode),
                   ("subset", desc.subset_name),
                   ("joint_ids", " ".join(map(str, desc.joint_ids)))]
    return fields


def describe(desc):
    """Header fields as aligned ``key: value`` lines."""
    fields = _header_fields(desc) + [("out_of_range", desc.out_of_range)]
    width = max(len(k) for k, _ in fields)
    return "\n".join(f"{k:<{width}} : {v}" for k, v in fields)


def descriptor_to_text(desc):
    lines = [f"SKDS-TEXT {VERSION}"]
    lines += [f"{k} {v}".rstrip() for k, v in _header_fields(desc)]
    lines.append("vector")
    lines += ["%.17g" % x for x in desc.vector]
    return "\n".join(lines) + "\n"


def descriptor_from_text(text, path=None):
    lines = text.splitlines()
    if not lines or lines[0].split() != ["SKDS-TEXT", str(VERSION)]:
        raise ParseError("missing SKDS-TEXT header", path, 1)
    head = {}
    n = 1
    while n < len(lines) and lines[n] != "vector":
        key, _, value = lines[n].partition(" ")
        head[key] = value
        n += 1
    if n == len(lines):
        raise ParseError("missing 'vector' line", path, n)
    try:
        vector = np.array([float(x) for x in lines[n + 1:]], dtype=np.float64)
        length = int(head["length"])
        common = dict(z2=int(head["Z2"]), z3=int(head["Z3"]), gamma=float(head["gamma"]),
                      seq_id=head.get("seq_id", ""))
        j = int(head["J"])
        kind = head["kind"]
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad text descriptor: {exc}", path) from None
    if vector.size != length:
        raise ParseError(f"{vector.size} values, header promises {length}", path)
    if kind == "sck":
        return SckDescriptor(vector, j, **common)
    if kind == "dck":
        ids = tuple(int(x) for x in head.get("joint_ids", "").split())
        return DckDescriptor(vector, ids, gamma_star=float(head["gamma_star"]),
                             pair_mode=head["pair_mode"], subset_name=head.get("subset", ""),
                             **common)
    raise ParseError(f"unknown kind {kind!r}", path)


def save_model(path, model):
    meta = {
        "version": MODEL_VERSION,
        "classes": list(model.classes),
        "C": model.C,
        "tol": model.tol,
        "kind": model.kind,
        "meta": model.meta,
    }
    with open(path, "wb") as fh:
        np.savez(fh, weights=model.weights, bias=model.bias,
                 header=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8))


def load_model(path):
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(bytes(z["header"]).decode())
            weights, bias = z["weights"].copy(), z["bias"].copy()
    except (OSError, ValueError, KeyError) as exc:
        raise ParseError(f"unreadable model file: {exc}", str(path)) from None
    if meta.get("version") != MODEL_VERSION:
        raise ParseError(f"unsupported model version {meta.get('version')}", str(path))
    return TrainedModel(weights, bias, tuple(meta["classes"]), meta["C"], meta["tol"],
                        meta["kind"], meta["meta"])
