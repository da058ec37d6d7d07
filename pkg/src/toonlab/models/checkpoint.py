"""CGWT checkpoint archive: magic, version, JSON manifest, raw f32 payload.

Layout (all integers little-endian):

    bytes 0..3    magic "CGWT"
    bytes 4..7    format version (u32), currently 1
    bytes 8..11   header length (u32)
    header        UTF-8 JSON: {"tensors": [{name, shape, dtype, offset,
                  nbytes}, ...], "metadata": {...}}
    payload       tensor data, little-endian float32, in manifest order

Offsets are relative to the payload start.  save -> load round-trips every
tensor bit-exactly.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

from ..nncore.layers import Module
from .nets import (
    DiscriminatorLayout,
    DiscriminatorNet,
    GeneratorLayout,
    GeneratorNet,
)

MAGIC = b"CGWT"
VERSION = 1


class CheckpointError(ValueError):
    """Base class for unreadable or inconsistent checkpoints."""


class BadMagicError(CheckpointError):
    pass


class UnknownVersionError(CheckpointError):
    pass


class TruncatedPayloadError(CheckpointError):
    pass


def write_archive(path, tensors: dict[str, np.ndarray], metadata: dict) -> None:
    """Write tensors + metadata atomically (temp file, then rename)."""
    entries = []
    blobs = []
    offset = 0
    for name, arr in tensors.items():
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        entries.append({
            "name": name,
            "shape": list(arr.shape),
            "dtype": "f32",
            "offset": offset,
            "nbytes": len(data),
        })
        blobs.append(data)
        offset += len(data)
    header = json.dumps({"tensors": entries, "metadata": metadata},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")

    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<II", VERSION, len(header)))
            f.write(header)
            for blob in blobs:
                f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_archive(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic (not a CGWT checkpoint)")
    version, header_len = struct.unpack("<II", raw[4:12])
    if version != VERSION:
        raise UnknownVersionError(f"{path}: unknown checkpoint version {version}")
    if len(raw) < 12 + header_len:
        raise TruncatedPayloadError(f"{path}: header extends past end of file")
    try:
        header = json.loads(raw[12 : 12 + header_len].decode("utf-8"))
        entries = header["tensors"]
        metadata = header["metadata"]
    except (ValueError, KeyError, UnicodeDecodeError) as e:
        raise CheckpointError(f"{path}: unreadable manifest: {e}") from e

    payload = raw[12 + header_len :]
    tensors: dict[str, np.ndarray] = {}
    for entry in entries:
        name = entry["name"]
        if name in tensors:
            raise CheckpointError(f"{path}: duplicate tensor name {name!r}")
        if entry["dtype"] != "f32":
            raise CheckpointError(f"{path}: unsupported element type {entry['dtype']!r}")
        shape = tuple(entry["shape"])
        nbytes = entry["nbytes"]
        if nbytes != int(np.prod(shape, dtype=np.int64)) * 4:
            raise CheckpointError(f"{path}: manifest entry {name!r} has inconsistent size")
        start, end = entry["offset"], entry["offset"] + nbytes
        if start < 0 or end > len(payload):
            raise TruncatedPayloadError(
                f"{path}: tensor {name!r} extends past end of payload")
        tensors[name] = np.frombuffer(payload[start:end], dtype="<f4").reshape(shape).copy()
    return tensors, metadata


def collect_net_state(net: Module, prefix: str, with_optimizer: bool = True):
    """Flatten a module tree into named tensors + per-parameter step counts."""
    tensors: dict[str, np.ndarray] = {}
    steps: dict[str, int] = {}
    for name, p in net.named_parameters(prefix + "."):
        tensors[name] = p.value
        if with_optimizer:
            tensors[name + ".adam_m"] = p.m
            tensors[name + ".adam_v"] = p.v
            steps[name] = p.step_count
    for name, buf in net.named_buffers(prefix + "."):
        tensors[name] = buf
    return tensors, steps


def apply_net_state(net: Module, tensors: dict[str, np.ndarray], prefix: str,
                    steps: dict[str, int] | None = None, with_optimizer: bool = True) -> None:
    """Copy archived tensors into an existing module tree, in place."""
    def fetch(name: str) -> np.ndarray:
        if name not in tensors:
            raise CheckpointError(f"checkpoint is missing tensor {name!r}")
        return tensors[name]

    for name, p in net.named_parameters(prefix + "."):
        value = fetch(name)
        if value.shape != p.value.shape:
            raise CheckpointError(
                f"tensor {name!r} has shape {value.shape}, expected {p.value.shape}")
        p.value[...] = value
        if with_optimizer:
            p.m[...] = fetch(name + ".adam_m")
            p.v[...] = fetch(name + ".adam_v")
            p.step_count = int(steps.get(name, 0)) if steps else 0
    for name, buf in net.named_buffers(prefix + "."):
        buf[...] = fetch(name)


def save_checkpoint(nets: dict[str, Module], metadata: dict, path) -> None:
    """Persist named nets (e.g. generator/discriminator) plus metadata."""
    tensors: dict[str, np.ndarray] = {}
    meta = dict(metadata)
    arch = {}
    steps: dict[str, int] = {}
    for key, net in nets.items():
        t, s = collect_net_state(net, key)
        tensors.update(t)
        steps.update(s)
        if isinstance(net, GeneratorNet):
            arch[key] = {"kind": "generator", "layout": net.layout.to_dict()}
        elif isinstance(net, DiscriminatorNet):
            arch[key] = {"kind": "discriminator", "layout": net.layout.to_dict()}
        else:
            raise CheckpointError(f"cannot archive net of type {type(net).__name__}")
    meta["arch"] = arch
    meta["param_steps"] = steps
    write_archive(path, tensors, meta)


def load_checkpoint(path) -> tuple[dict[str, Module], dict]:
    """Rebuild the archived nets and return them with the metadata."""
    tensors, metadata = read_archive(path)
    arch = metadata.get("arch")
    if not isinstance(arch, dict) or not arch:
        raise CheckpointError(f"{path}: checkpoint holds no network description")
    steps = metadata.get("param_steps", {})
    nets: dict[str, Module] = {}
    for key, desc in arch.items():
        if desc["kind"] == "generator":
            net = GeneratorNet(seed=0, layout=GeneratorLayout.from_dict(desc["layout"]))
        elif desc["kind"] == "discriminator":
            net = DiscriminatorNet(seed=0, layout=DiscriminatorLayout.from_dict(desc["layout"]))
        else:
            raise CheckpointError(f"{path}: unknown net kind {desc['kind']!r}")
        apply_net_state(net, tensors, key, steps)
        nets[key] = net
    return nets, metadata
