"""Checkpoint format: JSON header plus named little-endian tensor payload.

Layout: magic ``TTSG``, format version and header length (uint32, LE), the
UTF-8 JSON header (config, trained steps, phoneme inventory, tensor
manifest), then the raw tensor bytes in manifest order. Tensors are float32
unless the model was trained in double precision.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from ..errors import FormatError
from .model import GeneratorConfig, GeneratorModel, TokenGenerator

CHECKPOINT_MAGIC = b"TTSG"
CHECKPOINT_VERSION = 1

_PREFIX = struct.Struct("<4sII")

_DTYPES = {"float32": (torch.float32, "<f4"), "float64": (torch.float64, "<f8")}


def save_checkpoint(model: GeneratorModel, path: str | Path) -> None:
    path = Path(path)
    dtype_name = "float64" if model.dtype == torch.float64 else "float32"
    _, np_dtype = _DTYPES[dtype_name]
    manifest = []
    blobs = []
    offset = 0
    for name, param in model.net.state_dict().items():
        arr = param.detach().cpu().numpy().astype(np_dtype, copy=False)
        blob = arr.tobytes(order="C")
        manifest.append(
            {"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(blob)}
        )
        blobs.append(blob)
        offset += len(blob)
    header = {
        "format_version": CHECKPOINT_VERSION,
        "config": asdict(model.config),
        "trained_steps": model.trained_steps,
        "src_inventory": list(model.src_inventory) if model.src_inventory else None,
        "dtype": dtype_name,
        "tensors": manifest,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: str | Path) -> GeneratorModel:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(data) < _PREFIX.size:
        raise FormatError(f"{path}: truncated checkpoint prefix")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    try:
        header = json.loads(data[_PREFIX.size : _PREFIX.size + header_len])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid checkpoint header: {exc}") from exc
    try:
        config = GeneratorConfig(**header["config"])
        dtype_name = header["dtype"]
        manifest = header["tensors"]
        trained_steps = int(header["trained_steps"])
        inventory = header["src_inventory"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: incomplete checkpoint header: {exc}") from exc
    if dtype_name not in _DTYPES:
        raise FormatError(f"{path}: unknown tensor dtype {dtype_name!r}")
    torch_dtype, np_dtype = _DTYPES[dtype_name]

    net = TokenGenerator(config).to(torch_dtype)
    state = net.state_dict()
    expected_names = list(state.keys())
    stored_names = [entry["name"] for entry in manifest]
    if stored_names != expected_names:
        missing = set(expected_names) - set(stored_names)
        extra = set(stored_names) - set(expected_names)
        raise FormatError(
            f"{path}: tensor manifest does not match architecture "
            f"(missing: {sorted(missing)}, unexpected: {sorted(extra)})"
        )
    base = _PREFIX.size + header_len
    payload = data[base:]
    new_state = {}
    for entry in manifest:
        shape = tuple(entry["shape"])
        if tuple(state[entry["name"]].shape) != shape:
            raise FormatError(
                f"{path}: tensor {entry['name']} has shape {shape}, architecture "
                f"expects {tuple(state[entry['name']].shape)}"
            )
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(payload):
            raise FormatError(f"{path}: truncated payload at tensor {entry['name']}")
        arr = np.frombuffer(payload, dtype=np_dtype, count=int(np.prod(shape)) or 1, offset=start)
        if int(np.prod(shape)) == 0:
            arr = arr[:0]
        new_state[entry["name"]] = torch.from_numpy(arr.reshape(shape).copy())
    net.load_state_dict(new_state, strict=True)
    net.eval()
    return GeneratorModel(
        config=config,
        net=net,
        trained_steps=trained_steps,
        src_inventory=tuple(inventory) if inventory else None,
    )
