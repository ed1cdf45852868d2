"""Bit-exact tensor files plus JSON manifests for tasks and trained models.

Tensor container layout (little-endian, all offsets fixed):

    bytes 0..3    magic "SEMB"
    byte  4       version, currently 1
    byte  5       dtype: 0 = 32-bit float, 1 = 64-bit float
    bytes 6..7    reserved, written as zero
    bytes 8..11   ndim (u32)
    bytes 12..15  zero padding (keeps dims 8-byte aligned)
    then          ndim x u64 dims, then row-major payload

32-bit payloads are promoted to float64 in memory; writes of float32
arrays keep the 32-bit payload. Manifests are sorted-key JSON so identical
inputs produce identical bytes. Loading never writes anything.
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .bridge import BridgeModel, EosNormEstimate
from .errors import (
    BadMagic,
    BadManifest,
    DimOverflow,
    ManifestMismatch,
    MissingFile,
    ShapeMismatch,
    TruncatedPayload,
    UnsupportedDtype,
    UnsupportedVersion,
)
from .inference import BlendConfig
from .task import FewShotTask

MAGIC = b"SEMB"
VERSION = 1
DTYPE_F32, DTYPE_F64 = 0, 1
_HEADER = struct.Struct("<4sBBHI")
HEADER_SIZE = 16
_PAD = b"\x00" * (HEADER_SIZE - _HEADER.size)
MAX_ELEMENTS = 1 << 50  # refuse absurd allocations before they happen

_NUMPY_DTYPES = {DTYPE_F32: np.dtype("<f4"), DTYPE_F64: np.dtype("<f8")}

TASK_TENSORS = (
    "train_x", "train_y", "val_x", "val_y", "test_x", "test_y",
    "prompt_eos", "text_txt", "w_txt",
)
MODEL_TENSORS = ("inverse_projection", "class_bias")
SCHEMA_VERSION = 1


def write_tensor(path, array) -> Path:
    """Write an array; float32 stays 32-bit on disk, anything else is f64."""
    path = Path(path)
    arr = np.asarray(array)
    if arr.dtype == np.float32:
        code, disk = DTYPE_F32, arr.astype("<f4", copy=False)
    else:
        code, disk = DTYPE_F64, arr.astype("<f8", copy=False)
    header = _HEADER.pack(MAGIC, VERSION, code, 0, arr.ndim) + _PAD
    dims = struct.pack(f"<{arr.ndim}Q", *arr.shape)
    path.write_bytes(header + dims + np.ascontiguousarray(disk).tobytes())
    return path


def read_tensor(path) -> np.ndarray:
    """Read a tensor file; returns float64 regardless of payload width."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    raw = path.read_bytes()
    if len(raw) < 4:
        raise TruncatedPayload(f"{path}: shorter than the magic")
    if raw[:4] != MAGIC:
        raise BadMagic(f"{path}: expected {MAGIC!r}, found {raw[:4]!r}")
    if len(raw) < HEADER_SIZE:
        raise TruncatedPayload(f"{path}: header truncated")
    _, version, dtype_code, _, ndim = _HEADER.unpack(raw[: _HEADER.size])
    if version != VERSION:
        raise UnsupportedVersion(f"{path}: version {version}")
    if dtype_code not in _NUMPY_DTYPES:
        raise UnsupportedDtype(f"{path}: dtype code {dtype_code}")
    dims_end = HEADER_SIZE + 8 * ndim
    if len(raw) < dims_end:
        raise TruncatedPayload(f"{path}: dims truncated")
    dims = struct.unpack(f"<{ndim}Q", raw[HEADER_SIZE:dims_end])
    n_elements = 1
    for d in dims:
        n_elements *= d
    if n_elements > MAX_ELEMENTS:
        raise DimOverflow(f"{path}: {n_elements} elements declared")
    dtype = _NUMPY_DTYPES[dtype_code]
    expected = n_elements * dtype.itemsize
    actual = len(raw) - dims_end
    if actual != expected:
        raise TruncatedPayload(
            f"{path}: payload is {actual} bytes, header promises {expected}"
        )
    flat = np.frombuffer(raw, dtype=dtype, count=n_elements, offset=dims_end)
    return flat.reshape(dims).astype(np.float64)


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dump_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_json(path: Path) -> dict:
    if not path.exists():
        raise MissingFile(str(path))
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BadManifest(f"{path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise BadManifest(f"{path}: expected a JSON object")
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise BadManifest(f"{path}: unsupported schema_version")
    return payload


# -- tasks ---------------------------------------------------------------


def save_task(task: FewShotTask, out_dir) -> Path:
    """Write tensors plus manifest.json; returns the manifest path."""
    task.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    for name in TASK_TENSORS:
        value = getattr(task, name)
        if name.endswith("_y"):
            value = np.asarray(value, dtype=np.float64)
        files[name] = f"{name}.semb"
        write_tensor(out_dir / files[name], value)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "dataset": task.provenance.get("dataset", "synthetic"),
        "encoder": task.provenance.get("encoder", "synthetic"),
        "d": task.dim,
        "d_t": task.eos_dim,
        "temperature": task.temperature,
        "class_names": list(task.class_names),
        "shots": task.shots,
        "seed": task.seed,
        "files": files,
        "provenance": task.provenance,
    }
    path = out_dir / "manifest.json"
    _dump_json(path, manifest)
    return path


def load_task(manifest_path) -> FewShotTask:
    """Load and fully re-validate a task; raises rather than repairing."""
    manifest_path = Path(manifest_path)
    manifest = _load_json(manifest_path)
    try:
        files = manifest["files"]
        tensors = {
            name: read_tensor(manifest_path.parent / files[name])
            for name in TASK_TENSORS
        }
        task = FewShotTask(
            class_names=list(manifest["class_names"]),
            shots=int(manifest["shots"]),
            temperature=float(manifest["temperature"]),
            seed=int(manifest["seed"]),
            provenance=dict(manifest.get("provenance", {})),
            **tensors,
        )
        declared = (int(manifest["d"]), int(manifest["d_t"]))
    except KeyError as exc:
        raise BadManifest(f"{manifest_path}: missing key {exc}") from exc
    if (task.w_txt.shape[1], task.w_txt.shape[0]) != declared:
        raise ShapeMismatch(
            f"manifest declares (d, d_t)={declared}, "
            f"w_txt is {task.w_txt.shape[::-1]}"
        )
    return task.validate()


# -- models --------------------------------------------------------------


def save_model(
    model: BridgeModel,
    out_dir,
    task_manifest_path,
    blend: BlendConfig | None = None,
    train_info: dict | None = None,
) -> Path:
    """Write model tensors plus model.json bound to a task manifest hash."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    for name in MODEL_TENSORS:
        files[name] = f"{name}.semb"
        write_tensor(out_dir / files[name], getattr(model, name))
    payload = {
        "schema_version": SCHEMA_VERSION,
        "task_manifest_sha256": sha256_file(task_manifest_path),
        "eos_norm": {
            "value": model.eos_norm.value,
            "per_class": model.eos_norm.per_class.tolist(),
        },
        "forward_projection_ref": model.forward_projection_ref,
        "blend": asdict(blend) if blend is not None else None,
        "train": train_info,
        "files": files,
    }
    path = out_dir / "model.json"
    _dump_json(path, payload)
    return path


def load_model(model_path, task_manifest_path):
    """Load (BridgeModel, BlendConfig | None, metadata); checks the task hash."""
    model_path = Path(model_path)
    if model_path.is_dir():
        model_path = model_path / "model.json"
    payload = _load_json(model_path)
    stored = payload.get("task_manifest_sha256")
    actual = sha256_file(task_manifest_path)
    if stored != actual:
        raise ManifestMismatch(
            f"{model_path} was trained against a different task manifest"
        )
    try:
        files = payload["files"]
        tensors = {
            name: read_tensor(model_path.parent / files[name])
            for name in MODEL_TENSORS
        }
        eos = EosNormEstimate(
            value=float(payload["eos_norm"]["value"]),
            per_class=np.asarray(payload["eos_norm"]["per_class"], dtype=np.float64),
        )
    except KeyError as exc:
        raise BadManifest(f"{model_path}: missing key {exc}") from exc
    model = BridgeModel(
        eos_norm=eos,
        forward_projection_ref=payload.get("forward_projection_ref", ""),
        **tensors,
    )
    blend = payload.get("blend")
    blend_cfg = BlendConfig(**blend).validate() if blend is not None else None
    meta = {"train": payload.get("train"), "task_manifest_sha256": stored}
    return model, blend_cfg, meta
