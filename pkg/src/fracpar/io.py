"""Binary files with JSON sidecars.

Eigensystems use the FPES layout: magic b"FPES", then little-endian u32
version, K, N, followed by little-endian float64 arrays x (N), w (N),
eigenvalues (K) and phi (N x K, row-major).  Fields and extension rows use
the same header shape with their own magic and dimensions.  Every binary
``name.bin`` has a sidecar ``name.bin.json`` with grids and flags.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
import struct

import numpy as np

from .bases import EigenSystem, build_eigensystem, operator_spec
from .errors import DomainError
from .fracop import SpaceTimeField, TimeGrid

__all__ = [
    "FORMAT_VERSION",
    "save_eigensystem",
    "load_eigensystem",
    "save_field",
    "load_field",
    "save_extension",
    "load_extension",
    "sidecar_path",
    "eigensystem_for",
]

FORMAT_VERSION = 1
_LE = np.dtype("<f8")


def sidecar_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".json")


def _write(path, magic: bytes, dims, arrays, meta):
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<" + "I" * (1 + len(dims)), FORMAT_VERSION, *dims))
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype=_LE).tobytes())
    with open(sidecar_path(path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read(path, magic: bytes, ndims: int):
    path = Path(path)
    raw = path.read_bytes()
    head = 4 + 4 * (1 + ndims)
    if len(raw) < head or raw[:4] != magic:
        raise DomainError(f"{path}: not a {magic.decode()} file")
    version, *dims = struct.unpack("<" + "I" * (1 + ndims), raw[4:head])
    if version != FORMAT_VERSION:
        raise DomainError(f"{path}: unsupported format version {version}")
    data = np.frombuffer(raw, dtype=_LE, offset=head)
    meta = json.loads(sidecar_path(path).read_text()) if sidecar_path(path).exists() else {}
    return dims, data, meta


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer, int, bool, np.bool_)):
        return obj.item() if hasattr(obj, "item") else obj
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


def _spec_meta(es: EigenSystem) -> dict:
    d = es.spec.describe()
    return {
        "kind": d["kind"],
        "parameters": d["params"],
        "shift": d["shift"],
        "K": es.K,
        "N": es.N,
        "truncation": d["domain"],
        "truncated_from": d["truncated_from"],
    }


def save_eigensystem(es: EigenSystem, path) -> None:
    """Write ``path`` (FPES blob) and ``path.json`` (manifest)."""
    if es.spec.kind == "generic_divergence":
        raise DomainError("generic_divergence coefficients are callables and cannot be serialized")
    meta = {"format": "FPES", "version": FORMAT_VERSION, **_spec_meta(es), "zero_mean_mode": bool(es.zero_mean_mode), "metadata": _json_safe(es.metadata)}
    _write(path, b"FPES", (es.K, es.N), (es.x, es.w, es.eigenvalues, es.phi), meta)


def load_eigensystem(path) -> EigenSystem:
    (K, N), data, meta = _read(path, b"FPES", 2)
    if data.size != 2 * N + K + N * K:
        raise DomainError(f"{path}: payload size does not match K={K}, N={N}")
    x, w, ev = data[:N], data[N : 2 * N], data[2 * N : 2 * N + K]
    phi = data[2 * N + K :].reshape(N, K)
    kind = meta.get("kind")
    if kind is None:
        raise DomainError(f"{path}: sidecar manifest missing")
    spec = operator_spec(kind, shift=meta.get("shift", 0.0), **meta.get("parameters", {}))
    return EigenSystem(x.copy(), w.copy(), ev.copy(), phi.copy(), spec, bool(meta.get("zero_mean_mode", False)), meta.get("metadata", {}))


def eigensystem_for(meta: dict) -> EigenSystem:
    """Rebuild the eigensystem a field sidecar refers to."""
    op = meta["operator"]
    spec = operator_spec(op["kind"], shift=op.get("shift", 0.0), **op.get("parameters", {}))
    return build_eigensystem(spec, modes=int(op["K"]), grid_size=int(op["N"]), allow_full=int(op["K"]) > int(op["N"]) // 4)


def _field_meta(time: TimeGrid, es: EigenSystem, **extra) -> dict:
    return {"T": float(time.T), "M": time.M, "operator": _spec_meta(es), **extra}


def save_field(u: SpaceTimeField, path, **flags) -> None:
    """Real or complex (M, N) field; complex values are stored as (re, im) pairs."""
    v = np.asarray(u.values)
    is_complex = bool(np.iscomplexobj(v))
    payload = np.stack([v.real, v.imag], axis=-1) if is_complex else v
    meta = {"format": "FPSF", "version": FORMAT_VERSION, "complex": is_complex, **_field_meta(u.time, u.es), "flags": _json_safe(flags)}
    _write(path, b"FPSF", (u.time.M, u.es.N, int(is_complex)), (payload,), meta)


def load_field(path, es: EigenSystem | None = None) -> SpaceTimeField:
    (M, N, cplx), data, meta = _read(path, b"FPSF", 3)
    if data.size != M * N * (2 if cplx else 1):
        raise DomainError(f"{path}: payload size does not match M={M}, N={N}")
    es = es or eigensystem_for(meta)
    if es.N != N:
        raise DomainError(f"{path}: field has N={N} but the eigensystem has N={es.N}")
    v = data.reshape(M, N, 2) if cplx else data.reshape(M, N)
    v = v[..., 0] + 1j * v[..., 1] if cplx else v.copy()
    return SpaceTimeField(TimeGrid(M, float(meta.get("T", 4.0))), es, v)


def save_extension(base: SpaceTimeField, rows: np.ndarray, s: float, ygrid, path) -> None:
    """Boundary datum followed by the L rows U(., ., y_l), all real (M, N) blocks."""
    rows = np.asarray(rows)
    if np.iscomplexobj(rows):
        if np.max(np.abs(rows.imag)) > 1e-10 * max(float(np.max(np.abs(rows.real))), 1.0):
            raise DomainError("extension rows must be real for storage")
        rows = rows.real
    meta = {
        "format": "FPEX",
        "version": FORMAT_VERSION,
        "s": float(s),
        "ygrid": {"y_min": ygrid.y_min, "growth": ygrid.growth, "L": ygrid.L},
        **_field_meta(base.time, base.es),
    }
    _write(path, b"FPEX", (ygrid.L, base.time.M, base.es.N), (np.real(base.values), rows), meta)


def load_extension(path):
    """Returns (base field, rows (L, M, N), meta)."""
    (L, M, N), data, meta = _read(path, b"FPEX", 3)
    if data.size != (L + 1) * M * N:
        raise DomainError(f"{path}: payload size does not match L={L}, M={M}, N={N}")
    es = eigensystem_for(meta)
    blocks = data.reshape(L + 1, M, N)
    base = SpaceTimeField(TimeGrid(M, float(meta["T"])), es, blocks[0].copy())
    return base, blocks[1:].copy(), meta
