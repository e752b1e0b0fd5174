"""Binary checkpoint format with per-tensor checksums.

Layout: 8-byte magic, 8-byte little-endian header length, JSON header,
raw little-endian tensor payload. The header records name, dtype, shape,
offset, and CRC32 per tensor plus a config snapshot and RNG state, so
save -> load -> save is byte-identical and any payload corruption is
caught with an offset.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
import zlib

import numpy as np

__all__ = ["save_checkpoint", "load_checkpoint", "IntegrityError", "FORMAT_VERSION"]

MAGIC = b"LKCKPT\x00\x01"
FORMAT_VERSION = 1


class IntegrityError(RuntimeError):
    """Corrupt header or payload."""


def save_checkpoint(path, state: dict[str, np.ndarray], config: dict, rng_state=None) -> None:
    tensors = []
    payload = bytearray()
    for name in sorted(state):
        arr = np.ascontiguousarray(state[name])
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        raw = arr.tobytes()
        tensors.append(
            {
                "name": name,
                "dtype": arr.dtype.str,
                "shape": list(arr.shape),
                "offset": len(payload),
                "nbytes": len(raw),
                "crc32": zlib.crc32(raw),
            }
        )
        payload.extend(raw)
    header = json.dumps(
        {"version": FORMAT_VERSION, "config": config, "rng_state": rng_state, "tensors": tensors},
        sort_keys=True,
        separators=(",", ":"),
    ).encode()

    d = os.path.dirname(os.fspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<Q", len(header)))
            f.write(header)
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path):
    """Returns (state dict, config dict, rng_state)."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise IntegrityError(f"{path}: bad magic at offset 0")
    (hlen,) = struct.unpack_from("<Q", blob, len(MAGIC))
    hstart = len(MAGIC) + 8
    if hstart + hlen > len(blob):
        raise IntegrityError(f"{path}: truncated header (need {hlen} bytes at offset {hstart})")
    try:
        header = json.loads(blob[hstart : hstart + hlen])
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"{path}: corrupt header JSON: {exc}") from exc
    if header["version"] > FORMAT_VERSION:
        raise IntegrityError(
            f"{path}: format version {header['version']} is newer than supported {FORMAT_VERSION}"
        )
    base = hstart + hlen
    state = {}
    for t in header["tensors"]:
        lo = base + t["offset"]
        hi = lo + t["nbytes"]
        if hi > len(blob):
            raise IntegrityError(f"{path}: truncated payload for {t['name']} at offset {lo}")
        raw = blob[lo:hi]
        if zlib.crc32(raw) != t["crc32"]:
            raise IntegrityError(f"{path}: checksum mismatch for {t['name']} at offset {lo}")
        state[t["name"]] = np.frombuffer(raw, dtype=np.dtype(t["dtype"])).reshape(t["shape"]).copy()
    return state, header.get("config", {}), header.get("rng_state")
