"""File interchange: `.ten` tensors, 16-bit PGM depth maps, key=value configs.

`.ten` layout: magic ``TEN1``, u32 rank, rank * u32 dims, then the float64
payload in row-major order. All integers and floats are little-endian.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"TEN1"


def write_tensor(path, x) -> None:
    x = np.ascontiguousarray(x, dtype=np.float64)
    header = MAGIC + struct.pack("<I", x.ndim)
    header += struct.pack(f"<{x.ndim}I", *x.shape)
    Path(path).write_bytes(header + x.astype("<f8").tobytes(order="C"))


def read_tensor(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a .ten file (bad magic {raw[:4]!r})")
    (rank,) = struct.unpack_from("<I", raw, 4)
    dims = struct.unpack_from(f"<{rank}I", raw, 8)
    payload = raw[8 + 4 * rank :]
    expected = int(np.prod(dims)) if rank else 1
    data = np.frombuffer(payload, dtype="<f8")
    if data.size != expected:
        raise ValueError(
            f"{path}: payload holds {data.size} values, header says {expected}"
        )
    return data.astype(np.float64).reshape(dims)


def write_pgm16(path, depth_m) -> None:
    """Write a (1, H, W) depth map in meters as 16-bit PGM in millimeters."""
    depth_m = np.asarray(depth_m, dtype=np.float64)
    if depth_m.ndim == 3 and depth_m.shape[0] == 1:
        depth_m = depth_m[0]
    if depth_m.ndim != 2:
        raise ValueError(f"depth map must be (1, H, W) or (H, W), got {depth_m.shape}")
    mm = np.clip(np.rint(depth_m * 1000.0), 0, 65535).astype(">u2")
    h, w = mm.shape
    header = f"P5\n{w} {h}\n65535\n".encode("ascii")
    Path(path).write_bytes(header + mm.tobytes(order="C"))


def read_pgm16(path) -> np.ndarray:
    """Read a 16-bit PGM written by :func:`write_pgm16`, back to meters."""
    raw = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(raw[start:pos])
    if fields[0] != b"P5" or fields[3] != b"65535":
        raise ValueError(f"{path}: expected binary 16-bit PGM")
    w, h = int(fields[1]), int(fields[2])
    pos += 1
    mm = np.frombuffer(raw[pos : pos + 2 * w * h], dtype=">u2").reshape(h, w)
    return (mm.astype(np.float64) / 1000.0)[None, :, :]


def write_kv(path, mapping: dict) -> None:
    lines = [f"{k} = {v}" for k, v in mapping.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_kv(path) -> dict[str, str]:
    """Parse a line-oriented ``key = value`` file; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")
