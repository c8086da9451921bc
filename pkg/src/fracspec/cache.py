"""On-disk eigendecomposition cache: versioned binary header, float64
little-endian payload, SHA-256 integrity checksum.  Round-trips are bitwise;
any header or checksum mismatch is a hard failure, never silent."""

from __future__ import annotations

import hashlib
import os
import struct
from pathlib import Path

import numpy as np

from .cache_version import FORMAT_VERSION
from .errors import CacheError
from .opcore import FractionalOrder, Grid1D, Potential, build_grid
from .spectral import SpectralData

_MAGIC = b"FSPC"
_HEADER = struct.Struct("<4sI3dIIB7x32s32s")


def grid_hash(grid: Grid1D) -> bytes:
    h = hashlib.sha256()
    h.update(struct.pack("<ddq", grid.left, grid.right, grid.n))
    return h.digest()


def potential_hash(q: Potential) -> bytes:
    h = hashlib.sha256()
    h.update(q.values.astype("<f8").tobytes())
    h.update(b"\x01" if q.theta_admissible else b"\x00")
    return h.digest()


def cache_key(grid: Grid1D, order: FractionalOrder, q: Potential, m_modes: int) -> str:
    h = hashlib.sha256()
    h.update(grid_hash(grid))
    h.update(struct.pack("<dq", order.a, m_modes))
    h.update(potential_hash(q))
    return h.hexdigest()


def cache_root() -> Path:
    env = os.environ.get("FRACSPEC_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "fracspec"


def cache_path(grid: Grid1D, order: FractionalOrder, q: Potential, m_modes: int) -> Path:
    return cache_root() / (cache_key(grid, order, q, m_modes) + ".fsc")


def save_cache(data: SpectralData, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    g, q = data.grid, data.potential
    header = _HEADER.pack(_MAGIC, FORMAT_VERSION, data.order.a, g.left, g.right,
                          g.n, data.m_modes, 1 if q.theta_admissible else 0,
                          grid_hash(g), potential_hash(q))
    payload = b"".join(arr.astype("<f8").tobytes() for arr in
                       (q.values, data.lambdas, data.modes, data.traces))
    checksum = hashlib.sha256(payload).digest()
    tmp = path.with_suffix(".tmp")
    tmp.write_bytes(header + payload + checksum)
    tmp.replace(path)


def load_cache(path: str | Path) -> SpectralData:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise CacheError(f"cannot read cache file {path}: {exc}") from exc
    if len(blob) < _HEADER.size + 32:
        raise CacheError(f"cache file {path} truncated")
    magic, version, a, left, right, n, m, flag, ghash, phash = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise CacheError(f"cache file {path} has wrong magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CacheError(f"cache version {version} != supported {FORMAT_VERSION}")
    sizes = (n, m, n * m, 2 * m)
    payload_len = 8 * sum(sizes)
    payload = blob[_HEADER.size:_HEADER.size + payload_len]
    checksum = blob[_HEADER.size + payload_len:_HEADER.size + payload_len + 32]
    if len(payload) != payload_len or len(checksum) != 32:
        raise CacheError(f"cache file {path} truncated")
    if hashlib.sha256(payload).digest() != checksum:
        raise CacheError(f"cache file {path} failed its integrity checksum")
    arrays = []
    off = 0
    for count in sizes:
        arrays.append(np.frombuffer(payload, dtype="<f8", count=count, offset=off).copy())
        off += 8 * count
    qvals, lambdas, modes, traces = arrays
    grid = build_grid(left, right, n)
    q = Potential(values=qvals, theta_admissible=bool(flag))
    if grid_hash(grid) != ghash or potential_hash(q) != phash:
        raise CacheError(f"cache file {path} failed its provenance hashes")
    return SpectralData(lambdas=lambdas, modes=modes.reshape(n, m), traces=traces.reshape(m, 2),
                        grid=grid, order=FractionalOrder(a=a), potential=q)
