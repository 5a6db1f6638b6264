"""Parameter-keyed on-disk cache of solved coefficient blocks and result rows.

File layout (little-endian):

    magic  b"HOTWCACH"            8 bytes
    version                      uint16
    header length                uint32
    header                       UTF-8 JSON: {"meta": {...}, "arrays": [[name, dtype, shape], ...]}
    array payloads               concatenated, in header order

Writes go to a temporary file in the same directory and are renamed into
place, so readers never see a partial file.
"""
import hashlib
import json
import logging
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

MAGIC = b"HOTWCACH"
VERSION = 1
ENV_VAR = "HOTW_CACHE_DIR"
_DTYPES = {"c16": "<c16", "f8": "<f8", "i8": "<i8"}


class CacheFormatError(ValueError):
    """A cache file is truncated, foreign, or from another format version."""


def canonical_key(kind, **params):
    """Stable hex digest of a parameter set (floats by exact repr)."""
    def norm(v):
        if isinstance(v, (list, tuple, np.ndarray)):
            return [norm(x) for x in v]
        if isinstance(v, (float, np.floating)):
            return float(v).hex()
        if isinstance(v, (int, np.integer)):
            return int(v)
        return v
    payload = json.dumps({"kind": kind, "v": VERSION, **{k: norm(v) for k, v in params.items()}},
                         sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:32]


def _code(arr):
    for code, dt in _DTYPES.items():
        if arr.dtype == np.dtype(dt).newbyteorder("="):
            return code
    raise TypeError(f"unsupported dtype {arr.dtype}")


def dumps(meta, arrays):
    arrays = {k: np.ascontiguousarray(v) for k, v in arrays.items()}
    layout = [[k, _code(v), list(v.shape)] for k, v in arrays.items()]
    head = json.dumps({"meta": meta, "arrays": layout}, sort_keys=True).encode()
    parts = [MAGIC, struct.pack("<HI", VERSION, len(head)), head]
    for k, code, _ in layout:
        parts.append(arrays[k].astype(_DTYPES[code]).tobytes())
    return b"".join(parts)


def loads(data):
    if len(data) < 14 or data[:8] != MAGIC:
        raise CacheFormatError("not a cache file")
    version, hlen = struct.unpack("<HI", data[8:14])
    if version != VERSION:
        raise CacheFormatError(f"cache version {version}, expected {VERSION}")
    try:
        head = json.loads(data[14:14 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise CacheFormatError("corrupt cache header") from err
    pos = 14 + hlen
    arrays = {}
    for name, code, shape in head["arrays"]:
        dt = np.dtype(_DTYPES[code])
        nbytes = dt.itemsize * int(np.prod(shape, dtype=np.int64))
        if pos + nbytes > len(data):
            raise CacheFormatError("truncated cache file")
        arrays[name] = np.frombuffer(data, dt, int(np.prod(shape, dtype=np.int64)), pos).reshape(shape)
        pos += nbytes
    return head["meta"], arrays


class ResultCache:
    """Directory of cache files named by key."""

    def __init__(self, directory=None):
        directory = directory or os.environ.get(ENV_VAR)
        self.directory = Path(directory) if directory else None

    @property
    def enabled(self):
        return self.directory is not None

    def path(self, key):
        return self.directory / f"{key}.bin"

    def get(self, key):
        if not self.enabled:
            return None
        p = self.path(key)
        try:
            data = p.read_bytes()
        except FileNotFoundError:
            return None
        try:
            return loads(data)
        except CacheFormatError as err:
            log.warning("ignoring cache file %s: %s", p, err)
            return None

    def put(self, key, meta, arrays):
        if not self.enabled:
            return
        self.directory.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".bin")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(dumps(meta, arrays))
            os.replace(tmp, self.path(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def solution_key(kind, params_key, tol):
    return canonical_key(kind, params=params_key, tol=float(tol))


def store_solution(cache, key, sol):
    arrays = {f"b{i}": b for i, b in enumerate(sol.blocks)}
    cache.put(key, {"tail": sol.tail, "repaired": sol.repaired_rows, "count": len(sol.blocks)}, arrays)


def load_solution(cache, key, problem):
    """SpectralSolution for ``problem`` from cached blocks, or None."""
    from .rhsolver import SpectralSolution
    hit = cache.get(key)
    if hit is None:
        return None
    meta, arrays = hit
    blocks = tuple(np.array(arrays[f"b{i}"]) for i in range(meta["count"]))
    if len(blocks) != len(problem.components):
        return None
    degs = [b.shape[0] for b in blocks]
    return SpectralSolution(problem.with_degrees(degs), blocks, float(meta["tail"]),
                            int(meta["repaired"]), {"cached": True})


__all__ = ["ResultCache", "canonical_key", "dumps", "loads", "CacheFormatError", "store_solution",
           "load_solution", "solution_key", "ENV_VAR", "VERSION"]
