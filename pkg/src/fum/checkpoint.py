"""Binary checkpoint format for a :class:`ParamStore` and optional Adam state.

Layout (all integers and floats little-endian)::

    b"FUMCKPT1\\n"
    u64 rng_seed, u32 parameter count
    per parameter, in lexicographic name order:
        u32 name length, utf-8 name, u32 ndim, u64 extent * ndim,
        f64 value * prod(shape)
    u8 has_adam
    if has_adam:
        u64 step, f64 learning_rate, f64 beta1, f64 beta2, f64 epsilon
        per parameter, same order: f64 first moment * n, f64 second moment * n
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from fum.params import AdamState, ParamStore

MAGIC = b"FUMCKPT1\n"


class CheckpointError(ValueError):
    pass


def dumps(params: ParamStore, adam: AdamState | None = None) -> bytes:
    out = [MAGIC, struct.pack("<QI", params.rng_seed, len(params))]
    for name, t in params.items():
        raw = name.encode("utf-8")
        out.append(struct.pack("<I", len(raw)))
        out.append(raw)
        out.append(struct.pack("<I", t.ndim))
        out.append(struct.pack(f"<{t.ndim}Q", *t.shape))
        out.append(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
    if adam is None:
        out.append(b"\x00")
    else:
        out.append(b"\x01")
        out.append(struct.pack("<Qdddd", adam.step, adam.learning_rate, adam.beta1, adam.beta2, adam.epsilon))
        for name, t in params.items():
            m = adam.m.get(name, np.zeros(t.shape))
            v = adam.v.get(name, np.zeros(t.shape))
            out.append(np.ascontiguousarray(m, dtype="<f8").tobytes())
            out.append(np.ascontiguousarray(v, dtype="<f8").tobytes())
    return b"".join(out)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError(f"truncated checkpoint reading {what} at byte {self.pos}")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))

    def floats(self, shape: tuple[int, ...], what: str) -> np.ndarray:
        n = int(np.prod(shape, dtype=np.int64))
        return np.frombuffer(self.take(8 * n, what), dtype="<f8").astype(np.float64).reshape(shape)


def loads(buf: bytes, dtype=np.float64) -> tuple[ParamStore, AdamState | None]:
    r = _Reader(buf)
    if r.take(len(MAGIC), "magic") != MAGIC:
        raise CheckpointError("bad checkpoint magic at byte 0")
    seed, count = r.unpack("<QI", "header")
    store = ParamStore(rng_seed=seed, dtype=dtype)
    for _ in range(count):
        (n,) = r.unpack("<I", "name length")
        start = r.pos
        try:
            name = r.take(n, "name").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CheckpointError(f"undecodable parameter name at byte {start}") from exc
        (ndim,) = r.unpack("<I", f"rank of {name!r}")
        shape = r.unpack(f"<{ndim}Q", f"shape of {name!r}")
        store.add(name, r.floats(shape, f"values of {name!r}"))
    (flag,) = r.unpack("<B", "adam flag")
    adam = None
    if flag == 1:
        step, lr, b1, b2, eps = r.unpack("<Qdddd", "adam header")
        adam = AdamState(learning_rate=lr, beta1=b1, beta2=b2, epsilon=eps, step=step)
        for name, t in store.items():
            adam.m[name] = r.floats(t.shape, f"first moment of {name!r}")
            adam.v[name] = r.floats(t.shape, f"second moment of {name!r}")
    elif flag != 0:
        raise CheckpointError(f"bad adam flag {flag} at byte {r.pos - 1}")
    if r.pos != len(buf):
        raise CheckpointError(f"trailing bytes after checkpoint at byte {r.pos}")
    return store, adam


def save_checkpoint(params: ParamStore, path, adam: AdamState | None = None) -> None:
    Path(path).write_bytes(dumps(params, adam))


def load_checkpoint(path, dtype=np.float64) -> tuple[ParamStore, AdamState | None]:
    return loads(Path(path).read_bytes(), dtype=dtype)
