"""Versioned binary snapshots of engine state.

Container layout (all little-endian), magic ``CMX1``:

    magic[4] version:u16 tick:u64 m:u16 n:u32
    digest_len:u8 digest[digest_len]          sha256 of the data matrix
    labels: m x (len:u8 utf8[len])
    similarity: m*m float64
    edge_count:u32
    edges: i:u16 j:u16 ema:f64 admitted_at:i64 last_coherence_at:i64 (-1 none)
           summary_len:u32 summary[summary_len] float64

The similarity block is the complete layer-1 edge set; the edge records are
the admitted layer-2 set with their per-time coherence summaries. Reals are
stored bit-exact so a round trip reproduces the snapshot exactly.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import SnapshotFormatError

MAGIC = b"CMX1"
VERSION = 1


@dataclass(frozen=True)
class SnapshotEdge:
    i: int
    j: int
    ema: float
    admitted_at: int
    last_coherence_at: Optional[int]
    summary: Optional[np.ndarray]  # per-time mean coherence, float64

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SnapshotEdge):
            return NotImplemented
        if (self.i, self.j, self.ema, self.admitted_at, self.last_coherence_at) != (
            other.i, other.j, other.ema, other.admitted_at, other.last_coherence_at
        ):
            return False
        if (self.summary is None) != (other.summary is None):
            return False
        return self.summary is None or bool(np.array_equal(self.summary, other.summary))


@dataclass(frozen=True)
class Snapshot:
    tick: int
    digest: bytes
    labels: tuple[str, ...]
    similarity: np.ndarray
    edges: tuple[SnapshotEdge, ...]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Snapshot):
            return NotImplemented
        return (
            self.tick == other.tick
            and self.digest == other.digest
            and self.labels == other.labels
            and bool(np.array_equal(self.similarity, other.similarity))
            and self.edges == other.edges
        )


def data_digest(matrix: np.ndarray) -> bytes:
    return hashlib.sha256(np.ascontiguousarray(matrix, dtype=np.float64).tobytes()).digest()


def to_bytes(snap: Snapshot) -> bytes:
    m = len(snap.labels)
    n = snap.edges[0].summary.shape[0] if snap.edges and snap.edges[0].summary is not None else 0
    if snap.similarity.shape != (m, m):
        raise ValueError("similarity shape disagrees with labels")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<HQHI", VERSION, snap.tick, m, n)
    out += struct.pack("<B", len(snap.digest))
    out += snap.digest
    for label in snap.labels:
        enc = label.encode("utf-8")
        if len(enc) > 255:
            raise ValueError(f"label too long: {label!r}")
        out += struct.pack("<B", len(enc))
        out += enc
    out += np.ascontiguousarray(snap.similarity, dtype="<f8").tobytes()
    out += struct.pack("<I", len(snap.edges))
    for e in snap.edges:
        last = -1 if e.last_coherence_at is None else e.last_coherence_at
        out += struct.pack("<HHdqq", e.i, e.j, e.ema, e.admitted_at, last)
        if e.summary is None:
            out += struct.pack("<I", 0)
        else:
            arr = np.ascontiguousarray(e.summary, dtype="<f8")
            out += struct.pack("<I", arr.shape[0])
            out += arr.tobytes()
    return bytes(out)


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise SnapshotFormatError(
                f"truncated snapshot: wanted {count} bytes at offset {self.pos}"
            )
        chunk = self.data[self.pos:self.pos + count]
        self.pos += count
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def from_bytes(data: bytes) -> Snapshot:
    cur = _Cursor(data)
    if cur.take(4) != MAGIC:
        raise SnapshotFormatError("bad magic; not a wavemux snapshot")
    version, tick, m, _n = cur.unpack("<HQHI")
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {version}")
    (digest_len,) = cur.unpack("<B")
    digest = cur.take(digest_len)
    labels = []
    for _ in range(m):
        (ln,) = cur.unpack("<B")
        try:
            labels.append(cur.take(ln).decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise SnapshotFormatError(f"bad label encoding: {exc}") from None
    sim = np.frombuffer(cur.take(8 * m * m), dtype="<f8").reshape(m, m).copy()
    (edge_count,) = cur.unpack("<I")
    edges = []
    for _ in range(edge_count):
        i, j, ema, admitted_at, last = cur.unpack("<HHdqq")
        (slen,) = cur.unpack("<I")
        summary = None
        if slen:
            summary = np.frombuffer(cur.take(8 * slen), dtype="<f8").copy()
        edges.append(
            SnapshotEdge(
                i=i, j=j, ema=ema, admitted_at=admitted_at,
                last_coherence_at=None if last < 0 else last,
                summary=summary,
            )
        )
    if cur.pos != len(data):
        raise SnapshotFormatError(f"{len(data) - cur.pos} trailing bytes after snapshot")
    return Snapshot(
        tick=tick, digest=digest, labels=tuple(labels), similarity=sim,
        edges=tuple(edges),
    )


def write_snapshot(snap: Snapshot, directory: str | Path) -> Path:
    """Atomic write via temp file + rename; returns the final path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"snap_{snap.tick:012d}.cmx"
    tmp = path.with_suffix(".tmp")
    tmp.write_bytes(to_bytes(snap))
    os.replace(tmp, path)
    return path


def read_snapshot(path: str | Path) -> Snapshot:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise SnapshotFormatError(f"cannot read snapshot {path}: {exc}") from None
    return from_bytes(data)
