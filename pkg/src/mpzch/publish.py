"""Frozen snapshots and row-level delta logs for inference replicas.

Snapshot file (``.mpzc``), little-endian::

    b"MPZC" | u32 version
    u64 len | header: u32 num_shards, u32 dim, u64 max_probe, u64 seed, u64 capacity * num_shards
    u64 len | identities: i64 * total_rows   (EMPTY = all ones)
    u64 len | rows: f32 * total_rows * dim
    u32 crc32 of everything above

Delta file (``.mpzd``)::

    b"MPZD" | u32 version
    u64 len | header: u32 base snapshot crc32, u32 dim, u64 sequence, u64 record count
    u64 len | records: (u64 row, i64 identity, f32 * dim) * count
    u32 crc32 of everything above

Metadata and optimizer state are never written.
"""
from __future__ import annotations

import struct
import threading
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .batch import FrozenTableError, ShardedTable
from .hashing import EMPTY
from .probe_core import ProbeResult, ShardConfig, lookup_readonly
from .shard_router import TableLayout, shard_of_array

SNAPSHOT_MAGIC = b"MPZC"
DELTA_MAGIC = b"MPZD"
FORMAT_VERSION = 1

_PREAMBLE = struct.Struct("<4sI")
_LEN = struct.Struct("<Q")
_CRC = struct.Struct("<I")
_SNAP_HEAD = struct.Struct("<IIQQ")
_DELTA_HEAD = struct.Struct("<IIQQ")


class FormatError(ValueError):
    pass


class BadMagicError(FormatError):
    pass


class VersionMismatchError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


class ChecksumError(FormatError):
    pass


class DeltaLineageError(ValueError):
    """Delta log was cut from a different base snapshot."""


class DeltaSequenceError(ValueError):
    """Delta log arrived out of order or a log was skipped."""


def snapshot_size(layout: TableLayout, dim: int) -> int:
    n = layout.total_rows
    header = _SNAP_HEAD.size + 8 * layout.num_shards
    return _PREAMBLE.size + 3 * _LEN.size + header + 8 * n + 4 * dim * n + _CRC.size


def _frame(magic: bytes, sections: list[bytes]) -> bytes:
    parts = [_PREAMBLE.pack(magic, FORMAT_VERSION)]
    for body in sections:
        parts.append(_LEN.pack(len(body)))
        parts.append(body)
    blob = b"".join(parts)
    return blob + _CRC.pack(zlib.crc32(blob))


def _unframe(data: bytes, magic: bytes, nsections: int) -> tuple[list[bytes], int]:
    if len(data) < _PREAMBLE.size + _CRC.size:
        raise TruncatedFileError("file too short")
    got_magic, version = _PREAMBLE.unpack_from(data, 0)
    if got_magic != magic:
        raise BadMagicError(f"expected magic {magic!r}, got {got_magic!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"unsupported format version {version}")
    pos = _PREAMBLE.size
    sections = []
    for _ in range(nsections):
        if pos + _LEN.size > len(data) - _CRC.size:
            raise TruncatedFileError("missing section length")
        (length,) = _LEN.unpack_from(data, pos)
        pos += _LEN.size
        if pos + length > len(data) - _CRC.size:
            raise TruncatedFileError("section runs past end of file")
        sections.append(data[pos:pos + length])
        pos += length
    if pos + _CRC.size != len(data):
        raise TruncatedFileError(f"unexpected trailing bytes ({len(data) - pos - _CRC.size})")
    (crc,) = _CRC.unpack_from(data, pos)
    if crc != zlib.crc32(data[:pos]):
        raise ChecksumError("CRC-32 mismatch")
    return sections, crc


class FrozenTable:
    """Read-only replica: lookups and gathers only, plus ordered delta application."""

    def __init__(self, layout: TableLayout, max_probe: int, dim: int,
                 identities: np.ndarray, weights: np.ndarray, base_checksum: int):
        self.layout = layout
        self.max_probe = max_probe
        self.dim = dim
        self.base_checksum = base_checksum
        self.sequence = 0
        self._identities = np.ascontiguousarray(identities, dtype=np.int64)
        self._weights = np.ascontiguousarray(weights, dtype=np.float32).reshape(layout.total_rows, dim)
        self._lock = threading.Lock()
        offsets = layout.shard_offsets
        self._configs = [
            ShardConfig(cap, min(max_probe, cap), s, layout.seed)
            for s, cap in enumerate(layout.shard_capacities)
        ]
        self._views = [self._identities[o:o + c] for o, c in zip(offsets, layout.shard_capacities)]
        self._offsets = offsets

    @property
    def identities(self) -> np.ndarray:
        view = self._identities.view()
        view.flags.writeable = False
        return view

    @property
    def weights(self) -> np.ndarray:
        view = self._weights.view()
        view.flags.writeable = False
        return view

    def lookup_readonly(self, ident: int) -> ProbeResult:
        shard = int(shard_of_array(np.array([ident], dtype=np.int64), self.layout)[0])
        res = lookup_readonly(ident, self._views[shard], self._configs[shard])
        return ProbeResult(self._offsets[shard] + res.slot, res.evicted, res.outcome)

    lookup = lookup_readonly

    def gather(self, rows) -> np.ndarray:
        rows = np.atleast_1d(np.asarray(rows, dtype=np.int64))
        if rows.size and (rows.min() < 0 or rows.max() >= self.layout.total_rows):
            raise IndexError("row index out of range")
        with self._lock:
            return self._weights[rows].copy()

    def read(self, ident: int) -> tuple[ProbeResult, np.ndarray]:
        """Lookup plus embedding fetch under one lock, so a row is never half-updated."""
        with self._lock:
            res = self.lookup_readonly(ident)
            return res, self._weights[res.slot].copy()

    def lookup_or_insert(self, *args, **kwargs):
        raise FrozenTableError("published tables are read-only")

    def process_batch(self, *args, **kwargs):
        raise FrozenTableError("published tables are read-only")

    def _apply_record(self, row: int, identity: int, weights: np.ndarray) -> None:
        with self._lock:
            self._identities[row] = identity
            self._weights[row] = weights


def _table_weights(table: ShardedTable) -> tuple[int, np.ndarray]:
    if table.embeddings is None:
        return 0, np.empty((table.total_rows, 0), dtype=np.float32)
    return table.embeddings.dim, table.embeddings.weights


def encode_snapshot(table: ShardedTable) -> bytes:
    layout = table.layout
    dim, weights = _table_weights(table)
    header = _SNAP_HEAD.pack(layout.num_shards, dim, table.max_probe, layout.seed)
    header += np.asarray(layout.shard_capacities, dtype="<u8").tobytes()
    idents = table.identities().astype("<i8").tobytes()
    rows = np.ascontiguousarray(weights, dtype="<f4").tobytes()
    return _frame(SNAPSHOT_MAGIC, [header, idents, rows])


def write_snapshot(table: ShardedTable, path) -> int:
    """Write a frozen snapshot; returns its CRC-32 (the base for delta logs)."""
    blob = encode_snapshot(table)
    Path(path).write_bytes(blob)
    return _CRC.unpack_from(blob, len(blob) - _CRC.size)[0]


def decode_snapshot(data: bytes) -> FrozenTable:
    (header, idents, rows), crc = _unframe(data, SNAPSHOT_MAGIC, 3)
    if len(header) < _SNAP_HEAD.size:
        raise TruncatedFileError("snapshot header too short")
    num_shards, dim, max_probe, seed = _SNAP_HEAD.unpack_from(header, 0)
    if len(header) != _SNAP_HEAD.size + 8 * num_shards:
        raise FormatError("header length does not match shard count")
    caps = np.frombuffer(header, dtype="<u8", offset=_SNAP_HEAD.size).tolist()
    layout = TableLayout(tuple(caps), seed)
    n = layout.total_rows
    if len(idents) != 8 * n or len(rows) != 4 * dim * n:
        raise FormatError("section sizes do not match the layout")
    identities = np.frombuffer(idents, dtype="<i8").astype(np.int64)
    weights = np.frombuffer(rows, dtype="<f4").astype(np.float32).reshape(n, dim)
    return FrozenTable(layout, max_probe, dim, identities, weights, crc)


def read_snapshot(path) -> FrozenTable:
    return decode_snapshot(Path(path).read_bytes())


@dataclass(frozen=True)
class DeltaRecord:
    global_row: int
    identity: int
    weights: np.ndarray = field(repr=False)

    def __eq__(self, other):
        return (isinstance(other, DeltaRecord) and self.global_row == other.global_row
                and self.identity == other.identity
                and np.array_equal(self.weights.view(np.uint32), other.weights.view(np.uint32)))


@dataclass
class DeltaLog:
    base_checksum: int
    sequence: int
    dim: int
    records: list[DeltaRecord]


def dirty_since(table: ShardedTable, mark: int) -> list[DeltaRecord]:
    """Rows whose identity or weights changed after cursor ``mark``."""
    rows = table.generations.since(mark)
    idents = table.identities()
    dim, weights = _table_weights(table)
    return [DeltaRecord(int(r), int(idents[r]), weights[r].copy()) for r in rows.tolist()]


class DeltaPublisher:
    """Source-side cutter: each ``cut`` emits rows dirtied since the previous cut."""

    def __init__(self, table: ShardedTable, base_checksum: int):
        self.table = table
        self.base_checksum = base_checksum
        self.mark = table.generations.cursor()
        self.sequence = 0

    def cut(self) -> DeltaLog:
        records = dirty_since(self.table, self.mark)
        self.mark = self.table.generations.cursor()
        self.sequence += 1
        dim, _ = _table_weights(self.table)
        return DeltaLog(self.base_checksum, self.sequence, dim, records)


def encode_delta(log: DeltaLog) -> bytes:
    rec_dtype = np.dtype([("row", "<u8"), ("identity", "<i8"), ("weights", "<f4", (log.dim,))])
    recs = np.zeros(len(log.records), dtype=rec_dtype)
    for i, r in enumerate(log.records):
        recs[i] = (r.global_row, r.identity, r.weights)
    header = _DELTA_HEAD.pack(log.base_checksum, log.dim, log.sequence, len(log.records))
    return _frame(DELTA_MAGIC, [header, recs.tobytes()])


def write_delta(log: DeltaLog, path) -> None:
    Path(path).write_bytes(encode_delta(log))


def decode_delta(data: bytes) -> DeltaLog:
    (header, body), _ = _unframe(data, DELTA_MAGIC, 2)
    if len(header) != _DELTA_HEAD.size:
        raise FormatError("delta header has the wrong size")
    base, dim, seq, count = _DELTA_HEAD.unpack(header)
    rec_dtype = np.dtype([("row", "<u8"), ("identity", "<i8"), ("weights", "<f4", (dim,))])
    if len(body) != count * rec_dtype.itemsize:
        raise FormatError("record section size does not match the record count")
    recs = np.frombuffer(body, dtype=rec_dtype)
    records = [
        DeltaRecord(int(r["row"]), int(r["identity"]), np.array(r["weights"], dtype=np.float32))
        for r in recs
    ]
    return DeltaLog(base, seq, dim, records)


def read_delta(path) -> DeltaLog:
    return decode_delta(Path(path).read_bytes())


def apply_delta(replica: FrozenTable, log: DeltaLog) -> None:
    if log.base_checksum != replica.base_checksum:
        raise DeltaLineageError(
            f"delta base {log.base_checksum:#010x} does not match replica snapshot {replica.base_checksum:#010x}")
    if log.sequence != replica.sequence + 1:
        raise DeltaSequenceError(f"expected delta sequence {replica.sequence + 1}, got {log.sequence}")
    if log.dim != replica.dim:
        raise FormatError(f"delta dim {log.dim} does not match replica dim {replica.dim}")
    n = replica.layout.total_rows
    for rec in log.records:
        if not 0 <= rec.global_row < n:
            raise FormatError(f"delta row {rec.global_row} out of range")
        if rec.identity < 0 and rec.identity != EMPTY:
            raise FormatError(f"invalid identity {rec.identity} in delta")
    for rec in log.records:
        replica._apply_record(rec.global_row, rec.identity, rec.weights)
    replica.sequence = log.sequence
