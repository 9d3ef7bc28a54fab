"""Binary container for benchmark records of activations, weights and inputs.

Layout (all little-endian)::

    header   magic 'DIBM' | version u16 | flags u32 (0) | record count u64
    index    one u64 byte offset per record
    record   id u64 | defense_id | dataset_id | y i32 | y_hat i32 | tensor count u16
             then per tensor: name | rank u8 | extents u32 x rank | float32 payload

Strings are UTF-8 prefixed with a u16 byte length; labels use -1 for absent.
"""

import logging
import os
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import BinaryIO, Dict, Iterable, Iterator, List, Optional, Sequence

import numpy as np

from ..errors import DimensionError, FormatError

logger = logging.getLogger(__name__)

MAGIC = b'DIBM'
VERSION = 1
HEADER = struct.Struct('<4sHIQ')
OFFSET = struct.Struct('<Q')
RECORD_HEAD = struct.Struct('<Q')
LABELS = struct.Struct('<iiH')
U16 = struct.Struct('<H')
U8 = struct.Struct('<B')


@dataclass
class BenchmarkRecord:
    """One benchmark tuple: named float32 tensors plus provenance and labels."""
    record_id: int
    defense_id: str
    dataset_id: str
    task_label: int = -1
    sensitive_label: int = -1
    tensors: Dict[str, np.ndarray] = field(default_factory=OrderedDict)

    def __post_init__(self):
        self.tensors = OrderedDict(
            (name, np.ascontiguousarray(value, dtype='<f4')) for name, value in self.tensors.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BenchmarkRecord):
            return NotImplemented
        return (self.record_id == other.record_id
                and self.defense_id == other.defense_id
                and self.dataset_id == other.dataset_id
                and self.task_label == other.task_label
                and self.sensitive_label == other.sensitive_label
                and list(self.tensors) == list(other.tensors)
                and all(np.array_equal(self.tensors[k], other.tensors[k]) for k in self.tensors))


def _encode_string(value: str) -> bytes:
    raw = value.encode('utf-8')
    if len(raw) > 0xFFFF:
        raise DimensionError(f"String of {len(raw)} bytes does not fit a u16 length prefix")
    return U16.pack(len(raw)) + raw


def encode_record(record: BenchmarkRecord) -> bytes:
    parts = [RECORD_HEAD.pack(record.record_id),
             _encode_string(record.defense_id),
             _encode_string(record.dataset_id)]
    if len(record.tensors) > 0xFFFF:
        raise DimensionError(f"Record {record.record_id} has too many tensors ({len(record.tensors)})")
    parts.append(LABELS.pack(record.task_label, record.sensitive_label, len(record.tensors)))
    for name, value in record.tensors.items():
        if value.ndim > 0xFF:
            raise DimensionError(f"Tensor '{name}' has rank {value.ndim}, at most 255 is supported")
        parts.append(_encode_string(name))
        parts.append(U8.pack(value.ndim))
        parts.append(struct.pack(f'<{value.ndim}I', *value.shape))
        parts.append(np.ascontiguousarray(value, dtype='<f4').tobytes())
    return b''.join(parts)


def write_benchmark(records: Iterable[BenchmarkRecord], path: str) -> int:
    """Write ``records`` to ``path``; returns the number of bytes written.

    Records are encoded one at a time; only the offset table is kept in
    memory.
    """
    records = records if isinstance(records, Sequence) else list(records)
    count = len(records)
    offsets: List[int] = []
    with open(path, 'wb') as f:
        f.write(HEADER.pack(MAGIC, VERSION, 0, count))
        f.write(b'\0' * (OFFSET.size * count))
        for record in records:
            offsets.append(f.tell())
            f.write(encode_record(record))
        size = f.tell()
        f.seek(HEADER.size)
        for offset in offsets:
            f.write(OFFSET.pack(offset))
    logger.debug(f"Wrote {count} benchmark records ({size} bytes) to {path}")
    return size


class _Cursor:
    """Bounded reads from an open file that report their byte offset on failure."""

    def __init__(self, f: BinaryIO, end: int):
        self.f = f
        self.end = end

    @property
    def offset(self) -> int:
        return self.f.tell()

    def read(self, n: int, what: str) -> bytes:
        start = self.f.tell()
        if start + n > self.end:
            raise FormatError(f"Truncated {what}: need {n} bytes", offset=start)
        data = self.f.read(n)
        if len(data) != n:
            raise FormatError(f"Truncated {what}: need {n} bytes", offset=start)
        return data

    def unpack(self, fmt: struct.Struct, what: str):
        return fmt.unpack(self.read(fmt.size, what))

    def string(self, what: str) -> str:
        (length,) = self.unpack(U16, f"{what} length")
        start = self.offset
        try:
            return self.read(length, what).decode('utf-8')
        except UnicodeDecodeError as exc:
            raise FormatError(f"{what} is not valid UTF-8", offset=start) from exc


class BenchmarkReader:
    """Random-access and streaming reader.

    Only the header and offset table are held in memory; each access parses
    exactly one record.
    """

    def __init__(self, path: str):
        self.path = path
        self._file = open(path, 'rb')
        try:
            self.size = os.fstat(self._file.fileno()).st_size
            self.offsets = self._read_index()
        except Exception:
            self._file.close()
            raise

    def _read_index(self) -> List[int]:
        cursor = _Cursor(self._file, self.size)
        magic, version, flags, count = cursor.unpack(HEADER, 'header')
        if magic != MAGIC:
            raise FormatError(f"Bad magic {magic!r}, expected {MAGIC!r}", offset=0)
        if version != VERSION:
            raise FormatError(f"Unsupported version {version}", offset=4)
        if flags != 0:
            raise FormatError(f"Reserved flags must be 0, got {flags}", offset=6)
        index_end = HEADER.size + OFFSET.size * count
        if index_end > self.size:
            raise FormatError(f"Index of {count} records runs past end of file", offset=HEADER.size)
        raw = cursor.read(OFFSET.size * count, 'index')
        offsets = list(np.frombuffer(raw, dtype='<u8').astype(np.int64)) if count else []
        previous = index_end - 1
        for i, offset in enumerate(offsets):
            if offset <= previous or offset >= self.size:
                raise FormatError(f"Record offset {offset} of record {i} is out of order or out of range",
                                  offset=HEADER.size + OFFSET.size * i)
            previous = offset
        if not offsets and self.size != index_end:
            raise FormatError("Trailing bytes after empty index", offset=index_end)
        return [int(o) for o in offsets]

    def __len__(self) -> int:
        return len(self.offsets)

    def __getitem__(self, index: int) -> BenchmarkRecord:
        if index < 0:
            index += len(self)
        if not 0 <= index < len(self):
            raise IndexError(f"Record {index} out of range for {len(self)} records")
        end = self.offsets[index + 1] if index + 1 < len(self) else self.size
        self._file.seek(self.offsets[index])
        cursor = _Cursor(self._file, end)
        record = self._parse(cursor)
        if cursor.offset != end:
            raise FormatError(f"Record {index} ends before the next record starts", offset=cursor.offset)
        return record

    def __iter__(self) -> Iterator[BenchmarkRecord]:
        for i in range(len(self)):
            yield self[i]

    @staticmethod
    def _parse(cursor: _Cursor) -> BenchmarkRecord:
        (record_id,) = cursor.unpack(RECORD_HEAD, 'record id')
        defense_id = cursor.string('defense id')
        dataset_id = cursor.string('dataset id')
        task_label, sensitive_label, count = cursor.unpack(LABELS, 'labels')
        tensors = OrderedDict()
        for _ in range(count):
            name = cursor.string('tensor name')
            (rank,) = cursor.unpack(U8, 'tensor rank')
            shape = struct.unpack(f'<{rank}I', cursor.read(4 * rank, 'tensor extents'))
            n = int(np.prod(shape)) if rank else 1
            payload = cursor.read(4 * n, f"payload of tensor '{name}'")
            tensors[name] = np.frombuffer(payload, dtype='<f4').reshape(shape).copy()
        return BenchmarkRecord(record_id, defense_id, dataset_id, task_label, sensitive_label, tensors)

    def close(self) -> None:
        self._file.close()

    def __enter__(self) -> 'BenchmarkReader':
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_benchmark(path: str) -> List[BenchmarkRecord]:
    with BenchmarkReader(path) as reader:
        return list(reader)


def save_state(state: Dict[str, np.ndarray], path: str, defense_id: str = 'checkpoint',
               dataset_id: str = '') -> int:
    """Store a named parameter list as a one-record container."""
    return write_benchmark([BenchmarkRecord(0, defense_id, dataset_id, tensors=OrderedDict(state))], path)


def load_state(path: str) -> Dict[str, np.ndarray]:
    with BenchmarkReader(path) as reader:
        if len(reader) != 1:
            raise FormatError(f"Checkpoint must hold exactly one record, found {len(reader)}")
        return dict(reader[0].tensors)
