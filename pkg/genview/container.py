"""Reader and writer of the GVTF named-tensor container.

Layout, all integers little-endian::

    magic "GVTF" | u32 version | u32 record count
    per record: u16 id length | UTF-8 id | u8 dtype | u8 rank
                | rank x u32 dims | float32 payload, row-major

The reader checks every length against the bytes left in the file before
reading, so a corrupt header never triggers a large allocation.
"""

import logging
import struct
from pathlib import Path
from typing import BinaryIO, Dict, Mapping, Union

import numpy as np

from .exceptions import (
    BadMagicError,
    DuplicateIdError,
    InvalidValueError,
    OversizeHeaderError,
    TruncatedFileError,
    UnsupportedVersionError,
)

logger = logging.getLogger(__name__)

MAGIC = b"GVTF"
VERSION = 1
DTYPE_FLOAT32 = 1
MAX_RANK = 255
MAX_ID_BYTES = 0xFFFF

PathLike = Union[str, Path]


class Writer(object):
    """Write named float32 tensors to a container file."""

    def __init__(self, stream: BinaryIO):
        self._stream = stream

    def _write(self, fmt: str, *values) -> None:
        self._stream.write(struct.pack("<" + fmt, *values))

    def _write_str(self, text: str) -> None:
        data = text.encode("utf-8")
        if len(data) > MAX_ID_BYTES:
            raise InvalidValueError(
                f"Id is longer than {MAX_ID_BYTES} bytes: {text[:32]}"
            )
        self._write("H", len(data))
        self._stream.write(data)

    def write_header(self, count: int) -> None:
        self._stream.write(MAGIC)
        self._write("II", VERSION, count)

    def write_record(self, name: str, tensor: np.ndarray) -> None:
        tensor = np.asarray(tensor)
        if tensor.ndim > MAX_RANK:
            raise InvalidValueError(f"Rank {tensor.ndim} exceeds {MAX_RANK}: {name}")
        self._write_str(name)
        self._write("BB", DTYPE_FLOAT32, tensor.ndim)
        for dim in tensor.shape:
            self._write("I", dim)
        self._stream.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


class Reader(object):
    """Read a container from a stream of known size."""

    def __init__(self, stream: BinaryIO, size: int, source: str = "<stream>"):
        self._stream = stream
        self._remaining = size
        self._source = source

    def _take(self, nbytes: int, what: str) -> bytes:
        if nbytes > self._remaining:
            raise TruncatedFileError(
                f"{self._source}: file ends inside the {what} "
                f"({nbytes} bytes needed, {self._remaining} left)"
            )
        data = self._stream.read(nbytes)
        if len(data) != nbytes:
            raise TruncatedFileError(f"{self._source}: short read in the {what}")
        self._remaining -= nbytes
        return data

    def _read(self, fmt: str, what: str):
        fmt = "<" + fmt
        return struct.unpack(fmt, self._take(struct.calcsize(fmt), what))

    def read_header(self) -> int:
        if self._take(len(MAGIC), "magic") != MAGIC:
            raise BadMagicError(f"{self._source}: not a GVTF container")
        version, count = self._read("II", "header")
        if version != VERSION:
            raise UnsupportedVersionError(
                f"{self._source}: unsupported container version {version}"
            )
        return count

    def read_record(self):
        (length,) = self._read("H", "record id length")
        raw = self._take(length, "record id")
        try:
            name = raw.decode("utf-8")
        except UnicodeDecodeError:
            raise InvalidValueError(f"{self._source}: record id is not UTF-8") from None

        dtype, rank = self._read("BB", "record header")
        if dtype != DTYPE_FLOAT32:
            raise InvalidValueError(f"{self._source}: unsupported dtype code {dtype}")
        dims = self._read("I" * rank, "record dims") if rank else ()

        nbytes = 4 * int(np.prod(dims, dtype=object)) if dims else 4
        if nbytes > self._remaining:
            raise OversizeHeaderError(
                f"{self._source}: record '{name}' declares {nbytes} payload bytes "
                f"but only {self._remaining} remain"
            )
        payload = np.frombuffer(self._take(nbytes, "payload"), dtype="<f4")
        return name, payload.reshape(dims)

    @property
    def remaining(self) -> int:
        return self._remaining


def write_container(path: PathLike, tensors: Mapping[str, np.ndarray]) -> None:
    """Write tensors to ``path`` in mapping order as float32."""
    with open(path, "wb") as stream:
        writer = Writer(stream)
        writer.write_header(len(tensors))
        for name, tensor in tensors.items():
            writer.write_record(name, tensor)
    logger.debug("wrote %d tensors to %s", len(tensors), path)


def read_container(path: PathLike) -> Dict[str, np.ndarray]:
    """Read every tensor of a container, keeping file order.

    Raises:
        BadMagicError: If the file does not start with ``GVTF``.
        UnsupportedVersionError: If the version is not 1.
        TruncatedFileError: If the file ends inside a record.
        OversizeHeaderError: If dims declare more data than the file holds.
        DuplicateIdError: If an id appears twice.
    """
    path = Path(path)
    tensors: Dict[str, np.ndarray] = {}
    with open(path, "rb") as stream:
        reader = Reader(stream, path.stat().st_size, str(path))
        count = reader.read_header()
        for _ in range(count):
            name, tensor = reader.read_record()
            if name in tensors:
                raise DuplicateIdError(f"{path}: duplicate id '{name}'")
            tensors[name] = tensor
        if reader.remaining:
            raise InvalidValueError(
                f"{path}: {reader.remaining} bytes after the last record"
            )
    return tensors
