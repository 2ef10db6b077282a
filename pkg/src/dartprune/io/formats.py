"""
DTOK / DATT binary formats and the CSV fixture format

All integers are little-endian u32, all floats little-endian float32,
matrices row-major. Layouts are documented in docs/FORMATS.md.
"""
import csv
import io
import struct
from pathlib import Path
from typing import Union

import numpy as np

from dartprune.errors import FormatError
from dartprune.logging_config import get_logger
from dartprune.models.tokens import AttentionMap, TokenMatrix, validate_attention
from dartprune.resource_limits import ResourceValidator

logger = get_logger(__name__)

TOKEN_MAGIC = b"DTOK"
ATTN_MAGIC = b"DATT"
VERSION = 1

FLAG_MODALITY = 0x1
FLAG_GRID = 0x2

_U32 = struct.Struct("<I")
_F32 = np.dtype("<f4")

# Above this, check memory headroom before materializing the matrix
LARGE_FILE_BYTES = 64 * 1024 * 1024

PathLike = Union[str, Path]


class _Reader:
    def __init__(self, payload: bytes, kind: str):
        self.payload = payload
        self.kind = kind
        self.offset = 0

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.payload):
            raise FormatError(
                f"{self.kind} truncated: need {end} bytes, have {len(self.payload)}",
                expected=end,
                actual=len(self.payload),
            )
        chunk = self.payload[self.offset:end]
        self.offset = end
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(count * 4), dtype=_F32).astype(np.float32)

    def finish(self):
        if self.offset != len(self.payload):
            raise FormatError(
                f"{self.kind} has {len(self.payload) - self.offset} trailing bytes",
                expected=self.offset,
                actual=len(self.payload),
            )


def _header(reader: _Reader, magic: bytes):
    found = reader.take(4)
    if found != magic:
        raise FormatError(f"Bad magic {found!r}, expected {magic!r}")
    version = reader.u32()
    if version != VERSION:
        raise FormatError(f"Unsupported {magic.decode()} version {version}", version=version)


def encode_tokens(tokens: TokenMatrix) -> bytes:
    flags = (FLAG_MODALITY if tokens.modality is not None else 0) | (FLAG_GRID if tokens.grid is not None else 0)
    parts = [TOKEN_MAGIC, _U32.pack(VERSION), _U32.pack(tokens.n), _U32.pack(tokens.d), _U32.pack(flags)]
    if tokens.grid is not None:
        parts += [_U32.pack(tokens.grid[0]), _U32.pack(tokens.grid[1])]
    if tokens.modality is not None:
        parts.append(tokens.modality.astype(np.uint8).tobytes())
    parts.append(tokens.data.astype(_F32).tobytes(order="C"))
    return b"".join(parts)


def decode_tokens(payload: bytes) -> TokenMatrix:
    """
    Parse DTOK bytes; the result still has to pass ``validate``

    Raises:
        FormatError: bad magic, version or flags; length not matching the header
    """
    reader = _Reader(payload, "DTOK")
    _header(reader, TOKEN_MAGIC)
    n, d, flags = reader.u32(), reader.u32(), reader.u32()
    if flags & ~(FLAG_MODALITY | FLAG_GRID):
        raise FormatError(f"Unknown DTOK flag bits {flags:#x}", flags=flags)

    grid = None
    if flags & FLAG_GRID:
        grid = (reader.u32(), reader.u32())
    modality = None
    if flags & FLAG_MODALITY:
        modality = np.frombuffer(reader.take(n), dtype=np.uint8)
        if modality.size and int(modality.max()) > 1:
            raise FormatError("Modality tags must be 0 (visual) or 1 (text)")
    data = reader.floats(n * d).reshape(n, d)
    reader.finish()
    return TokenMatrix(data, modality=modality, grid=grid)


def encode_attention(attn: AttentionMap) -> bytes:
    return b"".join(
        [ATTN_MAGIC, _U32.pack(VERSION), _U32.pack(attn.n), attn.weights.astype(_F32).tobytes(order="C")]
    )


def decode_attention(payload: bytes) -> AttentionMap:
    reader = _Reader(payload, "DATT")
    _header(reader, ATTN_MAGIC)
    n = reader.u32()
    weights = reader.floats(n * n).reshape(n, n)
    reader.finish()
    return AttentionMap(weights)


def _read_bytes(path: PathLike) -> bytes:
    ResourceValidator.validate_file_size(str(path))
    payload = Path(path).read_bytes()
    if len(payload) > LARGE_FILE_BYTES:
        ResourceValidator.validate_memory_usage()
    return payload


def write_tokens(path: PathLike, tokens: TokenMatrix):
    Path(path).write_bytes(encode_tokens(tokens))
    logger.debug("tokens_written", path=str(path), n=tokens.n, d=tokens.d)


def read_tokens(path: PathLike) -> TokenMatrix:
    tokens = decode_tokens(_read_bytes(path))
    logger.debug("tokens_read", path=str(path), n=tokens.n, d=tokens.d)
    return tokens


def write_attention(path: PathLike, attn: AttentionMap):
    Path(path).write_bytes(encode_attention(attn))


def read_attention(path: PathLike) -> AttentionMap:
    """Read and validate a DATT file (rows must sum to 1)"""
    return validate_attention(decode_attention(_read_bytes(path)))


def parse_csv_tokens(text: str) -> TokenMatrix:
    """
    Hand-written fixtures: a ``d=<int>`` header, then one token per row

    Raises:
        FormatError: missing header, wrong row width, unparsable number
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].strip().lower().startswith("d="):
        raise FormatError("CSV tokens need a 'd=<int>' header line")
    try:
        d = int(lines[0].strip()[2:])
    except ValueError:
        raise FormatError(f"Bad CSV header {lines[0]!r}")

    rows = []
    for number, row in enumerate(csv.reader(io.StringIO("\n".join(lines[1:]))), start=2):
        if len(row) != d:
            raise FormatError(f"CSV line {number} has {len(row)} values, expected {d}", line=number)
        try:
            rows.append([float(v) for v in row])
        except ValueError:
            raise FormatError(f"CSV line {number} holds a non-numeric value", line=number)
    return TokenMatrix(np.asarray(rows, dtype=np.float32).reshape(len(rows), d))


def format_csv_tokens(tokens: TokenMatrix) -> str:
    """Inverse of parse_csv_tokens; float32 repr round-trips exactly"""
    lines = [f"d={tokens.d}"]
    lines += [",".join(repr(float(v)) for v in row) for row in tokens.data]
    return "\n".join(lines) + "\n"


def load_tokens(path: PathLike) -> TokenMatrix:
    """DTOK or CSV by extension"""
    if str(path).lower().endswith(".csv"):
        ResourceValidator.validate_file_size(str(path))
        return parse_csv_tokens(Path(path).read_text())
    return read_tokens(path)
