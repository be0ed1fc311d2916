"""Binary embedding file format ("CEMB"): the boundary between preparation
and downstream sweeping.

Layout (all integers little-endian):

    magic    4 bytes  b"CEMB"
    version  u16      format version, currently 1
    variant  u8       0 = cased, 1 = uncased
    dim      u16      embedding width
    n_layers u8       layer count (input embeddings + hidden outputs)
    count    u32      number of sentence records
    records  count *  ( n_tokens u32
                        roles    n_tokens bytes (TokenRole values)
                        payload  n_layers * n_tokens * dim float32,
                                 C-order [layer][token][dim] )
    checksum u64      CRC-64 over every byte before the checksum

The checksum covers the header as well as the records so that any
single-byte corruption ahead of the footer is detectable. Files are
write-once; reading streams one record at a time.
"""

from __future__ import annotations

import enum
import os
import struct
import tempfile
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    MissingInputError,
    StoreCorruptionError,
    StoreFormatError,
    StoreValidationError,
)

MAGIC = b"CEMB"
FORMAT_VERSION = 1
VARIANTS = ("cased", "uncased")

_HEADER = struct.Struct("<4sHBHBI")
_NTOKENS = struct.Struct("<I")
_CHECKSUM = struct.Struct("<Q")


class TokenRole(enum.IntEnum):
    MODIFIER_SUBWORD = 0
    HEAD_SUBWORD = 1
    CONTEXT = 2
    CLS = 3
    SEP = 4
    IGNORE = 5


def validate_roles(roles: np.ndarray) -> None:
    """A usable sentence: >=1 modifier/head/context subword, exactly one CLS and SEP."""
    if roles.ndim != 1:
        raise StoreValidationError(f"roles must be one-dimensional, got shape {roles.shape}")
    if roles.size and (roles.min() < 0 or roles.max() > max(TokenRole)):
        raise StoreValidationError("roles contain values outside the TokenRole enumeration")
    counts = np.bincount(roles, minlength=len(TokenRole))
    if counts[TokenRole.MODIFIER_SUBWORD] < 1:
        raise StoreValidationError("sentence has no MODIFIER_SUBWORD token")
    if counts[TokenRole.HEAD_SUBWORD] < 1:
        raise StoreValidationError("sentence has no HEAD_SUBWORD token")
    if counts[TokenRole.CONTEXT] < 1:
        raise StoreValidationError("sentence has no CONTEXT token")
    if counts[TokenRole.CLS] != 1:
        raise StoreValidationError(f"sentence must have exactly one CLS token, got {counts[TokenRole.CLS]}")
    if counts[TokenRole.SEP] != 1:
        raise StoreValidationError(f"sentence must have exactly one SEP token, got {counts[TokenRole.SEP]}")


@dataclass
class SentenceTensor:
    """Per-layer, per-token vectors for one sentence plus token role mask."""

    compound: str
    roles: np.ndarray  # (n_tokens,) uint8
    vectors: np.ndarray  # (n_layers, n_tokens, dim) float32

    @property
    def n_tokens(self) -> int:
        return int(self.roles.shape[0])

    @property
    def n_layers(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[2])

    def validate(self) -> None:
        if self.vectors.ndim != 3:
            raise StoreValidationError(f"vectors must be 3-d, got shape {self.vectors.shape}")
        if self.vectors.shape[1] != self.roles.shape[0]:
            raise StoreValidationError(
                f"token count mismatch: {self.vectors.shape[1]} vectors vs {self.roles.shape[0]} roles"
            )
        validate_roles(np.asarray(self.roles))
        if not np.isfinite(self.vectors).all():
            raise StoreValidationError("vectors contain non-finite values")


@dataclass(frozen=True)
class StoreHeader:
    version: int
    variant: str
    dim: int
    n_layers: int
    count: int


# CRC-64 (reflected ECMA-182 polynomial, init/xorout all-ones; the variant
# whose check value over b"123456789" is 0x995DC9BBDF1939FA).
_CRC64_POLY = 0xC96C5795D7870F42
_CRC64_INIT = 0xFFFFFFFFFFFFFFFF


def _build_crc64_table() -> list[int]:
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = (crc >> 1) ^ _CRC64_POLY if crc & 1 else crc >> 1
        table.append(crc)
    return table


_CRC64_TABLE = _build_crc64_table()


def crc64_update(state: int, data: bytes) -> int:
    table = _CRC64_TABLE
    for byte in data:
        state = table[(state ^ byte) & 0xFF] ^ (state >> 8)
    return state


def crc64(data: bytes) -> int:
    return crc64_update(_CRC64_INIT, data) ^ _CRC64_INIT


def _pack_header(header: StoreHeader) -> bytes:
    return _HEADER.pack(
        MAGIC,
        header.version,
        VARIANTS.index(header.variant),
        header.dim,
        header.n_layers,
        header.count,
    )


def write_embeddings(
    path: str | os.PathLike,
    tensors: Iterable[SentenceTensor],
    *,
    variant: str,
    dim: int,
    n_layers: int,
) -> StoreHeader:
    """Write a stream of validated tensors; returns the final header.

    Records are spooled first because the sentence count and the checksum
    both depend on the complete stream; the target file then appears
    atomically via rename.
    """
    if variant not in VARIANTS:
        raise StoreValidationError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if not (1 <= dim <= 0xFFFF):
        raise StoreValidationError(f"dim {dim} outside u16 range")
    if not (1 <= n_layers <= 0xFF):
        raise StoreValidationError(f"n_layers {n_layers} outside u8 range")

    count = 0
    with tempfile.SpooledTemporaryFile(max_size=32 * 1024 * 1024) as spool:
        for index, tensor in enumerate(tensors):
            try:
                tensor.validate()
            except StoreValidationError as exc:
                raise StoreValidationError(f"sentence {index}: {exc}") from exc
            if tensor.dim != dim:
                raise StoreValidationError(f"sentence {index}: dim {tensor.dim} != header dim {dim}")
            if tensor.n_layers != n_layers:
                raise StoreValidationError(
                    f"sentence {index}: {tensor.n_layers} layers != header n_layers {n_layers}"
                )
            spool.write(_NTOKENS.pack(tensor.n_tokens))
            spool.write(np.ascontiguousarray(tensor.roles, dtype=np.uint8).tobytes())
            payload = np.ascontiguousarray(tensor.vectors, dtype="<f4")
            spool.write(payload.tobytes())
            count += 1

        header = StoreHeader(FORMAT_VERSION, variant, dim, n_layers, count)
        header_bytes = _pack_header(header)
        state = crc64_update(_CRC64_INIT, header_bytes)

        spool.seek(0)
        tmp_path = str(path) + ".tmp"
        with open(tmp_path, "wb") as out:
            out.write(header_bytes)
            while True:
                chunk = spool.read(1 << 20)
                if not chunk:
                    break
                state = crc64_update(state, chunk)
                out.write(chunk)
            out.write(_CHECKSUM.pack(state ^ _CRC64_INIT))
        os.replace(tmp_path, path)
    return header


def _read_exact(handle, n: int, what: str, offset: int) -> bytes:
    data = handle.read(n)
    if len(data) != n:
        raise StoreCorruptionError(
            f"truncated file: expected {n} bytes for {what} at offset {offset}, got {len(data)}"
        )
    return data


def read_header(path: str | os.PathLike) -> StoreHeader:
    if not os.path.exists(path):
        raise MissingInputError(f"embedding file not found: {path}")
    with open(path, "rb") as handle:
        return _parse_header(_read_exact(handle, _HEADER.size, "header", 0))


def _parse_header(raw: bytes) -> StoreHeader:
    magic, version, variant_code, dim, n_layers, count = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise StoreFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise StoreFormatError(f"unsupported format version {version}")
    if variant_code >= len(VARIANTS):
        raise StoreFormatError(f"unknown variant code {variant_code}")
    return StoreHeader(version, VARIANTS[variant_code], dim, n_layers, count)


def read_embeddings(path: str | os.PathLike, compound: str | None = None) -> Iterator[SentenceTensor]:
    """Stream sentence tensors; the checksum is verified once the stream ends.

    The compound is not part of the byte format — files are per-compound —
    so it is taken from the filename stem ("<compound>.<variant>.cemb")
    unless given explicitly.
    """
    if not os.path.exists(path):
        raise MissingInputError(f"embedding file not found: {path}")
    if compound is None:
        compound = compound_from_filename(path)

    with open(path, "rb") as handle:
        raw = _read_exact(handle, _HEADER.size, "header", 0)
        header = _parse_header(raw)
        state = crc64_update(_CRC64_INIT, raw)
        offset = _HEADER.size
        record_bytes = header.n_layers * header.dim * 4

        for index in range(header.count):
            raw = _read_exact(handle, _NTOKENS.size, f"record {index} token count", offset)
            state = crc64_update(state, raw)
            offset += _NTOKENS.size
            (n_tokens,) = _NTOKENS.unpack(raw)

            raw = _read_exact(handle, n_tokens, f"record {index} roles", offset)
            state = crc64_update(state, raw)
            offset += n_tokens
            roles = np.frombuffer(raw, dtype=np.uint8).copy()

            raw = _read_exact(handle, n_tokens * record_bytes, f"record {index} payload", offset)
            state = crc64_update(state, raw)
            offset += n_tokens * record_bytes
            vectors = (
                np.frombuffer(raw, dtype="<f4")
                .reshape(header.n_layers, n_tokens, header.dim)
                .copy()
            )

            tensor = SentenceTensor(compound=compound, roles=roles, vectors=vectors)
            try:
                tensor.validate()
            except StoreValidationError as exc:
                raise StoreValidationError(f"{path}: record {index}: {exc}") from exc
            yield tensor

        raw = _read_exact(handle, _CHECKSUM.size, "checksum", offset)
        (stored,) = _CHECKSUM.unpack(raw)
        if stored != state ^ _CRC64_INIT:
            raise StoreCorruptionError(
                f"{path}: checksum mismatch: stored {stored:#018x}, computed {state ^ _CRC64_INIT:#018x}"
            )
        if handle.read(1):
            raise StoreCorruptionError(f"{path}: trailing bytes after checksum")


def compound_from_filename(path: str | os.PathLike) -> str:
    """Invert the "<compound>.<variant>.cemb" naming convention."""
    name = os.path.basename(str(path))
    stem = name[: -len(".cemb")] if name.endswith(".cemb") else name
    compound, _, variant = stem.rpartition(".")
    if not compound or variant not in VARIANTS:
        raise StoreFormatError(f"cannot infer compound from filename {name!r}")
    return compound


def embedding_filename(compound: str, variant: str) -> str:
    return f"{compound}.{variant}.cemb"
