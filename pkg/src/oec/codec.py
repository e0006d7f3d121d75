"""Deterministic binary encoding used for hashing, signing and export.

Layout rules:

* fixed-width unsigned/signed integers are big-endian (``u8``, ``u32``, ``u64``, ``i64``)
* arbitrary-precision non-negative integers (group elements, proof responses)
  are a ``u32`` byte length followed by the minimal big-endian magnitude
* ``f64`` is IEEE 754 binary64, big-endian; ``-0.0`` is normalised to ``0.0``
* 32-byte hashes / node ids are written raw
* variable byte strings and UTF-8 text are ``u32``-length-prefixed
* lists are ``u32``-count-prefixed, optionals are a presence byte then the value
* enums are a single tag byte
* records write their fields in declared order

A record type opts in by defining ``CODEC``: a tuple of ``(field_name, field_codec)``
pairs.  ``encode`` / ``decode`` walk that schema.
"""

from __future__ import annotations

import math
import struct
from dataclasses import is_dataclass
from enum import IntEnum
from typing import Any

from .errors import DecodeError

_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")
_I64 = struct.Struct(">q")
_F64 = struct.Struct(">d")


class Writer:
    __slots__ = ("buf",)

    def __init__(self) -> None:
        self.buf = bytearray()

    def u8(self, v: int) -> None:
        self.buf.append(v)

    def u32(self, v: int) -> None:
        self.buf += _U32.pack(v)

    def u64(self, v: int) -> None:
        self.buf += _U64.pack(v)

    def i64(self, v: int) -> None:
        self.buf += _I64.pack(v)

    def f64(self, v: float) -> None:
        if v == 0.0:
            v = 0.0
        self.buf += _F64.pack(v)

    def bigint(self, v: int) -> None:
        if v < 0:
            raise ValueError("bigint fields are non-negative")
        raw = v.to_bytes((v.bit_length() + 7) // 8, "big")
        self.buf += _U32.pack(len(raw))
        self.buf += raw

    def raw32(self, v: bytes) -> None:
        if len(v) != 32:
            raise ValueError(f"expected 32 bytes, got {len(v)}")
        self.buf += v

    def blob(self, v: bytes) -> None:
        self.buf += _U32.pack(len(v))
        self.buf += v

    def text(self, v: str) -> None:
        self.blob(v.encode("utf-8"))

    def getvalue(self) -> bytes:
        return bytes(self.buf)


class Reader:
    __slots__ = ("data", "pos")

    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def _take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise DecodeError(f"truncated input at offset {self.pos} (need {n} bytes)")
        chunk = self.data[self.pos:end]
        self.pos = end
        return chunk

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return _U32.unpack(self._take(4))[0]

    def u64(self) -> int:
        return _U64.unpack(self._take(8))[0]

    def i64(self) -> int:
        return _I64.unpack(self._take(8))[0]

    def f64(self) -> float:
        v = _F64.unpack(self._take(8))[0]
        if math.isnan(v):
            raise DecodeError("NaN is not a valid encoded float")
        return v

    def bigint(self) -> int:
        raw = self._take(self.u32())
        if raw and raw[0] == 0:
            raise DecodeError("non-minimal bigint encoding")
        return int.from_bytes(raw, "big")

    def raw32(self) -> bytes:
        return self._take(32)

    def blob(self) -> bytes:
        return self._take(self.u32())

    def text(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(str(exc)) from None

    def done(self) -> bool:
        return self.pos == len(self.data)


# --- field codecs ---------------------------------------------------------


class Field:
    def write(self, w: Writer, v: Any) -> None:  # pragma: no cover - interface
        raise NotImplementedError

    def read(self, r: Reader) -> Any:  # pragma: no cover - interface
        raise NotImplementedError


class _Prim(Field):
    def __init__(self, name: str) -> None:
        self.name = name

    def write(self, w: Writer, v: Any) -> None:
        getattr(w, self.name)(v)

    def read(self, r: Reader) -> Any:
        return getattr(r, self.name)()

    def __repr__(self) -> str:
        return self.name.upper()


U8 = _Prim("u8")
U32 = _Prim("u32")
U64 = _Prim("u64")
I64 = _Prim("i64")
F64 = _Prim("f64")
BIGINT = _Prim("bigint")
HASH = _Prim("raw32")
BYTES = _Prim("blob")
TEXT = _Prim("text")


class _Bool(Field):
    def write(self, w: Writer, v: bool) -> None:
        w.u8(1 if v else 0)

    def read(self, r: Reader) -> bool:
        b = r.u8()
        if b > 1:
            raise DecodeError(f"bad bool byte {b}")
        return bool(b)


BOOL = _Bool()


class EnumOf(Field):
    def __init__(self, cls: type[IntEnum]) -> None:
        self.cls = cls

    def write(self, w: Writer, v: IntEnum) -> None:
        w.u8(int(v))

    def read(self, r: Reader) -> IntEnum:
        tag = r.u8()
        try:
            return self.cls(tag)
        except ValueError:
            raise DecodeError(f"unknown {self.cls.__name__} tag {tag}") from None


class ListOf(Field):
    def __init__(self, item: Field) -> None:
        self.item = item

    def write(self, w: Writer, v) -> None:
        w.u32(len(v))
        for x in v:
            self.item.write(w, x)

    def read(self, r: Reader) -> tuple:
        n = r.u32()
        if n > len(r.data) - r.pos:
            raise DecodeError("list length exceeds remaining input")
        return tuple(self.item.read(r) for _ in range(n))


class Optional_(Field):
    def __init__(self, item: Field) -> None:
        self.item = item

    def write(self, w: Writer, v) -> None:
        if v is None:
            w.u8(0)
        else:
            w.u8(1)
            self.item.write(w, v)

    def read(self, r: Reader):
        flag = r.u8()
        if flag == 0:
            return None
        if flag != 1:
            raise DecodeError(f"bad optional flag {flag}")
        return self.item.read(r)


class RecordOf(Field):
    """Nested record; the class must define ``CODEC`` or ``write_to``/``read_from``."""

    def __init__(self, cls: type) -> None:
        self.cls = cls

    def write(self, w: Writer, v) -> None:
        write_record(w, v)

    def read(self, r: Reader):
        return read_record(r, self.cls)


def write_record(w: Writer, v) -> None:
    custom = getattr(v, "write_to", None)
    if custom is not None:
        custom(w)
        return
    for name, field in type(v).CODEC:
        field.write(w, getattr(v, name))


def read_record(r: Reader, cls: type):
    custom = getattr(cls, "read_from", None)
    if custom is not None:
        return custom(r)
    values = {name: field.read(r) for name, field in cls.CODEC}
    return cls(**values)


def encode(value) -> bytes:
    """Canonical bytes of a ledger record."""
    w = Writer()
    write_record(w, value)
    return w.getvalue()


def decode(cls: type, data: bytes):
    """Inverse of :func:`encode`; rejects trailing bytes."""
    r = Reader(data)
    try:
        value = read_record(r, cls)
    except DecodeError:
        raise
    except (ValueError, TypeError) as exc:
        raise DecodeError(f"invalid {cls.__name__}: {exc}") from None
    if not r.done():
        raise DecodeError(f"{len(data) - r.pos} trailing bytes after {cls.__name__}")
    return value


def encode_fields(*pairs: tuple[Field, Any]) -> bytes:
    """Encode an ad-hoc tuple of typed values (used for challenges and derived ids)."""
    w = Writer()
    for field, v in pairs:
        field.write(w, v)
    return w.getvalue()


def is_record(value) -> bool:
    return is_dataclass(value) and (hasattr(type(value), "CODEC") or hasattr(value, "write_to"))
