"""Byte-level writer and reader used by the canonical encoding.

Integers are big-endian. u64 values take 8 bytes, sequence counts and
byte-string lengths take 4 bytes.
"""
from __future__ import annotations

import struct

U64_MAX = 2**64 - 1
U32_MAX = 2**32 - 1


class DecodeError(ValueError):
    pass


class Writer:
    def __init__(self) -> None:
        self._parts: list[bytes] = []

    def u8(self, v: int) -> "Writer":
        self._parts.append(bytes([v]))
        return self

    def u32(self, v: int) -> "Writer":
        if not 0 <= v <= U32_MAX:
            raise ValueError(f"u32 out of range: {v}")
        self._parts.append(struct.pack(">I", v))
        return self

    def u64(self, v: int) -> "Writer":
        if not 0 <= v <= U64_MAX:
            raise ValueError(f"u64 out of range: {v}")
        self._parts.append(struct.pack(">Q", v))
        return self

    def blob(self, b: bytes) -> "Writer":
        self.u32(len(b))
        self._parts.append(bytes(b))
        return self

    def raw(self, b: bytes) -> "Writer":
        self._parts.append(bytes(b))
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes) -> None:
        self.data = bytes(data)
        self.pos = 0

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError("unexpected end of input")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def peek(self) -> int:
        if self.pos >= len(self.data):
            raise DecodeError("unexpected end of input")
        return self.data[self.pos]

    def u32(self) -> int:
        return struct.unpack(">I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self._take(8))[0]

    def blob(self) -> bytes:
        return self._take(self.u32())

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def done(self) -> bool:
        return self.pos == len(self.data)

    def expect_done(self) -> None:
        if not self.done():
            raise DecodeError(f"{len(self.data) - self.pos} trailing bytes")
