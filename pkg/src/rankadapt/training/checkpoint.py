"""Binary checkpoint format.

Layout (all integers little-endian uint32, tensor payloads float32
little-endian row-major):

    magic  b"ADRK"
    version
    config length | config text (utf-8)
    section count
    per section:
        name length | name
        tensor count
        checksum            crc32 of the concatenated tensor payloads
        per tensor:
            name length | name
            ndim | dims...
            payload

Sections are "theta" (base model) and optionally "phi" (adaptor).
Round-trips are bitwise stable.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

MAGIC = b"ADRK"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    version: int
    config_text: str
    sections: dict[str, dict[str, np.ndarray]]

    @property
    def theta(self) -> dict[str, np.ndarray]:
        return self.sections.get("theta", {})

    @property
    def phi(self) -> dict[str, np.ndarray] | None:
        return self.sections.get("phi")


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def section_bytes(tensors: dict[str, np.ndarray]) -> tuple[bytes, int]:
    """Serialized tensor records plus the crc32 of the payloads."""
    body = b""
    crc = 0
    for name, arr in tensors.items():
        a = np.asarray(arr, dtype="<f4", order="C")   # keeps 0-d shapes intact
        payload = a.tobytes()
        crc = zlib.crc32(payload, crc)
        body += _pack_str(name)
        body += struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape)
        body += payload
    return body, crc


def checksum(tensors: dict[str, np.ndarray]) -> int:
    return section_bytes(tensors)[1]


def dump_checkpoint(config_text: str, theta: dict[str, np.ndarray],
                    phi: dict[str, np.ndarray] | None = None) -> bytes:
    out = MAGIC + struct.pack("<I", VERSION) + _pack_str(config_text)
    sections = [("theta", theta)] + ([("phi", phi)] if phi is not None else [])
    out += struct.pack("<I", len(sections))
    for name, tensors in sections:
        body, crc = section_bytes(tensors)
        out += _pack_str(name) + struct.pack("<II", len(tensors), crc) + body
    return out


def save_checkpoint(path, config_text: str, theta: dict[str, np.ndarray],
                    phi: dict[str, np.ndarray] | None = None) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_checkpoint(config_text, theta, phi))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.off = 0

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.buf):
            raise CheckpointError("truncated checkpoint")
        out = self.buf[self.off:self.off + n]
        self.off += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def parse_checkpoint(buf: bytes) -> Checkpoint:
    r = _Reader(buf)
    if r.take(4) != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    config_text = r.string()
    sections: dict[str, dict[str, np.ndarray]] = {}
    for _ in range(r.u32()):
        name = r.string()
        count = r.u32()
        want_crc = r.u32()
        tensors: dict[str, np.ndarray] = {}
        crc = 0
        for _ in range(count):
            tname = r.string()
            ndim = r.u32()
            shape = tuple(struct.unpack(f"<{ndim}I", r.take(4 * ndim)))
            n = int(np.prod(shape)) if shape else 1
            payload = r.take(4 * n)
            crc = zlib.crc32(payload, crc)
            tensors[tname] = np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
        if crc != want_crc:
            raise CheckpointError(f"checksum mismatch in section {name!r}")
        sections[name] = tensors
    return Checkpoint(version, config_text, sections)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        return parse_checkpoint(fh.read())
