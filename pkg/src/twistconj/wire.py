"""Byte formats: polynomials, matrices, keys, protocol frames, attack reports.

Polynomial: ``<u32 n>`` then ceil(n/8) bytes, coefficient of x^i at byte
i // 8, bit i % 8 (LSB first); pad bits must be zero.  Matrices are the four
row-major entries back to back.  A frame is ``<u8 tag><u32 length>payload``.
All integers are little-endian and every decoder is strict: trailing bytes,
short input, nonzero padding or inconsistent truncation orders raise
``MalformedError``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Optional

from .f2poly import Endo, TruncPoly
from .matsemi import Mat2
from .protocol import (
    Challenge,
    Commitment,
    PrivateKey,
    PublicKey,
    Response,
    Transcript,
    Verdict,
)

TAG_COMMITMENT = 0x01
TAG_CHALLENGE = 0x02
TAG_RESPONSE = 0x03
TAG_VERDICT = 0x04
TAG_PUBLIC_KEY = 0x05
TAG_PRIVATE_KEY = 0x06
TAG_ATTACK_REPORT = 0x07
TAGS = frozenset(range(0x01, 0x08))

_U32 = struct.Struct("<I")
_HEADER = struct.Struct("<BI")
MAX_FRAME = 1 << 24


class MalformedError(ValueError):
    """Input bytes are not a canonical encoding."""


# --- polynomials and matrices ---------------------------------------------


def encode_poly(p: TruncPoly) -> bytes:
    return _U32.pack(p.n) + p.value.to_bytes((p.n + 7) // 8, "little")


def _read_poly(buf: bytes, off: int) -> tuple[TruncPoly, int]:
    if len(buf) - off < 4:
        raise MalformedError("truncated polynomial header")
    (n,) = _U32.unpack_from(buf, off)
    off += 4
    if n == 0:
        raise MalformedError("zero truncation order")
    size = (n + 7) // 8
    if len(buf) - off < size:
        raise MalformedError("truncated polynomial body")
    value = int.from_bytes(buf[off : off + size], "little")
    if value >> n:
        raise MalformedError("nonzero padding bits")
    return TruncPoly(n, value), off + size


def _done(buf: bytes, off: int) -> None:
    if off != len(buf):
        raise MalformedError(f"{len(buf) - off} trailing bytes")


def decode_poly(data: bytes) -> TruncPoly:
    p, off = _read_poly(data, 0)
    _done(data, off)
    return p


def encode_mat(m: Mat2) -> bytes:
    return b"".join(encode_poly(e) for e in m.entries())


def _read_mat(buf: bytes, off: int) -> tuple[Mat2, int]:
    entries = []
    for _ in range(4):
        p, off = _read_poly(buf, off)
        entries.append(p)
    if len({e.n for e in entries}) != 1:
        raise MalformedError("matrix entries have different truncation orders")
    return Mat2(*entries), off


def decode_mat(data: bytes) -> Mat2:
    m, off = _read_mat(data, 0)
    _done(data, off)
    return m


# --- keys ------------------------------------------------------------------


def encode_public_key(pub: PublicKey) -> bytes:
    return encode_poly(pub.phi.p) + encode_poly(pub.psi.p) + encode_mat(pub.w) + encode_mat(pub.t)


def decode_public_key(data: bytes) -> PublicKey:
    p_phi, off = _read_poly(data, 0)
    p_psi, off = _read_poly(data, off)
    w, off = _read_mat(data, off)
    t, off = _read_mat(data, off)
    _done(data, off)
    if not (p_phi.n == p_psi.n == w.n == t.n):
        raise MalformedError("public key components have different truncation orders")
    if (p_phi.value | p_psi.value) & 1:
        raise MalformedError("endomorphism polynomial with nonzero constant term")
    return PublicKey(Endo(p_phi), Endo(p_psi), w, t)


def encode_private_key(priv: PrivateKey) -> bytes:
    return encode_mat(priv.s)


def decode_private_key(data: bytes) -> PrivateKey:
    return PrivateKey(decode_mat(data))


# --- frames ----------------------------------------------------------------


def encode_frame(tag: int, payload: bytes) -> bytes:
    if tag not in TAGS:
        raise ValueError(f"unknown frame tag {tag:#04x}")
    return _HEADER.pack(tag, len(payload)) + payload


def _read_frame(buf: bytes, off: int) -> tuple[int, bytes, int]:
    if len(buf) - off < _HEADER.size:
        raise MalformedError("truncated frame header")
    tag, length = _HEADER.unpack_from(buf, off)
    if tag not in TAGS:
        raise MalformedError(f"unknown frame tag {tag:#04x}")
    off += _HEADER.size
    if len(buf) - off < length:
        raise MalformedError("frame length exceeds available bytes")
    return tag, bytes(buf[off : off + length]), off + length


def decode_frame(data: bytes) -> tuple[int, bytes]:
    tag, payload, off = _read_frame(data, 0)
    _done(data, off)
    return tag, payload


def read_frame(stream: BinaryIO) -> Optional[tuple[int, bytes]]:
    """Read one frame from a byte stream; ``None`` on clean end of stream."""
    header = _read_exact(stream, _HEADER.size)
    if header is None:
        return None
    tag, length = _HEADER.unpack(header)
    if tag not in TAGS:
        raise MalformedError(f"unknown frame tag {tag:#04x}")
    if length > MAX_FRAME:
        raise MalformedError(f"frame of {length} bytes exceeds limit")
    payload = _read_exact(stream, length) if length else b""
    if payload is None:
        raise MalformedError("stream ended inside a frame")
    return tag, payload


def _read_exact(stream: BinaryIO, size: int) -> Optional[bytes]:
    chunks = []
    got = 0
    while got < size:
        chunk = stream.read(size - got)
        if not chunk:
            if got == 0:
                return None
            raise MalformedError("stream ended inside a frame")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def encode_challenge(ch: Challenge) -> bytes:
    return bytes([ch.c])


def decode_challenge(data: bytes) -> Challenge:
    if len(data) != 1 or data[0] > 1:
        raise MalformedError("challenge payload must be one byte 0x00 or 0x01")
    return Challenge(data[0])


def encode_verdict(v: Verdict) -> bytes:
    return bytes([int(v)])


def decode_verdict(data: bytes) -> Verdict:
    if len(data) != 1 or data[0] > 2:
        raise MalformedError("verdict payload must be one byte 0x00..0x02")
    return Verdict(data[0])


def encode_message(msg) -> bytes:
    """Frame any protocol value."""
    if isinstance(msg, Commitment):
        return encode_frame(TAG_COMMITMENT, encode_mat(msg.u))
    if isinstance(msg, Challenge):
        return encode_frame(TAG_CHALLENGE, encode_challenge(msg))
    if isinstance(msg, Response):
        return encode_frame(TAG_RESPONSE, encode_mat(msg.v))
    if isinstance(msg, Verdict):
        return encode_frame(TAG_VERDICT, encode_verdict(msg))
    if isinstance(msg, PublicKey):
        return encode_frame(TAG_PUBLIC_KEY, encode_public_key(msg))
    if isinstance(msg, PrivateKey):
        return encode_frame(TAG_PRIVATE_KEY, encode_private_key(msg))
    if isinstance(msg, AttackReport):
        return encode_frame(TAG_ATTACK_REPORT, format_report(msg).encode())
    raise TypeError(f"cannot frame {type(msg).__name__}")


def decode_payload(tag: int, payload: bytes):
    if tag == TAG_COMMITMENT:
        return Commitment(decode_mat(payload))
    if tag == TAG_CHALLENGE:
        return decode_challenge(payload)
    if tag == TAG_RESPONSE:
        return Response(decode_mat(payload))
    if tag == TAG_VERDICT:
        return decode_verdict(payload)
    if tag == TAG_PUBLIC_KEY:
        return decode_public_key(payload)
    if tag == TAG_PRIVATE_KEY:
        return decode_private_key(payload)
    if tag == TAG_ATTACK_REPORT:
        try:
            text = payload.decode()
        except UnicodeDecodeError as exc:
            raise MalformedError("report payload is not UTF-8") from exc
        return parse_report(text)
    raise MalformedError(f"unknown frame tag {tag:#04x}")


def decode_message(data: bytes):
    return decode_payload(*decode_frame(data))


def encode_transcript(tr: Transcript) -> bytes:
    out = b"".join(encode_message(m) for m in tr.messages)
    if tr.verdict is not None:
        out += encode_message(tr.verdict)
    return out


def decode_transcript(data: bytes) -> Transcript:
    tr = Transcript()
    off = 0
    while off < len(data):
        if tr.verdict is not None:
            raise MalformedError("frames after the verdict")
        tag, payload, off = _read_frame(data, off)
        msg = decode_payload(tag, payload)
        if isinstance(msg, Verdict):
            tr.verdict = msg
        elif isinstance(msg, (Commitment, Challenge, Response)):
            expected = (Commitment, Challenge, Response)[len(tr.messages) % 3]
            if not isinstance(msg, expected):
                raise MalformedError("transcript messages out of order")
            tr.messages.append(msg)
        else:
            raise MalformedError("non-protocol frame inside a transcript")
    return tr


def to_hex(data: bytes) -> str:
    return data.hex()


def from_hex(text: str) -> bytes:
    try:
        return bytes.fromhex(text.strip())
    except ValueError as exc:
        raise MalformedError("not a hex string") from exc


# --- attack reports --------------------------------------------------------

_REPORT_KEYS = (
    "trial",
    "seed",
    "n",
    "endo_n",
    "endo_mode",
    "width_cap",
    "outcome",
    "level",
    "width",
    "forge_ok",
    "widths",
    "millis",
)
_OUTCOMES = ("forged", "exhausted", "width_exceeded")


@dataclass
class AttackReport:
    """One attack run: one ``key=value`` line in a report file."""

    trial: int
    seed: int
    n: int
    endo_n: int
    endo_mode: str
    width_cap: Optional[int]
    outcome: str
    level: int
    width: int
    forge_ok: Optional[bool] = None
    widths: list[int] = field(default_factory=list)
    millis: int = 0


def _opt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "1" if v else "0"
    return str(v)


def format_report(r: AttackReport) -> str:
    fields = {
        "trial": str(r.trial),
        "seed": str(r.seed),
        "n": str(r.n),
        "endo_n": str(r.endo_n),
        "endo_mode": r.endo_mode,
        "width_cap": _opt(r.width_cap),
        "outcome": r.outcome,
        "level": str(r.level),
        "width": str(r.width),
        "forge_ok": _opt(r.forge_ok),
        "widths": ",".join(map(str, r.widths)),
        "millis": str(r.millis),
    }
    return " ".join(f"{k}={fields[k]}" for k in _REPORT_KEYS)


def _int(text: str) -> int:
    if not text or not (text.isdigit() or (text[0] == "-" and text[1:].isdigit())):
        raise MalformedError(f"bad integer {text!r}")
    return int(text)


def parse_report(line: str) -> AttackReport:
    parts = line.split(" ")
    if len(parts) != len(_REPORT_KEYS):
        raise MalformedError("wrong number of report fields")
    vals = {}
    for key, part in zip(_REPORT_KEYS, parts):
        k, sep, v = part.partition("=")
        if k != key or not sep:
            raise MalformedError(f"expected field {key!r}")
        vals[key] = v
    try:
        if vals["endo_mode"] not in ("reduce", "extend"):
            raise MalformedError("bad endo_mode")
        if vals["outcome"] not in _OUTCOMES:
            raise MalformedError("bad outcome")
        forge_ok = {"none": None, "0": False, "1": True}.get(vals["forge_ok"], "bad")
        if forge_ok == "bad":
            raise MalformedError("bad forge_ok")
        rec = AttackReport(
            trial=_int(vals["trial"]),
            seed=_int(vals["seed"]),
            n=_int(vals["n"]),
            endo_n=_int(vals["endo_n"]),
            endo_mode=vals["endo_mode"],
            width_cap=None if vals["width_cap"] == "none" else _int(vals["width_cap"]),
            outcome=vals["outcome"],
            level=_int(vals["level"]),
            width=_int(vals["width"]),
            forge_ok=forge_ok,
            widths=[_int(x) for x in vals["widths"].split(",")] if vals["widths"] else [],
            millis=_int(vals["millis"]),
        )
    except ValueError as exc:
        if isinstance(exc, MalformedError):
            raise
        raise MalformedError(str(exc)) from exc
    if format_report(rec) != line:
        raise MalformedError("report line is not in canonical form")
    return rec


def read_reports(text: str) -> list[AttackReport]:
    return [parse_report(line) for line in text.splitlines() if line]
