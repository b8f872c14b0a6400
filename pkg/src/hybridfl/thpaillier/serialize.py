"""Canonical byte forms for key material and ciphertexts.

Layout: one version header byte (0x01), then each integer field as a
4-byte big-endian length prefix followed by big-endian magnitude bytes.
Small fixed-width fields (indices, counts) are 4-byte big-endian. Used
by the federation wire protocol and the keygen dealer/share files.
"""

from __future__ import annotations

import struct

from hybridfl.thpaillier.cipher import Ciphertext
from hybridfl.thpaillier.keys import KeyShare, PublicKey

FORMAT_VERSION = 0x01


class DeserializeError(ValueError):
    """Malformed or wrong-version byte input."""


def _pack_int(x: int) -> bytes:
    if x < 0:
        raise ValueError("only non-negative integers are serialized")
    raw = x.to_bytes((x.bit_length() + 7) // 8 or 1, "big")
    return struct.pack(">I", len(raw)) + raw


def _unpack_int(buf: bytes, offset: int) -> tuple[int, int]:
    if offset + 4 > len(buf):
        raise DeserializeError("truncated length prefix")
    (length,) = struct.unpack_from(">I", buf, offset)
    offset += 4
    if offset + length > len(buf):
        raise DeserializeError("truncated integer field")
    return int.from_bytes(buf[offset : offset + length], "big"), offset + length


def _check_header(buf: bytes) -> int:
    if not buf or buf[0] != FORMAT_VERSION:
        raise DeserializeError("missing or unsupported version header")
    return 1


def ciphertext_to_bytes(c: Ciphertext) -> bytes:
    return bytes([FORMAT_VERSION]) + _pack_int(c.value)


def ciphertext_from_bytes(buf: bytes) -> Ciphertext:
    offset = _check_header(buf)
    value, offset = _unpack_int(buf, offset)
    if offset != len(buf):
        raise DeserializeError("trailing bytes after ciphertext")
    return Ciphertext(value)


def public_key_to_bytes(pk: PublicKey) -> bytes:
    head = struct.pack(">II", pk.n_parties, pk.threshold)
    return bytes([FORMAT_VERSION]) + head + _pack_int(pk.n)


def public_key_from_bytes(buf: bytes) -> PublicKey:
    import math

    offset = _check_header(buf)
    if offset + 8 > len(buf):
        raise DeserializeError("truncated public key header")
    n_parties, threshold = struct.unpack_from(">II", buf, offset)
    offset += 8
    n, offset = _unpack_int(buf, offset)
    if offset != len(buf):
        raise DeserializeError("trailing bytes after public key")
    try:
        return PublicKey(
            n=n,
            n_squared=n * n,
            g=n + 1,
            combine_delta=math.factorial(n_parties),
            n_parties=n_parties,
            threshold=threshold,
        )
    except ValueError as exc:
        raise DeserializeError(str(exc)) from exc


def key_share_to_bytes(share: KeyShare) -> bytes:
    return (
        bytes([FORMAT_VERSION])
        + struct.pack(">I", share.party_index)
        + _pack_int(share.share_value)
        + public_key_to_bytes(share.public)
    )


def key_share_from_bytes(buf: bytes) -> KeyShare:
    offset = _check_header(buf)
    if offset + 4 > len(buf):
        raise DeserializeError("truncated share header")
    (party_index,) = struct.unpack_from(">I", buf, offset)
    offset += 4
    share_value, offset = _unpack_int(buf, offset)
    pk = public_key_from_bytes(buf[offset:])
    try:
        return KeyShare(party_index=party_index, share_value=share_value, public=pk)
    except ValueError as exc:
        raise DeserializeError(str(exc)) from exc
