import pytest

from hybridfl.thpaillier import (
    DeserializeError,
    ciphertext_from_bytes,
    ciphertext_to_bytes,
    encrypt,
    key_share_from_bytes,
    key_share_to_bytes,
    public_key_from_bytes,
    public_key_to_bytes,
)


def test_public_key_roundtrip(key_3of5):
    pk, _ = key_3of5
    assert public_key_from_bytes(public_key_to_bytes(pk)) == pk


def test_key_share_roundtrip(key_3of5):
    _, shares = key_3of5
    for share in shares:
        assert key_share_from_bytes(key_share_to_bytes(share)) == share


def test_ciphertext_roundtrip(key_3of5, rng):
    pk, _ = key_3of5
    c = encrypt(pk, 12345, rng)
    buf = ciphertext_to_bytes(c)
    assert buf[0] == 0x01
    assert ciphertext_from_bytes(buf) == c


def test_bad_version_rejected(key_3of5, rng):
    pk, _ = key_3of5
    buf = bytearray(ciphertext_to_bytes(encrypt(pk, 1, rng)))
    buf[0] = 0x02
    with pytest.raises(DeserializeError):
        ciphertext_from_bytes(bytes(buf))


def test_truncation_rejected(key_3of5):
    pk, _ = key_3of5
    buf = public_key_to_bytes(pk)
    with pytest.raises(DeserializeError):
        public_key_from_bytes(buf[:-3])
    with pytest.raises(DeserializeError):
        public_key_from_bytes(buf + b"\x00")
