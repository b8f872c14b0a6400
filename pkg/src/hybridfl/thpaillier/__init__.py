"""Threshold Paillier cryptosystem with a fixed-point codec.

Additively homomorphic encryption over Z*_{n^2} where the decryption
exponent is Shamir-shared so that any `threshold` of the dealt key shares
can jointly decrypt and fewer learn nothing.
"""

from hybridfl.thpaillier.cipher import (
    Ciphertext,
    DuplicateShareError,
    InsufficientSharesError,
    PartialDecryption,
    PlaintextRangeError,
    add,
    combine,
    encrypt,
    partial_decrypt,
)
from hybridfl.thpaillier.codec import (
    FixedPointCodec,
    MagnitudeOverflowError,
    VectorCodec,
    fp_decode,
    fp_encode,
)
from hybridfl.thpaillier.keys import (
    KeyShare,
    PrimeGenerationError,
    PublicKey,
    deal_keys,
)
from hybridfl.thpaillier.serialize import (
    DeserializeError,
    ciphertext_from_bytes,
    ciphertext_to_bytes,
    key_share_from_bytes,
    key_share_to_bytes,
    public_key_from_bytes,
    public_key_to_bytes,
)

__all__ = [
    "Ciphertext",
    "DuplicateShareError",
    "DeserializeError",
    "FixedPointCodec",
    "InsufficientSharesError",
    "KeyShare",
    "MagnitudeOverflowError",
    "PartialDecryption",
    "PlaintextRangeError",
    "PrimeGenerationError",
    "PublicKey",
    "VectorCodec",
    "add",
    "ciphertext_from_bytes",
    "ciphertext_to_bytes",
    "combine",
    "deal_keys",
    "encrypt",
    "fp_decode",
    "fp_encode",
    "key_share_from_bytes",
    "key_share_to_bytes",
    "partial_decrypt",
    "public_key_from_bytes",
    "public_key_to_bytes",
]
