"""Encryption, homomorphic addition and threshold decryption.

Ciphertexts are Enc(m) = g^m * r^n mod n^2. Multiplying ciphertexts adds
plaintexts. Decryption is distributed: each share holder raises the
ciphertext to 2*Delta*s_i, and any `threshold` such partial values are
combined by Lagrange interpolation in the exponent.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

import gmpy2

from hybridfl.thpaillier.keys import KeyShare, PublicKey


class PlaintextRangeError(ValueError):
    """Plaintext outside [0, n)."""


class InsufficientSharesError(ValueError):
    """Fewer partial decryptions than the dealt threshold."""


class DuplicateShareError(ValueError):
    """Two partial decryptions from the same party index."""


@dataclass(frozen=True)
class Ciphertext:
    """An element of Z*_{n^2} encrypting one plaintext ring element."""

    value: int


@dataclass(frozen=True)
class PartialDecryption:
    party_index: int
    value: int


def encrypt(
    pk: PublicKey,
    m: int,
    rng: random.Random | None = None,
) -> Ciphertext:
    """Probabilistically encrypt a plaintext in Z_n.

    Fresh randomness per call: encrypting the same value twice yields
    different ciphertexts of the same plaintext.
    """
    if not 0 <= m < pk.n:
        raise PlaintextRangeError(f"plaintext must lie in [0, n), got {m}")
    if rng is None:
        rng = random.SystemRandom()
    while True:
        r = rng.randrange(1, pk.n)
        if gmpy2.gcd(r, pk.n) == 1:
            break
    # g = n + 1, so g^m = 1 + m*n (mod n^2).
    gm = (1 + m * pk.n) % pk.n_squared
    return Ciphertext(int(gm * gmpy2.powmod(r, pk.n, pk.n_squared) % pk.n_squared))


def add(pk: PublicKey, a: Ciphertext, b: Ciphertext) -> Ciphertext:
    """Homomorphic addition: decrypts to (m_a + m_b) mod n."""
    return Ciphertext(a.value * b.value % pk.n_squared)


def partial_decrypt(share: KeyShare, c: Ciphertext) -> PartialDecryption:
    """Compute one party's decryption contribution c^(2*Delta*s_i)."""
    pk = share.public
    exponent = 2 * pk.combine_delta * share.share_value
    value = int(gmpy2.powmod(c.value, exponent, pk.n_squared))
    return PartialDecryption(party_index=share.party_index, value=value)


def _lagrange_exponent(pk: PublicKey, indices: list[int], i: int) -> int:
    """Delta-scaled Lagrange coefficient at zero; exact integer."""
    coeff = Fraction(pk.combine_delta)
    for j in indices:
        if j != i:
            coeff *= Fraction(j, j - i)
    if coeff.denominator != 1:
        raise AssertionError("Delta-scaled Lagrange coefficient not integral")
    return int(coeff)


def _interpolate(pk: PublicKey, parts: list[PartialDecryption]) -> int:
    """Combine partial values without a threshold check (test hook)."""
    indices = [p.party_index for p in parts]
    u = 1
    for p in parts:
        lam = _lagrange_exponent(pk, indices, p.party_index)
        u = u * gmpy2.powmod(p.value, 2 * lam, pk.n_squared) % pk.n_squared
    # u = (1 + n)^(4*Delta^2*m) mod n^2 when enough shares were used.
    l_value = (int(u) - 1) // pk.n
    inv = gmpy2.invert(4 * pk.combine_delta * pk.combine_delta, pk.n)
    return int(l_value * inv % pk.n)


def combine(pk: PublicKey, parts: list[PartialDecryption]) -> int:
    """Recover the plaintext from at least `threshold` partial decryptions.

    Raises:
        InsufficientSharesError: fewer than `pk.threshold` partials.
        DuplicateShareError: repeated party indices.
    """
    if len(parts) < pk.threshold:
        raise InsufficientSharesError(
            f"need {pk.threshold} partial decryptions, got {len(parts)}"
        )
    indices = [p.party_index for p in parts]
    if len(set(indices)) != len(indices):
        raise DuplicateShareError("partial decryptions with repeated party index")
    return _interpolate(pk, parts[: pk.threshold])
