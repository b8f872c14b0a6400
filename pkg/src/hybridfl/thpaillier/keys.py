"""Key generation for the threshold Paillier scheme.

A trusted dealer generates an RSA modulus n = p*q from safe primes,
builds the decryption exponent d with d = 0 (mod p'q') and d = 1 (mod n),
and Shamir-shares d over Z_{n*p'q'} with a polynomial of degree
threshold-1. Combining `threshold` shares recovers plaintexts; fewer
shares yield nothing.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import gmpy2

MIN_KEY_BITS = 256
DEFAULT_KEY_BITS = 2048

# Generous cap; safe primes are dense enough that hitting it means the
# randomness source is broken.
_MAX_PRIME_ATTEMPTS = 500_000


class PrimeGenerationError(RuntimeError):
    """Safe-prime search exhausted its attempt budget."""


@dataclass(frozen=True)
class PublicKey:
    """Public parameters of a dealt threshold key set.

    Attributes:
        n: RSA modulus (product of two safe primes).
        n_squared: n*n, the ciphertext-space modulus.
        g: plaintext-subgroup generator, fixed to n + 1.
        combine_delta: n_parties! used to keep share-combination
            Lagrange coefficients integral.
        n_parties: number of key shares dealt.
        threshold: minimum number of shares that can decrypt.
    """

    n: int
    n_squared: int
    g: int
    combine_delta: int
    n_parties: int
    threshold: int

    def __post_init__(self) -> None:
        if self.n_squared != self.n * self.n:
            raise ValueError("n_squared must equal n*n")
        if not 1 <= self.threshold <= self.n_parties:
            raise ValueError(
                f"threshold must be in [1, n_parties], got "
                f"{self.threshold} of {self.n_parties}"
            )


@dataclass(frozen=True)
class KeyShare:
    """One party's Shamir share of the decryption exponent.

    No share-correctness proofs are attached: all protocol roles are
    honest-but-curious, so partial decryptions are trusted as computed.
    """

    party_index: int  # 1-based
    share_value: int
    public: PublicKey = field(repr=False)

    def __post_init__(self) -> None:
        if not 1 <= self.party_index <= self.public.n_parties:
            raise ValueError(
                f"party_index {self.party_index} outside [1, "
                f"{self.public.n_parties}]"
            )


def _safe_prime(bits: int, rng: random.Random) -> int:
    """Return p = 2q + 1 with both p and q prime and p of `bits` bits."""
    for _ in range(_MAX_PRIME_ATTEMPTS):
        q = rng.getrandbits(bits - 1) | (1 << (bits - 2)) | 1
        if not gmpy2.is_prime(q):
            continue
        p = 2 * q + 1
        if gmpy2.is_prime(p):
            return int(p)
    raise PrimeGenerationError(f"no safe prime of {bits} bits found")


def deal_keys(
    bit_length: int,
    n_parties: int,
    threshold: int,
    rng_seed: int | random.Random | None = None,
) -> tuple[PublicKey, list[KeyShare]]:
    """Deal a threshold key set from a trusted dealer.

    Args:
        bit_length: size of the modulus n in bits; >= 256 (test scale),
            2048 recommended for real deployments.
        n_parties: number of shares to issue.
        threshold: how many shares are needed to decrypt.
        rng_seed: integer seed or a ``random.Random``-like source for
            reproducible dealing; ``None`` uses system randomness.

    Returns:
        The public key and one ``KeyShare`` per party (1-based indices).
    """
    if bit_length < MIN_KEY_BITS:
        raise ValueError(f"bit_length must be >= {MIN_KEY_BITS}")
    if not 1 <= threshold <= n_parties:
        raise ValueError(
            f"threshold must satisfy 1 <= threshold <= n_parties, got "
            f"{threshold} of {n_parties}"
        )

    if rng_seed is None:
        rng: random.Random = random.SystemRandom()
    elif isinstance(rng_seed, int):
        rng = random.Random(rng_seed)
    else:
        rng = rng_seed

    half = bit_length // 2
    while True:
        p = _safe_prime(half, rng)
        q = _safe_prime(bit_length - half, rng)
        if p != q and (p * q).bit_length() == bit_length:
            break

    n = p * q
    m = ((p - 1) // 2) * ((q - 1) // 2)  # p'q', the secret subgroup order
    # d = 0 (mod m) and d = 1 (mod n) via CRT; gcd(m, n) = 1 for safe primes.
    d = m * int(gmpy2.invert(m, n)) % (n * m)

    pk = PublicKey(
        n=n,
        n_squared=n * n,
        g=n + 1,
        combine_delta=math.factorial(n_parties),
        n_parties=n_parties,
        threshold=threshold,
    )

    share_modulus = n * m
    coeffs = [d] + [rng.randrange(share_modulus) for _ in range(threshold - 1)]
    shares = []
    for i in range(1, n_parties + 1):
        value = 0
        for k, a in enumerate(coeffs):
            value = (value + a * pow(i, k, share_modulus)) % share_modulus
        shares.append(KeyShare(party_index=i, share_value=value, public=pk))
    return pk, shares
