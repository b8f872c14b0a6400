"""Fixed-point encoding of signed reals into the plaintext ring.

Two layers:

* ``FixedPointCodec`` maps one real to one ring element using a
  two's-complement convention (negatives in the upper half of Z_n,
  decode threshold n/2). Homomorphic sums of up to ``n_summands``
  encodings decode to the real sum within ``n_summands * 2^-f``.
* ``VectorCodec`` packs several fixed-point slots into one plaintext so
  vector-valued responses need fewer ciphertexts. Slots carry a bias to
  stay non-negative, so slot-aligned sums never borrow across slots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class MagnitudeOverflowError(ValueError):
    """Value too large for the codec's overflow budget."""


@dataclass(frozen=True)
class FixedPointCodec:
    """Scalar codec bound to a plaintext modulus.

    Attributes:
        modulus: the plaintext ring size n.
        frac_bits: f, fractional precision; encode error <= 2^-f.
        max_magnitude: largest |real| encodable such that a sum of
            ``n_summands`` encodings stays below n/2 (no wraparound).
        n_summands: the summand budget `max_magnitude` was derived for.
    """

    modulus: int
    frac_bits: int = 32
    n_summands: int = 1
    max_magnitude: float = 0.0

    def __post_init__(self) -> None:
        if self.frac_bits < 1:
            raise ValueError("frac_bits must be positive")
        if self.n_summands < 1:
            raise ValueError("n_summands must be positive")
        if self.max_magnitude == 0.0:
            bound = self.modulus // (2 ** (self.frac_bits + 1) * self.n_summands)
            object.__setattr__(self, "max_magnitude", float(bound))


def fp_encode(codec: FixedPointCodec, x: float) -> int:
    """Encode a signed real as a plaintext ring element."""
    if not math.isfinite(x) or abs(x) > codec.max_magnitude:
        raise MagnitudeOverflowError(
            f"|{x!r}| exceeds encodable magnitude {codec.max_magnitude}"
        )
    q = round(x * (1 << codec.frac_bits))
    return q % codec.modulus


def fp_decode(codec: FixedPointCodec, m: int, n_summands: int = 1) -> float:
    """Decode a ring element that is a sum of <= n_summands encodings."""
    if not 0 <= m < codec.modulus:
        raise ValueError("encoded value outside the plaintext ring")
    if m > codec.modulus // 2:
        m -= codec.modulus
    return m / (1 << codec.frac_bits)


@dataclass(frozen=True)
class VectorCodec:
    """Multi-slot packing of fixed-point values into ring plaintexts.

    Each slot stores round(x * 2^frac_bits) + bias in ``slot_width``
    bits, sized so sums of ``n_summands`` packed plaintexts cannot
    overflow a slot. ``slots`` is how many values fit per plaintext.
    """

    modulus_bits: int
    frac_bits: int
    int_bits: int
    n_summands: int

    @property
    def slot_width(self) -> int:
        headroom = max(1, (self.n_summands - 1).bit_length())
        return self.frac_bits + self.int_bits + 1 + headroom + 1

    @property
    def slots(self) -> int:
        return max(1, (self.modulus_bits - 2) // self.slot_width)

    @property
    def _bias(self) -> int:
        return 1 << (self.frac_bits + self.int_bits)

    def ciphertext_count(self, length: int) -> int:
        return (length + self.slots - 1) // self.slots

    def encode_vector(self, values) -> list[int]:
        """Pack a sequence of reals into a list of plaintext integers."""
        scale = 1 << self.frac_bits
        bias = self._bias
        width = self.slot_width
        packed: list[int] = []
        word = 0
        filled = 0
        for x in values:
            q = round(float(x) * scale)
            if abs(q) >= bias:
                raise MagnitudeOverflowError(
                    f"|{x!r}| exceeds 2^{self.int_bits} packing magnitude"
                )
            word |= (q + bias) << (filled * width)
            filled += 1
            if filled == self.slots:
                packed.append(word)
                word = 0
                filled = 0
        if filled:
            packed.append(word)
        return packed

    def decode_vector(self, packed, length: int, n_summands: int) -> list[float]:
        """Unpack slot-aligned sums of `n_summands` packed plaintexts."""
        if n_summands > self.n_summands:
            raise ValueError("more summands than the codec headroom allows")
        scale = 1 << self.frac_bits
        bias_total = n_summands * self._bias
        width = self.slot_width
        mask = (1 << width) - 1
        out: list[float] = []
        for word in packed:
            word = int(word)
            for _ in range(self.slots):
                if len(out) == length:
                    break
                out.append(((word & mask) - bias_total) / scale)
                word >>= width
        if len(out) != length:
            raise ValueError(
                f"packed data holds {len(out)} slots, expected {length}"
            )
        return out
