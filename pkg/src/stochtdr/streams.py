"""Bit-stream number representation and the primitive stochastic-logic gates.

A q-bit two's-complement word ``z`` carries three linked views:

* the raw integer ``z`` in ``{-2^(q-1), ..., 2^(q-1)-1}``,
* its ones-probability ``zbar = (z + 2^(q-1)) / (2^q - 1)`` in [0, 1],
* the signed value ``ztilde = 2*zbar - 1`` in [-1, 1].

A number is materialized as a Bernoulli bit stream whose ones-density
estimates ``zbar``.  Arithmetic on such streams reduces to single logic
gates: XNOR multiplies signed values, an inverter negates, and a MUX forms
a weighted average.  The pseudo-random words that drive the binary-to-
stochastic comparator come from maximal-length LFSRs, so a stream spanning
whole LFSR periods reproduces its ones-probability exactly.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

DEFAULT_Q = 8

# Maximal-length feedback tap masks per register width, for the Fibonacci
# form used here: feedback = parity(state & mask), then
# state <- (state >> 1) | (feedback << (q - 1)).
# Every mask is verified to visit all 2^q - 1 nonzero states (the suite
# re-checks the small widths by full enumeration).  Several masks per width
# are kept so that independent random sources can run distinct sequences.
_TAP_MASKS: dict[int, tuple[int, ...]] = {
    2: (0x3,),
    3: (0x3, 0x5),
    4: (0x3, 0x9),
    5: (0x5, 0x9, 0xF, 0x17, 0x1B, 0x1D),
    6: (0x3, 0x1B, 0x21, 0x27, 0x2D, 0x33),
    7: (0x3, 0x9, 0xF, 0x11, 0x1D, 0x27, 0x2B, 0x39,
        0x3F, 0x41, 0x4B, 0x53, 0x55, 0x65, 0x6F, 0x71),
    8: (0x1D, 0x2B, 0x2D, 0x4D, 0x5F, 0x63, 0x65, 0x69,
        0x71, 0x87, 0x8D, 0xA9, 0xC3, 0xCF, 0xE7, 0xF5),
    9: (0x11, 0x1B, 0x21, 0x2D, 0x33, 0x59, 0x5F, 0x69,
        0x6F, 0x77, 0x7D, 0x87, 0x95, 0xA3, 0xA5, 0xAF),
    10: (0x9, 0x1B, 0x27, 0x2D, 0x65, 0x6F, 0x81, 0x8B,
         0xC5, 0xD7, 0xE7, 0xF3, 0xFF, 0x10D, 0x119, 0x123),
    11: (0x5, 0x17, 0x2B, 0x2D, 0x47, 0x63, 0x65, 0x71,
         0x7B, 0x8D, 0x95, 0x9F, 0xA9, 0xB1, 0xCF, 0xD1),
    12: (0x53, 0x69, 0x7B, 0x7D, 0x99, 0xD1, 0xEB, 0x107,
         0x11F, 0x123, 0x13B, 0x14F, 0x157, 0x161, 0x16B, 0x185),
    13: (0x1B, 0x27, 0x35, 0x53, 0x65, 0x6F),
    14: (0x2B, 0x39, 0x53, 0x5F, 0x7B, 0xA9),
    15: (0x3, 0x11, 0x17, 0x2D, 0x35, 0x5F),
    16: (0x2D, 0x39, 0x3F, 0x53, 0xBD, 0xD7),
}


def supported_widths() -> tuple[int, ...]:
    """Register widths for which maximal-length taps are available."""
    return tuple(sorted(_TAP_MASKS))


def maximal_taps(q: int, index: int = 0) -> int:
    """Return a maximal-length tap mask for width ``q``.

    ``index`` selects among the known masks (wrapping), so callers that
    need several decorrelated sources can hand each one its own sequence.
    """
    if q not in _TAP_MASKS:
        raise ValueError(f"no maximal-length taps known for width q={q}")
    masks = _TAP_MASKS[q]
    return masks[index % len(masks)]


# ---------------------------------------------------------------------------
# value / stream types


@dataclass(frozen=True)
class BipolarValue:
    """A q-bit two's-complement word with its probability and signed views."""

    z: int
    q: int = DEFAULT_Q

    def __post_init__(self):
        if self.q < 2:
            raise ValueError(f"word width must be >= 2, got q={self.q}")
        half = 1 << (self.q - 1)
        if not (-half <= self.z < half):
            raise ValueError(f"z={self.z} outside two's-complement range at q={self.q}")

    @property
    def offset(self) -> int:
        """Unsigned offset-binary reading, z + 2^(q-1), in {0, ..., 2^q - 1}."""
        return self.z + (1 << (self.q - 1))

    @property
    def unipolar(self) -> float:
        """Ones-probability zbar = (z + 2^(q-1)) / (2^q - 1)."""
        return self.offset / ((1 << self.q) - 1)

    @property
    def real(self) -> float:
        """Signed value ztilde = 2*zbar - 1."""
        return 2.0 * self.unipolar - 1.0

    @classmethod
    def from_offset(cls, offset: int, q: int = DEFAULT_Q) -> "BipolarValue":
        return cls(int(offset) - (1 << (q - 1)), q)

    @classmethod
    def from_real(cls, x: float, q: int = DEFAULT_Q) -> "BipolarValue":
        """Nearest representable value to ``x`` in [-1, 1], ties toward zero."""
        if not -1.0 <= x <= 1.0:
            raise ValueError(f"value {x} outside [-1, 1]")
        return cls.from_offset(int(real_to_offset(np.asarray(x), q)), q)


def offset_to_real(offset, q: int):
    """Vectorized offset -> signed value map."""
    full = (1 << q) - 1
    return (2.0 * np.asarray(offset) - full) / full


def real_to_offset(x, q: int):
    """Vectorized nearest-representable quantizer, ties toward zero.

    Midpoint cases resolve toward the representable value of smaller
    magnitude; the dead-center tie between z = -1 and z = 0 picks z = 0.
    """
    full = (1 << q) - 1
    t = (np.asarray(x, dtype=np.float64) + 1.0) * 0.5 * full
    k = np.floor(t)
    frac = t - k
    center_up = (2 * k + 1) <= full  # below (or at) the zbar = 0.5 midpoint
    up = (frac > 0.5) | ((frac == 0.5) & center_up)
    return np.clip(k + up, 0, full).astype(np.int64)


def quantize(x, q: int = DEFAULT_Q):
    """Round an array of signed values onto the width-q representable grid."""
    return offset_to_real(real_to_offset(x, q), q)


@dataclass(frozen=True, eq=False)
class BitStream:
    """A finite Bernoulli bit sequence; ones-density estimates a probability."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1 or bits.size < 1:
            raise ValueError("bit stream must be a nonempty 1-D sequence")
        if bits.max(initial=0) > 1:
            raise ValueError("bit stream may contain only 0 and 1")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return self.bits.size

    @property
    def L(self) -> int:
        return self.bits.size

    @property
    def ones(self) -> int:
        return int(self.bits.sum())

    @property
    def unipolar_estimate(self) -> float:
        """Fraction of ones, the empirical zbar."""
        return self.ones / self.bits.size

    @property
    def bipolar_estimate(self) -> float:
        """(#ones - #zeros) / L, the empirical ztilde."""
        return 2.0 * self.unipolar_estimate - 1.0


# ---------------------------------------------------------------------------
# LFSR word source


@dataclass(frozen=True)
class LfsrGenerator:
    """Maximal-length Fibonacci LFSR emitting q-bit words (its own state).

    The state is never zero and the state sequence has period 2^q - 1, so
    over whole periods every nonzero word appears exactly once.
    """

    q: int = DEFAULT_Q
    state: int = 1
    taps: int | None = None

    def __post_init__(self):
        taps = self.taps if self.taps is not None else maximal_taps(self.q)
        object.__setattr__(self, "taps", taps)
        full = (1 << self.q) - 1
        if not (1 <= self.state <= full):
            raise ValueError(f"LFSR seed/state must be a nonzero {self.q}-bit word")
        if not (1 <= taps <= full):
            raise ValueError("tap mask must be a nonzero q-bit word")

    def advanced(self, steps: int) -> "LfsrGenerator":
        """Jump the generator forward by ``steps`` outputs."""
        cycle, pos = _lfsr_cycle(self.q, self.taps)
        i = (pos[self.state] + steps) % cycle.size
        return LfsrGenerator(self.q, int(cycle[i]), self.taps)

    def words(self, count: int) -> np.ndarray:
        """The next ``count`` output words as an array (generator not advanced)."""
        cycle, pos = _lfsr_cycle(self.q, self.taps)
        idx = (pos[self.state] + np.arange(count)) % cycle.size
        return cycle[idx]


def lfsr_next(gen: LfsrGenerator) -> tuple[LfsrGenerator, int]:
    """Advance one step; returns (advanced generator, current output word).

    The output word is the state *before* advancing, so the first word a
    fresh generator emits is its seed.
    """
    fb = int(bin(gen.state & gen.taps).count("1")) & 1
    nxt = (gen.state >> 1) | (fb << (gen.q - 1))
    return LfsrGenerator(gen.q, nxt, gen.taps), gen.state


@functools.lru_cache(maxsize=64)
def _lfsr_cycle(q: int, taps: int) -> tuple[np.ndarray, np.ndarray]:
    """Full state cycle from state 1 plus a state -> position lookup table."""
    full = (1 << q) - 1
    cycle = np.empty(full, dtype=np.int64)
    s = 1
    for i in range(full):
        cycle[i] = s
        fb = bin(s & taps).count("1") & 1
        s = (s >> 1) | (fb << (q - 1))
    if s != 1:
        raise ValueError(f"tap mask {taps:#x} is not maximal-length at q={q}")
    pos = np.full(full + 1, -1, dtype=np.int64)
    pos[cycle] = np.arange(full)
    if (pos[1:] < 0).any():
        raise ValueError(f"tap mask {taps:#x} is not maximal-length at q={q}")
    return cycle, pos


# ---------------------------------------------------------------------------
# conversions


def b2s(v: BipolarValue, gen: LfsrGenerator, L: int) -> BitStream:
    """Binary-to-stochastic conversion by comparator.

    Bit r is 1 iff the r-th LFSR word is <= the offset-binary reading of
    ``v``.  Because the LFSR emits each word in {1, ..., 2^q - 1} once per
    period, the ones-fraction over whole periods equals zbar exactly.
    """
    if L < 1:
        raise ValueError("stream length must be >= 1")
    if gen.q != v.q:
        raise ValueError(f"generator width q={gen.q} != value width q={v.q}")
    words = gen.words(L)
    return BitStream((words <= v.offset).astype(np.uint8))


def ones_count_to_offset(ones, L: int, q: int):
    """Offset word(s) nearest to the stream estimate, ties toward zero.

    Integer-exact: compares ones*(2^q - 1) against half-odd multiples of L
    rather than forming the quotient in floating point.
    """
    full = (1 << q) - 1
    ones = np.asarray(ones, dtype=np.int64)
    num = ones * full
    k = num // L
    rem = num - k * L
    up = (2 * rem > L) | ((2 * rem == L) & ((2 * k + 1) <= full))
    return k + up


def s2b(s: BitStream, q: int = DEFAULT_Q) -> BipolarValue:
    """Stochastic-to-binary conversion via an up/down counter.

    The counter ends at c = #ones - #zeros; the result is the representable
    value nearest to ztilde = c / L (ties toward zero).
    """
    offset = int(ones_count_to_offset(s.ones, s.L, q))
    return BipolarValue.from_offset(offset, q)


# ---------------------------------------------------------------------------
# gates


def _check_equal_length(*streams: BitStream) -> int:
    lengths = {st.L for st in streams}
    if len(lengths) != 1:
        raise ValueError(f"stream length mismatch: {sorted(lengths)}")
    return lengths.pop()


def stoch_mult(a: BitStream, b: BitStream) -> BitStream:
    """XNOR gate: multiplies signed values of statistically independent streams."""
    _check_equal_length(a, b)
    return BitStream(np.where(a.bits == b.bits, 1, 0).astype(np.uint8))


def stoch_negate(s: BitStream) -> BitStream:
    """Inverter: negates the signed value exactly, bit for bit."""
    return BitStream((1 - s.bits).astype(np.uint8))


def stoch_mux_average(a: BitStream, b: BitStream, select: BitStream) -> BitStream:
    """MUX gate: picks bit from ``a`` where select is 1, else from ``b``.

    With an independent select stream of ones-probability alpha the output
    signed value averages to alpha*za + (1 - alpha)*zb.
    """
    _check_equal_length(a, b, select)
    return BitStream(np.where(select.bits == 1, a.bits, b.bits).astype(np.uint8))


def quantize_probability(p: float, q: int = DEFAULT_Q) -> int:
    """Probability in [0, 1] -> comparator threshold word (round to nearest)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    full = (1 << q) - 1
    return int(np.floor(p * full + 0.5))


def unipolar_select_stream(p: float, gen: LfsrGenerator, L: int) -> BitStream:
    """Pure-probability stream: each bit 1 with the q-bit quantization of ``p``.

    Used for MUX select lines, which carry a mixing probability rather than
    a bipolar-encoded number.
    """
    if L < 1:
        raise ValueError("stream length must be >= 1")
    threshold = quantize_probability(p, gen.q)
    words = gen.words(L)
    return BitStream((words <= threshold).astype(np.uint8))
