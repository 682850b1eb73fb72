"""Correlated unary bit-stream encodings and bit-wise stream algebra.

Streams are materialized as numpy bool arrays, index 0 being the first
transmitted symbol. Two encodings are used by the arithmetic unit:

* thermometer: a single run of ones anchored at the left or right end;
* even-spread: ones placed by the floor (Bresenham) rule
  ``bit[i] = floor((i+1)*v/L) > floor(i*v/L)``.

Operand pairs are prepared with the correlation each operation needs:
ADD uses opposite-endian thermometer codes of length ``2**(B+1)`` so an OR
gate yields the exact sum, SUB uses same-endian codes of length ``2**B`` so
XOR yields ``|x - w|``, and MUL pairs a thermometer code with an even-spread
code so AND yields ``ceil(x*w / 2**B)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from polyeo.errors import FormatError, RangeError, ShapeError

MAX_BITS = 16


class Encoding(enum.Enum):
    THERMOMETER = "thermometer"
    EVEN_SPREAD = "even_spread"
    RAW = "raw"


class Endianness(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


class Gate(enum.Enum):
    AND = "and"
    OR = "or"
    XOR = "xor"
    NAND = "nand"
    NOR = "nor"
    XNOR = "xnor"

    @classmethod
    def parse(cls, name: str) -> "Gate":
        try:
            return cls(name.lower())
        except ValueError:
            raise FormatError(f"unknown gate {name!r}") from None


def gate_truth(g: Gate, a, b):
    """Reference boolean truth function, element-wise on arrays or scalars."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if g is Gate.AND:
        return a & b
    if g is Gate.OR:
        return a | b
    if g is Gate.XOR:
        return a ^ b
    if g is Gate.NAND:
        return ~(a & b)
    if g is Gate.NOR:
        return ~(a | b)
    return ~(a ^ b)


@dataclass(frozen=True)
class UnaryStream:
    bits: np.ndarray
    encoding: Encoding = Encoding.RAW
    endianness: Endianness | None = None
    value: int = field(init=False)

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "value", int(bits.sum()))

    @property
    def length(self) -> int:
        return int(self.bits.size)

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def __eq__(self, other):
        if not isinstance(other, UnaryStream):
            return NotImplemented
        return (self.encoding == other.encoding
                and self.endianness == other.endianness
                and np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((str(self), self.encoding, self.endianness))

    @classmethod
    def from_string(cls, text: str) -> "UnaryStream":
        if set(text) - {"0", "1"}:
            raise FormatError(f"stream text must be 0/1 only: {text!r}")
        return cls(np.array([c == "1" for c in text], dtype=bool))


@dataclass(frozen=True)
class OperandPrecision:
    """Binary operand width ``B`` and the stream lengths it implies."""

    bits: int

    def __post_init__(self):
        if not isinstance(self.bits, (int, np.integer)) or not 1 <= self.bits <= MAX_BITS:
            raise RangeError(f"operand precision must be an integer in [1, {MAX_BITS}], got {self.bits!r}")

    @property
    def levels(self) -> int:
        return 1 << self.bits

    @property
    def mul_length(self) -> int:
        return 1 << self.bits

    @property
    def sub_length(self) -> int:
        return 1 << self.bits

    @property
    def add_length(self) -> int:
        return 1 << (self.bits + 1)


def _check_length(L: int) -> None:
    if L < 1 or L & (L - 1) or L > (1 << (MAX_BITS + 1)):
        raise FormatError(f"stream length must be a power of two <= 2**{MAX_BITS + 1}, got {L}")


def _check_values(values, L: int) -> np.ndarray:
    v = np.asarray(values, dtype=np.int64)
    if np.any(v < 0) or np.any(v > L):
        raise RangeError(f"value out of range [0, {L}]")
    return v


def thermometer_bits(values, L: int, end: Endianness) -> np.ndarray:
    """Thermometer codes for an array of values, shape ``values.shape + (L,)``."""
    _check_length(L)
    v = _check_values(values, L)
    idx = np.arange(L)
    if end is Endianness.LEFT:
        return idx < v[..., None]
    return idx >= (L - v)[..., None]


def even_spread_bits(values, L: int) -> np.ndarray:
    """Even-spread codes for an array of values, shape ``values.shape + (L,)``."""
    _check_length(L)
    v = _check_values(values, L)[..., None]
    idx = np.arange(L)
    return (idx + 1) * v // L > idx * v // L


def encode_thermometer(v: int, L: int, end: Endianness = Endianness.RIGHT) -> UnaryStream:
    return UnaryStream(thermometer_bits(v, L, end), Encoding.THERMOMETER, end)


def encode_even_spread(v: int, L: int) -> UnaryStream:
    return UnaryStream(even_spread_bits(v, L), Encoding.EVEN_SPREAD)


def _check_operands(x, w, p: OperandPrecision) -> None:
    for name, val in (("x", x), ("w", w)):
        arr = np.asarray(val)
        if np.any(arr < 0) or np.any(arr >= p.levels):
            raise RangeError(f"operand {name} out of range [0, {p.levels})")


def prepare_add(x: int, w: int, p: OperandPrecision) -> tuple[UnaryStream, UnaryStream]:
    _check_operands(x, w, p)
    L = p.add_length
    return encode_thermometer(x, L, Endianness.LEFT), encode_thermometer(w, L, Endianness.RIGHT)


def prepare_sub(x: int, w: int, p: OperandPrecision) -> tuple[UnaryStream, UnaryStream]:
    _check_operands(x, w, p)
    L = p.sub_length
    return encode_thermometer(x, L, Endianness.RIGHT), encode_thermometer(w, L, Endianness.RIGHT)


def prepare_mul(x: int, w: int, p: OperandPrecision) -> tuple[UnaryStream, UnaryStream]:
    _check_operands(x, w, p)
    L = p.mul_length
    return encode_thermometer(x, L, Endianness.RIGHT), encode_even_spread(w, L)


def stream_gate(a: UnaryStream, b: UnaryStream, g: Gate) -> UnaryStream:
    if a.length != b.length:
        raise ShapeError(f"stream length mismatch: {a.length} vs {b.length}")
    return UnaryStream(gate_truth(g, a.bits, b.bits))
