"""
Matrix containers and the exact scalar kernels everything else is built on.

Every binary64 value is a dyadic rational, so the exact paths below work on
pairs ``(N, L)`` meaning ``N * 2**L`` with Python integers ``N``.
"""
import math
import struct
from typing import List, Sequence, Tuple, Union

import numpy as np

from ozmm import utils
from ozmm.exceptions import (
    ExponentRangeError,
    ModulusError,
    NonFiniteInputError,
    PreconditionError,
    ShapeMismatchError,
)

UNIT_ROUNDOFF = 2.0 ** -53
_INT64_MAX = np.iinfo(np.int64).max


# SCALAR KERNELS


def symmetric_mod(a: int, m: int) -> int:
    """Remainder of `a` modulo `m` closest to zero.

    Half-way residues of an even modulus map to -m/2.

    >>> symmetric_mod(103, 5)
    -2
    >>> symmetric_mod(128, 256)
    -128
    """
    a, m = int(a), int(m)
    if m < 2:
        raise ModulusError(f"Modulus must be at least 2, got {m}.")
    return a - m * ((2 * a + m) // (2 * m))


def pow2_scale_exponent(x: float) -> int:
    """floor(log2(|x|)) read from the binary64 encoding (subnormals included).

    >>> pow2_scale_exponent(0.75)
    -1
    """
    try:
        (bits,) = struct.unpack("<Q", struct.pack("<d", x))
    except struct.error as e:
        raise PreconditionError(f"Not a binary64 value: {x!r}") from e
    biased = (bits >> 52) & 0x7FF
    mantissa = bits & ((1 << 52) - 1)
    if biased == 0x7FF:
        raise NonFiniteInputError(f"Non-finite value {x!r} has no scale exponent.")
    if biased == 0:
        if mantissa == 0:
            raise PreconditionError("Zero has no scale exponent.")
        return mantissa.bit_length() - 1 - 1074
    return biased - 1023


def pow2_scale_exponents(values: np.ndarray) -> np.ndarray:
    """Vectorised pow2_scale_exponent; zero entries map to 0."""
    values = np.asarray(values, dtype=np.float64)
    if not np.isfinite(values).all():
        raise NonFiniteInputError("Non-finite value has no scale exponent.")
    _, exponents = np.frexp(values)
    return np.where(values != 0, exponents.astype(np.int64) - 1, 0)


def two_sum(a: float, b: float) -> Tuple[float, float]:
    """Error-free addition: a + b == s + e exactly."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def fast_two_sum(a: float, b: float) -> Tuple[float, float]:
    """Error-free addition for |a| >= |b|."""
    s = a + b
    return s, b - (s - a)


def grow_expansion(expansion: Sequence[float], b: float) -> List[float]:
    """Add `b` to a non-overlapping expansion (increasing magnitude), exactly."""
    q = b
    out = []
    for e in expansion:
        q, h = two_sum(q, e)
        if h:
            out.append(h)
    if q:
        out.append(q)
    return out


def multiword_renormalize(words: Sequence[float]) -> List[float]:
    """Rewrite an unevaluated sum so that u * |w[i]| >= |w[i + 1]|.

    The exact sum is kept whenever it fits in len(words) words.

    >>> multiword_renormalize([2.0 ** -80, 1.0, 0.0, 0.0]) == [1.0, 2.0 ** -80, 0.0, 0.0]
    True
    """
    values = [float(w) for w in words]
    if not all(math.isfinite(w) for w in values):
        raise NonFiniteInputError("Cannot renormalize non-finite words.")
    expansion = []
    for w in values:
        expansion = grow_expansion(expansion, w)
    out = []
    for _ in values:
        head = math.fsum(expansion)
        if not all(math.isfinite(e) for e in expansion) or not math.isfinite(head):
            raise ExponentRangeError("Leading word overflows binary64.")
        out.append(head)
        expansion = grow_expansion(expansion, -head)
    return out


def dyadic_to_float(x: int, shift: int) -> float:
    """Nearest binary64 to x * 2**-shift."""
    x, shift = int(x), int(shift)
    try:
        if shift <= 0:
            return float(x << -shift)
        return x / (1 << shift)
    except OverflowError as e:
        raise ExponentRangeError(
            f"Value with {x.bit_length() - shift} integer bits overflows binary64."
        ) from e


def shift_trunc(x: int, n: int) -> int:
    """x * 2**n truncated toward zero."""
    x, n = int(x), int(n)
    if n >= 0:
        return x << n
    return -((-x) >> -n) if x < 0 else x >> -n


def shift_round(x: int, n: int) -> int:
    """x * 2**n rounded to nearest, ties to even."""
    x, n = int(x), int(n)
    if n >= 0:
        return x << n
    q, r = divmod(x, 1 << -n)
    half = 1 << (-n - 1)
    if r > half or (r == half and q & 1):
        q += 1
    return q


def _bit_length(x: int) -> int:
    return abs(int(x)).bit_length()


vshift_trunc = np.frompyfunc(shift_trunc, 2, 1)
vshift_round = np.frompyfunc(shift_round, 2, 1)
vdyadic_to_float = np.frompyfunc(dyadic_to_float, 2, 1)
vbit_length = np.frompyfunc(_bit_length, 1, 1)


def _to_int(arr: np.ndarray) -> np.ndarray:
    if arr.size == 0:
        return arr
    return np.asarray(np.frompyfunc(int, 1, 1)(arr), dtype=object)


# MATRIX TYPES


class MatrixF64:
    """Dense row-major binary64 matrix."""

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeMismatchError(f"Expected a 2-D matrix, got shape {arr.shape}.")
        arr.setflags(write=False)
        self.data = arr

    def __repr__(self):
        return utils.repr(self, ["rows", "cols"])

    @classmethod
    def identity(cls, n: int) -> "MatrixF64":
        return cls(np.eye(n))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def T(self) -> "MatrixF64":
        return MatrixF64(self.data.T)

    def check_finite(self) -> "MatrixF64":
        if not np.isfinite(self.data).all():
            raise NonFiniteInputError("Matrix contains NaN or Inf.")
        return self

    def stack(self) -> np.ndarray:
        return self.data[np.newaxis]

    def to_multiword(self, v: int) -> "MultiWordMatrix":
        zeros = np.zeros(self.shape)
        return MultiWordMatrix([self] + [zeros] * (v - 1))


class MultiWordMatrix:
    """Unevaluated sum of `v` binary64 matrices, most significant first."""

    def __init__(self, words):
        words = tuple(w if isinstance(w, MatrixF64) else MatrixF64(w) for w in words)
        if not words:
            raise ShapeMismatchError("A multi-word matrix needs at least one word.")
        if any(w.shape != words[0].shape for w in words):
            raise ShapeMismatchError("All words must share one shape.")
        self.words = words

    def __repr__(self):
        return utils.repr(self, ["rows", "cols", "v"])

    @classmethod
    def from_stack(cls, stack: np.ndarray) -> "MultiWordMatrix":
        return cls(list(stack))

    @property
    def v(self) -> int:
        return len(self.words)

    @property
    def rows(self) -> int:
        return self.words[0].rows

    @property
    def cols(self) -> int:
        return self.words[0].cols

    @property
    def shape(self) -> Tuple[int, int]:
        return self.words[0].shape

    @property
    def T(self) -> "MultiWordMatrix":
        return MultiWordMatrix([w.T for w in self.words])

    def check_finite(self) -> "MultiWordMatrix":
        for w in self.words:
            w.check_finite()
        return self

    def stack(self) -> np.ndarray:
        return np.stack([w.data for w in self.words])

    def total(self) -> MatrixF64:
        """Binary64 sum of the words, least significant first."""
        acc = self.words[-1].data
        for w in reversed(self.words[:-1]):
            acc = acc + w.data
        return MatrixF64(acc)

    def is_normalized(self) -> bool:
        return all(
            bool(np.all(np.abs(hi.data) * UNIT_ROUNDOFF >= np.abs(lo.data)))
            for hi, lo in zip(self.words, self.words[1:])
        )


class BigIntMatrix:
    """Matrix of arbitrary-precision signed integers (numpy object array)."""

    __hash__ = None

    def __init__(self, data):
        if isinstance(data, np.ndarray):
            arr = data
        else:
            arr = _to_int(np.array(data, dtype=object))
        if arr.dtype != object:
            if arr.dtype.kind not in "iub":
                raise PreconditionError(f"Integer data expected, got dtype {arr.dtype}.")
            arr = arr.astype(object)
        if arr.ndim != 2:
            raise ShapeMismatchError(f"Expected a 2-D matrix, got shape {arr.shape}.")
        self.data = arr

    def __repr__(self):
        return utils.repr(self, ["rows", "cols"])

    def __eq__(self, other):
        if not isinstance(other, BigIntMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.all(self.data == other.data))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BigIntMatrix":
        return cls(np.zeros((rows, cols), dtype=object))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def T(self) -> "BigIntMatrix":
        return BigIntMatrix(self.data.T)

    def abs(self) -> "BigIntMatrix":
        return BigIntMatrix(np.abs(self.data))

    def max_abs(self) -> int:
        if self.data.size == 0:
            return 0
        return int(np.abs(self.data).max())

    def matmul(self, other: "BigIntMatrix") -> "BigIntMatrix":
        if self.cols != other.rows:
            raise ShapeMismatchError(f"Cannot multiply {self.shape} by {other.shape}.")
        if self.cols == 0:
            return BigIntMatrix.zeros(self.rows, other.cols)
        return BigIntMatrix(np.matmul(self.data, other.data))

    def to_numpy(self, dtype) -> np.ndarray:
        info = np.iinfo(dtype)
        if self.data.size and (
            int(self.data.min()) < info.min or int(self.data.max()) > info.max
        ):
            raise PreconditionError(f"Entries do not fit in {np.dtype(dtype).name}.")
        return self.data.astype(dtype)

    def tolist(self) -> list:
        return self.data.tolist()


class IntegerMatrix8:
    """8-bit signed integer matrix, the tensor-core input format."""

    def __init__(self, data):
        if isinstance(data, BigIntMatrix):
            arr = data.to_numpy(np.int8)
        else:
            arr = np.asarray(data)
            if arr.dtype != np.int8:
                arr = BigIntMatrix(arr).to_numpy(np.int8)
        if arr.ndim != 2:
            raise ShapeMismatchError(f"Expected a 2-D matrix, got shape {arr.shape}.")
        self.data = arr

    def __repr__(self):
        return utils.repr(self, ["shape"])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    def to_bigint(self) -> BigIntMatrix:
        return BigIntMatrix(self.data)


class IntegerMatrix32:
    """32-bit signed integer matrix, the tensor-core accumulator format."""

    def __init__(self, data):
        if isinstance(data, BigIntMatrix):
            arr = data.to_numpy(np.int32)
        else:
            arr = np.asarray(data)
            if arr.dtype != np.int32:
                arr = BigIntMatrix(arr).to_numpy(np.int32)
        self.data = arr

    def __repr__(self):
        return utils.repr(self, ["shape"])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape


Matrix = Union[MatrixF64, MultiWordMatrix]


def matrix_symmetric_mod(A: BigIntMatrix, m: int) -> BigIntMatrix:
    """Elementwise symmetric_mod."""
    m = int(m)
    if m < 2:
        raise ModulusError(f"Modulus must be at least 2, got {m}.")
    data = A.data
    return BigIntMatrix(data - m * ((2 * data + m) // (2 * m)))


# EXACT DYADIC ARRAYS


def exact_components(stack: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Exact sum over axis 0 of a stack of binary64 arrays.

    Returns ``(N, L)``: an object array of Python ints and an int64 array with
    ``sum(stack)[idx] == N[idx] * 2**L[idx]`` exactly. Zero entries get L = 0.
    """
    stack = np.asarray(stack, dtype=np.float64)
    fractions, exponents = np.frexp(stack)
    mantissas = np.ldexp(fractions, 53).astype(np.int64)
    lows = exponents.astype(np.int64) - 53
    nonzero = mantissas != 0
    base = np.where(nonzero, lows, _INT64_MAX).min(axis=0)
    base = np.where(nonzero.any(axis=0), base, 0)
    total = np.zeros(stack.shape[1:], dtype=object)
    for mantissa, low in zip(mantissas, lows):
        total = total + vshift_trunc(mantissa.astype(object), low - base)
    return total, base


def floor_log2_components(N: np.ndarray, L: np.ndarray) -> np.ndarray:
    """floor(log2 |N * 2**L|) per entry, int64 minimum for zeros."""
    nonzero = N != 0
    top = vbit_length(N).astype(np.int64) - 1 + L
    return np.where(nonzero, top, np.iinfo(np.int64).min)


def subtract_components(N, L, N2, L2) -> Tuple[np.ndarray, np.ndarray]:
    """Exact N * 2**L - N2 * 2**L2, on the finer of the two grids."""
    base = np.minimum(L, L2)
    diff = vshift_trunc(N, L - base) - vshift_trunc(N2, L2 - base)
    return diff, base


def words_from_exact(N: np.ndarray, L: np.ndarray, v: int = None) -> List[np.ndarray]:
    """Greedy nearest-word expansion of N * 2**L.

    With `v` unset, words are produced until the expansion is exact.
    """
    words = []
    limit = v if v is not None else 64
    while len(words) < limit:
        word = vdyadic_to_float(N, -L).astype(np.float64)
        words.append(word)
        if len(words) == limit:
            break
        Nw, Lw = exact_components(word[np.newaxis])
        N, L = subtract_components(N, L, Nw, Lw)
        if v is None and not np.any(N != 0):
            break
    return words


def as_stack(X: Matrix) -> np.ndarray:
    if isinstance(X, (MatrixF64, MultiWordMatrix)):
        return X.stack()
    raise PreconditionError(f"Expected a binary64 matrix, got {type(X).__name__}.")
