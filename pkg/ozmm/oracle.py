"""
Exact reference products and error metrics.

Binary64 values are dyadic, so every matrix is held as integers over one
power of two; nothing here rounds.
"""
from fractions import Fraction
from itertools import combinations
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import gmpy2
import numpy as np

from ozmm import utils
from ozmm.exceptions import NoSolutionError, PreconditionError, ShapeMismatchError
from ozmm.numeric import (
    BigIntMatrix,
    MatrixF64,
    MultiWordMatrix,
    exact_components,
    vdyadic_to_float,
    vshift_trunc,
    words_from_exact,
)

BRUTE_FORCE_LIMIT = 10 ** 7
_SCAN_CHUNK = 1 << 16


class ExactMatrix(NamedTuple):
    """Entry (i, j) is ints[i, j] * 2**-shift."""

    ints: np.ndarray
    shift: int = 0

    @classmethod
    def from_matrix(cls, X) -> "ExactMatrix":
        if isinstance(X, ExactMatrix):
            return X
        if isinstance(X, BigIntMatrix):
            return cls(X.data, 0)
        if isinstance(X, (MatrixF64, MultiWordMatrix)):
            X.check_finite()
            N, L = exact_components(X.stack())
            shift = max(0, -int(L.min())) if L.size else 0
            return cls(np.asarray(vshift_trunc(N, L + shift), dtype=object), shift)
        raise PreconditionError(f"No exact form for {type(X).__name__}.")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.ints.shape

    def entry(self, i: int, j: int) -> Fraction:
        return Fraction(int(self.ints[i, j]), 1 << self.shift)

    def rescaled(self, shift: int) -> np.ndarray:
        """Integers of this matrix over 2**shift, for shift >= self.shift."""
        return np.asarray(vshift_trunc(self.ints, shift - self.shift), dtype=object)

    def to_f64(self) -> MatrixF64:
        return MatrixF64(vdyadic_to_float(self.ints, self.shift).astype(np.float64))

    def to_multiword(self, v: int) -> MultiWordMatrix:
        L = np.full(self.shape, -self.shift, dtype=np.int64)
        return MultiWordMatrix(words_from_exact(self.ints, L, v))

    def __eq__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        if self.shape != other.shape:
            return False
        shift = max(self.shift, other.shift)
        return bool(np.all(self.rescaled(shift) == other.rescaled(shift)))

    __hash__ = None


def exact_matmul(A, B) -> ExactMatrix:
    """A @ B without rounding; accepts MatrixF64, MultiWordMatrix, BigIntMatrix or ExactMatrix."""
    a, b = ExactMatrix.from_matrix(A), ExactMatrix.from_matrix(B)
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"Cannot multiply {a.shape} by {b.shape}.")
    if a.shape[1] == 0:
        return ExactMatrix(np.zeros((a.shape[0], b.shape[1]), dtype=object), 0)
    return ExactMatrix(np.matmul(a.ints, b.ints), a.shift + b.shift)


def exact_matmul3(A, B, C) -> ExactMatrix:
    return exact_matmul(exact_matmul(A, B), C)


class ErrorReport(NamedTuple):
    max_rel_err: float
    max_abs_err: float
    location: Optional[Tuple[int, int]]

    def _json(self):
        return self._asdict()


def _ratio(num: int, den: int) -> float:
    if den == 0:
        return 0.0
    try:
        return num / den
    except OverflowError:
        return float("inf")


_vratio = np.frompyfunc(_ratio, 2, 1)


def compare(approx, exact) -> ErrorReport:
    """Max relative and absolute error of `approx` against `exact`.

    Entries whose exact value is zero enter the absolute error only. Multi-word
    approximations are summed exactly before differencing.
    """
    exact = ExactMatrix.from_matrix(exact)
    approx = ExactMatrix.from_matrix(approx)
    if approx.shape != exact.shape:
        raise ShapeMismatchError(f"Cannot compare {approx.shape} with {exact.shape}.")
    if not exact.ints.size:
        return ErrorReport(0.0, 0.0, None)

    shift = max(approx.shift, exact.shift)
    e = exact.rescaled(shift)
    diff = np.abs(approx.rescaled(shift) - e)
    abs_err = vdyadic_to_float(diff, shift).astype(np.float64)
    rel_err = _vratio(diff, np.abs(e)).astype(np.float64)

    nonzero = e != 0
    if nonzero.any():
        masked = np.where(nonzero, rel_err, -1.0)
        location = np.unravel_index(int(np.argmax(masked)), masked.shape)
        max_rel = float(masked[location])
    else:
        location = np.unravel_index(int(np.argmax(abs_err)), abs_err.shape)
        max_rel = 0.0
    return ErrorReport(
        max_rel, float(abs_err.max()), tuple(int(i) for i in location)
    )


def brute_force_crt(residues: Sequence[int], moduli: Sequence[int]) -> int:
    """The unique x in [-M/2, M/2) congruent to every residue, found by scanning.

    >>> brute_force_crt((2, 3, 2), (3, 5, 7))
    23
    """
    residues, moduli = [int(r) for r in residues], [int(m) for m in moduli]
    if len(residues) != len(moduli) or not moduli:
        raise ShapeMismatchError("Need one residue per modulus.")
    if any(m < 2 for m in moduli):
        raise PreconditionError(f"Moduli must be at least 2: {moduli}")
    for a, b in combinations(moduli, 2):
        if gmpy2.gcd(a, b) != 1:
            raise NoSolutionError(f"Moduli {a} and {b} are not coprime.")
    M = 1
    for m in moduli:
        M *= m
    if M > BRUTE_FORCE_LIMIT:
        raise PreconditionError(f"M = {M} is too large to enumerate.")

    lo = -(M // 2)
    for chunk in utils.batch(range(lo, lo + M), _SCAN_CHUNK):
        x = np.arange(chunk.start, chunk.stop, dtype=np.int64)
        hit = np.ones(x.shape, dtype=bool)
        for r, m in zip(residues, moduli):
            hit &= (x - r) % m == 0
        found = np.flatnonzero(hit)
        if found.size:
            return int(x[found[0]])
    raise NoSolutionError(f"No x in [{lo}, {lo + M}) matches {residues} mod {moduli}.")
