"""
Slice-splitting baseline: error-free slices, k(k+1)/2 partial products, reduction.
"""
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np

import ozmm.logging
from ozmm import normalize, utils
from ozmm.exceptions import (
    ExponentRangeError,
    PreconditionError,
    ShapeMismatchError,
    SliceWidthError,
)
from ozmm.numeric import (
    Matrix,
    MatrixF64,
    MultiWordMatrix,
    as_stack,
    exact_components,
    floor_log2_components,
    subtract_components,
    vdyadic_to_float,
    vshift_round,
    words_from_exact,
)
from ozmm.oracle import ExactMatrix, compare, exact_matmul
from ozmm.residue import GemmCounter
from ozmm.split import Side

MANTISSA_BITS = 53
MIN_EXPONENT = -1074


class SliceMode(Enum):
    FULL = "full"
    TRUNCATED = "truncated"


class SchemeOneConfig(NamedTuple):
    k: int
    l: Optional[int] = None
    q: Optional[int] = None

    @property
    def ell(self) -> int:
        return self.l if self.l is not None else self.k


class SliceDecomposition(NamedTuple):
    """A == sum(slices) + remainder, exactly.

    `remainders[j]` is A minus its first j slices, so `remainders[0]` is A and
    `remainders[-1]` the trailing remainder. `exponents` holds the per-row (or
    per-column) floor(log2) of the largest magnitude.
    """

    slices: Tuple[MatrixF64, ...]
    remainder: Matrix
    slice_width: int
    side: Side
    remainders: Tuple[Matrix, ...]
    exponents: np.ndarray

    @property
    def k(self) -> int:
        return len(self.slices) + 1


class ErrorCurveRow(NamedTuple):
    k: int
    muls: int
    max_rel_err: float


def slice_width(q: int) -> int:
    """Bits per slice so any product of two slices sums exactly over q terms.

    >>> slice_width(1024)
    21
    """
    w = (MANTISSA_BITS - utils.ceil_log2(max(int(q), 1))) // 2
    if w <= 0:
        raise SliceWidthError(f"Inner dimension {q} is too large for binary64 slicing.")
    return w


def _as_matrix(N: np.ndarray, L: np.ndarray, multiword: bool) -> Matrix:
    words = words_from_exact(N, L)
    if not multiword and len(words) == 1:
        return MatrixF64(words[0])
    return MultiWordMatrix(words)


def split_slices(A, side, k: int, q: int = None) -> SliceDecomposition:
    """Peel k - 1 slices of w significant bits off A, row by row (LEFT) or column by column (RIGHT).

    Slice i of row r lives on the grid 2**(E_r + 1 - i * w), where E_r is the
    exponent of the row's largest entry; each slice is the current remainder
    rounded to nearest (ties to even) on that grid.
    """
    if k < 1:
        raise PreconditionError(f"Slice count must be at least 1, got {k}.")
    A = normalize.normalize_matrix(A).check_finite()
    side = utils.get_enum_value(Side, side)
    if side is Side.WHOLE:
        raise PreconditionError("Slices are taken by rows or by columns.")
    multiword = isinstance(A, MultiWordMatrix)
    inner = A.cols if side is Side.LEFT else A.rows
    w = slice_width(q if q is not None else inner)

    stack = as_stack(A)
    if side is Side.RIGHT:
        stack = stack.transpose(0, 2, 1)
    N, L = exact_components(stack)
    E = np.zeros(N.shape[0], dtype=np.int64)
    if N.size:
        has = (N != 0).any(axis=1)
        E = np.where(has, floor_log2_components(N, L).max(axis=1), 0).astype(np.int64)

    def orient(X: np.ndarray) -> np.ndarray:
        return X.T if side is Side.RIGHT else X

    slices, remainders = [], [A]
    for i in range(1, k):
        grid = np.broadcast_to((E + 1 - i * w)[:, np.newaxis], N.shape)
        n = np.asarray(vshift_round(N, L - grid), dtype=object)
        if np.any((n != 0) & (grid < MIN_EXPONENT)):
            raise ExponentRangeError(f"Slice {i} falls below the binary64 range.")
        slices.append(MatrixF64(orient(vdyadic_to_float(n, -grid).astype(np.float64))))
        N, L = subtract_components(N, L, n, grid)
        N = np.asarray(N, dtype=object)
        rest = _as_matrix(N, L, multiword)
        remainders.append(rest if side is Side.LEFT else rest.T)
    return SliceDecomposition(
        tuple(slices), remainders[-1], w, side, tuple(remainders), E
    )


def _pairs(k: int, ell: int, mode: SliceMode) -> List[Tuple[int, int]]:
    """1-based (i, j) slice pairs in descending significance."""
    if mode is SliceMode.TRUNCATED:
        limit = max(k, ell) + 1
        pairs = [(i, j) for i in range(1, k + 1) for j in range(1, ell + 1) if i + j <= limit]
    else:
        pairs = [(i, j) for i in range(1, k) for j in range(1, k) if i + j <= k]
    return sorted(pairs, key=lambda p: (p[0] + p[1], p[0]))


def ozaki1_matmul(
    A,
    B,
    config: SchemeOneConfig,
    mode=SliceMode.TRUNCATED,
    words: int = 1,
    counter: GemmCounter = None,
    logger=None,
) -> Union[MatrixF64, MultiWordMatrix]:
    """Slice-splitting product.

    TRUNCATED keeps the k leading slices of A and B and sums A_i B_j over
    i + j <= k + 1. FULL keeps k - 1 slices and adds the remainder terms
    sum_i A_i Bbar_{k+1-i} + Abar_k B. Both use k(k+1)/2 products.

    With `words` > 1 (or multi-word inputs) the products are formed and
    reduced exactly and the result is returned as `words` binary64 words;
    otherwise reduction is a plain binary64 sum in descending significance.
    """
    logger = ozmm.logging.setup(logger=logger)
    A, B = normalize.normalize_matrix(A), normalize.normalize_matrix(B)
    if A.cols != B.rows:
        raise ShapeMismatchError(f"Cannot multiply {A.shape} by {B.shape}.")
    if config.k < 1 or config.ell < 1:
        raise PreconditionError(f"Slice counts must be at least 1: {config}")
    if words < 1:
        raise ShapeMismatchError(f"Output word count must be at least 1, got {words}.")
    mode = utils.get_enum_value(SliceMode, mode)
    if mode is SliceMode.FULL and config.k != config.ell:
        raise PreconditionError("FULL mode needs k == l.")
    counter = counter if counter is not None else GemmCounter()
    q = config.q or A.cols
    exact = words > 1 or isinstance(A, MultiWordMatrix) or isinstance(B, MultiWordMatrix)

    with logger.context(action="ozaki1", bind={"k": config.k, "mode": mode.value}):
        if mode is SliceMode.TRUNCATED:
            da = split_slices(A, Side.LEFT, config.k + 1, q)
            db = split_slices(B, Side.RIGHT, config.ell + 1, q)
        else:
            da = split_slices(A, Side.LEFT, config.k, q)
            db = split_slices(B, Side.RIGHT, config.k, q)

        terms = [(da.slices[i - 1], db.slices[j - 1]) for i, j in _pairs(config.k, config.ell, mode)]
        if mode is SliceMode.FULL:
            k = config.k
            terms += [(da.slices[i - 1], db.remainders[k - i]) for i in range(1, k)]
            terms.append((da.remainder, B))
        logger.debug("Partial products planned.", count=len(terms), slice_width=da.slice_width)

        if exact:
            total = None
            for X, Y in terms:
                P = exact_matmul(X, Y)
                counter.count(GemmCounter.SLICE)
                total = P if total is None else _exact_add(total, P)
            return total.to_f64() if words == 1 else total.to_multiword(words)

        acc = np.zeros((A.rows, B.cols))
        for X, Y in terms:
            acc = acc + np.matmul(X.data, Y.data)
            counter.count(GemmCounter.SLICE)
    return MatrixF64(acc)


def _exact_add(x: ExactMatrix, y: ExactMatrix) -> ExactMatrix:
    shift = max(x.shift, y.shift)
    return ExactMatrix(x.rescaled(shift) + y.rescaled(shift), shift)


def ozaki1_error_curve(
    n: int, k_range, generator, mode=SliceMode.TRUNCATED, words: int = 1, logger=None
) -> List[ErrorCurveRow]:
    """Max relative error against the exact product for each k in `k_range`.

    `generator` is a GeneratorSpec; A uses its seed and B the next one.
    """
    from ozmm.generate import generate

    spec = generator._replace(rows=n, cols=n)
    A = generate(spec)
    B = generate(spec._replace(seed=spec.seed + 1))
    exact = exact_matmul(A, B)
    rows = []
    for k in normalize.normalize_range(k_range):
        counter = GemmCounter()
        C = ozaki1_matmul(A, B, SchemeOneConfig(k), mode, words, counter, logger)
        rows.append(ErrorCurveRow(k, counter[GemmCounter.SLICE], compare(C, exact).max_rel_err))
    return rows
