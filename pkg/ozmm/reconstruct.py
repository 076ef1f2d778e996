from typing import Iterable, NamedTuple, Optional

import numpy as np

from ozmm.crt import CrtTable
from ozmm.exceptions import AmbiguityError, ShapeMismatchError
from ozmm.numeric import (
    BigIntMatrix,
    MatrixF64,
    MultiWordMatrix,
    matrix_symmetric_mod,
    words_from_exact,
)
from ozmm.residue import ResidueProduct


class ReconstructedMatrix(NamedTuple):
    """X in [-M/2, M/2] with the exponents that undo the scaling.

    Entry (i, j) stands for x_ij * 2**-(row_exponents[i] + col_exponents[j] + shift).
    """

    x: BigIntMatrix
    row_exponents: np.ndarray
    col_exponents: np.ndarray
    certified_unique: bool
    bound: Optional[object] = None
    shift: int = 0


class ResidueAccumulator:
    """Streaming form of accumulate_and_reduce; each product can be dropped after `add`."""

    def __init__(self, table: CrtTable, shape):
        self.table = table
        self.shape = tuple(shape)
        self._total = np.zeros(self.shape, dtype=object)
        self._seen = set()

    def add(self, product: ResidueProduct) -> "ResidueAccumulator":
        t = product.modulus_index
        if product.product.shape != self.shape:
            raise ShapeMismatchError(
                f"Product {t} has shape {product.product.shape}, expected {self.shape}."
            )
        if t in self._seen or not 0 <= t < self.table.s:
            raise ShapeMismatchError(f"Unexpected product for modulus index {t}.")
        m = self.table.moduli[t]
        least_nonnegative = product.product.data % m
        self._total = self._total + least_nonnegative * self.table.weights[t]
        self._seen.add(t)
        return self

    def result(self) -> BigIntMatrix:
        if len(self._seen) != self.table.s:
            raise ShapeMismatchError(
                f"Got {len(self._seen)} products for {self.table.s} moduli."
            )
        return matrix_symmetric_mod(BigIntMatrix(self._total), self.table.M)


def accumulate_and_reduce(products: Iterable[ResidueProduct], table: CrtTable) -> BigIntMatrix:
    products = list(products)
    if not products:
        raise ShapeMismatchError("No residue products to accumulate.")
    acc = ResidueAccumulator(table, products[0].product.shape)
    for product in products:
        acc.add(product)
    return acc.result()


def check_uniqueness(bound, M: int) -> bool:
    """2 * c_max < M."""
    c_max = getattr(bound, "c_max", bound)
    return 2 * int(c_max) < int(M)


def _scaled(x: ReconstructedMatrix):
    if not x.certified_unique:
        raise AmbiguityError("Reconstruction is not certified unique; refusing to emit it.")
    rows = np.asarray(x.row_exponents, dtype=np.int64).reshape(-1, 1)
    cols = np.asarray(x.col_exponents, dtype=np.int64).reshape(1, -1)
    L = -(rows + cols + int(x.shift))
    L = np.broadcast_to(L, x.x.shape)
    return x.x.data, L


def inverse_scale_to_f64(x: ReconstructedMatrix) -> MatrixF64:
    N, L = _scaled(x)
    return MatrixF64(words_from_exact(N, L, 1)[0])


def inverse_scale_to_multiword(x: ReconstructedMatrix, v: int) -> MultiWordMatrix:
    if v < 1:
        raise ShapeMismatchError(f"Word count must be at least 1, got {v}.")
    N, L = _scaled(x)
    return MultiWordMatrix(words_from_exact(N, L, v))
