from collections import Counter
from enum import Enum
from typing import Iterator, List, NamedTuple, Union

import numpy as np

from ozmm import utils
from ozmm.crt import CrtTable
from ozmm.exceptions import PreconditionError, ShapeMismatchError
from ozmm.numeric import (
    BigIntMatrix,
    IntegerMatrix8,
    IntegerMatrix32,
    matrix_symmetric_mod,
)


class BackendKind(Enum):
    INT8SIM = "int8sim"
    FP64EXACT = "fp64exact"
    BIGINT = "bigint"


# (2**17 - 1) * 128**2 < 2**31, so one block never overflows an INT32 accumulator.
INT8_BLOCK = 2 ** 17 - 1
INT8_MAX_MODULUS = 256
FP64_EXACT_BITS = 53


class GemmCounter:
    """Tally of matrix products by purpose."""

    RESIDUE = "residue"
    BOUND = "bound"
    SLICE = "slice"
    DGEMM = "dgemm"

    def __init__(self):
        self.counts = Counter()

    def __repr__(self):
        return f"GemmCounter({dict(self.counts)})"

    def _json(self):
        return dict(self.counts)

    def count(self, kind: str, n: int = 1):
        self.counts[kind] += n

    def __getitem__(self, kind: str) -> int:
        return self.counts[kind]


class ResidueProduct(NamedTuple):
    modulus_index: int
    product: BigIntMatrix


Residue = Union[IntegerMatrix8, BigIntMatrix]


def _as_bigint(x: Residue) -> BigIntMatrix:
    if isinstance(x, IntegerMatrix8):
        return x.to_bigint()
    return x


def _check_range(x: BigIntMatrix, m: int):
    if x.data.size and (2 * int(x.data.min()) < -m or 2 * int(x.data.max()) > m):
        raise PreconditionError(f"Residue entries must lie in [-{m}/2, {m}/2].")


def check_backend(backend, m: int, q: int):
    """Raise PreconditionError unless `backend` multiplies residues mod m exactly at depth q."""
    backend = utils.get_enum_value(BackendKind, backend)
    if backend is BackendKind.INT8SIM and m > INT8_MAX_MODULUS:
        raise PreconditionError(f"Int8Sim needs m <= {INT8_MAX_MODULUS}, got {m}.")
    if backend is BackendKind.FP64EXACT and q * m * m > 1 << (FP64_EXACT_BITS + 2):
        raise PreconditionError(f"Fp64Exact needs q * m**2 <= 2**55, got q={q}, m={m}.")
    return backend


def _int8_product(a: BigIntMatrix, b: BigIntMatrix) -> np.ndarray:
    a8 = IntegerMatrix8(a).data
    b8 = IntegerMatrix8(b).data
    acc = np.zeros((a8.shape[0], b8.shape[1]), dtype=np.int64)
    for block in utils.batch(range(a8.shape[1]), INT8_BLOCK):
        part = IntegerMatrix32(
            np.matmul(
                a8[:, block.start : block.stop].astype(np.int32),
                b8[block.start : block.stop, :].astype(np.int32),
            )
        )
        acc += part.data.astype(np.int64)
    return acc


def _fp64_product(a: BigIntMatrix, b: BigIntMatrix, m: int) -> np.ndarray:
    q = a.cols
    product = np.matmul(a.data.astype(np.float64), b.data.astype(np.float64))
    certificate = q * (m // 2) ** 2
    if product.size and float(np.abs(product).max()) > min(certificate, 2.0 ** 53):
        raise PreconditionError("Fp64Exact accumulation left the exact range.")
    return product.astype(np.int64)


def multiply_residue(
    a_t: Residue, b_t: Residue, m_t: int, backend, t: int = 0, counter: GemmCounter = None
) -> ResidueProduct:
    """Exact integer product C_t = a_t @ b_t (not reduced)."""
    a, b = _as_bigint(a_t), _as_bigint(b_t)
    if a.cols != b.rows:
        raise ShapeMismatchError(f"Cannot multiply {a.shape} by {b.shape}.")
    _check_range(a, m_t)
    _check_range(b, m_t)
    backend = check_backend(backend, m_t, a.cols)

    if a.cols == 0:
        product = BigIntMatrix.zeros(a.rows, b.cols)
    elif backend is BackendKind.INT8SIM:
        product = BigIntMatrix(_int8_product(a, b))
    elif backend is BackendKind.FP64EXACT:
        product = BigIntMatrix(_fp64_product(a, b, m_t))
    else:
        product = a.matmul(b)
    if counter is not None:
        counter.count(GemmCounter.RESIDUE)
    return ResidueProduct(t, product)


def residue_matrix(X: BigIntMatrix, m: int, backend=None) -> Residue:
    """Symmetric residue of X mod m, stored the way `backend` consumes it."""
    r = matrix_symmetric_mod(X, m)
    if backend is not None and utils.get_enum_value(BackendKind, backend) is BackendKind.INT8SIM:
        return IntegerMatrix8(r)
    return r


def iter_residue_products(
    a_prime: BigIntMatrix,
    b_prime: BigIntMatrix,
    table: CrtTable,
    backend,
    counter: GemmCounter = None,
) -> Iterator[ResidueProduct]:
    """Form residues, multiply and hand back one modulus at a time."""
    backend = utils.get_enum_value(BackendKind, backend)
    for m in table.moduli:
        check_backend(backend, m, a_prime.cols)
    for t, m in enumerate(table.moduli):
        a_t = residue_matrix(a_prime, m, backend)
        b_t = residue_matrix(b_prime, m, backend)
        yield multiply_residue(a_t, b_t, m, backend, t=t, counter=counter)


def multiply_all_residues(pair, table: CrtTable, backend, counter: GemmCounter = None) -> List[ResidueProduct]:
    return list(
        iter_residue_products(pair.a_prime, pair.b_prime, table, backend, counter)
    )


def multiply_three_residues(
    a_t: Residue, b_t: Residue, c_t: Residue, m_t: int, backend, counter: GemmCounter = None
) -> BigIntMatrix:
    """(a_t @ b_t reduced mod m_t) @ c_t, exact at every step."""
    first = multiply_residue(a_t, b_t, m_t, backend, counter=counter).product
    reduced = residue_matrix(first, m_t, backend)
    return multiply_residue(reduced, c_t, m_t, backend, counter=counter).product
