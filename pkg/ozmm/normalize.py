from enum import Enum, EnumMeta
from typing import List, Union

import numpy as np

import ozmm.exceptions
from ozmm import utils
from ozmm.numeric import BigIntMatrix, MatrixF64, MultiWordMatrix


def normalize_enum(enum: EnumMeta, value: Union[str, Enum]) -> Enum:
    try:
        return utils.get_enum_value(enum, value)
    except Exception as e:
        raise ozmm.exceptions.InvalidConfigurationError(
            f"Unable to cast {value!r} to {enum.__name__}."
        ) from e


def normalize_matrix(X) -> Union[MatrixF64, MultiWordMatrix]:
    """Accept arrays and nested lists as well as the matrix types.

    A 2-D array becomes a MatrixF64, a 3-D array a MultiWordMatrix whose
    first axis indexes the words. BigIntMatrix entries are converted to
    binary64 and must be exactly representable.
    """
    if isinstance(X, (MatrixF64, MultiWordMatrix)):
        return X
    if isinstance(X, BigIntMatrix):
        data = X.data.astype(np.float64)
        if X.data.size and not np.all(data.astype(object) == X.data):
            raise ozmm.exceptions.PreconditionError(
                "Integer matrix is not exactly representable in binary64."
            )
        return MatrixF64(data)
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 2:
        return MatrixF64(arr)
    if arr.ndim == 3:
        return MultiWordMatrix.from_stack(arr)
    raise ozmm.exceptions.ShapeMismatchError(
        f"Expected a 2-D matrix or a stack of words, got shape {arr.shape}."
    )


def normalize_range(value) -> List[int]:
    """Parse an integer range: "2..10" (inclusive), "1,3,5", an int or a list.

    >>> normalize_range("2..4")
    [2, 3, 4]
    >>> normalize_range("1, 3")
    [1, 3]
    """
    if value is None or value == "":
        return []
    if isinstance(value, int):
        return [value]
    if not isinstance(value, str):
        return [int(v) for v in value]
    try:
        if ".." in value:
            lo, hi = value.split("..", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError as e:
        raise ozmm.exceptions.InvalidConfigurationError(
            f"Unable to parse range {value!r}."
        ) from e
