import json
import logging
import os
from contextlib import contextmanager
from enum import Enum, EnumMeta
from fractions import Fraction

import numpy as np

import ozmm.exceptions


def batch(iterable, n=1):
    """Consecutive slices of at most n items; works on anything sliceable, including `range`."""
    for start in range(0, len(iterable), n):
        yield iterable[start : start + n]


@contextmanager
def set_env(env):
    """Temporarily set environment variables (values are str()-ed), restoring prior state."""
    saved = {k: os.environ.get(k) for k in env}
    try:
        for k, v in env.items():
            os.environ[k] = str(v)
            logging.getLogger().debug(f"os.environ[{k}] = {v}")
        yield
    finally:
        for k, v in saved.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v


class AutoEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, Enum):
            return o.value
        if isinstance(o, bytes):
            return o.decode("utf-8")
        if isinstance(o, Fraction):
            return str(o)
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if hasattr(o, "_json"):
            return o._json()
        return json.JSONEncoder.default(self, o)


def get_enum_value(e: EnumMeta, k) -> Enum:
    """Get the member of an enum by member, name or value.

    Args:
        e (EnumMeta): A reference to an enumerated values
        k: A member, the name of a member (case-insensitive, "-" for "_") or a member value

    Raises:
        ozmm.exceptions.InvalidConfigurationError: if `k` is not in Enum `e`
    """
    if isinstance(k, e):
        return k
    try:
        return e[str(k).split(".")[-1].upper().replace("-", "_")]
    except KeyError:
        pass
    try:
        return e(k)
    except ValueError as err:
        raise ozmm.exceptions.InvalidConfigurationError(
            f"'{k}' is not one of {[m.value for m in e]}."
        ) from err


def repr(o, attrs=[]):
    desc = ", ".join([f"{a}={getattr(o, a)}" for a in attrs])
    return f"{o.__class__.__name__}({desc})"


def exception_to_str(e):
    return f"{e.__class__.__name__} {e}"


def ceil_log2(n: int) -> int:
    """Smallest e with 2**e >= n, for n >= 1."""
    return (int(n) - 1).bit_length()


def floor_log2_ratio(num: int, den: int) -> int:
    """Exact floor(log2(num / den)) for positive integers."""
    num, den = int(num), int(den)
    assert num > 0 and den > 0
    t = num.bit_length() - den.bit_length()
    fits = num >= den << t if t >= 0 else num << -t >= den
    return t if fits else t - 1
