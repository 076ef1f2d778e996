"""
ozmm
~~~~~~~~~

CRT-based emulation of high-precision matrix multiplication, with a
slice-splitting baseline and an exact oracle.
"""

# flake8: noqa

from ozmm._version import __version__
from ozmm.crt import Regime, build_crt_table, build_modulus_set, crt_reconstruct
from ozmm.generate import GeneratorKind, GeneratorSpec, generate
from ozmm.numeric import BigIntMatrix, MatrixF64, MultiWordMatrix
from ozmm.oracle import ErrorReport, compare, exact_matmul
from ozmm.pipeline import execute_plan, ozaki2_matmul, ozaki2_matmul3, plan_ozaki2
from ozmm.residue import BackendKind, GemmCounter
from ozmm.scheme_one import SchemeOneConfig, SliceMode, ozaki1_matmul
from ozmm.split import BoundMethod
