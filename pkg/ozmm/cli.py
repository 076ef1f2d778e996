"""
Command-line harness: ``ozmm gen | matmul | sweep | kplot | verify``.

Exit codes: 0 success, 1 computation failure or tolerance breach, 2 usage or
configuration error.
"""
import argparse
import json
import sys
from contextlib import contextmanager
from typing import List, Optional

from decouple import config

import ozmm.exceptions
import ozmm.logging
from ozmm import matfile, normalize, utils
from ozmm._version import __version__
from ozmm.crt import Regime
from ozmm.generate import GeneratorKind, GeneratorSpec, generate
from ozmm.oracle import compare, exact_matmul
from ozmm.pipeline import ozaki2_matmul
from ozmm.residue import BackendKind, GemmCounter
from ozmm.scheme_one import SchemeOneConfig, SliceMode, ozaki1_matmul
from ozmm.sweep import (
    METHOD_BOUNDS,
    Method,
    kplot,
    load_config,
    run_sweep,
    write_csv,
    write_kplot,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

MATMUL_METHODS = [m.value for m in (Method.OS1, Method.OS2_FAST, Method.OS2_ACCU)]


def _values(enum) -> List[str]:
    return [m.value for m in enum]


@contextmanager
def _output(path: Optional[str]):
    if not path or path == "-":
        yield sys.stdout
        return
    try:
        with open(path, "w", newline="") as f:
            yield f
    except OSError as e:
        raise ozmm.exceptions.InvalidConfigurationError(f"Unable to write '{path}'.") from e


def _exception_handler():
    if config("SENTRY_DSN", default=None):
        from ozmm.contrib import sentry

        sentry.init(context={"command": "sweep"})
        return sentry.capture
    return None


# COMMANDS


def cmd_gen(args, logger) -> int:
    spec = GeneratorSpec(
        kind=normalize.normalize_enum(GeneratorKind, args.kind),
        seed=args.seed,
        rows=args.rows,
        cols=args.cols if args.cols is not None else args.rows,
        phi=args.phi,
        constant=args.constant,
        int_range=tuple(normalize.normalize_range(args.int_range)),
        words=args.words,
    )
    matfile.write_matrix(args.output, generate(spec))
    logger.info("Matrix written.", path=args.output, spec=spec._asdict())
    return EXIT_OK


def _matmul(args, logger):
    A, B = matfile.read_matrix(args.a), matfile.read_matrix(args.b)
    method = normalize.normalize_enum(Method, args.method)
    counter = GemmCounter()
    if method is Method.OS1:
        C = ozaki1_matmul(
            A,
            B,
            SchemeOneConfig(args.k),
            normalize.normalize_enum(SliceMode, args.slice_mode),
            words=args.output_words,
            counter=counter,
            logger=logger,
        )
    else:
        C = ozaki2_matmul(
            A,
            B,
            args.s,
            regime=normalize.normalize_enum(Regime, args.regime),
            backend=normalize.normalize_enum(BackendKind, args.backend) if args.backend else None,
            bound_method=METHOD_BOUNDS[method],
            output_words=args.output_words,
            counter=counter,
            logger=logger,
        )
    return A, B, C, counter


def cmd_matmul(args, logger) -> int:
    _, _, C, counter = _matmul(args, logger)
    matfile.write_matrix(args.output, C)
    logger.info("Product written.", path=args.output, counts=counter._json())
    return EXIT_OK


def cmd_verify(args, logger) -> int:
    A, B, C, counter = _matmul(args, logger)
    report = compare(C, exact_matmul(A, B))
    print(
        json.dumps(
            {"report": report._asdict(), "counts": counter, "tolerance": args.tolerance},
            cls=utils.AutoEncoder,
            sort_keys=True,
        )
    )
    if report.max_rel_err > args.tolerance:
        raise ozmm.exceptions.ToleranceError(
            f"max_rel_err {report.max_rel_err!r} exceeds tolerance {args.tolerance!r}."
        )
    return EXIT_OK


def cmd_sweep(args, logger) -> int:
    overrides = {
        "METHODS": args.methods,
        "S_RANGE": args.s_range,
        "K_RANGE": args.k_range,
        "N_LIST": args.n_list,
        "REGIME": args.regime,
        "BACKEND": args.backend,
        "OUTPUT_WORDS": args.output_words,
        "GENERATOR": args.generator,
        "PHI": args.phi,
        "INPUT_WORDS": args.input_words,
        "SEED": args.seed,
        "TIMING": False if args.no_timing else None,
    }
    sweep_config = load_config(args.config, overrides)
    rows = run_sweep(sweep_config, logger=logger, exception_handler=_exception_handler())
    with _output(args.output) as stream:
        write_csv(rows, stream)
    failed = [r for r in rows if r.status != "ok"]
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_kplot(args, logger) -> int:
    q_list = normalize.normalize_range(args.q)
    rows = kplot(normalize.normalize_enum(Regime, args.regime), q_list, args.s_range)
    with _output(args.output) as stream:
        write_kplot(rows, stream)
    return EXIT_OK


# PARSER


def _add_matmul_arguments(parser):
    parser.add_argument("a", help="Left OZMM matrix file.")
    parser.add_argument("b", help="Right OZMM matrix file.")
    parser.add_argument("--method", choices=MATMUL_METHODS, default=Method.OS2_FAST.value)
    parser.add_argument("--s", type=int, default=14, help="Number of moduli (os2-*).")
    parser.add_argument("--k", type=int, default=7, help="Number of slices (os1).")
    parser.add_argument("--regime", choices=_values(Regime), default=Regime.FP64.value)
    parser.add_argument("--backend", choices=_values(BackendKind), default=None)
    parser.add_argument("--output-words", type=int, default=1)
    parser.add_argument("--slice-mode", choices=_values(SliceMode), default=SliceMode.TRUNCATED.value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ozmm", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--debug", action="store_true", help="Debug logging on stderr.")
    sub = parser.add_subparsers(dest="command")
    sub.required = True

    gen = sub.add_parser("gen", help="Write a generated matrix.")
    gen.add_argument("--kind", choices=_values(GeneratorKind), default=GeneratorKind.RANDN.value)
    gen.add_argument("--seed", type=int, default=42)
    gen.add_argument("--rows", type=int, required=True)
    gen.add_argument("--cols", type=int, default=None, help="Defaults to --rows.")
    gen.add_argument("--phi", type=float, default=0.5)
    gen.add_argument("--constant", type=float, default=1.0)
    gen.add_argument("--int-range", default="-8,8", help="lo,hi inclusive.")
    gen.add_argument("--words", type=int, default=1)
    gen.add_argument("-o", "--output", required=True)
    gen.set_defaults(func=cmd_gen)

    matmul = sub.add_parser("matmul", help="Multiply two matrix files.")
    _add_matmul_arguments(matmul)
    matmul.add_argument("-o", "--output", required=True)
    matmul.set_defaults(func=cmd_matmul)

    verify = sub.add_parser("verify", help="Multiply and compare against the exact product.")
    _add_matmul_arguments(verify)
    verify.add_argument("--tolerance", type=float, default=2.0 ** -50)
    verify.set_defaults(func=cmd_verify)

    sweep = sub.add_parser("sweep", help="Accuracy sweep to CSV.")
    sweep.add_argument("--config", default=None, help="Flat KEY=VALUE file.")
    sweep.add_argument("--methods", default=None, help="Comma separated, e.g. os1,os2-fast.")
    sweep.add_argument("--s-range", default=None, help='e.g. "2..20".')
    sweep.add_argument("--k-range", default=None)
    sweep.add_argument("--n-list", default=None, help="Comma separated sizes.")
    sweep.add_argument("--regime", choices=_values(Regime), default=None)
    sweep.add_argument("--backend", choices=_values(BackendKind), default=None)
    sweep.add_argument("--output-words", type=int, default=None)
    sweep.add_argument("--generator", choices=_values(GeneratorKind), default=None)
    sweep.add_argument("--phi", type=float, default=None)
    sweep.add_argument("--input-words", type=int, default=None)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--no-timing", action="store_true", help="Leave wall_ms blank.")
    sweep.add_argument("-o", "--output", default=None)
    sweep.set_defaults(func=cmd_sweep)

    kp = sub.add_parser("kplot", help="Bit budget k per (q, s) to CSV.")
    kp.add_argument("--regime", choices=_values(Regime), default=Regime.FP64.value)
    kp.add_argument("--q", default="1024", help="Comma separated inner dimensions.")
    kp.add_argument("--s-range", default="2..25")
    kp.add_argument("-o", "--output", default=None)
    kp.set_defaults(func=cmd_kplot)
    return parser


def main(argv: List[str] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        logger = ozmm.logging.setup(debug=args.debug or None)
        return args.func(args, logger)
    except ozmm.exceptions.FailButContinue as e:
        print(utils.exception_to_str(e), file=sys.stderr)
        return EXIT_FAILURE
    except ozmm.exceptions.FailCatastrophically as e:
        print(utils.exception_to_str(e), file=sys.stderr)
        return EXIT_USAGE
