"""Command-line driver: ``trunc-fem study`` and ``trunc-fem verify``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

from threadpoolctl import threadpool_limits

from .assembly import NoFreeDofsError
from .mesh import CUBE_SPLITS
from .problems import PROBLEMS
from .quadrature import QuadratureCapabilityError
from .solver import METHODS
from .study import (EXIT_CONFIG, EXIT_OK, EXIT_PROPERTY, InvalidConfigError, StudyConfig,
                    format_table, run_study)
from .verify import run_verify

THREADS_ENV = "TRUNC_FEM_THREADS"

log = logging.getLogger("trunc_fem")


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the invalid-configuration code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list of numbers, got {text!r}")


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list of integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trunc-fem", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None,
                        help=f"BLAS thread count (default: ${THREADS_ENV}, else library default)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    st = sub.add_parser("study", help="convergence study over eps and mesh levels")
    st.add_argument("--dim", type=int, default=3, choices=(2, 3))
    st.add_argument("--problem", default="smooth", choices=sorted(PROBLEMS))
    st.add_argument("--eps", type=_float_list, default=[1.0, 1e-2, 1e-4, 1e-6],
                    help="comma list, e.g. 1,1e-2,1e-4,1e-6")
    st.add_argument("--levels", type=_int_list, default=None,
                    help="comma list of N (default 4,8,16,32 in 3D and 4,...,256 in 2D)")
    st.add_argument("--mode", default="trunc", choices=("trunc", "full"))
    st.add_argument("--split", default="corner", choices=sorted(CUBE_SPLITS),
                    help="cube subdivision used in 3D")
    st.add_argument("--load-degree", type=int, default=8)
    st.add_argument("--error-degree", type=int, default=8)
    st.add_argument("--rtol", type=float, default=1e-12)
    st.add_argument("--maxit", type=int, default=None)
    st.add_argument("--solver", default="auto", choices=METHODS,
                    help="auto: dense below 500 unknowns, else Jacobi-PCG; direct: sparse LU")
    st.add_argument("--format", default="markdown", choices=("markdown", "csv"))
    st.add_argument("--out", type=Path, default=None, help="write the table here, not stdout")
    st.add_argument("--seed", type=int, default=0,
                    help="accepted for symmetry with verify; studies are deterministic")
    st.add_argument("--mesh-out", default=None,
                    help="dump each mesh; '{N}' in the path is replaced by the level")
    st.add_argument("--matrix-out", default=None,
                    help="dump each matrix; '{N}' and '{eps}' are replaced")

    ve = sub.add_parser("verify", help="randomized property checks")
    ve.add_argument("--dims", type=_int_list, default=[2, 3, 4])
    ve.add_argument("--seed", type=int, default=42)
    ve.add_argument("--trials", type=int, default=1000)
    ve.add_argument("--out", type=Path, default=None,
                    help="write the JSON report (with counterexamples) here")
    return parser


def _thread_limit(flag):
    n = flag
    if n is None and os.environ.get(THREADS_ENV):
        try:
            n = int(os.environ[THREADS_ENV])
        except ValueError:
            raise InvalidConfigError(f"{THREADS_ENV} must be an integer")
    if n is None:
        return nullcontext()
    if n < 1:
        raise InvalidConfigError("thread count must be at least 1")
    return threadpool_limits(limits=n)


def _study(args) -> int:
    config = StudyConfig(dim=args.dim, problem=args.problem, eps=args.eps, levels=args.levels,
                         mode=args.mode, split=args.split, load_degree=args.load_degree,
                         error_degree=args.error_degree, rtol=args.rtol, maxit=args.maxit,
                         solver=args.solver, format=args.format, mesh_out=args.mesh_out,
                         matrix_out=args.matrix_out)
    records, code = run_study(config)
    text = format_table(records, config.format)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return code


def _verify(args) -> int:
    if args.trials < 0:
        raise InvalidConfigError("trials must be non-negative")
    try:
        report = run_verify(args.dims, args.seed, args.trials)
    except ValueError as exc:
        raise InvalidConfigError(str(exc)) from exc
    for r in report.results:
        print(r.line())
    if args.out:
        args.out.write_text(report.to_json())
    if not report.passed:
        sys.stderr.write(report.to_json() + "\n")
        return EXIT_PROPERTY
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit(args.threads):
            if args.command == "study":
                return _study(args)
            return _verify(args)
    except (InvalidConfigError, QuadratureCapabilityError, NoFreeDofsError) as exc:
        sys.stderr.write(f"trunc-fem: invalid configuration: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
