"""Convergence studies over (eps, N) grids and their table output."""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass, field

from .assembly import assemble, build_dof_map, write_matrix
from .element import MODES
from .mesh import CUBE_SPLITS, box_mesh, write_mesh
from .postprocess import ConvergenceRecord, energy_error, rates
from .problems import PROBLEMS, make_problem
from .quadrature import MAX_DEGREE
from .solver import METHODS, solve

log = logging.getLogger(__name__)

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG, EXIT_PROPERTY = 0, 2, 3, 4

CSV_COLUMNS = ["dim", "problem", "mode", "epsilon", "N", "h", "dofs", "abs_err", "rel_err",
               "rate", "iters", "seconds"]

DEFAULT_LEVELS = {2: [4, 8, 16, 32, 64, 128, 256], 3: [4, 8, 16, 32]}


class InvalidConfigError(ValueError):
    pass


@dataclass
class StudyConfig:
    dim: int = 3
    problem: str = "smooth"
    eps: list = field(default_factory=lambda: [1.0, 1e-2, 1e-4, 1e-6])
    levels: list | None = None
    mode: str = "trunc"
    split: str = "corner"
    load_degree: int = 8
    error_degree: int = 8
    rtol: float = 1e-12
    maxit: int | None = None
    solver: str = "auto"
    format: str = "markdown"
    mesh_out: str | None = None
    matrix_out: str | None = None

    def __post_init__(self):
        if self.levels is None:
            self.levels = list(DEFAULT_LEVELS.get(self.dim, [4, 8, 16]))
        self.eps = [float(e) for e in self.eps]
        self.levels = [int(n) for n in self.levels]

    def validate(self):
        if self.dim not in (2, 3):
            raise InvalidConfigError("dim must be 2 or 3")
        if self.problem not in PROBLEMS:
            raise InvalidConfigError(f"problem must be one of {sorted(PROBLEMS)}")
        if self.mode not in MODES:
            raise InvalidConfigError(f"mode must be one of {MODES}")
        if self.split not in CUBE_SPLITS:
            raise InvalidConfigError(f"split must be one of {sorted(CUBE_SPLITS)}")
        if not self.levels or any(n < 1 for n in self.levels):
            raise InvalidConfigError("levels must be positive integers")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise InvalidConfigError("levels must be strictly increasing")
        if not self.eps or any(not e >= 0 for e in self.eps):
            raise InvalidConfigError("eps values must be non-negative")
        if self.problem == "layer" and any(e == 0 for e in self.eps):
            raise InvalidConfigError("the layer problem requires eps > 0")
        if not 4 <= self.load_degree <= MAX_DEGREE:
            raise InvalidConfigError(f"load degree must lie in [4, {MAX_DEGREE}]")
        if not 6 <= self.error_degree <= MAX_DEGREE:
            raise InvalidConfigError(f"error degree must lie in [6, {MAX_DEGREE}]")
        if not 0 < self.rtol < 1:
            raise InvalidConfigError("rtol must lie in (0, 1)")
        if self.maxit is not None and self.maxit < 1:
            raise InvalidConfigError("maxit must be at least 1")
        if self.solver not in METHODS:
            raise InvalidConfigError(f"solver must be one of {METHODS}")
        if self.format not in ("markdown", "csv"):
            raise InvalidConfigError("format must be markdown or csv")
        return self


def _dump_path(template, **fields):
    if "{" in template:
        return template.format(**fields)
    return f"{template}.{'.'.join(f'{k}{v}' for k, v in fields.items())}"


def run_level(config: StudyConfig, eps: float, N: int) -> ConvergenceRecord:
    t0 = time.perf_counter()
    mesh = box_mesh(config.dim, N, config.split)
    dofmap = build_dof_map(mesh)
    problem = make_problem(config.problem, config.dim, eps)
    system = assemble(mesh, dofmap, eps, problem.f, config.mode, config.load_degree)
    if config.mesh_out:
        write_mesh(mesh, _dump_path(config.mesh_out, N=N))
    if config.matrix_out:
        write_matrix(system, _dump_path(config.matrix_out, N=N, eps=f"{eps:g}"))
    x, report = solve(system, config.rtol, config.maxit, config.solver)
    if not report.converged:
        log.error("solver did not converge: dim=%d eps=%g N=%d, %d iterations, residual %.3e",
                  config.dim, eps, N, report.iterations, report.residual)
    absolute, relative = energy_error(mesh, dofmap, x, problem, eps, config.error_degree)
    return ConvergenceRecord(config.dim, config.problem, config.mode, eps, N, 1.0 / N,
                             dofmap.nfree, absolute, relative, None, report.iterations,
                             time.perf_counter() - t0, report.converged)


def run_study(config: StudyConfig):
    """All (eps, N) rows, eps outer and N inner, plus the exit code."""
    config.validate()
    records = []
    code = EXIT_OK
    for eps in config.eps:
        row = []
        for N in config.levels:
            rec = run_level(config, eps, N)
            log.info("dim=%d eps=%g N=%d rel_err=%.4e (%.1fs)", config.dim, eps, N,
                     rec.rel_err, rec.seconds)
            if not rec.converged:
                code = EXIT_SOLVER
            row.append(rec)
        hs = [r.h for r in row]
        errs = [r.rel_err if r.converged else None for r in row]
        for rec, rate in zip(row, rates(errs, hs)):
            rec.rate = rate
        records.extend(row)
    return records, code


def _h_label(N):
    return f"1/{N}" if N > 1 else "1"


def format_markdown(records) -> str:
    levels = sorted({r.N for r in records})
    eps_values = list(dict.fromkeys(r.eps for r in records))
    head = ["eps \\ h"] + [_h_label(N) for N in levels]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for eps in eps_values:
        row = {r.N: r for r in records if r.eps == eps}
        errs = [f"{row[N].rel_err:.3e}" + ("" if row[N].converged else " (failed)")
                if N in row else "" for N in levels]
        rts = [f"{row[N].rate:.4f}" if N in row and row[N].rate is not None else ""
               for N in levels]
        lines.append("| " + " | ".join([f"{eps:.0e}"] + errs) + " |")
        lines.append("| " + " | ".join(["rate"] + rts) + " |")
    if any(r.dim == 2 for r in records):
        lines.append("")
        lines.append("2D manufactured solutions are our own extension; no reference table exists.")
    return "\n".join(lines) + "\n"


def format_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([r.dim, r.problem, r.mode, repr(r.eps), r.N, repr(r.h), r.dofs,
                    repr(r.abs_err), repr(r.rel_err), "" if r.rate is None else repr(r.rate),
                    r.iters, f"{r.seconds:.3f}"])
    return buf.getvalue()


def format_table(records, fmt: str = "markdown") -> str:
    return format_csv(records) if fmt == "csv" else format_markdown(records)
