"""Convergence ladders over the manufactured examples and table output."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .assembly import assemble_system, dump_matrix_market
from .exceptions import DgIfeError, InvalidArgument
from .ife import build_space
from .linsolve import SolverConfig
from .mesh import build_mesh, classify_elements
from .norms import ErrorReport, error_norms, rates
from .problems import ellipse_problem, make_example
from .quadrature import EDGE_ORDER, VOLUME_ORDER
from .timestepping import (
    TimeLadder,
    elliptic_projection,
    initial_interpolant,
    problem_load,
    run_theta_scheme,
    save_checkpoint,
)

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "Ns", "h", "dt", "theta", "epsilon", "sigma", "beta_minus", "beta_plus",
    "err_inf", "rate_inf", "err_l2", "rate_l2", "err_h1", "rate_h1",
]


@dataclass
class RunConfig:
    example: str | None = "1"
    beta: tuple[float, float] | None = None  # overrides the example's coefficients
    ns: list[int] = field(default_factory=lambda: [10, 20, 40, 80])
    dt_ratio: float = 2.0
    theta: float = 0.5
    epsilon: int = 1
    sigma: float = 1.0
    init: str = "interp"
    simplex: bool = False
    solver: str = "splu"
    tol: float = 1e-10
    T: float = 1.0
    volume_order: int = VOLUME_ORDER
    edge_order: int = EDGE_ORDER
    energy: bool = False
    resolve_curve: int = 0  # subdivisions for curve-resolved error quadrature

    def __post_init__(self):
        if self.init not in ("interp", "projection"):
            raise InvalidArgument(f"unknown initial data mode {self.init!r}")
        if self.epsilon not in (-1, 0, 1):
            raise InvalidArgument(f"epsilon must be -1, 0 or 1, got {self.epsilon}")
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidArgument(f"theta must lie in [0, 1], got {self.theta}")
        if self.resolve_curve < 0:
            raise InvalidArgument("resolve_curve must be nonnegative")
        if self.dt_ratio <= 0:
            raise InvalidArgument("dt ratio must be positive")
        if self.example is None and self.beta is None:
            raise InvalidArgument("need an example id or a coefficient pair")

    def problem(self):
        if self.beta is not None:
            return ellipse_problem(*self.beta)
        return make_example(self.example)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(method=self.solver, tol=self.tol, symmetric=self.epsilon == -1)


@dataclass
class LadderResult:
    config: RunConfig
    reports: list[ErrorReport]
    failures: dict = field(default_factory=dict)  # Ns -> message

    @property
    def rows(self):
        return rates(self.reports) if self.reports else []


def run_single(config: RunConfig, ns: int, dump_dir=None, checkpoint_dir=None) -> ErrorReport:
    """Mesh, discretize and march one resolution to the final time."""
    problem = config.problem()
    mesh = build_mesh(problem.domain, ns, config.simplex)
    classification = classify_elements(mesh, problem.curve)
    space = build_space(mesh, classification, problem.curve, problem.beta_minus, problem.beta_plus)
    system = assemble_system(
        space, config.sigma, config.epsilon, config.volume_order, config.edge_order
    )
    if dump_dir is not None:
        dump_matrix_market(system, dump_dir)
    ladder = TimeLadder.from_ratio(config.T, mesh.h, config.dt_ratio)
    solver = config.solver_config()
    if config.init == "projection":
        u0 = elliptic_projection(problem, system, 0.0, solver)
    else:
        u0 = initial_interpolant(problem.u0, space)

    checkpoint = None
    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)

        def checkpoint(n, t, u):
            save_checkpoint(checkpoint_dir / f"u_{n:05d}.bin", u, n, t)

    hist = run_theta_scheme(
        system, ladder, config.theta, u0, problem_load(problem, system), solver,
        checkpoint=checkpoint,
    )
    report = error_norms(
        hist.final, problem, space, hist.final_time, ns=ns, dt=ladder.dt,
        order=config.volume_order, system=system if config.energy else None,
        resolve_curve=config.resolve_curve,
    )
    report.theta = config.theta
    report.epsilon = config.epsilon
    report.sigma = config.sigma
    return report


def run_convergence(config: RunConfig) -> LadderResult:
    ns_list = list(config.ns)
    for a, b in zip(ns_list, ns_list[1:]):
        if b != 2 * a:
            raise InvalidArgument(f"Ns ladder must double, got {a} -> {b}")
    result = LadderResult(config, [])
    for ns in ns_list:
        try:
            result.reports.append(run_single(config, ns))
            r = result.reports[-1]
            log.info("Ns=%d  Linf=%.3e  L2=%.3e  H1=%.3e", ns, r.err_inf, r.err_l2, r.err_h1)
        except DgIfeError as exc:
            log.error("Ns=%d failed: %s", ns, exc)
            result.failures[ns] = str(exc)
    if result.failures:
        # rates need an unbroken doubling ladder
        result.reports = _longest_doubling_prefix(result.reports)
    return result


def _longest_doubling_prefix(reports):
    out = reports[:1]
    for r in reports[1:]:
        if r.ns != 2 * out[-1].ns:
            break
        out.append(r)
    return out


def sci_format(value: float) -> str:
    """Scientific notation in the tables' style, e.g. 1.59E-1."""
    if value == 0 or not math.isfinite(value):
        return f"{value:.2f}E-0"
    exp = math.floor(math.log10(abs(value)))
    mant = value / 10**exp
    if round(abs(mant), 2) >= 10:
        mant /= 10
        exp += 1
    sign = "+" if exp > 0 else "-"
    return f"{mant:.2f}E{sign}{abs(exp)}"


def _rate_str(r):
    return "" if r is None else f"{r:.2f}"


def _by_scheme(reports):
    groups = {}
    for r in reports:
        groups.setdefault((r.theta, r.epsilon, r.sigma), []).append(r)
    return groups


def table_rows(reports):
    """CSV rows; rates are taken within each (theta, epsilon, sigma) group."""
    rows = []
    for row in (x for g in _by_scheme(reports).values() for x in rates(g)):
        r = row["report"]
        rows.append(
            {
                "Ns": r.ns,
                "h": f"{r.h:.6g}",
                "dt": f"{r.dt:.6g}",
                "theta": f"{r.theta:g}" if r.theta is not None else "",
                "epsilon": "" if r.epsilon is None else str(r.epsilon),
                "sigma": f"{r.sigma:g}" if r.sigma is not None else "",
                "beta_minus": f"{r.beta_minus:g}",
                "beta_plus": f"{r.beta_plus:g}",
                "err_inf": f"{r.err_inf:.2e}",
                "rate_inf": _rate_str(row["rate_inf"]),
                "err_l2": f"{r.err_l2:.2e}",
                "rate_l2": _rate_str(row["rate_l2"]),
                "err_h1": f"{r.err_h1:.2e}",
                "rate_h1": _rate_str(row["rate_h1"]),
            }
        )
    return rows


def format_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(table_rows(reports))
    return buf.getvalue()


def _scheme_name(theta):
    if theta == 1.0:
        return "Backward Euler"
    if theta == 0.5:
        return "Crank Nicolson"
    return f"theta = {theta:g}"


def format_markdown(reports) -> str:
    """One 7-column block per time scheme: Ns and (error, rate) for each norm."""
    blocks = []
    for (theta, eps, sigma), group in _by_scheme(reports).items():
        head = f"**{_scheme_name(theta)}** (epsilon = {eps}, sigma = {sigma:g})"
        lines = [
            head,
            "",
            "| Ns | L^inf | rate | L^2 | rate | semi-H^1 | rate |",
            "|---:|---:|---:|---:|---:|---:|---:|",
        ]
        for row in rates(group):
            r = row["report"]
            cells = [str(r.ns)]
            for name in ("inf", "l2", "h1"):
                cells += [sci_format(getattr(r, f"err_{name}")), _rate_str(row[f"rate_{name}"])]
            lines.append("| " + " | ".join(cells) + " |")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def emit_table(reports, path=None, fmt: str = "csv") -> str:
    """Render ``reports`` as CSV or markdown; write to ``path`` when given."""
    if fmt == "csv":
        text = format_csv(reports)
    elif fmt in ("markdown", "md"):
        text = format_markdown(reports)
    else:
        raise InvalidArgument(f"unknown table format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def write_manifest(path, config: RunConfig, result: LadderResult | None = None) -> None:
    data = {"config": asdict(config)}
    if result is not None:
        data["failures"] = {str(k): v for k, v in result.failures.items()}
        data["completed_ns"] = [r.ns for r in result.reports]
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
