"""Command-line front end.

Subcommands:

    eval      one quadrature evaluation of a builtin integrand
    example1  power-function convergence study (errors.csv, orders.csv,
              gnuplot data, optional SVG)
    example2  Brownian-target convergence study (errors.csv, orders.csv,
              timing.csv, optional path.csv dump)
    sobolev   fractional Sobolev norm diagnostic with a delta-refinement probe

Exit codes: 0 success, 2 usage or validation error, 3 output I/O error.
All randomness flows from --seed; without the flag a fixed documented
default is used, never wall-clock entropy.  CSV numbers are written in
shortest round-trip decimal form.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from .experiments import (
    DEFAULT_SEED,
    ErrorLadder,
    ExperimentResult,
    mc_metric_name,
    run_example1,
    run_example2,
)
from .integrands import (
    affine_integrand,
    constant_integrand,
    power_integrand,
    sobolev_seminorm,
)
from .quadrature import Integrand, ctq, make_partition, rtq
from .random_sources import RngStream, sample_tau_sequence, save_path_csv

OUTPUT_DIR_ENV = "RANDQUAD_OUTDIR"
_DEFAULT_OUTPUT_DIR = "randquad-output"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3


def _default_output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV, _DEFAULT_OUTPUT_DIR)


@dataclass(frozen=True)
class RunConfig:
    """Parsed command-line configuration.

    ``to_argv``/``from_argv`` round-trip losslessly: every accepted
    configuration reparses to an equal RunConfig.
    """

    subcommand: str
    seed: int = DEFAULT_SEED
    output_dir: str = ""
    # eval / sobolev integrand selection
    rule: str = "ctq"
    integrand: str = "power"
    gamma: float = 1.5
    c0: float = 0.0
    c1: float = 1.0
    total_time: float = 1.0
    intervals: int = 32
    shared_nodes: bool = False
    # experiment parameters
    gammas: tuple[float, ...] = (1.25, 1.5, 1.75)
    min_exp: int = 5
    max_exp: int = 10
    replications: int = 100
    p: float = 2.0
    h_ref_exp: int = 14
    svg: bool = False
    dump_path: bool = False
    # sobolev parameters
    sigma: float = 1.2
    cells: int = 512
    delta: float | None = None

    def to_argv(self) -> list[str]:
        argv = [self.subcommand, "--seed", repr(self.seed)]
        if self.subcommand == "eval":
            argv += ["--rule", self.rule]
            argv += self._integrand_argv()
            argv += ["--N", repr(self.intervals)]
            if self.shared_nodes:
                argv += ["--shared-nodes"]
        elif self.subcommand == "example1":
            argv += ["--outdir", self.output_dir, "--gammas"]
            argv += [repr(g) for g in self.gammas]
            argv += ["--min-exp", repr(self.min_exp), "--max-exp", repr(self.max_exp)]
            argv += ["-M", repr(self.replications), "-p", repr(self.p)]
            if self.svg:
                argv += ["--svg"]
        elif self.subcommand == "example2":
            argv += ["--outdir", self.output_dir]
            argv += ["--h-ref-exp", repr(self.h_ref_exp)]
            argv += ["--min-exp", repr(self.min_exp), "--max-exp", repr(self.max_exp)]
            if self.svg:
                argv += ["--svg"]
            if self.dump_path:
                argv += ["--dump-path"]
        elif self.subcommand == "sobolev":
            argv += self._integrand_argv()
            argv += ["--sigma", repr(self.sigma), "-p", repr(self.p)]
            argv += ["--cells", repr(self.cells)]
            if self.delta is not None:
                argv += ["--delta", repr(self.delta)]
        else:
            raise ValueError(f"unknown subcommand {self.subcommand!r}")
        return argv

    def _integrand_argv(self) -> list[str]:
        argv = ["--integrand", self.integrand, "--T", repr(self.total_time)]
        if self.integrand == "power":
            argv += ["--gamma", repr(self.gamma)]
        else:
            argv += ["--c0", repr(self.c0)]
            if self.integrand == "affine":
                argv += ["--c1", repr(self.c1)]
        return argv

    @staticmethod
    def from_argv(argv) -> "RunConfig":
        ns = _build_parser().parse_args(list(argv))
        return _namespace_to_config(ns)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randquad",
        description="Classical and randomised trapezoidal quadrature experiments.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (default: %(default)s)")

    def add_integrand(p):
        p.add_argument("--integrand", choices=("power", "constant", "affine"), default="power")
        p.add_argument("--gamma", type=float, default=1.5, help="exponent for the power integrand")
        p.add_argument("--c0", type=float, default=0.0, help="constant value / affine intercept")
        p.add_argument("--c1", type=float, default=1.0, help="affine slope")
        p.add_argument("--T", dest="total_time", type=float, default=1.0, help="integration horizon")

    def add_outdir(p):
        p.add_argument(
            "--outdir",
            default=None,
            help=f"output directory (default: ${OUTPUT_DIR_ENV} or {_DEFAULT_OUTPUT_DIR!r})",
        )

    def add_steps(p):
        p.add_argument("--min-exp", type=int, default=5, help="coarsest step 2^-min_exp")
        p.add_argument("--max-exp", type=int, default=10, help="finest step 2^-max_exp")

    p_eval = sub.add_parser("eval", help="evaluate one quadrature rule once")
    p_eval.add_argument("--rule", choices=("ctq", "rtq"), required=True)
    add_integrand(p_eval)
    p_eval.add_argument("--N", dest="intervals", type=int, required=True, help="number of cells")
    p_eval.add_argument("--shared-nodes", action="store_true", help="CTQ with N+1 shared evaluations")
    add_seed(p_eval)

    p_ex1 = sub.add_parser("example1", help="power-function convergence study")
    p_ex1.add_argument("--gammas", type=float, nargs="+", default=[1.25, 1.5, 1.75])
    add_steps(p_ex1)
    p_ex1.add_argument("-M", dest="replications", type=int, default=100, help="Monte Carlo replications")
    p_ex1.add_argument("-p", dest="p", type=float, default=2.0, help="L^p error exponent")
    p_ex1.add_argument("--svg", action="store_true", help="also render built-in SVG plots")
    add_outdir(p_ex1)
    add_seed(p_ex1)

    p_ex2 = sub.add_parser("example2", help="Brownian-target convergence study")
    p_ex2.add_argument("--h-ref-exp", type=int, default=14, help="reference step is 2^-h_ref_exp")
    add_steps(p_ex2)
    p_ex2.add_argument("--svg", action="store_true", help="also render built-in SVG plots")
    p_ex2.add_argument("--dump-path", action="store_true", help="also write path.csv")
    add_outdir(p_ex2)
    add_seed(p_ex2)

    p_sob = sub.add_parser("sobolev", help="fractional Sobolev norm diagnostic")
    add_integrand(p_sob)
    p_sob.add_argument("--sigma", type=float, required=True, help="regularity order in [1, 2)")
    p_sob.add_argument("-p", dest="p", type=float, default=2.0)
    p_sob.add_argument("--cells", type=int, default=512)
    p_sob.add_argument("--delta", type=float, default=None, help="diagonal guard band (default: 2 cell widths)")
    add_seed(p_sob)

    return parser


def _namespace_to_config(ns: argparse.Namespace) -> RunConfig:
    values = {}
    known = {f.name for f in fields(RunConfig)}
    for key, val in vars(ns).items():
        if key not in known:
            continue
        if key == "gammas":
            val = tuple(val)
        values[key] = val
    outdir = getattr(ns, "outdir", None)
    values["output_dir"] = outdir if outdir is not None else _default_output_dir()
    return RunConfig(**values)


def _build_integrand(config: RunConfig) -> Integrand:
    if config.integrand == "power":
        return power_integrand(config.gamma, config.total_time)
    if config.integrand == "constant":
        return constant_integrand(config.c0, config.total_time)
    if config.integrand == "affine":
        return affine_integrand(config.c0, config.c1, config.total_time)
    raise ValueError(f"unknown integrand {config.integrand!r}")


def _fmt(value) -> str:
    """Shortest decimal form that parses back to the same value."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def cmd_eval(config: RunConfig) -> int:
    g = _build_integrand(config)
    part = make_partition(config.total_time, config.intervals)
    if config.rule == "ctq":
        q = ctq(g, part, shared_nodes=config.shared_nodes)
    else:
        tau = sample_tau_sequence(RngStream(config.seed), part.intervals)
        q = rtq(g, part, tau)
    print(f"rule: {q.rule}")
    print(f"integrand: {g.label} on [0, {_fmt(g.total_time)}]")
    print(f"N: {part.intervals}")
    print(f"h: {_fmt(part.step)}")
    print(f"value: {_fmt(q.value)}")
    print(f"evaluations: {q.evaluations}")
    if config.rule == "rtq":
        print(f"seed: {config.seed}")
    if g.exact_integral is not None:
        print(f"exact: {_fmt(g.exact_integral)}")
        print(f"abs_error: {_fmt(abs(g.exact_integral - q.value))}")
    return EXIT_OK


def _write_errors_csv(path: str, ladders: list[ErrorLadder]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma", "rule", "metric", "h", "N", "M", "error", "std_error", "wall_time_s"])
        for lad in ladders:
            for row in lad.rows:
                writer.writerow(
                    [
                        lad.label,
                        lad.rule,
                        lad.metric,
                        _fmt(row.step),
                        row.intervals,
                        row.replications,
                        _fmt(row.error),
                        _fmt(row.std_error),
                        _fmt(row.wall_time_s),
                    ]
                )


def _write_orders_csv(path: str, result: ExperimentResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma", "rule", "metric", "fitted_order", "intercept", "residual"])
        for rep in result.reports:
            lad = rep.ladder
            writer.writerow(
                [
                    lad.label,
                    lad.rule,
                    lad.metric,
                    _fmt(rep.fitted_order),
                    _fmt(rep.intercept),
                    _fmt(rep.residual),
                ]
            )


def _write_timing_csv(path: str, ladders: list[ErrorLadder]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rule", "h_exponent", "h", "N", "wall_time_s"])
        for lad in ladders:
            for row in lad.rows:
                exponent = int(round(-math.log2(row.step)))
                writer.writerow([lad.rule, exponent, _fmt(row.step), row.intervals, _fmt(row.wall_time_s)])


def _guide(h: np.ndarray, anchor_err: float, order: float) -> np.ndarray:
    return anchor_err * (h / h[0]) ** order


def _write_dat(path: str, header: list[str], columns: list[np.ndarray]) -> None:
    with open(path, "w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in zip(*columns):
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#7f7f7f")


def _svg_chart(title: str, xlabel: str, ylabel: str, series) -> str:
    """Tiny log2-log2 line chart; series is a list of (name, xs, ys)."""
    width, height, margin = 640, 480, 60
    pts = [(math.log2(x), math.log2(y)) for _, xs, ys in series for x, y in zip(xs, ys) if y > 0]
    if not pts:
        raise ValueError("nothing to plot: all values are zero")
    x_lo, x_hi = min(p[0] for p in pts), max(p[0] for p in pts)
    y_lo, y_hi = min(p[1] for p in pts), max(p[1] for p in pts)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def sx(x):
        return margin + (math.log2(x) - x_lo) / x_span * (width - 2 * margin)

    def sy(y):
        return height - margin - (math.log2(y) - y_lo) / y_span * (height - 2 * margin)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 16}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="18" y="{height / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 18 {height / 2})">{ylabel}</text>',
        f'<text x="{margin}" y="{height - margin + 16}" font-size="10">{x_lo:.1f}</text>',
        f'<text x="{width - margin}" y="{height - margin + 16}" text-anchor="end" font-size="10">{x_hi:.1f}</text>',
        f'<text x="{margin - 4}" y="{height - margin}" text-anchor="end" font-size="10">{y_lo:.1f}</text>',
        f'<text x="{margin - 4}" y="{margin + 4}" text-anchor="end" font-size="10">{y_hi:.1f}</text>',
    ]
    for i, (name, xs, ys) in enumerate(series):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in zip(xs, ys) if y > 0)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{width - margin + 4}" y="{margin + 14 * i}" font-size="11" fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out)


def _gnuplot_script(path: str, panels: list[tuple[str, str, list[tuple[str, int]]]]) -> None:
    """Emit a gnuplot script; panels are (dat_file, title, [(series, column)])."""
    lines = [
        "set terminal svg size 900,700",
        'set output "plots.svg"',
        "set logscale xy 2",
        'set xlabel "h"',
        'set ylabel "error"',
        "set key left top",
        f"set multiplot layout {max(1, (len(panels) + 1) // 2)},2",
    ]
    for dat, title, cols in panels:
        plot = ", ".join(
            f'"{dat}" using 1:{col} with linespoints title "{name}"' for name, col in cols
        )
        lines.append(f'set title "{title}"')
        lines.append(f"plot {plot}")
    lines.append("unset multiplot")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _ensure_outdir(config: RunConfig) -> str:
    outdir = config.output_dir or _default_output_dir()
    os.makedirs(outdir, exist_ok=True)
    probe = os.path.join(outdir, ".write-probe")
    with open(probe, "w") as fh:
        fh.write("")
    os.remove(probe)
    return outdir


def cmd_example1(config: RunConfig) -> int:
    exponents = range(config.min_exp, config.max_exp + 1)
    result = run_example1(
        gammas=config.gammas,
        step_exponents=exponents,
        replications=config.replications,
        p=config.p,
        seed=config.seed,
        total_time=config.total_time,
    )
    outdir = _ensure_outdir(config)
    ladders = [rep.ladder for rep in result.reports]
    _write_errors_csv(os.path.join(outdir, "errors.csv"), ladders)
    _write_orders_csv(os.path.join(outdir, "orders.csv"), result)

    panels = []
    metric_l2 = mc_metric_name(config.p)
    for gamma in config.gammas:
        label = f"{gamma:g}"
        lad_ctq = result.report(label, "CTQ", "absolute").ladder
        lad_l2 = result.report(label, "RTQ", metric_l2).ladder
        lad_pw = result.report(label, "RTQ", "pathwise").ladder
        h = lad_ctq.steps
        cols = [
            h,
            lad_ctq.errors,
            lad_l2.errors,
            lad_pw.errors,
            _guide(h, lad_ctq.errors[0], 2.0),
            _guide(h, lad_l2.errors[0], 2.5),
        ]
        dat = f"example1_errors_gamma{label}.dat"
        _write_dat(
            os.path.join(outdir, dat),
            ["h", "ctq_abs", "rtq_l2", "rtq_pathwise", "guide_order2", "guide_order2.5"],
            cols,
        )
        panels.append(
            (
                dat,
                f"gamma={label}",
                [("CTQ", 2), ("RTQ L2", 3), ("RTQ pathwise", 4), ("h^2", 5), ("h^2.5", 6)],
            )
        )
        if config.svg:
            svg = _svg_chart(
                f"errors, gamma={label}",
                "log2 h",
                "log2 error",
                [
                    ("CTQ", h, lad_ctq.errors),
                    ("RTQ L2", h, lad_l2.errors),
                    ("RTQ pathwise", h, lad_pw.errors),
                ],
            )
            with open(os.path.join(outdir, f"example1_gamma{label}.svg"), "w") as fh:
                fh.write(svg)

    timing_label = "1.5" if 1.5 in config.gammas else f"{config.gammas[0]:g}"
    lad_ctq = result.report(timing_label, "CTQ", "absolute").ladder
    lad_rtq = result.report(timing_label, "RTQ", metric_l2).ladder
    dat = f"example1_timing_gamma{timing_label}.dat"
    _write_dat(
        os.path.join(outdir, dat),
        ["h", "ctq_time_s", "rtq_time_s"],
        [lad_ctq.steps, np.array([r.wall_time_s for r in lad_ctq.rows]), np.array([r.wall_time_s for r in lad_rtq.rows])],
    )
    panels.append((dat, f"time cost, gamma={timing_label}", [("CTQ", 2), ("RTQ", 3)]))
    _gnuplot_script(os.path.join(outdir, "example1.gp"), panels)
    print(f"example1: wrote errors.csv, orders.csv, {len(panels)} plot panel(s) to {outdir}")
    return EXIT_OK


def cmd_example2(config: RunConfig) -> int:
    if config.h_ref_exp < config.max_exp:
        raise ValueError("h-ref-exp must be at least max-exp (reference finer than coarse grids)")
    exponents = range(config.min_exp, config.max_exp + 1)
    result = run_example2(
        step_exponents=exponents,
        reference_step=2.0**-config.h_ref_exp,
        seed=config.seed,
        total_time=config.total_time,
    )
    outdir = _ensure_outdir(config)
    ladders = [rep.ladder for rep in result.reports]
    _write_errors_csv(os.path.join(outdir, "errors.csv"), ladders)
    _write_orders_csv(os.path.join(outdir, "orders.csv"), result)
    _write_timing_csv(os.path.join(outdir, "timing.csv"), ladders)
    if config.dump_path:
        save_path_csv(result.path, os.path.join(outdir, "path.csv"))

    lad_ctq, lad_rtq = ladders
    h = lad_ctq.steps
    _write_dat(
        os.path.join(outdir, "example2_errors.dat"),
        ["h", "ctq", "rtq", "guide_order1.5", "guide_order2"],
        [h, lad_ctq.errors, lad_rtq.errors, _guide(h, lad_ctq.errors[0], 1.5), _guide(h, lad_rtq.errors[0], 2.0)],
    )
    _write_dat(
        os.path.join(outdir, "example2_timing.dat"),
        ["h", "ctq_time_s", "rtq_time_s"],
        [h, np.array([r.wall_time_s for r in lad_ctq.rows]), np.array([r.wall_time_s for r in lad_rtq.rows])],
    )
    _gnuplot_script(
        os.path.join(outdir, "example2.gp"),
        [
            ("example2_errors.dat", "errors vs reference", [("CTQ", 2), ("RTQ", 3), ("h^1.5", 4), ("h^2", 5)]),
            ("example2_timing.dat", "time cost", [("CTQ", 2), ("RTQ", 3)]),
        ],
    )
    if config.svg:
        svg = _svg_chart(
            "Brownian target errors",
            "log2 h",
            "log2 error",
            [("CTQ", h, lad_ctq.errors), ("RTQ", h, lad_rtq.errors)],
        )
        with open(os.path.join(outdir, "example2.svg"), "w") as fh:
            fh.write(svg)
    print(f"example2: wrote errors.csv, orders.csv, timing.csv to {outdir} (reference={_fmt(result.reference)})")
    return EXIT_OK


def cmd_sobolev(config: RunConfig) -> int:
    g = _build_integrand(config)
    # Refinement probe: halving the guard band only reveals new near-diagonal
    # mass if the grid resolves it, so cells are doubled along with delta.
    estimates = []
    base_delta = config.delta if config.delta is not None else 2.0 * g.total_time / config.cells
    for divisor in (1, 2, 4):
        estimates.append(
            sobolev_seminorm(g, config.sigma, config.p, config.cells * divisor, base_delta / divisor)
        )
    est = estimates[0]
    print(f"integrand: {g.label} on [0, {_fmt(g.total_time)}]")
    print(f"sigma: {_fmt(est.sigma)}  p: {_fmt(est.p)}  cells: {est.cells}  delta: {_fmt(est.delta)}")
    print(f"term |g|^p:          {_fmt(est.term_value)}")
    print(f"term |dg|^p:         {_fmt(est.term_derivative)}")
    print(f"term slobodeckij:    {_fmt(est.term_slobodeckij)}")
    print(f"total (p-th root):   {_fmt(est.value)}")
    growth = [
        (b.value - a.value) / a.value if a.value > 0 else 0.0
        for a, b in zip(estimates, estimates[1:])
    ]
    print(
        "delta refinement (delta, delta/2, delta/4): "
        + ", ".join(_fmt(e.value) for e in estimates)
    )
    diverging = bool(growth) and min(growth) > 0.04
    print(f"relative growth per halving: {', '.join(f'{g_:.4f}' for g_ in growth)}")
    print("indicator: " + ("DIVERGING under delta refinement" if diverging else "stable under delta refinement"))
    return EXIT_OK


_COMMANDS = {
    "eval": cmd_eval,
    "example1": cmd_example1,
    "example2": cmd_example2,
    "sobolev": cmd_sobolev,
}


def main(argv=None) -> int:
    try:
        config = RunConfig.from_argv(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[config.subcommand](config)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
