"""Command-line interface: ``eacap capacity | tradeoff | verify``.

Exit codes: 0 success, 1 a verification check failed, 2 input error,
3 solver non-convergence (partial results are still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSpecError, KrausChannel, load_channel
from .lemma_lab import CapExceededError, verification_suite
from .optimize import SolverConfig, maximize_chi, maximize_qmi, tradeoff_sweep
from .qmatrix import Ensemble, von_neumann_entropy

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2, 3
ENDPOINT_TOL = 2e-3
CSV_HEADER = ["P", "capacity", "mu", "ensemble_size", "converged"]


class InputError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    channel: str | None
    grid: tuple[float, ...] = ()
    solver: SolverConfig = SolverConfig()
    out: str | None = None
    format: str = "pretty"
    n: int = 3
    trials: int = 50


def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:steps`` -> ``steps`` evenly spaced budgets, both ends included."""
    try:
        start, stop, steps = text.split(":")
        start, stop, steps = float(start), float(stop), int(steps)
    except ValueError as exc:
        raise InputError(f"grid must look like start:stop:steps, got {text!r}") from exc
    if steps < 1:
        raise InputError("grid steps must be >= 1")
    if start < 0 or stop < start:
        raise InputError("grid must be nonnegative and ascending")
    if steps == 1:
        return (start,)
    return tuple(float(x) for x in np.linspace(start, stop, steps))


def _fmt(x: float, digits: int = 9) -> str:
    # round first so tiny negatives print without a minus sign
    return f"{round(float(x), digits) + 0.0:.{digits}f}"


def _fmt6(x: float) -> str:
    return _fmt(x, 6)


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    line = lambda cells: "  ".join(c.rjust(w) for c, w in zip(cells, widths))
    return "\n".join([line(header), line(["-" * w for w in widths])] + [line(r) for r in rows]) + "\n"


def _describe_ensemble(ens: Ensemble, indent: str = "  ") -> str:
    lines = []
    for p, s in zip(ens.probs, ens.states):
        lines.append(f"{indent}p = {_fmt6(p)}  H = {_fmt6(von_neumann_entropy(s))}")
        for row in s.matrix:
            cells = " ".join(f"{round(z.real, 6) + 0.0:+.6f}{round(z.imag, 6) + 0.0:+.6f}j" for z in row)
            lines.append(f"{indent}  [{cells}]")
    return "\n".join(lines)


def cmd_capacity(cfg: RunConfig, ch: KrausChannel) -> tuple[str, int]:
    chi = maximize_chi(ch, cfg.solver)
    qmi = maximize_qmi(ch, cfg.solver)
    converged = chi.converged and qmi.converged
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "value"])
        w.writerow(["chi_max", _fmt(chi.value)])
        w.writerow(["C_E", _fmt(qmi.value)])
        w.writerow(["entanglement_cost_at_C_E", _fmt(qmi.entanglement_cost)])
        w.writerow(["converged", str(converged).lower()])
        text = buf.getvalue()
    else:
        text = (
            f"channel: {ch.name} ({ch.dim_in} -> {ch.dim_out}, {len(ch.kraus)} Kraus operators)\n"
            f"chi_max = {_fmt6(chi.value)} bits/use\n"
            f"achieving ensemble ({len(chi.ensemble)} pure states):\n{_describe_ensemble(chi.ensemble)}\n"
            f"C_E = {_fmt6(qmi.value)} bits/use\n"
            f"entanglement cost at C_E: H(rho*) = {_fmt6(qmi.entanglement_cost)} ebits/use\n"
            f"maximizing input:\n{_describe_ensemble(Ensemble((qmi.rho,)))}\n"
            f"converged: {str(converged).lower()}\n"
        )
    return text, EXIT_OK if converged else EXIT_NONCONVERGED


def cmd_tradeoff(cfg: RunConfig, ch: KrausChannel) -> tuple[str, int]:
    sweep = tradeoff_sweep(ch, cfg.grid, cfg.solver)
    rows = [
        [_fmt(pt.P), _fmt(pt.C), _fmt(pt.mu), str(len(pt.ensemble)), str(pt.converged).lower()]
        for pt in sweep.points
    ]
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = (
            f"channel: {ch.name}\n"
            f"chi_max = {_fmt6(sweep.chi.value)}, C_E = {_fmt6(sweep.qmi.value)} "
            f"at H(rho*) = {_fmt6(sweep.qmi.entanglement_cost)}\n" + _table(CSV_HEADER, rows)
        )
    status = EXIT_OK if sweep.converged else EXIT_NONCONVERGED
    for pt in sweep.points:
        if pt.P == 0.0 and abs(pt.C - sweep.chi.value) > ENDPOINT_TOL:
            print(f"warning: C(0) = {_fmt6(pt.C)} disagrees with chi_max = {_fmt6(sweep.chi.value)}",
                  file=sys.stderr)
            status = EXIT_NONCONVERGED
        if pt.P >= sweep.qmi.entanglement_cost and abs(pt.C - sweep.qmi.value) > ENDPOINT_TOL:
            print(f"warning: C({pt.P:g}) = {_fmt6(pt.C)} disagrees with C_E = {_fmt6(sweep.qmi.value)}",
                  file=sys.stderr)
            status = EXIT_NONCONVERGED
    return text, status


def cmd_verify(cfg: RunConfig, ch: KrausChannel | None) -> tuple[str, int]:
    checks = verification_suite(cfg.n, cfg.trials, cfg.solver.seed, ch)
    rows = [[c.name, "PASS" if c.passed else "FAIL", str(c.trials), f"{c.worst_slack:.3e}"] for c in checks]
    header = ["check", "result", "trials", "worst_slack"]
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = _table(header, rows)
        for c in checks:
            if not c.passed and c.detail:
                text += f"{c.name}: {c.detail}\n"
        text += f"{sum(c.passed for c in checks)}/{len(checks)} checks passed\n"
    return text, EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eacap",
        description="Classical capacity of a quantum channel with limited shared entanglement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, channel_required=True):
        p.add_argument("--channel", required=channel_required,
                       help="JSON channel file or shorthand name[:param][:dim], e.g. depolarizing:0.3:2")
        p.add_argument("--multistarts", type=int, default=SolverConfig.multistarts)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=SolverConfig.objective_tolerance,
                       help="objective tolerance of the local search")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("csv", "pretty"), default="pretty")
        p.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("capacity", help="chi_max and C_E"))
    p = sub.add_parser("tradeoff", help="capacity as a function of the entanglement budget")
    common(p)
    p.add_argument("--grid", default="0:1:5", help="entanglement budgets start:stop:steps (ebits/use)")
    p = sub.add_parser("verify", help="exact checks of the entropy lemmas")
    common(p, channel_required=False)
    p.add_argument("--n", type=int, default=3, help="number of shared states in the lemma checks")
    p.add_argument("--trials", type=int, default=50, help="fuzz instances per check")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("scipy").setLevel(logging.WARNING)
    try:
        solver = SolverConfig(multistarts=args.multistarts, seed=args.seed, objective_tolerance=args.tol)
        cfg = RunConfig(
            command=args.command,
            channel=args.channel,
            grid=parse_grid(args.grid) if args.command == "tradeoff" else (),
            solver=solver,
            out=args.out,
            format=args.format,
            n=getattr(args, "n", 3),
            trials=getattr(args, "trials", 50),
        )
        ch = load_channel(cfg.channel) if cfg.channel else None
        if cfg.command == "capacity":
            text, status = cmd_capacity(cfg, ch)
        elif cfg.command == "tradeoff":
            text, status = cmd_tradeoff(cfg, ch)
        else:
            text, status = cmd_verify(cfg, ch)
    except (InputError, ChannelSpecError, CapExceededError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if status == EXIT_NONCONVERGED:
        print("warning: solver did not converge; results are lower bounds", file=sys.stderr)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
