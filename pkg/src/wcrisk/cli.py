"""
Command-line interface.

stdout carries machine-readable results only (JSON, or TSV for frontiers and
verify reports); diagnostics go to stderr.

Exit codes:
    0  success
    2  malformed input (bad file, field or argument)
    3  infeasible or unbounded problem
    4  certificate or verification failure
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from . import io as wio
from .errors import CertificateError, InfeasibleError, InputError, UnboundedError
from .measures import spectral_risk
from .moments import MomentPair
from .portfolio import frontier, reduce, schur_certificate, solve, solve_polytopic
from .spectra import SpectrumSet
from .worstcase import equivalent_epsilon, wclicrm

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_CERTIFICATE = 4

log = logging.getLogger("wcrisk")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INPUT)


def _emit(obj) -> None:
    sys.stdout.write(wio.dump_json(obj) + "\n")


def _risk_eval(args) -> int:
    dist = wio.load_distribution(args.dist)
    spectra = wio.load_spectra(args.spectrum)
    values = [spectral_risk(dist, s) for s in spectra]
    _emit({
        "spectra": [s.to_dict() for s in spectra],
        "values": values,
        "value": max(values),
        "mean": dist.mean(),
        "std": dist.std(),
    })
    return EXIT_OK


def _risk_worst_case(args) -> int:
    try:
        m = MomentPair(args.mean, args.std)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    spectra = wio.load_spectra(args.spectrum)
    if args.set:
        spectra += wio.load_spectra(args.set)
    try:
        res = wclicrm(m, SpectrumSet(spectra))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit({
        "value": res.value,
        "kappa": res.kappa,
        "equivalent_epsilon": res.equivalent_epsilon,
        "attaining_spectrum": spectra[res.attaining_spectrum_index].to_dict(),
        "attaining_index": res.attaining_spectrum_index,
    })
    return EXIT_OK


def _check_solution(problem, sol) -> None:
    if not problem.polytope.contains(sol.x):
        raise CertificateError("solver returned an allocation outside the feasible set")
    if sol.kappa > 0.0 and problem.vertices is None:
        _, min_eig, match = schur_certificate(sol.x, problem.moments, sol.kappa)
        if match > 1e-9 * (1.0 + abs(sol.objective)) or min_eig < -1e-8:
            raise CertificateError(f"matrix-form certificate failed (eig {min_eig:.3g}, gap {match:.3g})")


def _portfolio_solve(args) -> int:
    problem = wio.load_problem(args.problem)
    tol = args.tol if args.tol is not None else problem.tol
    if problem.vertices:
        sol = solve_polytopic(problem.polytope, problem.vertices, problem.spectra, tol)
    else:
        sol = solve(problem.polytope, problem.moments, problem.spectra, tol)
    _check_solution(problem, sol)
    out = sol.to_dict()
    # from the norm directly, so CVaR inputs echo their own tail probability
    out["equivalent_epsilon"] = equivalent_epsilon(problem.spectra)
    out["assets"] = problem.assets
    if problem.vertices is None:
        pair = reduce(sol.x, problem.moments)
        out["portfolio_mean"] = pair.mean
        out["portfolio_std"] = pair.std
    _emit(out)
    return EXIT_OK


def _parse_grid(text: str) -> list[float]:
    try:
        grid = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"--eps-grid: expected comma-separated numbers, got {text!r}") from None
    if not grid or any(not (0.0 < e <= 1.0) for e in grid):
        raise InputError("--eps-grid: every entry must lie in (0, 1]")
    return grid


def _portfolio_frontier(args) -> int:
    problem = wio.load_problem(args.problem)
    grid = _parse_grid(args.eps_grid)
    tol = args.tol if args.tol is not None else problem.tol
    rows = frontier(problem.polytope, problem.moments, grid, tol, problem.vertices)
    sys.stdout.write(wio.frontier_tsv(problem.assets, rows))
    if args.plot:
        from .plotting import frontier_figure

        frontier_figure(problem.assets, rows, args.plot)
        log.info("wrote %s", args.plot)
    return EXIT_OK


def _verify(args) -> int:
    from .verify import all_passed, run

    checks = run(args.suite)
    for c in checks:
        sys.stdout.write(c.line() + "\n")
    ok = all_passed(checks)
    log.info("%d/%d checks passed", sum(c.passed for c in checks), len(checks))
    return EXIT_OK if ok else EXIT_CERTIFICATE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wcrisk", description="Worst-case spectral risk under mean/std ambiguity.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    risk = sub.add_parser("risk", help="nominal and worst-case risk of a single loss")
    rsub = risk.add_subparsers(dest="action", required=True, parser_class=_Parser)
    ev = rsub.add_parser("eval", help="spectral risk of a discrete loss distribution")
    ev.add_argument("--dist", required=True, help="JSON {atoms, probs} or CSV of atom[,prob]")
    ev.add_argument("--spectrum", required=True, help="shorthand (cvar:0.05, exp:10, power:2, uniform) or JSON file")
    ev.set_defaults(func=_risk_eval)
    wc = rsub.add_parser("worst-case", help="closed-form worst case over all laws with the given mean and std")
    wc.add_argument("--mean", type=float, required=True)
    wc.add_argument("--std", type=float, required=True)
    wc.add_argument("--spectrum", required=True)
    wc.add_argument("--set", help="JSON file with further spectra; the worst case is over their union")
    wc.set_defaults(func=_risk_worst_case)

    port = sub.add_parser("portfolio", help="robust portfolio optimization")
    psub = port.add_subparsers(dest="action", required=True, parser_class=_Parser)
    so = psub.add_parser("solve", help="minimize worst-case risk of -R^T x")
    so.add_argument("--problem", required=True)
    so.add_argument("--tol", type=float)
    so.set_defaults(func=_portfolio_solve)
    fr = psub.add_parser("frontier", help="sweep the CVaR tail probability; TSV on stdout")
    fr.add_argument("--problem", required=True)
    fr.add_argument("--eps-grid", required=True, help="comma-separated tail probabilities")
    fr.add_argument("--tol", type=float)
    fr.add_argument("--plot", help="also write a PNG figure to this path")
    fr.set_defaults(func=_portfolio_frontier)

    ve = sub.add_parser("verify", help="run oracle self-checks")
    ve.add_argument("--suite", choices=("all", "sandwich", "lp", "schur"), default="all")
    ve.set_defaults(func=_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (InfeasibleError, UnboundedError) as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except CertificateError as exc:
        sys.stderr.write(f"certificate failure: {exc}\n")
        return EXIT_CERTIFICATE
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
