"""Command-line front end: ``hypest simulate | estimate | asymptotics | power``.

Exit status 0 on success, 2 for configuration errors (bad flags, bad or
unreadable scenario files), 3 for data errors (unreadable or invalid patient
CSV).
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import asdict

from . import __version__
from ._backend import BACKEND
from .asymptotics import (ScenarioParams, asymptotic_se, avar_pre, avar_prepost,
                          parametric_inputs, power_prepost)
from .data_model import PositivityReport, positivity_check, read_csv, validate
from .errors import ConfigInvalidError, EstimationError, SingularConditionalCovarianceError
from .estimators import FormulaBundle, run_all_estimators
from .formulas import ModelFormula
from .report import (default_scenarios, fmt3, load_scenarios, override, parse_interactions,
                     render_replicates, render_table)
from .simulator import RNG_METHOD, SIM_ESTIMATORS, TABLE_ESTIMATORS, run_study
from .snde import snde_ipw, snde_unweighted

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3
OUTCOME_INTERACTION = {"none": 0.0, "l1r": 0.5}


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", metavar="FILE",
                   help="scenario file; 'default' selects the bundled ten runs")
    p.add_argument("--pi0", type=float)
    p.add_argument("--pi1", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--outcome-interaction", choices=sorted(OUTCOME_INTERACTION),
                   help="l1r adds 0.5 * L1 * R to the outcome model")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hypest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hypest {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="Monte Carlo study over one or more scenarios")
    _add_scenario_flags(sim)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--g2-interactions", metavar="LIST",
                     help="comma list of a:r, l0:r, l1:r for the post-ICE outcome model, or none")
    sim.add_argument("--estimators", metavar="LIST",
                     help=f"comma list (default {','.join(TABLE_ESTIMATORS)})")
    sim.add_argument("--snde", action="store_true", help="also run both SNDE estimators")
    sim.add_argument("--format", choices=("csv", "md"), default="md")
    sim.add_argument("--out", metavar="PATH")
    sim.add_argument("--dump-replicates", metavar="PATH",
                     help="write per-replicate estimates to PATH (PATH.<k>.csv for several scenarios)")

    est = sub.add_parser("estimate", help="run every estimator on a patient CSV")
    est.add_argument("data", metavar="CSV")
    est.add_argument("--g2-interactions", metavar="LIST")
    est.add_argument("--snde", action="store_true")
    est.add_argument("--positivity-threshold", type=float, default=0.01)
    est.add_argument("--format", choices=("csv", "md"), default="md")
    est.add_argument("--out", metavar="PATH")

    asy = sub.add_parser("asymptotics", help="closed-form asymptotic variances")
    _add_scenario_flags(asy)
    asy.add_argument("--format", choices=("csv", "md"), default="md")
    asy.add_argument("--out", metavar="PATH")

    pw = sub.add_parser("power", help="power of the post-ICE test given the pre-ICE power")
    pw.add_argument("--p", type=float, required=True)
    pw.add_argument("--p-r0", type=float, required=True)
    pw.add_argument("--alpha", type=float, default=0.05)
    return parser


def resolve_scenarios(args) -> list[tuple[ScenarioParams, tuple[str, ...]]]:
    """Scenario rows from the file (if any) with command-line flags applied on top."""
    if args.scenario is None:
        rows = [(ScenarioParams(), ())]
    elif args.scenario == "default":
        rows = default_scenarios()
    else:
        try:
            rows = load_scenarios(args.scenario)
        except OSError as exc:
            raise ConfigInvalidError(f"cannot read scenario file: {exc}") from None
    changes = dict(pi0=args.pi0, pi1=args.pi1, n=args.n, seed=args.seed,
                   n_reps=getattr(args, "reps", None))
    if args.outcome_interaction is not None:
        changes["b_l1r"] = OUTCOME_INTERACTION[args.outcome_interaction]
    g2_flag = getattr(args, "g2_interactions", None)
    g2_override = parse_interactions(g2_flag) if g2_flag is not None else None
    return [(override(p, **changes), g2 if g2_override is None else g2_override) for p, g2 in rows]


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def replicate_path(path: str, k: int, total: int) -> str:
    """``path`` itself for a single scenario, else ``stem.<k+1>.suffix`` per scenario."""
    if total == 1:
        return path
    stem, dot, suffix = path.rpartition(".")
    if not dot or "/" in suffix:
        return f"{path}.{k + 1}"
    return f"{stem}.{k + 1}.{suffix}"


def _metadata(args, rows) -> dict:
    return {
        "version": __version__,
        "backend": BACKEND,
        "rng_method": RNG_METHOD,
        "workers": getattr(args, "workers", 1),
        "scenarios": [{"master_seed": p.seed, "g2_interactions": list(g2), **asdict(p)}
                      for p, g2 in rows],
    }


def _write_metadata(meta: dict, out: str | None) -> None:
    text = json.dumps(meta, indent=2, sort_keys=True)
    if out is None:
        sys.stderr.write(text + "\n")
    else:
        with open(out + ".meta.json", "w") as fh:
            fh.write(text + "\n")


def cmd_simulate(args) -> int:
    rows = resolve_scenarios(args)
    names = list(TABLE_ESTIMATORS)
    if args.estimators:
        names = [e.strip() for e in args.estimators.split(",") if e.strip()]
    if args.snde:
        names += [e for e in ("snde_ipw", "snde_unweighted") if e not in names]
    unknown = [e for e in names if e not in SIM_ESTIMATORS]
    if unknown:
        raise ConfigInvalidError(f"unknown estimators {unknown}")
    summaries = [run_study(p, estimators=tuple(names), g2_interactions=g2, workers=args.workers)
                 for p, g2 in rows]
    _emit(render_table(summaries, args.format), args.out)
    if args.dump_replicates:
        for k, s in enumerate(summaries):
            _emit(render_replicates(s), replicate_path(args.dump_replicates, k, len(summaries)))
    _write_metadata(_metadata(args, rows), args.out)
    return EXIT_OK


def _positivity_lines(ds, threshold) -> list[str]:
    try:
        rep: PositivityReport = positivity_check(ds, threshold)
    except EstimationError as exc:
        return [f"positivity: indeterminable ({exc})"]
    flagged = ",".join(map(str, rep.flagged_record_indices)) or "none"
    return [f"positivity: min fitted P(R=0) = {rep.min_fitted_no_ice_prob:.4g}; "
            f"records below {rep.threshold:g}: {flagged}"]


def cmd_estimate(args) -> int:
    try:
        ds = read_csv(args.data)
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from None
    verdict = validate(ds)
    if not verdict.ok:
        raise DataError("; ".join(v.reason for v in verdict.violations))
    g2 = ModelFormula.g2(interactions=parse_interactions(args.g2_interactions))
    results = [(r.estimator_name, r.delta_hat, "ok" if not hasattr(r, "error")
                else f"{type(r.error).__name__}: {r.error}")
               for r in run_all_estimators(ds, FormulaBundle(g2=g2))]
    if args.snde:
        for label, fn in (("snde_ipw", snde_ipw), ("snde_unweighted", snde_unweighted)):
            try:
                res = fn(ds)
            except EstimationError as exc:
                results += [(f"{label}_upsilon0", float("nan"), type(exc).__name__),
                            (f"{label}_upsilon1", float("nan"), type(exc).__name__)]
                continue
            results.append((f"{label}_upsilon0", res.upsilon0, "ok"))
            err = res.upsilon1_error
            results.append((f"{label}_upsilon1", float("nan") if err else res.upsilon1_value,
                            type(err).__name__ if err else "ok"))
    positivity = _positivity_lines(ds, args.positivity_threshold)

    buf = io.StringIO()
    if args.format == "md":
        buf.write("| estimator | estimate | status |\n|---|---:|---|\n")
        for name, value, status in results:
            buf.write(f"| {name} | {fmt3(value)} | {status} |\n")
        buf.write("\n" + "\n".join(positivity) + "\n")
    else:
        buf.write("estimator,estimate,estimate_3dp,status\n")
        for name, value, status in results:
            buf.write(f"{name},{value!r},{fmt3(value)},{status.split(':')[0]}\n")
        sys.stderr.write("\n".join(positivity) + "\n")
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_asymptotics(args) -> int:
    rows = resolve_scenarios(args)
    header = ["scenario", "pi0", "pi1", "n", "p_R0", "tau_diff", "var_A_R0", "var_A_R1",
              "var_L1_R0", "var_L1_R1", "cov_AL1_R0", "cov_AL1_R1", "avar_pre", "avar_prepost",
              "se_pre", "se_prepost"]
    table = []
    for p, _ in rows:
        inp = parametric_inputs(p)
        try:
            v_pre, v_post = avar_pre(inp), avar_prepost(inp)
        except SingularConditionalCovarianceError as exc:
            raise ConfigInvalidError(f"singular conditional covariance: {exc}") from None
        table.append([p.label, p.pi0, p.pi1, p.n, inp.p_R0, inp.tau_diff, *inp.var_A_given_R,
                      *inp.var_L1_given_R, *inp.cov_A_L1_given_R, v_pre, v_post,
                      asymptotic_se(v_pre, p.n), asymptotic_se(v_post, p.n)])
    buf = io.StringIO()
    if args.format == "csv":
        buf.write(",".join(header) + "\n")
        for row in table:
            buf.write(",".join(v if isinstance(v, str) else repr(v) for v in row) + "\n")
    else:
        buf.write("| " + " | ".join(header) + " |\n|" + "|".join("---:" for _ in header) + "|\n")
        for row in table:
            cells = [row[0], f"{row[1]:g}", f"{row[2]:g}", str(row[3])]
            cells += [fmt3(v) for v in row[4:]]
            buf.write("| " + " | ".join(cells) + " |\n")
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_power(args) -> int:
    try:
        value = power_prepost(args.p, args.p_r0, args.alpha)
    except ValueError as exc:
        raise ConfigInvalidError(str(exc)) from None
    sys.stdout.write(fmt3(value) + "\n")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate,
            "asymptotics": cmd_asymptotics, "power": cmd_power}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except DataError as exc:
        sys.stderr.write(f"hypest: data error: {exc}\n")
        return EXIT_DATA
    except ConfigInvalidError as exc:
        sys.stderr.write(f"hypest: config error: {exc}\n")
        return EXIT_CONFIG
    except OSError as exc:
        sys.stderr.write(f"hypest: config error: {exc}\n")
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
