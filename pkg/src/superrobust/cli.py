"""Command-line entry point: ``superrobust {generate,estimate,bounds,profile}``.

Exit codes: 0 success, 1 usage or input error, 2 degenerate data.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from contextlib import contextmanager

from . import bounds
from .estimator import AnnealSchedule, EstimateConfig, anneal_p, estimate, estimate_l0
from .io import dump_experiment, load_experiment
from .objective import L0, parse_family
from .simulate import ScenarioConfig, breakdown_profile, default_truth, generate_experiment, parse_noise, trial_seed
from .transforms import DegenerateExperimentError, Group, Transform, sanitize

EXIT_USAGE = 1
EXIT_DEGENERATE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _truth(args) -> Transform:
    group = Group.parse(args.group)
    if args.params is None:
        return default_truth(group, args.dim)
    return Transform(group, tuple(args.params))


def cmd_generate(args) -> int:
    truth = _truth(args)
    cfg = ScenarioConfig(
        group=truth.group,
        dim=args.dim,
        n_ideal=args.n,
        m_noise=args.m,
        truth=truth,
        noise=parse_noise(args.noise),
        master_seed=args.seed,
    )
    exp, meta = generate_experiment(cfg, trial_seed(args.seed))
    with _output(args.out) as fh:
        dump_experiment(exp, fh, meta)
    return 0


def cmd_estimate(args) -> int:
    try:
        with open(args.input) as fh:
            exp, _ = load_experiment(fh)
    except OSError as err:
        raise UsageError(f"cannot read {args.input}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise UsageError(f"{args.input} is not valid JSON: {err}") from None
    group = Group.parse(args.group)
    exp = sanitize(exp, group)
    config = EstimateConfig(refine=args.refine, pos_tol=args.tol)
    if args.anneal:
        schedule = AnnealSchedule(tuple(args.schedule)) if args.schedule else AnnealSchedule()
        result = anneal_p(exp, group, schedule, config)
    else:
        family = parse_family(args.family)
        if isinstance(family, L0):
            result = estimate_l0(exp, group, family.tol)
        else:
            result = estimate(exp, group, family, config)
    with _output(args.out) as fh:
        json.dump(result.to_dict(), fh, indent=1)
        fh.write("\n")
    return 0


def cmd_bounds(args) -> int:
    with _output(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if args.table == "a":
            Ms = args.m_values or list(range(100, 1001, 100))
            writer.writerow(["M", "a"])
            for M, a in bounds.a_table(Ms, args.target):
                writer.writerow([M, f"{a:.3f}"])
        else:
            ps = args.p_values or [round(0.05 * k, 2) for k in range(10, 0, -1)]
            a = args.a if args.a is not None else bounds.min_confidence_exponent(args.M, args.target)
            writer.writerow(["p", "n_over_M"])
            for p, ratio in bounds.breakdown_table(ps, args.M, a):
                writer.writerow([f"{p:g}", f"{ratio:.{args.digits}f}"])
    return 0


def cmd_profile(args) -> int:
    truth = _truth(args)
    base = ScenarioConfig(
        group=truth.group,
        dim=args.dim,
        n_ideal=0,
        m_noise=args.m,
        truth=truth,
        noise=parse_noise(args.noise),
        master_seed=args.seed,
    )
    profile = breakdown_profile(base, args.p_values, args.ratios, args.trials)
    with _output(args.out) as fh:
        profile.write_csv(fh)
    if args.trials_out:
        with open(args.trials_out, "w") as fh:
            profile.write_trials_jsonl(fh)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="superrobust", description="Super-robust Lp transformation estimation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_flags(p):
        p.add_argument("--group", default="translation", help="translation | uniform_scaling | nonuniform_scaling | rotation2d")
        p.add_argument("--dim", type=int, default=1)
        p.add_argument("--params", type=_floats, default=None, help="true transform parameters, comma separated")
        p.add_argument("--noise", default="uniform:1", help="uniform:<max> or powerlaw:<K>")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output path (default stdout)")

    g = sub.add_parser("generate", help="write a synthetic experiment as JSON")
    scenario_flags(g)
    g.add_argument("--n", type=int, required=True, help="number of exact pairs")
    g.add_argument("--m", type=int, required=True, help="number of noisy pairs")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("estimate", help="estimate a transform from an experiment file")
    e.add_argument("input", help="experiment JSON file")
    e.add_argument("--group", default="translation")
    e.add_argument("--family", default="lp:0.1", help="lp:<p> | l0:<tol> | sr:<p>,<q>,<k>")
    e.add_argument("--anneal", action="store_true", help="anneal p along a decreasing schedule")
    e.add_argument("--schedule", type=_floats, default=None, help="p values for --anneal")
    e.add_argument("--refine", action=argparse.BooleanOptionalAction, default=None)
    e.add_argument("--tol", type=float, default=1e-9, help="exact-fit tolerance for POS counts")
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("bounds", help="print the analytic tables as CSV")
    b.add_argument("--table", choices=["a", "breakdown"], required=True)
    b.add_argument("--target", type=float, default=bounds.DEFAULT_TARGET)
    b.add_argument("--m-values", type=_ints, default=None)
    b.add_argument("--p-values", type=_floats, default=None)
    b.add_argument("--M", type=int, default=1000)
    b.add_argument("--a", type=float, default=None, help="concentration exponent (default: derived from --M)")
    b.add_argument("--digits", type=int, default=2)
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bounds)

    pr = sub.add_parser("profile", help="Monte Carlo recovery rates on a p by n/M grid")
    scenario_flags(pr)
    pr.add_argument("--m", type=int, default=200, help="number of noisy pairs M")
    pr.add_argument("--p-values", type=_floats, required=True)
    pr.add_argument("--ratios", type=_floats, required=True, help="inlier ratios n/M")
    pr.add_argument("--trials", type=int, default=100)
    pr.add_argument("--trials-out", default=None, help="also write per-trial JSONL here")
    pr.set_defaults(func=cmd_profile)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateExperimentError as err:
        print(f"superrobust: degenerate experiment: {err}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (UsageError, ValueError) as err:
        print(f"superrobust: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
