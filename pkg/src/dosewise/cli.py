"""Command-line front end: schedules, batch simulation, config comparison,
and the trial-conduct service.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from dosewise import reporting
from dosewise.config import ConfigError, SimConfig, load_sim_config
from dosewise.crm import QuadratureError
from dosewise.schedule import build_fixed_schedule, build_unequal_schedule
from dosewise.simkit import SimSummary, run_batch

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dosewise",
        description="Dose-finding schedules, operating characteristics, and trial conduct.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sched = sub.add_parser("schedule", help="print a cohort schedule")
    p_sched.add_argument("--n", type=int, required=True, help="total number of patients")
    p_sched.add_argument("--mode", choices=("unequal", "fixed"), default="unequal")
    p_sched.add_argument("--cohort", type=int, default=3, help="cohort size for --mode fixed")

    p_sim = sub.add_parser("simulate", help="run a batch study from a JSON config")
    p_sim.add_argument("--config", required=True, help="path to the JSON config")
    p_sim.add_argument("--csv", help="also write results to this CSV file")
    p_sim.add_argument("--workers", type=int, default=None, help="simulation worker processes")

    p_cmp = sub.add_parser("compare", help="run two configs and print deltas (B minus A)")
    p_cmp.add_argument("--config-a", required=True)
    p_cmp.add_argument("--config-b", required=True)
    p_cmp.add_argument("--workers", type=int, default=None)

    p_srv = sub.add_parser("serve", help="run the trial-conduct REST service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8411)
    p_srv.add_argument("--data-dir", default="./trial-data", help="event-log directory")

    return parser


def _cmd_schedule(args: argparse.Namespace) -> int:
    try:
        if args.mode == "unequal":
            schedule = build_unequal_schedule(args.n)
        else:
            schedule = build_fixed_schedule(args.n, args.cohort)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sizes = ",".join(str(s) for s in schedule.sizes)
    print(f"{sizes} ({schedule.n_cohorts} cohorts)")
    return EXIT_OK


def _run_config(cfg: SimConfig, workers: int | None) -> list[SimSummary]:
    return [
        run_batch(
            cfg.design,
            scenario,
            cfg.schedule,
            replications=cfg.replications,
            master_seed=cfg.master_seed,
            workers=workers,
        )
        for scenario in cfg.scenarios
    ]


def _cmd_simulate(args: argparse.Namespace) -> int:
    try:
        cfg = load_sim_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summaries = _run_config(cfg, args.workers)
    except QuadratureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    title = (
        f"{cfg.design_name} / {cfg.schedule_mode}"
        + (f"-{cfg.fixed_cohort}" if cfg.fixed_cohort else "")
    )
    if cfg.output == "markdown":
        print(reporting.format_markdown(summaries, title=title))
    elif cfg.output == "csv":
        print(reporting.format_csv(summaries), end="")
    else:
        print(reporting.format_json(summaries))
    if args.csv:
        Path(args.csv).write_text(reporting.format_csv(summaries))
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace) -> int:
    try:
        cfg_a = load_sim_config(args.config_a)
        cfg_b = load_sim_config(args.config_b)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg_a.n_total != cfg_b.n_total:
        print(
            f"error: configs disagree on N ({cfg_a.n_total} vs {cfg_b.n_total})",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    if cfg_a.design_name != cfg_b.design_name:
        print(
            f"error: configs disagree on design ({cfg_a.design_name} vs {cfg_b.design_name})",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    if [s.true_tox for s in cfg_a.scenarios] != [s.true_tox for s in cfg_b.scenarios]:
        print("error: configs disagree on scenarios", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summaries_a = _run_config(cfg_a, args.workers)
        summaries_b = _run_config(cfg_b, args.workers)
    except QuadratureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    def label(cfg: SimConfig) -> str:
        mode = cfg.schedule_mode + (f"-{cfg.fixed_cohort}" if cfg.fixed_cohort else "")
        return f"{cfg.design_name}/{mode}"

    print(reporting.format_comparison(label(cfg_a), label(cfg_b), summaries_a, summaries_b))
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    from dosewise.trialsvc import serve

    serve(host=args.host, port=args.port, data_dir=args.data_dir)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "schedule": _cmd_schedule,
        "simulate": _cmd_simulate,
        "compare": _cmd_compare,
        "serve": _cmd_serve,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
