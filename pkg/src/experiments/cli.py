"""
Command-line entry point: validate scenarios, run one policy, or compare
several policies over a range of seeds.

    sdnbalance validate --scenario fig4
    sdnbalance run --scenario fig4 --policy RL_LBM --seed 42 --out runs/rl
    sdnbalance compare --scenario fig4 --seeds 0-19 --out runs/compare --jobs 4
"""

from __future__ import annotations
import argparse
from concurrent.futures import ProcessPoolExecutor
from enum import IntEnum
import functools
import json
import logging
import os
from pathlib import Path
import tempfile

import polars as pl

from sdnbalance.baselines import PolicyKind
from sdnbalance.model import load_ratios
from sdnbalance.sim import Scenario, records_to_table, run

from .scenario import ScenarioError, resolve_scenario

from typing import Callable, Sequence

__all__ = [
    "ExitCode",
    "parse_seeds",
    "parse_policies",
    "cmd_validate",
    "cmd_run",
    "cmd_compare",
    "main",
]

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
SUMMARY_FILE = "summary.json"
RUNS_FILE = "runs.csv"


class ExitCode(IntEnum):
    OK = 0
    USAGE = 2
    VALIDATION = 3
    RUNTIME = 4
    IO = 5


def parse_seeds(value: str) -> list[int]:
    """
    Parse a seed list such as `"0-19"`, `"1,5,9"` or `"0-4,10"`. Ranges are
    inclusive; duplicates are dropped, keeping first-seen order.
    """
    seeds: list[int] = []
    for part in value.split(","):
        part = part.strip()
        if not part:
            continue
        start, sep, end = part.partition("-")
        try:
            if sep:
                lo, hi = int(start), int(end)
                if hi < lo:
                    raise ValueError
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"Invalid seed or seed range: {part!r}") from None

    if not seeds:
        raise argparse.ArgumentTypeError("No seeds given.")
    return list(dict.fromkeys(seeds))


def parse_policies(value: str) -> list[PolicyKind]:
    try:
        kinds = [PolicyKind.parse(p) for p in value.split(",") if p.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None
    if not kinds:
        raise argparse.ArgumentTypeError("No policies given.")
    return list(dict.fromkeys(kinds))


def _parse_policy(value: str) -> PolicyKind:
    try:
        return PolicyKind.parse(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _exit_status(func: Callable[..., None]) -> Callable[..., int]:
    "Map a command's exceptions onto exit codes."

    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> int:
        try:
            func(*args, **kwargs)
        except ScenarioError as e:
            logger.error("Invalid scenario: %s", e)
            return ExitCode.VALIDATION
        except OSError as e:
            logger.error("I/O error: %s", e)
            return ExitCode.IO
        except Exception:
            logger.exception("Run failed.")
            return ExitCode.RUNTIME
        return ExitCode.OK

    return wrapper


def _write_outputs(out_dir: Path, files: dict[str, str]) -> None:
    """
    Write every file of `files` (name -> content) into `out_dir`. Files are
    staged next to `out_dir` first, so a failure leaves no partial outputs.
    """
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory(dir=out_dir.parent, prefix=f".{out_dir.name}-") as staging:
        for name, content in files.items():
            (Path(staging) / name).write_text(content, encoding="utf-8", newline="\n")

        out_dir.mkdir(exist_ok=True)
        for name in files:
            os.replace(Path(staging) / name, out_dir / name)
            logger.info("Wrote %s", out_dir / name)


def _to_json(document: dict) -> str:
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def _run_frame(scenario: Scenario, policy: PolicyKind, seed: int) -> pl.DataFrame:
    records = run(scenario, policy, seed)
    return pl.from_arrow(records_to_table(records, scenario.topology.controller_ids()))


@_exit_status
def cmd_validate(scenario: str | Path) -> None:
    """
    Validate a scenario and log a per-controller summary of its initial
    snapshot.
    """
    loaded = resolve_scenario(scenario)
    topology = loaded.topology
    ratios = load_ratios(topology)

    logger.info(
        "Scenario %s is valid: %d controllers, %d switches, %d rounds.",
        loaded.name,
        len(topology.controllers),
        len(topology.switches),
        loaded.rounds,
    )
    summary = (
        pl.from_arrow(topology.to_arrow())
        .group_by("controller")
        .agg(
            pl.col("switch").sort().alias("switches"),
            pl.col("packet_in_rate").sum().alias("load"),
            pl.col("hops").mean().alias("mean_hops"),
        )
        .sort("controller")
    )
    for row in summary.iter_rows(named=True):
        c = row["controller"]
        logger.info(
            "  controller %d: capacity %g, switches %s, load %g, initial load ratio %.3f, "
            "mean hops to owned switches %.2f",
            c,
            topology.controller(c).capacity,
            row["switches"],
            row["load"],
            ratios[c],
            row["mean_hops"],
        )
    idle = sorted(set(topology.controller_ids()) - set(summary["controller"].to_list()))
    if idle:
        logger.info("  controllers without switches: %s", idle)


@_exit_status
def cmd_run(
    scenario: str | Path, policy: PolicyKind | str, seed: int | None, out_dir: str | Path
) -> None:
    """
    Run one policy on a scenario and write `metrics.csv` (one row per round)
    and `summary.json` to `out_dir`.

    Parameters
    ----------
    scenario
        Scenario file path or bundled scenario name.
    policy
        Policy to run.
    seed
        Run seed; defaults to the scenario's.
    out_dir
        Created if needed. Existing output files are overwritten.
    """
    loaded = resolve_scenario(scenario)
    policy = PolicyKind.parse(policy)
    seed = loaded.seed if seed is None else seed

    frame = _run_frame(loaded, policy, seed)
    summary = {
        "scenario": loaded.name,
        "policy": policy.value,
        "seed": seed,
        "rounds": loaded.rounds,
        "final_D": frame["D"][-1],
        "mean_delay": frame["mean_delay"].mean(),
        "cumulative_cost": frame["cum_cost"][-1],
        "migrated_switches": int(frame["migrations"].sum()),
        "migration_rounds": int((frame["migrations"] > 0).sum()),
        "controller_costs": {
            str(c): frame[f"cost_{c}"][-1] for c in loaded.topology.controller_ids()
        },
    }

    _write_outputs(
        Path(out_dir), {METRICS_FILE: frame.write_csv(), SUMMARY_FILE: _to_json(summary)}
    )


def _aggregate_series(runs: pl.DataFrame) -> pl.DataFrame:
    "Per-round mean and spread across seeds, for one policy's runs."
    return (
        runs.group_by("round")
        .agg(
            pl.col("D").mean().alias("D_mean"),
            pl.col("D").std(ddof=0).alias("D_std"),
            pl.col("D").min().alias("D_min"),
            pl.col("D").max().alias("D_max"),
            pl.col("mean_delay").mean().alias("delay_mean"),
            pl.col("mean_delay").std(ddof=0).alias("delay_std"),
            pl.col("cum_cost").mean().alias("cum_cost_mean"),
            pl.col("cum_cost").std(ddof=0).alias("cum_cost_std"),
            pl.col(r"^cost_\d+$").mean().name.suffix("_mean"),
        )
        .sort("round")
    )


def _policy_summary(runs: pl.DataFrame) -> dict:
    final = runs.filter(pl.col("round") == pl.col("round").max())
    return {
        "final_D_mean": final["D"].mean(),
        "final_D_std": final["D"].std(ddof=0),
        "mean_delay": runs["mean_delay"].mean(),
        "cumulative_cost_mean": final["cum_cost"].mean(),
        "migrated_switches_mean": runs.group_by("seed").agg(pl.col("migrations").sum())[
            "migrations"
        ].mean(),
    }


def _run_instance(args: tuple[Scenario, PolicyKind, int]) -> pl.DataFrame:
    scenario, policy, seed = args
    return _run_frame(scenario, policy, seed)


@_exit_status
def cmd_compare(
    scenario: str | Path,
    policies: Sequence[PolicyKind | str],
    seeds: Sequence[int],
    out_dir: str | Path,
    jobs: int = 1,
) -> None:
    """
    Run every (policy, seed) combination on a scenario and write, to `out_dir`:

    - `<POLICY>_series.csv` per policy: per-round mean and population standard
      deviation across seeds of D, mean delay, and cumulative cost, the D
      range, and the mean cumulative cost charged to each controller
      (`cost_<id>_mean`).
    - `runs.csv`: every run's per-round metrics, tagged with policy and seed.
    - `summary.json`: per-policy aggregates, and the relative mean-delay
      reduction of RL_LBM versus MMO_LBM in percent (when both were run).

    Outputs depend only on the arguments, not on `jobs`.
    """
    loaded = resolve_scenario(scenario)
    policies = list(dict.fromkeys(PolicyKind.parse(p) for p in policies))
    seeds = list(seeds)
    if not policies or not seeds:
        raise ValueError("At least one policy and one seed are required.")

    instances = [(loaded, p, s) for p in policies for s in seeds]
    logger.info(
        "Comparing %s on %s over %d seeds (%d runs).",
        [p.value for p in policies],
        loaded.name,
        len(seeds),
        len(instances),
    )

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            frames = list(executor.map(_run_instance, instances))
    else:
        frames = [_run_instance(i) for i in instances]

    runs = pl.concat(
        [
            frame.select(
                pl.lit(policy.value).alias("policy"),
                pl.lit(seed, dtype=pl.Int64).alias("seed"),
                pl.all(),
            )
            for (_, policy, seed), frame in zip(instances, frames)
        ]
    )

    files: dict[str, str] = {}
    per_policy: dict[str, dict] = {}
    for policy in policies:
        policy_runs = runs.filter(pl.col("policy") == policy.value)
        files[f"{policy.value}_series.csv"] = _aggregate_series(policy_runs).write_csv()
        per_policy[policy.value] = _policy_summary(policy_runs)

    reduction = None
    if PolicyKind.RL_LBM.value in per_policy and PolicyKind.MMO_LBM.value in per_policy:
        rl = per_policy[PolicyKind.RL_LBM.value]["mean_delay"]
        mmo = per_policy[PolicyKind.MMO_LBM.value]["mean_delay"]
        reduction = (mmo - rl) / mmo * 100 if mmo else None
        logger.info("RL_LBM mean delay vs MMO_LBM: %s%% reduction.", reduction)

    summary = {
        "scenario": loaded.name,
        "rounds": loaded.rounds,
        "seeds": seeds,
        "policies": per_policy,
        "delay_reduction_rl_vs_mmo_pct": reduction,
    }

    files[RUNS_FILE] = runs.write_csv()
    files[SUMMARY_FILE] = _to_json(summary)
    _write_outputs(Path(out_dir), files)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdnbalance",
        description="Simulate switch-migration load balancing in a multi-controller SDN control plane.",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging verbosity (default: INFO).",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    scenario_help = "Scenario file, or the name of a bundled scenario (e.g. fig4)."

    validate = subparsers.add_parser("validate", help="Validate a scenario file.")
    validate.add_argument("--scenario", required=True, help=scenario_help)

    run_parser = subparsers.add_parser("run", help="Run one policy on a scenario.")
    run_parser.add_argument("--scenario", required=True, help=scenario_help)
    run_parser.add_argument(
        "--policy",
        type=_parse_policy,
        default=PolicyKind.RL_LBM,
        help=f"One of {[k.value for k in PolicyKind]} (default: RL_LBM).",
    )
    run_parser.add_argument(
        "--seed", type=int, default=None, help="Run seed (default: the scenario's)."
    )
    run_parser.add_argument("--out", required=True, type=Path, help="Output directory.")

    compare = subparsers.add_parser("compare", help="Compare policies over several seeds.")
    compare.add_argument("--scenario", required=True, help=scenario_help)
    compare.add_argument(
        "--policies",
        type=parse_policies,
        default=list(PolicyKind),
        help="Comma-separated policies (default: all).",
    )
    compare.add_argument(
        "--seeds",
        type=parse_seeds,
        default=list(range(20)),
        help="Seeds as ranges and/or lists, e.g. 0-19 or 1,2,5 (default: 0-19).",
    )
    compare.add_argument("--out", required=True, type=Path, help="Output directory.")
    compare.add_argument(
        "--jobs", type=int, default=1, help="Parallel worker processes (default: 1)."
    )

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=args.log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    match args.command:
        case "validate":
            return cmd_validate(args.scenario)
        case "run":
            return cmd_run(args.scenario, args.policy, args.seed, args.out)
        case "compare":
            if args.jobs < 1:
                parser.error("--jobs must be >= 1")
            return cmd_compare(args.scenario, args.policies, args.seeds, args.out, args.jobs)
