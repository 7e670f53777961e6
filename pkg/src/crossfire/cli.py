"""Experiment runner CLI.

``crossfire run config.json`` executes every (controller, seed) pair of the
roster, with the volume stream paired by seed so the comparison is noise-free
across controllers, then writes per-cycle and summary CSVs plus two charts.

Exit codes: 0 success, 2 configuration error, 3 I/O or chart-emission error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config, validate_config
from .presets import build_systems
from .simulation import RunResult, SimConfig, run_simulation

__all__ = [
    "ComparisonSummary",
    "run_experiment",
    "write_cycles_csv",
    "write_summary_csv",
    "read_cycles_csv",
    "emit_charts",
    "rolling_mean",
    "main",
]

THREADS_ENV_VAR = "CROSSFIRE_THREADS"

CYCLES_HEADER = ("cycle", "intersection", "v_ns", "v_we", "tg_ns",
                 "delay_s", "reward", "controller", "seed")
SUMMARY_HEADER = ("controller", "seed", "avg_delay_s", "pct_vs_fixed")


@dataclass(frozen=True)
class ComparisonSummary:
    """Results of one experiment, keyed by (controller, seed)."""

    controllers: tuple[str, ...]
    seeds: tuple[int, ...]
    totals: dict[tuple[str, int], float]
    series: dict[str, np.ndarray]            # mean over seeds, per controller
    reduction_vs_fixed: dict[tuple[str, int], float | None]
    volume_digests: dict[int, str]

    def mean_total(self, controller: str) -> float:
        return float(np.mean([self.totals[(controller, s)] for s in self.seeds]))


def _worker_count(n_jobs: int) -> int:
    limit = os.cpu_count() or 1
    env = os.environ.get(THREADS_ENV_VAR)
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(
                f"{THREADS_ENV_VAR}: expected an integer, got {env!r}") from None
        if cap < 1:
            raise ConfigError(f"{THREADS_ENV_VAR}: must be >= 1, got {cap}")
        limit = min(limit, cap)
    return max(1, min(limit, n_jobs))


def _run_single(data: dict, kind: str, seed: int) -> RunResult:
    """Worker entry: rebuild everything from the plain config dict."""
    cfg = validate_config(data)
    systems = build_systems(cfg.fuzzy)
    sim = SimConfig(
        cycle_time=cfg.cycle_time,
        capacity=cfg.capacity,
        horizon=cfg.horizon,
        volume_max=cfg.volume_max,
        seed=seed,
    )
    return run_simulation(sim, kind, systems=systems, params=cfg.params,
                          fixed_green=cfg.fixed_green)


def run_experiment(cfg: ExperimentConfig, *, charts: bool = True,
                   quiet: bool = False) -> ComparisonSummary:
    """Run the full roster, write artifacts into ``cfg.output_dir``.

    Runs fan out over a process pool capped by CROSSFIRE_THREADS; results are
    ordered deterministically before anything is written.
    """
    jobs = [(kind, seed) for kind in cfg.controllers for seed in cfg.seeds]
    workers = _worker_count(len(jobs))

    results: dict[tuple[str, int], RunResult] = {}
    if workers <= 1:
        for kind, seed in jobs:
            results[(kind, seed)] = _run_single(cfg.data, kind, seed)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {(kind, seed): pool.submit(_run_single, cfg.data, kind, seed)
                       for kind, seed in jobs}
            for key, future in futures.items():
                results[key] = future.result()

    digests: dict[int, str] = {}
    for (kind, seed), result in results.items():
        expected = digests.setdefault(seed, result.volume_digest)
        if result.volume_digest != expected:
            raise RuntimeError(
                f"volume stream for seed {seed} differs between controllers; "
                f"paired comparison is broken")

    totals = {key: results[key].total_average_delay for key in results}
    series = {
        kind: np.mean([results[(kind, s)].delay_series for s in cfg.seeds], axis=0)
        for kind in cfg.controllers
    }
    reduction: dict[tuple[str, int], float | None] = {}
    for kind in cfg.controllers:
        for seed in cfg.seeds:
            if "fixed" in cfg.controllers:
                base = totals[("fixed", seed)]
                reduction[(kind, seed)] = 100.0 * (base - totals[(kind, seed)]) / base
            else:
                reduction[(kind, seed)] = None

    summary = ComparisonSummary(
        controllers=cfg.controllers,
        seeds=cfg.seeds,
        totals=totals,
        series=series,
        reduction_vs_fixed=reduction,
        volume_digests=digests,
    )

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ordered = [results[(kind, seed)] for kind in cfg.controllers for seed in cfg.seeds]
    write_cycles_csv(out_dir / "cycles.csv", ordered)
    write_summary_csv(out_dir / "summary.csv", summary)
    if charts:
        emit_charts(summary, out_dir)
    if not quiet:
        print(format_summary_table(summary))
        print(f"artifacts written to {out_dir}")
    return summary


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def write_cycles_csv(path: Path, results: Sequence[RunResult]) -> None:
    """Per-cycle, per-intersection rows; LF endings, floats at 6 decimals."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CYCLES_HEADER)
        for result in results:
            controller = result.kinds[0]
            for record in result.records:
                for i in range(record.volumes.shape[0]):
                    writer.writerow((
                        record.cycle,
                        i,
                        int(record.volumes[i, 0]),
                        int(record.volumes[i, 1]),
                        _fmt(record.green_ns[i]),
                        _fmt(record.delays[i]),
                        _fmt(record.rewards[i]),
                        controller,
                        result.seed,
                    ))


def read_cycles_csv(path: Path) -> list[dict]:
    """Parse a cycles.csv back into typed rows (the round-trip oracle)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                "cycle": int(row["cycle"]),
                "intersection": int(row["intersection"]),
                "v_ns": int(row["v_ns"]),
                "v_we": int(row["v_we"]),
                "tg_ns": float(row["tg_ns"]),
                "delay_s": float(row["delay_s"]),
                "reward": float(row["reward"]),
                "controller": row["controller"],
                "seed": int(row["seed"]),
            })
    return rows


def write_summary_csv(path: Path, summary: ComparisonSummary) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for kind in summary.controllers:
            for seed in summary.seeds:
                pct = summary.reduction_vs_fixed[(kind, seed)]
                writer.writerow((
                    kind,
                    seed,
                    _fmt(summary.totals[(kind, seed)]),
                    _fmt(pct) if pct is not None else "",
                ))


def format_summary_table(summary: ComparisonSummary) -> str:
    lines = [f"{'controller':<12}{'mean delay (s)':>16}{'vs fixed':>12}"]
    for kind in summary.controllers:
        mean = summary.mean_total(kind)
        pcts = [summary.reduction_vs_fixed[(kind, s)] for s in summary.seeds]
        if pcts[0] is None:
            pct_text = "n/a"
        else:
            pct_text = f"{float(np.mean([p for p in pcts if p is not None])):+.1f}%"
        lines.append(f"{kind:<12}{mean:>16.3f}{pct_text:>12}")
    return "\n".join(lines)


def rolling_mean(values: Iterable[float], window: int) -> np.ndarray:
    """Trailing mean over ``window`` samples; shorter prefixes average what
    exists, so a constant series stays constant."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return arr.copy()
    sums = np.cumsum(arr)
    top = sums.copy()
    if arr.size > window:
        top[window:] -= sums[:-window]
    counts = np.minimum(np.arange(arr.size) + 1, window)
    return top / counts


# Fixed palette so series colors depend only on roster order.
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#17becf", "#7f7f7f")

SERIES_CHART = "delay_series.svg"
BARS_CHART = "delay_bars.svg"
ROLLING_WINDOW = 25


def emit_charts(summary: ComparisonSummary, out_dir: Path) -> list[Path]:
    """Write the per-cycle delay lines and the total-average bars as SVG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    paths = []

    fig, ax = plt.subplots(figsize=(9, 5))
    for i, kind in enumerate(summary.controllers):
        smooth = rolling_mean(summary.series[kind], ROLLING_WINDOW)
        ax.plot(np.arange(1, smooth.size + 1), smooth,
                color=_PALETTE[i % len(_PALETTE)], label=kind, linewidth=1.2)
    ax.set_xlabel("cycle")
    ax.set_ylabel(f"network delay (s, rolling mean w={ROLLING_WINDOW})")
    ax.set_title("Average delay per cycle")
    ax.legend()
    fig.tight_layout()
    path = out_dir / SERIES_CHART
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(7, 5))
    means = [summary.mean_total(kind) for kind in summary.controllers]
    colors = [_PALETTE[i % len(_PALETTE)] for i in range(len(summary.controllers))]
    ax.bar(summary.controllers, means, color=colors)
    ax.set_ylabel("total average delay (s)")
    ax.set_title("Total average delay by controller")
    for x, mean in enumerate(means):
        ax.text(x, mean, f"{mean:.1f}", ha="center", va="bottom")
    fig.tight_layout()
    path = out_dir / BARS_CHART
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    paths.append(path)
    return paths


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"--seeds: expected comma-separated integers, got {text!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossfire",
        description="Multi-agent traffic-signal control experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the controller comparison described by a config file")
    run.add_argument("config", help="path to the experiment config (JSON)")
    run.add_argument("--out", help="output directory (overrides config)")
    run.add_argument("--seeds", help="comma-separated seeds (overrides config)")
    run.add_argument("--horizon", type=int, help="number of cycles (overrides config)")
    run.add_argument("--controllers",
                     help="comma-separated roster, e.g. fixed,fuzzy,ql,fql,gfql")
    run.add_argument("--no-charts", action="store_true", help="skip chart emission")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(
            output_dir=args.out,
            seeds=_parse_seeds(args.seeds) if args.seeds else None,
            horizon=args.horizon,
            controllers=tuple(args.controllers.split(",")) if args.controllers else None,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        run_experiment(cfg, charts=not args.no_charts)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
