"""CSV and SVG emission for experiment results."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
# Fixed salt for element ids; otherwise every SVG differs between runs.
matplotlib.rcParams["svg.hashsalt"] = "emql"
import matplotlib.pyplot as plt  # noqa: E402

from .runner import EpisodeLog, ExperimentResult  # noqa: E402

EPISODE_HEADER = ["iteration", "episode", "reward", "steps", "seed"]
SUMMARY_HEADER = ["episode", "median", "q_low", "q_high"]


def _out_dir(path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc}") from exc
    return path


def write_episodes(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EPISODE_HEADER)
        for r in rows:
            w.writerow([r.iteration, r.episode, repr(float(r.total_reward)), r.steps, r.seed])


def read_episodes(path) -> list[EpisodeLog]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            EpisodeLog(int(r["iteration"]), int(r["episode"]), float(r["reward"]), int(r["steps"]), int(r["seed"]))
            for r in reader
        ]


def write_summary(result: ExperimentResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        for e in range(result.median.size):
            w.writerow([e, repr(float(result.median[e])), repr(float(result.q_low[e])), repr(float(result.q_high[e]))])


def plot_results(results: dict[str, ExperimentResult], path, title: str = "") -> None:
    """Median moving-average reward per agent with the quantile band shaded."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, res in results.items():
        x = range(1, res.median.size + 1)
        (line,) = ax.plot(x, res.median, label=label.upper(), linewidth=1.2)
        ax.fill_between(x, res.q_low, res.q_high, color=line.get_color(), alpha=0.2, linewidth=0)
    ax.set_xlabel("episode")
    ax.set_ylabel(f"reward, {next(iter(results.values())).config.window}-episode moving average")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    # Fixed metadata keeps the SVG byte-identical across runs.
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_outputs(result: ExperimentResult, out_dir, label: str | None = None) -> dict[str, Path]:
    if not result.rows:
        raise ValueError("no episodes to write")
    out = _out_dir(out_dir)
    label = label or result.config.agent
    paths = {
        "episodes": out / "episodes.csv",
        "summary": out / "summary.csv",
        "plot": out / "reward.svg",
    }
    write_episodes(result.rows, paths["episodes"])
    write_summary(result, paths["summary"])
    cfg = result.config
    plot_results({label: result}, paths["plot"], f"{cfg.env}, {label}, delay {cfg.delay}")
    return paths


def emit_comparison(results: dict[str, ExperimentResult], out_dir) -> dict[str, Path]:
    """One sub-directory of CSVs per agent plus a shared comparison plot."""
    out = _out_dir(out_dir)
    paths = {}
    for kind, res in results.items():
        for name, p in emit_outputs(res, out / kind, kind).items():
            paths[f"{kind}/{name}"] = p
    cfg = next(iter(results.values())).config
    paths["plot"] = out / "comparison.svg"
    plot_results(results, paths["plot"], f"{cfg.env}, delay {cfg.delay}")
    return paths
