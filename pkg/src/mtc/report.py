"""Experiment drivers that write a CSV table and a matching figure.

``abort_rates`` compares how often MT and GT workloads abort in the
simulator; ``scaling`` times the checkers on growing fault-free histories.
Figures are rendered with the Agg backend and saved without timestamps so
that reruns of deterministic experiments give identical files.
"""

from __future__ import annotations

import csv
import os
import time
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .checkers import check  # noqa: E402
from .history import History, parse_history, serialize_history  # noqa: E402
from .store import Isolation, StoreConfig, abort_stats, execute  # noqa: E402
from .workload import Distribution, WorkloadConfig, generate  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.6),
    "figure.dpi": 100,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
    "svg.hashsalt": "mtc",
}


def _save(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def mean_abort_rate(
    mode: str,
    *,
    sessions: int,
    objects: int,
    distribution: Distribution,
    isolation: Isolation = Isolation.SNAPSHOT,
    txns: int = 400,
    gt_ops: int = 20,
    seeds: Iterable[int] = range(20),
) -> float:
    rates = []
    for seed in seeds:
        wl = WorkloadConfig(
            sessions=sessions,
            txns=txns,
            objects=objects,
            distribution=distribution,
            mode=mode,
            gt_ops=gt_ops,
            seed=seed,
        )
        h = execute(generate(wl), StoreConfig(isolation=isolation, scheduler_seed=seed))
        rates.append(abort_stats(h)["rate"])
    return sum(rates) / len(rates)


def abort_rates(
    out_dir: str,
    *,
    sessions: Sequence[int] = (2, 4, 8, 16),
    objects: int = 100,
    distribution: Distribution = Distribution("zipfian"),
    txns: int = 400,
    gt_ops: int = 20,
    seeds: int = 20,
    seed: int = 0,
) -> list[dict]:
    """Mean abort rate of MT vs GT workloads per session count and isolation."""
    rows = []
    for iso in Isolation:
        for s in sessions:
            row = {"isolation": iso.value, "sessions": s}
            for mode in ("mt", "gt"):
                row[mode] = mean_abort_rate(
                    mode,
                    sessions=s,
                    objects=objects,
                    distribution=distribution,
                    isolation=iso,
                    txns=txns,
                    gt_ops=gt_ops,
                    seeds=range(seed, seed + seeds),
                )
            rows.append(row)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "abort_rates.csv"), "w", newline="") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(["isolation", "sessions", "mt_abort_rate", "gt_abort_rate"])
        for row in rows:
            wr.writerow([row["isolation"], row["sessions"], f"{row['mt']:.6f}", f"{row['gt']:.6f}"])

    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, sharey=True)
        for ax, iso in zip(axes, Isolation):
            sub = [r for r in rows if r["isolation"] == iso.value]
            xs = [r["sessions"] for r in sub]
            ax.plot(xs, [r["mt"] for r in sub], "o-", label="MT")
            ax.plot(xs, [r["gt"] for r in sub], "s--", label=f"GT ({gt_ops} ops)")
            ax.set_title(iso.name.lower())
            ax.set_xlabel("sessions")
            ax.set_xscale("log", base=2)
        axes[0].set_ylabel("abort rate")
        axes[0].set_ylim(0, 1)
        axes[0].legend()
        _save(fig, os.path.join(out_dir, "abort_rates.png"))
    return rows


def fault_free_history(n: int, seed: int = 0, sessions: int = 16, objects: int = 1000) -> History:
    wl = WorkloadConfig(sessions=sessions, txns=n, objects=objects, seed=seed)
    return execute(generate(wl), StoreConfig(Isolation.SNAPSHOT, scheduler_seed=seed))


def time_check(data: bytes, level: str, repeats: int = 3) -> float:
    """Best-of wall time to parse and check one serialized history."""
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        check(parse_history(data), level)
        best = min(best, time.perf_counter() - t0)
    return best


def scaling(
    out_dir: str,
    *,
    sizes: Sequence[int] = (12_500, 25_000, 50_000, 100_000),
    sser_sizes: Sequence[int] = (1_000, 2_000, 4_000),
    seed: int = 0,
    repeats: int = 3,
) -> list[dict]:
    """Checker wall time against history size. Timings vary between runs."""
    rows = []
    for levels, ns in ((("ser", "si"), sizes), (("sser",), sser_sizes)):
        for n in ns:
            data = serialize_history(fault_free_history(n, seed)).encode()
            for level in levels:
                rows.append({"level": level, "txns": n, "seconds": time_check(data, level, repeats)})
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "scaling.csv"), "w", newline="") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(["level", "txns", "seconds"])
        for row in rows:
            wr.writerow([row["level"], row["txns"], f"{row['seconds']:.4f}"])

    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for level, marker in (("ser", "o-"), ("si", "s-"), ("sser", "^--")):
            sub = [r for r in rows if r["level"] == level]
            ax.plot([r["txns"] for r in sub], [r["seconds"] for r in sub], marker, label=level)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("committed transactions")
        ax.set_ylabel("check time (s)")
        ax.legend()
        _save(fig, os.path.join(out_dir, "scaling.png"))
    return rows
