"""Report rendering: delimited conformance/bench output plus matplotlib
figures written alongside it."""

import math
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["write_records", "render_conformance_figures", "render_bench_figure"]

HEADER = "family\tcase_id\tverdict\tslack\tdetail"


def write_records(records, stream):
    stream.write(HEADER + "\n")
    for r in records:
        stream.write(r.line() + "\n")


def render_conformance_figures(records, outdir):
    """Per-family verdict counts and a slack histogram, saved as PNGs."""
    os.makedirs(outdir, exist_ok=True)
    counts = defaultdict(lambda: [0, 0, 0])
    for r in records:
        idx = {"pass": 0, "fail": 1, "info": 2}[r.verdict]
        counts[r.family][idx] += 1
    fams = sorted(counts)
    fig, ax = plt.subplots(figsize=(max(6, len(fams)), 4))
    xs = range(len(fams))
    ax.bar(xs, [counts[f][0] for f in fams], label="pass", color="#2a9d2a")
    ax.bar(xs, [counts[f][1] for f in fams],
           bottom=[counts[f][0] for f in fams], label="fail", color="#c43232")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(fams, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("cases")
    ax.set_title("conformance verdicts by family")
    ax.legend()
    fig.tight_layout()
    verdicts_path = os.path.join(outdir, "conformance_verdicts.png")
    fig.savefig(verdicts_path, dpi=120)
    plt.close(fig)

    slacks = [r.slack for r in records
              if r.verdict == "pass" and math.isfinite(r.slack) and r.slack > 0]
    fig, ax = plt.subplots(figsize=(6, 4))
    if slacks:
        ax.hist(slacks, bins=40)
    ax.set_xlabel("error / bound")
    ax.set_ylabel("cases")
    ax.set_title("slack distribution (passing cases)")
    fig.tight_layout()
    slack_path = os.path.join(outdir, "conformance_slack.png")
    fig.savefig(slack_path, dpi=120)
    plt.close(fig)
    return [verdicts_path, slack_path]


def render_bench_figure(times_s, nnz, label, path):
    """Per-repeat wall times with the median marked."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(times_s) + 1), [t * 1e3 for t in times_s], "o-")
    med = sorted(times_s)[len(times_s) // 2] * 1e3
    ax.axhline(med, color="gray", linestyle="--", label=f"median {med:.3f} ms")
    ax.set_xlabel("repeat")
    ax.set_ylabel("wall time [ms]")
    ax.set_title(f"{label} ({nnz} stored entries)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
