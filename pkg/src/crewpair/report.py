"""CSV and figure output for paired runs.

File layout in the output directory:

    trace_with.csv / trace_without.csv   one row per LP or IP solve
    summary.csv                          per-loop LP/IP costs and z for both arms
    timing.csv                           wall-clock seconds per stage
    curves.csv                           cost against cumulative iteration, both arms
    curves.png                           the same curves, rendered
    audit_with.jsonl                     one combiner record per learning-iteration
    vgae_with.csv                        per-epoch loss and held-out ROC

The CSV headers below are a stable contract for downstream plotting. Every
file except timing.csv is identical across reruns with the same config.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .orchestrator import RunTrace  # noqa: E402

TRACE_HEADER = ["iteration", "phase", "loop", "cost", "columns_added", "learnt", "roc"]
SUMMARY_HEADER = ["row", "loop", "stage", "cost_without", "cost_with", "delta_cost",
                  "z_without", "z_with", "delta_z"]
TIMING_HEADER = ["run", "stage", "loop", "seconds"]
CURVES_HEADER = ["run", "step", "iteration", "phase", "loop", "cost"]
VGAE_HEADER = ["iteration", "epoch", "loss", "roc"]

ARMS = ("without", "with")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return repr(round(x, 6))
    return str(x)


def _diff(a, b):
    return None if a is None or b is None else b - a


def write_trace(trace: RunTrace, path: str | Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for r in trace.rows:
            w.writerow([_fmt(v) for v in (r.iteration, r.phase, r.loop, r.cost,
                                          r.columns_added, r.learnt, r.roc)])


def read_trace(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summary_rows(without: RunTrace | None, with_: RunTrace | None) -> list[list]:
    """The start cover, per-loop LP and IP rows, then the final cost and total z.

    The delta columns are with minus without; they are blank when either
    arm is missing (a single-arm run, or one arm ran fewer loops).
    """
    runs = {"without": without, "with": with_}
    n_loops = max((len(t.loops) for t in runs.values() if t is not None), default=0)
    rows = []

    def loop_of(arm, k):
        t = runs[arm]
        return t.loops[k] if t is not None and k < len(t.loops) else None

    for k in range(n_loops):
        a, b = loop_of("without", k), loop_of("with", k)
        name = "main" if k == 0 else f"reopt{k}"
        lp = [x.lp_cost if x else None for x in (a, b)]
        z = [x.lp_z if x else None for x in (a, b)]
        rows.append([f"{name}-lp", k, "lp", lp[0], lp[1], _diff(*lp), z[0], z[1], _diff(*z)])
        ip = [x.ip_cost if x else None for x in (a, b)]
        rows.append([f"{name}-ip", k, "ip", ip[0], ip[1], _diff(*ip), None, None, None])

    final = [t.final_cost if t else None for t in (without, with_)]
    tz = [t.total_z if t else None for t in (without, with_)]
    rows.append(["final", None, "final", final[0], final[1], _diff(*final), tz[0], tz[1], _diff(*tz)])
    init = [t.initial_cost if t else None for t in (without, with_)]
    rows.insert(0, ["initial", None, "init", init[0], init[1], _diff(*init), 1 if without else None,
                    1 if with_ else None, 0 if without and with_ else None])
    return rows


def write_summary(without: RunTrace | None, with_: RunTrace | None, path: str | Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        for row in summary_rows(without, with_):
            w.writerow([_fmt(v) for v in row])


def write_timing(traces: dict[str, RunTrace], path: str | Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TIMING_HEADER)
        for name in ARMS:
            t = traces.get(name)
            if t is None:
                continue
            w.writerow([name, "init", "", _fmt(t.initial_seconds)])
            for l in t.loops:
                w.writerow([name, "cg", l.loop, _fmt(l.cg_seconds)])
                w.writerow([name, "ip", l.loop, _fmt(l.ip_seconds)])
            w.writerow([name, "total", "", _fmt(t.wall_seconds)])


def curve_points(trace: RunTrace) -> list[tuple[int, int, str, int, float]]:
    """(step, iteration, phase, loop, cost) with step counting every LP/IP solve from zero."""
    return [(k, r.iteration, r.phase, r.loop, r.cost) for k, r in enumerate(trace.rows)]


def write_curves(traces: dict[str, RunTrace], path: str | Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVES_HEADER)
        for name in ARMS:
            if traces.get(name) is None:
                continue
            for point in curve_points(traces[name]):
                w.writerow([name] + [_fmt(v) for v in point])


def plot_curves(traces: dict[str, RunTrace], path: str | Path):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    styles = {"without": dict(color="0.4", ls="--"), "with": dict(color="C3", ls="-")}
    for name in ARMS:
        trace = traces.get(name)
        if trace is None:
            continue
        # the first point is the start cover, usually far above the rest
        pts = curve_points(trace)[1:]
        ax.plot([p[0] for p in pts], [p[4] for p in pts], label=f"{name} learning", **styles[name])
        learnt = [(k, r.cost) for k, r in enumerate(trace.rows) if r.learnt]
        if learnt:
            ax.scatter(*zip(*learnt), marker="o", s=18, color=styles[name]["color"], zorder=3)
    ax.set_xlabel("iteration")
    ax.set_ylabel("cost")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_learning_logs(trace: RunTrace, outdir: Path, suffix: str):
    with open(outdir / f"audit_{suffix}.jsonl", "w") as fh:
        for record in trace.audits:
            fh.write(json.dumps(record) + "\n")
    with open(outdir / f"vgae_{suffix}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(VGAE_HEADER)
        for row in trace.vgae_log:
            w.writerow([_fmt(v) for v in row])


def write_report(traces: dict[str, RunTrace], outdir: str | Path, figures: bool = True) -> list[Path]:
    """Write every output file for ``traces`` (keys "with"/"without"); returns the paths written."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in ARMS:
        if traces.get(name) is not None:
            p = outdir / f"trace_{name}.csv"
            write_trace(traces[name], p)
            written.append(p)
    if traces.get("with") is not None:
        write_learning_logs(traces["with"], outdir, "with")
        written += [outdir / "audit_with.jsonl", outdir / "vgae_with.csv"]
    write_summary(traces.get("without"), traces.get("with"), outdir / "summary.csv")
    write_curves(traces, outdir / "curves.csv")
    write_timing(traces, outdir / "timing.csv")
    written += [outdir / "summary.csv", outdir / "curves.csv", outdir / "timing.csv"]
    if figures:
        plot_curves(traces, outdir / "curves.png")
        written.append(outdir / "curves.png")
    return written
