"""Tables and figures for bench results."""

from __future__ import annotations

import csv
import json
import os
import statistics

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from autopar.bench import CUTOFF, SPLIT, BenchResult  # noqa: E402

AVERAGE = "average"


def pivot(records, column_key, value="speedup"):
    """{program: {column: value}} plus the list of columns in first-seen order."""
    table, columns = {}, []
    for r in records:
        col = column_key(r)
        if col not in columns:
            columns.append(col)
        table.setdefault(r["program"], {})[col] = r[value]
    return table, columns


def with_average(table, columns):
    rows = dict(table)
    rows[AVERAGE] = {
        c: statistics.fmean(row[c] for row in table.values() if c in row)
        for c in columns if any(c in row for row in table.values())
    }
    return rows


def cutoff_table(result: BenchResult, workers):
    recs = [r for r in result.cells(CUTOFF) if r["workers"] == workers]
    table, cols = pivot(recs, lambda r: r["decider"])
    return with_average(table, cols), cols


def split_table(result: BenchResult):
    table, cols = pivot(result.cells(SPLIT), lambda r: r["split"])
    return with_average(table, cols), cols


def format_table(rows, columns, title=""):
    head = ["program"] + list(columns)
    body = [[name] + [_fmt(row.get(c)) for c in columns] for name, row in rows.items()]
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    lines = [title] if title else []
    lines.append("  ".join(h.ljust(w) for h, w in zip(head, widths)))
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in body]
    return "\n".join(lines)


def _fmt(v):
    return "-" if v is None else f"{v:.2f}"


def write_csv(path, rows, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["program"] + list(columns))
        for name, row in rows.items():
            w.writerow([name] + ["" if row.get(c) is None else f"{row[c]:.4f}" for c in columns])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = {r[0]: {c: (float(v) if v else None) for c, v in zip(header[1:], r[1:])}
                for r in reader}
    return rows, header[1:]


def bar_chart(path, rows, columns, title, ylabel="speedup"):
    names = list(rows)
    n = max(len(columns), 1)
    width = 0.8 / n
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(names) + 2), 4))
    for i, col in enumerate(columns):
        xs = [k + (i - (n - 1) / 2) * width for k in range(len(names))]
        ax.bar(xs, [rows[p].get(col) or 0.0 for p in names], width, label=col)
    ax.axhline(1.0, color="black", linewidth=0.8)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize="small", ncol=2)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def records_document(result: BenchResult) -> dict:
    spec = result.spec
    return {
        "spec": {
            "programs": [{"name": p.name, "args": list(p.args)} for p in spec.programs],
            "workers": list(spec.workers),
            "deciders": list(spec.deciders),
            "splits": [list(s) for s in spec.splits],
            "split": list(spec.split),
            "reps": spec.reps,
            "timeout": spec.timeout,
            "steal": spec.steal,
            "seed": spec.seed,
            "threshold": spec.threshold,
        },
        "baselines": result.baselines,
        "records": result.records,
    }


def write_report(result: BenchResult, out_dir) -> dict:
    """Write tables (CSV and text), records (JSON) and figures. Returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {"records": os.path.join(out_dir, "records.json")}
    with open(paths["records"], "w", encoding="utf-8") as fh:
        json.dump(records_document(result), fh, indent=2)
    text = []
    for workers in result.spec.workers:
        rows, cols = cutoff_table(result, workers)
        if not cols:
            continue
        stem = f"cutoff_w{workers}"
        paths[stem + ".csv"] = os.path.join(out_dir, stem + ".csv")
        paths[stem + ".png"] = os.path.join(out_dir, stem + ".png")
        write_csv(paths[stem + ".csv"], rows, cols)
        title = f"Speedup per cut-off approach, {workers} worker(s)"
        bar_chart(paths[stem + ".png"], rows, cols, title)
        text.append(format_table(rows, cols, title))
    rows, cols = split_table(result)
    if cols:
        paths["split.csv"] = os.path.join(out_dir, "split.csv")
        paths["split.png"] = os.path.join(out_dir, "split.png")
        write_csv(paths["split.csv"], rows, cols)
        title = f"Binary vs lazy splitting, {max(result.spec.workers)} worker(s)"
        bar_chart(paths["split.png"], rows, cols, title)
        text.append(format_table(rows, cols, title))
    paths["summary.txt"] = os.path.join(out_dir, "summary.txt")
    with open(paths["summary.txt"], "w", encoding="utf-8") as fh:
        fh.write("\n\n".join(text) + "\n")
    return paths
