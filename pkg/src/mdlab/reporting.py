"""Report records, JSON-lines / CSV emission, and sweep figures.

JSON lines are the primary, append-only format; CSV is a lossless-numeric but
structurally lossy convenience export (metrics flattened into columns).
Floats are serialized with repr-level precision so a parse round-trip
reproduces every metric exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

SCHEMA_VERSION = "mdlab/1"


@dataclass(frozen=True)
class CheckReport:
    """One check run: parameters, metrics, gate, timing, and the seed used."""

    name: str
    params: dict
    metrics: dict
    tolerance: float
    passed: bool
    wall_time_s: float
    seed: int
    schema: str = SCHEMA_VERSION

    def to_mapping(self) -> dict:
        return {
            "schema": self.schema,
            "name": self.name,
            "params": dict(self.params),
            "seed": self.seed,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "wall_time_s": self.wall_time_s,
            "metrics": dict(self.metrics),
        }

    @staticmethod
    def from_mapping(data: dict) -> "CheckReport":
        return CheckReport(
            name=data["name"], params=data["params"], metrics=data["metrics"],
            tolerance=data["tolerance"], passed=data["passed"],
            wall_time_s=data["wall_time_s"], seed=data["seed"],
            schema=data.get("schema", SCHEMA_VERSION),
        )

    def summary_line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        worst = self.metrics.get("worst")
        extra = f" worst={worst:.3e}" if isinstance(worst, float) else ""
        pt = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"[{verdict}] {self.name} ({pt}) tol={self.tolerance:.1e}{extra}"


def write_jsonl(reports, path, append: bool = True):
    """Append reports as JSON lines; an empty list still writes the schema line."""
    path = Path(path)
    mode = "a" if append and path.exists() else "w"
    with open(path, mode, encoding="utf-8") as fh:
        if mode == "w":
            fh.write(json.dumps({"schema": SCHEMA_VERSION, "kind": "header"}) + "\n")
        for r in reports:
            fh.write(json.dumps(r.to_mapping(), sort_keys=False) + "\n")
    return path


def read_jsonl(path) -> list[CheckReport]:
    out = []
    with open(Path(path), "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            if data.get("kind") == "header":
                continue
            out.append(CheckReport.from_mapping(data))
    return out


def _flatten(report: CheckReport) -> dict:
    row = {"schema": report.schema, "name": report.name, "seed": report.seed,
           "tolerance": report.tolerance, "passed": report.passed,
           "wall_time_s": report.wall_time_s}
    for k, v in report.params.items():
        row[f"param.{k}"] = v
    for k, v in report.metrics.items():
        row[f"metric.{k}"] = v
    return row


def _format_cell(v):
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return v


def emit_report(reports, fmt: str, path):
    """Write reports in the named format ('json-lines' or 'csv')."""
    if fmt == "json-lines":
        return write_jsonl(reports, path, append=False)
    if fmt == "csv":
        return write_csv(reports, path)
    raise ValueError(f"unknown report format {fmt!r}; use 'json-lines' or 'csv'")


def write_csv(reports, path):
    """Flattened CSV export; float cells keep full repr precision."""
    path = Path(path)
    rows = [_flatten(r) for r in reports]
    columns = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns if columns else ["schema"])
        if not columns:
            return path
        for row in rows:
            writer.writerow([_format_cell(row.get(c, "")) for c in columns])
    return path


def read_csv_metrics(path) -> list[dict]:
    """Parse a CSV export back into typed rows (floats, bools, ints)."""
    out = []
    with open(Path(path), "r", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                if v in ("True", "False"):
                    parsed[k] = v == "True"
                    continue
                try:
                    parsed[k] = int(v)
                except (TypeError, ValueError):
                    try:
                        parsed[k] = float(v)
                    except (TypeError, ValueError):
                        parsed[k] = v
            out.append(parsed)
    return out


def render_figures(reports, outdir) -> list[Path]:
    """Render metric-vs-parameter figures for swept runs, one PNG per series.

    Produces, for every check that appears with more than one value of a
    swept parameter, a log-scale plot of the headline residual against that
    parameter, plus an overall worst-residual bar chart.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    by_name: dict[str, list[CheckReport]] = {}
    for r in reports:
        by_name.setdefault(r.name, []).append(r)

    for name, group in sorted(by_name.items()):
        for axis in ("N", "beta", "halfwidth"):
            pts = [(r.params.get(axis), r.metrics.get("worst"))
                   for r in group
                   if isinstance(r.params.get(axis), (int, float))
                   and isinstance(r.metrics.get("worst"), float)]
            values = sorted({p for p, _ in pts})
            if len(values) < 2:
                continue
            xs, ys = zip(*sorted(pts))
            fig, ax = plt.subplots(figsize=(5.0, 3.2))
            ax.semilogy(xs, [max(y, 1e-18) for y in ys], "o-")
            ax.set_xlabel(axis)
            ax.set_ylabel("worst residual")
            ax.set_title(name)
            ax.grid(True, which="both", alpha=0.3)
            fig.tight_layout()
            target = outdir / f"{name}_{axis}.png"
            fig.savefig(target, dpi=150)
            plt.close(fig)
            written.append(target)

    if by_name:
        names = sorted(by_name)
        worst = [max((r.metrics.get("worst", 0.0) or 0.0) for r in by_name[n])
                 for n in names]
        fig, ax = plt.subplots(figsize=(7.0, 3.6))
        ax.bar(range(len(names)), [max(w, 1e-18) for w in worst])
        ax.set_yscale("log")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
        ax.set_ylabel("worst residual")
        fig.tight_layout()
        target = outdir / "summary_worst.png"
        fig.savefig(target, dpi=150)
        plt.close(fig)
        written.append(target)
    return written
