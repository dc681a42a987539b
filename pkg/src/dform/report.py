"""Delimited output and the report directory (CSV tables next to figures)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from dform import plotting


def write_csv(rows: list, path, fields: list | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fields = fields or (list(rows[0].keys()) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(r.get(k)) for k in fields})
    return path


def _cell(v):
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(v, default=str, sort_keys=True)
    return v


def check_rows(reports) -> list:
    return [
        {
            "check": r.check_id,
            "name": r.details.get("name", ""),
            "form": r.digest,
            "passed": r.passed,
            "skipped": r.skipped,
            "margin": r.margin,
            "tolerance": r.tolerance,
        }
        for r in reports
    ]


def write_verify_report(reports, out_dir) -> list:
    out = Path(out_dir)
    files = [write_csv(check_rows(reports), out / "checks.csv")]
    files.append(plotting.plot_margins(reports, out / "margins.png"))
    return [str(f) for f in files]


def write_experiment_report(exp, out_dir, stem: str = "asymptotics", title: str = "") -> list:
    out = Path(out_dir)
    files = [
        write_csv(exp.rows, out / (stem + ".csv"), ["m", "count", "main", "residual", "ratio", "stable"]),
        plotting.plot_asymptotics(exp, out / (stem + ".png"), title=title),
    ]
    return [str(f) for f in files]


def write_volume_report(F, estimates: list, out_dir, stem: str = "volume") -> list:
    out = Path(out_dir)
    rows = [{"method": e.method, "value": e.value, "abs_error": e.abs_error, "infinite": e.infinite,
             "converged": e.converged, "samples_or_nodes": e.samples_or_nodes} for e in estimates]
    files = [write_csv(rows, out / (stem + ".csv"))]
    if F.n == 2:
        files.append(plotting.plot_sphere_profile(F, out / (stem + "_profile.png")))
    return [str(f) for f in files]
