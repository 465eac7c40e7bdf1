"""Result persistence: raw tables, record JSON, run manifest, plot data.

Raw tables serialise with shortest-roundtrip float repr in construction
order, so identical runs produce byte-identical files; wall-clock data lives
only in the manifest, which is written atomically at the end of the run.
"""

from __future__ import annotations

import json
import os
from datetime import datetime, timezone
from pathlib import Path

from .. import __version__
from ..experiments.base import ResultRecord


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def rows_table(record: ResultRecord):
    """Union of row keys in first-appearance order plus stringified rows."""
    fields: list = []
    for row in record.rows:
        for key in row:
            if key not in fields:
                fields.append(key)
    table = [[_fmt(row.get(f, "")) for f in fields] for row in record.rows]
    return fields, table


def write_raw_csv(path: Path, record: ResultRecord) -> None:
    fields, table = rows_table(record)
    lines = [",".join(fields)]
    lines += [",".join(cells) for cells in table]
    atomic_write(path, "\n".join(lines) + "\n")


def write_raw_json(path: Path, record: ResultRecord) -> None:
    fields, table = rows_table(record)
    payload = {"fields": fields, "rows": table}
    atomic_write(path, json.dumps(payload, indent=2) + "\n")


def write_result(path: Path, record: ResultRecord) -> None:
    atomic_write(path, record.to_json() + "\n")


def write_plot_data(outdir: Path, record: ResultRecord) -> list:
    """Two-column gnuplot-compatible series plus a plotting script stub."""
    written = []
    for name, points in sorted(record.series.items()):
        path = outdir / f"plot_{name}.dat"
        lines = [f"# {record.experiment}: {name}", "# x y"]
        lines += [f"{_fmt(float(x))} {_fmt(float(y))}" for x, y in points]
        atomic_write(path, "\n".join(lines) + "\n")
        written.append(path)
    if written:
        stub = ["# gnuplot stub; bring your own renderer",
                "set logscale xy"] + [
            f"plot '{p.name}' using 1:2 with linespoints title '{p.stem[5:]}'"
            for p in written]
        script = outdir / "plot.gp"
        atomic_write(script, "\n".join(stub) + "\n")
        written.append(script)
    return written


def write_manifest(outdir: Path, record: ResultRecord | None, *, config_text: str,
                   digest: str, seed: int, started: datetime, outputs: list,
                   partial: bool = False, error: str = "") -> Path:
    atomic_write(outdir / "config.txt", config_text)
    manifest = {
        "config_digest": digest,
        "config_copy": "config.txt",
        "master_seed": seed,
        "tool_version": __version__,
        "started_at": started.isoformat(),
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "outputs": [str(p.name) for p in outputs],
        "partial": partial,
        "error": error,
        "summary": {
            "experiment": record.experiment if record else "",
            "passed": record.passed if record else False,
            "hard_failures": record.hard_failures if record else [],
        },
    }
    path = outdir / "manifest.json"
    atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def write_all(outdir: Path, record: ResultRecord, *, config_text: str, digest: str,
              seed: int, started: datetime, table_format: str = "csv") -> list:
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    raw = outdir / ("raw.csv" if table_format == "csv" else "raw.json")
    if table_format == "csv":
        write_raw_csv(raw, record)
    else:
        write_raw_json(raw, record)
    outputs.append(raw)
    result = outdir / "result.json"
    write_result(result, record)
    outputs.append(result)
    outputs += write_plot_data(outdir, record)
    write_manifest(outdir, record, config_text=config_text, digest=digest,
                   seed=seed, started=started, outputs=outputs)
    return outputs
