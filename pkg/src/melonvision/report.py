"""Result aggregation: run manifests and Table-1-style metric tables.

JSON outputs carry full precision; CSV is presentation-rounded (one
decimal for PSNR, two for SSIM, two otherwise, configurable). Non-finite
floats are serialized as the strings "inf", "-inf", "nan" in both formats
so files stay portable. A run directory holds exactly one run and is
refused if it already contains files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .stats import GroupStats, TukeyOutcome

DEFAULT_DECIMALS = {"psnr": 1, "ssim": 2}
_FALLBACK_DECIMALS = 2

BAND_LABELS = {0.001: "***", 0.01: "**", 0.05: "*", None: "ns"}


def encode_float(v: float):
    """JSON/CSV-safe float: non-finite values become strings."""
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def decode_float(v) -> float:
    if isinstance(v, str):
        return float(v)
    return float(v)


def sha256_file(path: str | os.PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class RunManifest:
    run_id: str
    timestamp: str
    tool_version: str
    command: str
    input_digests: dict[str, str]
    status: str = "success"
    config: dict = field(default_factory=dict)
    failures: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "timestamp": self.timestamp,
            "tool_version": self.tool_version,
            "command": self.command,
            "input_digests": dict(sorted(self.input_digests.items())),
            "status": self.status,
            "config": self.config,
            "failures": list(self.failures),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(
            run_id=d["run_id"],
            timestamp=d["timestamp"],
            tool_version=d["tool_version"],
            command=d["command"],
            input_digests=dict(d["input_digests"]),
            status=d["status"],
            config=dict(d["config"]),
            failures=tuple(d["failures"]),
        )


def digest_inputs(paths: list[str | os.PathLike]) -> dict[str, str]:
    """sha256 of every input file; directories are hashed file by file."""
    digests: dict[str, str] = {}
    for p in paths:
        p = Path(p)
        if p.is_dir():
            for child in sorted(p.rglob("*")):
                if child.is_file():
                    digests[str(child)] = sha256_file(child)
        elif p.is_file():
            digests[str(p)] = sha256_file(p)
    return digests


def prepare_run_dir(out_dir: str | os.PathLike, run_id: str) -> Path:
    """Create <out_dir>/<run_id>; refuse a directory that already has files."""
    run_dir = Path(out_dir) / run_id
    if run_dir.exists() and any(run_dir.iterdir()):
        raise FileExistsError(
            f"run directory {run_dir} already exists and is not empty; pick a new run id"
        )
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def write_json(payload, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(manifest: RunManifest, run_dir: str | os.PathLike) -> Path:
    path = Path(run_dir) / "manifest.json"
    write_json(manifest.to_dict(), path)
    return path


@dataclass(frozen=True)
class MetricTable:
    """Rows of metric x group cells plus one significance band per metric.

    Cells are (mean, std, letter); std is NaN for n < 2 and the letter is
    empty when no comparison was possible (single group).
    """

    group_names: tuple[str, ...]
    rows: dict[str, dict[str, tuple[float, float, str]]]
    significance_row: dict[str, str]
    letters_alpha: float | None = 0.05

    def __post_init__(self):
        for metric, cells in self.rows.items():
            for group in cells:
                if group not in self.group_names:
                    raise ValueError(f"row {metric!r} cites unknown group {group!r}")

    def to_dict(self) -> dict:
        return {
            "group_names": list(self.group_names),
            "rows": {
                metric: {
                    group: {
                        "mean": encode_float(mean),
                        "std": encode_float(std),
                        "letter": letter,
                    }
                    for group, (mean, std, letter) in cells.items()
                }
                for metric, cells in self.rows.items()
            },
            "significance": dict(self.significance_row),
            "letters_alpha": self.letters_alpha,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricTable":
        rows = {
            metric: {
                group: (
                    decode_float(cell["mean"]),
                    decode_float(cell["std"]),
                    cell["letter"],
                )
                for group, cell in cells.items()
            }
            for metric, cells in d["rows"].items()
        }
        return cls(
            group_names=tuple(d["group_names"]),
            rows=rows,
            significance_row=dict(d["significance"]),
            letters_alpha=d["letters_alpha"],
        )


def table_band_label(outcome: TukeyOutcome) -> str:
    """Band every pairwise comparison clears, as an asterisk label."""
    worst = 0.0
    for pair in outcome.pairwise:
        if pair.p_below is None:
            return BAND_LABELS[None]
        worst = max(worst, pair.p_below)
    return BAND_LABELS[worst]


def build_metric_table(
    stats_by_metric: dict[str, dict[str, GroupStats]],
    outcomes: dict[str, TukeyOutcome | None],
    group_names: list[str],
) -> MetricTable:
    """Assemble the table; every metric must come with its Tukey outcome.

    An explicit None outcome marks a metric with a single group: its cells
    carry no letter and its significance label is "n/a".
    """
    rows: dict[str, dict[str, tuple[float, float, str]]] = {}
    significance: dict[str, str] = {}
    letters_alpha = None
    for metric, per_group in stats_by_metric.items():
        if metric not in outcomes:
            raise ValueError(f"no Tukey outcome supplied for metric {metric!r}")
        outcome = outcomes[metric]
        cells = {}
        for group in group_names:
            if group not in per_group:
                raise ValueError(f"metric {metric!r} missing group {group!r}")
            gs = per_group[group]
            letter = ""
            if outcome is not None:
                if group not in outcome.letters:
                    raise ValueError(f"outcome for {metric!r} missing letters for {group!r}")
                letter = outcome.letters[group]
            cells[group] = (gs.mean, gs.sample_std, letter)
        rows[metric] = cells
        if outcome is None:
            significance[metric] = "n/a"
        else:
            significance[metric] = table_band_label(outcome)
            letters_alpha = outcome.letters_alpha
    extra = set(outcomes) - set(stats_by_metric)
    if extra:
        raise ValueError(f"outcomes supplied for unknown metrics {sorted(extra)}")
    return MetricTable(
        group_names=tuple(group_names),
        rows=rows,
        significance_row=significance,
        letters_alpha=letters_alpha,
    )


def _decimals_for(metric: str, decimals: dict[str, int] | None) -> int:
    table = {k.lower(): v for k, v in (decimals or DEFAULT_DECIMALS).items()}
    return table.get(metric.lower(), _FALLBACK_DECIMALS)


def metric_table_csv_text(table: MetricTable, decimals: dict[str, int] | None = None) -> str:
    """Presentation CSV: cells are "mean letter", e.g. "28.8 a"."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", *table.group_names, "significance"])
    for metric in table.rows:
        nd = _decimals_for(metric, decimals)
        cells = []
        for group in table.group_names:
            mean, _, letter = table.rows[metric][group]
            text = "inf" if math.isinf(mean) else f"{mean:.{nd}f}"
            cells.append(f"{text} {letter}".strip())
        writer.writerow([metric, *cells, table.significance_row[metric]])
    return buf.getvalue()


def write_metric_table(
    table: MetricTable,
    run_dir: str | os.PathLike,
    decimals: dict[str, int] | None = None,
) -> tuple[Path, Path]:
    run_dir = Path(run_dir)
    csv_path = run_dir / "metrics.csv"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(metric_table_csv_text(table, decimals))
    json_path = run_dir / "metrics.json"
    write_json(table.to_dict(), json_path)
    return csv_path, json_path
