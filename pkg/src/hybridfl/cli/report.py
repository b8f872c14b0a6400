"""Aggregate experiment CSVs into a mean/std summary and mode comparison."""

from __future__ import annotations

import csv
import json
import math
import statistics
from pathlib import Path

from hybridfl.cli.experiment import CSV_HEADER


class SchemaMismatchError(ValueError):
    """CSV header does not match the fixed experiment schema."""


GROUP_KEYS = ("algorithm", "mode", "dataset", "n_parties", "trust_t",
              "epsilon", "sigma")
SCORE_KEYS = ("micro_f1", "macro_f1", "accuracy")


def read_rows(paths) -> list[dict]:
    rows = []
    for path in paths:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != CSV_HEADER:
                raise SchemaMismatchError(
                    f"{path}: header {reader.fieldnames} does not match the "
                    f"experiment schema"
                )
            rows.extend(reader)
    return rows


def _mean_std(values):
    clean = [v for v in values if not math.isnan(v)]
    if not clean:
        return math.nan, math.nan
    mean = statistics.fmean(clean)
    std = statistics.stdev(clean) if len(clean) > 1 else 0.0
    return mean, std


def summarize(rows: list[dict]) -> dict:
    """Per-grid-point mean +/- std across seeds, plus a mode comparison."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = tuple(row[k] for k in GROUP_KEYS)
        groups.setdefault(key, []).append(row)

    summary = []
    for key, members in sorted(groups.items()):
        entry = dict(zip(GROUP_KEYS, key))
        entry["n_seeds"] = len(members)
        for score in SCORE_KEYS:
            mean, std = _mean_std([float(m[score]) for m in members])
            entry[f"{score}_mean"] = mean
            entry[f"{score}_std"] = std
        ledger_eps, _ = _mean_std([float(m["ledger_eps"]) for m in members])
        entry["ledger_eps_mean"] = ledger_eps
        for t in ("t_compute_ms", "t_encrypt_ms", "t_aggregate_ms",
                  "t_decrypt_ms"):
            mean, _ = _mean_std([float(m[t]) for m in members])
            entry[f"{t}_mean"] = mean
        summary.append(entry)

    # hybrid/local/central/none side by side per remaining coordinates
    comparison: dict[tuple, dict] = {}
    for entry in summary:
        key = tuple(entry[k] for k in GROUP_KEYS if k != "mode")
        comparison.setdefault(key, {})[entry["mode"]] = entry["micro_f1_mean"]
    comparison_rows = [
        {**dict(zip([k for k in GROUP_KEYS if k != "mode"], key)),
         "micro_f1_by_mode": modes}
        for key, modes in sorted(comparison.items())
    ]
    return {"groups": summary, "mode_comparison": comparison_rows}


def render_text(report: dict) -> str:
    lines = []
    lines.append(
        f"{'algorithm':<10}{'mode':<14}{'dataset':<22}{'n':>4}{'t':>4}"
        f"{'eps':>8}{'sigma':>7}  micro_f1 (mean+/-std)   ledger_eps"
    )
    for g in report["groups"]:
        eps = g["epsilon"] or "-"
        sigma = g["sigma"] or "-"
        lines.append(
            f"{g['algorithm']:<10}{g['mode']:<14}{g['dataset']:<22}"
            f"{g['n_parties']:>4}{g['trust_t']:>4}{eps:>8}{sigma:>7}"
            f"  {g['micro_f1_mean']:.4f} +/- {g['micro_f1_std']:.4f}"
            f"      {g['ledger_eps_mean']:.4f}"
        )
    lines.append("")
    lines.append("mode comparison (mean micro-F1):")
    for c in report["mode_comparison"]:
        coords = ", ".join(
            f"{k}={v}" for k, v in c.items() if k != "micro_f1_by_mode" and v
        )
        modes = ", ".join(
            f"{m}={v:.4f}" for m, v in sorted(c["micro_f1_by_mode"].items())
        )
        lines.append(f"  [{coords}] {modes}")
    return "\n".join(lines) + "\n"


def report_files(paths, json_out=None) -> str:
    rows = read_rows(paths)
    report = summarize(rows)
    if json_out:
        Path(json_out).write_text(json.dumps(report, indent=2),
                                  encoding="utf-8")
    return render_text(report)
