"""Report assembly and file export (JSON + plot-ready CSV)."""

from __future__ import annotations

import json
import os

from . import analytics
from .simulate import TrialStore


def _fmt(value) -> str:
    # shortest round-trip decimal for floats, plain text otherwise
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_csv(path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def forecast_report(store: TrialStore, forecast_label: str, torn=None) -> dict:
    """Analysis bundle for one forecast.

    Sections that need more data than the store holds (stats below 2
    trials, sensitivity below 10) are reported as null.
    """
    spec = store.spec
    f = spec.forecasts[store.forecast_index(forecast_label)]
    n = store.completed
    out = {"forecast": f.label, "cell": str(f.cell)}
    if n >= 2:
        out["stats"] = analytics.forecast_stats(store, f.label).to_json()
        out["histogram"] = analytics.histogram(store, f.label).to_json()
    else:
        out["stats"] = None
        out["histogram"] = None
    certainties = []
    if f.target_lo is not None or f.target_hi is not None:
        certainties.append({
            "lo": f.target_lo,
            "hi": f.target_hi,
            "p": analytics.certainty(store, f.label, f.target_lo, f.target_hi),
        })
    out["certainty"] = certainties
    if n >= 10 and len(spec.assumptions) > 0:
        entries = analytics.sensitivity(store, f.label)
        out["sensitivity"] = [e.to_json() for e in entries]
    else:
        out["sensitivity"] = None
    out["tornado"] = torn.to_json() if torn is not None else None
    return out


def run_report(store: TrialStore, tornados: dict) -> dict:
    payload = {
        "model": None,  # filled by the CLI
        "seed": store.seed,
        "trials": store.spec.trials,
        "completed": store.completed,
        "errors": len(store.errors),
        "forecasts": [
            forecast_report(store, f.label, tornados.get(f.label))
            for f in store.spec.forecasts
        ],
    }
    return payload


def trials_csv_rows(store: TrialStore):
    header = ["trial"] + store.assumption_labels + store.forecast_labels
    rows = []
    for i in range(store.completed):
        rows.append([int(store.trial_indices[i])]
                    + [float(v) for v in store.assumption_matrix[i]]
                    + [float(v) for v in store.forecast_matrix[i]])
    return header, rows


def export_trials(store: TrialStore, path) -> None:
    header, rows = trials_csv_rows(store)
    write_csv(path, header, rows)


def export_errors(store: TrialStore, path) -> None:
    write_csv(path, ["trial", "kind", "cell"],
              [[te.trial, te.error.kind.value, str(te.error.cell)]
               for te in store.errors])


def export_histogram(hist, path) -> None:
    # one row per bin: left edge, count
    rows = list(zip(hist.edges[:-1], hist.counts))
    write_csv(path, ["edge", "count"], rows)


def export_tornado(torn, path) -> None:
    write_csv(path, ["label", "low", "high"],
              [[b.label, b.low, b.high] for b in torn.bars])


def safe_label(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in label)


def out_path(out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)
