"""Figure generation from trace CSVs. Never required for tests to pass."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import FormatError, UsageError
from .simulate import CSV_HEADER

PLOT_KINDS = ("mse_vs_n", "acc_vs_n", "acc_vs_round", "acc_vs_L",
              "privacy_tradeoff")

_FLOAT_COLS = ("mse_empirical", "mse_analytic", "train_loss", "test_acc",
               "epsilon_proxy", "ms")


def load_traces(trace_dir) -> list[dict]:
    """All round records under a directory of trace CSVs."""
    trace_dir = Path(trace_dir)
    files = sorted(trace_dir.rglob("seed_*.csv"))
    if not files:
        raise UsageError(f"no trace CSVs found under {trace_dir}")
    rows = []
    for path in files:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CSV_HEADER.split(","):
                raise FormatError(f"{path}: unexpected trace schema")
            for raw in reader:
                row = dict(zip(CSV_HEADER.split(","), raw))
                for col in _FLOAT_COLS:
                    row[col] = float(row[col])
                row["round"] = int(row["round"])
                row["seed"] = int(row["seed"])
                row["n_selected"] = int(row["n_selected"])
                rows.append(row)
    return rows


def _final_rounds(rows):
    last = max(r["round"] for r in rows)
    return [r for r in rows if r["round"] == last]


def _group_mean(rows, key_fn, value_fn):
    groups: dict = {}
    for r in rows:
        groups.setdefault(key_fn(r), []).append(value_fn(r))
    keys = sorted(groups)
    return keys, [sum(groups[k]) / len(groups[k]) for k in keys]


def _sweep_key(row):
    text = row["sweep_value"]
    try:
        return float(text)
    except ValueError:
        return text


def plot(trace_dir, kind: str, out_path) -> Path:
    """Render one figure kind from the traces; deterministic output bytes."""
    if kind not in PLOT_KINDS:
        raise UsageError(f"unknown plot kind {kind!r}")
    rows = load_traces(trace_dir)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    fig, ax = plt.subplots(figsize=(5, 3.5), dpi=120)
    if kind == "mse_vs_n":
        x, y = _group_mean(_final_rounds(rows),
                           lambda r: r["n_selected"],
                           lambda r: r["mse_empirical"])
        ax.semilogy(x, y, "o-")
        ax.set_xlabel("selected devices")
        ax.set_ylabel("aggregation MSE")
    elif kind == "acc_vs_n":
        x, y = _group_mean(_final_rounds(rows),
                           lambda r: r["n_selected"],
                           lambda r: r["test_acc"])
        ax.plot(x, y, "o-")
        ax.set_xlabel("selected devices")
        ax.set_ylabel("final test accuracy")
    elif kind == "acc_vs_round":
        for value in sorted({r["sweep_value"] for r in rows}, key=str):
            sub = [r for r in rows if r["sweep_value"] == value]
            x, y = _group_mean(sub, lambda r: r["round"],
                               lambda r: r["test_acc"])
            ax.plot(x, y, label=value or "run")
        ax.set_xlabel("round")
        ax.set_ylabel("test accuracy")
        ax.legend()
    elif kind == "acc_vs_L":
        x, y = _group_mean(_final_rounds(rows), _sweep_key,
                           lambda r: r["test_acc"])
        ax.plot(x, y, "o-")
        ax.set_xlabel("RIS elements")
        ax.set_ylabel("final test accuracy")
    else:  # privacy_tradeoff
        finals = _final_rounds(rows)
        x, acc = _group_mean(finals, _sweep_key, lambda r: r["test_acc"])
        _, eps = _group_mean(finals, _sweep_key, lambda r: r["epsilon_proxy"])
        ax.plot(x, acc, "o-", label="accuracy")
        ax.set_xlabel("artificial noise std")
        ax.set_ylabel("final test accuracy")
        ax2 = ax.twinx()
        ax2.plot(x, eps, "s--", color="tab:red", label="epsilon_proxy")
        ax2.set_ylabel("epsilon_proxy")
    fig.tight_layout()
    fig.savefig(out_path, metadata={"Software": None})
    plt.close(fig)
    return out_path
