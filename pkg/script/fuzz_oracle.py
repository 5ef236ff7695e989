from __future__ import annotations
import argparse
import json
import sys
import datetime
import time
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd
import matplotlib.pyplot as plt

from sklearn.metrics import accuracy_score, confusion_matrix

# Ensures `src/` is importable when running from repo root
ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.checker import check  # noqa: E402
from src.errors import OracleGuardError  # noqa: E402
from src.oracle import brute_force_check  # noqa: E402
from src.randomgen import random_cgs, random_patl_formula  # noqa: E402
from src.utils import setup_logging  # noqa: E402

CLASSES = ["false", "true"]


def plot_confusion(cm: np.ndarray, classes: List[str], out_png: Path) -> None:
    """Save the oracle-vs-checker verdict matrix (absolute counts)."""
    fig, ax = plt.subplots(figsize=(5, 4), dpi=140)
    im = ax.imshow(cm, interpolation="nearest")
    ax.figure.colorbar(im, ax=ax)
    ax.set(
        xticks=np.arange(cm.shape[1]),
        yticks=np.arange(cm.shape[0]),
        xticklabels=classes,
        yticklabels=classes,
        ylabel="Brute-force verdict",
        xlabel="Checker verdict",
        title="Verdict agreement",
    )
    thresh = cm.max() / 2.0 if cm.size else 0
    for i in range(cm.shape[0]):
        for j in range(cm.shape[1]):
            ax.text(
                j,
                i,
                format(cm[i, j], "d"),
                ha="center",
                va="center",
                color="white" if cm[i, j] > thresh else "black",
            )
    fig.tight_layout()
    fig.savefig(out_png, bbox_inches="tight")
    plt.close(fig)


def run_instance(seed: int, depth: int) -> List[dict]:
    """Check one random (CGS, formula) pair both ways; one row per (state, state subformula)."""
    rng = np.random.default_rng(seed)
    cgs = random_cgs(rng)
    formula = random_patl_formula(rng, cgs, depth=depth)
    report = check(cgs, formula)
    oracle = brute_force_check(cgs, formula)
    rows = []
    for g, sat in oracle.labels.items():
        for s in range(cgs.n_states):
            rows.append({
                "seed": seed,
                "formula": str(formula),
                "subformula": str(g),
                "state": cgs.states[s],
                "oracle": s in sat,
                "checker": s in report.labels[g],
            })
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description="Fuzz the checker against the brute-force oracle")
    ap.add_argument("--instances", type=int, default=500, help="Number of random instances")
    ap.add_argument("--depth", type=int, default=2, help="Maximum modality depth of the formulas")
    ap.add_argument("--seed", type=int, default=42, help="Seed of the first instance")
    ap.add_argument("--out", default="runs/fuzz_oracle", help="Output directory")
    args = ap.parse_args()

    setup_logging("WARNING")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    rows: List[dict] = []
    refused = 0
    for i in range(args.instances):
        try:
            rows.extend(run_instance(args.seed + i, args.depth))
        except OracleGuardError:
            refused += 1
    elapsed = time.perf_counter() - started

    df = pd.DataFrame(rows, columns=["seed", "formula", "subformula", "state", "oracle", "checker"])
    if df.empty:
        raise SystemExit("No instance was checked.")
    y_true = df["oracle"].map(str).str.lower()
    y_pred = df["checker"].map(str).str.lower()
    acc = accuracy_score(y_true, y_pred)

    # Disagreements CSV
    mismatches = df[df["oracle"] != df["checker"]]
    mismatches.to_csv(out_dir / "disagreements.csv", index=False)

    # Confusion matrix
    cm = confusion_matrix(y_true, y_pred, labels=CLASSES)
    cm_png = out_dir / "confusion_matrix.png"
    plot_confusion(cm, CLASSES, cm_png)

    # metrics.json
    metrics = {
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "instances": int(args.instances),
        "refused_by_guard": int(refused),
        "first_seed": int(args.seed),
        "depth": int(args.depth),
        "verdicts": int(len(df)),
        "agreement": float(acc),
        "disagreements": int(len(mismatches)),
        "disagreeing_seeds": sorted(int(s) for s in mismatches["seed"].unique()),
        "confusion_matrix_png": str(cm_png),
        "seconds": round(elapsed, 2),
    }
    with open(out_dir / "metrics.json", "w", encoding="utf-8") as f:
        json.dump(metrics, f, indent=2)

    # Console summary
    print("=== Checker vs brute force ===")
    print(f"Instances: {args.instances} ({refused} refused by the guard)")
    print(f"Verdicts:  {len(df)}")
    print(f"Agreement: {acc:.4f}")
    print(f"Artifacts: {out_dir.resolve()}")
    if len(mismatches):
        raise SystemExit(1)


if __name__ == "__main__":
    main()
