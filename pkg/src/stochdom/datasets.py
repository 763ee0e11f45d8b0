"""Bundled demo data: daily percent returns of five industry portfolios,
22 trading days of July 2024 (Fama/French data library)."""

from __future__ import annotations

import numpy as np

from .types import ScenarioSet

DEMO_DATES = (
    "2024-07-01", "2024-07-02", "2024-07-03", "2024-07-05", "2024-07-08",
    "2024-07-09", "2024-07-10", "2024-07-11", "2024-07-12", "2024-07-15",
    "2024-07-16", "2024-07-17", "2024-07-18", "2024-07-19", "2024-07-22",
    "2024-07-23", "2024-07-24", "2024-07-25", "2024-07-26", "2024-07-29",
    "2024-07-30", "2024-07-31",
)

# rows: assets, columns: scenarios (one per trading day)
DEMO_RETURNS = np.array([
    [-1.01, -2.50, -0.38, -1.11, 0.44, 0.05, -0.34, 4.00, 1.76, 1.53, 2.77,
     0.71, -2.24, 0.08, 0.35, 2.55, -2.21, 1.67, 0.17, -0.97, -0.11, 0.24],
    [-0.72, -0.22, 0.27, 0.15, -0.22, -1.49, 0.79, 1.60, 1.04, 0.02, 1.28,
     0.69, -1.24, -1.51, 0.29, -0.09, 2.88, -0.21, 1.26, -0.79, 0.79, 1.89],
    [1.10, -0.86, -0.21, -0.33, -0.64, 1.52, 1.31, 2.53, -0.06, -3.42, 2.59,
     -1.44, -1.74, -0.23, -0.54, 0.08, -1.61, 1.05, 2.29, -0.48, 0.98, 0.72],
    [-1.80, -0.09, 0.41, 2.10, 0.59, -2.59, 2.75, 0.73, 0.41, -2.50, 0.40,
     1.12, -1.72, -2.67, -0.42, -0.39, -2.51, 0.00, 0.93, -0.48, -1.65, -1.14],
    [-0.65, 0.64, 0.41, -1.61, 0.33, -0.26, 1.93, 3.72, 2.17, -0.63, 1.83,
     0.94, -1.78, -1.81, -0.25, 1.14, -0.41, 2.21, 2.13, -1.13, 0.07, -1.23],
])

DEMO_LABELS = ("Asset_1", "Asset_2", "Asset_3", "Asset_4", "Asset_5")


def demo_scenarios() -> ScenarioSet:
    """The bundled 5-asset, 22-scenario set with uniform scenario weights."""
    return ScenarioSet(DEMO_RETURNS, asset_labels=DEMO_LABELS)


def write_demo_csv(path) -> None:
    """Dump the demo data as a CSV with a leading Date column."""
    lines = ["Date," + ",".join(DEMO_LABELS)]
    for j, date in enumerate(DEMO_DATES):
        cells = ",".join(format(DEMO_RETURNS[i, j], ".17g") for i in range(len(DEMO_LABELS)))
        lines.append(f"{date},{cells}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
