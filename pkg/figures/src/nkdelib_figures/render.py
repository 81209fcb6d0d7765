"""Render solution-diversity charts from nkdelib aggregate CSV files.

Two chart kinds:

  alpha_curve          one line per facet value (k or w); x is the constant
                       integration rate, y the mean number of solutions
                       discovered, with the bootstrap CI as a shaded band.
  schedule_comparison  grouped bars per facet value, one bar per condition
                       (schedule), with CI whiskers.

The tool performs no statistics of its own: means and CI bounds are taken
verbatim from the CSV, and the input file is never modified.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from matplotlib.figure import Figure

FIGURE_KINDS = ("alpha_curve", "schedule_comparison")
FACET_KEYS = ("k", "w")

_REQUIRED_COLUMNS = {
    "alpha_curve": ("alpha_spec", "mean_distinct_solutions", "ci_low", "ci_high"),
    "schedule_comparison": (
        "condition_label",
        "mean_distinct_solutions",
        "ci_low",
        "ci_high",
    ),
}

X_LABEL = "integration parameter α"
Y_LABEL = "number of solutions discovered"


class SchemaError(ValueError):
    """The input CSV does not match the aggregate schema."""


class EmptyInputError(ValueError):
    """The input CSV has no data rows."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render, from where, to where."""

    input_path: str
    kind: str
    output_path: str
    facet: str = "k"
    image_format: str | None = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if self.facet not in FACET_KEYS:
            raise ValueError(f"facet must be one of {FACET_KEYS}, got {self.facet!r}")


def read_aggregate_rows(path: str, required: tuple[str, ...]) -> list[dict[str, str]]:
    """Read the aggregate CSV, skipping # comment lines and checking columns."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        rows = list(reader)
        fieldnames = reader.fieldnames
    if fieldnames is None:
        raise EmptyInputError(f"{path}: no header row found")
    for column in required:
        if column not in fieldnames:
            raise SchemaError(f"{path}: missing required column {column!r}")
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")
    return rows


def _facet_sort_key(value: str):
    try:
        return (0, float(value))
    except ValueError:
        return (1, value)


def _group_by_facet(rows: list[dict[str, str]], facet: str) -> list[tuple[str, list[dict]]]:
    groups: dict[str, list[dict]] = {}
    for row in rows:
        groups.setdefault(row.get(facet, ""), []).append(row)
    return sorted(groups.items(), key=lambda item: _facet_sort_key(item[0]))


def _alpha_curve(ax, rows: list[dict[str, str]], facet: str) -> None:
    for facet_value, group in _group_by_facet(rows, facet):
        try:
            group.sort(key=lambda row: float(row["alpha_spec"]))
            alphas = np.array([float(row["alpha_spec"]) for row in group])
        except ValueError as exc:
            raise SchemaError(
                f"alpha_curve needs numeric alpha_spec values (constant schedules): {exc}"
            ) from exc
        means = np.array([float(row["mean_distinct_solutions"]) for row in group])
        ci_low = np.array([float(row["ci_low"]) for row in group])
        ci_high = np.array([float(row["ci_high"]) for row in group])
        label = f"{facet}={facet_value}" if facet_value != "" else None
        ax.fill_between(alphas, ci_low, ci_high, alpha=0.2)
        ax.plot(alphas, means, marker="o", label=label)
    ax.set_xlabel(X_LABEL)
    ax.set_ylabel(Y_LABEL)
    ax.legend()


def _schedule_comparison(ax, rows: list[dict[str, str]], facet: str) -> None:
    groups = _group_by_facet(rows, facet)
    labels = sorted({row["condition_label"] for row in rows})
    width = 0.8 / max(len(labels), 1)
    for li, label in enumerate(labels):
        xs, means, lows, highs = [], [], [], []
        for gi, (_, group) in enumerate(groups):
            for row in group:
                if row["condition_label"] != label:
                    continue
                xs.append(gi + (li - (len(labels) - 1) / 2.0) * width)
                means.append(float(row["mean_distinct_solutions"]))
                lows.append(float(row["ci_low"]))
                highs.append(float(row["ci_high"]))
        ax.bar(xs, means, width=width * 0.9, label=label)
        # whiskers drawn from the CI columns verbatim
        ax.vlines(xs, lows, highs, colors="black", linewidths=1.2)
    ax.set_xticks(range(len(groups)))
    ax.set_xticklabels([f"{facet}={value}" for value, _ in groups])
    ax.set_ylabel(Y_LABEL)
    ax.legend()


def render(spec: FigureSpec) -> Figure:
    """Render the chart, save it to spec.output_path, and return the figure."""
    rows = read_aggregate_rows(spec.input_path, _REQUIRED_COLUMNS[spec.kind])
    fig = Figure(figsize=(7.0, 4.5))
    ax = fig.subplots()
    if spec.kind == "alpha_curve":
        _alpha_curve(ax, rows, spec.facet)
    else:
        _schedule_comparison(ax, rows, spec.facet)
    fig.tight_layout()
    fig.savefig(spec.output_path, format=spec.image_format)
    return fig
