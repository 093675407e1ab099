"""Render simulation result CSVs into the standard figure families.

This layer is presentation only: every number shown (point, band edge, bar
height, heatmap cell) is copied straight from a CSV cell, with no computation
beyond axis transforms. Each builder returns the figure together with the
exact arrays it plotted, so the self-test mode can extract the drawn artists
and verify the round trip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

FAMILIES = ("omega", "tr", "zeta", "heatmap", "evolution", "target-size", "bars")

# column roles per family: (x column, group column, log-x)
LINE_FAMILIES = {
    "omega": ("omega_neg", "mu_pos", True),
    "tr": ("t_r", "mu_pos", False),
    "zeta": ("zeta", "mu_pos", False),
    "target-size": ("T", "strategy", False),
}

AXIS_LABELS = {
    "omega_neg": "social rate",
    "t_r": "target update interval",
    "zeta": "target number of anti-vaccine neighbors",
    "T": "target set size",
    "mu_pos": "positive exposure rate",
    "mean_Sr": "mean epidemic size",
}


class PlotError(RuntimeError):
    """Input unusable for the requested family (missing columns, no rows)."""


@dataclass
class ExpectedData:
    """What the figure must contain, taken verbatim from the CSV."""

    lines: list = field(default_factory=list)  # dicts: x, y, lo, hi, label
    bars: list = field(default_factory=list)  # dicts: height, err, label
    cells: list = field(default_factory=list)  # dicts: x, y, value or None


def _require_columns(df: pd.DataFrame, columns, family: str):
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise PlotError(f"family {family!r} needs missing column(s): {', '.join(missing)}")


def apply_filters(df: pd.DataFrame, filters: dict) -> pd.DataFrame:
    for col, value in filters.items():
        if col not in df.columns:
            raise PlotError(f"filter column {col!r} not in CSV header")
        col_str = df[col].astype(str)
        mask = col_str == value
        try:
            target = float(value)
            numeric = pd.to_numeric(df[col], errors="coerce")
            mask = mask | (numeric == target)
        except ValueError:
            pass
        df = df[mask]
    return df


def load_rows(path, family: str, filters: dict) -> pd.DataFrame:
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    df = apply_filters(df, filters)
    if family != "evolution":
        _require_columns(df, ["mean_Sr"], family)
        df = df[df["mean_Sr"] != ""]  # drop all-flagged rows (n=0 marker)
    if len(df) == 0:
        raise PlotError("no rows left after filtering; refusing to draw an empty plot")
    return df


def _numeric(df: pd.DataFrame, col: str) -> np.ndarray:
    values = pd.to_numeric(df[col], errors="coerce").to_numpy(dtype=float)
    if np.isnan(values).any():
        raise PlotError(f"column {col!r} holds non-numeric values for this selection")
    return values


def build_line_figure(df: pd.DataFrame, family: str):
    x_col, group_col, log_x = LINE_FAMILIES[family]
    _require_columns(df, [x_col, group_col, "mean_Sr", "ci95_Sr"], family)
    if (df[x_col] == "").any():
        raise PlotError(f"column {x_col!r} is empty for some selected rows")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    expected = ExpectedData()
    for label, group in sorted(df.groupby(group_col, sort=False), key=lambda kv: kv[0]):
        sub = group.assign(_x=_numeric(group, x_col)).sort_values("_x")
        x = sub["_x"].to_numpy()
        y = _numeric(sub, "mean_Sr")
        ci = _numeric(sub, "ci95_Sr")
        line_label = f"{group_col}={label}"
        ax.plot(x, y, marker="o", label=line_label)
        ax.fill_between(x, y - ci, y + ci, alpha=0.25)
        expected.lines.append(
            {"x": x, "y": y, "lo": y - ci, "hi": y + ci, "label": line_label}
        )
    if log_x:
        ax.set_xscale("log")
    ax.set_xlabel(AXIS_LABELS.get(x_col, x_col))
    ax.set_ylabel(AXIS_LABELS["mean_Sr"])
    ax.legend()
    fig.tight_layout()
    return fig, expected


def build_heatmap_figure(df: pd.DataFrame):
    _require_columns(df, ["zeta", "Z", "mean_Sr"], "heatmap")
    if (df["zeta"] == "").any() or (df["Z"] == "").any():
        raise PlotError("heatmap needs zeta and Z set on every selected row")
    zetas = sorted(set(_numeric(df, "zeta")))
    zs = sorted(set(_numeric(df, "Z")))
    by_cell = {}
    for _, row in df.iterrows():
        key = (float(row["zeta"]), float(row["Z"]))
        if key in by_cell:
            raise PlotError(f"duplicate heatmap cell zeta={key[0]} Z={key[1]}; filter the CSV")
        by_cell[key] = float(row["mean_Sr"])
    grid = np.full((len(zs), len(zetas)), np.nan)
    expected = ExpectedData()
    for i, z in enumerate(zs):
        for j, zeta in enumerate(zetas):
            value = by_cell.get((zeta, z))
            if value is not None:
                grid[i, j] = value
            expected.cells.append({"x": j, "y": i, "value": value})
    fig, ax = plt.subplots(figsize=(1.2 + 0.9 * len(zetas), 1.0 + 0.8 * len(zs)))
    masked = np.ma.masked_invalid(grid)
    im = ax.imshow(masked, origin="lower", aspect="auto", cmap="viridis")
    for cell in expected.cells:
        value = cell["value"]
        text = "x" if value is None else f"{value:g}"
        ax.text(cell["x"], cell["y"], text, ha="center", va="center", fontsize=8,
                color="white" if value is not None else "red")
    ax.set_xticks(range(len(zetas)), [f"{v:g}" for v in zetas])
    ax.set_yticks(range(len(zs)), [f"{v:g}" for v in zs])
    ax.set_xlabel(AXIS_LABELS["zeta"])
    ax.set_ylabel("target number of neutral neighbors")
    fig.colorbar(im, ax=ax, label=AXIS_LABELS["mean_Sr"])
    fig.tight_layout()
    return fig, expected


def build_evolution_figure(df: pd.DataFrame):
    _require_columns(df, ["step", "neutral", "positive", "negative"], "evolution")
    steps = _numeric(df, "step")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    expected = ExpectedData()
    for col, color in (("negative", "tab:red"), ("positive", "tab:green"), ("neutral", "tab:blue")):
        y = _numeric(df, col)
        ax.plot(steps, y, label=col, color=color)
        expected.lines.append({"x": steps, "y": y, "lo": None, "hi": None, "label": col})
    ax.set_xlabel("step")
    ax.set_ylabel("agents")
    ax.legend()
    fig.tight_layout()
    return fig, expected


def build_bars_figure(df: pd.DataFrame):
    _require_columns(df, ["strategy", "mu_pos", "mean_Sr", "ci95_Sr"], "bars")
    group_values = sorted(set(_numeric(df, "mu_pos")))
    strategies = list(dict.fromkeys(df["strategy"]))
    width = 0.8 / len(strategies)
    fig, ax = plt.subplots(figsize=(1.5 + 2.2 * len(group_values), 4.5))
    expected = ExpectedData()
    for k, strategy in enumerate(strategies):
        sub = df[df["strategy"] == strategy]
        by_group = dict(zip(_numeric(sub, "mu_pos"), zip(_numeric(sub, "mean_Sr"),
                                                         _numeric(sub, "ci95_Sr"))))
        for g, group_value in enumerate(group_values):
            if group_value not in by_group:
                continue
            height, err = by_group[group_value]
            pos = g + (k - (len(strategies) - 1) / 2) * width
            ax.bar(pos, height, width=width, yerr=err, capsize=3,
                   color=f"C{k}", label=strategy if g == 0 else None)
            expected.bars.append(
                {"height": height, "err": err, "label": f"{strategy}@{group_value:g}"}
            )
    ax.set_xticks(range(len(group_values)), [f"{v:g}" for v in group_values])
    ax.set_xlabel(AXIS_LABELS["mu_pos"])
    ax.set_ylabel(AXIS_LABELS["mean_Sr"])
    ax.legend()
    fig.tight_layout()
    return fig, expected


def build_figure(df: pd.DataFrame, family: str):
    if family in LINE_FAMILIES:
        return build_line_figure(df, family)
    if family == "heatmap":
        return build_heatmap_figure(df)
    if family == "evolution":
        return build_evolution_figure(df)
    if family == "bars":
        return build_bars_figure(df)
    raise PlotError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")


def save_figure(fig, path) -> None:
    """Write PNG or SVG with embedded timestamps disabled for reproducibility."""
    path = str(path)
    if path.endswith(".svg"):
        with plt.rc_context({"svg.hashsalt": "vaxopsim-figures"}):
            fig.savefig(path, metadata={"Date": None})
    else:
        fig.savefig(path)


# ---------------------------------------------------------------------------
# Self-test: extract what was actually drawn and compare to the CSV values
# ---------------------------------------------------------------------------


def _close(a, b) -> bool:
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


def verify_figure(fig, expected: ExpectedData, family: str) -> list[str]:
    """Round-trip check: every plotted value must match its CSV source cell."""
    problems = []
    ax = fig.axes[0]
    if expected.lines:
        drawn = [line for line in ax.lines if line.get_label() and not
                 line.get_label().startswith("_")]
        if len(drawn) != len(expected.lines):
            problems.append(f"{len(drawn)} lines drawn, {len(expected.lines)} expected")
        by_label = {line.get_label(): line for line in drawn}
        bands = list(ax.collections)
        for idx, exp in enumerate(expected.lines):
            line = by_label.get(exp["label"])
            if line is None:
                problems.append(f"line {exp['label']} missing")
                continue
            if not np.allclose(line.get_xdata(), exp["x"], rtol=0, atol=0):
                problems.append(f"line {exp['label']}: x data differs from CSV")
            if not np.allclose(line.get_ydata(), exp["y"], rtol=0, atol=0):
                problems.append(f"line {exp['label']}: y data differs from CSV")
            if exp["lo"] is not None:
                if idx >= len(bands):
                    problems.append(f"band for {exp['label']} missing")
                    continue
                path = bands[idx].get_paths()[0]
                ys = path.vertices[:, 1]
                if not (_close(ys.min(), exp["lo"].min()) and _close(ys.max(), exp["hi"].max())):
                    problems.append(f"band for {exp['label']} does not span mean +- ci95")
    if expected.bars:
        rects = ax.patches
        if len(rects) != len(expected.bars):
            problems.append(f"{len(rects)} bars drawn, {len(expected.bars)} expected")
        for rect, exp in zip(rects, expected.bars):
            if not _close(rect.get_height(), exp["height"]):
                problems.append(f"bar {exp['label']}: height differs from CSV")
    if expected.cells:
        image = ax.images[0].get_array()
        texts = {
            (round(t.get_position()[0]), round(t.get_position()[1])): t.get_text()
            for t in ax.texts
        }
        for exp in expected.cells:
            i, j = exp["y"], exp["x"]
            drawn_value = image[i, j]
            annotation = texts.get((j, i))
            if exp["value"] is None:
                if annotation != "x" or not np.ma.is_masked(drawn_value):
                    problems.append(f"empty cell ({j},{i}) not marked with 'x'")
            else:
                if np.ma.is_masked(drawn_value) or not _close(float(drawn_value), exp["value"]):
                    problems.append(f"cell ({j},{i}): color value differs from CSV")
                if annotation != f"{exp['value']:g}":
                    problems.append(f"cell ({j},{i}): annotation differs from CSV")
    return problems
