"""Line charts of sweep CSVs, with the pure-reference bound as a dashed overlay."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiment import read_csv  # noqa: E402

BOUND_STYLE = {"color": "tab:blue", "linestyle": "--", "linewidth": 1.5}


def _float(s: str) -> float | None:
    try:
        return float(s)
    except (TypeError, ValueError):
        return None


def _select_rows(rows: list[dict]) -> list[dict]:
    """Prefer replicate means when the CSV has aggregate rows."""
    if rows and "row_kind" in rows[0]:
        means = [r for r in rows if r["row_kind"] == "mean"]
        if means:
            return means
        return [r for r in rows if r["row_kind"] in ("run", "")]
    return rows


def _series(rows: list[dict], x: str, y: str) -> tuple[list[float], list[float]]:
    pts = sorted(
        (xv, yv)
        for xv, yv in ((_float(r[x]), _float(r[y])) for r in rows)
        if xv is not None and yv is not None
    )
    return [p[0] for p in pts], [p[1] for p in pts]


def emit_chart(
    csv_path,
    x_column: str,
    y_columns: list[str],
    output_path,
    bound_column: str | None = "bound",
    group_column: str | None = None,
    title: str | None = None,
) -> Path:
    """Write an SVG line chart. Output bytes depend only on the input data.

    One line per y column (and per group value when ``group_column`` is
    given, e.g. ``strategy``). If ``bound_column`` exists it is drawn once
    as a dashed line.
    """
    with open(csv_path, encoding="utf-8") as fh:
        header_line = next((ln for ln in fh if not ln.startswith("#")), "")
    header = [h.strip() for h in header_line.split(",")] if header_line else []
    rows = read_csv(csv_path)
    wanted = [x_column, *y_columns] + ([group_column] if group_column else [])
    missing = [c for c in wanted if c not in header]
    if missing:
        raise KeyError(f"columns not in CSV: {missing}")
    rows = _select_rows(rows)

    with plt.rc_context({"svg.hashsalt": "qaemix", "svg.fonttype": "path", "path.simplify": False}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        groups = sorted({r[group_column] for r in rows}) if group_column else [None]
        for y in y_columns:
            for g in groups:
                sub = rows if g is None else [r for r in rows if r[group_column] == g]
                xs, ys = _series(sub, x_column, y)
                label = y if g is None else f"{y} ({g})"
                gid = f"series-{y}" if g is None else f"series-{y}-{g}"
                ax.plot(xs, ys, marker="o", markersize=3, label=label, gid=gid)
        if bound_column and bound_column in header and bound_column not in y_columns:
            seen: dict[float, float] = {}
            for r in rows:
                xv, bv = _float(r[x_column]), _float(r[bound_column])
                if xv is not None and bv is not None:
                    seen.setdefault(xv, bv)
            xs = sorted(seen)
            ax.plot(xs, [seen[v] for v in xs], label="pure-reference bound", gid="series-bound", **BOUND_STYLE)
        ax.set_xlabel(x_column)
        ax.set_ylabel(", ".join(y_columns))
        if title:
            ax.set_title(title)
        if rows:
            ax.legend(loc="best", fontsize="small")
        fig.tight_layout()
        out = Path(output_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    return out
