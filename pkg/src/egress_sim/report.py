"""Render results as CSV, Markdown comparison tables and SVG bar charts."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .experiment import CellResult, results_to_csv, summarize_direction

OFF_COLOR = "#d62728"
ON_COLOR = "#1f77b4"


def render_csv(cells) -> str:
    return results_to_csv(cells)


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def render_markdown(cells: list[CellResult]) -> str:
    """One table per (layout, runtime), one row per population."""
    out = []
    keys = list(dict.fromkeys((c.layout, c.runtime) for c in cells))
    for layout, runtime in keys:
        rows = sorted((c for c in cells if (c.layout, c.runtime) == (layout, runtime)), key=lambda c: c.student_count)
        minutes = runtime / 60
        out.append(f"### {layout}, runtime {runtime:g} s ({minutes:g} min)")
        out.append("")
        out.append(
            "| Students | Casualties off (%) | Evacuation off (%) | Casualties on (%) | Evacuation on (%) "
            "| Casualty Change | Evacuation Efficiency Change |"
        )
        out.append("|---:|---:|---:|---:|---:|---:|---:|")
        for c in rows:
            cols = (c.off.casualty_pct, c.off.evacuation_pct, c.on.casualty_pct, c.on.evacuation_pct, c.casualty_change, c.evacuation_efficiency_change)
            out.append(f"| {c.student_count} | " + " | ".join(_fmt(v) for v in cols) + " |")
        out.append("")
    if cells:
        summary = summarize_direction(cells)
        out.append("### Averages per layout")
        out.append("")
        out.append("| Layout | Cells | Mean Casualty Change | Mean Evacuation Efficiency Change |")
        out.append("|---|---:|---:|---:|")
        for d in summary.layouts:
            out.append(f"| {d.layout} | {d.cells} | {_fmt(d.mean_casualty_change)} | {_fmt(d.mean_evacuation_change)} |")
        out.append("")
    return "\n".join(out)


def render_svg(cells: list[CellResult]) -> str:
    """Grouped bars per layout: casualties and evacuation, detector off vs on."""
    layouts = list(dict.fromkeys(c.layout for c in cells))
    groups_max = max((sum(c.layout == lay for c in cells) for lay in layouts), default=0)
    group_w = 64
    margin_l, margin_r, margin_t = 60, 180, 40
    panel_h, panel_gap = 260, 70
    plot_h = panel_h - 60
    width = margin_l + margin_r + max(groups_max, 1) * group_w
    height = margin_t + len(layouts) * (panel_h + panel_gap)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">'
        "Casualties and evacuation, detector off vs on</text>",
    ]
    series = (
        ("Casualties off", OFF_COLOR, 0.45, lambda c: c.off.casualty_pct),
        ("Casualties on", ON_COLOR, 0.45, lambda c: c.on.casualty_pct),
        ("Evacuation off", OFF_COLOR, 1.0, lambda c: c.off.evacuation_pct),
        ("Evacuation on", ON_COLOR, 1.0, lambda c: c.on.evacuation_pct),
    )
    bar_w = (group_w - 12) / len(series)
    for p, layout in enumerate(layouts):
        top = margin_t + p * (panel_h + panel_gap) + 20
        base_y = top + plot_h
        mine = sorted((c for c in cells if c.layout == layout), key=lambda c: (c.runtime, c.student_count))
        parts.append(f'<text x="{margin_l}" y="{top - 6}" font-family="sans-serif" font-size="13">{escape(layout)}</text>')
        parts.append(f'<line x1="{margin_l}" y1="{base_y}" x2="{margin_l + len(mine) * group_w}" y2="{base_y}" stroke="#333333"/>')
        parts.append(f'<line x1="{margin_l}" y1="{top}" x2="{margin_l}" y2="{base_y}" stroke="#333333"/>')
        for tick in (0, 25, 50, 75, 100):
            y = base_y - plot_h * tick / 100
            parts.append(
                f'<text x="{margin_l - 6}" y="{y + 4:.1f}" text-anchor="end" font-family="sans-serif" font-size="10">{tick}</text>'
            )
            parts.append(f'<line x1="{margin_l}" y1="{y:.1f}" x2="{margin_l + len(mine) * group_w}" y2="{y:.1f}" stroke="#dddddd"/>')
        for g, c in enumerate(mine):
            gx = margin_l + g * group_w + 6
            for s, (label, color, opacity, value) in enumerate(series):
                v = max(0.0, min(100.0, value(c)))
                h = plot_h * v / 100
                parts.append(
                    f'<rect x="{gx + s * bar_w:.1f}" y="{base_y - h:.1f}" width="{bar_w - 1:.1f}" height="{h:.1f}" '
                    f'fill="{color}" fill-opacity="{opacity}"><title>{escape(label)}: {v:.2f}%</title></rect>'
                )
            parts.append(
                f'<text x="{gx + (group_w - 12) / 2:.1f}" y="{base_y + 14}" text-anchor="middle" font-family="sans-serif" '
                f'font-size="9">{c.student_count}</text>'
            )
            parts.append(
                f'<text x="{gx + (group_w - 12) / 2:.1f}" y="{base_y + 26}" text-anchor="middle" font-family="sans-serif" '
                f'font-size="9">{c.runtime / 60:g} min</text>'
            )
        lx = margin_l + len(mine) * group_w + 16
        for s, (label, color, opacity, _) in enumerate(series):
            y = top + 10 + s * 18
            parts.append(f'<rect x="{lx}" y="{y - 9}" width="12" height="12" fill="{color}" fill-opacity="{opacity}"/>')
            parts.append(f'<text x="{lx + 18}" y="{y + 1}" font-family="sans-serif" font-size="11">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
