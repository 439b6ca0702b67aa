"""Report rendering: standalone ROC SVG documents and the model comparison
table (text plus machine-readable rows)."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .evaluation import RocCurve

_SIZE = 500
_LEFT, _TOP = 70.0, 30.0
_SPAN = 400.0


def _fx(value: float) -> float:
    return _LEFT + _SPAN * value


def _fy(value: float) -> float:
    return _TOP + _SPAN * (1.0 - value)


def render_roc_svg(curve: RocCurve, title: str) -> str:
    """Standalone SVG: unit axes, the ROC polyline, a chance diagonal, and
    the AUC annotated to two decimals."""
    ticks = [i / 5 for i in range(6)]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE}" '
        f'viewBox="0 0 {_SIZE} {_SIZE}">',
        f'<rect width="{_SIZE}" height="{_SIZE}" fill="white"/>',
        f'<text x="{_fx(0.5):.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{escape(title)}</text>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{_SPAN}" height="{_SPAN}" '
        'fill="none" stroke="black"/>',
    ]
    for t in ticks:
        parts.append(
            f'<line x1="{_fx(t):.1f}" y1="{_fy(0) + 4:.1f}" x2="{_fx(t):.1f}" '
            f'y2="{_fy(0):.1f}" stroke="black"/>'
            f'<text x="{_fx(t):.1f}" y="{_fy(0) + 18:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{t:.1f}</text>'
            f'<line x1="{_LEFT - 4:.1f}" y1="{_fy(t):.1f}" x2="{_LEFT}" '
            f'y2="{_fy(t):.1f}" stroke="black"/>'
            f'<text x="{_LEFT - 8:.1f}" y="{_fy(t) + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{t:.1f}</text>'
        )
    parts.append(
        f'<text x="{_fx(0.5):.1f}" y="{_fy(0) + 40:.1f}" text-anchor="middle" '
        'font-family="sans-serif" font-size="13">False positive rate</text>'
        f'<text x="22" y="{_fy(0.5):.1f}" text-anchor="middle" '
        'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 22 {_fy(0.5):.1f})">True positive rate</text>'
    )
    parts.append(
        f'<line x1="{_fx(0):.1f}" y1="{_fy(0):.1f}" x2="{_fx(1):.1f}" y2="{_fy(1):.1f}" '
        'stroke="gray" stroke-dasharray="6,4"/>'
    )
    polyline = " ".join(f"{_fx(x):.2f},{_fy(y):.2f}" for x, y in curve.points)
    parts.append(
        f'<polyline points="{polyline}" fill="none" stroke="#1565c0" stroke-width="2"/>'
    )
    parts.append(
        f'<text x="{_fx(0.95):.1f}" y="{_fy(0.06):.1f}" text-anchor="end" '
        f'font-family="sans-serif" font-size="14">AUC = {curve.auc:.2f}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def summarize_comparison(model_entries: list[dict]) -> tuple[str, list[dict]]:
    """Comparison table over per-model report entries, best accuracy first.

    Returns (text table, machine rows). Machine rows carry raw values; the
    text renders accuracy as a percentage to 2 decimals, AUC to 2, and
    precision/recall/F1 to 3.
    """
    if not model_entries:
        raise ValueError("no model entries to compare")
    rows = []
    for entry in model_entries:
        m = entry["metrics"]
        rows.append(
            {
                "model": entry["kind"],
                "accuracy_pct": m["accuracy"] * 100.0,
                "auc": entry["roc"]["auc"],
                "precision": m["precision"],
                "recall": m["recall"],
                "f1": m["f1"],
            }
        )
    rows.sort(key=lambda r: -r["accuracy_pct"])
    header = f"{'model':<16} {'accuracy %':>10} {'AUC':>6} {'precision':>9} {'recall':>7} {'F1':>6}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r['model']:<16} {r['accuracy_pct']:>10.2f} {r['auc']:>6.2f} "
            f"{r['precision']:>9.3f} {r['recall']:>7.3f} {r['f1']:>6.3f}"
        )
    return "\n".join(lines) + "\n", rows
