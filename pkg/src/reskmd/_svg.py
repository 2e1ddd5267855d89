"""Minimal deterministic SVG line charts.

Hand-rolled so that identical inputs produce byte-identical files (no
timestamps, no library version strings). Fixed-precision coordinates.
"""

_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#ff7f0e",
    "#9467bd",
    "#8c564b",
    "#7f7f7f",
)

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 64, 16, 28, 44


def _fmt(v):
    return f"{v:.2f}"


def _ticks(lo, hi, n=5):
    if hi == lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def line_chart(path, series, title="", xlabel="", ylabel=""):
    """Write a multi-series line chart.

    ``series`` is a list of ``(label, xs, ys)`` with equal-length
    sequences; colors cycle through a fixed palette.
    """
    xs_all = [float(x) for _, xs, _ in series for x in xs]
    ys_all = [float(y) for _, _, ys in series for y in ys]
    if not xs_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def sx(x):
        return _ML + (float(x) - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        return _MT + ph - (float(y) - y_lo) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#333333" stroke-width="1"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_W // 2}" y="18" font-family="sans-serif" font-size="13" '
            f'text-anchor="middle">{_esc(title)}</text>'
        )
    for tx in _ticks(x_lo, x_hi):
        parts.append(
            f'<text x="{_fmt(sx(tx))}" y="{_H - _MB + 16}" font-family="sans-serif" '
            f'font-size="10" text-anchor="middle">{_fmt(tx)}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        parts.append(
            f'<text x="{_ML - 6}" y="{_fmt(sy(ty) + 3)}" font-family="sans-serif" '
            f'font-size="10" text-anchor="end">{_fmt(ty)}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{_W // 2}" y="{_H - 8}" font-family="sans-serif" '
            f'font-size="11" text-anchor="middle">{_esc(xlabel)}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="14" y="{_H // 2}" font-family="sans-serif" font-size="11" '
            f'text-anchor="middle" transform="rotate(-90 14 {_H // 2})">'
            f"{_esc(ylabel)}</text>"
        )
    legend_y = _MT + 12
    for i, (label, xs, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.2"/>'
        )
        if label and len(series) <= 12:
            parts.append(
                f'<text x="{_ML + pw - 6}" y="{legend_y}" font-family="sans-serif" '
                f'font-size="10" text-anchor="end" fill="{color}">'
                f"{_esc(label)}</text>"
            )
            legend_y += 12
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


def _esc(text):
    return (
        str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
