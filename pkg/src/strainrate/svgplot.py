"""Minimal SVG scatter emitter for Bland-Altman plots.

Writes the plot directly as SVG text (points, mean-difference line, dashed
limits of agreement) so report generation needs no plotting dependency.
Output is deterministic for identical inputs.
"""

import numpy as np

_WIDTH, _HEIGHT = 640.0, 480.0
_LEFT, _RIGHT, _TOP, _BOTTOM = 70.0, 20.0, 42.0, 52.0


def _axis_range(lo, hi):
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.06 * (hi - lo)
    return lo - pad, hi + pad


def _fmt(x):
    return f"{x:.2f}"


def bland_altman_svg(points, mean_diff, loa_lower, loa_upper, title,
                     x_label="mean of schemes", y_label="difference (1/s)") -> str:
    """SVG document for a Bland-Altman scatter with mean and LoA lines."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    x_lo, x_hi = _axis_range(float(pts[:, 0].min()), float(pts[:, 0].max()))
    y_values = np.concatenate([pts[:, 1], [mean_diff, loa_lower, loa_upper]])
    y_lo, y_hi = _axis_range(float(y_values.min()), float(y_values.max()))

    plot_w = _WIDTH - _LEFT - _RIGHT
    plot_h = _HEIGHT - _TOP - _BOTTOM

    def sx(x):
        return _LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y):
        return _TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH:.0f}" '
        f'height="{_HEIGHT:.0f}" viewBox="0 0 {_WIDTH:.0f} {_HEIGHT:.0f}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{_WIDTH / 2:.0f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
        f'<rect x="{_fmt(_LEFT)}" y="{_fmt(_TOP)}" width="{_fmt(plot_w)}" '
        f'height="{_fmt(plot_h)}" fill="none" stroke="black" stroke-width="1"/>',
    ]

    for tick in np.linspace(x_lo, x_hi, 5):
        px = sx(tick)
        out.append(
            f'<line x1="{_fmt(px)}" y1="{_fmt(_TOP + plot_h)}" x2="{_fmt(px)}" '
            f'y2="{_fmt(_TOP + plot_h + 5)}" stroke="black" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(px)}" y="{_fmt(_TOP + plot_h + 20)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{tick:.4g}</text>'
        )
    for tick in np.linspace(y_lo, y_hi, 5):
        py = sy(tick)
        out.append(
            f'<line x1="{_fmt(_LEFT - 5)}" y1="{_fmt(py)}" x2="{_fmt(_LEFT)}" '
            f'y2="{_fmt(py)}" stroke="black" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(_LEFT - 8)}" y="{_fmt(py + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{tick:.4g}</text>'
        )

    out.append(
        f'<text x="{_fmt(_LEFT + plot_w / 2)}" y="{_fmt(_HEIGHT - 12)}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="13">{x_label}</text>'
    )
    out.append(
        f'<text x="16" y="{_fmt(_TOP + plot_h / 2)}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 16 {_fmt(_TOP + plot_h / 2)})">{y_label}</text>'
    )

    for label, value, dash in (
        ("mean", mean_diff, None),
        ("LoA upper", loa_upper, "6 4"),
        ("LoA lower", loa_lower, "6 4"),
    ):
        py = sy(value)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(
            f'<line x1="{_fmt(_LEFT)}" y1="{_fmt(py)}" x2="{_fmt(_LEFT + plot_w)}" '
            f'y2="{_fmt(py)}" stroke="crimson" stroke-width="1.2"{dash_attr}/>'
        )
        out.append(
            f'<text x="{_fmt(_LEFT + plot_w - 4)}" y="{_fmt(py - 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10" fill="crimson">'
            f"{label} = {value:.4g}</text>"
        )

    for x, y in pts:
        out.append(
            f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="2.5" '
            'fill="steelblue" fill-opacity="0.65"/>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"
