"""Minimal SVG step plots of sampled paths, with an inset of the index function."""

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 800, 450
INSET_PANEL = 230
MARGIN = dict(left=70, right=20, top=30, bottom=45)
MAX_COLUMNS = 2000


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=10 * mag)
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + 0.5 * step, step)


def _decimate(t, v, columns):
    """Keep first, min, max and last value of every pixel column so the jump envelope survives."""
    if t.size <= 2 * columns:
        return t, v
    edges = np.linspace(t[0], t[-1], columns + 1)
    col = np.clip(np.searchsorted(edges, t, side="right") - 1, 0, columns - 1)
    starts = np.flatnonzero(np.diff(np.concatenate(([-1], col))))
    ends = np.append(starts[1:], t.size)
    keep = set()
    for s, e in zip(starts, ends):
        seg = v[s:e]
        keep.update((s, e - 1, s + int(np.argmin(seg)), s + int(np.argmax(seg))))
    idx = np.array(sorted(keep))
    return t[idx], v[idx]


def _step_points(t, v, sx, sy):
    pts = [f"{sx(t[0]):.2f},{sy(v[0]):.2f}"]
    for k in range(1, t.size):
        x = sx(t[k])
        pts.append(f"{x:.2f},{sy(v[k - 1]):.2f}")
        pts.append(f"{x:.2f},{sy(v[k]):.2f}")
    return " ".join(pts)


def step_plot_svg(t, values, title="", alpha=None, t_end=None):
    """SVG text for a right-continuous step plot of ``values`` at times ``t``.

    With ``alpha`` (an index model) an inset shows ``alpha(z)`` over the range
    of values the path visits.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if t_end is not None and t_end > t[-1]:
        t, v = np.append(t, t_end), np.append(v, v[-1])
    t, v = _decimate(t, v, MAX_COLUMNS)
    width = WIDTH + (INSET_PANEL if alpha is not None else 0)
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
    tlo, thi = float(t[0]), float(t[-1]) if t[-1] > t[0] else float(t[0]) + 1.0
    vlo, vhi = float(v.min()), float(v.max())
    if vhi - vlo < 1e-12:
        vlo, vhi = vlo - 1.0, vhi + 1.0
    pad = 0.05 * (vhi - vlo)
    vlo, vhi = vlo - pad, vhi + pad

    def sx(tt):
        return x0 + (tt - tlo) / (thi - tlo) * (x1 - x0)

    def sy(vv):
        return y0 + (vv - vlo) / (vhi - vlo) * (y1 - y0)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{HEIGHT}" '
        f'viewBox="0 0 {width} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
    ]
    for tick in _nice_ticks(tlo, thi):
        if tlo <= tick <= thi:
            x = sx(tick)
            out.append(f'<line x1="{x:.2f}" y1="{y0}" x2="{x:.2f}" y2="{y0 + 5}" stroke="black"/>')
            out.append(f'<text x="{x:.2f}" y="{y0 + 18}" text-anchor="middle">{tick:g}</text>')
    for tick in _nice_ticks(vlo, vhi):
        tick = 0.0 if abs(tick) < 1e-12 * (vhi - vlo) else tick
        if vlo <= tick <= vhi:
            y = sy(tick)
            out.append(f'<line x1="{x0 - 5}" y1="{y:.2f}" x2="{x0}" y2="{y:.2f}" stroke="black"/>')
            out.append(f'<text x="{x0 - 8}" y="{y + 4:.2f}" text-anchor="end">{tick + 0.0:.4g}</text>')
    out.append(f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 8}" text-anchor="middle">t</text>')
    if title:
        out.append(f'<text x="{(x0 + x1) / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    out.append(f'<polyline fill="none" stroke="steelblue" stroke-width="1" '
               f'points="{_step_points(t, v, sx, sy)}"/>')
    if alpha is not None:
        out.append(_inset(alpha, vlo, vhi, WIDTH + 20))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _inset(alpha, vlo, vhi, left):
    """``alpha(z)`` over the plotted value range, drawn sideways so ``z`` shares the main vertical axis."""
    w, h = INSET_PANEL - 50, HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    ox, oy = left, MARGIN["top"]
    z = np.linspace(vlo, vhi, 300)
    a = np.asarray(alpha.raw(z), dtype=float)

    def ix(aa):
        return ox + aa * w

    def iy(zz):
        return oy + h - (zz - vlo) / (vhi - vlo) * h

    pts = " ".join(f"{ix(aa):.2f},{iy(zz):.2f}" for zz, aa in zip(z, a))
    return "\n".join([
        f'<g class="inset"><rect x="{ox}" y="{oy}" width="{w}" height="{h}" fill="white" stroke="gray"/>',
        f'<polyline fill="none" stroke="firebrick" stroke-width="1.2" points="{pts}"/>',
        f'<text x="{ox + w / 2}" y="18" font-size="11" text-anchor="middle">{escape(alpha.label)}</text>',
        f'<text x="{ox}" y="{oy + h + 16}" font-size="10" text-anchor="middle">0</text>',
        f'<text x="{ox + w / 2}" y="{oy + h + 16}" font-size="10" text-anchor="middle">alpha(z)</text>',
        f'<text x="{ox + w}" y="{oy + h + 16}" font-size="10" text-anchor="middle">1</text></g>',
    ])


def write_step_plot(path, sampled, title="", alpha=None):
    with open(path, "w") as fh:
        fh.write(step_plot_svg(sampled.grid, sampled.values, title, alpha))
