"""Minimal SVG line plots: stacked panels of polylines, no plotting dependency."""
import numpy as np

WIDTH, PANEL_H, PAD = 640, 220, 48


def _panel(t, y, top, label, log_y):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if log_y:
        y = np.log10(np.maximum(np.abs(y), 1e-300))
    ok = np.isfinite(t) & np.isfinite(y)
    t, y = t[ok], y[ok]
    parts = [f'<rect x="{PAD}" y="{top}" width="{WIDTH - 2 * PAD}" height="{PANEL_H - PAD}" '
             'fill="none" stroke="#888"/>']
    title = f"log10 {label}" if log_y else label
    parts.append(f'<text x="{PAD}" y="{top - 6}" font-size="12">{title} vs t</text>')
    if t.size == 0:
        return parts
    t0, t1 = t.min(), t.max()
    y0, y1 = y.min(), y.max()
    tspan = t1 - t0 or 1.0
    yspan = y1 - y0 or 1.0
    px = PAD + (t - t0) / tspan * (WIDTH - 2 * PAD)
    py = top + (PANEL_H - PAD) - (y - y0) / yspan * (PANEL_H - PAD)
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f5fa8" stroke-width="1.2"/>')
    parts.append(f'<text x="4" y="{top + 12}" font-size="10">{y1:.4g}</text>')
    parts.append(f'<text x="4" y="{top + PANEL_H - PAD}" font-size="10">{y0:.4g}</text>')
    parts.append(f'<text x="{WIDTH - PAD}" y="{top + PANEL_H - PAD + 14}" font-size="10" '
                 f'text-anchor="end">t = {t1:.4g}</text>')
    return parts


def trace_svg(trace):
    """Energy and (log) projected-gradient norm against t for a FlowTrace."""
    height = 2 * PANEL_H + PAD
    body = ['<svg xmlns="http://www.w3.org/2000/svg" '
            f'width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">']
    body += _panel(trace.t, trace.energy, PAD // 2 + 10, "energy", False)
    body += _panel(trace.t, trace.pgrad_norm, PANEL_H + PAD // 2 + 10, "pgrad_norm", True)
    body.append("</svg>")
    return "\n".join(body) + "\n"
