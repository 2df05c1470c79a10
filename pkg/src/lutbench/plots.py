"""Dependency-free SVG figures.

Each file carries its plotted numbers in an XML comment so figures can be
diffed and re-plotted without the run that produced them.
"""

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v):
    return f"{v:.6g}"


def _data_comment(header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) if isinstance(v, float) else str(v) for v in r)
              for r in rows]
    body = "\n".join(lines).replace("--", "- -")
    return f"<!-- data\n{body}\n-->"


def _axis_ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n)


def residual_bands_svg(path, panels, title=""):
    """Per-wavelength relative-residual statistics, one panel per method.

    ``panels`` is a list of ``(label, EvalReport)``. Each panel shows the
    2.5-95.5 % band, the 16-84 % band and the mean residual. The mean of the
    first panel is overlaid on the others as a dashed reference line.
    """
    width, ph, top, left, right, gap = 760, 220, 40, 70, 20, 50
    height = top + len(panels) * (ph + gap)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" font-family="sans-serif" font-size="11">',
           f'<text x="{width / 2}" y="20" text-anchor="middle" '
           f'font-size="14">{escape(title)}</text>']
    ref_mean = panels[0][1].mean_relative if panels else None
    for i, (label, rep) in enumerate(panels):
        wl = rep.wavelengths
        p = rep.percentiles
        qs = sorted(p)
        lo_q, hi_q = qs[0], qs[-1]
        inner = (qs[1], qs[-2]) if len(qs) >= 4 else (lo_q, hi_q)
        y0 = top + i * (ph + gap)
        ymax = float(np.nanmax(p[hi_q])) if np.any(np.isfinite(p[hi_q])) else 1.0
        ymax = max(ymax, float(np.nanmax(ref_mean)) if ref_mean is not None else 0.0)
        ymax = ymax * 1.05 if ymax > 0 else 1.0
        x_lo, x_hi = float(wl[0]), float(wl[-1])
        pw = width - left - right

        def sx(v):
            return left + (v - x_lo) / (x_hi - x_lo or 1.0) * pw

        def sy(v):
            return y0 + ph - min(max(v, 0.0), ymax) / ymax * ph

        def band(a, b, colour, opacity):
            pts = [f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(wl, a)]
            pts += [f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(wl[::-1], b[::-1])]
            return (f'<polygon points="{" ".join(pts)}" fill="{colour}" '
                    f'fill-opacity="{opacity}" stroke="none"/>')

        def line(y, colour, dash=""):
            pts = " ".join(f"{sx(x):.2f},{sy(v):.2f}" for x, v in zip(wl, y)
                           if np.isfinite(v))
            extra = f' stroke-dasharray="{dash}"' if dash else ""
            return (f'<polyline points="{pts}" fill="none" stroke="{colour}" '
                    f'stroke-width="1.2"{extra}/>')

        colour = PALETTE[i % len(PALETTE)]
        out.append(f'<rect x="{left}" y="{y0}" width="{pw}" height="{ph}" '
                   'fill="none" stroke="#444"/>')
        out.append(band(np.nan_to_num(p[lo_q]), np.nan_to_num(p[hi_q]), colour, 0.2))
        out.append(band(np.nan_to_num(p[inner[0]]), np.nan_to_num(p[inner[1]]),
                        colour, 0.4))
        out.append(line(rep.mean_relative, colour))
        if i > 0 and ref_mean is not None:
            out.append(line(ref_mean, "#d62728", "5,3"))
        for t in _axis_ticks(0.0, ymax):
            out.append(f'<text x="{left - 5}" y="{sy(t) + 4:.2f}" '
                       f'text-anchor="end">{t:.3g}</text>')
        for t in _axis_ticks(x_lo, x_hi, 6):
            out.append(f'<text x="{sx(t):.2f}" y="{y0 + ph + 14}" '
                       f'text-anchor="middle">{t:.0f}</text>')
        out.append(f'<text x="{left + 6}" y="{y0 + 14}">{escape(label)} '
                   f'(bands {lo_q:g}-{hi_q:g}% and {inner[0]:g}-{inner[1]:g}%)</text>')
        out.append(f'<text x="15" y="{y0 + ph / 2}" transform="rotate(-90 15 '
                   f'{y0 + ph / 2})" text-anchor="middle">|rel. residual| (%)</text>')
        header = ["wavelength_nm", "mean"] + [f"p{q:g}" for q in qs]
        rows = [[float(wl[k]), float(rep.mean_relative[k])]
                + [float(p[q][k]) for q in qs] for k in range(len(wl))]
        out.append(_data_comment(header, rows))
    out.append(f'<text x="{left + (width - left - right) / 2}" y="{height - 8}" '
               'text-anchor="middle">wavelength (nm)</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def runtime_bars_svg(path, labels, seconds, title="Query time"):
    """Horizontal bar chart on a log scale (runtimes span decades)."""
    seconds = [max(float(s), 1e-6) for s in seconds]
    width, bar, left, right, top = 640, 22, 160, 80, 40
    height = top + len(labels) * (bar + 8) + 30
    lo = np.floor(np.log10(min(seconds)))
    hi = np.ceil(np.log10(max(seconds)))
    hi = hi if hi > lo else lo + 1
    pw = width - left - right

    def sx(v):
        return left + (np.log10(v) - lo) / (hi - lo) * pw

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" font-family="sans-serif" font-size="11">',
           f'<text x="{width / 2}" y="20" text-anchor="middle" '
           f'font-size="14">{escape(title)}</text>']
    for i, (lab, s) in enumerate(zip(labels, seconds)):
        y = top + i * (bar + 8)
        out.append(f'<rect x="{left}" y="{y}" width="{sx(s) - left:.2f}" '
                   f'height="{bar}" fill="{PALETTE[i % len(PALETTE)]}"/>')
        out.append(f'<text x="{left - 6}" y="{y + bar * 0.7}" '
                   f'text-anchor="end">{escape(lab)}</text>')
        out.append(f'<text x="{sx(s) + 4:.2f}" y="{y + bar * 0.7}">{s:.3g} s</text>')
    for e in range(int(lo), int(hi) + 1):
        x = left + (e - lo) / (hi - lo) * pw
        out.append(f'<text x="{x:.2f}" y="{height - 10}" '
                   f'text-anchor="middle">1e{e}</text>')
    out.append(_data_comment(["label", "seconds"],
                             [[lab, float(s)] for lab, s in zip(labels, seconds)]))
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
