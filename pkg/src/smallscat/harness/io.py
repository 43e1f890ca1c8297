"""CSV and SVG output.

CSV files start with ``#`` provenance lines (config hash, CQ parameters, mesh
ids), then the header row, then data.  Floats are written with ``repr`` so a
read reproduces the in-memory values bit for bit.  Writes go to a temporary
file in the target directory and are renamed into place.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

__all__ = ["atomic_write", "write_csv", "read_csv", "write_loglog_svg"]


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows, provenance: dict | None = None) -> Path:
    buf = io.StringIO()
    for key, value in (provenance or {}).items():
        buf.write(f"# {key}: {value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return atomic_write(path, buf.getvalue())


def read_csv(path):
    """Return ``(provenance, header, columns)`` with numeric columns as float arrays."""
    provenance, lines = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            provenance[key.strip()] = value.strip()
        elif line:
            lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    rows = list(reader)
    columns = {}
    for j, name in enumerate(header):
        col = [r[j] for r in rows]
        try:
            columns[name] = np.array([float(x) for x in col])
        except ValueError:
            columns[name] = col
    return provenance, header, columns


# --------------------------------------------------------------------------- SVG

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _log_ticks(lo, hi):
    return [10.0**k for k in range(int(np.floor(np.log10(lo))), int(np.ceil(np.log10(hi))) + 1)]


def write_loglog_svg(path, series: dict, *, title="", xlabel="epsilon", ylabel="error",
                     references: dict | None = None, note: str = "") -> Path:
    """Log-log line plot; ``series`` maps a label to ``(x, y)`` arrays.

    ``references`` maps a label to ``(x, y)`` drawn dashed (e.g. slope guides).
    """
    W, H, m = 560, 420, 70
    allx = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ally = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    for x, y in (references or {}).values():
        allx = np.concatenate([allx, x])
        ally = np.concatenate([ally, y])
    xlo, xhi = np.log10(allx.min()) - 0.05, np.log10(allx.max()) + 0.05
    ylo, yhi = np.log10(ally.min()) - 0.2, np.log10(ally.max()) + 0.2

    def px(x):
        return m + (np.log10(x) - xlo) / (xhi - xlo) * (W - 1.6 * m)

    def py(y):
        return H - m - (np.log10(y) - ylo) / (yhi - ylo) * (H - 1.6 * m)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{m}" y="{0.6 * m}" width="{W - 1.6 * m}" height="{H - 1.6 * m}" fill="none" stroke="black"/>',
           f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
           f'<text x="{W / 2 - 0.3 * m}" y="{H - 20}" text-anchor="middle">{xlabel}</text>',
           f'<text x="18" y="{H / 2}" text-anchor="middle" transform="rotate(-90 18 {H / 2})">{ylabel}</text>']
    for t in _log_ticks(10**xlo, 10**xhi):
        if xlo <= np.log10(t) <= xhi:
            out.append(f'<text x="{px(t):.1f}" y="{H - m + 16}" text-anchor="middle">{t:g}</text>')
    for t in _log_ticks(10**ylo, 10**yhi):
        if ylo <= np.log10(t) <= yhi:
            out.append(f'<line x1="{m}" x2="{W - 0.6 * m}" y1="{py(t):.1f}" y2="{py(t):.1f}" stroke="#ddd"/>')
            out.append(f'<text x="{m - 6}" y="{py(t) + 4:.1f}" text-anchor="end">{t:.0e}</text>')
    for i, (label, (x, y)) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        out += [f'<circle cx="{px(a):.1f}" cy="{py(b):.1f}" r="3.5" fill="{color}"/>' for a, b in zip(x, y)]
        out.append(f'<text x="{W - 0.6 * m - 150}" y="{0.6 * m + 18 + 16 * i}" fill="{color}">{label}</text>')
    for label, (x, y) in (references or {}).items():
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="gray" stroke-dasharray="5,4"/>')
        out.append(f'<text x="{px(x[-1]) + 4:.1f}" y="{py(y[-1]):.1f}" fill="gray">{label}</text>')
    if note:
        out.append(f"<!-- {note} -->")
    out.append("</svg>\n")
    return atomic_write(path, "\n".join(out))
