"""Deterministic CSV and binary PGM writers."""

from __future__ import annotations

import numpy as np


def format_value(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return ""
    return f"{float(v):.17g}"


def csv_text(header, rows):
    """Comma-separated text: header row, '.' decimals, LF endings."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows):
    text = csv_text(header, rows)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)
    return text


def pgm_bytes(img, lo=0.0, hi=0.5):
    """Binary 8-bit PGM (P5) of a 2D float field clipped to [lo, hi]."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError("PGM export needs a 2D field")
    span = hi - lo
    scaled = np.clip((img - lo) / span, 0.0, 1.0)
    data = np.round(scaled * 255.0).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    return header + data.tobytes()


def write_pgm(path, img, lo=0.0, hi=0.5):
    blob = pgm_bytes(img, lo, hi)
    with open(path, "wb") as fh:
        fh.write(blob)
    return blob
