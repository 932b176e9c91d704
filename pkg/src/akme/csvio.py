"""CSV ingestion and emission of point patterns.

Two layouts are understood, both comma separated with a header row:

* single: columns ``x,y``
* replicated: columns ``pattern_id,x,y`` (``pattern_id`` is an opaque string)

Extra columns are ignored. Lines starting with ``#`` are comments; a comment of
the form ``# window=xmin,ymin,xmax,ymax`` declares the observation window.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from akme.embedding import PointPattern, Window
from akme.errors import PatternParseError

WINDOW_TAG = "window="


def _parse_window_comment(text: str, lineno: int, path) -> Window | None:
    body = text.lstrip("#").strip()
    if not body.startswith(WINDOW_TAG):
        return None
    try:
        return parse_window(body[len(WINDOW_TAG):])
    except ValueError as exc:
        raise PatternParseError(f"{path}:{lineno}: bad window declaration: {exc}") from None


def parse_window(text: str) -> Window:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise PatternParseError(f"window needs 4 comma-separated numbers, got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise PatternParseError(f"window needs 4 comma-separated numbers, got {text!r}") from None
    return Window(*vals)


def _read_rows(path, required):
    """Yield (lineno, record) pairs and return the declared window."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PatternParseError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise PatternParseError(f"{path}: not valid UTF-8") from None
    window = None
    header = None
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            w = _parse_window_comment(stripped, lineno, path)
            if w is not None:
                window = w
            continue
        fields = next(csv.reader([line]))
        if header is None:
            header = [f.strip().lower() for f in fields]
            missing = [c for c in required if c not in header]
            if missing:
                raise PatternParseError(f"{path}:{lineno}: header lacks column(s) {', '.join(missing)}")
            idx = [header.index(c) for c in required]
            continue
        if len(fields) != len(header):
            raise PatternParseError(
                f"{path}:{lineno}: expected {len(header)} fields, found {len(fields)}")
        rows.append((lineno, [fields[i].strip() for i in idx]))
    if header is None:
        raise PatternParseError(f"{path}: missing header row")
    return rows, window


def _coord(value, lineno, path, name):
    try:
        v = float(value)
    except ValueError:
        raise PatternParseError(f"{path}:{lineno}: {name}={value!r} is not a number") from None
    if not np.isfinite(v):
        raise PatternParseError(f"{path}:{lineno}: {name}={value!r} is not finite")
    return v


def read_points(path):
    """Single layout. Returns ``(points, declared_window_or_None)``."""
    rows, window = _read_rows(path, ("x", "y"))
    pts = np.array([[_coord(x, ln, path, "x"), _coord(y, ln, path, "y")] for ln, (x, y) in rows],
                   dtype=float).reshape(-1, 2)
    return pts, window


def read_replicated(path):
    """Replicated layout. Returns ``({pattern_id: points}, window)`` with ids in
    order of first appearance."""
    rows, window = _read_rows(path, ("pattern_id", "x", "y"))
    groups: dict[str, list] = {}
    for ln, (pid, x, y) in rows:
        if pid == "":
            raise PatternParseError(f"{path}:{ln}: empty pattern_id")
        groups.setdefault(pid, []).append((_coord(x, ln, path, "x"), _coord(y, ln, path, "y")))
    return {k: np.array(v, dtype=float).reshape(-1, 2) for k, v in groups.items()}, window


def bounding_window(*point_sets) -> Window:
    pts = np.vstack([np.asarray(p, dtype=float).reshape(-1, 2) for p in point_sets])
    if pts.shape[0] == 0:
        raise PatternParseError("cannot infer a window from empty data")
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    if not np.all(hi > lo):
        raise PatternParseError("points span a degenerate bounding box; pass an explicit window")
    return Window(lo[0], lo[1], hi[0], hi[1])


def normalized_window(window: Window) -> Window:
    """Aspect-preserving image of ``window`` with its longest side mapped to 1."""
    L = window.longest_side
    return Window(0.0, 0.0, window.width / L, window.height / L)


def format_pattern(pat: PointPattern, pattern_id=None) -> str:
    buf = io.StringIO()
    write_patterns(buf, [pat] if pattern_id is None else {pattern_id: pat}, replicated=pattern_id is not None)
    return buf.getvalue()


def write_patterns(fh, patterns, replicated=False):
    """Write one pattern (single layout) or a mapping id -> pattern
    (replicated layout). Floats use ``repr`` so values round-trip exactly."""
    if replicated:
        items = list(patterns.items()) if isinstance(patterns, dict) else list(enumerate(patterns))
        windows = {p.window for _, p in items}
    else:
        items = [(None, patterns[0] if isinstance(patterns, list) else patterns)]
        windows = {items[0][1].window}
    if len(windows) != 1:
        raise PatternParseError("all patterns written to one file must share a window")
    w = windows.pop()
    fh.write(f"# {WINDOW_TAG}{','.join(repr(v) for v in w.as_tuple())}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["pattern_id", "x", "y"] if replicated else ["x", "y"])
    for pid, pat in items:
        for x, y in pat.points:
            row = [repr(float(x)), repr(float(y))]
            writer.writerow([str(pid)] + row if replicated else row)
