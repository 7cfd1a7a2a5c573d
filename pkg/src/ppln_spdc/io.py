"""File formats: versioned CSV tables, binary PGM images and measured scan files.

CSV layout::

    # ppln_spdc csv v1 schema=<name>
    # config={...}            effective configuration, compact sorted JSON
    # <key>=<value>           zero or more metadata lines
    col_a,col_b,...
    1.0,2.0,...

Floats are written with ``repr`` so values round-trip exactly and reruns are
byte-identical. Nothing time-dependent goes into a header.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AnalysisError

CSV_MAGIC = "# ppln_spdc csv v1"
NF_TAG = "NF"
FF_TAG = "FF"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _meta_value(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float, np.integer, np.floating)):
        return _fmt(v)
    return json.dumps(v, sort_keys=True, separators=(",", ":"))


def write_csv(path, schema: str, columns: list[str], rows, config: dict | None = None, meta: dict | None = None) -> Path:
    """Write a table with the versioned header; ``rows`` is any 2-D iterable."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{CSV_MAGIC} schema={schema}"]
    if config is not None:
        lines.append("# config=" + json.dumps(config, sort_keys=True, separators=(",", ":")))
    for key, value in (meta or {}).items():
        lines.append(f"# {key}={_meta_value(value)}")
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, header has {len(columns)}")
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@dataclass(frozen=True)
class CsvTable:
    schema: str | None
    meta: dict
    columns: list[str]
    data: np.ndarray

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.columns.index(name)]
        except ValueError:
            raise KeyError(f"no column {name!r}; have {self.columns}") from None


def read_csv(path) -> CsvTable:
    """Parse a CSV written by :func:`write_csv` (or a plain comma-separated table)."""
    text = Path(path).read_text(encoding="utf-8")
    schema = None
    meta: dict = {}
    columns: list[str] | None = None
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s[1:].strip()
            if s.startswith(CSV_MAGIC):
                for tok in s[len(CSV_MAGIC):].split():
                    if tok.startswith("schema="):
                        schema = tok[len("schema="):]
            elif "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        if columns is None:
            columns = [c.strip() for c in s.split(",")]
            continue
        fields = s.split(",")
        if len(fields) != len(columns):
            raise ValueError(f"{path}: line {lineno}: {len(fields)} fields, header has {len(columns)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise ValueError(f"{path}: line {lineno}: {exc}") from exc
    if columns is None:
        raise ValueError(f"{path}: no header row")
    data = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    return CsvTable(schema, meta, columns, data)


def write_pgm(path, image, bits: int = 8) -> Path:
    """Binary (P5) portable graymap scaled so the image maximum maps to full scale."""
    if bits not in (8, 16):
        raise ValueError(f"PGM depth must be 8 or 16 bits, got {bits}")
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("PGM needs a 2-D image")
    if np.any(~np.isfinite(img)) or np.any(img < 0):
        raise ValueError("PGM pixels must be finite and non-negative")
    maxval = 255 if bits == 8 else 65535
    peak = img.max()
    scaled = np.zeros_like(img) if peak == 0 else np.rint(img / peak * maxval)
    raw = scaled.astype(np.uint8 if bits == 8 else ">u2").tobytes()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    h, w = img.shape
    path.write_bytes(f"P5\n{w} {h}\n{maxval}\n".encode("ascii") + raw)
    return path


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM written by :func:`write_pgm` (no comment lines)."""
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    return np.frombuffer(parts[4], dtype=dtype, count=w * h).reshape(h, w)


@dataclass(frozen=True)
class MeasuredScan:
    """Singles recorded on a rectangular raster.

    ``counts[a, b]`` are the detected counts per dwell at (x_um[a], y_um[b]).
    With ``detector_coordinates`` the axes are fiber positions in µm;
    otherwise they are already physical (µm in the near field, rad/µm in the
    far field).
    """

    domain: str
    x_um: np.ndarray
    y_um: np.ndarray
    counts: np.ndarray
    dwell_s: float
    detector_coordinates: bool = True
    temperature_c: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.domain not in (NF_TAG, FF_TAG):
            raise ValueError(f"domain tag must be NF or FF, got {self.domain!r}")
        if not self.dwell_s > 0:
            raise ValueError("dwell time must be positive")
        c = np.asarray(self.counts, dtype=float)
        if c.shape != (np.size(self.x_um), np.size(self.y_um)):
            raise ValueError("counts shape does not match the coordinate axes")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("counts must be finite and non-negative")


def _uniform_step(axis: np.ndarray, name: str) -> float:
    if axis.size < 2:
        raise AnalysisError(f"{name} axis needs at least two positions")
    d = np.diff(axis)
    if not np.allclose(d, d[0], rtol=1e-6, atol=0):
        raise AnalysisError(f"{name} positions are not uniformly spaced")
    return float(d[0])


def axis_steps(scan: MeasuredScan) -> tuple[float, float]:
    return _uniform_step(np.asarray(scan.x_um), "x"), _uniform_step(np.asarray(scan.y_um), "y")


def _truthy(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_measured_scan(path) -> MeasuredScan:
    """Load a singles scan: columns ``x_um, y_um`` and ``counts`` or ``singles_cps``.

    Header fields: ``domain`` (NF|FF, required), ``dwell_s`` (required),
    ``detector_coordinates`` (default true), ``T_c``, and ``scale`` (rate
    units per stored value, default 1; files written normalized carry their
    peak rate here). ``counts`` must be non-negative integers; rates are
    converted to counts as rate·scale·dwell.
    """
    table = read_csv(path)
    meta = table.meta
    try:
        domain = meta["domain"].upper()
        dwell = float(meta["dwell_s"])
    except KeyError as exc:
        raise ValueError(f"{path}: header lacks {exc.args[0]!r}") from None
    detector = _truthy(meta.get("detector_coordinates", "true"))
    t_c = float(meta["T_c"]) if "T_c" in meta else None
    scale = float(meta.get("scale", "1"))
    x = table.column("x_um")
    y = table.column("y_um")
    if "counts" in table.columns:
        v = table.column("counts")
        if np.any(v != np.round(v)):
            raise ValueError(f"{path}: counts must be integers")
        counts = v
    elif "singles_cps" in table.columns:
        counts = table.column("singles_cps") * scale * dwell
    else:
        raise ValueError(f"{path}: needs a 'counts' or 'singles_cps' column")
    if np.any(counts < 0):
        raise ValueError(f"{path}: negative counts")

    xs, ix = np.unique(x, return_inverse=True)
    ys, iy = np.unique(y, return_inverse=True)
    if xs.size * ys.size != x.size:
        raise AnalysisError(f"{path}: {x.size} samples do not form a rectangular {xs.size}×{ys.size} grid")
    grid = np.full((xs.size, ys.size), math.nan)
    grid[ix, iy] = counts
    if np.any(np.isnan(grid)):
        raise AnalysisError(f"{path}: duplicate positions, grid is not rectangular")
    return MeasuredScan(domain, xs, ys, grid, dwell, detector, t_c, dict(meta))
