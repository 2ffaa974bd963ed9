"""Deterministic exporters, flat configuration files and the on-disk result cache."""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
import threading
from dataclasses import dataclass
from html import escape
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .bands import BandSet

log = logging.getLogger(__name__)

__all__ = [
    "fmt_float", "export_csv", "export_json", "bands_table", "write_bands_csv",
    "load_config", "CacheKey", "Cache", "default_cache_dir", "bandset_to_payload",
    "bandset_from_payload", "svg_document", "svg_bands", "svg_curve", "svg_scan",
    "export_svg", "CACHE_FORMAT",
]

CACHE_FORMAT = "1"


def fmt_float(x) -> str:
    """17 significant digits, so that every double reads back exactly."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def _atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def export_csv(path, header: list[str], rows) -> Path:
    """Write a CSV with fixed float formatting and '\\n' line ends."""
    lines = [",".join(header)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    _atomic_write(Path(path), ("\n".join(lines) + "\n").encode())
    return Path(path)


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else fmt_float(v)
    if isinstance(x, Path):
        return str(x)
    return x


def export_json(path, obj) -> Path:
    text = json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"
    _atomic_write(Path(path), text.encode())
    return Path(path)


def bands_table(bs: BandSet) -> tuple[list[str], list[tuple]]:
    rows = [(bs.level, i, lo, hi) for i, (lo, hi) in enumerate(bs.intervals)]
    return ["level", "band_index", "lo", "hi"], rows


def write_bands_csv(path, bs: BandSet) -> Path:
    return export_csv(path, *bands_table(bs))


# ---------------------------------------------------------------------- config

def load_config(path) -> dict:
    """Read a flat key = value TOML file; nested tables are rejected."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read config {path}: {exc.strerror}") from exc
    for k, v in data.items():
        if isinstance(v, dict):
            raise ValueError(f"config {path}: nested table [{k}] is not supported")
    return {k.replace("-", "_"): v for k, v in data.items()}


# ----------------------------------------------------------------------- cache

def _round12(x):
    if isinstance(x, float):
        return float(f"{x:.12g}")
    if isinstance(x, (list, tuple)):
        return [_round12(v) for v in x]
    if isinstance(x, dict):
        return {k: _round12(v) for k, v in sorted(x.items())}
    return x


@dataclass(frozen=True)
class CacheKey:
    kind: str
    params: dict
    level: int
    op: str
    version: str = f"{__version__}/{CACHE_FORMAT}"

    def digest(self) -> str:
        canon = json.dumps({"kind": self.kind, "params": _round12(self.params),
                            "level": int(self.level), "op": self.op, "version": self.version},
                           sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def default_cache_dir() -> Path:
    env = os.environ.get("TRACESPEC_CACHE")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "tracespec"


class Cache:
    """JSON payloads under ``root``, one file per key, checksummed.

    Reads of a damaged entry log a warning, delete it and report a miss.
    """

    def __init__(self, root=None, enabled: bool = True):
        self.root = Path(root) if root is not None else default_cache_dir()
        self.enabled = enabled
        self._lock = threading.Lock()
        self.hits = self.misses = 0

    def _path(self, key: CacheKey) -> Path:
        d = key.digest()
        return self.root / d[:2] / f"{d}.json"

    def get(self, key: CacheKey):
        if not self.enabled:
            return None
        path = self._path(key)
        if not path.exists():
            self.misses += 1
            return None
        try:
            doc = json.loads(path.read_text())
            body = json.dumps(doc["payload"], sort_keys=True)
            if doc["sha256"] != hashlib.sha256(body.encode()).hexdigest() or doc["key"] != key.digest():
                raise ValueError("checksum mismatch")
        except (ValueError, KeyError, TypeError, OSError) as exc:
            log.warning("corrupt cache entry %s (%s); recomputing", path, exc)
            try:
                path.unlink()
            except OSError:
                pass
            self.misses += 1
            return None
        self.hits += 1
        return doc["payload"]

    def put(self, key: CacheKey, payload) -> None:
        if not self.enabled:
            return
        payload = _plain(payload)
        body = json.dumps(payload, sort_keys=True)
        doc = {"key": key.digest(), "sha256": hashlib.sha256(body.encode()).hexdigest(),
               "payload": payload}
        with self._lock:
            _atomic_write(self._path(key), json.dumps(doc, sort_keys=True).encode())


def _mpf_pack(x) -> list:
    # exact binary value as [signed mantissa (hex), exponent]
    sign, man, exp, _ = x._mpf_
    return [hex(-man if sign else man), int(exp)]


def _mpf_unpack(v):
    import mpmath
    from mpmath.libmp import from_man_exp
    return mpmath.mp.make_mpf(from_man_exp(int(v[0], 16), int(v[1])))


def bandset_to_payload(bs: BandSet) -> dict:
    out = {"level": bs.level, "intervals": bs.intervals.tolist(), "counts": bs.counts.tolist(),
           "raw": bs.raw.tolist(), "window": list(bs.window) if bs.window else None}
    if bs.exact is not None:
        out["exact"] = [[_mpf_pack(a) for a in row] for row in bs.exact]
    return out


def bandset_from_payload(d: dict, model=None) -> BandSet:
    exact = None
    if d.get("exact") is not None:
        exact = np.array([[_mpf_unpack(v) for v in row] for row in d["exact"]],
                         dtype=object).reshape(-1, 2)
    return BandSet(int(d["level"]), np.array(d["intervals"], float).reshape(-1, 2),
                   np.array(d["counts"], int), np.array(d["raw"], float).reshape(-1, 2),
                   model, tuple(d["window"]) if d.get("window") else None, {}, exact)


# ------------------------------------------------------------------------- svg

_W, _H, _PAD = 720, 420, 48


def svg_document(width: int, height: int, body: list[str], title: str = "") -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">')
    parts = [head, f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
                     f'font-size="13">{escape(title)}</text>')
    return "\n".join(parts + body + ["</svg>"]) + "\n"


def _scale(v, lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return a + (np.asarray(v, float) - lo) / span * (b - a)


def _axis_labels(x0, x1, y0, y1, xlabel, ylabel, box) -> list[str]:
    bx0, by0, bx1, by1 = box
    return [
        f'<rect x="{bx0}" y="{by0}" width="{bx1 - bx0}" height="{by1 - by0}" fill="none" stroke="#444"/>',
        f'<text x="{bx0}" y="{by1 + 14}">{x0:.6g}</text>',
        f'<text x="{bx1}" y="{by1 + 14}" text-anchor="end">{x1:.6g}</text>',
        f'<text x="{(bx0 + bx1) / 2:.1f}" y="{by1 + 30}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="{bx0 - 4}" y="{by1}" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{bx0 - 4}" y="{by0 + 8}" text-anchor="end">{y1:.4g}</text>',
        f'<text x="12" y="{(by0 + by1) / 2:.1f}" transform="rotate(-90 12 {(by0 + by1) / 2:.1f})" '
        f'text-anchor="middle">{escape(ylabel)}</text>',
    ]


def svg_bands(bandsets: list[BandSet], title: str = "band covers") -> str:
    """One row of bars per level."""
    lo = min(b.lo for b in bandsets)
    hi = max(b.hi for b in bandsets)
    box = (_PAD + 20, 30, _W - 20, _H - _PAD)
    row_h = (box[3] - box[1]) / max(1, len(bandsets))
    body = _axis_labels(lo, hi, 0, 0, "energy", "", box)[:4]
    for r, bs in enumerate(bandsets):
        y = box[1] + r * row_h + 0.2 * row_h
        body.append(f'<text x="{box[0] - 4}" y="{y + 0.4 * row_h:.1f}" text-anchor="end">k={bs.level}</text>')
        xs = _scale(bs.intervals, lo, hi, box[0], box[2])
        for a, b in xs:
            body.append(f'<rect x="{a:.3f}" y="{y:.2f}" width="{max(b - a, 0.5):.3f}" '
                        f'height="{0.6 * row_h:.2f}" fill="#1f4e9a"/>')
    return svg_document(_W, _H, body, title)


def svg_curve(E, xyz, title: str = "initial conditions") -> str:
    """Three projections (x,y), (y,z), (x,z) side by side."""
    xyz = np.asarray(xyz, float)
    w = 3 * 300 + 40
    body = []
    names = ("x", "y", "z")
    for panel, (i, j) in enumerate(((0, 1), (1, 2), (0, 2))):
        x0 = 40 + panel * 300
        box = (x0 + 30, 40, x0 + 280, 300)
        u, v = xyz[:, i], xyz[:, j]
        ulo, uhi = float(np.min(u)), float(np.max(u))
        vlo, vhi = float(np.min(v)), float(np.max(v))
        body += _axis_labels(ulo, uhi, vlo, vhi, names[i], names[j], box)
        px = _scale(u, ulo, uhi, box[0], box[2])
        py = _scale(v, vlo, vhi, box[3], box[1])
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        body.append(f'<polyline points="{pts}" fill="none" stroke="#b03020" stroke-width="0.6"/>')
    sub = f"E in [{float(np.min(E)):.6g}, {float(np.max(E)):.6g}]"
    body.append(f'<text x="{w / 2:.1f}" y="340" text-anchor="middle">{escape(sub)}</text>')
    return svg_document(w, 360, body, title)


def svg_scan(xs, ys, values, flags, xlabel: str, ylabel: str, title: str = "scan") -> str:
    """Grid map coloured by ``values``; flagged points get a ring."""
    xs, ys, values = (np.asarray(a, float) for a in (xs, ys, values))
    box = (_PAD + 20, 30, _W - 20, _H - _PAD)
    body = _axis_labels(xs.min(), xs.max(), ys.min(), ys.max(), xlabel, ylabel, box)
    finite = values[np.isfinite(values)]
    vlo, vhi = (finite.min(), finite.max()) if len(finite) else (0.0, 1.0)
    px = _scale(xs, xs.min(), xs.max(), box[0] + 8, box[2] - 8)
    py = _scale(ys, ys.min(), ys.max(), box[3] - 8, box[1] + 8)
    for x, y, v, f in zip(px, py, values, flags):
        t = float(_scale(v, vlo, vhi, 0.0, 1.0)) if np.isfinite(v) else 0.0
        colour = f"rgb({int(255 * t)},{int(80 + 100 * (1 - t))},{int(255 * (1 - t))})"
        body.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="5" fill="{colour}"/>')
        if f:
            body.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="8" fill="none" stroke="black"/>')
    return svg_document(_W, _H, body, title)


def export_svg(path, document: str) -> Path:
    _atomic_write(Path(path), document.encode())
    return Path(path)
