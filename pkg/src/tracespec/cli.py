"""Command-line front end: ``tracespec <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bands import (
    BandError, compute_bands, covering_check, box_dimension, dimension_window,
    local_thickness, thickness_window,
)
from .io import (
    Cache, CacheKey, bandset_from_payload, bandset_to_payload, default_cache_dir,
    export_csv, export_json, export_svg, load_config, svg_bands, svg_curve, svg_scan,
    write_bands_csv,
)
from .trace import (
    Continuum, Discrete, continuum_block2_half_trace, cos_sqrt, free_curve_distance,
    initial_condition,
)

log = logging.getLogger("tracespec")

COMMANDS = ("bands", "thickness", "dims", "sumset", "dos", "convolve", "scan-mixed",
            "continuum-curve", "verify")

# built-in defaults; a config file overrides these and flags override both
DEFAULTS = {
    "common": {"outdir": ".", "cache_dir": None, "no_cache": False, "workers": 1,
               "verbose": False},
    "bands": {"k": 8, "emin": None, "emax": None, "out": "bands.csv", "svg": None},
    "thickness": {"k": 8, "emin": None, "emax": None, "end": None, "width": None,
                  "out": "thickness.json"},
    "dims": {"k": 8, "emin": None, "emax": None, "out": "dims.json"},
    "sumset": {"k": 8, "emax": 1e5, "out": "sumset.json"},
    "dos": {"k": 8, "emin": None, "emax": None, "out": "dos.csv"},
    "convolve": {"k": 8, "cells": 4096, "emin": None, "emax": None, "out": "convolve.csv",
                 "evidence": "convolve.evidence.json"},
    "scan-mixed": {"k": 8, "p_min": -30.0, "p_max": -10.0, "p_steps": 11, "q_min": 10.0,
                   "q_max": 30.0, "q_steps": 11, "lambda_min": None, "lambda_max": None,
                   "lambda_steps": 1, "out": "scan.csv", "svg": None},
    "continuum-curve": {"emin": 51.0, "emax": 6000.0, "points": 4000, "out": "curve.csv",
                        "svg": None},
    "verify": {"samples": 10000, "seed": 0, "out": None},
}
MODEL_KEYS = ("p", "q", "lam")
PAIR_KEYS = ("p1", "q1", "p2", "q2", "lambda1", "lambda2")


class UsageError(ValueError):
    """Bad command line or configuration."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    """Fully resolved, validated settings of one CLI run."""

    command: str
    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def to_dict(self) -> dict:
        return {"command": self.command, "version": __version__, **self.values}

    def model(self, suffix: str = ""):
        v = self.values
        lam = v.get("lam" if not suffix else f"lambda{suffix}")
        p, q = v.get(f"p{suffix}"), v.get(f"q{suffix}")
        if lam is not None:
            if p is not None or q is not None:
                raise UsageError("give either --p/--q or --lambda, not both")
            return Continuum(float(lam))
        if p is None:
            raise UsageError(f"a model is required: --p{suffix} [--q{suffix}] or --lambda{suffix}")
        return Discrete(float(p), float(0.0 if q is None else q))

    def validate(self) -> "RunConfig":
        v = self.values
        for key in ("p", "p1", "p2"):
            if v.get(key) is not None and float(v[key]) == 0.0:
                raise UsageError(f"{key} must be nonzero")
        for key in ("lam", "lambda1", "lambda2"):
            if v.get(key) is not None and not float(v[key]) > 0.0:
                raise UsageError(f"{key} must be positive")
        if "k" in v and not 1 <= int(v["k"]) <= 16:
            raise UsageError("k must lie in 1..16")
        if v.get("emin") is not None and v.get("emax") is not None and v["emin"] >= v["emax"]:
            raise UsageError("emin must be below emax")
        if int(v.get("workers", 1)) < 1:
            raise UsageError("workers must be >= 1")
        if v.get("cells") is not None and int(v["cells"]) < 16:
            raise UsageError("cells must be >= 16")
        if v.get("end") not in (None, "lo", "hi"):
            raise UsageError("end must be 'lo' or 'hi'")
        return self


def _add_model(p, pair=False):
    if pair:
        for s in ("1", "2"):
            p.add_argument(f"--p{s}", type=float)
            p.add_argument(f"--q{s}", type=float)
            p.add_argument(f"--lambda{s}", type=float, dest=f"lambda{s}")
    else:
        p.add_argument("--p", type=float)
        p.add_argument("--q", type=float)
        p.add_argument("--lambda", type=float, dest="lam")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat TOML file of option = value pairs")
    common.add_argument("--outdir")
    common.add_argument("--cache-dir", dest="cache_dir")
    common.add_argument("--no-cache", dest="no_cache", action="store_const", const=True)
    common.add_argument("--workers", type=int)
    common.add_argument("--verbose", "-v", action="store_const", const=True)

    parser = _Parser(prog="tracespec", description=__doc__)
    parser.add_argument("--version", action="version", version=f"tracespec {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def cmd(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    def window(p):
        p.add_argument("--emin", type=float)
        p.add_argument("--emax", type=float)

    p = cmd("bands", "band cover of one approximant (CSV)")
    _add_model(p); p.add_argument("--k", type=int); window(p)
    p.add_argument("--out"); p.add_argument("--svg")

    p = cmd("thickness", "local thickness of a band cover (JSON)")
    _add_model(p); p.add_argument("--k", type=int); window(p)
    p.add_argument("--end", choices=("lo", "hi"))
    p.add_argument("--width", type=float)
    p.add_argument("--out")

    p = cmd("dims", "box dimension from levels k..k+3 (JSON)")
    _add_model(p); p.add_argument("--k", type=int); window(p); p.add_argument("--out")

    p = cmd("sumset", "classify the sum of two spectra (JSON)")
    _add_model(p, pair=True); p.add_argument("--k", type=int)
    p.add_argument("--emax", type=float); p.add_argument("--out")

    p = cmd("dos", "density of states of one approximant (CSV)")
    _add_model(p); p.add_argument("--k", type=int); window(p); p.add_argument("--out")

    p = cmd("convolve", "convolution of two densities of states (CSV + JSON evidence)")
    _add_model(p, pair=True); p.add_argument("--k", type=int); window(p)
    p.add_argument("--cells", type=int); p.add_argument("--out"); p.add_argument("--evidence")

    p = cmd("scan-mixed", "scan a parameter grid for mixed-regime candidates (CSV)")
    p.add_argument("--k", type=int)
    for name in ("p", "q", "lambda"):
        p.add_argument(f"--{name}-min", type=float, dest=f"{name}_min")
        p.add_argument(f"--{name}-max", type=float, dest=f"{name}_max")
        p.add_argument(f"--{name}-steps", type=int, dest=f"{name}_steps")
    p.add_argument("--out"); p.add_argument("--svg")

    p = cmd("continuum-curve", "curve of initial conditions of the continuum model")
    p.add_argument("--lambda", type=float, dest="lam")
    window(p); p.add_argument("--points", type=int)
    p.add_argument("--out"); p.add_argument("--svg")

    p = cmd("verify", "run the invariant suite and print a pass/fail table")
    p.add_argument("--samples", type=int); p.add_argument("--seed", type=int)
    p.add_argument("--out")
    return parser


def resolve(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    if ns.command is None:
        raise UsageError(f"a subcommand is required: {', '.join(COMMANDS)}")
    flags = {k: v for k, v in vars(ns).items() if v is not None and k not in ("command", "config")}
    known = set(DEFAULTS["common"]) | set(DEFAULTS[ns.command]) | set(MODEL_KEYS) | set(PAIR_KEYS)
    known |= {"lambda"}
    file_vals = {}
    if ns.config:
        file_vals = load_config(ns.config)
        if "lambda" in file_vals:
            file_vals["lam"] = file_vals.pop("lambda")
        unknown = sorted(set(file_vals) - known)
        if unknown:
            raise UsageError(f"unknown config keys for {ns.command}: {', '.join(unknown)}")
    values = {**DEFAULTS["common"], **DEFAULTS[ns.command], **file_vals, **flags}
    if ns.config:
        values["config"] = str(ns.config)
    return RunConfig(ns.command, values).validate()


# ------------------------------------------------------------------- helpers

class Context:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.outdir = Path(cfg.outdir)
        root = cfg.cache_dir if cfg.cache_dir else default_cache_dir()
        self.cache = Cache(root, enabled=not cfg.no_cache)

    def path(self, name) -> Path:
        p = Path(name)
        return p if p.is_absolute() else self.outdir / p

    def bands(self, model, k, window=None):
        if isinstance(model, Continuum) and window is None:
            window = (0.0, model.lam + 50.0)
        params = ({"p": model.p, "q": model.q} if isinstance(model, Discrete)
                  else {"lambda": model.lam})
        params["window"] = list(window) if window is not None else None
        key = CacheKey(model.kind, params, k, "bands")
        t0 = time.perf_counter()
        hit = self.cache.get(key)
        if hit is not None:
            bs = bandset_from_payload(hit, model)
            log.info("bands %r k=%d: cache hit (%.3f s)", model, k, time.perf_counter() - t0)
            return bs
        bs = compute_bands(model, k, window)
        self.cache.put(key, bandset_to_payload(bs))
        log.info("bands %r k=%d: computed (%.3f s)", model, k, time.perf_counter() - t0)
        return bs

    def window(self):
        lo, hi = self.cfg.emin, self.cfg.emax
        return None if lo is None and hi is None else (
            -np.inf if lo is None else lo, np.inf if hi is None else hi)


def _finite_window(bs, window):
    if window is None:
        return bs.lo, bs.hi
    return max(window[0], bs.lo), min(window[1], bs.hi)


def _model_dict(m) -> dict:
    return {"p": m.p, "q": m.q} if isinstance(m, Discrete) else {"lambda": m.lam}


# ------------------------------------------------------------------ commands

def cmd_bands(ctx: Context) -> list[Path]:
    cfg = ctx.cfg
    model = cfg.model()
    window = ctx.window()
    cwin = window if isinstance(model, Discrete) else (
        (max(window[0], 0.0) if window else 0.0,
         window[1] if window and np.isfinite(window[1]) else model.lam + 50.0))
    bs = ctx.bands(model, cfg.k, cwin)
    if isinstance(model, Discrete) and window is not None:
        bs = bs.restrict(*window)
    out = [write_bands_csv(ctx.path(cfg.out), bs)]
    if cfg.svg:
        levels = [ctx.bands(model, j, cwin) for j in range(max(1, cfg.k - 2), cfg.k + 1)]
        if isinstance(model, Discrete) and window is not None:
            levels = [b.restrict(*window) for b in levels]
        out.append(export_svg(ctx.path(cfg.svg), svg_bands(levels, f"{model!r}")))
    print(f"{len(bs)} bands ({int(bs.counts.sum())} before merging) -> {out[0]}")
    return out


def _continuum_window(ctx, model):
    w = ctx.window()
    if isinstance(model, Continuum) and (w is None or not np.all(np.isfinite(w))):
        raise UsageError("continuum models need --emin and --emax")
    return w


def cmd_thickness(ctx: Context) -> list[Path]:
    cfg = ctx.cfg
    model = cfg.model()
    window = _continuum_window(ctx, model)
    if cfg.end:
        covers = [ctx.bands(model, j, window if isinstance(model, Continuum) else None)
                  for j in (cfg.k, cfg.k + 1)]
        w0 = cfg.width or (covers[0].hi - covers[0].lo) / 16.0
        st = thickness_window(covers, cfg.end, w0)
        doc = {"model": _model_dict(model), "level": cfg.k, "end": cfg.end, "tau": st.value,
               "per_level": st.per_level, "window": st.window, "stable": st.stable}
    else:
        bs = ctx.bands(model, cfg.k, window if isinstance(model, Continuum) else None)
        rep = local_thickness(bs, _finite_window(bs, window), snap=False)
        doc = {"model": _model_dict(model), "level": cfg.k, "tau": rep.tau,
               "window": rep.window, "gaps": len(rep.gap_lengths),
               "truncated_bridges": int(np.sum(rep.truncated)) if rep.truncated is not None else 0}
    print(f"tau = {doc['tau']:.6g}")
    return [export_json(ctx.path(cfg.out), doc)]


def cmd_dims(ctx: Context) -> list[Path]:
    cfg = ctx.cfg
    model = cfg.model()
    window = _continuum_window(ctx, model)
    covers = [ctx.bands(model, j, window if isinstance(model, Continuum) else None)
              for j in range(cfg.k, cfg.k + 4)]
    win = _finite_window(covers[-1], window)
    d_all = box_dimension(covers, win)
    d1, d2 = box_dimension(covers[:3], win), box_dimension(covers[-3:], win)
    doc = {"model": _model_dict(model), "levels": [cfg.k, cfg.k + 3], "window": win,
           "dimension": d_all.value, "residual": d_all.residual,
           "first_three": d1.value, "last_three": d2.value, "degenerate": d_all.degenerate,
           "scales": d_all.scales, "counts": d_all.counts}
    print(f"box dimension = {d_all.value:.4f}")
    return [export_json(ctx.path(cfg.out), doc)]


def cmd_sumset(ctx: Context) -> list[Path]:
    from .sumset import classify_pair
    cfg = ctx.cfg
    m1, m2 = cfg.model("1"), cfg.model("2")
    rep = classify_pair(m1, m2, cfg.k, e_max=cfg.emax)
    print(f"verdict: {rep.verdict}")
    return [export_json(ctx.path(cfg.out), rep.to_dict())]


def cmd_dos(ctx: Context) -> list[Path]:
    from .dos import dos_from_bands
    cfg = ctx.cfg
    model = cfg.model()
    window = _continuum_window(ctx, model)
    bs = ctx.bands(model, cfg.k, window if isinstance(model, Continuum) else None)
    m = dos_from_bands(bs)
    rows = [(a, b, w, d) for (a, b), w, d in zip(m.intervals, m.weights, m.density)]
    print(f"{len(rows)} bands, total mass {float(np.sum(m.weights)):.17g}")
    return [export_csv(ctx.path(cfg.out), ["cell_lo", "cell_hi", "mass", "density"], rows)]


def cmd_convolve(ctx: Context) -> list[Path]:
    from .dos import ac_sc_evidence, convolve, dos_from_bands, sum_cover_sequence
    cfg = ctx.cfg
    m1, m2 = cfg.model("1"), cfg.model("2")
    window = ctx.window()
    if any(isinstance(m, Continuum) for m in (m1, m2)):
        window = _continuum_window(ctx, Continuum(1.0))
    lv1 = [ctx.bands(m1, j, window if isinstance(m1, Continuum) else None)
           for j in range(cfg.k, cfg.k + 4)]
    lv2 = [ctx.bands(m2, j, window if isinstance(m2, Continuum) else None)
           for j in range(cfg.k, cfg.k + 4)]
    conv = convolve(dos_from_bands(lv1[0]), dos_from_bands(lv2[0]), int(cfg.cells))
    e = conv.edges
    rows = [(a, b, m, m / conv.width) for a, b, m in zip(e[:-1], e[1:], conv.mass)]
    out = [export_csv(ctx.path(cfg.out), ["cell_lo", "cell_hi", "mass", "density"], rows)]
    ev = ac_sc_evidence(conv, sum_cover_sequence(lv1, lv2))
    doc = {"models": [_model_dict(m1), _model_dict(m2)], "level": cfg.k,
           "total_mass": conv.total, **ev.to_dict()}
    out.append(export_json(ctx.path(cfg.evidence), doc))
    print(f"mass {conv.total:.17g}; thin {ev.mass_on_thin:.4f}; "
          f"density-bounded {ev.density_bounded_mass:.4f}")
    return out


def cmd_scan(ctx: Context) -> list[Path]:
    from .sumset import ScanGrid, scan_grid
    cfg = ctx.cfg
    if cfg.lambda_min is not None:
        grid = ScanGrid(k=cfg.k, lam_range=(cfg.lambda_min, cfg.lambda_max or cfg.lambda_min),
                        lam_steps=cfg.lambda_steps, workers=cfg.workers)
        header = ["lambda", "V_min", "V_max", "tau_local", "dim_local", "candidate"]
    else:
        grid = ScanGrid(p_range=(cfg.p_min, cfg.p_max), q_range=(cfg.q_min, cfg.q_max),
                        p_steps=cfg.p_steps, q_steps=cfg.q_steps, k=cfg.k, workers=cfg.workers)
        header = ["p", "q", "V_min", "V_max", "tau_local", "dim_local", "candidate"]
    res = scan_grid(grid)
    rows = []
    for r in res.rows:
        head = (r.model.lam,) if isinstance(r.model, Continuum) else (r.model.p, r.model.q)
        rows.append(head + (r.v_min, r.v_max, r.tau_local, r.dim_local, r.candidate))
    out = [export_csv(ctx.path(cfg.out), header, rows)]
    if cfg.svg and res.rows and isinstance(res.rows[0].model, Discrete):
        xs = [r.model.p for r in res.rows]
        ys = [r.model.q for r in res.rows]
        vals = [min(r.tau_local, 3.0) if np.isfinite(r.tau_local) else np.nan for r in res.rows]
        out.append(export_svg(ctx.path(cfg.svg),
                              svg_scan(xs, ys, vals, [r.candidate for r in res.rows], "p", "q",
                                       "local thickness (ringed: candidate)")))
    print(f"{len(res.candidates)} candidates out of {len(res.rows)} points "
          f"({len(res.failures)} skipped)")
    for r in res.candidates[:5]:
        print(f"  {r.model!r}: tau {r.tau_local:.4g}, dim {r.dim_local:.4g}")
    return out


def cmd_curve(ctx: Context) -> list[Path]:
    cfg = ctx.cfg
    if cfg.lam is None:
        raise UsageError("--lambda is required")
    model = Continuum(cfg.lam)
    E = np.linspace(cfg.emin, cfg.emax, int(cfg.points))
    x, y = cos_sqrt(E), cos_sqrt(E - cfg.lam)
    z = continuum_block2_half_trace(cfg.lam, E)
    xyz = np.stack([x, y, z], -1)
    dist = free_curve_distance(xyz)
    zm = initial_condition(model, E).z
    rows = list(zip(E, x, y, z, zm, dist))
    out = [export_csv(ctx.path(cfg.out), ["E", "x", "y", "z", "z_prev", "dist_free_curve"], rows)]
    if cfg.svg:
        out.append(export_svg(ctx.path(cfg.svg), svg_curve(E, xyz, f"lambda = {cfg.lam:g}")))
    print(f"{len(E)} points; distance to the free curve: max {dist.max():.4g}, "
          f"median {np.median(dist):.4g}")
    return out


def cmd_verify(ctx: Context) -> list[Path]:
    from .verify import run_checks
    cfg = ctx.cfg
    results = run_checks(samples=int(cfg.samples), seed=int(cfg.seed))
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    if cfg.out:
        export_json(ctx.path(cfg.out), [r.__dict__ for r in results])
    if not all(r.passed for r in results):
        raise VerificationFailed(f"{sum(not r.passed for r in results)} check(s) failed")
    return [ctx.path(cfg.out)] if cfg.out else []


class VerificationFailed(RuntimeError):
    pass


HANDLERS = {"bands": cmd_bands, "thickness": cmd_thickness, "dims": cmd_dims,
            "sumset": cmd_sumset, "dos": cmd_dos, "convolve": cmd_convolve,
            "scan-mixed": cmd_scan, "continuum-curve": cmd_curve, "verify": cmd_verify}

EXIT_CODES = {UsageError: 2, OSError: 3, BandError: 4, VerificationFailed: 5}


def _sidecar(ctx: Context, outputs: list[Path]) -> Path:
    target = outputs[0] if outputs else ctx.outdir / ctx.cfg.command
    path = target.with_name(target.name + ".config.json")
    export_json(path, ctx.cfg.to_dict())
    return path


def run(argv=None) -> int:
    """Run one subcommand; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    cfg = None
    try:
        cfg = resolve(argv)
        logging.basicConfig(level=logging.INFO if cfg.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        ctx = Context(cfg)
        t0 = time.perf_counter()
        outputs = HANDLERS[cfg.command](ctx)
        _sidecar(ctx, outputs)
        log.info("%s finished in %.3f s (cache hits %d, misses %d)", cfg.command,
                 time.perf_counter() - t0, ctx.cache.hits, ctx.cache.misses)
        return 0
    except Exception as exc:  # every failure becomes one structured line on stderr
        code = next((c for t, c in EXIT_CODES.items() if isinstance(exc, t)), 1)
        if isinstance(exc, (ValueError, TypeError)) and code == 1:
            code = 2
        err = {"error": type(exc).__name__, "message": str(exc),
               "command": cfg.command if cfg else (argv[0] if argv else None), "exit_code": code}
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        if cfg is not None and cfg.verbose:
            logging.exception("details")
        return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
