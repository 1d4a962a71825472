"""Sweep orchestration: h-sweeps, power-law fits, persistence, and summaries.

A sweep walks a decreasing h list, quantizes the model at each h on the
grid rule N(h), measures the spectrum-free radius around z0 and the
resolvent at a half-radius probe, and runs the escape, deformation, and
Toeplitz checks. Rows are written to CSV as they finish so an interrupted
sweep leaves a valid prefix.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import fbi, geometry, quantize, spectral, svgout
from .symbols import ModelInstance, model_from_tag

CSV_HEADER = "h,r,sigma_min_probe,resnorm,margin_c,gamma,toeplitz_res"
XI_PROBE = 1.146  # packet momentum where the model's next-order xi correction vanishes
MAX_EIG_N = 2048
BOUNDED_RESOLVENT_CAP = 1e8
EPS_HALVINGS = 4


class ConfigError(ValueError):
    pass


class FitError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


def _workers() -> int:
    raw = os.environ.get("GPS_WORKERS", "")
    if raw.strip():
        try:
            n = int(raw)
        except ValueError as exc:
            raise ConfigError(f"GPS_WORKERS must be an integer, got {raw!r}") from exc
        return max(1, n)
    return 1


@dataclass(frozen=True)
class SweepConfig:
    model_tag: str
    h_list: Tuple[float, ...]
    half_width_L: float = 4.0
    n_points: Optional[int] = None
    z0: Optional[complex] = None
    epsilon_deform: float = 0.1
    probe_direction: complex = -1.0 + 0.0j
    escape_T: float = 4.0
    with_toeplitz: bool = True
    with_deform: bool = True
    output_dir: str = "."
    seed: int = 0

    def __post_init__(self):
        if not self.h_list:
            raise ConfigError("h_list must be nonempty")
        hs = list(self.h_list)
        if any(not (0 < h <= 1) for h in hs):
            raise ConfigError(f"every h must lie in (0, 1]: {hs}")
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ConfigError(f"h_list must be strictly decreasing: {hs}")
        if not self.half_width_L > 0:
            raise ConfigError("L must be positive")
        if not self.epsilon_deform > 0:
            raise ConfigError("epsilon must be positive")
        if abs(self.probe_direction) == 0:
            raise ConfigError("probe_direction must be nonzero")
        model_from_tag(self.model_tag)  # raises ValueError for unknown tags


_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}


def parse_config(path: Union[str, Path]) -> SweepConfig:
    """Flat key = value lines, UTF-8, # comments, no nesting."""
    kv = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, val = (part.strip() for part in line.split("=", 1))
        kv[key] = val
    try:
        kwargs = {}
        for key, val in kv.items():
            if key == "model":
                kwargs["model_tag"] = val
            elif key == "h_list":
                kwargs["h_list"] = tuple(float(tok) for tok in val.split(","))
            elif key == "L":
                kwargs["half_width_L"] = float(val)
            elif key == "n_points":
                kwargs["n_points"] = int(val)
            elif key == "z0":
                re_s, im_s = val.split(",")
                kwargs["z0"] = complex(float(re_s), float(im_s))
            elif key == "epsilon":
                kwargs["epsilon_deform"] = float(val)
            elif key == "probe_direction":
                re_s, im_s = val.split(",")
                kwargs["probe_direction"] = complex(float(re_s), float(im_s))
            elif key == "escape_T":
                kwargs["escape_T"] = float(val)
            elif key == "toeplitz":
                kwargs["with_toeplitz"] = _BOOL[val.lower()]
            elif key == "deform":
                kwargs["with_deform"] = _BOOL[val.lower()]
            elif key == "output_dir":
                kwargs["output_dir"] = val
            elif key == "seed":
                kwargs["seed"] = int(val)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        if "model_tag" not in kwargs or "h_list" not in kwargs:
            raise ConfigError("config must set both 'model' and 'h_list'")
        return SweepConfig(**kwargs)
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from exc


@dataclass(frozen=True)
class SweepRecord:
    h: float
    free_radius: float
    sigma_min_probe: float
    resolvent_norm: float
    margin_c: float
    gamma_measured: float
    toeplitz_residual: float
    epsilon_used: float = float("nan")
    n_points: int = 0

    def csv_row(self) -> str:
        vals = [self.h, self.free_radius, self.sigma_min_probe,
                self.resolvent_norm, self.margin_c, self.gamma_measured,
                self.toeplitz_residual]
        return ",".join(f"{v:.17g}" for v in vals)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def grid_for(cfg: SweepConfig, h: float, xi_extent: float = 4.0) -> quantize.RealGrid:
    n = cfg.n_points
    if n is None:
        n = max(quantize.required_n_points(cfg.half_width_L, h, xi_extent), 32)
    if n > MAX_EIG_N:
        raise NumericalFailure(
            f"grid rule demands N = {n} > {MAX_EIG_N} at h = {h}")
    return quantize.RealGrid(cfg.half_width_L, n)


def exponent_for(model: ModelInstance) -> float:
    """Free-radius scaling exponent 1 - 1/s; 1 for analytic models."""
    s = model.symbol.order_s
    return 1.0 if math.isinf(s) else 1.0 - 1.0 / s


def toeplitz_probe(model: ModelInstance, esc, h: float, t: float,
                   half_width_L: float = 8.0) -> float:
    """Toeplitz residual on a standard wave-packet pair at momentum XI_PROBE."""
    n = quantize.required_n_points(half_width_L, h, 4.0)
    grid = quantize.RealGrid(half_width_L, max(n, 128))
    cgrid = fbi.default_cgrid(h, re_span=1.5, im_span=2.2, cells_per_width=3.0)
    op = fbi.make_fbi(grid, cgrid, h)
    u = fbi.gaussian_state(grid, h, 0.0, XI_PROBE)
    v = fbi.gaussian_state(grid, h, 0.05, XI_PROBE - 0.03)
    return fbi.toeplitz_residual(model, op, esc, t, u, v)


def _measure_one(cfg: SweepConfig, model: ModelInstance, esc, h: float) -> SweepRecord:
    z0 = cfg.z0 if cfg.z0 is not None else model.z0
    grid = grid_for(cfg, h)
    P = quantize.assemble_weyl(model.symbol, grid, h)
    spec = spectral.eigenvalues(P)
    r = spectral.spectrum_free_radius(spec, z0)
    direction = cfg.probe_direction / abs(cfg.probe_direction)
    z_probe = z0 + direction * (r / 2.0)
    sig = spectral.sigma_min(P, z_probe)
    resnorm = spectral.resolvent_norm(P, z_probe)
    if math.isinf(resnorm):
        z_probe = z0 + direction * (0.75 * r)
        sig = spectral.sigma_min(P, z_probe)
        resnorm = spectral.resolvent_norm(P, z_probe)
        if math.isinf(resnorm):
            raise NumericalFailure(
                f"resolvent singular at both probes for h = {h}")

    margin = esc.margin_c if esc is not None else float("nan")
    gamma = float("nan")
    eps_used = float("nan")
    if cfg.with_deform and esc is not None:
        eps = cfg.epsilon_deform
        for _ in range(EPS_HALVINGS + 1):
            t = -eps * h ** exponent_for(model)
            check = geometry.check_deformed_ellipticity(model, esc, t)
            if check.gamma_measured > 0:
                gamma = check.gamma_measured
                eps_used = eps
                break
            eps *= 0.5
        else:
            gamma = check.gamma_measured
            eps_used = eps
    toep = float("nan")
    if cfg.with_toeplitz:
        toep = toeplitz_probe(model, esc, h, 0.0)
    return SweepRecord(h, r, sig, resnorm, margin, gamma, toep,
                       epsilon_used=eps_used, n_points=grid.n_points)


def run_sweep(cfg: SweepConfig,
              csv_path: Optional[Union[str, Path]] = None) -> List[SweepRecord]:
    """Execute the sweep; failures at single h-points are recorded and
    skipped, and finished rows are flushed to CSV immediately in h order."""
    model = model_from_tag(cfg.model_tag)
    esc = None
    try:
        esc = geometry.build_escape(model, T=cfg.escape_T)
    except (geometry.EscapeConstructionError, geometry.GeometryConfigError):
        esc = None

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if csv_path is None:
        csv_path = out_dir / "sweep.csv"

    records: List[SweepRecord] = []
    workers = _workers()
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        fh.flush()
        if workers == 1:
            futures = [(h, None) for h in cfg.h_list]
            results = ((h, _try_measure(cfg, model, esc, h)) for h, _ in futures)
        else:
            pool = ThreadPoolExecutor(max_workers=workers)
            futs = [(h, pool.submit(_try_measure, cfg, model, esc, h))
                    for h in cfg.h_list]
            results = ((h, f.result()) for h, f in futs)
        for h, rec in results:
            if rec is None:
                continue
            records.append(rec)
            fh.write(rec.csv_row() + "\n")
            fh.flush()
        if workers > 1:
            pool.shutdown()
    return records


def _try_measure(cfg, model, esc, h) -> Optional[SweepRecord]:
    try:
        return _measure_one(cfg, model, esc, h)
    except (NumericalFailure, spectral.SolverError, spectral.BudgetError,
            quantize.ResolutionError, fbi.GridExtentError) as exc:
        print(f"[sweep] h = {h} skipped: {exc}")
        return None


_FIELDS: dict = {
    "free_radius": lambda r: r.free_radius,
    "sigma_min_probe": lambda r: r.sigma_min_probe,
    "resolvent_norm": lambda r: r.resolvent_norm,
    "toeplitz_residual": lambda r: r.toeplitz_residual,
}


def fit_power_law(records: Sequence[SweepRecord],
                  selector: Union[str, Callable]) -> FitResult:
    """Least squares of log(value) on log(h); nonpositive or non-finite
    values are excluded with a warning, and at least 4 must remain."""
    get = _FIELDS[selector] if isinstance(selector, str) else selector
    hs, ys = [], []
    for rec in records:
        v = get(rec)
        if not (np.isfinite(v) and v > 0):
            print(f"[fit] excluding h = {rec.h}: value {v} not positive finite")
            continue
        hs.append(rec.h)
        ys.append(v)
    if len(hs) < 4:
        raise FitError(f"only {len(hs)} usable records, need at least 4")
    x = np.log(np.asarray(hs))
    y = np.log(np.asarray(ys))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(slope), float(intercept), r2, len(hs))


def resolvent_growth_check(records: Sequence[SweepRecord], s: float,
                           bounded_cap: float = BOUNDED_RESOLVENT_CAP) -> dict:
    """Fit log resolvent against h^{-1/s}; a good linear fit or a uniformly
    bounded resolvent both stay within the exponential budget."""
    pts = [(r.h, r.resolvent_norm) for r in records
           if np.isfinite(r.resolvent_norm) and r.resolvent_norm > 0]
    if len(pts) < 2:
        raise FitError("need at least 2 finite resolvent values")
    hs = np.array([p[0] for p in pts])
    rn = np.array([p[1] for p in pts])
    max_norm = float(rn.max())
    bounded = max_norm <= bounded_cap
    if math.isinf(s):
        return {"slope": 0.0, "intercept": float(np.log(max_norm)),
                "r_squared": float("nan"), "regime": "bounded",
                "max_resolvent": max_norm, "pass": bounded}
    x = hs ** (-1.0 / s)
    y = np.log(rn)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    regime = "exponential-fit" if (r2 >= 0.9 and slope > 0) else "bounded"
    return {"slope": float(slope), "intercept": float(intercept),
            "r_squared": r2, "regime": regime, "max_resolvent": max_norm,
            "pass": bool(r2 >= 0.9 or bounded)}


def radius_scaling_summary(records: Sequence[SweepRecord],
                           model: ModelInstance) -> dict:
    """Lower-bound constant and conditional exponent fit for the free radius.

    The exponent band only applies when the spectrum actually approaches z0
    over the sweep (the radius at the smallest h has dropped below half the
    radius at the largest h); otherwise the radius sits in the plateau
    regime and the bound holds with the plateau constant.
    """
    expo = exponent_for(model)
    recs = [r for r in records if np.isfinite(r.free_radius)]
    if not recs:
        raise FitError("no usable radius records")
    ratios = [r.free_radius / r.h ** expo for r in recs]
    c_min = float(min(ratios))
    r_first = recs[0].free_radius
    r_last = recs[-1].free_radius
    approaching = r_last < 0.5 * r_first
    out = {"exponent_target": expo, "c_lower_bound": c_min,
           "radius_min": float(min(r.free_radius for r in recs)),
           "spectrum_approaches_z0": bool(approaching)}
    if approaching and len(recs) >= 4:
        fit = fit_power_law(recs, "free_radius")
        out["radius_fit_slope"] = fit.slope
        out["radius_fit_r2"] = fit.r_squared
        out["exponent_within_band"] = bool(abs(fit.slope - expo) <= 0.15)
    return out


def emit_outputs(cfg: SweepConfig, records: Sequence[SweepRecord],
                 fits: dict,
                 fields: Sequence[Tuple[spectral.PseudospectrumField,
                                        Optional[spectral.SpectrumResult],
                                        Optional[Tuple[complex, float]]]] = ()) -> List[str]:
    """Write the summary JSON and any pseudospectrum SVGs; returns paths."""
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    summary = {
        "model": cfg.model_tag,
        "h_list": list(cfg.h_list),
        "n_records": len(records),
        "fits": fits,
        "records": [rec.csv_row() for rec in records],
    }
    spath = out_dir / "summary.json"
    with open(spath, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    written.append(str(spath))
    for k, (psf, spec, circle) in enumerate(fields):
        g = psf.z_grid
        extent = (g.center.real - g.re_span, g.center.real + g.re_span,
                  g.center.imag - g.im_span, g.center.imag + g.im_span)
        path = str(out_dir / f"pseudospectrum_{k}.svg")
        svgout.heatmap_svg(psf.sigma_min.T, extent, path, log10=True,
                           points=None if spec is None else spec.eigenvalues,
                           circle=circle,
                           title=f"log10 sigma_min, {cfg.model_tag}")
        written.append(path)
    return written
