"""Hamiltonian flows of Im p, escape functions, and deformed ellipticity.

The escape function follows the time-averaging recipe
    G(rho) = chi_cut(rho) * (-int_0^inf chi_T(t) Re p(Phi_t rho) dt
                             + int_0^inf chi_T(t) Re p(Phi_-t rho) dt)
along the flow Phi_t of H_{Im p}. Under Re p >= 0 plus nontrapping this gives
H_{Im p} G = 2 Re p + int chi_T'(t) (Re p(Phi_t) + Re p(Phi_-t)) dt <= -c
on the zero set, which is checked numerically rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .symbols import Box, GevreySymbol, ModelInstance, smooth_step

FLOW_BOX_HALF_WIDTH = 50.0
DEFAULT_DT = 1e-2
MAX_FLOW_STEPS = 1_000_000


class GeometryConfigError(ValueError):
    pass


class EscapeConstructionError(RuntimeError):
    """Raised when the constructed G fails H_{Im p} G < 0 on the zero set."""

    def __init__(self, message: str, offending_point: Tuple[float, float]):
        super().__init__(message)
        self.offending_point = offending_point


class CoverageError(ValueError):
    pass


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    points: np.ndarray  # shape (len(times), 2)
    energy_drift: float
    truncated: bool


@dataclass(frozen=True)
class EscapeField:
    x_axis: np.ndarray
    xi_axis: np.ndarray
    G_values: np.ndarray   # shape (len(x_axis), len(xi_axis))
    HG_values: np.ndarray  # same shape, H_{Im p} G by flow differencing
    margin_c: float
    cutoff_radius: float
    cutoff_center: Tuple[float, float]
    model_tag: str
    T: float

    @property
    def sample_points(self) -> np.ndarray:
        X, K = np.meshgrid(self.x_axis, self.xi_axis, indexing="ij")
        return np.stack([X, K], axis=-1)

    def _interp(self, values: np.ndarray):
        return RegularGridInterpolator((self.x_axis, self.xi_axis), values,
                                       method="cubic", bounds_error=True)

    def _outside_support(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        r = np.hypot(x - self.cutoff_center[0], xi - self.cutoff_center[1])
        return r >= self.cutoff_radius

    def _eval_fields(self, fields, x, xi):
        """Interpolate lattice fields; G and its gradient vanish outside the
        cutoff ball, so points there evaluate to zero without lattice
        coverage; anything else out of range is a coverage error."""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        x, xi = np.broadcast_arrays(x, xi)
        inside = (
            (x >= self.x_axis[0]) & (x <= self.x_axis[-1])
            & (xi >= self.xi_axis[0]) & (xi <= self.xi_axis[-1]))
        if not np.all(inside | self._outside_support(x, xi)):
            k = int(np.argmax(~(inside | self._outside_support(x, xi))))
            raise CoverageError(
                "escape lattice does not cover requested point "
                f"({x.ravel()[k]:.4f}, {xi.ravel()[k]:.4f}) inside the cutoff ball")
        pts = np.stack([np.where(inside, x, self.x_axis[0]),
                        np.where(inside, xi, self.xi_axis[0])], axis=-1)
        out = []
        for f in fields:
            vals = self._interp(f)(pts)
            out.append(np.where(inside, vals, 0.0))
        return out

    def g_at(self, x, xi) -> np.ndarray:
        """Interpolated G; zero outside the cutoff ball by compact support."""
        return self._eval_fields([self.G_values], x, xi)[0]

    def grad_g_at(self, x, xi) -> Tuple[np.ndarray, np.ndarray]:
        """Lattice-gradient of G (centered differences) interpolated to points."""
        gx, gxi = _lattice_gradient(self.G_values, self.x_axis, self.xi_axis)
        out = self._eval_fields([gx, gxi], x, xi)
        return out[0], out[1]

    @property
    def sup_G(self) -> float:
        return float(np.abs(self.G_values).max())


@dataclass(frozen=True)
class DeformationCheck:
    t: float
    gamma_measured: float
    omega_box: Box
    ext_order: int
    worst_point: Tuple[float, float]


def _hamiltonian_im(sym: GevreySymbol, x: np.ndarray, xi: np.ndarray):
    gx, gxi = sym.grad(x, xi)
    return np.imag(gxi), -np.imag(gx)


def _rk4_step(sym: GevreySymbol, x, xi, dt: float):
    k1x, k1k = _hamiltonian_im(sym, x, xi)
    k2x, k2k = _hamiltonian_im(sym, x + 0.5 * dt * k1x, xi + 0.5 * dt * k1k)
    k3x, k3k = _hamiltonian_im(sym, x + 0.5 * dt * k2x, xi + 0.5 * dt * k2k)
    k4x, k4k = _hamiltonian_im(sym, x + dt * k3x, xi + dt * k3k)
    return (x + dt * (k1x + 2 * k2x + 2 * k3x + k4x) / 6.0,
            xi + dt * (k1k + 2 * k2k + 2 * k3k + k4k) / 6.0)


def flow(sym: GevreySymbol, rho0: Tuple[float, float], t_max: float,
         dt: float = DEFAULT_DT) -> Trajectory:
    """RK4 integration of the H_{Im p} flow from a single phase-space point.

    Negative t_max integrates backward. Leaving the box [-50, 50]^2 stops
    the integration and sets the truncated flag; escape to infinity is
    information about the flow, not a failure.
    """
    if not dt > 0:
        raise GeometryConfigError(f"dt must be positive, got {dt}")
    n_steps = int(round(abs(t_max) / dt))
    if n_steps > MAX_FLOW_STEPS:
        raise GeometryConfigError(
            f"step budget exceeded: {n_steps} > {MAX_FLOW_STEPS}")
    step = dt * np.sign(t_max) if t_max != 0 else dt
    x = np.asarray([rho0[0]], dtype=float)
    xi = np.asarray([rho0[1]], dtype=float)
    times = [0.0]
    pts = [(float(x[0]), float(xi[0]))]
    truncated = False
    for k in range(n_steps):
        x, xi = _rk4_step(sym, x, xi, step)
        times.append((k + 1) * step)
        pts.append((float(x[0]), float(xi[0])))
        if abs(x[0]) > FLOW_BOX_HALF_WIDTH or abs(xi[0]) > FLOW_BOX_HALF_WIDTH:
            truncated = True
            break
    points = np.asarray(pts)
    im_p = np.imag(np.asarray(sym.value(points[:, 0], points[:, 1])))
    drift = float(np.abs(im_p - im_p[0]).max())
    return Trajectory(np.asarray(times), points, drift, truncated)


def _flow_batch(sym: GevreySymbol, x0: np.ndarray, xi0: np.ndarray,
                n_steps: int, dt: float):
    """Vectorized RK4 over a batch; yields the state after every step.

    Points that leave the escape box are frozen in place so the batch can
    keep stepping; for the catalog models the field is bounded and frozen
    tails contribute a constant Re p to downstream quadratures.
    """
    x = x0.copy()
    xi = xi0.copy()
    active = np.ones(x.shape, dtype=bool)
    for _ in range(n_steps):
        xn, kn = _rk4_step(sym, x, xi, dt)
        x = np.where(active, xn, x)
        xi = np.where(active, kn, xi)
        active &= (np.abs(x) <= FLOW_BOX_HALF_WIDTH) & (np.abs(xi) <= FLOW_BOX_HALF_WIDTH)
        yield x, xi


def nontrapping_check(model: ModelInstance, delta: float = 1e-3,
                      epsilon: float = 0.05, T: float = 10.0,
                      dt: float = DEFAULT_DT, resolution: int = 41) -> dict:
    """Verify every numerical zero point escapes to Re p > epsilon by time T."""
    sym = model.symbol
    box = sym.zero_set_hint
    if box is None:
        raise GeometryConfigError("model has no zero-set hint box to sample")
    (xlo, xhi), (klo, khi) = box
    X, K = np.meshgrid(np.linspace(xlo, xhi, resolution),
                       np.linspace(klo, khi, resolution), indexing="ij")
    vals = np.asarray(sym.value(X, K))
    mask = np.abs(vals - model.z0) <= delta
    if not mask.any():
        raise GeometryConfigError(
            f"no lattice points with |p - z0| <= {delta}; refine the lattice")
    x0 = X[mask].ravel()
    k0 = K[mask].ravel()
    n_steps = int(round(T / dt))
    escape_time = np.full(x0.shape, np.inf)
    for sign in (1.0, -1.0):
        t = 0.0
        for x, xi in _flow_batch(sym, x0, k0, n_steps, sign * dt):
            t += dt
            hit = np.real(np.asarray(sym.value(x, xi))) > epsilon
            escape_time = np.where(hit & (t < escape_time), t, escape_time)
    ok = bool(np.all(np.isfinite(escape_time)))
    worst = float(escape_time.max()) if ok else float("inf")
    return {"ok": ok, "worst_escape_time": worst, "n_zero_points": int(mask.sum())}


def _chi_T(T: float, t: np.ndarray) -> np.ndarray:
    """Smooth time cutoff: 1 on [0, T], supported on [0, 2T]."""
    return 1.0 - smooth_step(np.asarray(t, dtype=float) / T - 1.0)


def _chi_cut(center: Tuple[float, float], r_inner: float, r_outer: float,
             x: np.ndarray, xi: np.ndarray) -> np.ndarray:
    r = np.hypot(np.asarray(x) - center[0], np.asarray(xi) - center[1])
    return 1.0 - smooth_step((r - r_inner) / (r_outer - r_inner))


def _escape_integral(sym: GevreySymbol, x0: np.ndarray, xi0: np.ndarray,
                     T: float, dt: float) -> np.ndarray:
    """-int chi_T Re p(Phi_t) dt + int chi_T Re p(Phi_-t) dt, trapezoid in t."""
    n_steps = int(round(2.0 * T / dt))
    t_nodes = dt * np.arange(n_steps + 1)
    w = _chi_T(T, t_nodes) * dt
    w[0] *= 0.5
    w[-1] *= 0.5
    total = np.zeros(x0.shape)
    for sign in (1.0, -1.0):
        acc = w[0] * np.real(np.asarray(sym.value(x0, xi0)))
        for k, (x, xi) in enumerate(_flow_batch(sym, x0, xi0, n_steps, sign * dt)):
            acc = acc + w[k + 1] * np.real(np.asarray(sym.value(x, xi)))
        total = total - sign * acc
    return total


def _deriv_1d(values: np.ndarray, spacing: float, axis: int) -> np.ndarray:
    """Fourth-order centered first derivative, second-order at the edges."""
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12.0 * spacing)
    out[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2.0 * spacing)
    out[1] = (v[2] - v[0]) / (2.0 * spacing)
    out[-2] = (v[-1] - v[-3]) / (2.0 * spacing)
    out[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2.0 * spacing)
    return np.moveaxis(out, 0, axis)


def _lattice_gradient(values: np.ndarray, x_axis: np.ndarray,
                      xi_axis: np.ndarray):
    gx = _deriv_1d(values, float(x_axis[1] - x_axis[0]), axis=0)
    gxi = _deriv_1d(values, float(xi_axis[1] - xi_axis[0]), axis=1)
    return gx, gxi


def _default_lattice(box: Box) -> Box:
    """Square box covering the cutoff ball of radius 2x the hint diagonal,
    so the sampled lattice plus compact support determine G everywhere."""
    (xlo, xhi), (klo, khi) = box
    cx, ck = 0.5 * (xlo + xhi), 0.5 * (klo + khi)
    r = 2.0 * float(np.hypot(xhi - xlo, khi - klo)) * 1.01
    return ((cx - r, cx + r), (ck - r, ck + r))


def build_escape(model: ModelInstance, T: float = 4.0,
                 lattice: Optional[Box] = None, n_x: int = 129, n_xi: int = 129,
                 dt: float = DEFAULT_DT, zero_tol: float = 1e-3) -> EscapeField:
    """Construct the escape function on a phase-space lattice and certify it.

    margin_c is -max of H_{Im p} G over the numerical zero set
    {|p - z0| <= zero_tol}; a nonpositive margin raises, reporting the
    offending zero point, since the downstream deformation has no
    ellipticity gain without it.
    """
    sym = model.symbol
    hint = sym.zero_set_hint
    if hint is None:
        raise GeometryConfigError("model has no zero-set hint box")
    if lattice is None:
        lattice = _default_lattice(hint)
    (xlo, xhi), (klo, khi) = lattice
    x_axis = np.linspace(xlo, xhi, n_x)
    xi_axis = np.linspace(klo, khi, n_xi)
    X, K = np.meshgrid(x_axis, xi_axis, indexing="ij")

    (hxlo, hxhi), (hklo, hkhi) = hint
    center = (0.5 * (hxlo + hxhi), 0.5 * (hklo + hkhi))
    diag = float(np.hypot(hxhi - hxlo, hkhi - hklo))
    r_outer = 2.0 * diag

    xf = X.ravel()
    kf = K.ravel()
    # three staggered batches: lattice points and their images one flow step
    # forward/backward, so H_{Im p} G comes from differencing G along the flow
    xp, kp = _rk4_step(sym, xf, kf, dt)
    xm, km = _rk4_step(sym, xf, kf, -dt)
    bx = np.concatenate([xf, xp, xm])
    bk = np.concatenate([kf, kp, km])
    raw = _escape_integral(sym, bx, bk, T, dt)
    G_all = _chi_cut(center, diag, r_outer, bx, bk) * raw
    m = xf.size
    G = G_all[:m].reshape(X.shape)
    HG = ((G_all[m:2 * m] - G_all[2 * m:]) / (2.0 * dt)).reshape(X.shape)

    vals = np.asarray(sym.value(X, K))
    zero_mask = np.abs(vals - model.z0) <= zero_tol
    if not zero_mask.any():
        raise GeometryConfigError(
            f"no lattice points with |p - z0| <= {zero_tol}")
    hg_zero = HG[zero_mask]
    margin_c = float(-hg_zero.max())
    field = EscapeField(x_axis, xi_axis, G, HG, margin_c, r_outer, center,
                        model.tag, T)
    if margin_c <= 0:
        k_bad = int(np.argmax(hg_zero))
        bad = (float(X[zero_mask][k_bad]), float(K[zero_mask][k_bad]))
        raise EscapeConstructionError(
            f"H_(Im p) G = {hg_zero.max():.3e} >= 0 at zero point {bad}; "
            "escape construction failed (trapped model?)", bad)
    return field


def check_deformed_ellipticity(model: ModelInstance, esc: EscapeField,
                               t: float, ext_order: int = 2,
                               omega_box: Optional[Box] = None) -> DeformationCheck:
    """Measure gamma = min Re p~(rho + i t H_G(rho)) / |t| over the box Omega.

    H_G comes from centered differences of the escape lattice. The check
    requires t < 0; at t = 0 the quotient is undefined.
    """
    if not t < 0:
        raise GeometryConfigError(f"deformation size must be negative, got {t}")
    if omega_box is None:
        omega_box = model.symbol.zero_set_hint
        if omega_box is None:
            raise GeometryConfigError("no Omega box available")
    gx, gxi = _lattice_gradient(esc.G_values, esc.x_axis, esc.xi_axis)
    X, K = np.meshgrid(esc.x_axis, esc.xi_axis, indexing="ij")
    # H_G = (d_xi G, -d_x G); keep one-cell margin where the differences
    # are one-sided
    (oxlo, oxhi), (oklo, okhi) = omega_box
    mask = np.zeros(X.shape, dtype=bool)
    mask[1:-1, 1:-1] = True
    mask &= (X >= oxlo) & (X <= oxhi) & (K >= oklo) & (K <= okhi)
    if not mask.any():
        raise GeometryConfigError("Omega box misses the escape lattice")
    hx = gxi[mask]
    hk = -gx[mask]
    from .symbols import taylor_extension
    ext = taylor_extension(model.symbol, ext_order,
                           (X[mask], K[mask]), (t * hx, t * hk))
    quot = np.real(ext) / abs(t)
    k_min = int(np.argmin(quot))
    gamma = float(quot[k_min])
    return DeformationCheck(t, gamma, omega_box, ext_order,
                            (float(X[mask][k_min]), float(K[mask][k_min])))


def escape_csv_lines(field: EscapeField) -> List[str]:
    lines = ["x,xi,G,HG"]
    for i, x in enumerate(field.x_axis):
        for j, k in enumerate(field.xi_axis):
            lines.append(f"{x:.17g},{k:.17g},"
                         f"{field.G_values[i, j]:.17g},{field.HG_values[i, j]:.17g}")
    return lines


def summary_dict(field: EscapeField, check: Optional[DeformationCheck] = None) -> dict:
    out = {"model": field.model_tag, "T": field.T, "margin_c": field.margin_c,
           "cutoff_radius": field.cutoff_radius, "sup_G": field.sup_G}
    if check is not None:
        out.update({"t": check.t, "gamma_measured": check.gamma_measured,
                    "ext_order": check.ext_order})
    return out
