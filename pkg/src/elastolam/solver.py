"""Finite-difference solve of the monotone-stress wave problem.

Explicit second-order central scheme for u_tt = (F(u_x))_x on the unit bar
with zero Dirichlet ends, where F is a strictly increasing stress (normally
the modified surrogate).  The solved displacement and its companion field
are wrapped with C^2 tensor splines so the downstream construction can
evaluate values and space-time gradients anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import RectBivariateSpline

__all__ = [
    "GradientBlowup",
    "DomainExit",
    "HorizonEmpty",
    "InitialData",
    "CallableStress",
    "ClassicalField",
    "solve_modified",
    "companion_field",
    "select_time_horizon",
    "discrete_energy",
]


class GradientBlowup(RuntimeError):
    """Smoothness monitor tripped before a usable horizon was reached."""


class DomainExit(RuntimeError):
    """NC mode: the discrete strain reached -1."""


class HorizonEmpty(RuntimeError):
    """Velocity deviation exceeds the bound already at the first level."""


@dataclass(frozen=True)
class InitialData:
    """Initial displacement g and velocity h with zero boundary traces."""

    g: Callable[[np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    g_prime: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        ends = np.array([0.0, 1.0])
        if np.max(np.abs(self.g(ends))) > 1e-12 or np.max(np.abs(self.h(ends))) > 1e-12:
            raise ValueError("g and h must vanish at x = 0 and x = 1")

    @staticmethod
    def from_sine(g_modes, h_modes):
        """Sine-series data: lists of (k, amplitude) pairs."""
        g_modes = [(int(k), float(a)) for k, a in g_modes]
        h_modes = [(int(k), float(a)) for k, a in h_modes]

        def g(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            for k, a in g_modes:
                out += a * np.sin(k * np.pi * x)
            return out

        def gp(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            for k, a in g_modes:
                out += a * k * np.pi * np.cos(k * np.pi * x)
            return out

        def h(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            for k, a in h_modes:
                out += a * np.sin(k * np.pi * x)
            return out

        return InitialData(g=g, h=h, g_prime=gp)


@dataclass(frozen=True)
class CallableStress:
    """Adapter giving a plain stress function the evaluator protocol."""

    f: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]

    def __call__(self, s):
        return self.f(np.asarray(s, dtype=float))

    def derivative(self, s, order: int = 1):
        if order != 1:
            raise ValueError("CallableStress only provides the first derivative")
        return self.d1(np.asarray(s, dtype=float))


@dataclass
class ClassicalField:
    """Grid-sampled backbone with C^2 interpolants.

    ``u``/``v`` are (n_t, n_x) nodal arrays; ``u_x``/``u_t``/``v_t`` are the
    matching nodal derivative arrays used by the region machinery.  The
    splines are built lazily on first off-grid evaluation.
    """

    x: np.ndarray
    t: np.ndarray
    u: np.ndarray
    v: Optional[np.ndarray] = None
    u_x: Optional[np.ndarray] = None
    u_t: Optional[np.ndarray] = None
    v_t: Optional[np.ndarray] = None
    truncated: bool = False
    companion_defect: float = np.nan
    _spl_u: object = field(default=None, repr=False)
    _spl_v: object = field(default=None, repr=False)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def T(self) -> float:
        return float(self.t[-1])

    def _u_spline(self):
        if self._spl_u is None:
            self._spl_u = RectBivariateSpline(self.x, self.t, self.u.T, kx=3, ky=3, s=0)
        return self._spl_u

    def _v_spline(self):
        if self._spl_v is None:
            if self.v is None:
                raise ValueError("companion field not built yet")
            self._spl_v = RectBivariateSpline(self.x, self.t, self.v.T, kx=3, ky=3, s=0)
        return self._spl_v

    def eval_u(self, x, t, dx=0, dt=0):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return self._u_spline().ev(x, t, dx=dx, dy=dt)

    def eval_v(self, x, t, dx=0, dt=0):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return self._v_spline().ev(x, t, dx=dx, dy=dt)

    def gradient(self, x, t):
        """Space-time gradient entries (u_x, u_t, v_x, v_t) at points."""
        return (self.eval_u(x, t, dx=1), self.eval_u(x, t, dt=1),
                self.eval_v(x, t, dx=1), self.eval_v(x, t, dt=1))


def _fd4(arr, h, axis):
    """Uniform fourth-order first derivative along an axis.

    A single stencil order keeps the discretization error a smooth field, so
    derivative checks of integrated quantities stay second order instead of
    picking up O(h) kinks where stencil families would change.
    """
    a = np.moveaxis(arr, axis, 0)
    out = np.empty_like(a)
    out[2:-2] = (-a[4:] + 8.0 * a[3:-1] - 8.0 * a[1:-3] + a[:-4]) / (12.0 * h)
    out[0] = (-25.0 * a[0] + 48.0 * a[1] - 36.0 * a[2] + 16.0 * a[3] - 3.0 * a[4]) / (12.0 * h)
    out[1] = (-3.0 * a[0] - 10.0 * a[1] + 18.0 * a[2] - 6.0 * a[3] + a[4]) / (12.0 * h)
    out[-2] = (3.0 * a[-1] + 10.0 * a[-2] - 18.0 * a[-3] + 6.0 * a[-4] - a[-5]) / (12.0 * h)
    out[-1] = (25.0 * a[-1] - 48.0 * a[-2] + 36.0 * a[-3] - 16.0 * a[-4] + 3.0 * a[-5]) / (12.0 * h)
    return np.moveaxis(out, 0, axis)


def _nodal_x_derivative(arr, dx):
    return _fd4(arr, dx, axis=1)


def _nodal_t_derivative(arr, dt):
    return _fd4(arr, dt, axis=0)


def _flux_divergence(u_row, sigma, dx):
    """Conservative discretization of (F(u_x))_x at interior nodes."""
    s_half = np.diff(u_row) / dx          # strain at cell midpoints
    flux = sigma(s_half)
    return (flux[1:] - flux[:-1]) / dx     # length n_x - 2


def solve_modified(data: InitialData, sigma_star, nx: int, cfl: float,
                   t_request: float, monitor_threshold: float = 1e3,
                   strain_pad: float = 1.0) -> ClassicalField:
    """March the explicit scheme up to t_request or the smoothness monitor.

    The time step is cfl * dx / sqrt(max sampled F'), with F' sampled over
    the initial strain range padded by ``strain_pad``.  The first step is a
    Taylor seed so the scheme stays second order.  Raises GradientBlowup if
    no usable horizon is reached and DomainExit in NC mode when the strain
    hits -1.
    """
    if not 0.0 < cfl < 1.0:
        raise ValueError("cfl must lie in (0, 1)")
    x = np.linspace(0.0, 1.0, nx + 1)
    dx = x[1] - x[0]
    g0 = data.g(x)
    h0 = data.h(x)
    g0[0] = g0[-1] = 0.0
    h0[0] = h0[-1] = 0.0

    s0 = np.diff(g0) / dx
    lo = float(np.min(s0)) - strain_pad
    hi = float(np.max(s0)) + strain_pad
    samples = np.linspace(lo, hi, 2048)
    cmax2 = float(np.max(sigma_star.derivative(samples)))
    if cmax2 <= 0.0:
        raise ValueError("stress derivative not positive on the sampled range")
    dt = cfl * dx / np.sqrt(cmax2)
    n_steps = max(int(round(t_request / dt)), 5)
    dt = t_request / n_steps

    nc_mode = getattr(getattr(sigma_star, "curve", None), "mode", "HE") == "NC"

    rows = [g0]
    u_prev = g0
    div0 = np.zeros_like(g0)
    div0[1:-1] = _flux_divergence(g0, sigma_star, dx)
    u_cur = g0 + dt * h0 + 0.5 * dt * dt * div0
    u_cur[0] = u_cur[-1] = 0.0
    truncated = False

    def monitor_trips(row):
        s = np.diff(row) / dx
        if nc_mode and float(np.min(s)) <= -1.0:
            raise DomainExit("strain reached -1 in NC mode")
        if not np.all(np.isfinite(row)):
            return True
        if len(s) >= 3:
            curv = np.abs(np.diff(s, n=2)) / dx ** 2
            if float(np.max(curv)) > monitor_threshold:
                return True
        smax2 = float(np.max(sigma_star.derivative(s)))
        return smax2 > 0.0 and np.sqrt(smax2) * dt / dx > 1.0

    if monitor_trips(u_cur):
        raise GradientBlowup("monitor tripped on the first step")
    rows.append(u_cur)

    for n in range(1, n_steps):
        div = np.zeros_like(u_cur)
        div[1:-1] = _flux_divergence(u_cur, sigma_star, dx)
        u_next = 2.0 * u_cur - u_prev + dt * dt * div
        u_next[0] = u_next[-1] = 0.0
        if monitor_trips(u_next):
            truncated = True
            break
        rows.append(u_next)
        u_prev, u_cur = u_cur, u_next

    if len(rows) < 5:
        raise GradientBlowup("fewer than five usable time levels")

    u = np.asarray(rows)
    t = dt * np.arange(u.shape[0])
    fld = ClassicalField(x=x, t=t, u=u, truncated=truncated)
    fld.u_x = _nodal_x_derivative(u, dx)
    fld.u_t = _nodal_t_derivative(u, dt)
    return fld


def companion_field(fld: ClassicalField, data: InitialData, sigma_star) -> ClassicalField:
    """Populate the companion field v and report the defect max|v_x - u_t|.

    v(x, t) = integral of h over (0, x) plus the time integral of F(u_x).
    Uses per-cell Simpson for the h-integral and cumulative Simpson in time.
    """
    x, t = fld.x, fld.t
    dx = fld.dx
    # Nodal antiderivative of h, fourth order: Simpson on each cell.
    mid = 0.5 * (x[:-1] + x[1:])
    cell = (data.h(x[:-1]) + 4.0 * data.h(mid) + data.h(x[1:])) * (dx / 6.0)
    H = np.concatenate([[0.0], np.cumsum(cell)])

    flux = sigma_star(fld.u_x)                        # (n_t, n_x)
    v_time = cumulative_simpson(flux, x=t, axis=0, initial=0.0)
    v = H[None, :] + v_time
    fld.v = v
    fld.v_t = flux
    v_x = _nodal_x_derivative(v, dx)
    fld.companion_defect = float(np.max(np.abs(v_x - fld.u_t)))
    fld._spl_v = None
    return fld


def select_time_horizon(fld: ClassicalField, data: InitialData, epsilon: float) -> float:
    """Largest grid time with sup |u_t - h| below epsilon/2 on every level up to it."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    dev = np.max(np.abs(fld.u_t - data.h(fld.x)[None, :]), axis=1)
    bound = 0.5 * epsilon
    bad = np.nonzero(dev >= bound)[0]
    n_ok = (bad[0] - 1) if bad.size else (len(fld.t) - 1)
    if n_ok < 1:
        raise HorizonEmpty(
            f"velocity deviation {dev[min(1, len(dev)-1)]:.3g} >= {bound:.3g} at the first level")
    return float(fld.t[n_ok])


def discrete_energy(fld: ClassicalField, energy_density: Callable[[np.ndarray], np.ndarray]):
    """Trapezoid-in-x energy history: integral of u_t^2/2 + W(u_x)."""
    dens = 0.5 * fld.u_t ** 2 + energy_density(fld.u_x)
    return np.trapezoid(dens, fld.x, axis=1)
