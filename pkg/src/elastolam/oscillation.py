"""Oscillation profiles and cutoff windows for laminate patches.

The scalar profile is the twice-integrated, mollified pulse train whose
second derivative alternates between the two laminate levels 1-lambda and
-lambda.  Geometry: inside a span [0, L] with end margins m0, N_p pulses of
half-width lambda*h sit at odd multiples of h (period 2h), mollified by a
compactly supported polynomial kernel of half-width w.  Both integrals of
the train vanish exactly (zero mean and zero first moment by symmetry), so
the profile and its slope are compactly supported.

Everything is evaluated in closed form in O(1) per point: the kernel's
antiderivatives are polynomials, completed jumps contribute exact
polynomial far fields, and partial moment sums of the jump set have closed
index formulas.  No tables are stored, so pulse counts in the millions are
as cheap as a dozen.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "InfeasibleAmplitude",
    "TooThin",
    "OscillationProfile",
    "CutoffFunction",
    "build_profile",
    "build_cutoff",
]


class InfeasibleAmplitude(ValueError):
    """No pulse count within the cap meets the requested sup-norm bounds."""


class TooThin(ValueError):
    """Cross-section too small to host the cutoff transition collars."""


# Mollifier rho(z) = c (1 - z^2)^4 on [-1, 1]; R, R1, R2 are its cumulative
# integrals.  R(z >= 1) = 1, R1(z >= 1) = z, R2(z >= 1) = K2 + (z^2 - 1)/2.
_P_RHO = np.polynomial.Polynomial([1, 0, -4, 0, 6, 0, -4, 0, 1]) * (315.0 / 256.0)
_P_R = _P_RHO.integ(lbnd=-1.0)
_P_R1 = _P_R.integ(lbnd=-1.0)
_P_R2 = _P_R1.integ(lbnd=-1.0)
_K2 = float(_P_R2(1.0))


def _kernel_cdf(z):
    z = np.asarray(z, dtype=float)
    out = np.where(z >= 1.0, 1.0, 0.0)
    mid = (z > -1.0) & (z < 1.0)
    if mid.any():
        out = np.where(mid, _P_R(np.clip(z, -1.0, 1.0)), out)
    return out


def _kernel_cdf1(z):
    z = np.asarray(z, dtype=float)
    out = np.where(z >= 1.0, z, 0.0)
    mid = (z > -1.0) & (z < 1.0)
    if mid.any():
        out = np.where(mid, _P_R1(np.clip(z, -1.0, 1.0)), out)
    return out


def _kernel_cdf2(z):
    z = np.asarray(z, dtype=float)
    out = np.where(z >= 1.0, _K2 + 0.5 * (z * z - 1.0), 0.0)
    mid = (z > -1.0) & (z < 1.0)
    if mid.any():
        out = np.where(mid, _P_R2(np.clip(z, -1.0, 1.0)), out)
    return out


@dataclass(frozen=True)
class OscillationProfile:
    """Closed-form mollified pulse-train profile on [0, span].

    The second derivative equals 1-lambda on the pulse plateaus (family I1)
    and -lambda on the gap plateaus (family I2), with |I1| within tau_meas/2
    of lambda*span.  ``delta_amp`` bounds both the profile and its slope.
    """

    lam: float
    span: float
    n_pulses: int
    h: float          # half period
    w: float          # mollifier half-width
    m0: float         # end margin
    delta_amp: float
    tau_meas: float

    @property
    def x_left(self) -> float:
        return self.m0

    @property
    def x_right(self) -> float:
        return self.m0 + 2.0 * self.h * self.n_pulses

    def pulse_centers(self, js):
        return self.x_left + (2.0 * np.asarray(js, dtype=float) - 1.0) * self.h

    # -- jump bookkeeping ---------------------------------------------------

    def _counts(self, y):
        """Numbers of up/down pulse jumps at positions <= y (vectorized).

        Up jumps sit at a_j = x_left + (2j-1)h - lam h, down jumps at
        b_j = x_left + (2j-1)h + lam h, j = 1..n_pulses.
        """
        n = self.n_pulses
        n_a = np.clip(np.floor((y - self.x_left + self.lam * self.h) / (2.0 * self.h) + 0.5), 0, n)
        n_b = np.clip(np.floor((y - self.x_left - self.lam * self.h) / (2.0 * self.h) + 0.5), 0, n)
        return n_a, n_b

    def _moments(self, y):
        """Partial sums of delta, delta*xi, delta*xi^2 over jumps <= y."""
        lam, h = self.lam, self.h
        xl, xr = self.x_left, self.x_right
        n_a, n_b = self._counts(y)
        has_l = (y >= xl).astype(float)
        has_r = (y >= xr).astype(float)
        # Integer difference first so plateau levels round identically for
        # every pulse index.
        m0 = (n_a - n_b) + lam * (has_r - has_l)
        sum_c_a = n_a * xl + h * n_a ** 2           # sum of centers, j<=n_a
        sum_c_b = n_b * xl + h * n_b ** 2
        m1 = (-lam * xl * has_l
              + (sum_c_a - n_a * lam * h)
              - (sum_c_b + n_b * lam * h)
              + lam * xr * has_r)
        sum_c2_a = (n_a * xl ** 2 + 2.0 * xl * h * n_a ** 2
                    + h * h * n_a * (4.0 * n_a ** 2 - 1.0) / 3.0)
        sum_c2_b = (n_b * xl ** 2 + 2.0 * xl * h * n_b ** 2
                    + h * h * n_b * (4.0 * n_b ** 2 - 1.0) / 3.0)
        m2 = (-lam * xl ** 2 * has_l
              + (sum_c2_a - 2.0 * lam * h * sum_c_a + n_a * (lam * h) ** 2)
              - (sum_c2_b + 2.0 * lam * h * sum_c_b + n_b * (lam * h) ** 2)
              + lam * xr ** 2 * has_r)
        return m0, m1, m2

    def _local_jump(self, x):
        """Position and size of the (single) jump within w of x, if any."""
        lam, h, w = self.lam, self.h, self.w
        xl, xr = self.x_left, self.x_right
        j = np.clip(np.round((x - xl) / (2.0 * h) + 0.5), 1, max(self.n_pulses, 1))
        c = xl + (2.0 * j - 1.0) * h
        cand_xi = np.stack([np.full_like(x, xl), c - lam * h, c + lam * h,
                            c - (2.0 - lam) * h, c + (2.0 - lam) * h,
                            np.full_like(x, xr)])
        cand_dl = np.stack([np.full_like(x, -lam), np.ones_like(x), -np.ones_like(x),
                            -np.ones_like(x), np.ones_like(x),
                            np.full_like(x, lam)])
        # Neighbour-pulse jumps c -/+ (2 - lam) h are b_{j-1} and a_{j+1};
        # mask them outside the valid pulse range.
        valid = np.ones_like(cand_xi, dtype=bool)
        valid[3] = j > 1
        valid[4] = j < self.n_pulses
        dist = np.where(valid, np.abs(x - cand_xi), np.inf)
        k = np.argmin(dist, axis=0)
        take = np.take_along_axis
        xi = take(cand_xi, k[None, :], axis=0)[0]
        dl = take(cand_dl, k[None, :], axis=0)[0]
        local = np.abs(x - xi) < self.w
        return xi, dl, local

    # -- evaluators ----------------------------------------------------------

    def _support_mask(self, x):
        return (x > self.x_left - self.w) & (x < self.x_right + self.w)

    def second(self, x):
        """p'' in [-lambda, 1-lambda]; exactly the levels on the plateaus."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        m = self._support_mask(x)
        if m.any():
            xm = x[m]
            cum, _, _ = self._moments(xm - self.w)
            xi, dl, local = self._local_jump(xm)
            z = (xm - xi) / self.w
            out_m = cum + np.where(local, dl * _kernel_cdf(z), 0.0)
            out[m] = out_m
        return out

    def first(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        m = self._support_mask(x)
        if m.any():
            xm = x[m]
            y = xm - self.w
            m0, m1, _ = self._moments(y)
            val = xm * m0 - m1
            xi, dl, local = self._local_jump(xm)
            z = (xm - xi) / self.w
            val = val + np.where(local, dl * self.w * _kernel_cdf1(z), 0.0)
            out[m] = val
        return out

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        m = self._support_mask(x)
        if m.any():
            xm = x[m]
            y = xm - self.w
            m0, m1, m2 = self._moments(y)
            w2 = self.w * self.w
            val = 0.5 * (xm * xm * m0 - 2.0 * xm * m1 + m2) + w2 * (_K2 - 0.5) * m0
            xi, dl, local = self._local_jump(xm)
            z = (xm - xi) / self.w
            val = val + np.where(local, dl * w2 * _kernel_cdf2(z), 0.0)
            out[m] = val
        return out

    # -- recorded interval families -----------------------------------------

    def plateau_margin(self) -> float:
        """Inset from the nominal jump positions to certified plateaus."""
        return self.w * (1.0 + 1e-9) + 64.0 * np.finfo(float).eps * max(1.0, self.span)

    def i1_measure(self) -> float:
        dm = self.plateau_margin()
        per = max(2.0 * self.lam * self.h - 2.0 * dm, 0.0)
        return self.n_pulses * per

    def i2_measure(self) -> float:
        dm = self.plateau_margin()
        full = max(2.0 * (1.0 - self.lam) * self.h - 2.0 * dm, 0.0)
        half = max((1.0 - self.lam) * self.h - 2.0 * dm, 0.0)
        return (self.n_pulses - 1) * full + 2.0 * half

    def i1_intervals(self, cap: int = 1024):
        """First ``cap`` certified plateau intervals of the upper level."""
        dm = self.plateau_margin()
        js = np.arange(1, min(self.n_pulses, cap) + 1)
        c = self.pulse_centers(js)
        return np.column_stack([c - self.lam * self.h + dm,
                                c + self.lam * self.h - dm])

    def i2_intervals(self, cap: int = 1024):
        dm = self.plateau_margin()
        js = np.arange(1, min(self.n_pulses, cap) + 1)
        c = self.pulse_centers(js)
        starts = c + self.lam * self.h + dm
        ends = c + (2.0 - self.lam) * self.h - dm
        ends = np.minimum(ends, self.x_right - dm)
        first = np.array([[self.x_left + dm, c[0] - self.lam * self.h - dm]])
        body = np.column_stack([starts, np.maximum(ends, starts)])
        return np.vstack([first, body])

    @property
    def sup_value_bound(self) -> float:
        return 0.5 * self.lam * (1.0 - self.lam) * self.h ** 2

    @property
    def sup_slope_bound(self) -> float:
        return self.lam * (1.0 - self.lam) * self.h


def build_profile(lam: float, tau: float, delta_amp: float,
                  span: float = 1.0, n_cap: int = 2 ** 46) -> OscillationProfile:
    """Smallest pulse count meeting the sup-norm budget, then verify.

    ``tau`` bounds the plateau-measure deviations (|I1| within tau/2 of
    lambda*span); ``delta_amp`` bounds the profile value and slope.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie in (0, 1)")
    if tau <= 0.0 or delta_amp <= 0.0 or span <= 0.0:
        raise ValueError("tau, delta_amp and span must be positive")
    m0 = min(tau / 8.0, span / 16.0)
    usable = span - 2.0 * m0
    # Slope bound lam(1-lam)h <= 0.95 delta_amp and value bound h^2-scaled.
    h_slope = 0.95 * delta_amp / (lam * (1.0 - lam))
    h_value = np.sqrt(2.0 * 0.95 * delta_amp / (lam * (1.0 - lam)))
    h_max = min(h_slope, h_value, usable / 2.0)
    n = int(np.ceil(usable / (2.0 * h_max)))
    if n > n_cap:
        raise InfeasibleAmplitude(
            f"needs {n} pulses, above the cap {n_cap}")
    h = usable / (2.0 * n)
    w = min(0.45 * min(2.0 * lam, 1.0 - lam) * h,
            tau / (16.0 * n),
            0.5 * m0)
    if w <= 0.0 or not np.isfinite(w):
        raise InfeasibleAmplitude("mollifier width underflow")
    prof = OscillationProfile(lam=lam, span=span, n_pulses=n, h=h, w=w,
                              m0=m0, delta_amp=delta_amp, tau_meas=tau)
    _verify_profile(prof)
    return prof


def _verify_profile(prof: OscillationProfile, dense_cap: int = 4096):
    """Sampled invariant checks; representative windows for huge trains."""
    lam = prof.lam
    if prof.n_pulses <= dense_cap:
        x = np.linspace(0.0, prof.span, 64 * prof.n_pulses + 129)
    else:
        xs = [np.linspace(0.0, prof.x_left + 4.0 * prof.h, 512)]
        xs.append(np.linspace(prof.x_right - 4.0 * prof.h, prof.span, 512))
        rng = np.random.default_rng(0)
        for j in np.unique(rng.integers(2, prof.n_pulses - 1, size=8)):
            c = float(prof.pulse_centers(j))
            xs.append(np.linspace(c - 2.1 * prof.h, c + 2.1 * prof.h, 512))
        x = np.concatenate(xs)
    d2 = prof.second(x)
    band_tol = 1e-12
    if d2.min() < -lam - band_tol or d2.max() > 1.0 - lam + band_tol:
        raise InfeasibleAmplitude("second derivative left the laminate band")
    if np.max(np.abs(prof.value(x))) >= prof.delta_amp:
        raise InfeasibleAmplitude("profile value exceeds the amplitude bound")
    if np.max(np.abs(prof.first(x))) >= prof.delta_amp:
        raise InfeasibleAmplitude("profile slope exceeds the amplitude bound")
    # Exact plateau levels on certified intervals (first/middle/last pulses).
    for j in {1, max(1, prof.n_pulses // 2), prof.n_pulses}:
        c = float(prof.pulse_centers(j))
        dm = prof.plateau_margin()
        half = prof.lam * prof.h - dm
        if half > 0:
            probe = np.linspace(c - half, c + half, 9)
            lev = prof.second(probe)
            if np.max(np.abs(lev - (1.0 - lam))) > 1e-12:
                raise InfeasibleAmplitude("upper plateau level not exact")
    # Measure tolerances.
    if abs(prof.i1_measure() - lam * prof.span) >= 0.5 * prof.tau_meas:
        raise InfeasibleAmplitude("I1 measure outside tolerance")
    if abs(prof.i2_measure() - (1.0 - lam) * prof.span) >= 0.5 * prof.tau_meas:
        raise InfeasibleAmplitude("I2 measure outside tolerance")
    # Compact support of slope and value at the train ends.
    edge = np.array([prof.x_right + 1.01 * prof.w, prof.span])
    if np.max(np.abs(prof.first(edge))) > 1e-12 * max(1.0, prof.sup_slope_bound):
        raise InfeasibleAmplitude("slope does not vanish past the train")


# ---------------------------------------------------------------------------
# Cutoff window
# ---------------------------------------------------------------------------

# Smoothstep of order 4 (C^4 joins): s(0)=0, s(1)=1, s^(i) = 0 at both ends.
def _s4(z):
    return z ** 5 * (126.0 + z * (-420.0 + z * (540.0 + z * (-315.0 + z * 70.0))))


def _s4_d1(z):
    return 630.0 * (z * (1.0 - z)) ** 4


def _s4_d2(z):
    return 2520.0 * (z * (1.0 - z)) ** 3 * (1.0 - 2.0 * z)


_Z_REF = np.linspace(0.0, 1.0, 20001)
_C1_REF = float(np.max(np.abs(_s4_d1(_Z_REF))))   # 630/256
_C2_REF = float(np.max(np.abs(_s4_d2(_Z_REF))))


@dataclass(frozen=True)
class CutoffFunction:
    """C^4 plateau window: 0 outside (lo, hi), 1 on the inner interval."""

    lo: float
    hi: float
    collar: float
    tau: float
    C: float

    @property
    def inner(self):
        return (self.lo + self.collar, self.hi - self.collar)

    @property
    def loss(self) -> float:
        """Measure of the window minus its plateau."""
        return 2.0 * self.collar

    def value(self, t):
        t = np.asarray(t, dtype=float)
        zl = (t - self.lo) / self.collar
        zr = (self.hi - t) / self.collar
        out = np.ones_like(t)
        out = np.where(zl <= 0.0, 0.0, out)
        out = np.where(zr <= 0.0, 0.0, out)
        ml = (zl > 0.0) & (zl < 1.0)
        mr = (zr > 0.0) & (zr < 1.0)
        out = np.where(ml, _s4(np.clip(zl, 0.0, 1.0)), out)
        out = np.where(mr & ~ml, _s4(np.clip(zr, 0.0, 1.0)), out)
        return out

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        zl = (t - self.lo) / self.collar
        zr = (self.hi - t) / self.collar
        out = np.zeros_like(t)
        ml = (zl > 0.0) & (zl < 1.0)
        mr = (zr > 0.0) & (zr < 1.0)
        out = np.where(ml, _s4_d1(np.clip(zl, 0.0, 1.0)) / self.collar, out)
        out = np.where(mr & ~ml, -_s4_d1(np.clip(zr, 0.0, 1.0)) / self.collar, out)
        return out

    def d2(self, t):
        t = np.asarray(t, dtype=float)
        zl = (t - self.lo) / self.collar
        zr = (self.hi - t) / self.collar
        out = np.zeros_like(t)
        ml = (zl > 0.0) & (zl < 1.0)
        mr = (zr > 0.0) & (zr < 1.0)
        out = np.where(ml, _s4_d2(np.clip(zl, 0.0, 1.0)) / self.collar ** 2, out)
        out = np.where(mr & ~ml, _s4_d2(np.clip(zr, 0.0, 1.0)) / self.collar ** 2, out)
        return out


def build_cutoff(lo: float, hi: float, tau: float) -> CutoffFunction:
    """Cutoff with plateau loss below tau/2 and tau-uniform derivative bounds.

    The collar scales with tau (capped at a quarter of the section), so
    max|eta'| * tau and max|eta''| * tau^2 stay below the same constant C
    measured once from the reference smoothstep.
    """
    length = hi - lo
    if length <= 0.0:
        raise TooThin("empty cross-section")
    collar = min(0.225 * tau, 0.25 * length)
    if collar <= 1e3 * np.finfo(float).tiny or collar < 1e-15 * max(abs(lo), abs(hi), 1.0):
        raise TooThin(f"collar {collar:.3e} below float resolution")
    C = max(_C1_REF / 0.225, _C2_REF / 0.225 ** 2, 1.0)
    return CutoffFunction(lo=lo, hi=hi, collar=collar, tau=tau, C=C)
