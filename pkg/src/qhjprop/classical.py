"""Classical dynamics of quadratic Lagrangians.

The Euler-Lagrange equation of  L = [a(t) v^2 - b(t) x^2]/2 + c(t) x  is the
linear ODE  d/dt[a(t) x'] + b(t) x = c(t).  A fundamental system

    u(tA) = 1, u'(tA) = 0,      v(tA) = 0, v'(tA) = 1,

plus (with a drive) the particular solution w with w(tA) = w'(tA) = 0, turns
the two-point boundary problem into linear algebra and makes the classical
action an exact quadratic form in the endpoints:

    S_cl = alpha xB^2 + beta xA xB + gamma xA^2 + lamB xB + lamA xA + sigma.

Using the integration-by-parts identity S_cl = [a x' x]/2 | + (1/2) int c x
and the Wronskian conservation a(t)(u v' - u' v) = a(tA), the coefficients
come from boundary values only:

    alpha = a(tB) v'(tB) / (2 v(tB)),
    beta  = -a(tA) / v(tB),
    gamma = a(tA) u(tB) / (2 v(tB)),
    lamB  = Jv(tB) / v(tB),                    Jv = int c v,
    lamA  = a(tA) w(tB) / v(tB),
    sigma = [Jw(tB) - w(tB) Jv(tB) / v(tB)]/2, Jw = int c w.

No finite differencing is ever needed for the second derivatives of S_cl:
2*alpha is d^2 S_cl/dxB^2 exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import CausticSingularity, NonPositiveMass, ToleranceNotMet, ValidationError
from .lagrangian import Constant, coefficient_is_zero

CAUSTIC_TOL = 1e-9
DEFAULT_ODE_TOL = 1e-12


@dataclass(frozen=True)
class BoundaryData:
    """Endpoints of the boundary-value problem; tB > tA strictly."""

    xA: float
    tA: float
    xB: float
    tB: float

    def __post_init__(self):
        if not self.tB > self.tA:
            raise ValidationError(f"boundary.tB: must be greater than tA (tA={self.tA}, tB={self.tB})")

    @property
    def duration(self):
        return self.tB - self.tA


@dataclass(frozen=True)
class ActionQuadraticForm:
    """S_cl(xB, tB | xA, tA) as an exact quadratic form in the endpoints."""

    alpha: float
    beta: float
    gamma: float
    lam_b: float
    lam_a: float
    sigma: float
    t_start: float
    t_end: float

    def value(self, x_a, x_b):
        return (
            self.alpha * x_b * x_b
            + self.beta * x_b * x_a
            + self.gamma * x_a * x_a
            + self.lam_b * x_b
            + self.lam_a * x_a
            + self.sigma
        )

    @property
    def d2_dxB2(self):
        return 2.0 * self.alpha

    @property
    def d2_dxA_dxB(self):
        return self.beta


class FundamentalSystem:
    """Solution basis (u, v[, w]) of the Euler-Lagrange equation on [tA, tB].

    Built either from closed forms (constant a and b, no drive) or from the
    adaptive Runge-Kutta integrator's dense output.  Immutable once built;
    every query is pure.
    """

    def __init__(self, lag, t_start, t_end, tol, mode, dense=None):
        self.lagrangian = lag
        self.t_start = float(t_start)
        self.t_end = float(t_end)
        self.tol = tol
        self.mode = mode
        self.has_drive = lag.has_drive
        if mode == "analytic":
            a0 = lag.a_value(t_start)
            self._omega_sq = lag.b.value / lag.a.value
            self._a0 = a0
        else:
            self._ts, self._ys, self._qs = dense
        self._zero_cache = None

    # -- raw basis -------------------------------------------------------

    def _analytic_state(self, t):
        """(u, du, v, dv) from closed forms for constant coefficients."""
        dt = t - self.t_start
        w2 = self._omega_sq
        if w2 > 0.0:
            om = math.sqrt(w2)
            s, co = math.sin(om * dt), math.cos(om * dt)
            return co, -om * s, s / om, co
        if w2 == 0.0:
            return 1.0, 0.0, dt, 1.0
        ka = math.sqrt(-w2)
        sh, ch = math.sinh(ka * dt), math.cosh(ka * dt)
        return ch, ka * sh, sh / ka, ch

    def basis_at(self, t):
        """(u, u', v, v') at time t."""
        self._check_domain(t)
        if self.mode == "analytic":
            return self._analytic_state(t)
        y = _kernels.dense_eval(self._ts, self._ys, self._qs, t)
        a = self.lagrangian.a_value(t)
        return y[0], y[1] / a, y[2], y[3] / a

    def particular_at(self, t):
        """(w, w') of the driven equation; zero without a drive."""
        self._check_domain(t)
        if not self.has_drive:
            return 0.0, 0.0
        y = _kernels.dense_eval(self._ts, self._ys, self._qs, t)
        a = self.lagrangian.a_value(t)
        return y[4], y[5] / a

    def drive_integrals_at(self, t):
        """(int c*u, int c*v, int c*w) from tA to t; zero without a drive."""
        self._check_domain(t)
        if not self.has_drive:
            return 0.0, 0.0, 0.0
        y = _kernels.dense_eval(self._ts, self._ys, self._qs, t)
        return y[6], y[7], y[8]

    def v_at(self, t):
        if self.mode == "analytic":
            return self._analytic_state(t)[2]
        return _kernels.dense_eval(self._ts, self._ys, self._qs, t)[2]

    def wronskian_at(self, t):
        """a(t)[u v' - u' v]; conserved and equal to a(tA)."""
        u, du, v, dv = self.basis_at(t)
        return self.lagrangian.a_value(t) * (u * dv - du * v)

    def _check_domain(self, t):
        lo, hi = self.t_start, self.t_end
        slack = 1e-12 * max(1.0, abs(hi - lo))
        if t < lo - slack or t > hi + slack:
            raise ValueError(f"time {t} outside the solved interval [{lo}, {hi}]")

    # -- caustics --------------------------------------------------------

    def is_caustic(self, t, caustic_tol=CAUSTIC_TOL):
        return abs(self.v_at(t)) < caustic_tol * (t - self.t_start)

    def v_zeros(self, upto=None):
        """Zeros of v in the open interval (tA, upto]; conjugate points."""
        hi = self.t_end if upto is None else upto
        if self._zero_cache is None:
            self._zero_cache = self._locate_zeros()
        return [z for z in self._zero_cache if z < hi - 1e-14 * max(1.0, abs(hi))]

    def _locate_zeros(self):
        if self.mode == "analytic":
            if self._omega_sq <= 0.0:
                return []
            om = math.sqrt(self._omega_sq)
            span = self.t_end - self.t_start
            kmax = int(math.floor(om * span / math.pi + 1e-12))
            return [self.t_start + k * math.pi / om for k in range(1, kmax + 1)]
        zeros = []
        ts, vs = self._ts, self._ys[:, 2]
        if len(ts) >= 2 and vs[1] < 0.0:
            # v leaves tA with slope 1, so a negative first node means the
            # first step already contains a conjugate point
            off = ts[0] + 1e-3 * (ts[1] - ts[0])
            if self.v_at(off) > 0.0:
                zeros.append(self._bisect_zero(off, ts[1]))
        for i in range(1, len(ts) - 1):
            if vs[i] == 0.0:
                zeros.append(ts[i])
            elif vs[i] * vs[i + 1] < 0.0:
                zeros.append(self._bisect_zero(ts[i], ts[i + 1]))
        return zeros

    def _bisect_zero(self, lo, hi):
        flo = self.v_at(lo)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = self.v_at(mid)
            if fm == 0.0 or hi - lo < 1e-15 * max(1.0, abs(hi)):
                return mid
            if flo * fm < 0.0:
                hi = mid
            else:
                lo, flo = mid, fm
        return 0.5 * (lo + hi)

    # -- the action form -------------------------------------------------

    def form_at(self, t_end, caustic_tol=CAUSTIC_TOL):
        """ActionQuadraticForm for the interval [tA, t_end]."""
        tA = self.t_start
        if not t_end > tA:
            raise ValidationError(f"t_end must exceed tA (tA={tA}, t_end={t_end})")
        u, du, v, dv = self.basis_at(t_end)
        if abs(v) < caustic_tol * (t_end - tA):
            raise CausticSingularity(
                f"conjugate point: |v({t_end})| = {abs(v):.3e} below caustic tolerance"
            )
        a_end = self.lagrangian.a_value(t_end)
        a_0 = self.lagrangian.a_value(tA)
        alpha = 0.5 * a_end * dv / v
        beta = -a_0 / v
        gamma = 0.5 * a_0 * u / v
        lam_b = lam_a = sigma = 0.0
        if self.has_drive:
            w, dw = self.particular_at(t_end)
            _, jv, jw = self.drive_integrals_at(t_end)
            lam_b = jv / v
            lam_a = a_0 * w / v
            sigma = 0.5 * (jw - w * jv / v)
        return ActionQuadraticForm(alpha, beta, gamma, lam_b, lam_a, sigma, tA, t_end)


def _analytic_available(lag):
    return (
        isinstance(lag.a, Constant)
        and isinstance(lag.b, Constant)
        and coefficient_is_zero(lag.c)
    )


@lru_cache(maxsize=128)
def _cached_system(lag, t_start, t_end, tol, method):
    if method == "auto":
        method = "analytic" if _analytic_available(lag) else "numeric"
    if method == "analytic":
        if not _analytic_available(lag):
            raise ValidationError(
                "analytic fast path requires constant a and b and zero drive"
            )
        return FundamentalSystem(lag, t_start, t_end, tol, "analytic")
    args = lag.kernel_args()
    status, ts, ys, qs = _kernels.rk_integrate(
        *args, float(t_start), float(t_end), tol, tol, lag.has_drive
    )
    if status == _kernels.ERR_NONPOSITIVE_MASS:
        raise NonPositiveMass(f"a(t) <= 0 detected while integrating on [{t_start}, {t_end}]")
    if status == _kernels.ERR_TOLERANCE:
        raise ToleranceNotMet(f"integrator failed to meet tol={tol} on [{t_start}, {t_end}]")
    return FundamentalSystem(lag, t_start, t_end, tol, "numeric", dense=(ts, ys, qs))


def fundamental_system(lag, t_start, t_end, tol=DEFAULT_ODE_TOL, method="auto"):
    """Fundamental system of the Euler-Lagrange equation on [t_start, t_end].

    method: "auto" picks closed forms when a and b are Constant and there is
    no drive, otherwise the adaptive integrator; "analytic" / "numeric" force
    one path.  Results are cached per (lagrangian, interval, tol, method).
    """
    if not t_end > t_start:
        raise ValidationError(f"boundary.tB: must be greater than tA ({t_start} vs {t_end})")
    return _cached_system(lag, float(t_start), float(t_end), float(tol), method)


class ClassicalPath:
    """Dense classical trajectory x_cl(t) = A u(t) + B v(t) + w(t)."""

    def __init__(self, system, coef_u, coef_v):
        self.system = system
        self.coef_u = coef_u
        self.coef_v = coef_v

    def __call__(self, t):
        u, du, v, dv = self.system.basis_at(t)
        w, dw = self.system.particular_at(t)
        x = self.coef_u * u + self.coef_v * v + w
        xdot = self.coef_u * du + self.coef_v * dv + dw
        return x, xdot

    def position(self, t):
        return self(t)[0]

    def velocity(self, t):
        return self(t)[1]


def classical_trajectory(system, bd, caustic_tol=CAUSTIC_TOL):
    """Solve the two endpoint conditions for the trajectory through bd."""
    if abs(bd.tA - system.t_start) > 1e-12 * max(1.0, abs(bd.tA)):
        raise ValidationError("boundary tA does not match the fundamental system")
    u, du, v, dv = system.basis_at(bd.tB)
    if abs(v) < caustic_tol * bd.duration:
        raise CausticSingularity(
            f"conjugate point at tB={bd.tB}: the boundary-value problem is degenerate"
        )
    w, _ = system.particular_at(bd.tB)
    coef_u = bd.xA
    coef_v = (bd.xB - bd.xA * u - w) / v
    return ClassicalPath(system, coef_u, coef_v)


def action_quadratic_form(lag, t_start, t_end, tol=DEFAULT_ODE_TOL, method="auto",
                          caustic_tol=CAUSTIC_TOL):
    """S_cl on [t_start, t_end] as an exact quadratic form in the endpoints."""
    fs = fundamental_system(lag, t_start, t_end, tol, method)
    return fs.form_at(t_end, caustic_tol)


# ---------------------------------------------------------------------------
# closed forms for the presets (oracles for the generic machinery)


def closed_form_action(preset, bd):
    """Preset classical action in closed form; raises CausticSingularity at
    conjugate points (sin(omega T) = 0 or sin(Omega T) = 0)."""
    from .lagrangian import DampedOscillator, DrivenOscillator, FreeParticle, HarmonicOscillator

    T = bd.duration
    if isinstance(preset, FreeParticle):
        return 0.5 * preset.m * (bd.xB - bd.xA) ** 2 / T
    if isinstance(preset, HarmonicOscillator):
        return _harmonic_action(preset.m, preset.omega, bd)
    if isinstance(preset, DrivenOscillator):
        return _driven_action(preset, bd)
    if isinstance(preset, DampedOscillator):
        m, g = preset.m, preset.gamma
        Om = preset.shifted_frequency
        s = math.sin(Om * T)
        if abs(s) < CAUSTIC_TOL * Om * T:
            raise CausticSingularity(f"sin(Omega T) = {s:.3e} at T={T}")
        co = math.cos(Om * T)
        eA = math.exp(g * bd.tA)
        eB = math.exp(g * bd.tB)
        eM = math.exp(0.5 * g * (bd.tA + bd.tB))
        quad = (m * Om / (2.0 * s)) * ((eB * bd.xB**2 + eA * bd.xA**2) * co - 2.0 * eM * bd.xA * bd.xB)
        return quad + 0.25 * m * g * (eA * bd.xA**2 - eB * bd.xB**2)
    raise TypeError(f"not a preset: {preset!r}")


def _harmonic_action(m, omega, bd):
    T = bd.duration
    s = math.sin(omega * T)
    if abs(s) < CAUSTIC_TOL * omega * T:
        raise CausticSingularity(f"sin(omega T) = {s:.3e} at T={T}")
    co = math.cos(omega * T)
    return (m * omega / (2.0 * s)) * ((bd.xA**2 + bd.xB**2) * co - 2.0 * bd.xA * bd.xB)


def _driven_action(preset, bd):
    """Driven-oscillator action: the undriven form plus drive terms that are
    linear in the endpoints plus an endpoint-free double integral."""
    from scipy.integrate import quad

    from .lagrangian import eval_coefficient

    m, om = preset.m, preset.omega
    T = bd.duration
    s = math.sin(om * T)
    if abs(s) < CAUSTIC_TOL * om * T:
        raise CausticSingularity(f"sin(omega T) = {s:.3e} at T={T}")

    def f(t):
        return eval_coefficient(preset.drive, t)

    i_b, _ = quad(lambda t: f(t) * math.sin(om * (t - bd.tA)), bd.tA, bd.tB,
                  epsabs=1e-13, epsrel=1e-13, limit=400)
    i_a, _ = quad(lambda t: f(t) * math.sin(om * (bd.tB - t)), bd.tA, bd.tB,
                  epsabs=1e-13, epsrel=1e-13, limit=400)

    def inner(t):
        val, _ = quad(lambda u: f(u) * math.sin(om * (u - bd.tA)), bd.tA, t,
                      epsabs=1e-13, epsrel=1e-13, limit=400)
        return f(t) * math.sin(om * (bd.tB - t)) * val

    i_2, _ = quad(inner, bd.tA, bd.tB, epsabs=1e-12, epsrel=1e-12, limit=400)

    return (
        _harmonic_action(m, om, bd)
        + (bd.xB / s) * i_b
        + (bd.xA / s) * i_a
        - i_2 / (m * om * s)
    )
