"""Independent verification machinery.

Nothing here reuses the quantum-action route's conventions: the time-sliced
kernel is built from the discrete action alone (no Delta, no normalization
constant, no branch choice), the residual checks push candidate actions
through the defining PDE with central differences, and the two evolvers
propagate wave packets through Eq.-independent quadrature / finite
differences.  Agreement between all of them and the assembled propagator is
the package's acceptance gate.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .backend import BACKEND
from .classical import CAUSTIC_TOL
from .errors import (
    CausticSingularity,
    DegenerateGaussian,
    DegenerateSlice,
    EdgeLeakage,
    NonPositiveMass,
    StencilOutOfDomain,
    ValidationError,
)
from .lagrangian import effective_potential
from .propagator import kernel_slice
from .quantum import DEFAULT_QUAD_TOL

DEFAULT_GRID_N = 1024
DEFAULT_GRID_HALF_WIDTH = 12.0
EDGE_AMPLITUDE_RATIO = 1e-10


def complex_gaussian_integral(p, q=0.0, r=0.0):
    """int exp(p x^2 + q x + r) dx = sqrt(pi/(-p)) exp(r - q^2/(4p)).

    Principal branch; defined for Re(p) < 0 and for the Fresnel boundary
    Re(p) = 0 with Im(p) != 0.  Oscillatory exponents are never brute-forced
    through a sampling quadrature.
    """
    p = complex(p)
    if p == 0 or p.real > 1e-12 * abs(p):
        raise DegenerateGaussian(f"divergent Gaussian integral, p={p}")
    return cmath.sqrt(math.pi / -p) * cmath.exp(r - q * q / (4.0 * p))


# ---------------------------------------------------------------------------
# grid wavefunctions


@dataclass(frozen=True)
class GridWavefunction:
    """Complex samples on a uniform grid at a single time."""

    x_min: float
    x_max: float
    n: int
    samples: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if self.n < 16:
            raise ValidationError(f"grid.n: must be at least 16, got {self.n}")
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.shape != (self.n,):
            raise ValidationError("samples length does not match grid size")
        object.__setattr__(self, "samples", samples)

    @property
    def grid(self):
        return np.linspace(self.x_min, self.x_max, self.n)

    @property
    def h(self):
        return (self.x_max - self.x_min) / (self.n - 1)

    def trapezoid_weights(self):
        w = np.full(self.n, self.h)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def l2_norm(self):
        return math.sqrt(float(np.sum(self.trapezoid_weights() * np.abs(self.samples) ** 2)))

    def inner(self, other):
        """Trapezoidal <self|other>."""
        return complex(np.sum(self.trapezoid_weights() * np.conj(self.samples) * other.samples))

    def normalized(self):
        return GridWavefunction(self.x_min, self.x_max, self.n,
                                self.samples / self.l2_norm(), self.time)


def gaussian_packet(x0=0.0, p0=0.0, sigma=1.0, x_min=-DEFAULT_GRID_HALF_WIDTH,
                    x_max=DEFAULT_GRID_HALF_WIDTH, n=DEFAULT_GRID_N, time=0.0, hbar=1.0):
    """Normalized Gaussian packet with position spread sigma."""
    x = np.linspace(x_min, x_max, n)
    psi = np.exp(-((x - x0) ** 2) / (4.0 * sigma**2) + 1j * p0 * (x - x0) / hbar)
    return GridWavefunction(x_min, x_max, n, psi, time).normalized()


def coherent_state(m=1.0, omega=1.0, x0=0.0, x_min=-DEFAULT_GRID_HALF_WIDTH,
                   x_max=DEFAULT_GRID_HALF_WIDTH, n=DEFAULT_GRID_N, time=0.0, hbar=1.0):
    """Displaced oscillator ground state (coherent state with p0 = 0)."""
    sigma = math.sqrt(hbar / (2.0 * m * omega))
    return gaussian_packet(x0=x0, p0=0.0, sigma=sigma, x_min=x_min, x_max=x_max,
                           n=n, time=time, hbar=hbar)


def _check_edges(psi):
    amp = float(np.max(np.abs(psi.samples)))
    edge = float(np.max(np.abs(psi.samples[[0, 1, -2, -1]])))
    if edge > EDGE_AMPLITUDE_RATIO * amp:
        raise EdgeLeakage(
            f"edge amplitude {edge:.3e} above {EDGE_AMPLITUDE_RATIO:.0e} of peak {amp:.3e}"
        )


# ---------------------------------------------------------------------------
# time-sliced path integral


def time_sliced_kernel(lag, bd, n_slices, rule="endpoint"):
    """Discrete path integral; rule "endpoint" (left Riemann, first order) or
    "midpoint" (second order).

    Interior points are integrated out by exact sequential complex-Gaussian
    elimination; contains no Delta, no normalization constant, and no branch
    bookkeeping, which makes it the arbiter for convention disputes.
    """
    if n_slices < 1:
        raise ValidationError(f"slices: need at least 1, got {n_slices}")
    if rule not in ("endpoint", "midpoint"):
        raise ValidationError(f"rule: must be 'endpoint' or 'midpoint', got '{rule}'")
    rule_code = _kernels.RULE_ENDPOINT if rule == "endpoint" else _kernels.RULE_MIDPOINT
    k, status = _kernels.sliced_kernel(
        *lag.kernel_args(), float(bd.tA), float(bd.tB), int(n_slices),
        float(bd.xA), float(bd.xB), float(lag.hbar), rule_code,
    )
    if status == _kernels.ERR_NONPOSITIVE_MASS:
        raise NonPositiveMass("a(t) <= 0 at a slice time")
    if status == _kernels.ERR_DEGENERATE_SLICE:
        raise DegenerateSlice(
            f"discrete caustic at N={n_slices}; perturb the slice count"
        )
    return k


def richardson_extrapolate(slice_counts, values):
    """Neville extrapolation of K_N in powers of 1/N to the N -> inf limit."""
    xs = [1.0 / float(n) for n in slice_counts]
    tab = [complex(v) for v in values]
    k = len(tab)
    for j in range(1, k):
        for i in range(k - 1, j - 1, -1):
            tab[i] = (xs[i] * tab[i - 1] - xs[i - j] * tab[i]) / (xs[i] - xs[i - j])
    return tab[k - 1]


def sliced_kernel_extrapolated(lag, bd, slice_counts=(16, 32, 64, 128, 256), rule="endpoint"):
    """Richardson-extrapolated time-sliced kernel over a ladder of N."""
    values = []
    counts = []
    for n in slice_counts:
        try:
            values.append(time_sliced_kernel(lag, bd, n, rule))
            counts.append(n)
        except DegenerateSlice:
            values.append(time_sliced_kernel(lag, bd, n + 1, rule))
            counts.append(n + 1)
    return richardson_extrapolate(counts, values)


# ---------------------------------------------------------------------------
# QHJE residual


@dataclass(frozen=True)
class ResidualReport:
    max_abs_residual: float
    rms_residual: float
    grid_steps: tuple
    points: int


def qhje_residual(lag, s_field, x, t, h_x, h_t):
    """Central-difference residual of the quantum Hamilton-Jacobi equation

        dS/dt + V(x,t) + (dS/dx)^2/(2 a(t)) - (i hbar / 2 a(t)) d2S/dx2

    for a candidate action field s_field(x, t); O(h^2) for a true solution.
    """
    t_min = getattr(s_field, "t_min", None)
    if t_min is not None and t - h_t <= t_min:
        raise StencilOutOfDomain(f"t - h_t = {t - h_t} at or below the field's t_min {t_min}")
    t_max = getattr(s_field, "t_max", None)
    if t_max is not None and t + h_t > t_max:
        raise StencilOutOfDomain(f"t + h_t = {t + h_t} above the field's t_max {t_max}")
    s0 = s_field(x, t)
    sxp = s_field(x + h_x, t)
    sxm = s_field(x - h_x, t)
    stp = s_field(x, t + h_t)
    stm = s_field(x, t - h_t)
    ds_dt = (stp - stm) / (2.0 * h_t)
    ds_dx = (sxp - sxm) / (2.0 * h_x)
    d2s_dx2 = (sxp - 2.0 * s0 + sxm) / (h_x * h_x)
    a = lag.a_value(t)
    return (
        ds_dt
        + effective_potential(lag, x, t)
        + ds_dx * ds_dx / (2.0 * a)
        - 0.5j * lag.hbar * d2s_dx2 / a
    )


def delta_equation_residual(lag, s_cl_field, delta_func, x, t, h_x, h_t):
    """Residual of the reduced correction equation (x-independent Delta):

        dDelta/dt - (i hbar / 2 a(t)) d2S_cl/dx2 = 0.
    """
    ddelta_dt = (delta_func(t + h_t) - delta_func(t - h_t)) / (2.0 * h_t)
    d2s = (s_cl_field(x + h_x, t) - 2.0 * s_cl_field(x, t) + s_cl_field(x - h_x, t)) / (h_x * h_x)
    return ddelta_dt - 0.5j * lag.hbar * d2s / lag.a_value(t)


def residual_report(lag, s_field, points, h_x, h_t):
    """Max/RMS QHJE residual over (x, t) points."""
    vals = [abs(qhje_residual(lag, s_field, x, t, h_x, h_t)) for x, t in points]
    arr = np.asarray(vals)
    return ResidualReport(
        max_abs_residual=float(arr.max()),
        rms_residual=float(np.sqrt(np.mean(arr**2))),
        grid_steps=(h_x, h_t),
        points=len(vals),
    )


# ---------------------------------------------------------------------------
# short-time normalization and composition


def short_time_norm_check(lag, x, t, eps, tol=DEFAULT_QUAD_TOL):
    """int K(x + eta, t + eps | x, t) d eta, analytically over the exact
    quadratic exponent; tends to 1 as eps -> 0+."""
    ks = kernel_slice(lag, t, t + eps, tol)
    f = ks.form
    ih = 1j / lag.hbar
    p = ih * f.alpha
    q = ih * (f.beta * x + f.lam_b)
    r = ih * (f.gamma * x * x + f.lam_a * x + f.sigma)
    return ks.amplitude * complex_gaussian_integral(p, q, r)


def composition_check(lag, x_a, x_b, t_a, t_m, t_b, tol=DEFAULT_QUAD_TOL):
    """int K(xB, tB | xM, tM) K(xM, tM | xA, tA) dxM, evaluated analytically.

    The midpoint exponent is exactly quadratic; its complex coefficients are
    extracted by 3-point sampling and fed to the complex-Gaussian formula.
    Compare the result against the direct K(xB, tB | xA, tA).
    """
    if not (t_a < t_m < t_b):
        raise ValidationError(f"need tA < tM < tB, got {t_a}, {t_m}, {t_b}")
    first = kernel_slice(lag, t_a, t_m, tol)
    second = kernel_slice(lag, t_m, t_b, tol)
    ih = 1j / lag.hbar

    def exponent(x_m):
        return ih * (first.form.value(x_a, x_m) + second.form.value(x_m, x_b))

    d = 1.0
    f_plus, f_minus, f_zero = exponent(d), exponent(-d), exponent(0.0)
    p = (f_plus + f_minus - 2.0 * f_zero) / (2.0 * d * d)
    q = (f_plus - f_minus) / (2.0 * d)
    amp = first.amplitude * second.amplitude
    return amp * complex_gaussian_integral(p, q, f_zero)


# ---------------------------------------------------------------------------
# evolution oracles


def kernel_evolve(lag, psi0, t_end, tol=DEFAULT_QUAD_TOL):
    """psi(xB, t_end) by trapezoidal quadrature of K against psi0."""
    if not t_end > psi0.time:
        raise ValidationError(f"t_end must exceed the packet time {psi0.time}")
    _check_edges(psi0)
    ks = kernel_slice(lag, psi0.time, t_end, tol)
    if ks.caustic_index > 0:
        raise CausticSingularity(
            "conjugate point inside the evolution window; evolve in shorter stages"
        )
    x = psi0.grid
    km = ks.matrix(x, x)
    out = km @ (psi0.trapezoid_weights() * psi0.samples)
    return GridWavefunction(psi0.x_min, psi0.x_max, psi0.n, out, t_end)


def crank_nicolson_evolve(lag, psi0, t_end, steps):
    """Implicit-midpoint (Crank-Nicolson) evolution on the grid.

    Unconditionally stable and norm-preserving up to roundoff; coefficients
    are sampled at the half step; Dirichlet edges.
    """
    if not t_end > psi0.time:
        raise ValidationError(f"t_end must exceed the packet time {psi0.time}")
    if steps < 1:
        raise ValidationError(f"steps: need at least 1, got {steps}")
    _check_edges(psi0)
    dt = (t_end - psi0.time) / steps
    if BACKEND == "numba":
        out, status = _kernels.cn_evolve(
            psi0.grid, psi0.samples, float(psi0.time), float(dt), int(steps),
            *lag.kernel_args(), float(lag.hbar),
        )
        if status == _kernels.ERR_NONPOSITIVE_MASS:
            raise NonPositiveMass("a(t) <= 0 at a half step")
    else:
        out = _cn_evolve_numpy(lag, psi0, dt, steps)
    return GridWavefunction(psi0.x_min, psi0.x_max, psi0.n, out, t_end)


def _cn_evolve_numpy(lag, psi0, dt, steps):
    """Vectorized fallback: banded LAPACK solve per step."""
    from scipy.linalg import solve_banded

    x = psi0.grid
    h = psi0.h
    n = psi0.n
    psi = psi0.samples.copy()
    psi[0] = 0.0
    psi[-1] = 0.0
    x_in = x[1:-1]
    ab = np.zeros((3, n - 2), dtype=np.complex128)
    for k in range(steps):
        th = psi0.time + (k + 0.5) * dt
        a = lag.a_value(th)
        b = lag.b_value(th)
        c = lag.c_value(th)
        kin = lag.hbar**2 / (2.0 * a)
        lam = 0.5j * dt / lag.hbar
        offd = lam * (-kin / (h * h))
        dg = 1.0 + lam * (2.0 * kin / (h * h) + 0.5 * b * x_in**2 - c * x_in)
        rhs = (2.0 - dg) * psi[1:-1] - offd * (psi[:-2] + psi[2:])
        ab[0, 1:] = offd
        ab[1, :] = dg
        ab[2, :-1] = offd
        psi[1:-1] = solve_banded((1, 1), ab, rhs)
    return psi
