"""Propagator assembly  K = C exp(i S_cl / hbar) exp(i Delta / hbar).

The normalization constant is fixed by the short-time limit: with the
regularized Delta convention used here,

    K(x + eta, t + eps | x, t)  ->  C exp(i a(t) eta^2 / (2 hbar eps)) / sqrt(eps),

and the Fresnel integral over eta forces  C = sqrt(a(tA) / (2 pi i hbar)).

Past a conjugate point the quadrature route for Delta is undefined, so the
kernel is built by exact complex-Gaussian composition of caustic-free
sub-kernels; the accumulated phase reproduces the (-i)-per-caustic Maslov
convention, which the time-sliced oracle validates independently.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .classical import (
    CAUSTIC_TOL,
    DEFAULT_ODE_TOL,
    ActionQuadraticForm,
    fundamental_system,
)
from .errors import CausticSingularity, DegenerateGaussian
from .quantum import DEFAULT_QUAD_TOL, delta_correction

_I_POWERS = (1.0 + 0.0j, -1.0j, -1.0 + 0.0j, 1.0j)


def caustic_phase(index):
    """(-i)**index without power-function roundoff."""
    return _I_POWERS[index % 4]


def normalization_constant(lag, t_start):
    """C = sqrt(a(tA) / (2 pi i hbar)), principal branch (phase -pi/4)."""
    a0 = lag.a_value(t_start)
    return cmath.sqrt(a0 / (2j * math.pi * lag.hbar))


class KernelSlice:
    """The kernel at fixed (tA, tB) as a function of the endpoints.

    value(xA, xB) = amplitude * exp(i * form(xA, xB) / hbar) with a real
    quadratic form, so grids of endpoints broadcast cheaply.
    """

    def __init__(self, amplitude, form, hbar, caustic_index, normalization, delta=None):
        self.amplitude = amplitude
        self.form = form
        self.hbar = hbar
        self.caustic_index = caustic_index
        self.normalization = normalization
        self.delta = delta

    @property
    def t_start(self):
        return self.form.t_start

    @property
    def t_end(self):
        return self.form.t_end

    def value(self, x_a, x_b):
        return self.amplitude * cmath.exp(1j * self.form.value(x_a, x_b) / self.hbar)

    def matrix(self, x_a_grid, x_b_grid):
        """K[i, j] = K(x_b_grid[i] <- x_a_grid[j])."""
        xa = np.asarray(x_a_grid)[None, :]
        xb = np.asarray(x_b_grid)[:, None]
        f = self.form
        phase = (
            f.alpha * xb * xb
            + f.beta * xb * xa
            + f.gamma * xa * xa
            + f.lam_b * xb
            + f.lam_a * xa
            + f.sigma
        )
        return self.amplitude * np.exp(1j * phase / self.hbar)


def _compose_slices(first, second, caustic_index, normalization):
    """Integrate out the shared midpoint of two kernel slices exactly.

    The midpoint exponent is (i/hbar)(D x^2 + Q x + rest) with real D and
    endpoint-linear Q; the Fresnel formula folds -Q^2/(4D) back into a real
    quadratic form of the outer endpoints.
    """
    f1, f2 = first.form, second.form
    hbar = first.hbar
    d = f1.alpha + f2.gamma
    scale = abs(f1.alpha) + abs(f2.gamma)
    if abs(d) < 1e-12 * max(scale, 1e-300):
        raise DegenerateGaussian("vanishing midpoint quadratic coefficient")
    lam_mid = f1.lam_b + f2.lam_a
    amp = first.amplitude * second.amplitude * cmath.sqrt(1j * math.pi * hbar / d)
    form = ActionQuadraticForm(
        alpha=f2.alpha - f2.beta**2 / (4.0 * d),
        beta=-f1.beta * f2.beta / (2.0 * d),
        gamma=f1.gamma - f1.beta**2 / (4.0 * d),
        lam_b=f2.lam_b - f2.beta * lam_mid / (2.0 * d),
        lam_a=f1.lam_a - f1.beta * lam_mid / (2.0 * d),
        sigma=f1.sigma + f2.sigma - lam_mid**2 / (4.0 * d),
        t_start=f1.t_start,
        t_end=f2.t_end,
    )
    return KernelSlice(amp, form, hbar, caustic_index, normalization)


def kernel_slice(lag, t_start, t_end, tol=DEFAULT_QUAD_TOL, method="auto",
                 caustic_tol=CAUSTIC_TOL, _depth=0):
    """Build the kernel slice for [t_start, t_end], splitting across caustics."""
    fs = fundamental_system(lag, t_start, t_end, DEFAULT_ODE_TOL, method)
    if fs.is_caustic(t_end, caustic_tol):
        raise CausticSingularity(f"evaluation at a conjugate point (tB={t_end})")
    zeros = fs.v_zeros(upto=t_end)
    norm = normalization_constant(lag, t_start)
    if not zeros:
        form = fs.form_at(t_end, caustic_tol)
        delta = delta_correction(lag, t_start, t_end, tol, system=fs)
        amp = norm * cmath.exp(1j * delta / lag.hbar)
        return KernelSlice(amp, form, lag.hbar, 0, norm, delta)

    if _depth > 40:
        raise CausticSingularity("failed to isolate conjugate points by bisection")
    span = t_end - t_start
    last_exc = None
    for frac in (0.5, 0.45, 0.55, 0.4, 0.6, 0.35, 0.65):
        t_mid = t_start + frac * span
        try:
            left = kernel_slice(lag, t_start, t_mid, tol, method, caustic_tol, _depth + 1)
            right = kernel_slice(lag, t_mid, t_end, tol, method, caustic_tol, _depth + 1)
            return _compose_slices(left, right, len(zeros), norm)
        except (CausticSingularity, DegenerateGaussian) as exc:
            last_exc = exc
    raise CausticSingularity(f"could not split across conjugate points: {last_exc}")


@dataclass(frozen=True)
class PropagatorValue:
    """K with its factors retained:
    value = normalization * classical_phase_factor * delta_factor * (-i)**caustic_index.
    """

    value: complex
    normalization: complex
    classical_phase_factor: complex
    delta_factor: complex
    caustic_index: int
    classical_action: float
    delta: complex


def propagator_evaluate(lag, bd, tol=DEFAULT_QUAD_TOL, method="auto", caustic_tol=CAUSTIC_TOL):
    """Evaluate K(xB, tB | xA, tA) with caustic phase tracking."""
    ks = kernel_slice(lag, bd.tA, bd.tB, tol, method, caustic_tol)
    value = ks.value(bd.xA, bd.xB)
    s_cl = ks.form.value(bd.xA, bd.xB)
    phase = cmath.exp(1j * s_cl / lag.hbar)
    mu = ks.caustic_index
    delta_factor = value / (ks.normalization * phase * caustic_phase(mu))
    if ks.delta is not None:
        delta = ks.delta
    else:
        # composed slice: recover the convention-fixed Delta from its factor
        delta = -1j * lag.hbar * cmath.log(delta_factor)
    return PropagatorValue(
        value=value,
        normalization=ks.normalization,
        classical_phase_factor=phase,
        delta_factor=delta_factor,
        caustic_index=mu,
        classical_action=s_cl,
        delta=delta,
    )


def vvpm_propagator(form, x_start, x_end, hbar, caustic_index=0):
    """Van Vleck-Pauli-Morette kernel from the action quadratic form:

        K = sqrt(|d2S/dxA dxB| / (2 pi hbar)) e^{-i pi/4} (-i)^mu e^{i S_cl/hbar}.

    For mu = 0 (where -beta > 0) this is the principal branch of
    sqrt(-beta/(2 pi i hbar)); the explicit (-i)^mu keeps the same branch
    convention as propagator_evaluate past conjugate points.
    """
    beta = form.beta
    if not math.isfinite(beta) or beta == 0.0:
        raise CausticSingularity("mixed second derivative of S_cl degenerate (conjugate point)")
    pref = math.sqrt(abs(beta) / (2.0 * math.pi * hbar)) * cmath.exp(-0.25j * math.pi)
    return pref * caustic_phase(caustic_index) * cmath.exp(1j * form.value(x_start, x_end) / hbar)


def caustic_index(lag, t_start, t_end, tol=DEFAULT_ODE_TOL, method="auto"):
    """Number of conjugate points (zeros of v) in the open interval."""
    fs = fundamental_system(lag, t_start, t_end, tol, method)
    return len(fs.v_zeros(upto=t_end))
