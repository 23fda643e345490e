"""The quantum correction Delta(t) and the complex quantum action S = S_cl + Delta.

For quadratic Lagrangians the correction depends on time only and follows
from a single quadrature of the second endpoint derivative of the classical
action, generalized to a time-dependent mass by replacing 1/m with 1/a(t):

    Delta(t) = (i hbar / 2) * int_{tA}^{t}  d2S_cl/dx^2(tau) / a(tau)  dtau.

The integrand behaves like 1/(tau - tA) at the lower limit, so the divergent
part is split off analytically:

    Delta(t) = (i hbar / 2) [ ln(t - tA)
               + int_{tA}^{t} ( 2 alpha(tau)/a(tau) - 1/(tau - tA) ) dtau ],

with 2*alpha(tau) = d2S_cl/dx^2 taken from the action quadratic form on
[tA, tau].  The subtracted integrand extends continuously to tau = tA, so an
ordinary adaptive quadrature converges.  Any additive constant this
convention fixes is absorbed by the normalization constant downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad

from .classical import DEFAULT_ODE_TOL, fundamental_system
from .errors import CausticSingularity, ToleranceNotMet
from .lagrangian import (
    DampedOscillator,
    DrivenOscillator,
    FreeParticle,
    HarmonicOscillator,
)

DEFAULT_QUAD_TOL = 1e-10


def _require_no_caustic(system, t_start, t_end):
    if system.v_zeros(upto=t_end) or system.is_caustic(t_end):
        raise CausticSingularity(
            f"conjugate point in ({t_start}, {t_end}]: the quadrature route for "
            "Delta is only defined before the first caustic"
        )


def delta_correction(lag, t_start, t_end, tol=DEFAULT_QUAD_TOL, system=None, method="auto"):
    """Delta on [t_start, t_end] by the regularized adaptive quadrature.

    Each integrand sample evaluates the action quadratic form on
    [t_start, tau]; passing a prebuilt fundamental `system` covering
    [t_start, t_end] makes every sample a dense-output lookup.
    """
    if not t_end > t_start:
        raise CausticSingularity(f"need t_end > t_start, got [{t_start}, {t_end}]")
    if system is None:
        system = fundamental_system(lag, t_start, t_end, DEFAULT_ODE_TOL)
    _require_no_caustic(system, t_start, t_end)

    def integrand(tau):
        form = system.form_at(tau)
        return form.d2_dxB2 / lag.a_value(tau) - 1.0 / (tau - t_start)

    part, abserr, *_ = quad(
        integrand, t_start, t_end, epsabs=0.1 * tol, epsrel=0.1 * tol,
        limit=500, full_output=1,
    )
    if abserr > max(tol, tol * abs(part)) * 100.0:
        raise ToleranceNotMet(
            f"Delta quadrature error estimate {abserr:.3e} above tolerance {tol:.3e}"
        )
    return 0.5j * lag.hbar * (math.log(t_end - t_start) + part)


def closed_form_delta(preset, duration, hbar):
    """The preset Delta in the closed-form convention.

    Differs from delta_correction by a duration-independent additive constant
    per preset (it drops the regularization constant); valid before the first
    conjugate point.
    """
    if not duration > 0:
        raise CausticSingularity(f"duration must be positive, got {duration}")
    if isinstance(preset, FreeParticle):
        return 0.5j * hbar * math.log(duration)
    if isinstance(preset, (HarmonicOscillator, DrivenOscillator)):
        s = math.sin(preset.omega * duration)
        if s <= 0.0:
            raise CausticSingularity("closed-form Delta valid only before the first conjugate point")
        return 0.5j * hbar * math.log(s)
    if isinstance(preset, DampedOscillator):
        om = preset.shifted_frequency
        s = math.sin(om * duration)
        if s <= 0.0:
            raise CausticSingularity("closed-form Delta valid only before the first conjugate point")
        return -0.25j * hbar * preset.gamma * duration + 0.5j * hbar * math.log(s)
    raise TypeError(f"not a preset: {preset!r}")


@dataclass(frozen=True)
class QuantumAction:
    """Complex quantum action with its decomposition retained."""

    total: complex
    classical_part: float
    delta: complex
    interval: tuple

    def __post_init__(self):
        assert self.total == self.classical_part + self.delta


def quantum_action_total(lag, bd, tol=DEFAULT_QUAD_TOL, method="auto"):
    """S(xB, tB | xA, tA) = S_cl + Delta for the boundary data bd."""
    system = fundamental_system(lag, bd.tA, bd.tB, DEFAULT_ODE_TOL, method)
    s_cl = system.form_at(bd.tB).value(bd.xA, bd.xB)
    delta = delta_correction(lag, bd.tA, bd.tB, tol, system=system)
    return QuantumAction(s_cl + delta, s_cl, delta, (bd.tA, bd.tB))


class QuantumActionField:
    """S(x, t) for fixed (xA, tA), backed by one fundamental system.

    Evaluating the field at many (x, t) shares the dense ODE output and
    memoizes Delta per distinct t; used by the residual checkers.
    """

    def __init__(self, lag, x_start, t_start, t_max, tol=DEFAULT_QUAD_TOL, method="auto"):
        self.lagrangian = lag
        self.x_start = x_start
        self.t_min = t_start
        self.t_max = t_max
        self.tol = tol
        self.system = fundamental_system(lag, t_start, t_max, DEFAULT_ODE_TOL, method)
        self._delta_cache = {}

    def delta(self, t):
        val = self._delta_cache.get(t)
        if val is None:
            val = delta_correction(
                self.lagrangian, self.t_min, t, self.tol, system=self.system
            )
            self._delta_cache[t] = val
        return val

    def classical(self, x, t):
        return self.system.form_at(t).value(self.x_start, x)

    def __call__(self, x, t):
        return self.classical(x, t) + self.delta(t)
