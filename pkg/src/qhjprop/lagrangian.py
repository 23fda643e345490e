"""Quadratic Lagrangians  L = [a(t) v^2 - b(t) x^2]/2 + c(t) x  with declarative
time-dependent coefficients, plus the four standard presets.

Coefficients are small frozen dataclasses rather than opaque callables so the
dynamics layer can pick analytic fast paths, the numeric kernels can receive
them as (kind, params) pairs, and the CLI can serialize them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import NonPositiveMass, OverdampedPreset, ValidationError


@dataclass(frozen=True)
class Constant:
    value: float

    kind_code = _kernels.KIND_CONSTANT

    def params(self):
        return np.array([self.value])


@dataclass(frozen=True)
class Exponential:
    prefactor: float
    rate: float

    kind_code = _kernels.KIND_EXPONENTIAL

    def params(self):
        return np.array([self.prefactor, self.rate])


@dataclass(frozen=True)
class Sinusoid:
    amplitude: float
    angular_frequency: float
    phase: float = 0.0

    kind_code = _kernels.KIND_SINUSOID

    def params(self):
        return np.array([self.amplitude, self.angular_frequency, self.phase])


@dataclass(frozen=True)
class Polynomial:
    """Polynomial in t with ascending coefficients (c0 + c1*t + ...)."""

    coefficients: tuple

    kind_code = _kernels.KIND_POLYNOMIAL

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))

    def params(self):
        if not self.coefficients:
            return np.array([0.0])
        return np.array(self.coefficients)


TimeCoefficient = (Constant, Exponential, Sinusoid, Polynomial)


def eval_coefficient(coeff, t):
    """Value of a declarative coefficient at time t (exact analytic form)."""
    return _kernels.coeff_value(coeff.kind_code, coeff.params(), float(t))


def coefficient_is_zero(coeff):
    """True when the coefficient is identically zero for all t."""
    if isinstance(coeff, Constant):
        return coeff.value == 0.0
    if isinstance(coeff, Exponential):
        return coeff.prefactor == 0.0
    if isinstance(coeff, Sinusoid):
        return coeff.amplitude == 0.0
    return all(c == 0.0 for c in coeff.coefficients)


_COEFF_KIND_NAMES = {
    Constant: "constant",
    Exponential: "exponential",
    Sinusoid: "sinusoid",
    Polynomial: "polynomial",
}


def coefficient_to_dict(coeff):
    if isinstance(coeff, Constant):
        return {"kind": "constant", "value": coeff.value}
    if isinstance(coeff, Exponential):
        return {"kind": "exponential", "prefactor": coeff.prefactor, "rate": coeff.rate}
    if isinstance(coeff, Sinusoid):
        return {
            "kind": "sinusoid",
            "amplitude": coeff.amplitude,
            "angular_frequency": coeff.angular_frequency,
            "phase": coeff.phase,
        }
    return {"kind": "polynomial", "coefficients": list(coeff.coefficients)}


def coefficient_from_dict(doc, where="coefficient"):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValidationError(f"{where}: expected an object with a 'kind' field")
    kind = doc["kind"]
    try:
        if kind == "constant":
            return Constant(float(doc["value"]))
        if kind == "exponential":
            return Exponential(float(doc["prefactor"]), float(doc["rate"]))
        if kind == "sinusoid":
            return Sinusoid(
                float(doc["amplitude"]),
                float(doc["angular_frequency"]),
                float(doc.get("phase", 0.0)),
            )
        if kind == "polynomial":
            return Polynomial(tuple(float(c) for c in doc["coefficients"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: bad fields for kind '{kind}': {exc}") from exc
    raise ValidationError(f"{where}: unknown coefficient kind '{kind}'")


@dataclass(frozen=True)
class QuadraticLagrangian:
    """The coefficient triple (a, b, c) plus hbar.

    a is mass-like and must stay positive on any queried interval; b is
    spring-like; c is a drive.
    """

    a: object
    b: object
    c: object
    hbar: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValidationError("hbar: must be positive")

    def a_value(self, t):
        a = eval_coefficient(self.a, t)
        if a <= 0.0:
            raise NonPositiveMass(f"a({t}) = {a} <= 0")
        return a

    def b_value(self, t):
        return eval_coefficient(self.b, t)

    def c_value(self, t):
        return eval_coefficient(self.c, t)

    @property
    def has_drive(self):
        return not coefficient_is_zero(self.c)

    def kernel_args(self):
        """(kind, params) triplets in the layout the numeric kernels expect."""
        return (
            self.a.kind_code, self.a.params(),
            self.b.kind_code, self.b.params(),
            self.c.kind_code, self.c.params(),
        )


def lagrangian_value(lag, x, v, t):
    """L(x, v, t) = [a(t) v^2 - b(t) x^2]/2 + c(t) x."""
    a = eval_coefficient(lag.a, t)
    b = eval_coefficient(lag.b, t)
    c = eval_coefficient(lag.c, t)
    return 0.5 * (a * v * v - b * x * x) + c * x


def effective_potential(lag, x, t):
    """Hamiltonian potential  V(x, t) = b(t) x^2 / 2 - c(t) x."""
    b = eval_coefficient(lag.b, t)
    c = eval_coefficient(lag.c, t)
    return 0.5 * b * x * x - c * x


def lagrangian_to_dict(lag):
    return {
        "a": coefficient_to_dict(lag.a),
        "b": coefficient_to_dict(lag.b),
        "c": coefficient_to_dict(lag.c),
        "hbar": lag.hbar,
    }


def lagrangian_from_dict(doc, where="lagrangian"):
    for key in ("a", "b", "c"):
        if key not in doc:
            raise ValidationError(f"{where}.{key}: missing coefficient")
    return QuadraticLagrangian(
        a=coefficient_from_dict(doc["a"], f"{where}.a"),
        b=coefficient_from_dict(doc["b"], f"{where}.b"),
        c=coefficient_from_dict(doc["c"], f"{where}.c"),
        hbar=float(doc.get("hbar", 1.0)),
    )


# ---------------------------------------------------------------------------
# presets


@dataclass(frozen=True)
class FreeParticle:
    m: float = 1.0


@dataclass(frozen=True)
class HarmonicOscillator:
    m: float = 1.0
    omega: float = 1.0


@dataclass(frozen=True)
class DrivenOscillator:
    m: float = 1.0
    omega: float = 1.0
    drive: object = field(default_factory=lambda: Sinusoid(1.0, 1.0, 0.0))


@dataclass(frozen=True)
class DampedOscillator:
    """Exponentially growing mass and spring coefficients; requires the
    underdamped regime omega^2 > gamma^2/4 so the shifted frequency is real."""

    m: float = 1.0
    omega: float = 1.0
    gamma: float = 0.1

    @property
    def shifted_frequency(self):
        disc = self.omega**2 - self.gamma**2 / 4.0
        if disc <= 0.0:
            raise OverdampedPreset(
                "underdamped regime requires omega^2 > gamma^2/4 "
                f"(omega={self.omega}, gamma={self.gamma})"
            )
        return math.sqrt(disc)


def preset_lagrangian(preset, hbar=1.0):
    """Build the QuadraticLagrangian for a preset, natural units by default."""
    if isinstance(preset, FreeParticle):
        return QuadraticLagrangian(Constant(preset.m), Constant(0.0), Constant(0.0), hbar)
    if isinstance(preset, HarmonicOscillator):
        return QuadraticLagrangian(
            Constant(preset.m), Constant(preset.m * preset.omega**2), Constant(0.0), hbar
        )
    if isinstance(preset, DrivenOscillator):
        return QuadraticLagrangian(
            Constant(preset.m), Constant(preset.m * preset.omega**2), preset.drive, hbar
        )
    if isinstance(preset, DampedOscillator):
        preset.shifted_frequency  # raises OverdampedPreset when invalid
        return QuadraticLagrangian(
            Exponential(preset.m, preset.gamma),
            Exponential(preset.m * preset.omega**2, preset.gamma),
            Constant(0.0),
            hbar,
        )
    raise TypeError(f"not a preset: {preset!r}")


def preset_from_dict(doc, where="preset"):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValidationError(f"{where}: expected an object with a 'kind' field")
    kind = doc["kind"]
    m = float(doc.get("m", 1.0))
    if m <= 0:
        raise ValidationError(f"{where}.m: mass must be positive")
    if kind == "free":
        return FreeParticle(m)
    omega = float(doc.get("omega", 1.0))
    if omega <= 0:
        raise ValidationError(f"{where}.omega: frequency must be positive")
    if kind == "harmonic":
        return HarmonicOscillator(m, omega)
    if kind == "driven":
        drive = coefficient_from_dict(doc.get("drive", {"kind": "sinusoid", "amplitude": 1.0, "angular_frequency": 1.0}), f"{where}.drive")
        return DrivenOscillator(m, omega, drive)
    if kind == "damped":
        gamma = float(doc.get("gamma", 0.1))
        if omega**2 <= gamma**2 / 4.0:
            raise ValidationError(
                f"{where}.gamma: underdamped regime requires omega^2 > gamma^2/4"
            )
        return DampedOscillator(m, omega, gamma)
    raise ValidationError(f"{where}.kind: unknown preset '{kind}'")


def preset_to_dict(preset):
    if isinstance(preset, FreeParticle):
        return {"kind": "free", "m": preset.m}
    if isinstance(preset, HarmonicOscillator):
        return {"kind": "harmonic", "m": preset.m, "omega": preset.omega}
    if isinstance(preset, DrivenOscillator):
        return {
            "kind": "driven",
            "m": preset.m,
            "omega": preset.omega,
            "drive": coefficient_to_dict(preset.drive),
        }
    return {"kind": "damped", "m": preset.m, "omega": preset.omega, "gamma": preset.gamma}
