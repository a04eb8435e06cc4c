"""Pair potentials, renormalization constants, mesoscale schedules, confinement."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .core import Params, ParameterError, check_dimension, unit_ball_volume


class _Forbidden:
    """Value of a potential or energy that violates the hard-sphere constraint.

    Deliberately not a float: arithmetic with it raises, so it cannot leak
    into sums as inf or NaN.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "FORBIDDEN"

    def __bool__(self):
        return False

    def __reduce__(self):
        return (_Forbidden, ())


FORBIDDEN = _Forbidden()


def is_forbidden(value) -> bool:
    return value is FORBIDDEN


class NonIntegrableSigma(ParameterError):
    pass


class RegimeMismatch(ParameterError):
    pass


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1}, equal to d * omega_d."""
    d = check_dimension(d)
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


# -----------------------------
# Kernel specification
# -----------------------------

@dataclass(frozen=True)
class KernelSpec:
    """Pair potential determined by (d, sigma, epsilon, r_eps).

    ``regime`` is ``"integrable"`` for sigma in (-d, 0) and ``"regularized"``
    for sigma in [0, 1).
    """

    params: Params

    @classmethod
    def make(cls, d: int, sigma: float, epsilon: float, r_eps: Optional[float] = None) -> "KernelSpec":
        return cls(Params(d, sigma, epsilon, r_eps))

    @property
    def regime(self) -> str:
        return "integrable" if self.params.integrable else "regularized"

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def sigma(self) -> float:
        return self.params.sigma

    @property
    def epsilon(self) -> float:
        return self.params.epsilon

    @property
    def exponent(self) -> float:
        """Decay exponent d + sigma of the attractive tail."""
        return self.params.d + self.params.sigma

    @property
    def tail_start(self) -> float:
        """Distance from which the potential equals -r^{-(d+sigma)}."""
        p = self.params
        return max(2.0 * p.epsilon, p.r_eps or 0.0)

    @property
    def plateau_radius(self) -> float:
        """Radius below which admissible pairs contribute nothing (0 if none)."""
        return self.params.r_eps or 0.0

    def gamma(self) -> float:
        """gamma_{r_eps}^sigma for the regularized regime."""
        if self.params.integrable:
            raise RegimeMismatch("gamma_r is defined for the regularized regime only")
        return gamma_r_sigma(self.d, self.sigma, self.params.r_eps)


def potential(spec: KernelSpec, r: float):
    """Pair potential at distance ``r``; FORBIDDEN below 2*epsilon."""
    r = float(r)
    if r < 0:
        raise ParameterError("distance must be nonnegative")
    p = spec.params
    if r < 2.0 * p.epsilon:
        return FORBIDDEN
    if p.r_eps is not None and r < p.r_eps:
        return 0.0
    return -(r ** -(p.d + p.sigma))


def potential_values(spec: KernelSpec, r: np.ndarray) -> np.ndarray:
    """Vectorized potential for admissible distances (r >= 2*epsilon)."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 2.0 * spec.epsilon):
        raise ParameterError("potential_values needs admissible distances; use potential() for scalars")
    out = -(r ** -spec.exponent)
    if spec.params.r_eps is not None:
        out = np.where(r < spec.params.r_eps, 0.0, out)
    return out


# -----------------------------
# Renormalization constants
# -----------------------------

def gamma_r_sigma(d: int, sigma: float, r: float) -> float:
    """Renormalization constant gamma_r^sigma = -int_{B_1 \\ B_r} |z|^{-(d+sigma)} dz.

    Closed form d*omega_d*(1 - r^{-sigma})/sigma, or d*omega_d*log(r) at
    sigma = 0. Always <= 0 for r in (0, 1].
    """
    d = check_dimension(d)
    if not 0.0 <= sigma < 1.0:
        raise ParameterError(f"sigma must lie in [0, 1), got {sigma!r}")
    if not 0.0 < r <= 1.0:
        raise ParameterError(f"r must lie in (0, 1], got {r!r}")
    area = d * unit_ball_volume(d)
    log_r = math.log(r)
    x = -sigma * log_r
    if x == 0.0:
        return area * log_r
    # log(r) * expm1(x) / x stays accurate as sigma -> 0, even for subnormal sigma
    return area * log_r * (math.expm1(x) / x)


def gamma_R_zero(d: int, R: float) -> float:
    """gamma_R^0 = int_{B_R \\ B_1} |z|^{-d} dz = d*omega_d*log(R)."""
    d = check_dimension(d)
    if not R >= 1.0:
        raise ParameterError(f"R must be at least 1, got {R!r}")
    return d * unit_ball_volume(d) * math.log(R)


def gamma_sigma(d: int, sigma: float) -> float:
    """int_{R^d \\ B_1} |z|^{-(d+sigma)} dz = d*omega_d/sigma, for sigma in (0, 1)."""
    d = check_dimension(d)
    if not 0.0 < sigma < 1.0:
        raise ParameterError(f"sigma must lie in (0, 1), got {sigma!r}")
    return d * unit_ball_volume(d) / sigma


def radial_quadrature(d: int, s: float, r_in: float, r_out: float) -> float:
    """int_{r_in < |z| < r_out} |z|^{-s} dz by adaptive quadrature in log-radius.

    Independent of the closed forms: the sphere area comes from
    2 pi^{d/2} / Gamma(d/2) and the radial integral from QUADPACK.
    """
    area = sphere_area(d)
    a, b = math.log(r_in), math.log(r_out)
    val, _ = integrate.quad(lambda u: math.exp((d - s) * u), a, b, epsabs=0.0, epsrel=1e-13, limit=200)
    return area * val


# -----------------------------
# Mesoscale schedules
# -----------------------------

@dataclass(frozen=True)
class MesoscaleSchedule:
    """r_eps = scale * epsilon**exponent."""

    sigma: float
    exponent: float
    scale: float = 1.0

    def __call__(self, epsilon: float) -> float:
        return self.scale * float(epsilon) ** self.exponent

    def admissibility(self, epsilon: float) -> tuple:
        """The two quantities that must vanish as epsilon -> 0.

        (epsilon^{1/(2 sigma + 1)} / r_eps, epsilon * |log r_eps|^2 / r_eps)
        """
        r = self(epsilon)
        return epsilon ** (1.0 / (2.0 * self.sigma + 1.0)) / r, epsilon * math.log(r) ** 2 / r


def mesoscale_schedule(sigma: float, exponent: Optional[float] = None, scale: float = 1.0) -> MesoscaleSchedule:
    """Default r_eps = epsilon^{1/(2(2 sigma + 1))}, and epsilon^{1/2} at sigma = 0.

    The default exponent is half the critical one 1/(2 sigma + 1), so
    epsilon^{1/(2 sigma+1)}/r_eps = epsilon^{1/(2(2 sigma+1))} -> 0 and
    epsilon |log r_eps|^2 / r_eps -> 0 both hold.
    """
    if not 0.0 <= sigma < 1.0:
        raise ParameterError(f"sigma must lie in [0, 1), got {sigma!r}")
    if exponent is None:
        exponent = 0.5 / (2.0 * sigma + 1.0)
    if not 0.0 < exponent < 1.0:
        raise ParameterError("schedule exponent must lie in (0, 1)")
    return MesoscaleSchedule(float(sigma), float(exponent), float(scale))


# -----------------------------
# Confinement
# -----------------------------

@dataclass(frozen=True)
class ConfinementSpec:
    """Radial confinement g(x) = G(|x|), default G(t) = C1 + C2 * t**power.

    ``power`` defaults to -sigma of the kernel it is paired with; it is
    stored explicitly so the object is self-contained. A custom ``profile``
    callable G replaces the power law.
    """

    c1: float
    c2: float
    power: float
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if not self.c2 > 0:
            raise ParameterError("C2 must be positive")
        if not self.power > 0:
            raise ParameterError("confinement power must be positive")

    @classmethod
    def for_sigma(cls, c1: float, c2: float, sigma: float) -> "ConfinementSpec":
        if not sigma < 0:
            raise NonIntegrableSigma("confinement is paired with sigma < 0")
        return cls(float(c1), float(c2), -float(sigma))

    def radial(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        if self.profile is not None:
            return np.asarray(self.profile(t), dtype=np.float64)
        return self.c1 + self.c2 * t ** self.power

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return self.radial(np.sqrt(np.sum(x * x, axis=-1)))

