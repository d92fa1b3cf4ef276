"""Exact laws, constants and asymptotics of the stable first-passage model.

Everything in this module is analytic: validated process parameters, the
derived constants (c1, k0, k0_hat, k_inf), the characteristic exponent, the
exact overshoot CDF, the closed-form asymptotic laws of passage times and
suprema, and the harmonic functions of the conditioned dual process.  No
randomness lives here; the functions are pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate
from scipy.special import gamma as _gamma

__all__ = [
    "ParameterError",
    "QuadratureError",
    "StableParams",
    "DerivedConstants",
    "ASYMPTOTE_KINDS",
    "validate_params",
    "derived_constants",
    "characteristic_exponent",
    "overshoot_cdf_exact",
    "asymptote",
    "asymptote_exponent",
    "h_functions",
]

# Slack for float comparisons at the admissible-region boundaries, so that
# e.g. rho = 1/3 with alpha = 1.5 is accepted as the spectrally positive case
# even though 1 - 1/1.5 != 1/3 in binary floats.
_BOUNDARY_SLACK = 1e-12

# |alpha*(1-rho) - 1| below this counts as spectrally positive.
_SPECTRAL_TOL = 1e-9


class ParameterError(ValueError):
    """A parameter combination outside the admissible stable regime.

    Carries a ``violation`` tag naming the failed rule.
    """

    def __init__(self, violation: str, message: str):
        super().__init__(message)
        self.violation = violation


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved_error: float):
        super().__init__(f"{message} (achieved error estimate {achieved_error:.3e})")
        self.achieved_error = achieved_error


@dataclass(frozen=True)
class StableParams:
    """Parameters (alpha, rho, c) of a strictly stable process.

    alpha is the stability index in (1, 2), rho = P(X_1 > 0) the positivity
    parameter, and c > 0 the scale constant of the characteristic exponent
    c*|u|^alpha*(1 - i*sgn(u)*tan(pi*alpha*(2*rho-1)/2)).  The admissible
    region requires alpha*rho < 1 (the process has positive jumps) and
    rho >= 1 - 1/alpha, with equality exactly in the spectrally positive
    case.
    """

    alpha: float
    rho: float
    c: float = 1.0

    def __post_init__(self):
        validate_params(self)

    @property
    def alpha_rho(self) -> float:
        return self.alpha * self.rho

    @property
    def is_spectrally_positive(self) -> bool:
        return abs(self.alpha * (1.0 - self.rho) - 1.0) <= _SPECTRAL_TOL


def validate_params(p: StableParams) -> StableParams:
    """Check the standing assumptions; return ``p`` unchanged if they hold.

    Raises ParameterError with a named violation otherwise:
    ``alpha_out_of_range``, ``alpha_rho_not_below_one``,
    ``rho_below_spectral_boundary`` or ``scale_not_positive``.
    """
    if not (1.0 < p.alpha < 2.0):
        raise ParameterError(
            "alpha_out_of_range", f"alpha must lie in (1, 2), got {p.alpha}"
        )
    if p.alpha * p.rho >= 1.0 - _BOUNDARY_SLACK:
        raise ParameterError(
            "alpha_rho_not_below_one",
            f"alpha*rho < 1 is required (positive jumps); got alpha*rho = {p.alpha * p.rho}",
        )
    if p.rho < (1.0 - 1.0 / p.alpha) - _BOUNDARY_SLACK:
        raise ParameterError(
            "rho_below_spectral_boundary",
            f"rho must be >= 1 - 1/alpha = {1.0 - 1.0 / p.alpha}; got rho = {p.rho}",
        )
    if not p.c > 0.0:
        raise ParameterError("scale_not_positive", f"c must be > 0, got {p.c}")
    return p


@dataclass(frozen=True)
class DerivedConstants:
    """Closed-form constants derived from (alpha, rho, c).

    c1, k0, k0_hat and k_inf drive every identity checked by the toolkit;
    skew and scale_std map the model onto the classical (alpha, beta, sigma)
    parametrization used by the increment sampler.
    """

    c1: float
    k0: float
    k0_hat: float
    k_inf: float
    skew: float
    scale_std: float


def derived_constants(p: StableParams) -> DerivedConstants:
    """Evaluate c1, k0, k0_hat, k_inf and the sampler parametrization map."""
    a, r, c = p.alpha, p.rho, p.c
    theta = math.pi * a * (2.0 * r - 1.0) / 2.0
    # |alpha*(2 rho - 1)| < 1 inside the admissible region, so cos(theta) > 0.
    c1 = c / abs(math.cos(theta))
    k0 = 1.0 / (c1**r * _gamma(1.0 - r) * _gamma(1.0 + a * r))
    k0_hat = 1.0 / (c1 ** (1.0 - r) * _gamma(r) * _gamma(1.0 + a * (1.0 - r)))
    k_inf = c1 * _gamma(a) * math.sin(math.pi * a * r) / math.pi
    skew = math.tan(theta) / math.tan(math.pi * a / 2.0)
    scale_std = c ** (1.0 / a)
    return DerivedConstants(
        c1=c1, k0=k0, k0_hat=k0_hat, k_inf=k_inf, skew=skew, scale_std=scale_std
    )


def characteristic_exponent(p: StableParams, lam: float) -> complex:
    """Characteristic exponent c*|u|^alpha*(1 - i*sgn(u)*tan(pi*alpha*(2rho-1)/2))."""
    if lam == 0.0:
        return 0.0 + 0.0j
    theta = math.pi * p.alpha * (2.0 * p.rho - 1.0) / 2.0
    sign = 1.0 if lam > 0 else -1.0
    return p.c * abs(lam) ** p.alpha * complex(1.0, -sign * math.tan(theta))


def overshoot_cdf_exact(
    p: StableParams, y: float, eps: float, abs_tol: float = 1e-10
) -> float:
    """Exact CDF P(K_y <= eps) of the overshoot at first passage above y.

    Evaluates
        sin(pi*alpha*rho)/pi * y^(alpha*rho) * eps^(1-alpha*rho)
            * int_0^1 du / ((u*eps + y) * u^(alpha*rho)),
    after the substitution u = v^(1/(1-alpha*rho)), which removes the
    endpoint singularity and leaves a smooth integrand on [0, 1].
    """
    validate_params(p)
    if y <= 0:
        raise ValueError(f"level y must be > 0, got {y}")
    if eps < 0:
        raise ValueError(f"threshold eps must be >= 0, got {eps}")
    if eps == 0.0:
        return 0.0
    ar = p.alpha_rho
    q = 1.0 / (1.0 - ar)

    def integrand(v: float) -> float:
        return 1.0 / (eps * v**q + y)

    val, err = integrate.quad(integrand, 0.0, 1.0, epsabs=abs_tol, epsrel=abs_tol)
    if err > max(100.0 * abs_tol, 1e-8 * abs(val)):
        raise QuadratureError("overshoot CDF quadrature did not converge", err)
    psi = math.sin(math.pi * ar) / math.pi * y**ar * eps ** (1.0 - ar) * q * val
    return min(psi, 1.0)


# Tail exponents of the asymptotic laws, in the running argument of each
# regime (the level x for the supremum laws, the time/threshold arg
# otherwise).  ft0_large is exponent-only: its prefactor is not known in
# closed form.
_TAIL_EXPONENTS = {
    "sup_lower": lambda p: p.alpha_rho,
    "sup_upper": lambda p: -p.alpha,
    "tx_small": lambda p: 1.0,
    "t0_small": lambda p: 1.0 + p.rho,
    "ftx_small": lambda p: 0.0,
    "ftx_large": lambda p: -(1.0 + p.rho),
    "ft0_small": lambda p: p.rho,
    "ft0_large": lambda p: -1.0 - 1.0 / p.alpha,
    "overshoot_small": lambda p: 1.0 - p.alpha_rho,
}

ASYMPTOTE_KINDS = frozenset(
    {
        "sup_lower",
        "sup_upper",
        "tx_small",
        "t0_small",
        "ftx_small",
        "ftx_large",
        "ft0_small",
        "overshoot_small",
    }
)


def asymptote_exponent(p: StableParams, kind: str) -> float:
    """Tail exponent of an asymptotic regime; includes exponent-only ft0_large."""
    validate_params(p)
    try:
        return _TAIL_EXPONENTS[kind](p)
    except KeyError:
        raise ValueError(f"unknown asymptote kind {kind!r}") from None


def asymptote(p: StableParams, kind: str, x: float, arg: float = 1.0) -> float:
    """Closed-form asymptotic value of the requested regime.

    ``x`` is the passage level; ``arg`` is the running variable (time for
    the *_small / *_large regimes of passage laws, the overshoot threshold
    for ``overshoot_small``).  Kinds:

    - sup_lower       P(S_1 <= x) ~ k0 * x^(alpha*rho)            as x -> 0
    - sup_upper       P(S_1 > x)  ~ k_inf * x^(-alpha)            as x -> inf
    - tx_small        P(T_x <= u) ~ k_inf * x^(-alpha) * u        as u -> 0
    - t0_small        P(T_x^0 <= u), small u
    - ftx_small       f_{T_x}(t)  -> k_inf * x^(-alpha)           as t -> 0
    - ftx_large       f_{T_x}(t)  ~ rho*k0*x^(alpha*rho)*t^(-1-rho)
    - ft0_small       f_{T_x^0}(t), small t
    - overshoot_small P(K_x <= h) ~ sin(pi a r)/(pi(1-a r)) * (h/x)^(1-a r)

    The large-time tail of f_{T_x^0} has an unknown prefactor; requesting
    ``ft0_large`` raises (only its exponent is exposed, via
    :func:`asymptote_exponent`).
    """
    validate_params(p)
    if kind == "ft0_large":
        raise ValueError(
            "ft0_large has no known prefactor; only asymptote_exponent is available"
        )
    if kind not in ASYMPTOTE_KINDS:
        raise ValueError(f"unknown asymptote kind {kind!r}")
    if x <= 0:
        raise ValueError(f"level x must be > 0, got {x}")
    if arg <= 0:
        raise ValueError(f"arg must be > 0, got {arg}")
    a, r = p.alpha, p.rho
    d = derived_constants(p)
    if kind == "sup_lower":
        return d.k0 * x ** (a * r)
    if kind == "sup_upper":
        return d.k_inf * x**-a
    if kind == "tx_small":
        return d.k_inf * x**-a * arg
    if kind == "t0_small":
        pref = (d.k_inf / d.k0) * math.sin(math.pi * r) / (math.pi * r**2 * (1.0 + r))
        return pref * x ** (-a * (1.0 + r)) * arg ** (1.0 + r)
    if kind == "ftx_small":
        return d.k_inf * x**-a
    if kind == "ftx_large":
        return r * d.k0 * x ** (a * r) * arg ** (-(1.0 + r))
    if kind == "ft0_small":
        pref = (d.k_inf / d.k0) * math.sin(math.pi * r) / (math.pi * r**2)
        return pref * x ** (-a * (1.0 + r)) * arg**r
    # overshoot_small
    ar = p.alpha_rho
    return math.sin(math.pi * ar) / (math.pi * (1.0 - ar)) * (arg / x) ** (1.0 - ar)


def h_functions(p: StableParams, x: float) -> tuple[float, float]:
    """Harmonic functions (h, h_hat) of the process conditioned to die at 0.

    h(x) = Gamma(rho) * k0_hat * x^(alpha*(1-rho)) and
    h_hat(x) = Gamma(1-rho) * k0 * x^(alpha*rho); both scale as exact power
    laws in x.
    """
    validate_params(p)
    if x <= 0:
        raise ValueError(f"level x must be > 0, got {x}")
    d = derived_constants(p)
    h = _gamma(p.rho) * d.k0_hat * x ** (p.alpha * (1.0 - p.rho))
    h_hat = _gamma(1.0 - p.rho) * d.k0 * x ** (p.alpha * p.rho)
    return h, h_hat
