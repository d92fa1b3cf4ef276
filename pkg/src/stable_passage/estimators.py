"""Estimators turning passage ensembles into laws, densities and identity checks.

Every estimator is a pure function of immutable inputs and reports a
standard error next to its value.  Censoring treatment is uniform: plug-in
means over the full record count wherever the censored contribution is
identically zero (indicators of events inside the horizon), and analytic
tail completion using the known large-time density asymptote where a
positive-moment tail is cut off by the horizon.  Singular kernels of the
form (t - s)^(-p) over grid-aligned samples are integrated exactly over
each grid cell, which removes the endpoint bias analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import beta as _beta_fn
from scipy.special import gamma as _gamma

from stable_passage.model import (
    StableParams,
    asymptote,
    derived_constants,
    overshoot_cdf_exact,
)
from stable_passage.sampling import PassageEnsemble, RngStream, sample_inverse_beta

__all__ = [
    "EstimatorError",
    "ScalarEstimate",
    "DensityEstimate",
    "WeightedSamples",
    "EpsilonEnsemble",
    "MellinCheck",
    "LaplaceSuite",
    "TxResample",
    "t0_cdf_timeweight",
    "t0_survival_pathweight",
    "t0_epsilon_ensemble",
    "mellin_check",
    "ftx_from_t0",
    "ftx_curve_from_t0",
    "integrate_ftx_with_tail",
    "fs1_from_ftx",
    "laplace_suite",
    "resample_tx_from_t0",
    "kde_pdf",
    "meander_quantities_from_t0",
    "ftx_from_rhat",
    "meander_terminal_density",
    "tail_slope",
    "ecdf_ks",
]


class EstimatorError(ValueError):
    """An estimator was asked for something its inputs cannot support."""


@dataclass(frozen=True)
class ScalarEstimate:
    value: float
    stderr: float
    diagnostics: dict = field(default_factory=dict)


@dataclass
class DensityEstimate:
    """Grid of (abscissa, value, stderr) for an estimated pdf/cdf/survival."""

    abscissae: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    kind: str
    provenance: str = ""
    clamped: bool = False

    def __post_init__(self):
        self.abscissae = np.asarray(self.abscissae, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.stderr = np.asarray(self.stderr, dtype=float)
        if not (len(self.abscissae) == len(self.values) == len(self.stderr)):
            raise ValueError("abscissae, values and stderr must have equal length")
        if np.any(np.diff(self.abscissae) <= 0):
            raise ValueError("abscissae must be strictly increasing")
        if self.kind not in ("pdf", "cdf", "survival"):
            raise ValueError(f"unknown estimate kind {self.kind!r}")
        if np.any(self.stderr < 0):
            raise ValueError("stderr must be nonnegative")
        if self.kind == "pdf" and np.any(self.values < 0):
            raise ValueError("pdf values must be nonnegative")
        if self.kind in ("cdf", "survival"):
            if np.any(self.values < 0) or np.any(self.values > 1):
                raise ValueError(f"{self.kind} values must lie in [0, 1]")
            diffs = np.diff(self.values)
            if self.kind == "cdf" and np.any(diffs < 0):
                raise ValueError("cdf values must be nondecreasing")
            if self.kind == "survival" and np.any(diffs > 0):
                raise ValueError("survival values must be nonincreasing")


def clamp_monotone_cdf(
    abscissae, values, stderr, provenance: str = ""
) -> DensityEstimate:
    """Build a cdf estimate, clamping to [0,1] and monotone with a flag."""
    v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    mono = np.maximum.accumulate(v)
    clamped = bool(np.any(mono != values))
    return DensityEstimate(
        abscissae, mono, stderr, kind="cdf", provenance=provenance, clamped=clamped
    )


@dataclass(frozen=True)
class WeightedSamples:
    """Positive support points with normalized nonnegative weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if len(pts) != len(w):
            raise ValueError("points and weights must have equal length")
        if np.any(pts <= 0):
            raise ValueError("points must be positive")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        total = w.sum()
        if not math.isclose(total, 1.0, rel_tol=1e-9):
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def effective_sample_size(self) -> float:
        return float(1.0 / np.sum(self.weights**2))


def _mean_se(contrib: np.ndarray) -> tuple[float, float]:
    n = len(contrib)
    m = float(np.mean(contrib))
    se = float(np.std(contrib) / math.sqrt(n)) if n > 1 else float("inf")
    return m, se


# ---------------------------------------------------------------------------
# cell-exact singular kernels over grid-aligned sample times
# ---------------------------------------------------------------------------


def _cell_kernel(tgap: np.ndarray, dt: float, power: float) -> np.ndarray:
    """Average of u^(power-1) over the cell [tgap, tgap+dt], divided by dt.

    Grid passage times represent a true time inside the preceding grid
    cell; averaging the kernel over the cell keeps integrable singularities
    (power in (0,1)) finite and is second-order accurate away from them.
    """
    hi = (tgap + dt) ** power
    lo = np.where(tgap > 0, tgap, 0.0) ** power
    return (hi - lo) / (power * dt)


def t0_cdf_timeweight(ens: PassageEnsemble, t: float) -> ScalarEstimate:
    """Time-weight route to P(T_x^0 <= t).

    Evaluates sin(pi rho)/(k0 pi rho) * x^(-a r) * E[T 1{T<=t} (t-T)^(rho-1)]
    as a plug-in over all records (censored ones contribute exactly zero for
    t below the horizon, so there is no censoring bias).  The singular
    weight is cell-averaged over the passage-time grid.  Values are clamped
    to [0, 1] with a diagnostics flag.

    The estimator degrades for large t (the weight has infinite variance in
    the far tail), so t is restricted to the ensemble's empirical 90th
    percentile of T_x.
    """
    p = ens.config.params
    if t <= 0:
        raise EstimatorError(f"t must be > 0, got {t}")
    times = ens.uncensored_times
    t_max = float(np.quantile(times, 0.9))
    if t > t_max:
        raise EstimatorError(
            f"t={t} outside the reliable window (empirical 90th percentile of "
            f"T_x is {t_max:.4g}); use the path-weight route for large t"
        )
    d = derived_constants(p)
    const = (
        math.sin(math.pi * p.rho)
        / (d.k0 * math.pi * p.rho)
        * ens.config.x ** (-p.alpha_rho)
    )
    contrib = np.zeros(len(ens))
    sel = times <= t
    gaps = t - times[sel]
    w = times[sel] * _cell_kernel(gaps, ens.config.dt, p.rho)
    contrib[: sel.sum()] = w  # zeros elsewhere; order is irrelevant for mean/se
    m, se = _mean_se(contrib)
    value = const * m
    clamped = not 0.0 <= value <= 1.0
    return ScalarEstimate(
        value=min(max(value, 0.0), 1.0),
        stderr=const * se,
        diagnostics={"clamped": clamped, "raw_value": value},
    )


def t0_survival_pathweight(
    ens: PassageEnsemble, t: float, cap_quantile: float = 0.999
) -> ScalarEstimate:
    """Path-weight route to P(T_x^0 > t) at a recorded checkpoint.

    Evaluates E[1{T_x > t} ((x - X_t)/x)^(a r - 1)] as a plug-in over all
    records (censored records have T_x beyond the horizon and enter the
    indicator).  The weight is unbounded as X_t approaches x, so it is
    capped at its empirical ``cap_quantile``; the capped mass fraction is
    reported in the diagnostics.
    """
    if t == 0.0:
        return ScalarEstimate(1.0, 0.0, {"cap_fraction": 0.0})
    j = ens.checkpoint_index(t)
    p = ens.config.params
    x = ens.config.x
    pos = ens.positions[:, j]
    present = ~np.isnan(pos)
    w = ((x - pos[present]) / x) ** (p.alpha_rho - 1.0)
    cap = float(np.quantile(w, cap_quantile)) if len(w) else float("inf")
    capped = w > cap
    w = np.minimum(w, cap)
    contrib = np.zeros(len(ens))
    contrib[: len(w)] = w
    m, se = _mean_se(contrib)
    return ScalarEstimate(
        value=m,
        stderr=se,
        diagnostics={
            "cap_fraction": float(capped.mean()) if len(w) else 0.0,
            "cap_value": cap,
        },
    )


@dataclass(frozen=True)
class EpsilonEnsemble:
    """Approximate T_x^0 sample: passage times of small-overshoot records."""

    eps: float
    times: np.ndarray
    retained_fraction: float
    retained_stderr: float
    predicted_retention: float


def t0_epsilon_ensemble(ens: PassageEnsemble, eps: float) -> EpsilonEnsemble:
    """Passage times of records with overshoot <= eps.

    The retained fraction (relative to uncensored records) estimates
    P(K_x <= eps) and is reported next to the exact quadrature value.
    """
    if eps <= 0:
        raise EstimatorError(f"eps must be > 0, got {eps}")
    over = ens.uncensored_overshoots
    keep = over <= eps
    if not keep.any():
        raise EstimatorError(f"no records with overshoot <= {eps}")
    frac = float(keep.mean())
    se = math.sqrt(frac * (1.0 - frac) / len(over))
    predicted = overshoot_cdf_exact(ens.config.params, ens.config.x, eps)
    return EpsilonEnsemble(
        eps=eps,
        times=ens.uncensored_times[keep],
        retained_fraction=frac,
        retained_stderr=se,
        predicted_retention=predicted,
    )


def _tail_moment(p: StableParams, x: float, horizon: float, power: float) -> float:
    """Integral of t^power against the large-t density rho k0 x^(a r) t^(-1-rho)
    over (horizon, inf); finite for power < rho."""
    d = derived_constants(p)
    r = p.rho
    if power >= r:
        raise EstimatorError(f"tail completion requires power < rho, got {power}")
    return r * d.k0 * x ** (p.alpha_rho) * horizon ** (power - r) / (r - power)


@dataclass(frozen=True)
class MellinCheck:
    beta: float
    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_stderr: float


def mellin_check(
    ens: PassageEnsemble, t0s: np.ndarray, beta: float
) -> MellinCheck:
    """Both sides of E[(1/T_x^0)^beta] = x^(-a r) E[(1/T_x)^(beta-rho)] /
    (k0 rho B(beta, 1-rho)) for beta in (0, 1+rho).

    The left side is the empirical mean over the epsilon-ensemble sample;
    the right side's T_x moment is a plug-in over all records with the
    censored tail completed analytically from the large-t density asymptote.
    """
    p = ens.config.params
    if not 0.0 < beta < 1.0 + p.rho:
        raise EstimatorError(f"beta must lie in (0, 1+rho), got {beta}")
    t0s = np.asarray(t0s, dtype=float)
    lhs, lhs_se = _mean_se(t0s**-beta)
    power = p.rho - beta
    contrib = np.zeros(len(ens))
    u = ens.uncensored_times**power
    contrib[: len(u)] = u
    m, m_se = _mean_se(contrib)
    m += _tail_moment(p, ens.config.x, ens.config.horizon, power)
    d = derived_constants(p)
    const = ens.config.x ** (-p.alpha_rho) / (d.k0 * p.rho * _beta_fn(beta, 1.0 - p.rho))
    return MellinCheck(
        beta=beta, lhs=lhs, lhs_stderr=lhs_se, rhs=const * m, rhs_stderr=const * m_se
    )


def ftx_from_t0(
    t0s: np.ndarray, p: StableParams, x: float, t: float, dt: float
) -> ScalarEstimate:
    """Density of T_x at t from a T_x^0 sample:
    f(t) = k0 rho x^(a r) t^(-1) E[1{T0 <= t} (t - T0)^(-rho)].

    The singular kernel is cell-averaged over the sample's time grid, which
    integrates the (t-s)^(-rho) endpoint exactly.  With no sample mass at or
    below t the estimate is 0 with a ``no_support`` flag.
    """
    if t <= 0:
        raise EstimatorError(f"t must be > 0, got {t}")
    t0s = np.asarray(t0s, dtype=float)
    d = derived_constants(p)
    const = d.k0 * p.rho * x**p.alpha_rho / t
    sel = t0s <= t
    if not sel.any():
        return ScalarEstimate(0.0, float("nan"), {"no_support": True})
    contrib = np.zeros(len(t0s))
    contrib[: sel.sum()] = _cell_kernel(t - t0s[sel], dt, 1.0 - p.rho)
    m, se = _mean_se(contrib)
    return ScalarEstimate(const * m, const * se)


def ftx_curve_from_t0(
    t0s: np.ndarray, p: StableParams, x: float, grid: np.ndarray, dt: float
) -> DensityEstimate:
    """Theorem-route density of T_x evaluated on a time grid."""
    grid = np.asarray(grid, dtype=float)
    vals = np.empty(len(grid))
    errs = np.empty(len(grid))
    for i, t in enumerate(grid):
        est = ftx_from_t0(t0s, p, x, float(t), dt)
        vals[i] = est.value
        errs[i] = 0.0 if math.isnan(est.stderr) else est.stderr
    return DensityEstimate(
        grid, vals, errs, kind="pdf",
        provenance=f"ftx_from_t0 over {len(t0s)} T0 samples, dt={dt}",
    )


def integrate_ftx_with_tail(curve: DensityEstimate, p: StableParams, x: float) -> float:
    """Trapezoid integral of a T_x density curve, completed analytically.

    The head below the first grid point uses the small-t plateau
    k_inf x^(-alpha); the tail beyond the last point integrates the
    rho k0 x^(a r) t^(-1-rho) asymptote exactly.
    """
    g, v = curve.abscissae, curve.values
    core = float(np.trapezoid(v, g))
    head = asymptote(p, "ftx_small", x) * g[0]
    d = derived_constants(p)
    tail = d.k0 * x**p.alpha_rho * g[-1] ** (-p.rho)
    return core + head + tail


def fs1_from_ftx(fhat: DensityEstimate, p: StableParams, x: float) -> DensityEstimate:
    """Map a density of T_x to the density of S_1 via S_1 = x T_x^(-1/alpha).

    f_{S_1}(y) = (alpha/x) t^(1+1/alpha) f_{T_x}(t) at t = (x/y)^alpha; the
    time grid maps to the decreasing level grid y = x t^(-1/alpha), so the
    output arrays are reversed to increasing y.
    """
    if fhat.kind != "pdf":
        raise EstimatorError("fs1_from_ftx needs a pdf estimate of T_x")
    t = fhat.abscissae
    y = x * t ** (-1.0 / p.alpha)
    factor = (p.alpha / x) * t ** (1.0 + 1.0 / p.alpha)
    vals = factor * fhat.values
    errs = factor * fhat.stderr
    order = np.argsort(y)
    return DensityEstimate(
        y[order], vals[order], errs[order], kind="pdf",
        provenance=f"fs1_from_ftx <- {fhat.provenance}",
    )


@dataclass(frozen=True)
class LaplaceSuite:
    lam: float
    f_lambda: float
    f_lambda_stderr: float
    ell: float
    ell_stderr: float
    l_t0_direct: float
    l_t0_direct_stderr: float
    l_t0_formula: float
    l_t0_formula_stderr: float
    ref_limit: float


def laplace_suite(
    ens: PassageEnsemble, t0s: np.ndarray, p: StableParams, x: float, lam: float
) -> LaplaceSuite:
    """Laplace-transform identities around f_lambda(x) = (lam a/x) E[T e^(-lam T)].

    Reports f_lambda, the slowly varying ell(lam) = lam f_lambda(x) with its
    limit a k_inf / x^(a+1), and both routes to E[exp(-lam T_x^0)]: the
    direct mean over the epsilon-ensemble and the closed-form transform of
    f_lambda.  Censored records contribute exp(-lam*T) < exp(-lam*horizon),
    which is far below the standard errors for lam >= 1; they are treated
    as zero.
    """
    if lam <= 0:
        raise EstimatorError(f"lambda must be > 0, got {lam}")
    contrib = np.zeros(len(ens))
    u = ens.uncensored_times * np.exp(-lam * ens.uncensored_times)
    contrib[: len(u)] = u
    m, se = _mean_se(contrib)
    c_f = lam * p.alpha / x
    f_lambda, f_se = c_f * m, c_f * se
    d = derived_constants(p)
    c_l = (
        x ** (1.0 - p.alpha_rho)
        * lam ** (-p.rho)
        / (d.k0 * _gamma(1.0 - p.rho) * p.alpha * p.rho)
    )
    t0s = np.asarray(t0s, dtype=float)
    l_dir, l_dir_se = _mean_se(np.exp(-lam * t0s))
    return LaplaceSuite(
        lam=lam,
        f_lambda=f_lambda,
        f_lambda_stderr=f_se,
        ell=lam * f_lambda,
        ell_stderr=lam * f_se,
        l_t0_direct=l_dir,
        l_t0_direct_stderr=l_dir_se,
        l_t0_formula=c_l * f_lambda,
        l_t0_formula_stderr=c_l * f_se,
        ref_limit=p.alpha * d.k_inf / x ** (p.alpha + 1.0),
    )


@dataclass(frozen=True)
class TxResample:
    weighted: WeightedSamples
    samples: np.ndarray


def resample_tx_from_t0(
    stream: RngStream, t0s: np.ndarray, p: StableParams, n: int | None = None
) -> TxResample:
    """Sample the law of T_x from a T_x^0 sample via the inverse-beta identity:
    size-bias the T0 points by s^(-rho), then multiply by independent
    1/Beta(rho, 1-rho) draws.  Every output exceeds its source point.
    """
    t0s = np.asarray(t0s, dtype=float)
    if len(t0s) == 0:
        raise EstimatorError("empty T0 sample")
    n = len(t0s) if n is None else int(n)
    w = t0s**-p.rho
    w = w / w.sum()
    weighted = WeightedSamples(points=t0s, weights=w)
    gen = stream.generator()
    idx = gen.choice(len(t0s), size=n, replace=True, p=w)
    inv_beta = sample_inverse_beta(
        RngStream(stream.master_seed, stream.stream_index + 1), p.rho, 1.0 - p.rho, n
    )
    return TxResample(weighted=weighted, samples=t0s[idx] * inv_beta)


def kde_pdf(
    samples: np.ndarray, grid: np.ndarray, bandwidth: float | None = None
) -> DensityEstimate:
    """Gaussian kernel density on the log scale, back-transformed.

    Uses Silverman's rule 0.9 min(sd, iqr/1.34) n^(-1/5) on log(samples)
    unless an explicit log-scale bandwidth is given; the log transform
    respects the strictly positive support.  Pointwise stderr is the usual
    sqrt(g R(K) / (n h)) of the log-density, transported to the linear scale.
    """
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 100:
        raise EstimatorError(f"kde needs at least 100 samples, got {len(samples)}")
    if np.any(samples <= 0):
        raise EstimatorError("kde_pdf requires strictly positive samples")
    grid = np.asarray(grid, dtype=float)
    logs = np.log(samples)
    if bandwidth is None:
        sd = float(np.std(logs))
        iqr = float(np.subtract(*np.percentile(logs, [75, 25])))
        scale = min(sd, iqr / 1.34) if iqr > 0 else sd
        if scale <= 0:
            raise EstimatorError("degenerate sample; pass an explicit bandwidth")
        bandwidth = 0.9 * scale * len(samples) ** -0.2
    h = float(bandwidth)
    u = np.log(grid)
    g = np.empty(len(grid))
    norm = 1.0 / (len(samples) * h * math.sqrt(2.0 * math.pi))
    block = max(1, 2**22 // max(len(samples), 1))
    for i in range(0, len(grid), block):
        z = (u[i : i + block, None] - logs[None, :]) / h
        g[i : i + block] = np.exp(-0.5 * z**2).sum(axis=1) * norm
    r_k = 1.0 / (2.0 * math.sqrt(math.pi))
    g_se = np.sqrt(np.maximum(g, 0.0) * r_k / (len(samples) * h))
    return DensityEstimate(
        grid, g / grid, g_se / grid, kind="pdf",
        provenance=f"log-scale gaussian kde, n={len(samples)}, h={h:.4g}",
    )


def meander_quantities_from_t0(
    ft0: DensityEstimate, p: StableParams, x: float
) -> tuple[DensityEstimate, DensityEstimate]:
    """Excursion entrance density r_hat_t(x) and meander terminal density
    m_hat_t(x) on the time grid of a T_x^0 density estimate:

        r_hat_t(x) = a r k0 Gamma(1-rho) x^(a r - 1) f_{T_x^0}(t)
        m_hat_t(x) = Gamma(rho) t^(1-rho) r_hat_t(x)
    """
    if ft0.kind != "pdf":
        raise EstimatorError("meander quantities need a pdf estimate of T_x^0")
    d = derived_constants(p)
    c_r = p.alpha_rho * d.k0 * _gamma(1.0 - p.rho) * x ** (p.alpha_rho - 1.0)
    t = ft0.abscissae
    r_vals = c_r * ft0.values
    r_errs = c_r * ft0.stderr
    m_fac = _gamma(p.rho) * t ** (1.0 - p.rho)
    r_hat = DensityEstimate(
        t, r_vals, r_errs, kind="pdf",
        provenance=f"r_hat from {ft0.provenance}",
    )
    m_hat = DensityEstimate(
        t, m_fac * r_vals, m_fac * r_errs, kind="pdf",
        provenance=f"m_hat from {ft0.provenance}",
    )
    return r_hat, m_hat


def _singular_conv(grid, vals, t, rho):
    """int_0^t (t-s)^(-rho) f(s) ds for piecewise-linear f given on grid,
    extended linearly from (0, 0) below the first node.  Returns the value
    and the per-node weight vector of the linear functional."""
    nodes = np.concatenate([[0.0], grid])
    f = np.concatenate([[0.0], vals])
    weights = np.zeros(len(nodes))
    for i in range(len(nodes) - 1):
        a, b = nodes[i], nodes[i + 1]
        if a >= t:
            break
        fb_interp = None
        if b > t:
            # cell straddling t: interpolate f at t, integrate up to t
            frac = (t - a) / (b - a)
            fb_interp = frac
            b = t
        ua, ub = t - a, t - b
        v1 = (ua ** (1.0 - rho) - ub ** (1.0 - rho)) / (1.0 - rho)
        v2 = (ua ** (2.0 - rho) - ub ** (2.0 - rho)) / (2.0 - rho)
        width = b - a
        wa = (v2 - (t - b) * v1) / width
        wb = ((t - a) * v1 - v2) / width
        if fb_interp is None:
            weights[i] += wa
            weights[i + 1] += wb
        else:
            # f(t) = (1-frac) f(a') + frac f(b') on the original cell
            weights[i] += wa + wb * (1.0 - fb_interp)
            weights[i + 1] += wb * fb_interp
    total = float(weights @ f)
    return total, weights[1:]  # drop the synthetic origin node


def ftx_from_rhat(
    r_hat: DensityEstimate, p: StableParams, x: float, t: float
) -> ScalarEstimate:
    """Convolution route to the density of T_x:
    f(t) = x/(alpha Gamma(1-rho) t) * int_0^t (t-s)^(-rho) r_hat_s(x) ds.

    The grid must carry at least 32 nodes below t.  The singular kernel is
    integrated in closed form against the piecewise-linear r_hat curve;
    stderr combines the node errors through the same linear weights
    (independent-node approximation).
    """
    nodes_below = int(np.sum(r_hat.abscissae < t))
    if nodes_below < 32:
        raise EstimatorError(
            f"grid too coarse for the convolution: {nodes_below} nodes below t={t}"
        )
    integral, w = _singular_conv(r_hat.abscissae, r_hat.values, t, p.rho)
    const = x / (p.alpha * _gamma(1.0 - p.rho) * t)
    se = const * math.sqrt(float(np.sum((w * r_hat.stderr) ** 2)))
    return ScalarEstimate(const * integral, se)


def meander_terminal_density(
    ft0: DensityEstimate, p: StableParams, x: float, t: float, y_grid: np.ndarray
) -> DensityEstimate:
    """m_hat_t as a function of the level y, from one T_x^0 density estimate.

    Scaling gives f_{T_y^0}(t) = (x/y)^alpha f_{T_x^0}(t (x/y)^alpha), so
    m_hat_t(y) = Gamma(rho) t^(1-rho) a r k0 Gamma(1-rho) y^(a r - 1)
    (x/y)^alpha f_{T_x^0}(t (x/y)^alpha); values outside the estimated time
    grid are taken as zero.
    """
    y_grid = np.asarray(y_grid, dtype=float)
    d = derived_constants(p)
    c = (
        _gamma(p.rho)
        * t ** (1.0 - p.rho)
        * p.alpha_rho
        * d.k0
        * _gamma(1.0 - p.rho)
    )
    ratio = (x / y_grid) ** p.alpha
    t_arg = t * ratio
    f = np.interp(t_arg, ft0.abscissae, ft0.values, left=0.0, right=0.0)
    se = np.interp(t_arg, ft0.abscissae, ft0.stderr, left=0.0, right=0.0)
    fac = c * y_grid ** (p.alpha_rho - 1.0) * ratio
    return DensityEstimate(
        y_grid, fac * f, fac * se, kind="pdf",
        provenance=f"m_hat_t(y) at t={t} from {ft0.provenance}",
    )


def _ols_loglog(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    lx, ly = np.log(xs), np.log(ys)
    n = len(lx)
    vx = lx - lx.mean()
    slope = float(np.dot(vx, ly) / np.dot(vx, vx))
    resid = ly - ly.mean() - slope * vx
    if n > 2:
        se = math.sqrt(float(np.dot(resid, resid)) / (n - 2) / float(np.dot(vx, vx)))
    else:
        se = float("inf")
    return slope, se


def tail_slope(
    data, window: tuple[float, float], n_points: int = 12
) -> tuple[float, float]:
    """Log-log least-squares slope over a window.

    ``data`` may be a DensityEstimate or an (abscissae, values) pair (the
    curve is regressed on the points inside the window; at least 8 needed),
    or a 1-d sample array (the upper-tail survival function is evaluated on
    a geometric level grid in the window; at least 1000 exceedances of the
    window's lower edge are required).
    """
    lo, hi = window
    if not 0 < lo < hi:
        raise EstimatorError(f"invalid window {window}")
    if isinstance(data, DensityEstimate):
        xs, ys = data.abscissae, data.values
        curve = True
    elif isinstance(data, tuple):
        xs, ys = np.asarray(data[0], dtype=float), np.asarray(data[1], dtype=float)
        curve = True
    else:
        samples = np.asarray(data, dtype=float)
        curve = False
    if curve:
        sel = (xs >= lo) & (xs <= hi) & (ys > 0)
        if sel.sum() < 8:
            raise EstimatorError(
                f"only {int(sel.sum())} usable grid points in window {window}"
            )
        return _ols_loglog(xs[sel], ys[sel])
    exceed = int(np.sum(samples > lo))
    if exceed < 1000:
        raise EstimatorError(
            f"only {exceed} exceedances of {lo}; need at least 1000"
        )
    levels = np.geomspace(lo, hi, n_points)
    surv = np.array([(samples > lv).mean() for lv in levels])
    keep = surv > 0
    return _ols_loglog(levels[keep], surv[keep])


def ecdf_ks(a, b, x_max: float | None = None, n_a: int | None = None) -> float:
    """Kolmogorov-Smirnov distance between samples, or sample vs CDF oracle.

    ``b`` may be a second sample or a callable CDF.  ``x_max`` restricts the
    supremum to values <= x_max (for right-censored samples, where the ECDF
    is only unbiased below the horizon).  ``n_a`` overrides the denominator
    of a's ECDF: pass the full record count when ``a`` holds only the
    uncensored values of a larger sample.
    """
    a = np.sort(np.asarray(a, dtype=float))
    if len(a) == 0:
        raise EstimatorError("empty sample")
    na = len(a) if n_a is None else int(n_a)
    if callable(b):
        grid = a if x_max is None else a[a <= x_max]
        if len(grid) == 0:
            raise EstimatorError("no sample points below x_max")
        idx = np.searchsorted(a, grid, side="right")
        f_hi = idx / na
        f_lo = (idx - 1) / na
        cdf = np.asarray(b(grid), dtype=float)
        return float(np.maximum(np.abs(f_hi - cdf), np.abs(f_lo - cdf)).max())
    b = np.sort(np.asarray(b, dtype=float))
    if len(b) == 0:
        raise EstimatorError("empty sample")
    grid = np.concatenate([a, b])
    if x_max is not None:
        grid = grid[grid <= x_max]
        if len(grid) == 0:
            raise EstimatorError("no sample points below x_max")
    fa = np.searchsorted(a, grid, side="right") / na
    fb = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.abs(fa - fb).max())
