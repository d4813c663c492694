"""Distribution layer for the trade-level laws of the model.

Covers the inverse-Gaussian (IG) and normal-inverse-Gaussian (NIG)
families, the joint density of one (log-return, inter-trade time) pair,
the pair's moment generating function, and the closed-form first and
second moments used by the method-of-moments estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericalError
from .params import ModelParams
from .rng import generator


# ---------------------------------------------------------------------------
# parameter tuples


@dataclass(frozen=True)
class IGParams:
    """Inverse-Gaussian parameters of the density

        f(x) = a1 / sqrt(2 pi x^3) * exp(-(a1 - a2 x)^2 / (2 x)),  x > 0.

    Equivalently the first-passage law of a unit-variance Brownian motion
    with drift ``a2`` over a distance ``a1``; in mean/shape form this is
    mean ``a1/a2`` and shape ``a1**2``.
    """

    a1: float
    a2: float

    def __post_init__(self):
        if not (self.a1 > 0.0 and self.a2 > 0.0):
            raise DomainError(f"IG parameters must be positive, got ({self.a1}, {self.a2})")

    @property
    def mean(self) -> float:
        return self.a1 / self.a2

    @property
    def shape(self) -> float:
        return self.a1**2

    @property
    def variance(self) -> float:
        return self.a1 / self.a2**3


@dataclass(frozen=True)
class NIGParams:
    """Normal-inverse-Gaussian parameters.

    A variable with these parameters arises as the normal variance-mean
    mixture Y | X = x ~ N(mu_bar + beta_bar * x, x) with mixing law
    X ~ IG(delta_bar, sqrt(alpha_bar^2 - beta_bar^2)).
    """

    alpha_bar: float
    beta_bar: float
    mu_bar: float
    delta_bar: float

    def __post_init__(self):
        if not (self.alpha_bar > abs(self.beta_bar)):
            raise DomainError(
                f"NIG requires alpha_bar > |beta_bar|, got ({self.alpha_bar}, {self.beta_bar})"
            )
        if not self.delta_bar > 0.0:
            raise DomainError(f"NIG requires delta_bar > 0, got {self.delta_bar}")

    @property
    def gamma_bar(self) -> float:
        return math.sqrt(self.alpha_bar**2 - self.beta_bar**2)

    @property
    def mean(self) -> float:
        return self.mu_bar + self.delta_bar * self.beta_bar / self.gamma_bar

    @property
    def variance(self) -> float:
        return self.delta_bar * self.alpha_bar**2 / self.gamma_bar**3


@dataclass(frozen=True)
class PairMoments:
    """First and second moments of one i.i.d. (log-return, inter-trade time) pair."""

    e_v: float
    e_u: float
    var_v: float
    var_u: float
    cov_uv: float


# ---------------------------------------------------------------------------
# inverse Gaussian


def _maybe_scalar(value, template):
    if np.ndim(template) == 0:
        return float(value)
    return value


def ig_pdf(p: IGParams, x):
    """IG density at ``x`` (> 0)."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError("ig_pdf requires x > 0")
    val = p.a1 / np.sqrt(2.0 * np.pi * arr**3) * np.exp(-((p.a1 - p.a2 * arr) ** 2) / (2.0 * arr))
    return _maybe_scalar(val, x)


def ig_cdf(p: IGParams, x):
    """IG distribution function, the Phi-based closed form matching :func:`ig_pdf`.

    The second term is evaluated in log space: ``exp(2*a1*a2)`` alone may
    overflow while the product with the tiny normal tail stays bounded.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError("ig_cdf requires x > 0")
    sq = np.sqrt(arr)
    val = special.ndtr((p.a2 * arr - p.a1) / sq) + np.exp(
        2.0 * p.a1 * p.a2 + special.log_ndtr(-(p.a2 * arr + p.a1) / sq)
    )
    return _maybe_scalar(np.clip(val, 0.0, 1.0), x)


def ig_sample(p: IGParams, size=None, seed=None):
    """Exact IG draws via the two-root transformation with a uniform selector.

    One normal and one uniform per draw; no rejection loop.
    """
    rng = generator(seed)
    shape = () if size is None else size
    nu = rng.standard_normal(shape)
    y = nu * nu
    mu = p.mean
    lam = p.shape
    root = mu + (mu * mu * y) / (2.0 * lam) - (mu / (2.0 * lam)) * np.sqrt(
        4.0 * mu * lam * y + (mu * y) ** 2
    )
    pick = rng.random(shape) <= mu / (mu + root)
    out = np.where(pick, root, mu * mu / root)
    return float(out) if size is None else out


# ---------------------------------------------------------------------------
# Bessel K1 and the NIG family


def bessel_k1(z):
    """Modified Bessel function of the third kind with index 1.

    Fast evaluator (series plus exponentially scaled asymptotic form, via
    scipy's cephes routine); cross-checked in the test suite against
    :func:`bessel_k1_quadrature`, an independent evaluation of the defining
    integral ``K1(z) = 1/2 * integral_0^inf exp(-z (t + 1/t) / 2) dt``.
    """
    arr = np.asarray(z, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError("bessel_k1 requires z > 0")
    return _maybe_scalar(special.k1(arr), z)


def bessel_k1_quadrature(z, rel_tol: float = 1e-12) -> float:
    """Slow oracle for K1: adaptive quadrature of the defining integral.

    Substituting t = e^u in the defining integral gives
    ``K1(z) = integral_0^inf exp(-z cosh u) cosh u du``, a smooth integrand
    that decays double-exponentially; it is truncated where the exponent
    falls below the double-precision floor.
    """
    z = float(z)
    if z <= 0.0:
        raise DomainError("bessel_k1_quadrature requires z > 0")

    def f(u):
        return math.exp(-z * math.cosh(u)) * math.cosh(u)

    upper = math.acosh(750.0 / z) if z < 750.0 else 1.0
    val, abserr = integrate.quad(f, 0.0, upper, epsabs=0.0, epsrel=rel_tol, limit=400)
    if not math.isfinite(val) or abserr > 100.0 * rel_tol * max(abs(val), 1e-300):
        raise NumericalError(
            f"K1 quadrature did not converge at z={z}", achieved=abserr
        )
    return val


def nig_pdf(p: NIGParams, y):
    """NIG density at ``y``, consistent with the variance-mean mixture.

        f(y) = alpha*delta/pi * exp(delta*gamma + beta*(y-mu))
               * K1(alpha * q) / q,     q = sqrt(delta^2 + (y - mu)^2)

    with gamma = sqrt(alpha^2 - beta^2).  Evaluated with the exponentially
    scaled K1 so the exp factor and the Bessel decay cancel stably in the
    far tails.
    """
    arr = np.asarray(y, dtype=float)
    dev = arr - p.mu_bar
    q = np.hypot(p.delta_bar, dev)
    zq = p.alpha_bar * q
    val = (
        (p.alpha_bar * p.delta_bar / np.pi)
        * np.exp(p.delta_bar * p.gamma_bar + p.beta_bar * dev - zq)
        * special.k1e(zq)
        / q
    )
    return _maybe_scalar(val, y)


def nig_sample(p: NIGParams, size=None, seed=None):
    """NIG draws by composing the IG mixing draw with a conditional normal."""
    rng = generator(seed)
    mix = ig_sample(IGParams(p.delta_bar, p.gamma_bar), size=size or 1, seed=rng)
    mix = np.asarray(mix, dtype=float)
    out = p.mu_bar + p.beta_bar * mix + np.sqrt(mix) * rng.standard_normal(mix.shape)
    return float(out[0]) if size is None else out


# ---------------------------------------------------------------------------
# joint law of one (log-return, inter-trade time) pair


def joint_uv_pdf(params: ModelParams, alpha: float, beta: float, x, t):
    """Joint density of (U, V): the first meeting point and time of the two
    driving log-price motions started at ``alpha`` (log ask) and ``beta``
    (log bid), with ``alpha > beta``.

    Marginalising over ``x`` recovers the IG density of V; conditionally on
    V = t, U is normal with mean
    ``(sigma_b^2 (alpha + mu_a t) + sigma_a^2 (beta + mu_b t)) / (sigma_a^2 + sigma_b^2)``
    and variance ``sigma_a^2 sigma_b^2 t / (sigma_a^2 + sigma_b^2)``.
    """
    if not alpha > beta:
        raise DomainError("joint_uv_pdf requires alpha > beta")
    x_arr = np.asarray(x, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0.0):
        raise DomainError("joint_uv_pdf requires t > 0")
    sa, sb = params.sigma_a, params.sigma_b
    ssum = params.sigma2_sum
    w = (sb / sa) * (x_arr - alpha - params.mu_a * t_arr) + (sa / sb) * (
        x_arr - beta - params.mu_b * t_arr
    )
    drift_term = alpha - beta - params.drift_gap * t_arr
    val = (alpha - beta) / (2.0 * np.pi * t_arr**2 * sa * sb) * np.exp(
        -(w**2 + drift_term**2) / (2.0 * ssum * t_arr)
    )
    if np.ndim(x) == 0 and np.ndim(t) == 0:
        return float(val)
    return val


def v_marginal_params(params: ModelParams, alpha: float, beta: float) -> IGParams:
    """IG parameters of the inter-trade time for initial log prices (alpha, beta)."""
    if not alpha > beta:
        raise DomainError("v_marginal_params requires alpha > beta")
    s = math.sqrt(params.sigma2_sum)
    return IGParams((alpha - beta) / s, params.drift_gap / s)


def u_marginal_params(params: ModelParams, alpha: float, beta: float) -> NIGParams:
    """NIG parameters of the log-return for initial log prices (alpha, beta)."""
    if not alpha > beta:
        raise DomainError("u_marginal_params requires alpha > beta")
    sa2 = params.sigma_a**2
    sb2 = params.sigma_b**2
    ssum = sa2 + sb2
    alpha_bar = math.sqrt(ssum * (params.mu_a**2 * sb2 + params.mu_b**2 * sa2)) / (sa2 * sb2)
    beta_bar = (params.mu_a * sb2 + params.mu_b * sa2) / (sa2 * sb2)
    mu_bar = (alpha * sb2 + beta * sa2) / ssum
    delta_bar = (alpha - beta) * params.sigma_a * params.sigma_b / ssum
    return NIGParams(alpha_bar, beta_bar, mu_bar, delta_bar)


# ---------------------------------------------------------------------------
# moment generating function of the i.i.d. pair


_MGF_REGION = (
    "(mu_b - mu_a + s*sigma_b^2)^2 >= "
    "(sigma_a^2 + sigma_b^2) * (s^2*sigma_b^2 + 2*t + 2*s*mu_b)"
)


def mgf_theta(params: ModelParams, s: float, t: float) -> float:
    """Exponent root theta(s, t) of the pair MGF.

    The minus branch of the quadratic is the right one: at s = 0 it
    reproduces the IG moment generating function of the inter-trade time.
    """
    sb2 = params.sigma_b**2
    ssum = params.sigma2_sum
    g = params.drift_gap + s * sb2
    disc = g * g - ssum * (s * s * sb2 + 2.0 * t + 2.0 * s * params.mu_b)
    if disc < 0.0:
        raise DomainError(
            f"(s={s}, t={t}) outside the MGF existence region: require {_MGF_REGION}"
        )
    return (g - math.sqrt(disc)) / ssum


def mgf(params: ModelParams, s: float, t: float) -> float:
    """Joint MGF E[exp(s U + t V)] = exp((2 theta(s,t) - s) * delta)."""
    return math.exp((2.0 * mgf_theta(params, s, t) - s) * params.delta)


def closed_form_moments(params: ModelParams) -> PairMoments:
    """Exact first and second moments of one i.i.d. pair:

        E(V)      = 2 delta / (mu_b - mu_a)
        E(U)      = delta (mu_b + mu_a) / (mu_b - mu_a)
        Var(V)    = 2 (sigma_a^2 + sigma_b^2) delta / (mu_b - mu_a)^3
        Var(U)    = 2 (mu_b^2 sigma_a^2 + mu_a^2 sigma_b^2) delta / (mu_b - mu_a)^3
        Cov(U, V) = 2 (mu_b sigma_a^2 + mu_a sigma_b^2) delta / (mu_b - mu_a)^3
    """
    gap = params.drift_gap
    d = params.delta
    sa2 = params.sigma_a**2
    sb2 = params.sigma_b**2
    return PairMoments(
        e_v=2.0 * d / gap,
        e_u=d * (params.mu_b + params.mu_a) / gap,
        var_v=2.0 * (sa2 + sb2) * d / gap**3,
        var_u=2.0 * (params.mu_b**2 * sa2 + params.mu_a**2 * sb2) * d / gap**3,
        cov_uv=2.0 * (params.mu_b * sa2 + params.mu_a * sb2) * d / gap**3,
    )
