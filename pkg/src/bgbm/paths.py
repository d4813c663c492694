"""Reflected-path construction and the closed-form laws of the spread.

The ask/bid model takes two drifted Brownian driving motions and pushes
them symmetrically apart whenever they meet.  The shared regulator has an
explicit running-supremum form, so paths are assembled exactly on a grid
from Gaussian increments with no stochastic-integration bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, InputShapeError, NumericalError
from .params import ModelParams
from .rng import generator


def make_grid(horizon: float, step: float) -> np.ndarray:
    """Uniform time grid from 0 to (approximately) ``horizon`` in steps of ``step``.

    The horizon is rounded to a whole number of steps.
    """
    if horizon <= 0.0 or step <= 0.0:
        raise DomainError("horizon and step must be positive")
    n = max(int(round(horizon / step)), 1)
    return np.arange(n + 1, dtype=float) * step


def _validate_grid(grid) -> np.ndarray:
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise InputShapeError("time grid must be a 1-D array with at least two points")
    if not np.all(np.isfinite(t)):
        raise DomainError("time grid must be finite")
    if t[0] != 0.0:
        raise DomainError("time grid must start at 0")
    if not np.all(np.diff(t) > 0.0):
        raise DomainError("time grid must be strictly increasing")
    return t


def skorohod_regulator(x_a, x_b) -> np.ndarray:
    """Shared regulator keeping ``x_a + l/2 >= x_b - l/2``.

    Explicitly the running supremum of the negative part of the difference:
    ``l[i] = max_{j <= i} max(-(x_a[j] - x_b[j]), 0)``.  Accepts arrays with
    leading batch dimensions; time runs along the last axis.
    """
    a = np.asarray(x_a, dtype=float)
    b = np.asarray(x_b, dtype=float)
    if a.shape != b.shape:
        raise InputShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return np.maximum.accumulate(np.maximum(b - a, 0.0), axis=-1)


@dataclass(frozen=True)
class BouncingPath:
    """One discretised realisation of the reflected ask/bid system.

    ``x_a``/``x_b`` are the driving log paths, ``l`` the regulator,
    ``y_a = x_a + l/2`` and ``y_b = x_b - l/2`` the reflected log paths,
    and ``a``/``b`` their exponentials (the price paths).
    """

    t: np.ndarray
    x_a: np.ndarray
    x_b: np.ndarray
    l: np.ndarray
    y_a: np.ndarray
    y_b: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        n = self.t.shape[-1]
        for name in ("x_a", "x_b", "l", "y_a", "y_b", "a", "b"):
            if getattr(self, name).shape[-1] != n:
                raise InputShapeError(f"path component {name} does not match the grid length")

    def to_csv(self, path) -> None:
        """Write one row per grid point at full double precision."""
        cols = (self.t, self.x_a, self.x_b, self.l, self.y_a, self.y_b, self.a, self.b)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,x_a,x_b,l,y_a,y_b,a,b\n")
            for row in zip(*cols):
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def build_bouncing_path(
    params: ModelParams, a0: float, b0: float, grid, seed
) -> BouncingPath:
    """Simulate the reflected ask/bid system on ``grid``.

    Driving paths use exact Gaussian increments (the model is analytically
    integrable between grid points); only the regulator is restricted to
    the grid.  Deterministic given the seed.
    """
    t = _validate_grid(grid)
    if a0 <= 0.0 or b0 <= 0.0:
        raise DomainError("initial prices must be positive")
    if a0 < b0:
        raise DomainError(f"initial ask must be >= initial bid, got a0={a0} < b0={b0}")
    rng = generator(seed)
    dt = np.diff(t)
    sq = np.sqrt(dt)
    z = rng.standard_normal((2, dt.size))
    x_a = np.empty(t.size)
    x_b = np.empty(t.size)
    x_a[0] = math.log(a0)
    x_b[0] = math.log(b0)
    x_a[1:] = x_a[0] + np.cumsum(params.mu_a * dt + params.sigma_a * sq * z[0])
    x_b[1:] = x_b[0] + np.cumsum(params.mu_b * dt + params.sigma_b * sq * z[1])
    l = skorohod_regulator(x_a, x_b)
    y_a = x_a + 0.5 * l
    y_b = x_b - 0.5 * l
    return BouncingPath(t, x_a, x_b, l, y_a, y_b, np.exp(y_a), np.exp(y_b))


# ---------------------------------------------------------------------------
# closed-form laws


def rbm_transient_cdf(x, y, t, mu, sigma2):
    """Distribution function of a reflected Brownian motion at horizon ``t``.

    For a motion on [0, inf) with drift ``mu``, variance rate ``sigma2`` and
    start ``x``:

        P(R(t) <= y) = 1 - Phi((-y + x + mu t) / sqrt(sigma2 t))
                         - exp(2 mu y / sigma2) * Phi((-y - x - mu t) / sqrt(sigma2 t))

    The exp * Phi product is evaluated in log space (the factors are
    individually huge/tiny whenever the exponent is large, but the product
    is bounded).  Output is clipped to [0, 1]; the clip only absorbs
    floating-point dust below 1e-12.
    """
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(x_arr < 0.0) or np.any(y_arr < 0.0):
        raise DomainError("rbm_transient_cdf requires x >= 0 and y >= 0")
    if np.any(t_arr <= 0.0) or sigma2 <= 0.0:
        raise DomainError("rbm_transient_cdf requires t > 0 and sigma2 > 0")
    sd = np.sqrt(sigma2 * t_arr)
    val = (
        1.0
        - special.ndtr((-y_arr + x_arr + mu * t_arr) / sd)
        - np.exp(
            2.0 * mu * y_arr / sigma2
            + special.log_ndtr((-y_arr - x_arr - mu * t_arr) / sd)
        )
    )
    out = np.clip(val, 0.0, 1.0)
    if np.ndim(x) == 0 and np.ndim(y) == 0 and np.ndim(t) == 0:
        return float(out)
    return out


def ratio_cdf(params: ModelParams, a0: float, b0: float, t, y):
    """Distribution function of the ask/bid ratio at horizon ``t`` (y >= 1).

    The log ratio is a reflected Brownian motion with drift ``mu_a - mu_b``
    and variance rate ``sigma_a^2 + sigma_b^2`` started at ``log(a0/b0)``;
    this evaluates exactly that law at level ``log(y)``.
    """
    if a0 <= 0.0 or b0 <= 0.0 or a0 < b0:
        raise DomainError("ratio_cdf requires a0 >= b0 > 0")
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 1.0):
        raise DomainError("ratio_cdf requires y >= 1 (the ratio is >= 1 almost surely)")
    return rbm_transient_cdf(
        math.log(a0 / b0),
        np.log(y_arr) if np.ndim(y) else float(np.log(y_arr)),
        t,
        params.mu_a - params.mu_b,
        params.sigma2_sum,
    )


def stationary_ratio_density(params: ModelParams, y):
    """Stationary density of the ask/bid ratio: ``kappa * y^(-1-kappa)`` on y >= 1,
    with tail index ``kappa = 2 (mu_b - mu_a) / (sigma_a^2 + sigma_b^2)``."""
    kappa = params.tail_index
    y_arr = np.asarray(y, dtype=float)
    val = np.where(y_arr >= 1.0, kappa * y_arr ** (-1.0 - kappa), 0.0)
    return _scalar_like(val, y)


def stationary_ratio_moment(params: ModelParams, k: int) -> float:
    """k-th moment of the stationary ratio law, ``kappa / (kappa - k)``;
    finite only for k below the tail index."""
    kappa = params.tail_index
    if k >= kappa:
        raise DomainError(
            f"stationary moment of order {k} is infinite (tail index {kappa})"
        )
    return kappa / (kappa - k)


def _scalar_like(value, template):
    if np.ndim(template) == 0:
        return float(value)
    return value


def _log_first_passage_cdf(x, t):
    """log F(t; x, 0) with both terms assembled stably in log space."""
    sq = np.sqrt(t)
    return np.logaddexp(
        special.log_ndtr((t - x) / sq), 2.0 * x + special.log_ndtr(-(t + x) / sq)
    )


def first_passage_cdf(x, t):
    """Standardised first-passage law of the reflected log spread from x to 0:

        F(t; x, 0) = Phi((t - x)/sqrt(t)) + exp(2x) * Phi((-t - x)/sqrt(t))

    i.e. the hitting-time CDF of a unit-variance Brownian motion with unit
    drift toward the boundary, over a distance ``x >= 0``.
    """
    x_arr = np.asarray(x, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(x_arr < 0.0):
        raise DomainError("first_passage_cdf requires x >= 0")
    if np.any(t_arr <= 0.0):
        raise DomainError("first_passage_cdf requires t > 0")
    out = np.clip(np.exp(_log_first_passage_cdf(x_arr, t_arr)), 0.0, 1.0)
    if np.ndim(x) == 0 and np.ndim(t) == 0:
        return float(out)
    return out


def ratio_moment(
    params: ModelParams,
    k: int,
    t: float,
    abs_tol: float = 1e-9,
    tail_cutoff: float = 1e-12,
) -> float:
    """k-th moment of the ask/bid ratio at horizon ``t``, started from equality:

        E[(A(t)/B(t))^k] = 1 + c * integral_0^inf exp((c - 2) x) F(t; x, 0) dx,
        c = k (sigma_a^2 + sigma_b^2) / (mu_b - mu_a).

    F runs on the clock of the standardised (unit-drift, unit-variance)
    first-passage law, so model time enters as
    ``tau = t (mu_b - mu_a)^2 / (sigma_a^2 + sigma_b^2)``; the two clocks
    coincide only when the drift gap squared equals the variance sum.

    Evaluated by adaptive quadrature on [0, X_max], with X_max grown until
    the integrand is below ``tail_cutoff``.  ``t = inf`` evaluates the
    stationary limit (F == 1), which requires k below the tail index.
    """
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise DomainError("k must be a positive integer")
    if not t > 0.0:
        raise DomainError("ratio_moment requires t > 0")
    c = k * params.sigma2_sum / params.drift_gap

    if math.isinf(t):
        if k >= params.tail_index:
            raise DomainError(
                f"t -> inf limit requires k < tail index {params.tail_index}"
            )

        def integrand(xv):
            return c * math.exp((c - 2.0) * xv)

        x_max = math.log(c / tail_cutoff) / (2.0 - c)
    else:
        tau = t * params.drift_gap**2 / params.sigma2_sum

        def integrand(xv):
            expo = (c - 2.0) * xv + _log_first_passage_cdf(xv, tau)
            if expo > 700.0:
                raise NumericalError(
                    f"ratio_moment integrand overflows at x={xv} (k={k}, t={t})"
                )
            return c * math.exp(expo)

        x_max = max(4.0, 2.0 * tau * (1.0 + abs(c)) + 10.0 * math.sqrt(tau))
        grew = 0
        while integrand(x_max) > tail_cutoff:
            x_max *= 1.4
            grew += 1
            if grew > 200:
                raise NumericalError("could not locate a decaying tail for the integrand")

    val, abserr = integrate.quad(
        integrand, 0.0, x_max, epsabs=abs_tol, epsrel=1e-10, limit=400
    )
    if abserr > max(10.0 * abs_tol, 1e-8 * abs(val)):
        raise NumericalError(
            f"ratio_moment quadrature reached tolerance {abserr:.3e} only", achieved=abserr
        )
    return 1.0 + val
