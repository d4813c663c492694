"""Closed-form method-of-moments estimation of the five model parameters
from an observed trade sequence, with delta-method standard errors."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dists import closed_form_moments
from .errors import DegenerateDataError, DomainError, InsufficientDataError
from .params import ModelParams
from .trading import TradeSequence

#: below this many trades a window fit is refused as statistically meaningless
MIN_FIT_TRADES = 10

#: negative values above this floor are treated as floating-point dust and
#: clamped to zero before square roots; the underlying quantities are
#: nonnegative in exact arithmetic
CLAMP_WINDOW = -1e-12


@dataclass(frozen=True)
class SampleMoments:
    """The five sample averages of (v, u, v^2, u^2, u*v) over n pairs."""

    x1: float
    x2: float
    x3: float
    x4: float
    x5: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise InsufficientDataError("need at least 2 (u, v) pairs")
        vals = (self.x1, self.x2, self.x3, self.x4, self.x5)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("sample moments must be finite")
        if self.x3 - self.x1**2 < CLAMP_WINDOW:
            raise DegenerateDataError("negative sample variance of v")
        if self.x4 - self.x2**2 < CLAMP_WINDOW:
            raise DegenerateDataError("negative sample variance of u")
        cs = (self.x3 - self.x1**2) * (self.x4 - self.x2**2) - (self.x5 - self.x1 * self.x2) ** 2
        if cs < CLAMP_WINDOW:
            raise DegenerateDataError("sample moments violate the Cauchy-Schwarz bound")

    def asarray(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3, self.x4, self.x5])


@dataclass(frozen=True)
class EstimateResult:
    """Fitted parameters with the intermediate quantities of the closed form.

    ``y`` holds the four moment combinations the estimator inverts, ``m``
    and ``s`` the diffusion coefficients of the fitted model, and ``stderr``
    the five delta-method standard errors when computed.  The fitted
    volatilities may be zero on degenerate-looking data, in which case
    :meth:`to_model_params` raises.
    """

    mu_a: float
    mu_b: float
    sigma_a: float
    sigma_b: float
    delta: float
    y: tuple[float, float, float, float]
    m: float
    s: float
    n: int
    stderr: tuple[float, float, float, float, float] | None = None
    window: tuple[float, float] | None = None

    def theta(self) -> np.ndarray:
        return np.array([self.mu_a, self.mu_b, self.sigma_a, self.sigma_b, self.delta])

    def to_model_params(self) -> ModelParams:
        return ModelParams(self.mu_a, self.mu_b, self.sigma_a, self.sigma_b, self.delta)

    def to_dict(self) -> dict:
        out = {
            "mu_a": self.mu_a,
            "mu_b": self.mu_b,
            "sigma_a": self.sigma_a,
            "sigma_b": self.sigma_b,
            "delta": self.delta,
            "m": self.m,
            "s": self.s,
            "n": self.n,
            "stderr": list(self.stderr) if self.stderr is not None else None,
        }
        if self.window is not None:
            out["window"] = {"start_s": self.window[0], "end_s": self.window[1]}
        return out


def moments_from_pairs(v, u) -> SampleMoments:
    """Sample moments of explicit increment pairs.

    Rejects windows with fewer than two pairs or with no variation in the
    inter-trade times (the moment equations are then not invertible).
    """
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if v.shape != u.shape or v.ndim != 1:
        raise DomainError("v and u must be 1-D arrays of equal length")
    n = v.size
    if n < 2:
        raise InsufficientDataError(f"need at least 2 pairs, got {n}")
    x1 = float(np.mean(v))
    x2 = float(np.mean(u))
    x3 = float(np.mean(v * v))
    x4 = float(np.mean(u * u))
    x5 = float(np.mean(v * u))
    if x3 - x1 * x1 <= 0.0:
        raise DegenerateDataError("all inter-trade times equal; cannot identify the model")
    return SampleMoments(x1, x2, x3, x4, x5, n)


def sample_moments(seq: TradeSequence, use_first: bool = False) -> SampleMoments:
    """Sample moments of a trade sequence.

    By default the first pair is dropped: it mixes a price level with the
    increments and follows the i.i.d. law only when the sequence starts one
    tick apart.  ``use_first=True`` keeps it (``u1 = log p1``, ``v1 = t1``).
    """
    if use_first:
        return moments_from_pairs(seq.v, seq.u)
    return moments_from_pairs(seq.v[1:], seq.u[1:])


def population_moments(params: ModelParams) -> SampleMoments:
    """Raw moments implied by the closed-form pair moments.

    The estimator works on raw (not centred) second moments, so
    ``x3 = Var(V) + E(V)^2``, ``x4 = Var(U) + E(U)^2`` and
    ``x5 = Cov(U, V) + E(U) E(V)``.  The sample size is nominal.
    """
    mom = closed_form_moments(params)
    return SampleMoments(
        x1=mom.e_v,
        x2=mom.e_u,
        x3=mom.var_v + mom.e_v**2,
        x4=mom.var_u + mom.e_u**2,
        x5=mom.cov_uv + mom.e_u * mom.e_v,
        n=2,
    )


def _y_quantities(m: SampleMoments) -> tuple[float, float, float, float]:
    y1 = 2.0 * m.x2 / m.x1
    y2 = (m.x3 - m.x1**2) / m.x1
    y3 = (m.x4 - m.x2**2) / m.x1
    y4 = (m.x5 - m.x1 * m.x2) / m.x1
    return y1, y2, y3, y4


def _well_definedness_terms(m: SampleMoments) -> tuple[float, float, float]:
    """The three expressions that are nonnegative in exact arithmetic:
    the drift-gap discriminant and the two squared-volatility arguments."""
    y1, y2, y3, y4 = _y_quantities(m)
    disc = y1 * y1 - 4.0 * (y1 * y4 - y3) / y2
    gap = math.sqrt(max(disc, 0.0))
    mu_a = 0.5 * (y1 - gap)
    mu_b = 0.5 * (y1 + gap)
    return disc, (y4 - mu_a * y2) * gap, (mu_b * y2 - y4) * gap


def _clamp(value: float, label: str) -> float:
    if value < CLAMP_WINDOW:
        raise DegenerateDataError(f"{label} is negative beyond the clamp window: {value}")
    return max(value, 0.0)


def fit(moments: SampleMoments) -> EstimateResult:
    """Invert the moment equations in closed form.

    With y1 = 2 x2/x1, y2 = (x3 - x1^2)/x1, y3 = (x4 - x2^2)/x1 and
    y4 = (x5 - x1 x2)/x1:

        mu_a, mu_b = (y1 -/+ sqrt(y1^2 - 4 (y1 y4 - y3)/y2)) / 2
        sigma_a^2  = (y4 - mu_a y2) (mu_b - mu_a)
        sigma_b^2  = (mu_b y2 - y4) (mu_b - mu_a)
        delta      = (mu_b - mu_a) x1 / 2

    (the last line is the first moment equation E(V) = 2 delta / (mu_b - mu_a)
    solved for delta).  Quantities guaranteed nonnegative in exact
    arithmetic are clamped at -1e-12 before square roots.
    """
    if moments.x1 <= 0.0:
        raise DegenerateDataError("mean inter-trade time must be positive")
    if moments.x3 - moments.x1**2 <= 0.0:
        raise DegenerateDataError("zero variance of inter-trade times")
    y1, y2, y3, y4 = _y_quantities(moments)
    disc = _clamp(y1 * y1 - 4.0 * (y1 * y4 - y3) / y2, "drift-gap discriminant")
    gap = math.sqrt(disc)
    if gap == 0.0:
        raise DegenerateDataError("estimated drift gap is zero")
    mu_a = 0.5 * (y1 - gap)
    mu_b = 0.5 * (y1 + gap)
    sa2 = _clamp((y4 - mu_a * y2) * gap, "squared volatility of the ask")
    sb2 = _clamp((mu_b * y2 - y4) * gap, "squared volatility of the bid")
    delta = 0.5 * gap * moments.x1
    return EstimateResult(
        mu_a=mu_a,
        mu_b=mu_b,
        sigma_a=math.sqrt(sa2),
        sigma_b=math.sqrt(sb2),
        delta=delta,
        y=(y1, y2, y3, y4),
        m=0.5 * (mu_a + mu_b),
        s=0.25 * (sa2 + sb2),
        n=moments.n,
    )


def fit_sequence(
    seq: TradeSequence,
    use_first: bool = False,
    min_trades: int = MIN_FIT_TRADES,
    with_stderr: bool = False,
) -> EstimateResult:
    """Fit a whole trade sequence, refusing windows below ``min_trades`` trades."""
    if len(seq) < min_trades:
        raise InsufficientDataError(
            f"need at least {min_trades} trades to fit, got {len(seq)}"
        )
    result = fit(sample_moments(seq, use_first=use_first))
    result = replace(result, window=(float(seq.t[0]), float(seq.t[-1])))
    if with_stderr:
        se = asymptotic_stderr(seq, result, use_first=use_first)
        result = replace(result, stderr=tuple(float(x) for x in se))
    return result


def asymptotic_stderr(
    seq: TradeSequence, result: EstimateResult, use_first: bool = False
) -> np.ndarray:
    """Delta-method standard errors of the five fitted parameters.

    The moment covariance is the sample covariance of the observation
    vectors (v, u, v^2, u^2, u v); the gradient of the closed-form map is
    taken by central finite differences at the observed moments (relative
    step 1e-6).  Standard errors are the square roots of the diagonal of
    G Sigma G' / n.
    """
    u = seq.u if use_first else seq.u[1:]
    v = seq.v if use_first else seq.v[1:]
    n = v.size
    if n < 100:
        raise InsufficientDataError(f"need at least 100 pairs for standard errors, got {n}")
    obs = np.column_stack([v, u, v * v, u * u, u * v])
    sigma = np.cov(obs, rowvar=False)
    # scale-invariant singularity check: the raw covariance spans many orders
    # of magnitude whenever times and returns live on different scales
    sds = np.sqrt(np.diag(sigma))
    if np.any(sds <= 0.0):
        raise DegenerateDataError("a moment observation has zero variance")
    corr = sigma / np.outer(sds, sds)
    eigvals = np.linalg.eigvalsh(corr)
    if eigvals[0] <= 1e-12:
        raise DegenerateDataError("singular sample covariance of the moment observations")
    x = obs.mean(axis=0)
    scale = np.max(np.abs(x))
    grad = np.empty((5, 5))
    for j in range(5):
        h = 1e-6 * max(abs(x[j]), 1e-3 * scale)
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        tp = fit(SampleMoments(*xp, n=n)).theta()
        tm = fit(SampleMoments(*xm, n=n)).theta()
        grad[:, j] = (tp - tm) / (2.0 * h)
    cov_theta = grad @ sigma @ grad.T
    return np.sqrt(np.clip(np.diag(cov_theta), 0.0, None) / n)
