"""Trade times and prices: grid detection, the exact sequence sampler, the
log trade-price process and its diffusion scaling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dists
from .errors import DomainError, InputShapeError
from .params import ModelParams
from .paths import BouncingPath
from .rng import generator, substream


@dataclass(frozen=True)
class TradeSequence:
    """Ordered trades: times ``t`` (strictly increasing, > 0) and prices ``p`` (> 0).

    The increment arrays are derived on construction and satisfy
    ``u[0] = log p[0]``, ``u[n] = log(p[n]/p[n-1])`` and ``v[0] = t[0]``,
    ``v[n] = t[n] - t[n-1]`` exactly.
    """

    t: np.ndarray
    p: np.ndarray
    u: np.ndarray = None
    v: np.ndarray = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if t.shape != p.shape or t.ndim != 1:
            raise InputShapeError("trade times and prices must be 1-D arrays of equal length")
        if t.size == 0:
            raise DomainError("a trade sequence must contain at least one trade")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
            raise DomainError("trade times and prices must be finite")
        if np.any(p <= 0.0):
            raise DomainError("trade prices must be positive")
        if t[0] <= 0.0 or np.any(np.diff(t) <= 0.0):
            raise DomainError("trade times must be strictly increasing and positive")
        logp = np.log(p)
        u = np.empty_like(logp)
        u[0] = logp[0]
        u[1:] = np.diff(logp)
        v = np.empty_like(t)
        v[0] = t[0]
        v[1:] = np.diff(t)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def __len__(self) -> int:
        return self.t.size

    def to_csv(self, path) -> None:
        """Write the ``timestamp_s,price`` schema consumed by the forecaster."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("timestamp_s,price\n")
            for ti, pi in zip(self.t, self.p):
                fh.write(f"{ti:.17g},{pi:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> "TradeSequence":
        from .forecast import TickData  # shared reader, local to avoid a cycle

        data = TickData.read_csv(path)
        return cls(data.t, data.p)


def detect_trades(diff, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Grid trade detection on the driving-path difference ``x_a - x_b``.

    Scanning left to right, the n-th trade is the first grid index at which
    the difference is <= -2(n-1)*delta; the level decrements after each
    detection, and one index may host several detections when a single step
    crosses more than one level.  Returns (indices, levels).
    """
    if delta <= 0.0:
        raise DomainError("delta must be positive")
    d = np.asarray(diff, dtype=float)
    if d.ndim != 1:
        raise InputShapeError("difference path must be 1-D")
    # running minimum makes "first index reaching each level" a sorted lookup
    run_min = np.minimum.accumulate(d)
    depth = -run_min[-1]
    if depth < 0.0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    count = int(math.floor(depth / (2.0 * delta))) + 1
    # guard the float division against off-by-one at exact multiples
    while depth >= 2.0 * delta * count:
        count += 1
    while count > 0 and not depth >= 2.0 * delta * (count - 1):
        count -= 1
    targets = 2.0 * delta * np.arange(count, dtype=float)
    indices = np.searchsorted(-run_min, targets, side="left").astype(np.int64)
    return indices, -targets


@dataclass(frozen=True)
class ModifiedPath:
    """Tick-separated ask/bid paths: between trades n-1 and n the log paths
    carry a +/- (n-1)*delta offset, so the pair stays one tick apart right
    after each trade."""

    t: np.ndarray
    a_delta: np.ndarray
    b_delta: np.ndarray
    trade_indices: np.ndarray


def build_modified_paths(path: BouncingPath, delta: float) -> ModifiedPath:
    """Apply the per-trade tick offsets to the driving paths of ``path``.

    At every grid point the modified ask dominates the reflected ask and the
    modified bid is dominated by the reflected bid (the offset count times
    delta is at least half the regulator, by construction of the detection
    levels).
    """
    indices, _ = detect_trades(path.x_a - path.x_b, delta)
    counts = np.zeros(path.t.size, dtype=np.int64)
    np.add.at(counts, indices, 1)
    offsets = np.cumsum(counts) * delta
    return ModifiedPath(
        t=path.t,
        a_delta=np.exp(path.x_a + offsets),
        b_delta=np.exp(path.x_b - offsets),
        trade_indices=indices,
    )


def path_trade_sequence(path: BouncingPath, params: ModelParams) -> TradeSequence:
    """Trades read off a simulated grid path.

    Times come from :func:`detect_trades`.  On a grid the two modified paths
    rarely coincide exactly at detection, so the n-th log price is the
    variance-weighted combination of the two modified log paths,

        (sigma_b^2 (x_a + (n-1) delta) + sigma_a^2 (x_b - (n-1) delta)) / (sigma_a^2 + sigma_b^2),

    which matches the conditional mean of the meeting point and equals the
    true price in the continuum limit.  Multiple detections at one grid
    index are merged into the deepest level (the last of the tie).
    """
    indices, _ = detect_trades(path.x_a - path.x_b, params.delta)
    if indices.size == 0:
        raise DomainError("no trades detected on the path horizon")
    sa2 = params.sigma_a**2
    sb2 = params.sigma_b**2
    pre_offsets = np.arange(indices.size, dtype=float) * params.delta
    log_p = (
        sb2 * (path.x_a[indices] + pre_offsets) + sa2 * (path.x_b[indices] - pre_offsets)
    ) / params.sigma2_sum
    times = path.t[indices]
    keep = np.ones(indices.size, dtype=bool)
    keep[:-1] = times[1:] > times[:-1]
    return TradeSequence(times[keep], np.exp(log_p[keep]))


# ---------------------------------------------------------------------------
# exact sampling of the trade sequence


def _sample_uv_pairs(params: ModelParams, alpha: float, beta: float, size: int, rng):
    """Draw (v, u) pairs: v from its IG marginal, then u conditionally normal."""
    ig = dists.v_marginal_params(params, alpha, beta)
    v = dists.ig_sample(ig, size=size, seed=rng)
    sa2 = params.sigma_a**2
    sb2 = params.sigma_b**2
    ssum = params.sigma2_sum
    mean = (sb2 * (alpha + params.mu_a * v) + sa2 * (beta + params.mu_b * v)) / ssum
    sd = np.sqrt(sa2 * sb2 * v / ssum)
    u = mean + sd * rng.standard_normal(size)
    return v, u


def exact_trade_sequence(
    params: ModelParams, a0: float, b0: float, n_trades: int, seed
) -> TradeSequence:
    """Sample the trade sequence exactly (no path discretisation).

    The first pair is drawn for initial log prices ``(log a0, log b0)``; all
    later pairs are i.i.d. with the post-trade one-tick separation
    ``(delta, -delta)``.  Deterministic given the seed.
    """
    if not (a0 > 0.0 and b0 > 0.0):
        raise DomainError("initial prices must be positive")
    if not a0 > b0:
        raise DomainError("a0 > b0 is required for the first trade")
    if n_trades < 1:
        raise DomainError("n_trades must be at least 1")
    rng = generator(seed)
    v = np.empty(n_trades)
    u = np.empty(n_trades)
    v[:1], u[:1] = _sample_uv_pairs(params, math.log(a0), math.log(b0), 1, rng)
    if n_trades > 1:
        v[1:], u[1:] = _sample_uv_pairs(
            params, params.delta, -params.delta, n_trades - 1, rng
        )
    return TradeSequence(np.cumsum(v), np.exp(np.cumsum(u)))


def exact_trades_until(
    params: ModelParams, a0: float, b0: float, horizon: float, seed
) -> TradeSequence:
    """Exact trade sequence truncated to trades at or before ``horizon``."""
    if horizon <= 0.0:
        raise DomainError("horizon must be positive")
    rng = generator(seed)
    chunk = max(int(1.2 * horizon / params.mean_intertrade) + 16, 64)
    v_parts = [np.empty(0)]
    u_parts = [np.empty(0)]
    v1, u1 = _sample_uv_pairs(params, math.log(a0), math.log(b0), 1, rng)
    v_parts.append(v1)
    u_parts.append(u1)
    total = float(v1[0])
    while total <= horizon:
        v, u = _sample_uv_pairs(params, params.delta, -params.delta, chunk, rng)
        v_parts.append(v)
        u_parts.append(u)
        total += float(np.sum(v))
        chunk = max(64, chunk // 3)
    t = np.cumsum(np.concatenate(v_parts))
    p = np.exp(np.cumsum(np.concatenate(u_parts)))
    inside = t <= horizon
    if not np.any(inside):
        raise DomainError("no trades occurred before the horizon")
    return TradeSequence(t[inside], p[inside])


# ---------------------------------------------------------------------------
# the log trade-price process and its scaling


def count_trades(seq: TradeSequence, t: float) -> int:
    """Number of trades at or before ``t``."""
    if t < 0.0:
        raise DomainError("t must be nonnegative")
    return int(np.searchsorted(seq.t, t, side="right"))


def log_price_process(seq: TradeSequence, t: float) -> float:
    """Cumulative log trade price: the sum of the first N(t) log-returns,
    with value 0 before the first trade."""
    n = count_trades(seq, t)
    return float(np.sum(seq.u[:n]))


@dataclass(frozen=True)
class DiffusionCoefficients:
    """Asymptotic drift and variance rate of the log trade-price process."""

    m: float
    s: float

    def __post_init__(self):
        if not self.s > 0.0:
            raise DomainError("variance rate s must be positive")


def diffusion_coefficients(params: ModelParams) -> DiffusionCoefficients:
    """m = (mu_a + mu_b)/2 and s = (sigma_a^2 + sigma_b^2)/4."""
    return DiffusionCoefficients(
        m=0.5 * (params.mu_a + params.mu_b), s=0.25 * params.sigma2_sum
    )


def scaled_process(seq: TradeSequence, params: ModelParams, t: float) -> float:
    """Diffusion-scaled log price:

        (delta * Z(t/delta) - m t) / sqrt(s delta)

    where Z is :func:`log_price_process` and (m, s) the diffusion coefficients.
    """
    if t < 0.0:
        raise DomainError("t must be nonnegative")
    coeffs = diffusion_coefficients(params)
    d = params.delta
    return (d * log_price_process(seq, t / d) - coeffs.m * t) / math.sqrt(coeffs.s * d)


def sample_z_terminal(params: ModelParams, horizon: float, rng) -> tuple[float, int, float]:
    """One exact draw of (Z(horizon), N(horizon), T_N) for a sequence started
    one tick apart.

    Inter-trade times are drawn until the horizon is passed; the summed
    log-return is then drawn from its conditional normal law given those
    times (the returns are conditionally independent normals, so their sum
    collapses to a single Gaussian draw).  Exact in distribution and
    deterministic given the stream.
    """
    if horizon <= 0.0:
        raise DomainError("horizon must be positive")
    ig = dists.v_marginal_params(params, params.delta, -params.delta)
    chunk = max(int(1.2 * horizon / params.mean_intertrade) + 16, 64)
    total = 0.0
    n = 0
    last = 0.0
    while True:
        v = dists.ig_sample(ig, size=chunk, seed=rng)
        c = total + np.cumsum(v)
        if c[-1] > horizon:
            pos = int(np.searchsorted(c, horizon, side="right"))
            n += pos
            if pos > 0:
                last = float(c[pos - 1])
            break
        n += chunk
        total = float(c[-1])
        last = total
        chunk = max(64, chunk // 3)
    sa2 = params.sigma_a**2
    sb2 = params.sigma_b**2
    ssum = params.sigma2_sum
    mean = (n * params.delta * (sb2 - sa2) + last * (params.mu_a * sb2 + params.mu_b * sa2)) / ssum
    sd = math.sqrt(sa2 * sb2 * last / ssum)
    z = mean + sd * float(rng.standard_normal())
    return z, n, last


def renewal_moment_check(
    params: ModelParams, horizon: float, replications: int, seed: int
) -> dict:
    """Monte Carlo check of the linear growth of E[Z(t)] and Var[Z(t)].

    Returns the estimates with standard errors, the targets ``m t`` and
    ``s t``, and the absolute gaps (expected to stay bounded as t grows).
    Replication ``i`` uses substream ``(seed, i)``, so the report does not
    depend on scheduling.
    """
    if replications < 2:
        raise DomainError("need at least 2 replications")
    z = np.empty(replications)
    for i in range(replications):
        z[i] = sample_z_terminal(params, horizon, substream(seed, i))[0]
    coeffs = diffusion_coefficients(params)
    e_z = float(np.mean(z))
    var_z = float(np.var(z, ddof=1))
    se_mean = math.sqrt(var_z / replications)
    # normal-theory approximation for the variance estimator's spread
    se_var = var_z * math.sqrt(2.0 / (replications - 1))
    return {
        "horizon": horizon,
        "replications": replications,
        "e_z": e_z,
        "var_z": var_z,
        "target_mean": coeffs.m * horizon,
        "target_var": coeffs.s * horizon,
        "gap_mean": abs(e_z - coeffs.m * horizon),
        "gap_var": abs(var_z - coeffs.s * horizon),
        "se_mean": se_mean,
        "se_var": se_var,
    }
