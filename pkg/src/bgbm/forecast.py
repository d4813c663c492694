"""Short-horizon price prediction with sigma bands, and the sliding-window
back-test over tick data."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import estimate
from .errors import (
    DataError,
    DegenerateDataError,
    DomainError,
    InsufficientDataError,
)
from .parallel import ordered_map


@dataclass(frozen=True)
class TickData:
    """Raw trades: timestamps in seconds from an arbitrary origin
    (nondecreasing, ties allowed) and positive prices."""

    t: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if t.shape != p.shape or t.ndim != 1:
            raise DataError("timestamps and prices must be 1-D arrays of equal length")
        if t.size == 0:
            raise DataError("tick data must contain at least one row")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
            raise DataError("tick data must be finite")
        if np.any(np.diff(t) < 0.0):
            raise DataError("timestamps must be nondecreasing")
        if np.any(p <= 0.0):
            raise DataError("prices must be positive")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "p", p)

    def __len__(self) -> int:
        return self.t.size

    @classmethod
    def read_csv(cls, path) -> "TickData":
        """Read the ``timestamp_s,price`` schema (UTF-8, decimal point)."""
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            if [h.strip() for h in header] != ["timestamp_s", "price"]:
                raise DataError(f"{path}: expected header 'timestamp_s,price', got {header}")
            t, p = [], []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 2:
                    raise DataError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
                try:
                    t.append(float(row[0]))
                    p.append(float(row[1]))
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}") from None
        return cls(np.asarray(t), np.asarray(p))

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("timestamp_s,price\n")
            for ti, pi in zip(self.t, self.p):
                fh.write(f"{ti:.17g},{pi:.17g}\n")


def merge_ties(data: TickData) -> TickData:
    """Collapse trades sharing a timestamp into the last of the tie group.

    The model has continuous trade times; coarse data granularity produces
    zero inter-trade times, which the fitted time law cannot support.
    """
    keep = np.ones(len(data), dtype=bool)
    keep[:-1] = data.t[1:] > data.t[:-1]
    return TickData(data.t[keep], data.p[keep])


@dataclass(frozen=True)
class ForecastConfig:
    """Back-test configuration.

    A prediction for a trade at time tau uses the data window
    ``[tau - lead_time_s - window_len_s, tau - lead_time_s)``; windows with
    fewer than ``min_trades`` trades are skipped.
    """

    window_len_s: float = 600.0
    lead_time_s: float = 60.0
    band_width_sigmas: float = 3.0
    min_trades: int = 10

    def __post_init__(self):
        if self.window_len_s <= 0.0 or self.lead_time_s <= 0.0:
            raise DomainError("window_len_s and lead_time_s must be positive")
        if self.band_width_sigmas < 0.0:
            raise DomainError("band_width_sigmas must be nonnegative")
        if self.min_trades < 2:
            raise DomainError("min_trades must be at least 2")


@dataclass(frozen=True)
class Prediction:
    """Point prediction and band endpoints, all in log-return."""

    point: float
    lower: float
    upper: float


def predict(
    est: estimate.EstimateResult, horizon_s: float, band_width_sigmas: float = 3.0
) -> Prediction:
    """Predicted log-return over ``horizon_s`` with a symmetric sigma band.

    The point is ``(mu_a + mu_b) t / 2 = m t``; the half-width is
    ``band_width_sigmas * sqrt(s t)``, which for the default three sigmas
    equals ``(3/2) sqrt((sigma_a^2 + sigma_b^2) t)``.
    """
    if horizon_s <= 0.0:
        raise DomainError("prediction horizon must be positive")
    if band_width_sigmas < 0.0:
        raise DomainError("band_width_sigmas must be nonnegative")
    point = est.m * horizon_s
    half = band_width_sigmas * math.sqrt(est.s * horizon_s)
    return Prediction(point=point, lower=point - half, upper=point + half)


@dataclass(frozen=True)
class ForecastRecord:
    """One back-test target: the prediction, the realisation, and the
    relative error (real price - predicted price) / real price."""

    target_time_s: float
    p0: float
    predicted_log_return: float
    lower: float
    upper: float
    realized_price: float
    relative_error: float
    skipped: bool = False
    reason: str | None = None


def _window_estimates(data: TickData, cfg: ForecastConfig) -> list:
    """Per-target window fits.

    For each (tie-merged) trade at tau with a full window of history, fit
    the parameters on trades in ``[tau - lead - window, tau - lead)``.  The
    window end is exclusive, so nothing at or after it is ever used.
    Returns tuples (target_idx, tau, window_end, p0_idx, est, reason).
    """
    merged = merge_ties(data)
    t, _ = merged.t, merged.p
    eligible = [
        k
        for k in range(len(merged))
        if t[k] - cfg.lead_time_s - cfg.window_len_s >= t[0]
    ]

    def fit_one(k):
        tau = t[k]
        w_end = tau - cfg.lead_time_s
        w_start = w_end - cfg.window_len_s
        lo = int(np.searchsorted(t, w_start, side="left"))
        hi = int(np.searchsorted(t, w_end, side="left"))
        if hi - lo == 0:
            return (k, tau, w_end, None, None, "empty_window")
        p0_idx = hi - 1
        if hi - lo < cfg.min_trades:
            return (k, tau, w_end, p0_idx, None, "too_few_trades")
        try:
            v = np.diff(merged.t[lo:hi])
            u = np.diff(np.log(merged.p[lo:hi]))
            est = estimate.fit(estimate.moments_from_pairs(v, u))
        except (DegenerateDataError, InsufficientDataError):
            return (k, tau, w_end, p0_idx, None, "degenerate_window")
        return (k, tau, w_end, p0_idx, est, None)

    return ordered_map(fit_one, eligible), merged


def backtest(data: TickData, cfg: ForecastConfig) -> tuple[list[ForecastRecord], dict]:
    """Sliding-window back-test over tick data.

    Emits one record per eligible target trade; windows that cannot be fit
    are emitted with a skipped flag and a reason code.  The summary reports
    the maximum and mean absolute relative error and the fraction of
    realised log-returns inside the band, over non-skipped records.
    """
    fits, merged = _window_estimates(data, cfg)
    records = []
    for k, tau, w_end, p0_idx, est, reason in fits:
        realized = float(merged.p[k])
        if est is None:
            records.append(
                ForecastRecord(
                    target_time_s=tau,
                    p0=float(merged.p[p0_idx]) if p0_idx is not None else math.nan,
                    predicted_log_return=math.nan,
                    lower=math.nan,
                    upper=math.nan,
                    realized_price=realized,
                    relative_error=math.nan,
                    skipped=True,
                    reason=reason,
                )
            )
            continue
        # the predicted return accrues from the trade that defines P(0), so
        # the horizon is the exact elapsed time from that trade to the target
        # (at least the lead time, since P(0) sits before the window end)
        horizon = tau - float(merged.t[p0_idx])
        pred = predict(est, horizon, cfg.band_width_sigmas)
        p0 = float(merged.p[p0_idx])
        predicted_price = p0 * math.exp(pred.point)
        records.append(
            ForecastRecord(
                target_time_s=tau,
                p0=p0,
                predicted_log_return=pred.point,
                lower=pred.lower,
                upper=pred.upper,
                realized_price=realized,
                relative_error=(realized - predicted_price) / realized,
            )
        )
    return records, summarize(records)


def summarize(records: list[ForecastRecord]) -> dict:
    ok = [r for r in records if not r.skipped]
    n_skipped = len(records) - len(ok)
    if not ok:
        return {
            "n_records": 0,
            "n_skipped": n_skipped,
            "max_abs_re": math.nan,
            "mean_abs_re": math.nan,
            "band_coverage": math.nan,
        }
    abs_re = np.array([abs(r.relative_error) for r in ok])
    realized_lr = np.array([math.log(r.realized_price / r.p0) for r in ok])
    lower = np.array([r.lower for r in ok])
    upper = np.array([r.upper for r in ok])
    covered = (realized_lr >= lower) & (realized_lr <= upper)
    return {
        "n_records": len(ok),
        "n_skipped": n_skipped,
        "max_abs_re": float(np.max(abs_re)),
        "mean_abs_re": float(np.mean(abs_re)),
        "band_coverage": float(np.mean(covered)),
    }


def delta_trace(data: TickData, cfg: ForecastConfig) -> np.ndarray:
    """Per-window fitted tick sizes, for plotting: rows (target_time_s, delta_hat).

    Skipped windows contribute no point.
    """
    fits, _ = _window_estimates(data, cfg)
    rows = [(tau, est.delta) for _, tau, _, _, est, _ in fits if est is not None]
    if not rows:
        return np.empty((0, 2))
    return np.asarray(rows, dtype=float)


# ---------------------------------------------------------------------------
# serialisation

RECORD_FIELDS = (
    "target_time_s,p0,pred_log_return,lower,upper,realized_price,"
    "relative_error,skipped,reason"
)


def _fmt(value: float) -> str:
    return format(value, ".17g") if math.isfinite(value) else ""


def write_records_csv(records: list[ForecastRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(RECORD_FIELDS + "\n")
        for r in records:
            fh.write(
                ",".join(
                    [
                        _fmt(r.target_time_s),
                        _fmt(r.p0),
                        _fmt(r.predicted_log_return),
                        _fmt(r.lower),
                        _fmt(r.upper),
                        _fmt(r.realized_price),
                        _fmt(r.relative_error),
                        "true" if r.skipped else "false",
                        r.reason or "",
                    ]
                )
                + "\n"
            )


def write_delta_trace_csv(trace: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("target_time_s,delta_hat\n")
        for row in trace:
            fh.write(f"{row[0]:.17g},{row[1]:.17g}\n")
