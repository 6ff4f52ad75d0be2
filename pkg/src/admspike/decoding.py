"""Desk-scale decoding harness: spike binning, leaky-integration features,
a ridge-regularized linear readout, and Pearson scoring of predicted
velocities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.signal import lfilter

from .aer import AerStream
from .encoders import Polarity, SpikeTrain
from .errors import NumericalError, ValidationError
from .metrics import pearson

DEFAULT_BIN_WIDTH_US = 20_000
DEFAULT_TAU_US = 100_000
DEFAULT_LAMBDA_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)


@dataclass(frozen=True)
class BinnedCounts:
    """Event counts per (time bin, feature column).

    Columns come in ON/OFF pairs: for a single train the columns are
    [ON, OFF]; for a stream there is one pair per channel in ascending
    channel-id order. Bin b covers [b*w, (b+1)*w) microseconds.
    """

    counts: np.ndarray
    bin_width_us: int
    channels: tuple[int, ...] | None = None

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2:
            raise ValidationError("counts must be 2-D (bins x columns)")
        if np.any(counts < 0):
            raise ValidationError("counts must be non-negative")
        if self.bin_width_us <= 0:
            raise ValidationError("bin_width_us must be positive")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "bin_width_us", int(self.bin_width_us))

    @property
    def n_bins(self) -> int:
        return int(self.counts.shape[0])

    @property
    def span_us(self) -> int:
        return self.n_bins * self.bin_width_us


@dataclass(frozen=True, eq=False)
class KinematicsSeries:
    """Velocity targets (vx, vy) at strictly increasing timestamps."""

    t_us: np.ndarray
    vx: np.ndarray
    vy: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_us, dtype=np.int64)
        vx = np.asarray(self.vx, dtype=np.float64)
        vy = np.asarray(self.vy, dtype=np.float64)
        if not (t.shape == vx.shape == vy.shape) or t.ndim != 1:
            raise ValidationError("kinematics fields must be 1-D and equal length")
        if t.size and np.any(np.diff(t) <= 0):
            raise ValidationError("timestamps must be strictly increasing")
        if not (np.all(np.isfinite(vx)) and np.all(np.isfinite(vy))):
            raise ValidationError("velocities contain NaN or infinite values")
        object.__setattr__(self, "t_us", t)
        object.__setattr__(self, "vx", vx)
        object.__setattr__(self, "vy", vy)

    def __len__(self):
        return int(self.t_us.size)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("time_s,vx,vy\n")
            for t, x, y in zip(self.t_us, self.vx, self.vy):
                fh.write(f"{t * 1e-6:.9f},{float(x)!r},{float(y)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "KinematicsSeries":
        t, vx, vy = [], [], []
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.lower() == "time_s,vx,vy":
                    continue
                fields = line.split(",")
                if len(fields) != 3:
                    raise ValidationError(f"line {line_no}: expected `time_s,vx,vy`")
                try:
                    t.append(int(round(float(fields[0]) * 1e6)))
                    vx.append(float(fields[1]))
                    vy.append(float(fields[2]))
                except ValueError:
                    raise ValidationError(f"line {line_no}: bad number") from None
        return cls(np.array(t), np.array(vx), np.array(vy))


@dataclass(frozen=True)
class LinearReadout:
    """Linear velocity readout: prediction = features @ weights + bias."""

    weights: np.ndarray
    bias: np.ndarray
    ridge_lambda: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or w.shape[1] != 2 or b.shape != (2,):
            raise ValidationError("weights must be (features, 2) and bias (2,)")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValidationError("readout parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    def predict(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=np.float64) @ self.weights + self.bias


def bin_spikes(train_or_stream, bin_width_us: int, span_us: int) -> BinnedCounts:
    """Histogram events into left-inclusive bins [b*w, (b+1)*w).

    ON and OFF events occupy separate columns per channel; events at or past
    the last full bin edge are dropped (the binned span is floor(span/w)*w).
    """
    if bin_width_us <= 0:
        raise ValidationError("bin_width_us must be positive")
    if span_us < bin_width_us:
        raise ValidationError("span_us must cover at least one bin")
    n_bins = int(span_us // bin_width_us)

    if isinstance(train_or_stream, SpikeTrain):
        groups = [(None, train_or_stream.times_us, train_or_stream.polarities)]
        channels = None
    elif isinstance(train_or_stream, AerStream):
        stream = train_or_stream
        channels = tuple(int(c) for c in np.unique(stream.channels))
        groups = [
            (ch, stream.times_us[stream.channels == ch], stream.polarities[stream.channels == ch])
            for ch in channels
        ]
    else:
        raise ValidationError("expected a SpikeTrain or AerStream")

    counts = np.zeros((n_bins, 2 * len(groups)), dtype=np.int64)
    for col_pair, (_, times, pols) in enumerate(groups):
        idx = times // bin_width_us
        ok = (idx >= 0) & (idx < n_bins)
        for off, pol in enumerate((Polarity.ON, Polarity.OFF)):
            sel = idx[ok & (pols == pol)]
            counts[:, 2 * col_pair + off] = np.bincount(sel, minlength=n_bins)
    return BinnedCounts(counts, bin_width_us, channels)


def leaky_features(counts: BinnedCounts, tau_us: int) -> np.ndarray:
    """First-order leaky integration of counts per column.

    y[n] = alpha * y[n-1] + c[n] with alpha = exp(-bin_width/tau) and
    y[-1] = 0; a vanishing tau reduces to the raw counts.
    """
    if tau_us <= 0:
        raise ValidationError("tau_us must be positive")
    alpha = math.exp(-counts.bin_width_us / tau_us)
    return lfilter([1.0], [1.0, -alpha], counts.counts.astype(np.float64), axis=0)


def resample_kinematics(kin: KinematicsSeries, bin_width_us: int, n_bins: int) -> np.ndarray:
    """Linearly interpolate (vx, vy) at bin centers; returns (n_bins, 2)."""
    if len(kin) < 2:
        raise ValidationError("need at least 2 kinematics points")
    centers = (np.arange(n_bins, dtype=np.float64) + 0.5) * bin_width_us
    t = kin.t_us.astype(np.float64)
    return np.column_stack(
        [np.interp(centers, t, kin.vx), np.interp(centers, t, kin.vy)]
    )


def fit_readout(features: np.ndarray, targets: np.ndarray, ridge_lambda: float) -> LinearReadout:
    """Solve the ridge normal equations with an unpenalized bias column.

    Deterministic; an exactly singular system at lambda = 0 raises a
    NumericalError telling the caller to use lambda > 0.
    """
    x = np.asarray(features, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2 or t.ndim != 2 or t.shape[1] != 2:
        raise ValidationError("features must be (n, k) and targets (n, 2)")
    if x.shape[0] != t.shape[0]:
        raise ValidationError("features and targets must have equal row counts")
    if x.shape[0] < x.shape[1] + 1:
        raise ValidationError("need at least n_features + 1 rows")
    if ridge_lambda < 0:
        raise ValidationError("ridge_lambda must be non-negative")

    xa = np.column_stack([x, np.ones(x.shape[0])])
    gram = xa.T @ xa
    penalty = np.eye(xa.shape[1])
    penalty[-1, -1] = 0.0  # bias unpenalized
    try:
        beta = scipy.linalg.solve(gram + ridge_lambda * penalty, xa.T @ t, assume_a="pos")
    except np.linalg.LinAlgError:
        raise NumericalError(
            "normal equations are singular; use ridge_lambda > 0"
        ) from None
    return LinearReadout(beta[:-1, :], beta[-1, :], float(ridge_lambda))


def evaluate_decoding(readout: LinearReadout, features: np.ndarray, targets: np.ndarray) -> tuple[float, float, float]:
    """Pearson rho of predicted vs. target velocities: (rho_x, rho_y, mean)."""
    t = np.asarray(targets, dtype=np.float64)
    pred = readout.predict(features)
    if pred.shape != t.shape:
        raise ValidationError("features/targets dimensions are inconsistent")
    rho_x = pearson(pred[:, 0], t[:, 0])
    rho_y = pearson(pred[:, 1], t[:, 1])
    return rho_x, rho_y, (rho_x + rho_y) / 2.0


def select_ridge_lambda(
    features: np.ndarray,
    targets: np.ndarray,
    lambdas: Sequence[float] = DEFAULT_LAMBDA_GRID,
    holdout_fraction: float = 0.25,
) -> float:
    """Pick lambda from a small grid by held-out MSE on the trailing rows.

    The split is chronological (last `holdout_fraction` of rows), so the
    selection is deterministic.
    """
    x = np.asarray(features, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if not 0 < holdout_fraction < 1:
        raise ValidationError("holdout_fraction must be in (0, 1)")
    if not lambdas:
        raise ValidationError("lambdas must be non-empty")
    n = x.shape[0]
    split = max(x.shape[1] + 1, int(round(n * (1 - holdout_fraction))))
    if split >= n:
        raise ValidationError("not enough rows for a holdout split")
    best_lambda, best_mse = None, math.inf
    for lam in lambdas:
        try:
            readout = fit_readout(x[:split], t[:split], lam)
        except NumericalError:
            continue
        err = readout.predict(x[split:]) - t[split:]
        mse = float(np.mean(err * err))
        if mse < best_mse:
            best_lambda, best_mse = float(lam), mse
    if best_lambda is None:
        raise NumericalError("no lambda in the grid produced a solvable fit")
    return best_lambda
