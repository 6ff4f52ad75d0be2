"""Spike-train scoring (tolerance-windowed precision/recall/F1), Pearson
correlation, rate statistics, and the measured energy/power model."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .encoders import Polarity, SpikeTrain
from .errors import NumericalError, ValidationError


@dataclass(frozen=True)
class MatchReport:
    """Per-polarity-summed match counts and the derived P/R/F1 scores."""

    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    tolerance_us: int

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tolerance_us: int) -> "MatchReport":
        # Empty-vs-empty counts as a perfect match; zero TP otherwise scores 0.
        if tp + fp == 0:
            precision = 1.0 if fn == 0 else 0.0
        else:
            precision = tp / (tp + fp)
        if tp + fn == 0:
            recall = 1.0 if fp == 0 else 0.0
        else:
            recall = tp / (tp + fn)
        if precision + recall == 0:
            f1 = 0.0
        else:
            f1 = 2 * precision * recall / (precision + recall)
        return cls(tp, fp, fn, precision, recall, f1, int(tolerance_us))

    def to_json(self) -> str:
        """Single-line JSON with keys tp, fp, fn, precision, recall, f1, tolerance_us."""
        return json.dumps(
            {
                "tp": self.tp,
                "fp": self.fp,
                "fn": self.fn,
                "precision": self.precision,
                "recall": self.recall,
                "f1": self.f1,
                "tolerance_us": self.tolerance_us,
            }
        )


@dataclass(frozen=True)
class EnergyModel:
    """Measured per-spike energy and dynamic power (defaults from silicon)."""

    energy_per_spike_j: float = 60.7281e-9
    dynamic_power_w: float = 12.145e-6
    supply_v: float = 1.2

    def __post_init__(self):
        if not (
            self.energy_per_spike_j > 0
            and self.dynamic_power_w > 0
            and self.supply_v > 0
        ):
            raise ValidationError("energy model parameters must be positive")


def _greedy_matched(ref: np.ndarray, cand: np.ndarray, tol: int) -> int:
    """TP count of chronological greedy matching: each candidate takes the
    earliest unmatched reference within +-tol. For this windowed structure
    the earliest-eligible rule attains the maximum possible TP."""
    matched = 0
    ptr = 0
    n_ref = ref.size
    for c in cand.tolist():
        while ptr < n_ref and ref[ptr] < c - tol:
            ptr += 1
        if ptr < n_ref and ref[ptr] <= c + tol:
            matched += 1
            ptr += 1
    return matched


def match_spike_trains(reference: SpikeTrain, candidate: SpikeTrain, tolerance_us: int) -> MatchReport:
    """Score a candidate train against a reference with a +-tolerance window.

    Matching is polarity-strict and per polarity independent: candidate
    events are scanned in time order and each is matched to the earliest
    still-unmatched reference event of the same polarity within the window.
    Matched pairs are TP, unmatched candidates FP, unmatched references FN.
    """
    if tolerance_us < 0:
        raise ValidationError("tolerance_us must be non-negative")
    reference.validate()
    candidate.validate()
    tp = fp = fn = 0
    for pol in (Polarity.ON, Polarity.OFF):
        ref = reference.times_of(pol)
        cand = candidate.times_of(pol)
        m = _greedy_matched(ref, cand, int(tolerance_us))
        tp += m
        fp += cand.size - m
        fn += ref.size - m
    return MatchReport.from_counts(tp, fp, fn, tolerance_us)


def pearson(x, y) -> float:
    """Sample Pearson correlation coefficient in [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("inputs must be 1-D sequences of equal length")
    if x.size < 2:
        raise ValidationError("need at least 2 points")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt(np.dot(xc, xc)))
    sy = float(np.sqrt(np.dot(yc, yc)))
    if sx == 0.0 or sy == 0.0:
        raise NumericalError("correlation undefined for zero-variance input")
    r = float(np.dot(xc, yc) / (sx * sy))
    return min(1.0, max(-1.0, r))


def spike_rate(train: SpikeTrain) -> float:
    """Mean event rate in events/s over the train's duration."""
    if train.duration_us <= 0:
        raise ValidationError("duration_us must be positive")
    return train.n_events * 1e6 / train.duration_us


def energy_report(train: SpikeTrain, model: EnergyModel | None = None) -> tuple[float, float]:
    """Dynamic energy (J) and average dynamic power (W) for a spike train."""
    model = model if model is not None else EnergyModel()
    if train.duration_us <= 0:
        raise ValidationError("duration_us must be positive")
    energy = train.n_events * model.energy_per_spike_j
    power = energy * 1e6 / train.duration_us
    return energy, power
