"""Forecast accuracy metrics on paired observed/predicted sequences.

All three metrics are relative to the observed value and reported as
fractions (0.1 means ten percent):

* percentage error      PE_t  = (O_t - P_t) / O_t
* mean percentage error MPE   = mean of PE_t   (signed; bias)
* mean absolute PE      MAPE  = mean of |PE_t| (magnitude)

Steps with O_t == 0 are skipped and counted rather than dividing by
zero.
"""

from typing import NamedTuple

import numpy as np

from .errors import ValidationError


class MetricSummary(NamedTuple):
    mpe: float
    mape: float
    pe: np.ndarray
    skipped_zeros: int
    n_used: int


def prediction_metrics(observed, predicted) -> MetricSummary:
    """Summarize relative errors of ``predicted`` against ``observed``.

    Raises when the lengths differ or no step has nonzero observation.
    """
    observed = np.asarray(observed, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if observed.shape != predicted.shape or observed.ndim != 1:
        raise ValidationError(
            f"observed {observed.shape} and predicted {predicted.shape} "
            "must be equal-length 1-D sequences"
        )
    usable = observed != 0.0
    skipped = int((~usable).sum())
    if not usable.any():
        raise ValidationError("every observed value is zero; relative error undefined")
    pe = (observed[usable] - predicted[usable]) / observed[usable]
    return MetricSummary(
        mpe=float(pe.mean()),
        mape=float(np.abs(pe).mean()),
        pe=pe,
        skipped_zeros=skipped,
        n_used=int(usable.sum()),
    )


def modal_accuracy(observed_states, predicted_dists) -> float:
    """Share of steps where the distribution's mode hits the observed state."""
    observed_states = np.asarray(observed_states, dtype=np.int64)
    if len(observed_states) != len(predicted_dists):
        raise ValidationError("length mismatch between states and distributions")
    if len(observed_states) == 0:
        raise ValidationError("no steps to score")
    hits = sum(
        int(np.argmax(d)) == s for s, d in zip(observed_states, predicted_dists)
    )
    return hits / len(observed_states)
