"""Retrieval recall, the mean-volume alignment score, and correlation.

Retrieval ranks candidates per query row; a single ranker serves both
polarities (ascending for volumes, where smaller means more similar, and
descending for cosines).  Ties are broken by candidate index, which is
pessimistic for the diagonal: a tied correct match only counts as found
when no lower-index candidate shares its value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateVarianceError,
    DimensionMismatchError,
    EmptyInputError,
    NonSquareError,
)
from .similarity import MultimodalBatch
from .volume import gramian_volume

DEFAULT_KS = (1, 5, 10)


@dataclass(frozen=True)
class RetrievalReport:
    r_at_1: float
    r_at_5: float
    r_at_10: float
    direction: str = "data_to_anchor"


@dataclass(frozen=True)
class AlignmentScore:
    """Mean matched-tuple volume; lower means better aligned.

    ``one_minus_gram`` is the same number flipped so that higher is better,
    convenient next to recall curves.
    """

    mean_matched_volume: float
    one_minus_gram: float


def _diagonal_ranks(values: np.ndarray, ascending: bool) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise NonSquareError(f"expected a square matrix, got shape {values.shape}")
    v = values if ascending else -values
    diag = v.diagonal()[:, None]
    better = (v < diag).sum(axis=1)
    ties_before = np.tril(v == diag, -1).sum(axis=1)
    return 1 + better + ties_before


def retrieval_recall(
    values,
    ks: Sequence[int] = DEFAULT_KS,
    ascending: bool = True,
) -> dict[int, float]:
    """Fraction of query rows whose diagonal entry ranks within the top K.

    The correct match for row i is column i.  ``ascending=True`` treats
    smaller values as more similar (volumes); pass False for cosines.
    """
    values = np.asarray(getattr(values, "values", values), dtype=np.float64)
    ranks = _diagonal_ranks(values, ascending)
    return {int(k): float(np.mean(ranks <= k)) for k in ks}


def retrieval_report(
    values,
    direction: str = "data_to_anchor",
    ascending: bool = True,
) -> RetrievalReport:
    recalls = retrieval_recall(values, DEFAULT_KS, ascending)
    return RetrievalReport(
        r_at_1=recalls[1], r_at_5=recalls[5], r_at_10=recalls[10],
        direction=direction,
    )


def alignment_metric(batch: MultimodalBatch) -> AlignmentScore:
    """Mean volume of the matched tuples in a multimodal batch."""
    rows_per_sample = [batch.anchor.rows] + [m.rows for m in batch.datas]
    total = 0.0
    for i in range(batch.batch_size):
        total += gramian_volume([m[i] for m in rows_per_sample]).value
    mean = total / batch.batch_size
    return AlignmentScore(mean_matched_volume=mean, one_minus_gram=1.0 - mean)


def report_as_json(report) -> str:
    """One-line JSON rendering of a report dataclass, for scripting."""
    import dataclasses
    import json

    return json.dumps(dataclasses.asdict(report))


def report_as_csv(report) -> str:
    """Two-line CSV rendering (header plus values) of a report dataclass."""
    import dataclasses

    items = dataclasses.asdict(report)
    header = ",".join(items)
    values = ",".join(
        v if isinstance(v, str) else repr(v) for v in items.values()
    )
    return f"{header}\n{values}\n"


def pearson(xs, ys) -> float:
    """Sample Pearson correlation of two equal-length series."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise DimensionMismatchError(
            f"series must be 1-D with equal length, got {x.shape} and {y.shape}"
        )
    if x.shape[0] < 2:
        raise EmptyInputError("correlation needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    denom = float(np.sqrt(np.sum(dx * dx) * np.sum(dy * dy)))
    if denom == 0.0:
        raise DegenerateVarianceError("a series with zero variance has no correlation")
    return float(np.sum(dx * dy) / denom)
