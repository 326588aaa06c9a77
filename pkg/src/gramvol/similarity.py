"""Batched similarity surfaces: cross-volume and cosine matrices.

A ``MultimodalBatch`` holds one anchor modality and k-1 data modalities
whose rows are index-aligned samples.  ``cross_volume_matrix`` fills a
B x B matrix whose (i, j) entry is the parallelotope volume of sample j's
anchor embedding together with sample i's data embeddings; the matched
tuples sit on the diagonal.  Each entry is an independent small
determinant, computed through the exact same routine as
``volume.gramian_volume``, so the matrix agrees with per-tuple calls
bit for bit and rows may be computed in any order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InconsistentBatchError
from .volume import _vol_from_rows

#: Maximum deviation from unit norm tolerated in a ModalityBatch row.
UNIT_NORM_TOL = 1e-10


@dataclass(frozen=True)
class ModalityBatch:
    """B unit-norm embeddings of one modality, one row per sample."""

    rows: np.ndarray
    modality_name: str = ""

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise InconsistentBatchError(
                f"batch rows must be a nonempty 2-D array, got shape {rows.shape}"
            )
        if not np.isfinite(rows).all():
            raise InconsistentBatchError(
                f"batch {self.modality_name!r} contains NaN or Inf"
            )
        norms = np.linalg.norm(rows, axis=1)
        worst = float(np.abs(norms - 1.0).max())
        if worst > UNIT_NORM_TOL:
            raise InconsistentBatchError(
                f"batch {self.modality_name!r} has a row off unit norm by {worst:.3e}"
            )
        object.__setattr__(self, "rows", rows)

    @property
    def batch_size(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class MultimodalBatch:
    """An anchor batch plus k-1 data batches with aligned sample rows."""

    anchor: ModalityBatch
    datas: tuple[ModalityBatch, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "datas", tuple(self.datas))
        b, n = self.anchor.batch_size, self.anchor.dim
        for m in self.datas:
            if m.batch_size != b or m.dim != n:
                raise InconsistentBatchError(
                    f"modality {m.modality_name!r} is ({m.batch_size}, {m.dim}), "
                    f"anchor is ({b}, {n})"
                )

    @property
    def k(self) -> int:
        return 1 + len(self.datas)

    @property
    def batch_size(self) -> int:
        return self.anchor.batch_size

    @property
    def dim(self) -> int:
        return self.anchor.dim


@dataclass(frozen=True)
class CrossVolumeMatrix:
    """B x B volumes; ``values[i, j]`` mixes data rows i with anchor row j.

    Row i (anchor index varying) feeds the data-to-anchor loss direction;
    the transpose feeds anchor-to-data.
    """

    values: np.ndarray


def cross_volumes(anchor: np.ndarray, datas: Sequence[np.ndarray]) -> np.ndarray:
    """Array-level cross-volume computation, no batch validation.

    ``out[i, j] = Vol(anchor[j], datas[0][i], ..., datas[-1][i])``.
    """
    anchor = np.asarray(anchor, dtype=np.float64)
    b, n = anchor.shape
    k = 1 + len(datas)
    out = np.empty((b, b), dtype=np.float64)
    m = np.empty((k, n), dtype=np.float64)
    for i in range(b):
        for off, d in enumerate(datas):
            m[1 + off] = d[i]
        for j in range(b):
            m[0] = anchor[j]
            out[i, j] = _vol_from_rows(m)[0]
    return out


def cross_volume_matrix(batch: MultimodalBatch) -> CrossVolumeMatrix:
    """Cross-volume matrix for a validated multimodal batch."""
    values = cross_volumes(batch.anchor.rows, [m.rows for m in batch.datas])
    return CrossVolumeMatrix(values=values)


def cosine_matrix(a: ModalityBatch, b: ModalityBatch) -> np.ndarray:
    """Pairwise inner products; entry (i, j) is <a_i, b_j>.

    Rows are unit-norm by batch invariant, so this is the cosine of the
    angle between the embeddings.
    """
    if a.batch_size != b.batch_size or a.dim != b.dim:
        raise InconsistentBatchError(
            f"batches are ({a.batch_size}, {a.dim}) and ({b.batch_size}, {b.dim})"
        )
    return a.rows @ b.rows.T
