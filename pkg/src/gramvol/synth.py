"""Synthetic multimodal data with a checkable ground-truth alignment.

Every sample draws a class mean plus per-sample jitter in a shared latent
space; each modality observes that latent through its own fixed full-rank
projection plus modality noise.  Matched tuples therefore share the latent,
which is exactly the signal contrastive training is supposed to recover,
and which no desk-scale real dataset exposes for verification.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidSpecError


@dataclass(frozen=True)
class SyntheticSpec:
    """Generation parameters; the dataset is fully determined by ``seed``.

    ``noise_sigma`` may be a single float or one float per modality
    (decreasing values make later modalities more informative).

    ``paired_dims`` makes modalities complementary instead of redundant:
    the first (anchor) modality observes the whole latent, while data
    modality i observes only the first ``shared_dims`` coordinates plus its
    own private block of ``paired_dims`` coordinates.  With the default
    ``paired_dims=0`` every modality observes the full latent.  Pairwise
    anchor alignment cannot reconcile the private blocks of two different
    data modalities, which is what makes a joint alignment objective
    distinguishable from a pairwise one on this data.
    """

    latent_dim: int = 16
    embed_dim: int = 64
    modalities: int = 3
    num_classes: int = 4
    noise_sigma: float | tuple[float, ...] = 0.03
    samples: int = 2048
    seed: int = 0
    paired_dims: int = 0

    def __post_init__(self):
        if self.latent_dim < 1 or self.latent_dim > self.embed_dim:
            raise InvalidSpecError(
                f"latent_dim must be in [1, embed_dim], got {self.latent_dim} vs {self.embed_dim}"
            )
        if self.num_classes < 2:
            raise InvalidSpecError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.modalities < 2:
            raise InvalidSpecError(f"need at least 2 modalities, got {self.modalities}")
        if self.samples < 1:
            raise InvalidSpecError(f"samples must be >= 1, got {self.samples}")
        if isinstance(self.noise_sigma, (int, float)):
            object.__setattr__(self, "noise_sigma", float(self.noise_sigma))
        else:
            object.__setattr__(
                self, "noise_sigma", tuple(float(s) for s in self.noise_sigma)
            )
        if any(s < 0.0 for s in self.sigmas()):
            raise InvalidSpecError(f"noise_sigma must be >= 0, got {self.noise_sigma!r}")
        if self.paired_dims < 0:
            raise InvalidSpecError(f"paired_dims must be >= 0, got {self.paired_dims}")
        if self.shared_dims < 1:
            raise InvalidSpecError(
                f"paired_dims={self.paired_dims} leaves no shared coordinates "
                f"in a latent of dimension {self.latent_dim}"
            )

    @property
    def shared_dims(self) -> int:
        """Latent coordinates observed by every modality."""
        return self.latent_dim - (self.modalities - 1) * self.paired_dims

    def sigmas(self) -> tuple[float, ...]:
        """Per-modality noise levels, broadcasting a scalar."""
        if isinstance(self.noise_sigma, (int, float)):
            return (float(self.noise_sigma),) * self.modalities
        sigmas = tuple(float(s) for s in self.noise_sigma)
        if len(sigmas) != self.modalities:
            raise InvalidSpecError(
                f"noise_sigma has {len(sigmas)} entries for {self.modalities} modalities"
            )
        return sigmas

    def visibility_masks(self) -> list[np.ndarray]:
        """Per-modality 0/1 masks over latent coordinates."""
        d, shared = self.latent_dim, self.shared_dims
        masks = [np.ones(d)]
        for i in range(1, self.modalities):
            m = np.zeros(d)
            m[:shared] = 1.0
            lo = shared + (i - 1) * self.paired_dims
            m[lo:lo + self.paired_dims] = 1.0
            masks.append(m)
        return masks


@dataclass(frozen=True)
class MultimodalDataset:
    """Raw per-modality views plus class labels and sample ids."""

    views: tuple[np.ndarray, ...]  # k arrays of shape (N, raw_dim)
    labels: np.ndarray  # (N,) int
    ids: np.ndarray  # (N,) int

    @property
    def num_samples(self) -> int:
        return self.labels.shape[0]

    @property
    def modalities(self) -> int:
        return len(self.views)

    def subset(self, idx: np.ndarray) -> "MultimodalDataset":
        return MultimodalDataset(
            views=tuple(v[idx] for v in self.views),
            labels=self.labels[idx],
            ids=self.ids[idx],
        )


def _draw_full_rank(rng: np.random.Generator, dim: int) -> np.ndarray:
    """A random square projection, redrawn in the rare singular case."""
    for _ in range(16):
        p = rng.standard_normal((dim, dim)) / np.sqrt(dim)
        if np.linalg.matrix_rank(p) == dim:
            return p
    raise InvalidSpecError("could not draw a full-rank projection")


def generate_dataset(
    spec: SyntheticSpec,
    projections: Sequence[np.ndarray] | None = None,
) -> MultimodalDataset:
    """Deterministic dataset for ``spec``.

    Per sample: class c, shared latent z = mu_c + eps; modality i sees
    ``z @ P_i.T + sigma_i * noise``.  ``projections`` overrides the drawn
    P_i (useful to study identical or adversarial views).
    """
    rng = np.random.default_rng(spec.seed)
    d, k, n_samples = spec.latent_dim, spec.modalities, spec.samples
    sigmas = spec.sigmas()

    mu = rng.standard_normal((spec.num_classes, d))
    if projections is None:
        projections = [_draw_full_rank(rng, d) for _ in range(k)]
    else:
        projections = [np.asarray(p, dtype=np.float64) for p in projections]
        if len(projections) != k:
            raise InvalidSpecError(
                f"got {len(projections)} projections for {k} modalities"
            )

    labels = rng.integers(0, spec.num_classes, size=n_samples)
    z = mu[labels] + rng.standard_normal((n_samples, d))
    masks = spec.visibility_masks()
    views = []
    for i in range(k):
        view = (z * masks[i]) @ projections[i].T
        if sigmas[i] > 0.0:
            view = view + sigmas[i] * rng.standard_normal((n_samples, d))
        else:
            # Keep the stream position independent of sigma values.
            rng.standard_normal((n_samples, d))
        views.append(view)

    return MultimodalDataset(
        views=tuple(views),
        labels=labels,
        ids=np.arange(n_samples),
    )


def split_dataset(
    dataset: MultimodalDataset, holdout_fraction: float = 0.2
) -> tuple[MultimodalDataset, MultimodalDataset]:
    """Fixed split by sample id: the leading ids train, the rest hold out."""
    if not (0.0 < holdout_fraction < 1.0):
        raise InvalidSpecError(f"holdout_fraction must be in (0, 1), got {holdout_fraction}")
    n = dataset.num_samples
    cut = int(round(n * (1.0 - holdout_fraction)))
    cut = min(max(cut, 1), n - 1)
    order = np.argsort(dataset.ids, kind="stable")
    train_idx = order[:cut]
    held_idx = order[cut:]
    return dataset.subset(train_idx), dataset.subset(held_idx)
