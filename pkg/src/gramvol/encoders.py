"""Small per-modality encoders producing unit-norm embeddings.

One hidden tanh layer (width 128 by default) followed by a linear
projection and row normalization: the smallest architecture that can
rotate an arbitrary full-rank view of the shared latent into alignment.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ZeroVectorError
from .volume import ZERO_NORM_CUTOFF

logger = logging.getLogger(__name__)

HIDDEN_WIDTH = 128


@dataclass
class ToyEncoder:
    """Affine -> tanh -> affine -> row normalize."""

    w1: np.ndarray  # (raw_dim, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden, embed_dim)
    b2: np.ndarray  # (embed_dim,)

    @classmethod
    def init(
        cls,
        raw_dim: int,
        embed_dim: int,
        rng: np.random.Generator,
        hidden: int = HIDDEN_WIDTH,
    ) -> "ToyEncoder":
        enc = cls(
            w1=rng.standard_normal((raw_dim, hidden)) / math.sqrt(raw_dim),
            b1=np.zeros(hidden),
            w2=rng.standard_normal((hidden, embed_dim)) / math.sqrt(hidden),
            b2=np.zeros(embed_dim),
        )
        logger.info(
            "encoder %d->%d->%d with %d parameters",
            raw_dim, hidden, embed_dim, enc.param_count(),
        )
        return enc

    def params(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def param_count(self) -> int:
        return sum(p.size for p in self.params().values())

    def encode(self, x: np.ndarray) -> np.ndarray:
        """Unit-norm embedding rows for raw input rows."""
        return self.encode_cached(x)[0]

    def encode_cached(self, x: np.ndarray):
        """(embeddings, cache) where the cache feeds ``backward``."""
        x = np.asarray(x, dtype=np.float64)
        h = np.tanh(x @ self.w1 + self.b1)
        u = h @ self.w2 + self.b2
        norms = np.linalg.norm(u, axis=1, keepdims=True)
        if float(norms.min()) < ZERO_NORM_CUTOFF:
            raise ZeroVectorError("encoder produced a zero embedding")
        e = u / norms
        return e, (x, h, e, norms)

    def backward(self, cache, grad_e: np.ndarray) -> dict[str, np.ndarray]:
        """Parameter gradients given d(loss)/d(embedding rows)."""
        x, h, e, norms = cache
        # Through row normalization: du = (de - e <e, de>) / |u|.
        du = (grad_e - e * np.sum(e * grad_e, axis=1, keepdims=True)) / norms
        grads = {"w2": h.T @ du, "b2": du.sum(axis=0)}
        dh = (du @ self.w2.T) * (1.0 - h * h)
        grads["w1"] = x.T @ dh
        grads["b1"] = dh.sum(axis=0)
        return grads
