"""Deterministic training loop for the synthetic alignment task.

Trains one encoder per modality (plus the matching head and the
temperature) with minibatch AdamW on the combined volume-based objective,
or on the pairwise-cosine objective for the baseline.  Everything is
driven by one seed: dataset split order, parameter init, and batch
shuffling, so identical seeds give bit-identical traces.

Each epoch ends with an evaluation on a fixed prefix of the held-out
split: the run's own losses, mean matched / mismatched volume, and
top-1 retrieval over the cross-volume matrix (epoch 0 records the
untrained state).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .encoders import ToyEncoder
from .errors import DivergedTrainingError, InvalidConfigError, NonFiniteLossError
from .losses import (
    DamHead,
    LossReport,
    Temperature,
    _log_softmax_rows,
    _mine_indices,
    _softmax_rows,
    gram_contrastive_loss,
    loss_report,
    total_loss,
)
from .metrics import retrieval_recall
from .optim import AdamHyper, AdamState, adam_step
from .similarity import cross_volumes
from .synth import MultimodalDataset, split_dataset

TRACE_COLUMNS = (
    "epoch", "l_d2a", "l_a2d", "l_dam", "matched_vol", "mismatched_vol", "r_at_1",
)

LOSS_KINDS = ("gram", "cosine")


@dataclass(frozen=True)
class TrainConfig:
    """Desk-scale defaults; ``loss`` picks the objective."""

    batch_size: int = 64
    epochs: int = 10
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.0
    lam: float = 0.1
    tau_init: float = 1.0
    seed: int = 0
    loss: str = "gram"
    eval_max_samples: int = 256
    holdout_fraction: float = 0.2

    def __post_init__(self):
        checks = [
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.epochs >= 0, "epochs must be >= 0"),
            (self.lr >= 0.0, "lr must be >= 0"),
            (0.0 <= self.beta1 < 1.0, "beta1 must lie in [0, 1)"),
            (0.0 <= self.beta2 < 1.0, "beta2 must lie in [0, 1)"),
            (self.adam_eps > 0.0, "adam_eps must be > 0"),
            (self.weight_decay >= 0.0, "weight_decay must be >= 0"),
            (self.lam >= 0.0, "lambda must be >= 0"),
            (self.tau_init > 0.0, "tau_init must be > 0"),
            (self.loss in LOSS_KINDS, f"loss must be one of {LOSS_KINDS}"),
            (self.eval_max_samples >= 1, "eval_max_samples must be >= 1"),
            (0.0 < self.holdout_fraction < 1.0, "holdout_fraction must be in (0, 1)"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InvalidConfigError(msg)

    def adam_hyper(self) -> AdamHyper:
        return AdamHyper(
            lr=self.lr, beta1=self.beta1, beta2=self.beta2,
            eps=self.adam_eps, weight_decay=self.weight_decay,
        )


@dataclass(frozen=True)
class TraceRow:
    epoch: int
    l_d2a: float
    l_a2d: float
    l_dam: float
    matched_vol: float
    mismatched_vol: float
    r_at_1: float


@dataclass
class TrainingTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=np.float64)

    @property
    def final(self) -> TraceRow:
        return self.rows[-1]


@dataclass
class TrainResult:
    trace: TrainingTrace
    encoders: list[ToyEncoder]
    head: DamHead | None
    tau: Temperature
    params: dict[str, np.ndarray]


def cosine_pairwise_report(
    anchor: np.ndarray, datas: Sequence[np.ndarray], tau: Temperature
) -> LossReport:
    """Baseline objective: softmax cross entropy on cosine logits, each
    data modality against the anchor separately, averaged over modalities.

    Mirrors the report layout of ``loss_report`` so the training loop can
    treat both objectives uniformly.
    """
    anchor = np.asarray(anchor, dtype=np.float64)
    b, n = anchor.shape
    nmod = len(datas)
    t = tau.tau
    eye = np.eye(b)
    l_d2a = l_a2d = grad_log_tau = 0.0
    grad_anchor = np.zeros((b, n))
    grad_datas = np.zeros((nmod, b, n))
    for off, d in enumerate(datas):
        z = (d @ anchor.T) / t
        l_m2a = float(-np.mean(np.diag(_log_softmax_rows(z))))
        l_a2m = float(-np.mean(np.diag(_log_softmax_rows(z.T))))
        l_d2a += l_m2a / nmod
        l_a2d += l_a2m / nmod
        dz_m2a = -(eye - _softmax_rows(z)) / b
        dz_a2m = -(eye - _softmax_rows(z.T)).T / b
        dz = 0.5 * (dz_m2a + dz_a2m) / nmod
        grad_log_tau += float(-np.sum(dz * z))
        grad_datas[off] = (dz @ anchor) / t
        grad_anchor += (dz.T @ d) / t
    l_tot = total_loss((l_d2a, l_a2d), 0.0)
    return LossReport(
        l_d2a=l_d2a, l_a2d=l_a2d, l_dam=0.0, l_tot=l_tot,
        grad_anchor=grad_anchor, grad_datas=grad_datas,
        grad_log_tau=grad_log_tau, head_grads=None,
    )


@dataclass(frozen=True)
class EvalStats:
    matched_vol: float
    mismatched_vol: float
    r_at_1: float
    l_d2a: float
    l_a2d: float
    l_dam: float


def evaluate(
    encoders: Sequence[ToyEncoder],
    dataset: MultimodalDataset,
    tau: Temperature,
    head: DamHead | None = None,
    max_samples: int = 256,
    loss_kind: str = "gram",
) -> EvalStats:
    """Alignment metrics on a fixed leading slice of ``dataset``."""
    nsel = min(max_samples, dataset.num_samples)
    embeds = [
        enc.encode(view[:nsel]) for enc, view in zip(encoders, dataset.views)
    ]
    vols = cross_volumes(embeds[0], embeds[1:])
    matched = float(np.mean(np.diag(vols)))
    if nsel > 1:
        off_mask = ~np.eye(nsel, dtype=bool)
        mismatched = float(np.mean(vols[off_mask]))
    else:
        mismatched = float("nan")
    r1 = retrieval_recall(vols, ks=(1,), ascending=True)[1]

    if loss_kind == "cosine":
        rep = cosine_pairwise_report(embeds[0], embeds[1:], tau)
        l_d2a, l_a2d, l_dam = rep.l_d2a, rep.l_a2d, 0.0
    else:
        l_d2a, l_a2d = gram_contrastive_loss(vols, tau)
        l_dam = 0.0
        if head is not None and nsel >= 2:
            neg_j = _mine_indices(vols)
            k, n = len(embeds), embeds[0].shape[1]
            x = np.empty((2 * nsel, k * n))
            x[:nsel, :n] = embeds[0]
            x[nsel:, :n] = embeds[0][neg_j]
            for off in range(1, k):
                sl = slice(off * n, (off + 1) * n)
                x[:nsel, sl] = embeds[off]
                x[nsel:, sl] = embeds[off]
            y = np.concatenate([np.ones(nsel), np.zeros(nsel)])
            logits = head.logits(x)
            l_dam = float(np.mean(np.logaddexp(0.0, logits) - logits * y))
    return EvalStats(matched, mismatched, r1, l_d2a, l_a2d, l_dam)


def _trace_row(epoch: int, stats: EvalStats) -> TraceRow:
    return TraceRow(
        epoch=epoch, l_d2a=stats.l_d2a, l_a2d=stats.l_a2d, l_dam=stats.l_dam,
        matched_vol=stats.matched_vol, mismatched_vol=stats.mismatched_vol,
        r_at_1=stats.r_at_1,
    )


def train(
    config: TrainConfig,
    dataset: MultimodalDataset,
    encoders: Sequence[ToyEncoder] | None = None,
    embed_dim: int = 64,
) -> TrainResult:
    """Minibatch training on the configured objective.

    Raises ``DivergedTrainingError`` (carrying the partial trace) if any
    loss value stops being finite.
    """
    rng = np.random.default_rng(config.seed)
    train_ds, held_ds = split_dataset(dataset, config.holdout_fraction)
    k = dataset.modalities

    if encoders is None:
        encoders = [
            ToyEncoder.init(view.shape[1], embed_dim, rng)
            for view in dataset.views
        ]
    else:
        encoders = list(encoders)
        if len(encoders) != k:
            raise InvalidConfigError(
                f"got {len(encoders)} encoders for {k} modalities"
            )
        embed_dim = encoders[0].w2.shape[1]

    head = DamHead(k, embed_dim, rng) if config.loss == "gram" else None

    params: dict[str, np.ndarray] = {}
    for mi, enc in enumerate(encoders):
        for name, arr in enc.params().items():
            params[f"enc{mi}.{name}"] = arr
    if head is not None:
        for name, arr in head.params().items():
            params[f"head.{name}"] = arr
    params["log_tau"] = np.array(math.log(config.tau_init))

    state = AdamState.init(params)
    hyper = config.adam_hyper()

    def current_tau() -> Temperature:
        return Temperature(log_tau=float(params["log_tau"]))

    trace = TrainingTrace()
    trace.rows.append(_trace_row(0, evaluate(
        encoders, held_ds, current_tau(), head,
        config.eval_max_samples, config.loss,
    )))

    n_train = train_ds.num_samples
    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(n_train)
        for start in range(0, n_train, config.batch_size):
            bidx = perm[start:start + config.batch_size]
            embeds, caches = [], []
            for enc, view in zip(encoders, train_ds.views):
                e, cache = enc.encode_cached(view[bidx])
                embeds.append(e)
                caches.append(cache)
            tau = current_tau()
            try:
                if config.loss == "gram":
                    report = loss_report(embeds[0], embeds[1:], tau, head, config.lam)
                else:
                    report = cosine_pairwise_report(embeds[0], embeds[1:], tau)
            except NonFiniteLossError as exc:
                raise DivergedTrainingError(
                    f"loss became non-finite at epoch {epoch}: {exc}", trace=trace
                ) from exc
            if not math.isfinite(report.l_tot):
                raise DivergedTrainingError(
                    f"loss became non-finite at epoch {epoch}", trace=trace
                )

            grads: dict[str, np.ndarray] = {}
            for mi, enc in enumerate(encoders):
                grad_e = report.grad_anchor if mi == 0 else report.grad_datas[mi - 1]
                for name, g in enc.backward(caches[mi], grad_e).items():
                    grads[f"enc{mi}.{name}"] = g
            if report.head_grads is not None:
                for name, g in report.head_grads.items():
                    grads[f"head.{name}"] = g
            grads["log_tau"] = np.array(report.grad_log_tau)

            adam_step(params, grads, state, hyper)
            params["log_tau"][()] = current_tau().clamped().log_tau

        trace.rows.append(_trace_row(epoch, evaluate(
            encoders, held_ds, current_tau(), head,
            config.eval_max_samples, config.loss,
        )))

    return TrainResult(
        trace=trace, encoders=encoders, head=head,
        tau=current_tau(), params=params,
    )
