"""Volume-based similarity and contrastive alignment for multimodal embeddings."""

from . import errors
from .encoders import ToyEncoder
from .losses import (
    DamHead,
    LossReport,
    MatchLabel,
    Temperature,
    contrastive_grad,
    dam_loss,
    gram_contrastive_loss,
    hard_negative_mine,
    loss_report,
    total_loss,
)
from .metrics import (
    AlignmentScore,
    RetrievalReport,
    alignment_metric,
    pearson,
    report_as_csv,
    report_as_json,
    retrieval_recall,
    retrieval_report,
)
from .optim import AdamHyper, AdamState, adam_step
from .similarity import (
    CrossVolumeMatrix,
    ModalityBatch,
    MultimodalBatch,
    cosine_matrix,
    cross_volume_matrix,
    cross_volumes,
)
from .synth import MultimodalDataset, SyntheticSpec, generate_dataset, split_dataset
from .train import (
    EvalStats,
    TraceRow,
    TrainConfig,
    TrainingTrace,
    TrainResult,
    cosine_pairwise_report,
    evaluate,
    train,
)
from .volume import (
    Volume,
    VolumeGradient,
    gram_matrix,
    gramian_volume,
    normalize,
    psd_det,
    volume_gradient,
)

__version__ = "0.1.0"

__all__ = [
    "AdamHyper",
    "AdamState",
    "AlignmentScore",
    "CrossVolumeMatrix",
    "DamHead",
    "EvalStats",
    "LossReport",
    "MatchLabel",
    "ModalityBatch",
    "MultimodalBatch",
    "MultimodalDataset",
    "RetrievalReport",
    "SyntheticSpec",
    "Temperature",
    "ToyEncoder",
    "TraceRow",
    "TrainConfig",
    "TrainResult",
    "TrainingTrace",
    "Volume",
    "VolumeGradient",
    "adam_step",
    "alignment_metric",
    "contrastive_grad",
    "cosine_matrix",
    "cosine_pairwise_report",
    "cross_volume_matrix",
    "cross_volumes",
    "dam_loss",
    "errors",
    "evaluate",
    "generate_dataset",
    "gram_contrastive_loss",
    "gram_matrix",
    "gramian_volume",
    "hard_negative_mine",
    "loss_report",
    "normalize",
    "pearson",
    "report_as_csv",
    "report_as_json",
    "psd_det",
    "retrieval_recall",
    "retrieval_report",
    "split_dataset",
    "total_loss",
    "train",
    "volume_gradient",
]
