"""Dataset synthesis, training orchestration, metrics, and experiments."""

from .dataset import (
    Dataset,
    LabeledSample,
    SynthConfig,
    label_histogram,
    load_dataset,
    manifest_hash,
    read_tensor,
    save_dataset,
    split_dataset,
    synthesize_dataset,
    write_tensor,
)
from .isolate import (
    AblationCase,
    AblationReport,
    IsolationResult,
    ablate_nulls,
    isolate_and_classify,
    write_ablation_report,
)
from .metrics import (
    ClassCounts,
    MultiLabelMetrics,
    confusion_matrix,
    multilabel_metrics,
    single_label_accuracy,
)
from .train import (
    EpochRecord,
    TrainConfig,
    compute_class_weights,
    evaluate_multilabel,
    train_model,
)

__all__ = [
    "AblationCase",
    "AblationReport",
    "ClassCounts",
    "Dataset",
    "EpochRecord",
    "IsolationResult",
    "LabeledSample",
    "MultiLabelMetrics",
    "SynthConfig",
    "TrainConfig",
    "ablate_nulls",
    "compute_class_weights",
    "confusion_matrix",
    "evaluate_multilabel",
    "isolate_and_classify",
    "label_histogram",
    "load_dataset",
    "manifest_hash",
    "multilabel_metrics",
    "read_tensor",
    "save_dataset",
    "single_label_accuracy",
    "split_dataset",
    "synthesize_dataset",
    "train_model",
    "write_ablation_report",
    "write_tensor",
]
