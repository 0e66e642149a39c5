from .annotations import Dataset, load_annotations, parse_annotations, save_annotations, to_coco
from .metrics import (
    DiversityReport,
    PCKResult,
    distillation_loss,
    diversity_report,
    eeil_balanced_loss,
    eeil_balanced_subset,
    icarl_loss,
    load_predictions,
    pck_score,
)
from .schedule import CLASS_ORDER, AugmentConfig, ExperimentSchedule, StepReport, run_schedule

__all__ = [
    "AugmentConfig", "Dataset", "DiversityReport", "ExperimentSchedule", "CLASS_ORDER",
    "PCKResult", "StepReport", "distillation_loss", "diversity_report", "eeil_balanced_loss",
    "eeil_balanced_subset", "icarl_loss", "load_annotations", "load_predictions",
    "parse_annotations", "pck_score", "run_schedule", "save_annotations", "to_coco",
]
