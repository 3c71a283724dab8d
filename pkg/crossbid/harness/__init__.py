from crossbid.harness._config import RunConfig, load_run_config
from crossbid.harness.ablate import ABLATION_ROWS, AblationReport, AblationRow, run_ablation
from crossbid.harness.evaluate import EvalReport, EvalRow, compare_to_baseline, evaluate_checkpoint, improvement
from crossbid.harness.train import Trainer, TrainRecord, TrainResult, prepare_training_data, run_fingerprint
from crossbid.harness.xcorr import XCorrReport, XCorrSummary, cosine_similarity, cross_correlation

__all__ = [
    "ABLATION_ROWS",
    "AblationReport",
    "AblationRow",
    "EvalReport",
    "EvalRow",
    "RunConfig",
    "TrainRecord",
    "TrainResult",
    "Trainer",
    "XCorrReport",
    "XCorrSummary",
    "compare_to_baseline",
    "cosine_similarity",
    "cross_correlation",
    "evaluate_checkpoint",
    "improvement",
    "load_run_config",
    "prepare_training_data",
    "run_ablation",
    "run_fingerprint",
]
