"""Four-row component ablation: {vanilla DT, CLB-DT} x {plain MSE, constraint-aware loss}."""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from loguru import logger
from pydantic import BaseModel

from crossbid.base.errors import ContractError, CrossbidError
from crossbid.base.utils import config_diff
from crossbid.dataset.io import OfflineDataset
from crossbid.harness._config import LossKind, RunConfig
from crossbid.harness.evaluate import evaluate_checkpoint, improvement
from crossbid.harness.train import RUN_ONLY_FIELDS, Trainer, prepare_training_data, run_fingerprint
from crossbid.network._config import Variant
from crossbid.network.params import init_params

ABLATION_RATIO = 1.0


@dataclass(frozen=True)
class AblationSpec:
    label: str
    variant: Variant
    loss_kind: LossKind


ABLATION_ROWS = (
    AblationSpec("a", "vanilla_dt", "mse"),
    AblationSpec("b", "vanilla_dt", "cl"),
    AblationSpec("c", "clb_dt", "mse"),
    AblationSpec("d", "clb_dt", "cl"),
)


class AblationRow(BaseModel):
    label: str
    variant: Variant
    loss_kind: LossKind
    fingerprint: str
    parameters: int
    status: str = "ok"
    score: Optional[float] = None
    improve: Optional[float] = None
    error: Optional[str] = None


class AblationReport(BaseModel):
    rows: list[AblationRow]
    budget_ratio: float = ABLATION_RATIO
    # d >= a on this data; informational only
    directional_ok: Optional[bool] = None


def row_config(base: RunConfig, spec: AblationSpec) -> RunConfig:
    network = base.network.model_copy(update={"variant": spec.variant})
    return base.model_copy(
        update={"network": network, "loss_kind": spec.loss_kind, "budget_ratios": [ABLATION_RATIO]}
    )


def expected_flags(x: AblationSpec, y: AblationSpec) -> set[str]:
    flags = set()
    if x.variant != y.variant:
        flags.add("network.variant")
    if x.loss_kind != y.loss_kind:
        flags.add("loss_kind")
    return flags


def check_isolation(configs: dict[str, RunConfig]) -> None:
    """Raises unless every pair of rows differs in exactly its intended flags."""
    specs = {s.label: s for s in ABLATION_ROWS}
    labels = sorted(configs)
    for i, x in enumerate(labels):
        for y in labels[i + 1:]:
            diff = config_diff(configs[x], configs[y], exclude=RUN_ONLY_FIELDS)
            wanted = expected_flags(specs[x], specs[y])
            if diff != wanted:
                raise ContractError(f"ablation rows ({x}) and ({y}) differ in {sorted(diff)}, expected {sorted(wanted)}")


def run_ablation(
        cfg: RunConfig,
        dataset: OfflineDataset,
        out_dir: Path,
        train_ids: Optional[list[int]] = None,
        dataset_digest: str = "",
) -> AblationReport:
    configs = {spec.label: row_config(cfg, spec) for spec in ABLATION_ROWS}
    check_isolation(configs)
    # every row trains on the same segments and statistics
    data = prepare_training_data(dataset, cfg, train_ids)

    rows = []
    for spec in ABLATION_ROWS:
        row_cfg = configs[spec.label]
        row = AblationRow(
            label=spec.label,
            variant=spec.variant,
            loss_kind=spec.loss_kind,
            fingerprint=run_fingerprint(row_cfg),
            parameters=init_params(row_cfg.model_for_run()).num_parameters(),
        )
        logger.info("ablation row ({}): {} + {}", spec.label, spec.variant, spec.loss_kind)
        try:
            result = Trainer(row_cfg, data, dataset_digest).fit(out_dir / f"row_{spec.label}")
            report, _ = evaluate_checkpoint(result.checkpoint, row_cfg)
            row.score = report.score_at(ABLATION_RATIO)
        except CrossbidError as e:
            logger.error("ablation row ({}) failed: {}", spec.label, e)
            row.status = "failed"
            row.error = f"{e.category}: {e}"
        rows.append(row)

    baseline = rows[0].score
    for row in rows[1:]:
        row.improve = improvement(row.score, baseline)

    directional = None
    if rows[0].score is not None and rows[3].score is not None:
        directional = rows[3].score >= rows[0].score
    return AblationReport(rows=rows, directional_ok=directional)
