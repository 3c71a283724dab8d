from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel

from crossbid.auction.model import EpisodeLog
from crossbid.auction.score import compute_score
from crossbid.base.errors import CompatibilityError
from crossbid.base.utils import derive_seed, spawn_seeds
from crossbid.harness._config import RunConfig
from crossbid.harness.train import read_metadata
from crossbid.kernel.checkpoint import load_checkpoint
from crossbid.loss.penalty import total_penalty
from crossbid.network.rollout import rollout_inference

EVAL_STREAM = 4


class EvalRow(BaseModel):
    budget_ratio: float
    variant: str
    penalty_mode: str
    loss_kind: str
    score: float
    score_std: float
    penalties: dict[str, float]
    total_value: float
    total_cost: float
    cpa: float
    bc: float
    episodes: int
    fingerprint: str
    seed: int
    improve: Optional[float] = None


class EvalReport(BaseModel):
    checkpoint: str
    fingerprint: str
    rows: list[EvalRow]
    baseline: Optional[str] = None

    def score_at(self, ratio: float) -> float:
        for row in self.rows:
            if row.budget_ratio == ratio:
                return row.score
        raise KeyError(f"no row for budget ratio {ratio}")


def improvement(score: Optional[float], baseline: Optional[float]) -> Optional[float]:
    """Relative gain in percent; undefined against a failed or zero baseline."""
    if score is None or baseline is None or baseline == 0:
        return None
    return 100.0 * (score - baseline) / baseline


def compare_to_baseline(report: EvalReport, baseline: EvalReport) -> EvalReport:
    """Fills each row's gain over the baseline row at the same budget ratio."""
    rows = []
    for row in report.rows:
        try:
            reference = baseline.score_at(row.budget_ratio)
        except KeyError as e:
            raise CompatibilityError(f"baseline has no row for budget ratio {row.budget_ratio}") from e
        rows.append(row.model_copy(update={"improve": improvement(row.score, reference)}))
    return report.model_copy(update={"rows": rows, "baseline": baseline.checkpoint})


def eval_seeds(cfg: RunConfig) -> list[int]:
    """Campaign seeds shared by every budget ratio and every checkpoint of a run."""
    return spawn_seeds(derive_seed(cfg.seed, EVAL_STREAM), cfg.num_eval_episodes)


def _summarize(logs: list[EpisodeLog], ratio: float, cfg: RunConfig, meta: dict[str, str]) -> EvalRow:
    scores = [compute_score(log, cfg.score) for log in logs]
    breakdowns = [total_penalty(log, log.campaign, cfg.penalty) for log in logs]
    keys = scores[0].penalties.keys()
    return EvalRow(
        budget_ratio=ratio,
        variant=meta["variant"],
        penalty_mode=meta.get("penalty_mode", cfg.penalty.mode),
        loss_kind=meta.get("loss_kind", cfg.loss_kind),
        score=float(np.mean([s.score for s in scores])),
        score_std=float(np.std([s.score for s in scores])),
        penalties={k: float(np.mean([s.penalties[k] for s in scores])) for k in keys},
        total_value=float(np.mean([s.total_value for s in scores])),
        total_cost=float(np.mean([s.total_cost for s in scores])),
        cpa=float(np.mean([b.cpa_T for b in breakdowns])),
        bc=float(np.mean([b.bc_T for b in breakdowns])),
        episodes=len(logs),
        fingerprint=meta.get("fingerprint", ""),
        seed=cfg.seed,
    )


def evaluate_checkpoint(
        checkpoint: Path,
        cfg: RunConfig,
        dataset_digest: Optional[str] = None,
) -> tuple[EvalReport, dict[float, list[EpisodeLog]]]:
    """
    Rolls the checkpoint out at every budget ratio over the same campaign seeds.

    Returns the report and the raw episode logs per ratio.
    """
    params, metadata = load_checkpoint(checkpoint)
    model_cfg, stats = read_metadata(metadata)
    if model_cfg.horizon != cfg.campaign.horizon:
        raise CompatibilityError(
            f"checkpoint horizon {model_cfg.horizon} differs from campaign horizon {cfg.campaign.horizon}"
        )
    if len(stats.state_mean) != model_cfg.state_dim:
        raise CompatibilityError(
            f"normalization stats cover {len(stats.state_mean)} state features, model expects {model_cfg.state_dim}"
        )
    if dataset_digest is not None and metadata.get("dataset_digest") not in ("", dataset_digest):
        raise CompatibilityError(
            f"checkpoint was trained on dataset {metadata.get('dataset_digest')}, not {dataset_digest}"
        )

    meta = dict(metadata, variant=model_cfg.variant)
    seeds = eval_seeds(cfg)
    rows = []
    logs_by_ratio: dict[float, list[EpisodeLog]] = {}
    for ratio in cfg.budget_ratios:
        campaign = cfg.campaign.with_budget_ratio(ratio)
        target = cfg.target_rtg_scale * ratio * stats.max_return

        def run(i: int) -> EpisodeLog:
            return rollout_inference(
                params, model_cfg, stats, campaign.model_copy(update={"seed": seeds[i]}), target, episode_id=i
            )

        with ThreadPoolExecutor(max_workers=max(cfg.workers, 1)) as executor:
            logs = list(executor.map(run, range(len(seeds))))
        logs_by_ratio[ratio] = logs
        row = _summarize(logs, ratio, cfg, meta)
        logger.info("ratio {:.2f}: score {:.3f} cpa {:.3f} bc {:.3f}", ratio, row.score, row.cpa, row.bc)
        rows.append(row)

    report = EvalReport(checkpoint=str(checkpoint), fingerprint=metadata.get("fingerprint", ""), rows=rows)
    return report, logs_by_ratio
