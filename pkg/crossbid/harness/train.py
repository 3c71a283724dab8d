import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
from loguru import logger
from pydantic import BaseModel

from crossbid.base.errors import CompatibilityError, ConfigError, NumericError
from crossbid.base.utils import fingerprint, numpy_rng, torch_generator
from crossbid.dataset.batch import SegmentBank
from crossbid.dataset.io import OfflineDataset
from crossbid.dataset.normalize import NormStats, normalize_features
from crossbid.dataset.trajectory import Trajectory, build_segments
from crossbid.harness._config import RunConfig
from crossbid.kernel.checkpoint import load_checkpoint, save_checkpoint
from crossbid.kernel.ops import backward
from crossbid.kernel.params import ParamStore, adamw_step
from crossbid.loss.objective import action_loss, rtg_loss, total_loss
from crossbid.network._config import ModelConfig
from crossbid.network.forward import model_forward
from crossbid.network.params import init_params, loss_free_params

# fields that never change what a run computes
RUN_ONLY_FIELDS = {"output_dir", "workers"}

BATCH_STREAM = 5
DROPOUT_STREAM = 6


class TrainRecord(BaseModel):
    iteration: int
    loss: float
    action_loss: float
    rtg_loss: float


@dataclass
class TrainResult:
    checkpoint: Path
    records: list[TrainRecord] = field(default_factory=list)

    def smoothed(self, window: int = 50) -> np.ndarray:
        """Trailing moving average of the total loss."""
        losses = np.array([r.loss for r in self.records])
        if losses.size < window:
            return losses
        kernel = np.ones(window) / window
        return np.convolve(losses, kernel, mode="valid")


@dataclass
class TrainingData:
    bank: SegmentBank
    stats: NormStats
    trajectories: list[Trajectory]


def run_fingerprint(cfg: RunConfig) -> str:
    return fingerprint(cfg, exclude=RUN_ONLY_FIELDS)


def prepare_training_data(
        dataset: OfflineDataset,
        cfg: RunConfig,
        episode_ids: Optional[Sequence[int]] = None,
        stats: Optional[NormStats] = None,
) -> TrainingData:
    """Penalties under `cfg.penalty`, z-normalized features and every segment of every episode."""
    wanted = set(episode_ids) if episode_ids is not None else None
    episodes = [e for e in dataset.episodes if wanted is None or e.episode_id in wanted]
    if not episodes:
        raise ConfigError("no episodes selected for training")

    logger.info("building trajectories with {} penalties", cfg.penalty.mode)
    trajectories = [Trajectory.from_episode(e, cfg.penalty) for e in episodes]
    normalized, stats = normalize_features(trajectories, stats)
    window = cfg.network.window
    segments = [segment for traj in normalized for segment in build_segments(traj, window)]
    logger.info("{} segments of length {} from {} episodes", len(segments), window, len(episodes))
    return TrainingData(bank=SegmentBank(segments), stats=stats, trajectories=trajectories)


def checkpoint_metadata(
        cfg: RunConfig,
        model_cfg: ModelConfig,
        stats: NormStats,
        iteration: int,
        dataset_digest: str,
) -> dict[str, str]:
    return {
        "model_config": model_cfg.model_dump_json(),
        "norm_stats": stats.model_dump_json(),
        "dataset_digest": dataset_digest,
        "fingerprint": run_fingerprint(cfg),
        "iteration": str(iteration),
        "loss_kind": cfg.loss_kind,
        "penalty_mode": cfg.penalty.mode,
        "seed": str(cfg.seed),
    }


def read_metadata(metadata: dict[str, str]) -> tuple[ModelConfig, NormStats]:
    try:
        return (
            ModelConfig.model_validate_json(metadata["model_config"]),
            NormStats.model_validate_json(metadata["norm_stats"]),
        )
    except (KeyError, ValueError) as e:
        raise CompatibilityError(f"checkpoint metadata is incomplete: {e}") from e


class Trainer:
    """
    Sequential penalty-weighted training. Iteration i samples its batch and
    dropout masks from (seed, i) alone, so a resumed run repeats the updates
    an uninterrupted run would make.
    """

    def __init__(
            self,
            cfg: RunConfig,
            data: TrainingData,
            dataset_digest: str = "",
            resume: Optional[Path] = None,
    ) -> None:
        self.cfg = cfg
        self.data = data
        self.dataset_digest = dataset_digest
        self.model_cfg = cfg.model_for_run()
        self.start_iteration = 0

        if resume is None:
            self.params: ParamStore = init_params(self.model_cfg)
        else:
            self.params, metadata = load_checkpoint(resume)
            saved_cfg, saved_stats = read_metadata(metadata)
            if saved_cfg != self.model_cfg:
                raise CompatibilityError(f"checkpoint {resume} was trained with a different network config")
            if saved_stats != data.stats:
                raise CompatibilityError(f"checkpoint {resume} was trained on different normalization statistics")
            self.start_iteration = int(metadata.get("iteration", 0))
            logger.info("resuming from {} at iteration {}", resume, self.start_iteration)

        # adamw_step zeroes gradients after each update; everything else must be reached by the loss
        unreached = loss_free_params(self.params, self.model_cfg)
        self.params.zero_grad(unreached)
        logger.debug("{} parameter tensors never reach the heads", len(unreached))

    def step(self, iteration: int) -> TrainRecord:
        cfg = self.cfg
        batch = self.data.bank.sample(cfg.batch_size, numpy_rng(cfg.seed, BATCH_STREAM, iteration))
        if cfg.loss_kind == "mse":
            batch = batch.replace(penalties=torch.ones_like(batch.penalties))

        a_hat, r_hat = model_forward(
            batch, self.params, self.model_cfg, training=True,
            generator=torch_generator(cfg.seed, DROPOUT_STREAM, iteration),
        )
        l_a = action_loss(a_hat, batch.actions, batch.penalties, batch.mask)
        l_r = rtg_loss(r_hat, batch.rtg, batch.penalties, batch.mask)
        try:
            loss = total_loss(l_a, l_r, cfg.loss)
        except NumericError as e:
            raise NumericError(f"training diverged at iteration {iteration}: {e}") from e
        backward(loss)
        adamw_step(
            self.params,
            lr=cfg.learning_rate,
            beta1=cfg.adam_beta1,
            beta2=cfg.adam_beta2,
            eps=cfg.adam_eps,
            weight_decay=cfg.weight_decay,
        )
        return TrainRecord(iteration=iteration, loss=float(loss), action_loss=float(l_a), rtg_loss=float(l_r))

    def fit(self, out_dir: Path, iterations: Optional[int] = None) -> TrainResult:
        cfg = self.cfg
        end = cfg.max_iterations if iterations is None else self.start_iteration + iterations
        out_dir.mkdir(parents=True, exist_ok=True)
        log_path = out_dir / "train_log.jsonl"
        result = TrainResult(checkpoint=out_dir / "checkpoint.safetensors")

        logger.info(
            "training {} ({} loss) for iterations {}..{} at lr {}",
            self.model_cfg.variant, cfg.loss_kind, self.start_iteration, end, cfg.learning_rate,
        )
        mode = "a" if self.start_iteration > 0 else "w"
        with open(log_path, mode, encoding="utf-8") as log_file:
            for i in range(self.start_iteration, end):
                record = self.step(i)
                result.records.append(record)
                log_file.write(record.model_dump_json() + "\n")
                if (i + 1) % cfg.log_every == 0:
                    recent = [r.loss for r in result.records[-cfg.log_every:]]
                    logger.info("iteration {}: loss {:.6f} (mean of last {}: {:.6f})",
                                i + 1, record.loss, len(recent), float(np.mean(recent)))

        metadata = checkpoint_metadata(cfg, self.model_cfg, self.data.stats, end, self.dataset_digest)
        save_checkpoint(result.checkpoint, self.params, metadata)
        (out_dir / "run_config.json").write_text(
            json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return result
