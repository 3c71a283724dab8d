"""
Line-delimited dataset files.

    # crossbid-dataset v1
    episode <id> budget=<B> cpa_threshold=<C> horizon=<T> ... seed=<seed> [cpa_T=.. bc_T=.. p_cpa=.. p_bc=.. p_total=.. mode=..]
    step <id> <t> <s_0..s_6> <action> <reward> <cumulative_cost> <cumulative_value> <cost> <wins> <impressions>

Floats are written with 17 significant digits so reading back is lossless.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, ValidationError

from crossbid.auction._config import CampaignConfig
from crossbid.auction.model import STATE_DIM, EpisodeLog, StepRecord
from crossbid.base.errors import ConfigError, CrossbidIOError, DatasetFormatError, DatasetParseError
from crossbid.base.utils import numpy_rng
from crossbid.loss.penalty import PenaltyBreakdown

MAGIC = "# crossbid-dataset v1"
STEP_FIELDS = 3 + STATE_DIM + 7
CAMPAIGN_INT_FIELDS = {"horizon", "impressions_per_step", "seed"}
PENALTY_FIELDS = ("cpa_T", "bc_T", "p_cpa", "p_bc", "p_total", "mode")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class OfflineDataset:
    episodes: list[EpisodeLog]
    penalties: dict[int, PenaltyBreakdown] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.episodes)

    def by_id(self) -> dict[int, EpisodeLog]:
        return {e.episode_id: e for e in self.episodes}


class SplitManifest(BaseModel):
    train: list[int]
    validation: list[int]


def _header_line(log: EpisodeLog, penalty: Optional[PenaltyBreakdown]) -> str:
    parts = [f"episode {log.episode_id}"]
    for name, value in log.campaign.model_dump().items():
        parts.append(f"{name}={value}" if name in CAMPAIGN_INT_FIELDS else f"{name}={fmt(value)}")
    if penalty is not None:
        for name in PENALTY_FIELDS[:-1]:
            parts.append(f"{name}={fmt(getattr(penalty, name))}")
        parts.append(f"mode={penalty.mode}")
    return " ".join(parts)


def _step_line(episode_id: int, step: StepRecord) -> str:
    numbers = [
        *step.state,
        step.action,
        step.reward,
        step.cumulative_cost,
        step.cumulative_value,
        step.cost,
    ]
    return " ".join(
        [f"step {episode_id} {step.t}", *(fmt(x) for x in numbers), str(step.wins), str(step.impressions)]
    )


def write_dataset(
        path: Path,
        episodes: Sequence[EpisodeLog],
        penalties: Optional[Sequence[PenaltyBreakdown]] = None,
) -> Path:
    path = Path(path)
    if penalties is not None and len(penalties) != len(episodes):
        raise ConfigError(f"{len(penalties)} penalty records for {len(episodes)} episodes")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(MAGIC + "\n")
            for i, log in enumerate(episodes):
                f.write(_header_line(log, penalties[i] if penalties is not None else None) + "\n")
                for step in log.steps:
                    f.write(_step_line(log.episode_id, step) + "\n")
    except OSError as e:
        raise CrossbidIOError(f"cannot write dataset {path}: {e}") from e
    logger.info("wrote {} episodes to {}", len(episodes), path)
    return path


def _parse_header(line_no: int, tokens: list[str]) -> tuple[EpisodeLog, Optional[PenaltyBreakdown]]:
    if len(tokens) < 2:
        raise DatasetParseError(line_no, "episode header without id")
    try:
        episode_id = int(tokens[1])
        fields_ = dict(token.split("=", 1) for token in tokens[2:])
        campaign_fields = {k: v for k, v in fields_.items() if k not in PENALTY_FIELDS}
        campaign = CampaignConfig(
            **{k: int(v) if k in CAMPAIGN_INT_FIELDS else float(v) for k, v in campaign_fields.items()}
        )
        penalty = None
        if "p_total" in fields_:
            penalty = PenaltyBreakdown(
                cpa_T=float(fields_["cpa_T"]),
                bc_T=float(fields_["bc_T"]),
                p_cpa=float(fields_["p_cpa"]),
                p_bc=float(fields_["p_bc"]),
                p_total=float(fields_["p_total"]),
                mode=fields_.get("mode", "literal"),
            )
    except (ValueError, KeyError, ValidationError) as e:
        raise DatasetParseError(line_no, f"malformed episode header: {e}") from e
    return EpisodeLog(campaign=campaign, episode_id=episode_id, seed=campaign.seed), penalty


def _parse_step(line_no: int, tokens: list[str], current: EpisodeLog) -> StepRecord:
    if len(tokens) != STEP_FIELDS:
        raise DatasetParseError(line_no, f"step record has {len(tokens)} fields, expected {STEP_FIELDS}")
    try:
        episode_id, t = int(tokens[1]), int(tokens[2])
        numbers = [float(x) for x in tokens[3:3 + STATE_DIM + 5]]
        wins, impressions = int(tokens[-2]), int(tokens[-1])
    except ValueError as e:
        raise DatasetParseError(line_no, f"malformed step record: {e}") from e
    if episode_id != current.episode_id:
        raise DatasetParseError(line_no, f"step of episode {episode_id} inside episode {current.episode_id}")
    if t != len(current.steps) or t >= current.campaign.horizon:
        raise DatasetParseError(line_no, f"unexpected step index {t} in episode {episode_id}")
    action, reward, cumulative_cost, cumulative_value, cost = numbers[STATE_DIM:]
    return StepRecord(
        t=t,
        action=action,
        state=np.array(numbers[:STATE_DIM], dtype=np.float64),
        reward=reward,
        cost=cost,
        wins=wins,
        impressions=impressions,
        cumulative_cost=cumulative_cost,
        cumulative_value=cumulative_value,
    )


def read_dataset(path: Path) -> OfflineDataset:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").split("\n")
    except OSError as e:
        raise CrossbidIOError(f"cannot read dataset {path}: {e}") from e
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].strip() != MAGIC:
        raise DatasetFormatError(f"{path} does not start with the '{MAGIC}' header")

    dataset = OfflineDataset(episodes=[])
    current: Optional[EpisodeLog] = None
    current_line = 1

    def close(line_no: int) -> None:
        if current is not None and not current.complete:
            raise DatasetParseError(
                line_no, f"episode {current.episode_id} has {len(current)} of {current.campaign.horizon} steps"
            )

    for line_no, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if not tokens:
            raise DatasetParseError(line_no, "empty line")
        if tokens[0] == "episode":
            close(current_line)
            current, penalty = _parse_header(line_no, tokens)
            dataset.episodes.append(current)
            if penalty is not None:
                dataset.penalties[current.episode_id] = penalty
        elif tokens[0] == "step":
            if current is None:
                raise DatasetFormatError(f"{path}: line {line_no}: step record before any episode header")
            current.steps.append(_parse_step(line_no, tokens, current))
        else:
            raise DatasetParseError(line_no, f"unknown record type '{tokens[0]}'")
        current_line = line_no
    close(current_line)

    logger.debug("read {} episodes from {}", len(dataset), path)
    return dataset


def split_episodes(episode_ids: Sequence[int], validation_fraction: float, seed: int) -> SplitManifest:
    if not 0.0 <= validation_fraction < 1.0:
        raise ConfigError(f"validation fraction must lie in [0, 1), got {validation_fraction}")
    ids = np.array(sorted(episode_ids), dtype=np.int64)
    order = numpy_rng(seed, 2).permutation(ids.size)
    n_val = int(round(validation_fraction * ids.size))
    validation = sorted(int(i) for i in ids[order[:n_val]])
    train = sorted(int(i) for i in ids[order[n_val:]])
    return SplitManifest(train=train, validation=validation)


def write_split_manifest(path: Path, manifest: SplitManifest) -> Path:
    path = Path(path)
    try:
        path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise CrossbidIOError(f"cannot write split manifest {path}: {e}") from e
    return path


def read_split_manifest(path: Path) -> SplitManifest:
    path = Path(path)
    try:
        return SplitManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise CrossbidIOError(f"cannot read split manifest {path}: {e}") from e
    except ValidationError as e:
        raise DatasetFormatError(f"malformed split manifest {path}: {e}") from e
