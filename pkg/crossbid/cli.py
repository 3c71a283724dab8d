import functools
import sys
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Callable, List, Optional

import typer
from loguru import logger

from crossbid.base.errors import EXIT_CODES, CrossbidError
from crossbid.base.utils import file_digest
from crossbid.dataset.io import (
    read_dataset,
    read_split_manifest,
    split_episodes,
    write_dataset,
    write_split_manifest,
)
from crossbid.harness._config import RunConfig, load_run_config
from crossbid.harness.ablate import run_ablation
from crossbid.harness.evaluate import compare_to_baseline, evaluate_checkpoint
from crossbid.harness.report import ablation_table, eval_table, show, write_jsonl, xcorr_table
from crossbid.harness.train import Trainer, prepare_training_data
from crossbid.harness.xcorr import cross_correlation
from crossbid.auction.simulator import generate_synthetic_dataset
from crossbid.loss.penalty import total_penalty

DATASET_FILE = "dataset.txt"
SPLIT_FILE = "split.json"


class VariantOption(str, Enum):
    clb_dt = "clb_dt"
    vanilla_dt = "vanilla_dt"


class LossOption(str, Enum):
    cl = "cl"
    mse = "mse"


class PenaltyModeOption(str, Enum):
    literal = "literal"
    clamped = "clamped"


ConfigOpt = Annotated[Optional[Path], typer.Option("--config", help="JSON file mirroring RunConfig field names.")]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", help="Seed for data, initialization, batches and rollouts.")]
OutOpt = Annotated[Optional[Path], typer.Option("--out", help="Output directory.")]
VariantOpt = Annotated[Optional[VariantOption], typer.Option("--variant")]
LossOpt = Annotated[Optional[LossOption], typer.Option("--loss", help="cl: penalty-weighted, mse: plain.")]
PenaltyModeOpt = Annotated[Optional[PenaltyModeOption], typer.Option("--penalty-mode")]
IterationsOpt = Annotated[Optional[int], typer.Option("--iterations", min=1)]
RatioOpt = Annotated[Optional[List[float]], typer.Option("--budget-ratio", help="Repeat for several ratios.")]
FullScaleOpt = Annotated[bool, typer.Option("--full-scale", help="10,000 iterations at learning rate 1e-5.")]
DatasetOpt = Annotated[Optional[Path], typer.Option("--dataset", help="Dataset file (default <out>/dataset.txt).")]
BaselineOpt = Annotated[Optional[Path], typer.Option("--baseline", help="Checkpoint to report relative gains against.")]

cli = typer.Typer(no_args_is_help=True, add_completion=False)


@cli.callback()
def main(
        log_level: Annotated[str, typer.Option("--log-level", envvar="CROSSBID_LOG_LEVEL")] = "INFO",
):
    """Generative auto-bidding with cross-learning decision transformers."""
    logger.remove()
    logger.add(sys.stdout, level=log_level.upper())


def handle_errors(command: Callable[..., Any]) -> Callable[..., Any]:
    """Turns library errors into `error[<category>]` diagnostics and category exit codes."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except CrossbidError as e:
            typer.echo(f"error[{e.category}]: {e}", err=True)
            raise typer.Exit(code=EXIT_CODES.get(e.category, 1)) from e

    return wrapper


def build_config(
        config: Optional[Path],
        seed: Optional[int] = None,
        out: Optional[Path] = None,
        variant: Optional[VariantOption] = None,
        loss: Optional[LossOption] = None,
        penalty_mode: Optional[PenaltyModeOption] = None,
        iterations: Optional[int] = None,
        budget_ratio: Optional[list[float]] = None,
        full_scale: bool = False,
) -> RunConfig:
    overrides: dict[str, Any] = {}
    if seed is not None:
        overrides["seed"] = seed
    if out is not None:
        overrides["output_dir"] = str(out)
    if variant is not None:
        overrides["network"] = {"variant": variant.value}
    if loss is not None:
        overrides["loss_kind"] = loss.value
    if penalty_mode is not None:
        overrides["penalty"] = {"clamp_floor_enabled": penalty_mode is PenaltyModeOption.clamped}
    if budget_ratio:
        overrides["budget_ratios"] = budget_ratio
    cfg = load_run_config(config, overrides)
    if full_scale:
        cfg = cfg.full_scale()
    if iterations is not None:
        cfg = cfg.model_copy(update={"max_iterations": iterations})
    return cfg


def _train_ids(dataset_path: Path) -> Optional[list[int]]:
    split_path = dataset_path.parent / SPLIT_FILE
    if not split_path.exists():
        return None
    return read_split_manifest(split_path).train


@cli.command("gen-data")
@handle_errors
def gen_data(
        config: ConfigOpt = None,
        seed: SeedOpt = None,
        out: OutOpt = None,
        penalty_mode: PenaltyModeOpt = None,
        episodes: Annotated[Optional[int], typer.Option("--episodes", min=1)] = None,
):
    """Simulate the behaviour-policy mixture and write the dataset and split manifest."""
    cfg = build_config(config, seed=seed, out=out, penalty_mode=penalty_mode)
    if episodes is not None:
        cfg = cfg.model_copy(update={"num_episodes": episodes})
    out_dir = cfg.ensure_output_dir()

    campaign = cfg.campaign.model_copy(update={"seed": cfg.seed})
    logs = generate_synthetic_dataset(campaign, cfg.num_episodes, cfg.policy_mixture, workers=cfg.workers)
    penalties = [total_penalty(log, log.campaign, cfg.penalty) for log in logs]
    violating = sum(p.p_cpa > 1 for p in penalties)
    logger.info("{} of {} episodes exceed the CPA threshold", violating, len(penalties))

    write_dataset(out_dir / DATASET_FILE, logs, penalties)
    manifest = split_episodes([log.episode_id for log in logs], cfg.validation_fraction, cfg.seed)
    write_split_manifest(out_dir / SPLIT_FILE, manifest)
    typer.echo(f"wrote {len(logs)} episodes to {out_dir / DATASET_FILE}")


@cli.command("train")
@handle_errors
def train(
        config: ConfigOpt = None,
        seed: SeedOpt = None,
        out: OutOpt = None,
        dataset: DatasetOpt = None,
        variant: VariantOpt = None,
        loss: LossOpt = None,
        penalty_mode: PenaltyModeOpt = None,
        iterations: IterationsOpt = None,
        full_scale: FullScaleOpt = False,
        resume: Annotated[Optional[Path], typer.Option("--resume", help="Checkpoint to continue from.")] = None,
):
    """Train one variant on the offline dataset and save a checkpoint."""
    cfg = build_config(config, seed, out, variant, loss, penalty_mode, iterations, full_scale=full_scale)
    out_dir = cfg.ensure_output_dir()
    dataset_path = dataset or out_dir / DATASET_FILE

    data = prepare_training_data(read_dataset(dataset_path), cfg, _train_ids(dataset_path))
    trainer = Trainer(cfg, data, file_digest(dataset_path), resume=resume)
    result = trainer.fit(out_dir)
    smoothed = result.smoothed(cfg.log_every)
    if smoothed.size:
        typer.echo(f"smoothed loss {smoothed[0]:.6f} -> {smoothed[-1]:.6f}")
    typer.echo(f"checkpoint: {result.checkpoint}")


@cli.command("eval")
@handle_errors
def evaluate(
        checkpoint: Annotated[Path, typer.Argument(help="Trained checkpoint.")],
        config: ConfigOpt = None,
        seed: SeedOpt = None,
        out: OutOpt = None,
        budget_ratio: RatioOpt = None,
        dataset: DatasetOpt = None,
        baseline: BaselineOpt = None,
):
    """Roll the checkpoint out at every budget ratio and report scores."""
    cfg = build_config(config, seed, out, budget_ratio=budget_ratio)
    out_dir = cfg.ensure_output_dir()
    digest = file_digest(dataset) if dataset is not None else None
    report, _ = evaluate_checkpoint(checkpoint, cfg, digest)
    if baseline is not None:
        reference, _ = evaluate_checkpoint(baseline, cfg, digest)
        report = compare_to_baseline(report, reference)
    write_jsonl(out_dir / "eval.jsonl", report.rows)
    show(eval_table(report))


@cli.command("ablate")
@handle_errors
def ablate(
        config: ConfigOpt = None,
        seed: SeedOpt = None,
        out: OutOpt = None,
        dataset: DatasetOpt = None,
        penalty_mode: PenaltyModeOpt = None,
        iterations: IterationsOpt = None,
        full_scale: FullScaleOpt = False,
):
    """Train and evaluate the four component rows on identical data and seeds."""
    cfg = build_config(config, seed, out, penalty_mode=penalty_mode, iterations=iterations, full_scale=full_scale)
    out_dir = cfg.ensure_output_dir()
    dataset_path = dataset or out_dir / DATASET_FILE
    report = run_ablation(
        cfg, read_dataset(dataset_path), out_dir, _train_ids(dataset_path), file_digest(dataset_path)
    )
    write_jsonl(out_dir / "ablation.jsonl", report.rows)
    note = None
    if report.directional_ok is not None:
        note = f"(d) >= (a): {'yes' if report.directional_ok else 'no'} (informational)"
    show(ablation_table(report), note)


@cli.command("xcorr")
@handle_errors
def xcorr(
        clb_checkpoint: Annotated[Path, typer.Argument(help="CLB-DT checkpoint.")],
        vanilla_checkpoint: Annotated[Path, typer.Argument(help="Vanilla DT checkpoint.")],
        config: ConfigOpt = None,
        seed: SeedOpt = None,
        out: OutOpt = None,
        dataset: DatasetOpt = None,
        samples: Annotated[Optional[int], typer.Option("--samples", min=1)] = None,
        identity: Annotated[bool, typer.Option("--identity", help="Skip the shuffle (sanity check).")] = False,
):
    """Compare first-block embeddings of matched and state-shuffled segments."""
    cfg = build_config(config, seed, out)
    updates: dict[str, Any] = {"xcorr_identity": identity or cfg.xcorr_identity}
    if samples is not None:
        updates["xcorr_samples"] = samples
    cfg = cfg.model_copy(update=updates)
    out_dir = cfg.ensure_output_dir()
    dataset_path = dataset or out_dir / DATASET_FILE

    report = cross_correlation(clb_checkpoint, vanilla_checkpoint, read_dataset(dataset_path), cfg)
    (out_dir / "xcorr.json").write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    write_jsonl(out_dir / "xcorr.jsonl", [report.clb, report.vanilla])
    verdict = "yes" if report.directional_ok else "no"
    show(xcorr_table(report), f"CLB-DT mean below vanilla DT mean: {verdict} (informational)")


if __name__ == "__main__":
    cli()
