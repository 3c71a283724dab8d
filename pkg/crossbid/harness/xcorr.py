"""
Matched-vs-shuffled embedding similarity.

For each sampled segment the first-block embedding of the original segment is
compared with the embedding of a copy whose state rows are permuted in time
(actions and RTG untouched). High similarity means the block barely depends on
the order of states.
"""
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np
import torch
from loguru import logger
from pydantic import BaseModel

from crossbid.base.utils import numpy_rng
from crossbid.dataset.batch import SegmentBank, SegmentBatch
from crossbid.dataset.io import OfflineDataset
from crossbid.harness._config import RunConfig
from crossbid.harness.train import prepare_training_data, read_metadata
from crossbid.kernel.checkpoint import load_checkpoint
from crossbid.kernel.ops import DTYPE
from crossbid.network.forward import extract_block1_embedding

XCORR_STREAM = 7
HISTOGRAM_BINS = 20
CHUNK = 128


class XCorrSummary(BaseModel):
    checkpoint: str
    variant: str
    samples: int
    with_replacement: bool
    similarities: list[float]
    mean: float
    median: float
    std: float
    min: float
    max: float
    histogram: list[int]
    bin_edges: list[float]


class XCorrReport(BaseModel):
    clb: XCorrSummary
    vanilla: XCorrSummary
    # lower CLB-DT similarity than vanilla DT; informational only
    directional_ok: bool


def cosine_similarity(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Row-wise cosine in [-1, 1]; 1 for two zero vectors, 0 when only one is zero."""
    nx = torch.linalg.vector_norm(x, dim=-1)
    ny = torch.linalg.vector_norm(y, dim=-1)
    dot = (x * y).sum(dim=-1)
    denom = nx * ny
    cos = torch.where(denom > 0, dot / torch.where(denom > 0, denom, torch.ones_like(denom)), torch.zeros_like(dot))
    both_zero = (nx == 0) & (ny == 0)
    return torch.where(both_zero, torch.ones_like(cos), cos).clamp(-1.0, 1.0)


def shuffle_states(batch: SegmentBatch, seed: int, sample_ids: np.ndarray, identity: bool = False) -> SegmentBatch:
    """Permutes each segment's valid state rows with a permutation drawn from (seed, sample id)."""
    if identity:
        return batch
    states = batch.states.clone()
    for row, sample_id in enumerate(sample_ids):
        valid = int(batch.mask[row].sum())
        pad = batch.window - valid
        perm = numpy_rng(seed, XCORR_STREAM, int(sample_id)).permutation(valid)
        states[row, pad:] = states[row, pad:][torch.as_tensor(perm)]
    return batch.replace(states=states)


def sample_indices(count: int, population: int, seed: int) -> tuple[np.ndarray, bool]:
    with_replacement = population < count
    if with_replacement:
        logger.warning("only {} segments for {} samples; sampling with replacement", population, count)
    rng = numpy_rng(seed, XCORR_STREAM)
    return rng.choice(population, size=count, replace=with_replacement), with_replacement


def summarize(checkpoint: str, variant: str, sims: np.ndarray, with_replacement: bool) -> XCorrSummary:
    hist, edges = np.histogram(sims, bins=HISTOGRAM_BINS, range=(-1.0, 1.0))
    return XCorrSummary(
        checkpoint=checkpoint,
        variant=variant,
        samples=int(sims.size),
        with_replacement=with_replacement,
        similarities=sims.tolist(),
        mean=float(np.mean(sims)),
        median=float(np.median(sims)),
        std=float(np.std(sims)),
        min=float(np.min(sims)),
        max=float(np.max(sims)),
        histogram=hist.tolist(),
        bin_edges=edges.tolist(),
    )


def embedding_similarities(
        checkpoint: Path,
        dataset: OfflineDataset,
        cfg: RunConfig,
        episode_ids: Optional[list[int]] = None,
) -> XCorrSummary:
    params, metadata = load_checkpoint(checkpoint)
    model_cfg, stats = read_metadata(metadata)
    data = prepare_training_data(dataset, cfg.model_copy(update={"network": model_cfg}), episode_ids, stats)
    bank: SegmentBank = data.bank
    indices, with_replacement = sample_indices(cfg.xcorr_samples, len(bank), cfg.seed)
    sample_ids = np.arange(indices.size)

    def run(start: int) -> torch.Tensor:
        sl = slice(start, start + CHUNK)
        batch = bank.take(indices[sl])
        shuffled = shuffle_states(batch, cfg.seed, sample_ids[sl], cfg.xcorr_identity)
        matched = extract_block1_embedding(batch, params, model_cfg)
        permuted = extract_block1_embedding(shuffled, params, model_cfg)
        return cosine_similarity(matched, permuted)

    with ThreadPoolExecutor(max_workers=max(cfg.workers, 1)) as executor:
        chunks = list(executor.map(run, range(0, indices.size, CHUNK)))
    sims = torch.cat(chunks).to(DTYPE).numpy()
    summary = summarize(str(checkpoint), model_cfg.variant, sims, with_replacement)
    logger.info("{} similarity: mean {:.3f} median {:.3f}", model_cfg.variant, summary.mean, summary.median)
    return summary


def cross_correlation(
        clb_checkpoint: Path,
        vanilla_checkpoint: Path,
        dataset: OfflineDataset,
        cfg: RunConfig,
        episode_ids: Optional[list[int]] = None,
) -> XCorrReport:
    clb = embedding_similarities(clb_checkpoint, dataset, cfg, episode_ids)
    vanilla = embedding_similarities(vanilla_checkpoint, dataset, cfg, episode_ids)
    return XCorrReport(clb=clb, vanilla=vanilla, directional_ok=clb.mean < vanilla.mean)
