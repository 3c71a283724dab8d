from crossbid.dataset.batch import SegmentBank, SegmentBatch
from crossbid.dataset.io import (
    OfflineDataset,
    SplitManifest,
    read_dataset,
    read_split_manifest,
    split_episodes,
    write_dataset,
    write_split_manifest,
)
from crossbid.dataset.normalize import NormStats, fit_norm_stats, normalize_features
from crossbid.dataset.trajectory import TrainingSegment, Trajectory, build_segments, compute_rtg

__all__ = [
    "NormStats",
    "OfflineDataset",
    "SegmentBank",
    "SegmentBatch",
    "SplitManifest",
    "TrainingSegment",
    "Trajectory",
    "build_segments",
    "compute_rtg",
    "fit_norm_stats",
    "normalize_features",
    "read_dataset",
    "read_split_manifest",
    "split_episodes",
    "write_dataset",
    "write_split_manifest",
]
