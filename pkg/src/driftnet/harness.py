"""End-to-end experiment orchestration.

Pipeline per experiment: pool every video of a manifest through one fixed
reservoir, then for each replication train a fresh readout on that
replication's stratified split and track test accuracy per epoch. Pooling is
computed once and reused across replications by default, which is exact
because neither the reservoir nor the features change between splits.

Everything downstream of (config, base_seed, files) is deterministic; wall
clock timings are kept out of the canonical metrics serialization so repeat
runs produce byte-identical metrics files.
"""

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import (
    DatasetManifest,
    ManifestEntry,
    derive_seed,
    fit_length,
    load_feature_file,
    load_manifest,
    stratified_split,
)
from .errors import ConfigError, DataFormatError
from .readout import ReadoutModel, TrainSpec, one_hot, ridge_fit, train_softmax
from .reservoir import EsnConfig, init_reservoir, pool_states, run_sequence

SHARING_MODES = ("per_experiment", "per_replication")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a full experiment run needs."""

    manifest_path: str
    esn: EsnConfig
    train: TrainSpec = TrainSpec()
    target_len: int = 160
    replications: int = 100
    reservoir_sharing: str = "per_experiment"
    output_dir: str | None = None
    base_seed: int = 0
    standardize: bool = False
    eval_stride: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if self.target_len < 1:
            raise ConfigError(f"target_len must be >= 1, got {self.target_len}")
        if self.reservoir_sharing not in SHARING_MODES:
            raise ConfigError(
                f"reservoir_sharing must be one of {SHARING_MODES}, got {self.reservoir_sharing!r}"
            )
        if self.eval_stride < 1:
            raise ConfigError(f"eval_stride must be >= 1, got {self.eval_stride}")


@dataclass
class PooledDataset:
    """All videos of a manifest pooled through one reservoir."""

    matrix: np.ndarray
    labels: list
    video_ids: list
    class_set: list
    input_dim: int
    reservoir_size: int
    natural_radius: float


@dataclass
class Metrics:
    """Aggregated experiment results.

    `accuracies` holds each replication's test accuracy at the final epoch;
    `curve` is test accuracy averaged over replications at each epoch in
    `eval_epochs`. `timings` (seconds per phase) is excluded from the
    canonical serialization to keep repeat runs byte-identical.
    """

    accuracies: list
    mean_accuracy: float
    std_accuracy: float
    eval_epochs: list
    curve: list
    best_mean_accuracy: float
    best_epoch: int
    reservoir_size: int
    input_dim: int
    natural_radius: float
    replications: int
    epochs: int
    reservoir_sharing: str
    base_seed: int
    target_len: int
    standardize: bool
    esn: dict
    train: dict
    manifest_path: str
    timings: dict = field(default_factory=dict)

    def canonical_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out.pop("timings")
        return out

    def to_json(self) -> str:
        return json.dumps(self.canonical_dict(), sort_keys=True, indent=2) + "\n"


def pool_dataset(
    manifest: DatasetManifest,
    esn_config: EsnConfig,
    target_len: int,
    standardize: bool = False,
) -> PooledDataset:
    """Pool every manifest video through a single reservoir.

    Each video is loaded, fitted to target_len frames, run through the
    reservoir, and time-averaged; output rows follow manifest order. With
    standardize=True, features are shifted/scaled per dimension using
    moments measured over all frames of the whole dataset before entering
    the reservoir.
    """
    weights = init_reservoir(esn_config, manifest.feature_dim)

    sequences = []
    for entry in manifest.entries:
        try:
            seq = load_feature_file(manifest.resolve(entry), entry.video_id, entry.label)
        except DataFormatError as exc:
            raise DataFormatError(f"video {entry.video_id!r}: {exc}") from exc
        if seq.features.shape[1] != manifest.feature_dim:
            raise DataFormatError(
                f"video {entry.video_id!r}: width {seq.features.shape[1]} != manifest "
                f"feature_dim {manifest.feature_dim}"
            )
        sequences.append(fit_length(seq, target_len))

    if standardize:
        stacked = np.vstack([s.features for s in sequences])
        mean = stacked.mean(axis=0)
        std = stacked.std(axis=0)
        std[std == 0.0] = 1.0
        for seq in sequences:
            seq.features = (seq.features - mean) / std

    rows = []
    for seq in sequences:
        states = run_sequence(weights, seq.features, esn_config)
        rows.append(pool_states(seq.features, states).sigma_x)

    return PooledDataset(
        matrix=np.vstack(rows),
        labels=[e.label for e in manifest.entries],
        video_ids=[e.video_id for e in manifest.entries],
        class_set=list(manifest.class_set),
        input_dim=manifest.feature_dim,
        reservoir_size=esn_config.reservoir_size,
        natural_radius=weights.natural_radius,
    )


def accuracy(w_out: np.ndarray, pooled: np.ndarray, class_indices: np.ndarray) -> float:
    """Fraction of rows whose argmax score hits the true class index."""
    predicted = np.argmax(pooled @ w_out.T, axis=1)
    return float(np.mean(predicted == class_indices))


def _evaluation_epochs(epochs: int, stride: int) -> list:
    chosen = list(range(stride - 1, epochs, stride))
    if not chosen or chosen[-1] != epochs - 1:
        chosen.append(epochs - 1)
    return chosen


def _manifest_from_pool(pool: PooledDataset) -> DatasetManifest:
    entries = [
        ManifestEntry(video_id=v, path="", label=l)
        for v, l in zip(pool.video_ids, pool.labels)
    ]
    return DatasetManifest(
        entries=entries, class_set=list(pool.class_set), feature_dim=pool.input_dim
    )


def _flush_partial(config: ExperimentConfig, accuracies: list, failed_rep: int) -> None:
    if config.output_dir is None:
        return
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    partial = {"completed_replications": len(accuracies), "failed_replication": failed_rep,
               "accuracies": accuracies}
    (out_dir / "partial.json").write_text(json.dumps(partial, sort_keys=True, indent=2) + "\n")


def run_experiment(
    config: ExperimentConfig,
    manifest: DatasetManifest | None = None,
    pooled: PooledDataset | None = None,
) -> Metrics:
    """Run all replications of an experiment and aggregate their metrics.

    The manifest may be passed pre-loaded, or replaced entirely by a pooled
    cache (split planning then uses the cache's ids and labels). When an
    output_dir is configured, accuracies gathered so far are flushed to
    partial.json before an abort propagates. Deterministic end to end in
    config and base_seed.
    """
    timings = {}
    t_start = time.perf_counter()
    if pooled is not None and config.reservoir_sharing == "per_replication":
        raise ConfigError("a pooled cache holds a single reservoir draw; "
                          "per_replication sharing needs the raw manifest")
    if manifest is None:
        manifest = (
            _manifest_from_pool(pooled) if pooled is not None
            else load_manifest(config.manifest_path)
        )

    shared_pool = pooled
    if shared_pool is None and config.reservoir_sharing == "per_experiment":
        t0 = time.perf_counter()
        shared_pool = pool_dataset(manifest, config.esn, config.target_len, config.standardize)
        timings["pool_seconds"] = time.perf_counter() - t0

    row_of_id = {entry.video_id: i for i, entry in enumerate(manifest.entries)}
    class_index = {label: i for i, label in enumerate(manifest.class_set)}
    eval_epochs = _evaluation_epochs(config.train.epochs, config.eval_stride)
    eval_positions = {epoch: k for k, epoch in enumerate(eval_epochs)}

    t0 = time.perf_counter()
    natural_radii = []
    accuracies = []
    curves = np.zeros((config.replications, len(eval_epochs)))
    for rep in range(config.replications):
        try:
            if shared_pool is not None:
                pool = shared_pool
            else:
                esn = dataclasses.replace(config.esn, seed=derive_seed(config.esn.seed, rep))
                pool = pool_dataset(manifest, esn, config.target_len, config.standardize)
            natural_radii.append(pool.natural_radius)

            plan = stratified_split(manifest, rep, config.base_seed)
            train_rows = [row_of_id[v] for v in plan.train_ids]
            test_rows = [row_of_id[v] for v in plan.test_ids]
            train_x = pool.matrix[train_rows]
            train_labels = [pool.labels[i] for i in train_rows]
            test_x = pool.matrix[test_rows]
            test_y = np.array([class_index[pool.labels[i]] for i in test_rows])

            if config.train.mode == "ridge":
                targets = one_hot(train_labels, manifest.class_set)
                model = ridge_fit(
                    train_x, targets, config.train.ridge_lambda, class_labels=manifest.class_set
                )
                curves[rep, :] = accuracy(model.w_out, test_x, test_y)
            else:
                rep_spec = dataclasses.replace(
                    config.train, seed=derive_seed(config.train.seed, rep)
                )

                def record(epoch, w_out, rep=rep):
                    k = eval_positions.get(epoch)
                    if k is not None:
                        curves[rep, k] = accuracy(w_out, test_x, test_y)

                train_softmax(
                    train_x, train_labels, rep_spec,
                    class_labels=manifest.class_set, on_epoch=record,
                )
        except Exception:
            _flush_partial(config, accuracies, rep)
            raise
        accuracies.append(float(curves[rep, -1]))
    timings["train_seconds"] = time.perf_counter() - t0
    timings["total_seconds"] = time.perf_counter() - t_start

    mean_curve = curves.mean(axis=0)
    best_k = int(np.argmax(mean_curve))
    return Metrics(
        accuracies=accuracies,
        mean_accuracy=float(np.mean(accuracies)),
        std_accuracy=float(np.std(accuracies)),
        eval_epochs=list(eval_epochs),
        curve=[float(v) for v in mean_curve],
        best_mean_accuracy=float(mean_curve[best_k]),
        best_epoch=int(eval_epochs[best_k]),
        reservoir_size=config.esn.reservoir_size,
        input_dim=manifest.feature_dim,
        natural_radius=float(np.mean(natural_radii)),
        replications=config.replications,
        epochs=config.train.epochs,
        reservoir_sharing=config.reservoir_sharing,
        base_seed=config.base_seed,
        target_len=config.target_len,
        standardize=config.standardize,
        esn=dataclasses.asdict(config.esn),
        train=dataclasses.asdict(config.train),
        manifest_path=str(config.manifest_path),
        timings=timings,
    )


def summary_table(metrics_list) -> str:
    """Text table of headline numbers, one row per configuration."""
    if isinstance(metrics_list, Metrics):
        metrics_list = [metrics_list]
    rows = [("reservoir_neurons", "best_mean_acc", "final_mean_acc", "std", "sharing")]
    for m in metrics_list:
        rows.append(
            (
                str(m.reservoir_size),
                f"{m.best_mean_accuracy:.4f}",
                f"{m.mean_accuracy:.4f}",
                f"{m.std_accuracy:.4f}",
                m.reservoir_sharing,
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def curve_tsv(metrics: Metrics) -> str:
    """Per-epoch mean test accuracy as plot-ready delimited text."""
    lines = ["epoch\tmean_test_accuracy"]
    for epoch, value in zip(metrics.eval_epochs, metrics.curve):
        lines.append(f"{epoch}\t{value!r}")
    return "\n".join(lines) + "\n"


def report(metrics, fmt: str = "table") -> str:
    """Render metrics: 'table' for the summary, 'curve' for the epoch curve."""
    if fmt == "table":
        return summary_table(metrics)
    if fmt == "curve":
        if not isinstance(metrics, Metrics):
            (metrics,) = metrics
        return curve_tsv(metrics)
    raise ConfigError(f"unknown report format {fmt!r}")


def write_outputs(metrics: Metrics, out_dir, config_text: str | None = None) -> None:
    """Write metrics.json, curve.tsv, summary.txt, timings.json (and the
    echoed experiment config when one was supplied) into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metrics.json").write_text(metrics.to_json())
    (out_dir / "curve.tsv").write_text(curve_tsv(metrics))
    (out_dir / "summary.txt").write_text(summary_table(metrics))
    (out_dir / "timings.json").write_text(json.dumps(metrics.timings, indent=2) + "\n")
    if config_text is not None:
        (out_dir / "config.txt").write_text(config_text)


def save_pooled(pool: PooledDataset, path) -> None:
    """Cache a pooled dataset as an .npz archive."""
    meta = {
        "input_dim": pool.input_dim,
        "reservoir_size": pool.reservoir_size,
        "natural_radius": pool.natural_radius,
    }
    np.savez(
        path,
        matrix=pool.matrix,
        labels=np.array(pool.labels, dtype=str),
        video_ids=np.array(pool.video_ids, dtype=str),
        class_set=np.array(pool.class_set, dtype=str),
        meta=np.array([json.dumps(meta, sort_keys=True)], dtype=str),
    )


def load_pooled(path) -> PooledDataset:
    """Load a pooled-dataset cache written by save_pooled."""
    try:
        archive = np.load(path, allow_pickle=False)
        meta = json.loads(str(archive["meta"][0]))
        return PooledDataset(
            matrix=archive["matrix"],
            labels=[str(v) for v in archive["labels"]],
            video_ids=[str(v) for v in archive["video_ids"]],
            class_set=[str(v) for v in archive["class_set"]],
            input_dim=int(meta["input_dim"]),
            reservoir_size=int(meta["reservoir_size"]),
            natural_radius=float(meta["natural_radius"]),
        )
    except (KeyError, ValueError, OSError) as exc:
        raise DataFormatError(f"{path}: not a pooled-dataset cache: {exc}") from exc
