import numpy as np
import pytest
from scipy import sparse

from driftnet import DatasetManifest, ManifestEntry, save_feature_file, save_manifest
from driftnet.reservoir import ReservoirWeights


def make_weights(w_in, w_x) -> ReservoirWeights:
    """Hand-built ReservoirWeights for golden-trace and unit tests."""
    w_in = np.asarray(w_in, dtype=float)
    w_x = sparse.csr_matrix(np.asarray(w_x, dtype=float))
    return ReservoirWeights(
        w_in=w_in, w_x=w_x, input_dim=w_in.shape[1] - 1, natural_radius=0.0
    )


def write_dataset(root, per_class_counts, feature_dim=3, frames=5, seed=0):
    """Write a small on-disk dataset: one feature file per video plus manifest.

    per_class_counts maps label -> number of videos. Features are seeded
    standard normals. Returns the manifest (root set to `root`).
    """
    rng = np.random.default_rng(seed)
    (root / "features").mkdir(parents=True, exist_ok=True)
    entries = []
    for label, count in per_class_counts.items():
        for i in range(count):
            video_id = f"{label}_{i:03d}"
            rel = f"features/{video_id}.cdnf"
            save_feature_file(root / rel, rng.normal(size=(frames, feature_dim)))
            entries.append(ManifestEntry(video_id=video_id, path=rel, label=label))
    manifest = DatasetManifest(
        entries=entries,
        class_set=list(per_class_counts),
        feature_dim=feature_dim,
        root=root,
    )
    save_manifest(manifest, root / "manifest.tsv")
    return manifest


@pytest.fixture
def tiny_manifest(tmp_path):
    """Three classes, two videos each, written to disk."""
    return write_dataset(tmp_path, {"walk": 2, "run": 2, "sit": 2})
