"""Synthetic benchmark datasets whose classes live only in temporal structure.

Every class template has its per-feature time-average removed, so the
time-mean of the raw input carries no class information at all: a classifier
fed only pooled raw features sits at chance, while anything that actually
models the frame ordering can separate the classes. Gaussian noise is added
per frame on top of the class template.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import DatasetManifest, ManifestEntry, save_feature_file, save_manifest
from .errors import ConfigError

PATTERNS = ("frequency", "onset")


@dataclass(frozen=True)
class SynthSpec:
    """Shape of a generated dataset.

    pattern "frequency": class c oscillates at c+1 cycles per sequence with a
    class-specific phase ramp across feature dimensions. pattern "onset":
    a fixed-shape bump placed at a class-specific time.
    """

    classes: int
    per_class: int
    feature_dim: int
    length: int
    pattern: str = "frequency"
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.classes < 2:
            raise ConfigError(f"need at least 2 classes, got {self.classes}")
        if self.per_class < 2:
            raise ConfigError(f"need at least 2 videos per class, got {self.per_class}")
        if self.feature_dim < 1:
            raise ConfigError(f"feature_dim must be >= 1, got {self.feature_dim}")
        if self.length < 2:
            raise ConfigError(f"degenerate spec: length must be >= 2, got {self.length}")
        if self.pattern not in PATTERNS:
            raise ConfigError(f"pattern must be one of {PATTERNS}, got {self.pattern!r}")
        if self.noise_sigma < 0.0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in an unsigned 64-bit integer, got {self.seed}")


def class_label(class_index: int) -> str:
    return f"class{class_index:02d}"


def class_template(spec: SynthSpec, class_index: int) -> np.ndarray:
    """Noise-free (length, feature_dim) template for one class.

    The per-feature time-average is subtracted, so templates of all classes
    share an identical (all-zero) time-mean by construction.
    """
    if not 0 <= class_index < spec.classes:
        raise ConfigError(f"class_index {class_index} out of range [0, {spec.classes})")
    steps = np.arange(spec.length)[:, None]
    dims = np.arange(spec.feature_dim)[None, :]
    if spec.pattern == "frequency":
        cycles = class_index + 1
        phase = 2.0 * np.pi * dims * cycles / spec.feature_dim
        template = np.sin(2.0 * np.pi * cycles * steps / spec.length + phase)
    else:
        # onset: same bump everywhere, centred at a class-specific frame
        span = spec.length - 1
        centre = span * (0.15 + 0.7 * class_index / (spec.classes - 1))
        width = max(1.0, spec.length / 20.0)
        bump = np.exp(-0.5 * ((steps - centre) / width) ** 2)
        signs = np.where(dims % 2 == 0, 1.0, -1.0)
        template = bump * signs
    return template - template.mean(axis=0, keepdims=True)


def generate(spec: SynthSpec, out_dir) -> DatasetManifest:
    """Write one feature file per video plus a manifest under out_dir.

    Files land in out_dir/features/, the manifest at out_dir/manifest.tsv.
    Fully determined by the spec (identical spec, identical bytes).
    """
    out_dir = Path(out_dir)
    feature_dir = out_dir / "features"
    feature_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng([spec.seed, 0xD1F7])
    entries = []
    for class_index in range(spec.classes):
        label = class_label(class_index)
        template = class_template(spec, class_index)
        for video_index in range(spec.per_class):
            features = template
            if spec.noise_sigma > 0.0:
                features = features + spec.noise_sigma * rng.standard_normal(template.shape)
            video_id = f"{label}_vid{video_index:03d}"
            rel_path = f"features/{video_id}.cdnf"
            save_feature_file(out_dir / rel_path, features)
            entries.append(ManifestEntry(video_id=video_id, path=rel_path, label=label))

    manifest = DatasetManifest(
        entries=entries,
        class_set=[class_label(c) for c in range(spec.classes)],
        feature_dim=spec.feature_dim,
        root=out_dir,
    )
    save_manifest(manifest, out_dir / "manifest.tsv")
    return manifest
