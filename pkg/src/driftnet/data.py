"""Feature files, dataset manifests, length fitting, and split planning.

On-disk formats:

* Feature file (one per video): magic "CDNF", version byte, frame count and
  feature width as little-endian u64, then row-major little-endian float32
  values. Values are widened to float64 on load.
* Manifest: tab-separated text. The header line is
  ``#cdnf-manifest<TAB>feature_dim=<int><TAB>classes=<comma-joined>``;
  every following line is ``video_id<TAB>relative_path<TAB>label``.
"""

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError

FEATURE_MAGIC = b"CDNF"
FEATURE_VERSION = 1
_HEADER_BYTES = len(FEATURE_MAGIC) + 1 + 16

MANIFEST_TAG = "#cdnf-manifest"


@dataclass
class FeatureSequence:
    """One video's per-frame feature matrix (frames, feature_dim) plus identity."""

    video_id: str
    label: str
    features: np.ndarray


@dataclass(frozen=True)
class ManifestEntry:
    video_id: str
    path: str
    label: str


@dataclass
class DatasetManifest:
    """Index of a dataset: per-video file references plus the class set.

    `root` is the directory relative paths resolve against (the manifest's
    own directory once loaded or saved).
    """

    entries: list
    class_set: list
    feature_dim: int
    root: Path = Path(".")

    def __post_init__(self):
        ids = [e.video_id for e in self.entries]
        if len(set(ids)) != len(ids):
            dupes = sorted({v for v in ids if ids.count(v) > 1})
            raise DataFormatError(f"duplicate video ids in manifest: {dupes!r}")
        if len(set(self.class_set)) != len(self.class_set):
            raise DataFormatError(f"class set has duplicates: {self.class_set!r}")
        unknown = sorted({e.label for e in self.entries} - set(self.class_set))
        if unknown:
            raise DataFormatError(f"labels missing from class set: {unknown!r}")
        if self.feature_dim < 1:
            raise DataFormatError(f"feature_dim must be >= 1, got {self.feature_dim}")

    def resolve(self, entry: ManifestEntry) -> Path:
        return self.root / entry.path

    def by_class(self) -> dict:
        """Video ids grouped per class, preserving manifest order."""
        groups = {label: [] for label in self.class_set}
        for entry in self.entries:
            groups[entry.label].append(entry.video_id)
        return groups


@dataclass(frozen=True)
class SplitPlan:
    """One replication's train/test partition over video ids."""

    replication_index: int
    train_ids: tuple
    test_ids: tuple
    seed: int


def save_feature_file(path, features) -> None:
    """Write a (frames, feature_dim) matrix as a feature file (float32 payload)."""
    features = np.asarray(features)
    if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
        raise ConfigError(f"features must be a non-empty 2-D matrix, got {features.shape}")
    if not np.isfinite(features).all():
        raise ConfigError("refusing to write non-finite feature values")
    frames, width = features.shape
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<B", FEATURE_VERSION))
        fh.write(struct.pack("<QQ", frames, width))
        fh.write(np.ascontiguousarray(features, dtype="<f4").tobytes())


def load_feature_file(path, video_id: str | None = None, label: str = "") -> FeatureSequence:
    """Read a feature file, validating header and payload.

    video_id defaults to the file's stem; the label is normally supplied by
    the manifest. Values are widened to float64.

    Raises:
        DataFormatError: bad magic or version, truncated or oversized
            payload, or non-finite values (reported with their offset).
    """
    path = Path(path)
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER_BYTES:
        raise DataFormatError(
            f"{path}: {len(blob)} bytes is too short for the {_HEADER_BYTES}-byte header"
        )
    if blob[:4] != FEATURE_MAGIC:
        raise DataFormatError(f"{path}: bad magic {blob[:4]!r}, expected {FEATURE_MAGIC!r}")
    version = blob[4]
    if version != FEATURE_VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}, expected {FEATURE_VERSION}")
    frames, width = struct.unpack("<QQ", blob[5:_HEADER_BYTES])
    if frames < 1 or width < 1:
        raise DataFormatError(f"{path}: header declares empty matrix {frames}x{width}")
    expected = _HEADER_BYTES + frames * width * 4
    if len(blob) != expected:
        raise DataFormatError(
            f"{path}: file is {len(blob)} bytes, header promises {expected} "
            f"({frames} frames x {width} features)"
        )
    raw = np.frombuffer(blob, dtype="<f4", offset=_HEADER_BYTES).reshape(frames, width)
    bad = ~np.isfinite(raw)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        offset = _HEADER_BYTES + (int(row) * width + int(col)) * 4
        raise DataFormatError(
            f"{path}: non-finite value {raw[row, col]!r} at frame {row}, feature {col} "
            f"(byte offset {offset})"
        )
    return FeatureSequence(
        video_id=video_id if video_id is not None else path.stem,
        label=label,
        features=raw.astype(np.float64),
    )


def fit_length(seq: FeatureSequence, target_len: int) -> FeatureSequence:
    """Force a sequence to exactly target_len frames.

    Shorter sequences get all-zero rows appended; longer ones are truncated
    to the first target_len frames. Idempotent at the target length.
    """
    if target_len < 1:
        raise ConfigError(f"target_len must be >= 1, got {target_len}")
    frames = seq.features.shape[0]
    if frames == target_len:
        return seq
    if frames > target_len:
        return replace(seq, features=seq.features[:target_len])
    pad = np.zeros((target_len - frames, seq.features.shape[1]))
    return replace(seq, features=np.vstack([seq.features, pad]))


def derive_seed(*parts) -> int:
    """Collapse integer parts into one unsigned 64-bit seed, deterministically.

    The part count is mixed in ahead of the parts themselves; SeedSequence
    zero-pads its entropy, so (5, 7) and (5, 7, 0) would otherwise collide.
    """
    return int(
        np.random.SeedSequence([len(parts), *parts]).generate_state(1, np.uint64)[0]
    )


def stratified_split(manifest: DatasetManifest, replication_index: int, base_seed: int) -> SplitPlan:
    """Plan one train/test replication with per-class half/half stratification.

    Each class of m videos is shuffled under a seed derived from
    (base_seed, replication_index); the first floor(m/2) go to train, the
    remaining ceil(m/2) to test (the odd video lands in test).
    """
    if replication_index < 0:
        raise ConfigError(f"replication_index must be >= 0, got {replication_index}")
    seed = derive_seed(base_seed, replication_index)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label, ids in manifest.by_class().items():
        if not ids:
            raise ConfigError(f"class {label!r} has no videos")
        order = rng.permutation(len(ids))
        half = len(ids) // 2
        train.extend(ids[i] for i in order[:half])
        test.extend(ids[i] for i in order[half:])
    return SplitPlan(
        replication_index=replication_index,
        train_ids=tuple(train),
        test_ids=tuple(test),
        seed=seed,
    )


def _check_field(value: str, what: str) -> str:
    reserved = "\t\n" + ("," if what == "label" else "")
    if any(ch in value for ch in reserved):
        raise ConfigError(f"{what} {value!r} contains a reserved character")
    return value


def save_manifest(manifest: DatasetManifest, path) -> None:
    """Write the tab-separated manifest file; sets manifest.root to its directory."""
    path = Path(path)
    lines = [
        MANIFEST_TAG
        + f"\tfeature_dim={manifest.feature_dim}"
        + "\tclasses="
        + ",".join(_check_field(c, "label") for c in manifest.class_set)
    ]
    for entry in manifest.entries:
        lines.append(
            "\t".join(
                (
                    _check_field(entry.video_id, "video_id"),
                    _check_field(entry.path, "path"),
                    _check_field(entry.label, "label"),
                )
            )
        )
    path.write_text("\n".join(lines) + "\n")
    manifest.root = path.parent


def load_manifest(path) -> DatasetManifest:
    """Parse a manifest file; relative paths resolve against its directory."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read manifest: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(MANIFEST_TAG):
        raise DataFormatError(f"{path}: missing manifest header line '{MANIFEST_TAG}...'")
    fields = lines[0].split("\t")
    header = {}
    for field in fields[1:]:
        key, _, value = field.partition("=")
        header[key] = value
    try:
        feature_dim = int(header["feature_dim"])
        class_set = header["classes"].split(",")
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"{path}: malformed manifest header: {lines[0]!r}") from exc

    entries = []
    for number, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataFormatError(
                f"{path}:{number}: expected 3 tab-separated fields, got {len(parts)}"
            )
        entries.append(ManifestEntry(video_id=parts[0], path=parts[1], label=parts[2]))
    try:
        return DatasetManifest(
            entries=entries, class_set=class_set, feature_dim=feature_dim, root=path.parent
        )
    except DataFormatError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def verify_manifest_files(manifest: DatasetManifest) -> list:
    """Load every referenced file, checking width agreement with the manifest.

    Returns per-video (video_id, frames) pairs in manifest order.
    """
    report = []
    for entry in manifest.entries:
        seq = load_feature_file(manifest.resolve(entry), entry.video_id, entry.label)
        width = seq.features.shape[1]
        if width != manifest.feature_dim:
            raise DataFormatError(
                f"video {entry.video_id!r}: file width {width} != manifest feature_dim "
                f"{manifest.feature_dim}"
            )
        report.append((entry.video_id, seq.features.shape[0]))
    return report
