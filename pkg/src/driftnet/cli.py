"""Command-line interface.

Subcommands: synth (generate a synthetic dataset), inspect (validate feature
files, manifests, weights files), pool (manifest -> pooled cache), train
(pooled cache -> metrics), run (end to end). Exit codes: 0 success,
2 configuration error, 3 data/format error, 4 training failure, 1 anything
unexpected.
"""

import argparse
import dataclasses
import sys
from pathlib import Path

from . import harness, synth
from .data import load_feature_file, load_manifest, verify_manifest_files
from .errors import ConfigError, DataFormatError, DriftnetError, TrainingError
from .readout import TrainSpec, load_model
from .reservoir import EsnConfig

EXIT_CODES = {ConfigError: ("config", 2), DataFormatError: ("data", 3), TrainingError: ("training", 4)}

_BOOL_WORDS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _parse_value(raw: str):
    text = raw.strip()
    low = text.lower()
    if low in ("none", ""):
        return None
    if low in _BOOL_WORDS:
        return _BOOL_WORDS[low]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_text(text: str) -> dict:
    """Parse 'key = value' lines ('#' lines are comments) into a flat dict."""
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, raw = stripped.partition("=")
        if not sep:
            raise ConfigError(f"config line {number}: expected 'key = value', got {line!r}")
        values[key.strip()] = _parse_value(raw)
    return values


def config_to_text(config: harness.ExperimentConfig) -> str:
    """Serialize an experiment config back to 'key = value' lines."""
    lines = []
    flat = dataclasses.asdict(config)
    esn = flat.pop("esn")
    train = flat.pop("train")
    for key, value in flat.items():
        lines.append(f"{key} = {value}")
    for prefix, group in (("esn", esn), ("train", train)):
        for key, value in group.items():
            lines.append(f"{prefix}.{key} = {value}")
    return "\n".join(lines) + "\n"


_TOP_KEYS = (
    "manifest_path",
    "target_len",
    "replications",
    "reservoir_sharing",
    "output_dir",
    "base_seed",
    "standardize",
    "eval_stride",
)


def build_experiment_config(values: dict) -> harness.ExperimentConfig:
    """Assemble an ExperimentConfig from a flat key/value mapping."""
    esn_fields = {f.name for f in dataclasses.fields(EsnConfig)}
    train_fields = {f.name for f in dataclasses.fields(TrainSpec)}
    esn_kwargs, train_kwargs, top = {}, {}, {}
    for key, value in values.items():
        if key.startswith("esn."):
            name = key[4:]
            if name not in esn_fields:
                raise ConfigError(f"unknown config key {key!r}")
            esn_kwargs[name] = value
        elif key.startswith("train."):
            name = key[6:]
            if name not in train_fields:
                raise ConfigError(f"unknown config key {key!r}")
            train_kwargs[name] = value
        elif key in _TOP_KEYS:
            top[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if "manifest_path" not in top:
        raise ConfigError("config is missing manifest_path")
    if "reservoir_size" not in esn_kwargs:
        raise ConfigError("config is missing esn.reservoir_size")
    return harness.ExperimentConfig(
        esn=EsnConfig(**esn_kwargs), train=TrainSpec(**train_kwargs), **top
    )


def _add_esn_flags(parser):
    group = parser.add_argument_group("reservoir")
    group.add_argument("--reservoir-size", type=int, dest="esn.reservoir_size")
    group.add_argument("--leak-rate", type=float, dest="esn.leak_rate")
    group.add_argument("--activation", choices=("relu", "tanh"), dest="esn.activation")
    group.add_argument("--connection-density", type=float, dest="esn.connection_density")
    group.add_argument("--input-scale", type=float, dest="esn.input_scale")
    group.add_argument("--spectral-target", type=float, dest="esn.spectral_target")
    group.add_argument("--esn-seed", type=int, dest="esn.seed")


def _add_train_flags(parser):
    group = parser.add_argument_group("training")
    group.add_argument("--mode", choices=("softmax_adam", "softmax_sgd", "ridge"), dest="train.mode")
    group.add_argument("--epochs", type=int, dest="train.epochs")
    group.add_argument("--learning-rate", type=float, dest="train.learning_rate")
    group.add_argument("--beta1", type=float, dest="train.beta1")
    group.add_argument("--beta2", type=float, dest="train.beta2")
    group.add_argument("--epsilon", type=float, dest="train.epsilon")
    group.add_argument("--ridge-lambda", type=float, dest="train.ridge_lambda")
    group.add_argument("--batch-size", type=int, dest="train.batch_size")
    group.add_argument("--train-seed", type=int, dest="train.seed")


def _add_experiment_flags(parser):
    parser.add_argument("--manifest", dest="manifest_path")
    parser.add_argument("--target-len", type=int, dest="target_len")
    parser.add_argument("--replications", type=int, dest="replications")
    parser.add_argument(
        "--reservoir-sharing", choices=harness.SHARING_MODES, dest="reservoir_sharing"
    )
    parser.add_argument("--out", dest="output_dir")
    parser.add_argument("--base-seed", type=int, dest="base_seed")
    parser.add_argument("--standardize", action="store_const", const=True, dest="standardize")
    parser.add_argument("--eval-stride", type=int, dest="eval_stride")


def _merge_flags(args, file_values: dict) -> dict:
    """File values first, explicit command-line flags on top."""
    merged = dict(file_values)
    for key, value in vars(args).items():
        if "." in key or key in _TOP_KEYS:
            if value is not None:
                merged[key] = value
    return merged


def _cmd_synth(args) -> int:
    spec = synth.SynthSpec(
        classes=args.classes,
        per_class=args.per_class,
        feature_dim=args.feature_dim,
        length=args.length,
        pattern=args.pattern,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    manifest = synth.generate(spec, args.out)
    print(
        f"wrote {len(manifest.entries)} videos, {len(manifest.class_set)} classes "
        f"to {args.out}"
    )
    return 0


def _inspect_one(path: Path) -> str:
    with open(path, "rb") as fh:
        head = fh.read(16)
    if head.startswith(b"CDNF"):
        seq = load_feature_file(path)
        return f"feature file: {seq.features.shape[0]} frames x {seq.features.shape[1]} features"
    if head.startswith(b"CDNW"):
        model = load_model(path)
        return f"weights file: {model.w_out.shape[0]} classes x {model.w_out.shape[1]} inputs"
    if head.startswith(b"#cdnf-manifest"):
        manifest = load_manifest(path)
        entries = verify_manifest_files(manifest)
        return (
            f"manifest: {len(entries)} videos, {len(manifest.class_set)} classes, "
            f"feature_dim {manifest.feature_dim} (all files verified)"
        )
    raise DataFormatError(f"{path}: unrecognized file (leading bytes {head[:4]!r})")


def _cmd_inspect(args) -> int:
    for path in args.paths:
        print(f"{path}: {_inspect_one(Path(path))}")
    return 0


def _esn_from_args(args) -> EsnConfig:
    kwargs = {
        key[4:]: value
        for key, value in vars(args).items()
        if key.startswith("esn.") and value is not None
    }
    if "reservoir_size" not in kwargs:
        raise ConfigError("--reservoir-size is required")
    return EsnConfig(**kwargs)


def _cmd_pool(args) -> int:
    manifest = load_manifest(args.manifest_path)
    esn = _esn_from_args(args)
    pool = harness.pool_dataset(
        manifest, esn, args.target_len if args.target_len else 160, bool(args.standardize)
    )
    harness.save_pooled(pool, args.out)
    print(
        f"pooled {pool.matrix.shape[0]} videos into {pool.matrix.shape[1]}-wide rows "
        f"(natural radius {pool.natural_radius:.4f}) -> {args.out}"
    )
    return 0


def _cmd_train(args) -> int:
    pool = harness.load_pooled(args.pooled)
    train_kwargs = {
        key[6:]: value
        for key, value in vars(args).items()
        if key.startswith("train.") and value is not None
    }
    config = harness.ExperimentConfig(
        manifest_path=str(args.pooled),
        esn=EsnConfig(reservoir_size=pool.reservoir_size),
        train=TrainSpec(**train_kwargs),
        target_len=args.target_len or 160,
        replications=args.replications or 1,
        output_dir=args.output_dir,
        base_seed=args.base_seed or 0,
        eval_stride=args.eval_stride or 1,
    )
    metrics = harness.run_experiment(config, pooled=pool)
    if args.output_dir:
        harness.write_outputs(metrics, args.output_dir, config_text=config_to_text(config))
    sys.stdout.write(harness.summary_table(metrics))
    return 0


def _cmd_run(args) -> int:
    file_values = {}
    config_text = None
    if args.config:
        config_text = Path(args.config).read_text()
        file_values = parse_config_text(config_text)
    config = build_experiment_config(_merge_flags(args, file_values))
    metrics = harness.run_experiment(config)
    if config.output_dir:
        harness.write_outputs(
            metrics,
            config.output_dir,
            config_text=config_text if config_text is not None else config_to_text(config),
        )
    sys.stdout.write(harness.summary_table(metrics))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftnet",
        description="Reservoir-pooled sequence classification toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic temporal dataset")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--classes", type=int, required=True)
    p_synth.add_argument("--per-class", type=int, required=True)
    p_synth.add_argument("--feature-dim", type=int, required=True)
    p_synth.add_argument("--length", type=int, required=True)
    p_synth.add_argument("--pattern", choices=synth.PATTERNS, default="frequency")
    p_synth.add_argument("--noise", type=float, default=0.1)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.set_defaults(func=_cmd_synth)

    p_inspect = sub.add_parser("inspect", help="validate feature/manifest/weights files")
    p_inspect.add_argument("paths", nargs="+")
    p_inspect.set_defaults(func=_cmd_inspect)

    p_pool = sub.add_parser("pool", help="pool a manifest into a cache file")
    p_pool.add_argument("--manifest", dest="manifest_path", required=True)
    p_pool.add_argument("--out", required=True)
    p_pool.add_argument("--target-len", type=int, dest="target_len")
    p_pool.add_argument("--standardize", action="store_const", const=True, dest="standardize")
    _add_esn_flags(p_pool)
    p_pool.set_defaults(func=_cmd_pool)

    p_train = sub.add_parser("train", help="train readouts from a pooled cache")
    p_train.add_argument("--pooled", required=True)
    p_train.add_argument("--out", dest="output_dir")
    p_train.add_argument("--replications", type=int)
    p_train.add_argument("--base-seed", type=int, dest="base_seed")
    p_train.add_argument("--eval-stride", type=int, dest="eval_stride")
    p_train.add_argument("--target-len", type=int, dest="target_len")
    _add_train_flags(p_train)
    p_train.set_defaults(func=_cmd_train)

    p_run = sub.add_parser("run", help="run a full experiment")
    p_run.add_argument("--config", help="key = value experiment config file")
    _add_experiment_flags(p_run)
    _add_esn_flags(p_run)
    _add_train_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DriftnetError as exc:
        for klass, (category, code) in EXIT_CODES.items():
            if isinstance(exc, klass):
                print(f"error[{category}]: {exc}", file=sys.stderr)
                return code
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
