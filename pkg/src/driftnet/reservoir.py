"""Fixed random reservoir construction and sequence-driven state updates.

A reservoir is a sparse, randomly wired recurrent layer whose weights never
change after construction. Per-frame input vectors drive the state forward;
the time-average of [bias; input; state] over a sequence is the pooled
representation consumed by the readout layer.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ConfigError

ACTIVATIONS = ("tanh", "relu")

# Fixed seed for power-iteration restarts so radius estimates are
# reproducible regardless of caller RNG state.
_RESTART_SEED = 0x51E3A7


@dataclass(frozen=True)
class EsnConfig:
    """Reservoir topology and dynamics hyperparameters.

    Attributes:
        reservoir_size: number of reservoir neurons (>= 1).
        leak_rate: blend coefficient in (0, 1]; 1 disables leaking entirely.
        activation: "relu" or "tanh".
        connection_density: fraction of nonzero recurrent entries in (0, 1].
        input_scale: half-width of the uniform input-weight distribution.
        spectral_target: if set, the recurrent matrix is rescaled so its
            spectral radius equals this value; if None the radius is left at
            whatever the random draw produced.
        seed: 64-bit unsigned seed; fully determines the weights.
    """

    reservoir_size: int
    leak_rate: float = 1.0
    activation: str = "relu"
    connection_density: float = 0.1
    input_scale: float = 1.0
    spectral_target: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.reservoir_size < 1:
            raise ConfigError(f"reservoir_size must be >= 1, got {self.reservoir_size}")
        if not 0.0 < self.leak_rate <= 1.0:
            raise ConfigError(f"leak_rate must be in (0, 1], got {self.leak_rate}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if not 0.0 < self.connection_density <= 1.0:
            raise ConfigError(
                f"connection_density must be in (0, 1], got {self.connection_density}"
            )
        if not self.input_scale > 0.0:
            raise ConfigError(f"input_scale must be positive, got {self.input_scale}")
        if self.spectral_target is not None and not self.spectral_target > 0.0:
            raise ConfigError(f"spectral_target must be positive, got {self.spectral_target}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True)
class ReservoirWeights:
    """Immutable weight bundle: input weights, recurrent weights, metadata.

    w_in has shape (reservoir_size, 1 + input_dim); column 0 is the bias
    column multiplied by the constant 1 at every step. w_x is the sparse
    recurrent matrix. natural_radius is the spectral radius measured after
    construction (post-rescaling when a spectral_target was requested).
    """

    w_in: np.ndarray
    w_x: sparse.csr_matrix
    input_dim: int
    natural_radius: float

    @property
    def size(self) -> int:
        return self.w_in.shape[0]


@dataclass
class ReservoirState:
    """State vector after `step_index` consumed frames (0 = before any input)."""

    x: np.ndarray
    step_index: int


def zero_state(reservoir_size: int) -> ReservoirState:
    """Initial all-zero state, the value the recurrence assumes before frame 1."""
    return ReservoirState(np.zeros(reservoir_size), 0)


@dataclass(frozen=True)
class PooledState:
    """Time-average of [1; input; state], length 1 + input_dim + reservoir_size."""

    sigma_x: np.ndarray
    frame_count: int


_BLOCK_WIDTH = 6
_AGREE_SWEEPS = 3


def spectral_radius(matrix, tol: float = 1e-10, max_iter: int = 10000) -> float:
    """Estimate the largest absolute eigenvalue of a square matrix.

    Power iteration carrying an orthonormal block of min(n, 6) columns: the
    extra columns let the estimate settle when the dominant eigenvalues form
    complex pairs or tight clusters, where a single iterated vector
    oscillates forever. Each sweep multiplies the block through the matrix
    and reads the estimate off the small projected matrix; a fully collapsed
    block is restarted from seeded random vectors rather than deflated.
    Converged once estimates from consecutive sweeps agree to `tol`
    relatively several times in a row, giving up after `max_iter` sweeps.

    Accepts a dense ndarray or any scipy sparse matrix; an all-zero matrix
    returns 0.0.
    """
    if sparse.issparse(matrix):
        shape = matrix.shape
        is_zero = matrix.count_nonzero() == 0
    else:
        matrix = np.asarray(matrix, dtype=float)
        shape = matrix.shape
        is_zero = not np.any(matrix)
    if len(shape) != 2 or shape[0] != shape[1]:
        raise ConfigError(f"spectral_radius needs a square matrix, got shape {shape}")
    n = shape[0]
    if is_zero:
        return 0.0
    if n == 1:
        return float(abs(matrix[0, 0]))

    rng = np.random.default_rng(_RESTART_SEED)
    width = min(n, _BLOCK_WIDTH)
    start = np.empty((n, width))
    start[:, 0] = 1.0
    if width > 1:
        start[:, 1:] = rng.standard_normal((n, width - 1))
    q, _ = np.linalg.qr(start)

    estimate = None
    agreed = 0
    collapses = 0
    for _ in range(max_iter):
        z = matrix @ q
        if not np.any(z):
            # the whole block was annihilated; only a nilpotent matrix kills
            # every random block, so repeated collapse means radius 0
            collapses += 1
            if collapses > 8:
                return 0.0
            q, _ = np.linalg.qr(rng.standard_normal((n, width)))
            continue
        new_estimate = float(np.max(np.abs(np.linalg.eigvals(q.T @ z))))
        if estimate is not None and abs(new_estimate - estimate) <= tol * max(
            abs(new_estimate), abs(estimate)
        ):
            agreed += 1
            if agreed >= _AGREE_SWEEPS:
                return new_estimate
        else:
            agreed = 0
        estimate = new_estimate
        q, _ = np.linalg.qr(z)
    return estimate


def init_reservoir(config: EsnConfig, input_dim: int) -> ReservoirWeights:
    """Draw the fixed random weights for a reservoir.

    Input weights are i.i.d. uniform on [-input_scale, +input_scale] with a
    leading bias column. Recurrent weights place round(density * size^2)
    entries, positions chosen uniformly without replacement, values i.i.d.
    uniform on [-1, 1]. The same (config, input_dim) pair always yields
    bit-identical weights; the recurrent draw does not depend on input_dim.

    Raises:
        ConfigError: input_dim < 1, or a spectral_target was requested for a
            matrix whose measured radius is zero (nothing to rescale).
    """
    if input_dim < 1:
        raise ConfigError(f"input_dim must be >= 1, got {input_dim}")

    size = config.reservoir_size
    rng_in, rng_rec = (
        np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(2)
    )

    w_in = rng_in.uniform(-config.input_scale, config.input_scale, (size, 1 + input_dim))

    total = size * size
    nnz = int(round(config.connection_density * total))
    if nnz > 0:
        flat = rng_rec.choice(total, size=nnz, replace=False)
        values = rng_rec.uniform(-1.0, 1.0, nnz)
        w_x = sparse.csr_matrix(
            (values, (flat // size, flat % size)), shape=(size, size), dtype=float
        )
    else:
        w_x = sparse.csr_matrix((size, size), dtype=float)

    radius = spectral_radius(w_x)
    if config.spectral_target is not None:
        if radius == 0.0:
            raise ConfigError(
                "cannot rescale to spectral_target: measured spectral radius is zero "
                f"(reservoir_size={size}, connection_density={config.connection_density})"
            )
        w_x = w_x * (config.spectral_target / radius)
        radius = spectral_radius(w_x)

    w_in.setflags(write=False)
    w_x.data.setflags(write=False)
    w_x.indices.setflags(write=False)
    w_x.indptr.setflags(write=False)
    return ReservoirWeights(w_in=w_in, w_x=w_x, input_dim=input_dim, natural_radius=radius)


def step(
    weights: ReservoirWeights,
    prev: ReservoirState,
    frame: np.ndarray,
    config: EsnConfig,
) -> ReservoirState:
    """Advance the reservoir by one frame.

    Computes the raw activation act(w_in @ [1; frame] + w_x @ prev.x) with
    act = tanh or elementwise max(0, .), then blends it with the previous
    state through the leak rate: (1 - a) * prev + a * raw. With leak_rate 1
    the blend is skipped and the raw activation is returned exactly.
    """
    frame = np.asarray(frame, dtype=float)
    if frame.shape != (weights.input_dim,):
        raise ConfigError(
            f"frame has shape {frame.shape}, expected ({weights.input_dim},)"
        )
    if prev.x.shape != (weights.size,):
        raise ConfigError(
            f"previous state has shape {prev.x.shape}, expected ({weights.size},)"
        )

    drive = weights.w_in @ np.concatenate(([1.0], frame)) + weights.w_x @ prev.x
    if config.activation == "tanh":
        raw = np.tanh(drive)
    else:
        raw = np.maximum(0.0, drive)
    if config.leak_rate == 1.0:
        x = raw
    else:
        x = (1.0 - config.leak_rate) * prev.x + config.leak_rate * raw
    return ReservoirState(x, prev.step_index + 1)


def run_sequence(
    weights: ReservoirWeights, features: np.ndarray, config: EsnConfig
) -> list[ReservoirState]:
    """Fold `step` over the rows of a (frames, input_dim) feature matrix.

    Starts from the zero state; returns one state per frame in frame order.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 2:
        raise ConfigError(f"features must be 2-D, got shape {features.shape}")
    if features.shape[0] < 1:
        raise ConfigError("cannot run an empty sequence")
    if features.shape[1] != weights.input_dim:
        raise ConfigError(
            f"features have width {features.shape[1]}, reservoir expects {weights.input_dim}"
        )

    state = zero_state(weights.size)
    states = []
    for frame in features:
        state = step(weights, state, frame, config)
        states.append(state)
    return states


def pool_states(
    features: np.ndarray,
    states: list[ReservoirState],
    interval: tuple[int, int] | None = None,
) -> PooledState:
    """Time-average [1; input; state] over a sequence (or a frame interval).

    `interval`, when given, is a half-open (start, end) frame range pooled
    instead of the whole sequence.

    Returns a PooledState whose vector has length
    1 + input_dim + reservoir_size; the leading entry is exactly 1.
    """
    features = np.asarray(features, dtype=float)
    frames = features.shape[0] if features.ndim == 2 else -1
    if frames != len(states):
        raise ConfigError(
            f"features have {frames} rows but {len(states)} states were supplied"
        )
    if frames < 1:
        raise ConfigError("cannot pool an empty sequence")

    start, end = interval if interval is not None else (0, frames)
    if not (0 <= start < end <= frames):
        raise ConfigError(
            f"pooling interval ({start}, {end}) is not a valid frame range for {frames} frames"
        )

    state_matrix = np.stack([s.x for s in states[start:end]])
    sigma = np.concatenate(
        ([1.0], features[start:end].mean(axis=0), state_matrix.mean(axis=0))
    )
    return PooledState(sigma_x=sigma, frame_count=end - start)
