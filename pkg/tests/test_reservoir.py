"""Reservoir construction, state updates, and pooling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftnet import (
    EsnConfig,
    init_reservoir,
    pool_states,
    run_sequence,
    spectral_radius,
    step,
    zero_state,
)
from driftnet.errors import ConfigError
from driftnet.reservoir import PooledState, ReservoirState

from conftest import make_weights
from oracles import (
    RELU_TRACE_INPUTS,
    RELU_TRACE_STATES,
    RELU_TRACE_W_IN,
    RELU_TRACE_W_X,
    TANH_TRACE_ALPHA,
    TANH_TRACE_INPUTS,
    TANH_TRACE_STATES,
    TANH_TRACE_W_IN,
    TANH_TRACE_W_X,
    naive_pool,
    radius_via_eigvals,
    tanh_trace_recompute,
)


class TestEsnConfig:
    def test_defaults(self):
        cfg = EsnConfig(reservoir_size=10)
        assert cfg.leak_rate == 1.0
        assert cfg.activation == "relu"
        assert cfg.connection_density == 0.1
        assert cfg.spectral_target is None

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"reservoir_size": 0},
            {"reservoir_size": 10, "leak_rate": 0.0},
            {"reservoir_size": 10, "leak_rate": 1.5},
            {"reservoir_size": 10, "activation": "sigmoid"},
            {"reservoir_size": 10, "connection_density": 0.0},
            {"reservoir_size": 10, "connection_density": 1.1},
            {"reservoir_size": 10, "input_scale": 0.0},
            {"reservoir_size": 10, "spectral_target": -0.5},
            {"reservoir_size": 10, "seed": -1},
            {"reservoir_size": 10, "seed": 2**64},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            EsnConfig(**kwargs)


class TestInitReservoir:
    def test_shapes_and_nonzero_count(self):
        cfg = EsnConfig(reservoir_size=2, connection_density=1.0, seed=7)
        w = init_reservoir(cfg, input_dim=3)
        assert w.w_in.shape == (2, 4)
        assert w.w_x.shape == (2, 2)
        assert w.w_x.count_nonzero() == 4

    def test_bit_identical_across_calls(self):
        cfg = EsnConfig(reservoir_size=30, seed=5)
        a = init_reservoir(cfg, input_dim=4)
        b = init_reservoir(cfg, input_dim=4)
        assert np.array_equal(a.w_in, b.w_in)
        assert np.array_equal(a.w_x.toarray(), b.w_x.toarray())

    @pytest.mark.parametrize("size,density", [(10, 0.1), (25, 0.3), (40, 0.07)])
    def test_nonzero_count_near_density(self, size, density):
        cfg = EsnConfig(reservoir_size=size, connection_density=density, seed=1)
        w = init_reservoir(cfg, input_dim=2)
        assert abs(w.w_x.count_nonzero() - round(density * size * size)) <= 1

    def test_weight_ranges(self):
        cfg = EsnConfig(reservoir_size=20, input_scale=0.25, seed=9)
        w = init_reservoir(cfg, input_dim=3)
        assert np.all(np.abs(w.w_in) <= 0.25)
        assert np.all(np.abs(w.w_x.data) <= 1.0)

    def test_spectral_target_hit(self):
        cfg = EsnConfig(reservoir_size=50, connection_density=0.1, spectral_target=0.9, seed=7)
        w = init_reservoir(cfg, input_dim=2)
        assert radius_via_eigvals(w.w_x.toarray()) == pytest.approx(0.9, abs=1e-6)
        assert w.natural_radius == pytest.approx(0.9, abs=1e-6)

    def test_natural_radius_matches_measurement_without_target(self):
        cfg = EsnConfig(reservoir_size=40, seed=3)
        w = init_reservoir(cfg, input_dim=2)
        assert w.natural_radius == pytest.approx(spectral_radius(w.w_x), rel=1e-9)

    def test_recurrent_draw_independent_of_input_dim(self):
        cfg = EsnConfig(reservoir_size=25, seed=13)
        a = init_reservoir(cfg, input_dim=2)
        b = init_reservoir(cfg, input_dim=9)
        assert np.array_equal(a.w_x.toarray(), b.w_x.toarray())

    def test_weights_immutable(self):
        w = init_reservoir(EsnConfig(reservoir_size=8, seed=0), input_dim=2)
        with pytest.raises(ValueError):
            w.w_in[0, 0] = 5.0
        with pytest.raises(ValueError):
            w.w_x.data[0] = 5.0

    def test_zero_input_dim_rejected(self):
        with pytest.raises(ConfigError):
            init_reservoir(EsnConfig(reservoir_size=5), input_dim=0)

    def test_all_zero_matrix_with_target_rejected(self):
        # round(0.1 * 4) = 0 nonzeros, nothing to rescale
        cfg = EsnConfig(reservoir_size=2, connection_density=0.1, spectral_target=0.9)
        with pytest.raises(ConfigError, match="spectral radius is zero"):
            init_reservoir(cfg, input_dim=1)


class TestStep:
    def test_relu_injects_input(self):
        w = make_weights(w_in=[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], w_x=[[0, 0], [0, 0]])
        cfg = EsnConfig(reservoir_size=2, activation="relu")
        out = step(w, zero_state(2), np.array([-1.0, 2.0]), cfg)
        assert np.array_equal(out.x, [0.0, 2.0])
        assert out.step_index == 1

    def test_tanh_pure_leak_decay(self):
        w = make_weights(w_in=[[0.0, 1.0]], w_x=[[0.0]])
        cfg = EsnConfig(reservoir_size=1, activation="tanh", leak_rate=0.5)
        out = step(w, ReservoirState(np.array([0.4]), 0), np.array([0.0]), cfg)
        assert out.x[0] == pytest.approx(0.2, abs=1e-15)

    def test_dimension_mismatch_rejected(self):
        w = make_weights(w_in=[[0.0, 1.0], [0.0, 1.0]], w_x=[[0, 0], [0, 0]])
        cfg = EsnConfig(reservoir_size=2)
        with pytest.raises(ConfigError):
            step(w, zero_state(2), np.array([1.0, 2.0]), cfg)
        with pytest.raises(ConfigError):
            step(w, zero_state(3), np.array([1.0]), cfg)

    def test_golden_relu_trace(self):
        w = make_weights(RELU_TRACE_W_IN, RELU_TRACE_W_X)
        cfg = EsnConfig(reservoir_size=2, activation="relu", leak_rate=1.0)
        state = zero_state(2)
        for u, expected in zip(RELU_TRACE_INPUTS, RELU_TRACE_STATES):
            state = step(w, state, np.array([u]), cfg)
            assert np.array_equal(state.x, expected)

    def test_golden_tanh_trace(self):
        assert tanh_trace_recompute() == TANH_TRACE_STATES
        w = make_weights(TANH_TRACE_W_IN, TANH_TRACE_W_X)
        cfg = EsnConfig(reservoir_size=2, activation="tanh", leak_rate=TANH_TRACE_ALPHA)
        state = zero_state(2)
        for u, expected in zip(TANH_TRACE_INPUTS, TANH_TRACE_STATES):
            state = step(w, state, np.array([u]), cfg)
            assert state.x == pytest.approx(expected, abs=1e-12)


class TestRunSequence:
    def test_single_frame_equals_step(self):
        cfg = EsnConfig(reservoir_size=6, activation="tanh", seed=2)
        w = init_reservoir(cfg, input_dim=3)
        u = np.array([[0.3, -0.7, 1.1]])
        states = run_sequence(w, u, cfg)
        assert len(states) == 1
        assert np.array_equal(states[0].x, step(w, zero_state(6), u[0], cfg).x)

    def test_all_zero_input_relu_stays_zero(self):
        w = make_weights(w_in=[[0.0, 0.5], [0.0, -0.5]], w_x=[[0.1, 0.2], [0.3, 0.4]])
        cfg = EsnConfig(reservoir_size=2, activation="relu")
        states = run_sequence(w, np.zeros((4, 1)), cfg)
        assert all(np.array_equal(s.x, [0.0, 0.0]) for s in states)

    def test_fold_matches_manual_iteration(self):
        cfg = EsnConfig(reservoir_size=10, activation="tanh", leak_rate=0.7, seed=3)
        w = init_reservoir(cfg, input_dim=4)
        features = np.random.default_rng(3).normal(size=(5, 4))
        states = run_sequence(w, features, cfg)
        manual = zero_state(10)
        for frame in features:
            manual = step(w, manual, frame, cfg)
        assert np.array_equal(states[-1].x, manual.x)
        assert [s.step_index for s in states] == [1, 2, 3, 4, 5]

    def test_empty_and_misshaped_rejected(self):
        cfg = EsnConfig(reservoir_size=4, seed=0)
        w = init_reservoir(cfg, input_dim=2)
        with pytest.raises(ConfigError):
            run_sequence(w, np.zeros((0, 2)), cfg)
        with pytest.raises(ConfigError):
            run_sequence(w, np.zeros((3, 5)), cfg)


class TestPoolStates:
    def test_constant_sequence(self):
        u = np.full((5, 2), 3.0)
        states = [ReservoirState(np.array([0.5, -1.0, 2.0]), i + 1) for i in range(5)]
        pooled = pool_states(u, states)
        assert np.array_equal(pooled.sigma_x, [1.0, 3.0, 3.0, 0.5, -1.0, 2.0])
        assert pooled.frame_count == 5

    def test_two_frame_mean(self):
        u = np.array([[0.0], [2.0]])
        states = [ReservoirState(np.array([1.0]), 1), ReservoirState(np.array([3.0]), 2)]
        assert np.array_equal(pool_states(u, states).sigma_x, [1.0, 1.0, 2.0])

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(21)
        u = rng.normal(size=(7, 3))
        xs = rng.normal(size=(7, 5))
        states = [ReservoirState(x, i + 1) for i, x in enumerate(xs)]
        assert pool_states(u, states).sigma_x == pytest.approx(naive_pool(u, xs), abs=1e-12)

    def test_leading_entry_exactly_one(self):
        rng = np.random.default_rng(8)
        u = rng.normal(size=(9, 2))
        states = [ReservoirState(x, i + 1) for i, x in enumerate(rng.normal(size=(9, 4)))]
        assert pool_states(u, states).sigma_x[0] == 1.0

    def test_interval_pooling(self):
        u = np.array([[0.0], [2.0], [4.0]])
        states = [ReservoirState(np.array([float(i)]), i + 1) for i in range(3)]
        pooled = pool_states(u, states, interval=(1, 3))
        assert np.array_equal(pooled.sigma_x, [1.0, 3.0, 1.5])
        assert pooled.frame_count == 2

    def test_bad_interval_rejected(self):
        u = np.zeros((3, 1))
        states = [ReservoirState(np.zeros(1), i + 1) for i in range(3)]
        for bad in [(2, 2), (-1, 2), (0, 4)]:
            with pytest.raises(ConfigError):
                pool_states(u, states, interval=bad)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ConfigError):
            pool_states(np.zeros((3, 1)), [ReservoirState(np.zeros(1), 1)])


# -- property tests ----------------------------------------------------------

finite = st.floats(min_value=-50, max_value=50, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), data=st.lists(finite, min_size=2, max_size=10))
def test_relu_states_never_negative(seed, data):
    cfg = EsnConfig(reservoir_size=7, activation="relu", connection_density=0.5, seed=seed)
    w = init_reservoir(cfg, input_dim=2)
    features = np.array(data * 2).reshape(-1, 2)[:5]
    for state in run_sequence(w, features, cfg):
        assert np.all(state.x >= 0.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), u=st.lists(finite, min_size=3, max_size=3))
def test_leak_one_returns_raw_activation(seed, u):
    cfg = EsnConfig(reservoir_size=5, activation="tanh", leak_rate=1.0, seed=seed)
    w = init_reservoir(cfg, input_dim=3)
    prev = ReservoirState(np.random.default_rng(seed).normal(size=5), 1)
    out = step(w, prev, np.array(u), cfg)
    raw = np.tanh(w.w_in @ np.concatenate(([1.0], u)) + w.w_x @ prev.x)
    assert np.array_equal(out.x, raw)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), frames=st.integers(1, 6))
def test_pooling_invariant_under_repetition(seed, frames):
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(frames, 2))
    xs = rng.normal(size=(frames, 3))
    states = [ReservoirState(x, i + 1) for i, x in enumerate(xs)]
    once = pool_states(u, states)
    twice = pool_states(np.vstack([u, u]), states + states)
    assert twice.sigma_x == pytest.approx(once.sigma_x, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(c=st.floats(min_value=0.05, max_value=4.0), seed=st.integers(0, 2**32 - 1))
def test_radius_scales_linearly(c, seed):
    m = np.random.default_rng(seed).standard_normal((6, 6))
    assert spectral_radius(c * m) == pytest.approx(c * spectral_radius(m), rel=1e-7)


def test_fading_memory_short_horizon():
    # two inputs differing only in frame 1 converge to the same trajectory
    cfg = EsnConfig(
        reservoir_size=50, activation="tanh", spectral_target=0.9,
        connection_density=0.1, seed=4,
    )
    w = init_reservoir(cfg, input_dim=3)
    rng = np.random.default_rng(40)
    base = rng.normal(size=(200, 3))
    bumped = base.copy()
    bumped[0] += rng.normal(size=3)
    sa = run_sequence(w, base, cfg)
    sb = run_sequence(w, bumped, cfg)
    dist = np.linalg.norm(sa[-1].x - sb[-1].x)
    assert dist < 1e-6


def test_pooled_state_is_frozen():
    pooled = PooledState(sigma_x=np.array([1.0]), frame_count=1)
    with pytest.raises(AttributeError):
        pooled.frame_count = 2
