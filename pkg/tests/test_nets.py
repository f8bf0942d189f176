"""Unit tests for the MLP heads, analytic backprop, and checkpoint format."""

from __future__ import annotations

import numpy as np
import pytest

from oracles import finite_difference_gradients
from slungload import (DimensionMismatch, FormatError, PolicyParams, init_policy,
                       load_checkpoint, policy_forward, save_checkpoint)
from slungload.nets import (LOG_STD_INIT, actor_backward, actor_forward,
                            critic_backward, critic_forward)


def small_policy(seed=0, obs_dim=6, hidden=8, kind="wp") -> PolicyParams:
    return init_policy(obs_dim, kind, np.random.default_rng(seed), hidden=hidden)


# ---------------------------------------------------------------------------
# initialization

def test_init_orthogonal_rows_and_gains():
    p = init_policy(24, "wp", np.random.default_rng(0))
    assert np.allclose(p.w1 @ p.w1.T, 2.0 * np.eye(24), atol=1e-10)
    assert np.allclose(p.w2 @ p.w2.T, 2.0 * np.eye(128), atol=1e-10)
    assert np.allclose(p.w3.T @ p.w3, 1e-4 * np.eye(4), atol=1e-12)
    assert np.allclose(p.v3.T @ p.v3, np.eye(1), atol=1e-12)
    for b in (p.b1, p.b2, p.b3, p.c1, p.c2, p.c3):
        assert np.all(b == 0.0)
    assert np.allclose(p.log_std, LOG_STD_INIT)


def test_init_deterministic_per_seed():
    a = init_policy(24, "wp", np.random.default_rng(7))
    b = init_policy(24, "wp", np.random.default_rng(7))
    for name, arr in a.arrays().items():
        assert np.array_equal(arr, b.arrays()[name])


def test_init_unknown_kind_rejected():
    with pytest.raises(FormatError):
        init_policy(24, "xx", np.random.default_rng(0))


def test_param_count_matches_architecture():
    p = small_policy(obs_dim=6, hidden=8)
    expected = (6 * 8 + 8) + (8 * 8 + 8) + (8 * 4 + 4) + 4 \
        + (6 * 8 + 8) + (8 * 8 + 8) + (8 * 1 + 1)
    assert p.num_params() == expected


# ---------------------------------------------------------------------------
# forward pass

def test_forward_zero_weights_zero_outputs():
    p = small_policy()
    for arr in p.arrays().values():
        arr[...] = 0.0
    mean, log_std, value = policy_forward(p, np.ones(6))
    assert np.all(mean == 0.0)
    assert value == 0.0


def test_forward_single_and_batch_shapes():
    p = small_policy()
    obs1 = np.linspace(-1, 1, 6)
    mean1, log_std, v1 = policy_forward(p, obs1)
    assert mean1.shape == (4,) and log_std.shape == (4,) and isinstance(v1, float)
    batch = np.tile(obs1, (5, 1))
    mean_b, _, v_b = policy_forward(p, batch)
    assert mean_b.shape == (5, 4) and v_b.shape == (5,)
    # matmul kernels differ per batch shape, so equality is near-exact only
    assert np.allclose(mean_b[0], mean1, rtol=1e-12, atol=1e-15)
    assert v_b[0] == pytest.approx(v1, rel=1e-12)
    nested = np.tile(obs1, (2, 3, 1))
    mean_n, _, v_n = policy_forward(p, nested)
    assert mean_n.shape == (2, 3, 4) and v_n.shape == (2, 3)


def test_forward_bounds_strict(rng):
    total = 0
    for k in range(25):
        p = small_policy(seed=k)
        for arr in p.arrays().values():
            arr *= rng.uniform(0.5, 40.0)  # exaggerate weights
        obs = rng.normal(scale=3.0, size=(1000, 6))
        mean, _, _ = policy_forward(p, obs)
        assert np.all(mean > -1.0) and np.all(mean < 1.0)
        total += mean.size
    assert total >= 100_000


def test_forward_dim_mismatch():
    p = small_policy()
    with pytest.raises(DimensionMismatch):
        policy_forward(p, np.zeros(7))


def test_forward_deterministic():
    p = small_policy(seed=3)
    obs = np.random.default_rng(1).normal(size=(4, 6))
    a = policy_forward(p, obs)
    b = policy_forward(p, obs)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[2], b[2])


# ---------------------------------------------------------------------------
# analytic backprop vs central finite differences

def test_actor_backward_matches_finite_differences(rng):
    p = small_policy(seed=11)
    obs = rng.normal(size=(6, 6))
    cot = rng.normal(size=(6, 4))  # fixed cotangent makes the loss scalar

    u, cache = actor_forward(p, obs)
    analytic = actor_backward(p, cache, cot)
    fd = finite_difference_gradients(
        lambda: float(np.sum(actor_forward(p, obs)[0] * cot)),
        p, ("w1", "b1", "w2", "b2", "w3", "b3"))
    for key, g_fd in fd.items():
        denom = max(float(np.linalg.norm(g_fd)), 1e-12)
        err = float(np.linalg.norm(analytic[key] - g_fd)) / denom
        assert err <= 1e-5, f"{key}: {err}"


def test_critic_backward_matches_finite_differences(rng):
    p = small_policy(seed=12)
    obs = rng.normal(size=(7, 6))
    cot = rng.normal(size=7)

    v, cache = critic_forward(p, obs)
    analytic = critic_backward(p, cache, cot)
    fd = finite_difference_gradients(
        lambda: float(np.sum(critic_forward(p, obs)[0] * cot)),
        p, ("v1", "c1", "v2", "c2", "v3", "c3"))
    for key, g_fd in fd.items():
        denom = max(float(np.linalg.norm(g_fd)), 1e-12)
        err = float(np.linalg.norm(analytic[key] - g_fd)) / denom
        assert err <= 1e-5, f"{key}: {err}"


# ---------------------------------------------------------------------------
# checkpoints

def _quantized(p: PolicyParams) -> PolicyParams:
    q = p.copy()
    for arr in q.arrays().values():
        arr[...] = arr.astype(np.float32).astype(np.float64)
    return q


def test_checkpoint_roundtrip_bits(tmp_path):
    p = small_policy(seed=4)
    path = tmp_path / "p.bin"
    save_checkpoint(p, path)
    loaded = load_checkpoint(path)
    assert loaded.kind == p.kind and loaded.obs_dim == 6 and loaded.hidden == 8
    q = _quantized(p)
    for name, arr in loaded.arrays().items():
        assert np.array_equal(arr, q.arrays()[name])
    # a second roundtrip of the already-quantized parameters is lossless,
    # so forward outputs agree to the bit
    obs = np.random.default_rng(0).normal(size=(5, 6))
    save_checkpoint(loaded, path)
    again = load_checkpoint(path)
    m1, s1, v1 = policy_forward(loaded, obs)
    m2, s2, v2 = policy_forward(again, obs)
    assert np.array_equal(m1, m2) and np.array_equal(s1, s2) and np.array_equal(v1, v2)


def test_checkpoint_float32_accuracy(tmp_path):
    p = small_policy(seed=5)
    path = tmp_path / "p.bin"
    save_checkpoint(p, path)
    loaded = load_checkpoint(path)
    obs = np.random.default_rng(2).normal(size=(8, 6))
    m0, _, v0 = policy_forward(p, obs)
    m1, _, v1 = policy_forward(loaded, obs)
    assert np.allclose(m0, m1, atol=1e-5)
    assert np.allclose(v0, v1, atol=1e-4)


def test_checkpoint_expectation_checks(tmp_path):
    p = small_policy(seed=6, kind="pt")
    path = tmp_path / "p.bin"
    save_checkpoint(p, path)
    assert load_checkpoint(path, expect_kind="pt").kind == "pt"
    with pytest.raises(FormatError, match="scenario"):
        load_checkpoint(path, expect_kind="gt")
    with pytest.raises(FormatError, match="obs_dim"):
        load_checkpoint(path, expect_obs_dim=27)


def test_checkpoint_bad_magic(tmp_path):
    p = small_policy()
    path = tmp_path / "p.bin"
    save_checkpoint(p, path)
    blob = bytearray(path.read_bytes())
    blob[0:4] = b"NOPE"
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError, match="magic"):
        load_checkpoint(path)


def test_checkpoint_bad_version(tmp_path):
    p = small_policy()
    path = tmp_path / "p.bin"
    save_checkpoint(p, path)
    blob = bytearray(path.read_bytes())
    blob[4:6] = (99).to_bytes(2, "little")
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError, match="version"):
        load_checkpoint(path)


def test_checkpoint_bad_kind_code(tmp_path):
    p = small_policy()
    path = tmp_path / "p.bin"
    save_checkpoint(p, path)
    blob = bytearray(path.read_bytes())
    blob[6] = 9
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError, match="kind"):
        load_checkpoint(path)


def test_checkpoint_truncation(tmp_path):
    p = small_policy()
    path = tmp_path / "p.bin"
    save_checkpoint(p, path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(FormatError):
        load_checkpoint(path)
    path.write_bytes(blob[:8])  # shorter than the header itself
    with pytest.raises(FormatError, match="short"):
        load_checkpoint(path)
    path.write_bytes(blob + b"\x00" * 4)  # trailing garbage
    with pytest.raises(FormatError, match="payload"):
        load_checkpoint(path)
