import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reliab.errors import DomainError, FormatError, TrainingFault
from reliab.learner.data import (Dataset, load_idx, make_blobs, read_idx_images, read_idx_labels,
                                 write_idx_images, write_idx_labels)
from reliab.learner.model import ModelState, backward, cross_entropy, forward, init_mlp, softmax
from reliab.learner.optim import SGD, AdaBound, Adam, make_optimizer
from reliab.learner.perturb import PerturbationSpec, apply_perturbation, resample_labels
from reliab.errors import ConfigError


def numeric_grads(model, x, y, h=1e-5):
    out = []
    for p in model.params():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = p[i]
            p[i] = old + h
            lp = cross_entropy(forward(model, x)[1], y)
            p[i] = old - h
            lm = cross_entropy(forward(model, x)[1], y)
            p[i] = old
            g[i] = (lp - lm) / (2 * h)
        out.append(g)
    return out


def rel_err(a, b):
    a = np.concatenate([np.ravel(v) for v in a])
    b = np.concatenate([np.ravel(v) for v in b])
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)


# -- model -------------------------------------------------------------------

def test_zero_model_uniform():
    m = init_mlp([3, 4, 5], seed=0)
    for p in m.params():
        p[...] = 0.0
    _, probs, _ = forward(m, np.random.default_rng(0).normal(size=(7, 3)))
    np.testing.assert_array_equal(probs, np.full((7, 5), 0.2))


def test_linear_logits_by_hand():
    W = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([0.5, -0.5])
    m = ModelState([W.copy()], [b.copy()])
    x = np.array([[1.0, -1.0]])
    logits, probs, _ = forward(m, x)
    # [1*1 + (-1)*3 + 0.5, 1*2 + (-1)*4 - 0.5]
    np.testing.assert_array_equal(logits, [[-1.5, -2.5]])
    e = np.exp([-1.5, -2.5])
    np.testing.assert_allclose(probs, [e / e.sum()], rtol=1e-15)


@given(st.integers(1, 20), st.integers(0, 2**31 - 1))
def test_probabilities_sum_to_one(n, seed):
    m = init_mlp([4, 6, 3], seed=seed)
    x = np.random.default_rng(seed).normal(scale=50, size=(n, 4))
    _, probs, _ = forward(m, x)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(probs >= 0)


def test_forward_dimension_mismatch():
    with pytest.raises(DomainError):
        forward(init_mlp([4, 3], seed=0), np.zeros((2, 5)))


def test_softmax_shift_invariant():
    z = np.array([[1.0, 2.0, 3.0]])
    np.testing.assert_allclose(softmax(z), softmax(z + 1000.0), rtol=1e-14)


def test_cross_entropy_examples():
    probs = np.eye(3)[[0, 2, 1]]
    assert cross_entropy(probs, np.array([0, 2, 1])) == 0.0
    assert cross_entropy(np.full((4, 5), 0.2), np.array([0, 1, 2, 3])) == pytest.approx(np.log(5))
    with pytest.raises(DomainError):
        cross_entropy(np.full((1, 2), 0.5), np.array([2]))


def test_one_hot_logits_give_zero_gradient_limit():
    m = ModelState([np.array([[200.0, -200.0]])], [np.zeros(2)])
    x = np.array([[1.0]])
    _, _, cache = forward(m, x)
    loss, grads = backward(m, cache, np.array([0]))
    assert loss == pytest.approx(0.0, abs=1e-150)
    assert all(np.all(np.abs(g) < 1e-150) for g in grads)


@pytest.mark.parametrize("seed", range(20))
def test_gradient_check_random_tiny_models(seed):
    rng = np.random.default_rng(seed)
    d, k = int(rng.integers(1, 5)), int(rng.integers(2, 5))
    hidden = [int(h) for h in rng.integers(1, 5, size=int(rng.integers(0, 3)))]
    m = init_mlp([d, *hidden, k], seed=seed)
    for b in m.biases:
        b[...] = rng.normal(scale=0.1, size=b.shape)
    x = rng.normal(size=(5, d))
    y = rng.integers(0, k, size=5)
    _, _, cache = forward(m, x)
    _, grads = backward(m, cache, y)
    num = numeric_grads(m, x, y)
    assert rel_err(grads, num) < 1e-5
    for a, b in zip(grads, num):
        np.testing.assert_allclose(a, b, rtol=1e-5, atol=1e-9)


def test_init_deterministic_and_shapes():
    a, b = init_mlp([5, 7, 3], seed=3), init_mlp([5, 7, 3], seed=3)
    assert all(np.array_equal(p, q) for p, q in zip(a.params(), b.params()))
    assert [w.shape for w in a.weights] == [(5, 7), (7, 3)]


def test_check_finite_raises_fault():
    m = init_mlp([2, 2], seed=0)
    m.weights[0][0, 0] = np.nan
    with pytest.raises(TrainingFault):
        m.check_finite(4)


# -- optimisers --------------------------------------------------------------

@pytest.mark.parametrize("name", ["sgd", "adam", "adabound"])
def test_zero_step_leaves_params(name):
    opt = make_optimizer(name)
    p = [np.array([1.0, -2.0])]
    opt.step(p, [np.array([0.3, 0.4])], 0.0)
    np.testing.assert_array_equal(p[0], [1.0, -2.0])


@settings(max_examples=50)
@given(st.sampled_from(["sgd", "adam", "adabound"]), st.floats(0, 1), st.floats(0, 1),
       st.integers(0, 2**31 - 1))
def test_displacement_monotone_in_eta(name, e1, e2, seed):
    rng = np.random.default_rng(seed)
    theta = rng.normal(size=5)
    grads = [rng.normal(size=5)]
    lo, hi = sorted((e1, e2))
    moves = []
    for eta in (lo, hi):
        p = [theta.copy()]
        make_optimizer(name).step(p, grads, eta)
        moves.append(np.linalg.norm(p[0] - theta))
    assert moves[0] <= moves[1] * (1 + 1e-12) + 1e-300


def test_sgd_scalar():
    p = [np.array([1.0])]
    SGD().step(p, [np.array([2.0])], 0.1)
    assert p[0][0] == pytest.approx(0.8, abs=1e-15)


def test_adam_first_step_hand_formula():
    g = np.array([0.5, -3.0, 1e-3])
    p = [np.zeros(3)]
    (d,) = Adam().step(p, [g], 0.1)
    m_hat = (1 - 0.9) * g / (1 - 0.9)
    v_hat = (1 - 0.999) * g * g / (1 - 0.999)
    expected = m_hat / (np.sqrt(v_hat) + 1e-8)
    np.testing.assert_allclose(d, expected, rtol=1e-12)
    np.testing.assert_allclose(d, g / (np.abs(g) + 1e-8), rtol=1e-12)
    np.testing.assert_allclose(p[0], -0.1 * expected, rtol=1e-12)


def test_adabound_clips_into_band():
    opt = AdaBound()
    p = [np.zeros(2)]
    # tiny second moment would give a huge Adam rate; the band caps it
    opt.step(p, [np.array([1e-6, 1.0])], 0.1)
    lo, hi = opt.bounds(0.1, 1)
    rates = -p[0] / (0.1 * np.array([1e-6, 1.0]))  # rate * m / grad, m = 0.1 g
    assert np.all(np.abs(p[0]) <= hi * 0.1 * np.array([1e-6, 1.0]) * (1 + 1e-12))
    assert lo < hi and rates.shape == (2,)


def test_adabound_band_converges_to_final_rate():
    lo, hi = AdaBound().bounds(0.1, 10**9)
    assert lo == pytest.approx(0.01, rel=1e-5)
    assert hi == pytest.approx(0.01, rel=1e-5)


def test_optimizer_rejects_nan_gradient():
    with pytest.raises(TrainingFault):
        SGD().step([np.zeros(1)], [np.array([np.nan])], 0.1)


def test_unknown_optimizer():
    with pytest.raises(DomainError):
        make_optimizer("rmsprop")


# -- data --------------------------------------------------------------------

def test_blobs_deterministic():
    a, b = make_blobs(3, 50, 4, 3, 1.0), make_blobs(3, 50, 4, 3, 1.0)
    np.testing.assert_array_equal(a.inputs, b.inputs)
    np.testing.assert_array_equal(a.labels, b.labels)


def test_blobs_zero_spread_nearest_centroid_exact():
    ds = make_blobs(1, 60, 3, 4, 0.0)
    mu = np.stack([ds.inputs[ds.labels == k][0] for k in range(4)])
    pred = np.argmin(((ds.inputs[:, None] - mu[None]) ** 2).sum(-1), axis=1)
    assert np.all(pred == ds.labels)


def test_blobs_linear_probe_regression():
    # nearest class mean is a linear classifier under shared isotropic noise
    ds = make_blobs(7, 300, 2, 3, 0.1)
    mu = np.stack([ds.inputs[ds.labels == k].mean(0) for k in range(3)])
    pred = np.argmin(((ds.inputs[:, None] - mu[None]) ** 2).sum(-1), axis=1)
    acc = float(np.mean(pred == ds.labels))
    assert acc > 0.9
    assert acc == 1.0  # frozen regression value


def _idx_images(tmp_path, name="img.idx"):
    raw = bytes([0, 51, 102, 255, 10, 20, 30, 40])
    path = tmp_path / name
    path.write_bytes(struct.pack(">IIII", 0x803, 2, 2, 2) + raw)
    return path, np.array(list(raw), dtype=float).reshape(2, 4) / 255.0


def _idx_labels(tmp_path, labels=(3, 7), name="lab.idx"):
    path = tmp_path / name
    path.write_bytes(struct.pack(">II", 0x801, len(labels)) + bytes(labels))
    return path


def test_idx_hand_fixture(tmp_path):
    img_path, expected = _idx_images(tmp_path)
    x = read_idx_images(img_path)
    assert x.shape == (2, 4)
    np.testing.assert_array_equal(x, expected)
    np.testing.assert_array_equal(read_idx_labels(_idx_labels(tmp_path)), [3, 7])
    ds = load_idx(img_path, _idx_labels(tmp_path))
    assert ds.n_classes == 10 and len(ds) == 2


def test_idx_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    imgs = rng.integers(0, 256, size=(5, 3, 4), dtype=np.uint8)
    labs = rng.integers(0, 10, size=5)
    write_idx_images(tmp_path / "i", imgs)
    write_idx_labels(tmp_path / "l", labs)
    np.testing.assert_array_equal(read_idx_images(tmp_path / "i"), imgs.reshape(5, 12) / 255.0)
    np.testing.assert_array_equal(read_idx_labels(tmp_path / "l"), labs)


def test_idx_wrong_magic(tmp_path):
    path = tmp_path / "lab"
    path.write_bytes(struct.pack(">II", 0x803, 1) + b"\x01")
    with pytest.raises(FormatError, match="wrong magic for labels"):
        read_idx_labels(path)
    with pytest.raises(FormatError, match="wrong magic for images"):
        read_idx_images(_idx_labels(tmp_path))


def test_idx_truncated(tmp_path):
    empty = tmp_path / "empty"
    empty.write_bytes(b"")
    with pytest.raises(FormatError, match="truncated"):
        read_idx_images(empty)
    short = tmp_path / "short"
    short.write_bytes(struct.pack(">IIII", 0x803, 2, 2, 2) + b"\x00" * 5)
    with pytest.raises(FormatError, match="truncated"):
        read_idx_images(short)


def test_idx_count_mismatch(tmp_path):
    img, _ = _idx_images(tmp_path)
    with pytest.raises(FormatError, match="count mismatch"):
        load_idx(img, _idx_labels(tmp_path, (1, 2, 3)))


def test_dataset_validation():
    with pytest.raises(DomainError):
        Dataset(np.zeros((2, 2)), np.array([0, 3]), 3)
    with pytest.raises(DomainError):
        Dataset(np.zeros((2, 2)), np.array([0]), 3)


# -- perturbations -----------------------------------------------------------

def test_label_noise_zero_is_noop():
    ds = make_blobs(0, 40, 2, 2, 1.0)
    out = resample_labels(ds, 0.0, np.random.default_rng(0))
    np.testing.assert_array_equal(out.labels, ds.labels)


def test_spike_scale_one_is_noop():
    spec = PerturbationSpec("gradient_spike", at_step=0, scale=1.0)
    g = [np.array([1.0, 2.0])]
    _, out = apply_perturbation(spec, 0, None, g, np.random.default_rng(0))
    np.testing.assert_array_equal(out[0], g[0])


def test_spike_window():
    spec = PerturbationSpec("gradient_spike", at_step=5, scale=3.0, duration=2)
    assert [spec.active(s) for s in range(4, 8)] == [False, True, True, False]
    _, out = apply_perturbation(spec, 5, None, [np.ones(2)], np.random.default_rng(0))
    np.testing.assert_array_equal(out[0], [3.0, 3.0])


def test_full_label_resample_flips_half():
    fracs = []
    for seed in range(20):
        ds = make_blobs(seed, 1000, 2, 2, 1.0)
        out = resample_labels(ds, 1.0, np.random.default_rng(seed))
        fracs.append(np.mean(out.labels != ds.labels))
    assert abs(np.mean(fracs) - 0.5) <= 0.05


def test_label_noise_does_not_mutate_input():
    ds = make_blobs(0, 40, 2, 2, 1.0)
    before = ds.labels.copy()
    resample_labels(ds, 1.0, np.random.default_rng(0))
    np.testing.assert_array_equal(ds.labels, before)


@pytest.mark.parametrize("kw", [{"kind": "bogus", "at_step": 0},
                                {"kind": "gradient_spike", "at_step": 0, "scale": 0.5},
                                {"kind": "label_noise", "at_step": 0, "p": 1.5},
                                {"kind": "gradient_spike", "at_step": -1}])
def test_perturbation_spec_validation(kw):
    with pytest.raises(ConfigError):
        PerturbationSpec(**kw)
