import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reliab.controller import (ControllerConfig, FusionWeights, Mode, classify_mode,
                               contraction_bound, fuse, is_intervention, learning_rate)
from reliab.errors import ConfigError, DomainError

unit = st.floats(0.0, 1.0)
W = FusionWeights()


def test_fuse_examples():
    assert fuse(0, 0, 1, W) == 1.0
    assert fuse(1, 1, 0, W) == 0.0
    assert fuse(0.5, 0.2, 0.8, FusionWeights(0.4, 0.3, 0.3)) == pytest.approx(0.68, abs=1e-15)


@pytest.mark.parametrize("args", [(-0.1, 0, 1), (0, 1.1, 0), (0, 0, float("nan"))])
def test_fuse_domain(args):
    with pytest.raises(DomainError):
        fuse(*args, W)


def test_weights_validation():
    with pytest.raises(ConfigError, match="fusion weights must sum to 1"):
        FusionWeights(0.5, 0.5, 0.5)
    with pytest.raises(ConfigError):
        FusionWeights(-0.2, 0.6, 0.6)


def test_weights_without_renormalises():
    w = FusionWeights(0.4, 0.3, 0.3).without("M")
    assert w.w_M == 0.0
    assert w.w_I + w.w_O == 1.0
    assert w.w_I == pytest.approx(0.4 / 0.7)
    # with memory dropped, fusion is 1 - (w_I' I + w_O' O) whatever M is
    for M in (0.0, 0.5, 1.0):
        assert fuse(0.3, 0.6, M, w) == pytest.approx(1 - (w.w_I * 0.3 + w.w_O * 0.6))


@given(unit, unit, unit, unit, unit, unit)
def test_fuse_lipschitz_and_bounded(i1, o1, m1, i2, o2, m2):
    a, b = fuse(i1, o1, m1, W), fuse(i2, o2, m2, W)
    assert 0.0 <= a <= 1.0
    assert abs(a - b) <= abs(i1 - i2) + abs(o1 - o2) + abs(m1 - m2) + 1e-12


def test_learning_rate_examples():
    cfg = ControllerConfig(eta0=0.01, delta=0.5)
    assert learning_rate(1.0, cfg) == 0.01
    assert learning_rate(0.25, cfg) == 0.005
    assert learning_rate(0.0, cfg) == 0.0
    flat = ControllerConfig(eta0=0.01, delta=0.0)
    assert learning_rate(0.0, flat) == 0.01
    assert learning_rate(0.37, flat) == 0.01


@given(unit, unit, st.floats(0.0, 1.0))
def test_learning_rate_monotone(r1, r2, delta):
    cfg = ControllerConfig(delta=delta)
    lo, hi = sorted((r1, r2))
    assert learning_rate(lo, cfg) <= learning_rate(hi, cfg)


def test_learning_rate_domain():
    with pytest.raises(DomainError):
        learning_rate(1.2, ControllerConfig())


def test_modes():
    cfg = ControllerConfig(theta_act=0.5, theta_safe=0.9)
    assert classify_mode(0.99, 0.9, cfg) is Mode.AGILITY
    assert classify_mode(0.95, 0.0, cfg) is Mode.SAFETY
    assert classify_mode(0.5, 0.1, cfg) is Mode.NOMINAL


@given(unit, unit)
def test_mode_total(R, I):
    assert classify_mode(R, I, ControllerConfig()) in set(Mode)


def test_intervention():
    cfg = ControllerConfig(theta_act=0.5)
    assert is_intervention(0.5, 0.0, cfg)
    assert is_intervention(0.0, 0.7, cfg)
    assert not is_intervention(0.49, 0.49, cfg)


def test_contraction_bound_examples():
    assert contraction_bound(1.0, ControllerConfig(eps_bar=0.005)) == 0.005
    assert contraction_bound(0.3, ControllerConfig(gamma=1.0, eps_bar=0.0)) == 0.0
    assert contraction_bound(0.6, ControllerConfig(gamma=0.2, eps_bar=0.01)) == pytest.approx(0.33)


@pytest.mark.parametrize("kw", [
    {"delta": 1.5}, {"delta": -0.1}, {"eta0": 0.0}, {"kappa": 0.0}, {"gamma": 0.0},
    {"theta_safe": 1.0}, {"theta_act": 0.0}, {"kappa": 0.01, "gamma": 0.1, "eps_bar": 0.01},
])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        ControllerConfig(**kw)


def test_config_contraction_compatibility_boundary():
    ControllerConfig(kappa=1.0, gamma=0.01, eps_bar=0.01)
