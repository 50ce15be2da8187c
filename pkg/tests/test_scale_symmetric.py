import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structbal.dissonance import dissonance
from structbal.dynamics import IntegratorOptions, integrate
from structbal.scale_symmetric import (
    ScaleWitness,
    check_trace_square,
    find_witness,
    make_scale_symmetric,
    random_witness,
    real_spectrum,
    symmetrize,
)

from oracles import one_positive_symmetric, random_symmetric_zd


def test_witness_normalized():
    w = ScaleWitness([2.0, 4.0, 1.0])
    assert np.array_equal(w.gamma, [1.0, 2.0, 0.5])
    assert w.to_json() == "[1.0, 2.0, 0.5]"
    with pytest.raises(ValueError):
        ScaleWitness([1.0, -1.0])


def test_identity_scaling(rng):
    xs = random_symmetric_zd(rng, 4)
    assert np.array_equal(make_scale_symmetric(xs, np.ones(4)), xs)
    assert np.array_equal(make_scale_symmetric(np.zeros((3, 3)), [1, 2, 3]), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        make_scale_symmetric(np.triu(np.ones((3, 3)), 1), np.ones(3))


def test_symmetric_witness_is_ones(rng):
    w = find_witness(random_symmetric_zd(rng, 5))
    assert np.allclose(w.gamma, 1.0)


def test_sign_asymmetric_has_no_witness():
    x = np.array([[0, 1.0, 0], [-1.0, 0, 1.0], [0, 1.0, 0]])
    assert find_witness(x) is None


def test_inconsistent_cycle_has_no_witness():
    x = np.ones((3, 3)) - np.eye(3)
    x[0, 1] = 2.0
    assert find_witness(x) is None


def test_roundtrip_and_spectrum(rng):
    for _ in range(20):
        xs = random_symmetric_zd(rng, 5)
        g = random_witness(5, rng)
        x = make_scale_symmetric(xs, g)
        assert np.allclose((x * g.gamma[None, :]), (x * g.gamma[None, :]).T, atol=1e-12)
        w = find_witness(x)
        assert w is not None and np.allclose(w.gamma, g.gamma, rtol=1e-10)
        assert np.abs(symmetrize(x, w) - symmetrize(x, w).T).max() < 1e-10
        assert np.abs(np.linalg.eigvals(x).imag).max() < 1e-8
        assert np.allclose(real_spectrum(x, w), np.linalg.eigvalsh(xs), atol=1e-10)


def test_disconnected_components():
    xs = np.zeros((4, 4))
    xs[0, 1] = xs[1, 0] = 1.0
    xs[2, 3] = xs[3, 2] = -1.0
    x = make_scale_symmetric(xs, [1.0, 4.0, 9.0, 1.0])
    w = find_witness(x)
    assert w is not None
    assert w.gamma[1] == pytest.approx(4.0) and w.gamma[2] == 1.0
    assert w.gamma[3] == pytest.approx(1 / 9)


def test_trace_square(rng):
    assert check_trace_square(np.zeros((3, 3)), ScaleWitness(np.ones(3))) == 0.0
    for _ in range(10):
        g = random_witness(4, rng)
        x = make_scale_symmetric(random_symmetric_zd(rng, 4), g)
        t = check_trace_square(x)
        assert t > 0
        assert t == pytest.approx(np.trace(x @ x), rel=1e-10)
        oracle = sum(g.gamma[j] / g.gamma[i] * x[i, j] ** 2 for i in range(4) for j in range(4))
        assert t == pytest.approx(oracle, rel=1e-12)
    with pytest.raises(ValueError):
        check_trace_square(np.array([[0, 1.0, 0], [-1.0, 0, 0], [0, 0, 0]]))


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 7), st.integers(0, 2**32 - 1))
def test_roundtrip_property(n, seed):
    rng = np.random.default_rng(seed)
    xs = random_symmetric_zd(rng, n)
    g = random_witness(n, rng)
    w = find_witness(make_scale_symmetric(xs, g))
    assert w is not None and np.allclose(w.gamma, g.gamma, rtol=1e-9)


def test_flow_dissonance_nonincreasing(rng):
    for _ in range(5):
        g = random_witness(4, rng)
        x = make_scale_symmetric(one_positive_symmetric(rng, 4, scale=1.0), g)
        traj = integrate("pure", x, IntegratorOptions(blowup_norm=1e3))
        d = [dissonance(s) for s in traj.states]
        assert np.all(np.diff(d) <= 1e-7 * np.maximum(1.0, np.abs(d[1:])))
        for s in traj.states[:: max(1, len(traj.states) // 10)]:
            assert find_witness(s, tol=1e-6) is not None
