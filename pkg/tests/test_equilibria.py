import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structbal.balance import VerdictKind, classify
from structbal.dissonance import dissonance
from structbal.equilibria import (
    EquilibriumBlock,
    NstMatrix,
    alpha_beta,
    block_coefficients,
    build_irreducible,
    build_reducible,
    enumerate_balanced,
    equilibrium_dissonance,
    equilibrium_eigenvalues,
    instability_certificate,
    irreducible_pq,
    is_nst,
    ngon_residual,
    nst_harmonic,
    nst_k1,
    nst_k2,
    nst_stacked,
    regular_ngon_angles,
    residual,
)

from oracles import ngon_matrix, random_orthogonal, random_symmetric_zd


def test_nst_k1():
    v = nst_k1(3).v
    assert np.allclose(v[:, 0], 1 / math.sqrt(3))
    v = nst_k1(2, [1, -1]).v
    assert np.allclose(v[:, 0], [1 / math.sqrt(2), -1 / math.sqrt(2)])
    with pytest.raises(ValueError):
        nst_k1(3, [1, 0, 1])


def test_nst_k2():
    nst_k2(5, regular_ngon_angles(5))
    nst_k2(3, [0, math.pi / 3, 2 * math.pi / 3])
    with pytest.raises(ValueError, match="residual"):
        nst_k2(4, [0.3] * 4)
    assert ngon_residual([0.3] * 4) == pytest.approx(4.0)


def test_is_nst(rng):
    assert is_nst(random_orthogonal(rng, 5)).ok
    u = nst_stacked(random_orthogonal(rng, 3), random_orthogonal(rng, 3))
    assert u.n == 6 and u.k == 3
    res = is_nst(rng.normal(size=(5, 2)))
    assert not res.ok and res.orthonormality > 0 and res.row_norms > 0
    with pytest.raises(ValueError):
        NstMatrix(rng.normal(size=(5, 2)))


@pytest.mark.parametrize("n", range(2, 9))
def test_nst_harmonic(n):
    for k in range(1, n + 1):
        assert nst_harmonic(n, k).v.shape == (n, k)


def test_build_irreducible_balanced_n3():
    z = build_irreducible(3, 1, nst_k1(3)).entries
    expected = (np.ones((3, 3)) - np.eye(3)) / math.sqrt(6)
    assert np.allclose(z, expected, atol=1e-14)
    assert dissonance(z) == pytest.approx(-1 / math.sqrt(6), abs=1e-12)


def test_build_irreducible_ngon3():
    z = build_irreducible(3, 2, nst_k2(3, [0, math.pi / 3, 2 * math.pi / 3])).entries
    expected = np.array([[0, 1, -1], [1, 0, 1], [-1, 1, 0]]) / math.sqrt(6)
    assert np.allclose(z, expected, atol=1e-12)
    assert classify(z).witness == (0, 1, 2)


@pytest.mark.parametrize("n", range(3, 9))
def test_ngon_matches_oracle(n):
    z = build_irreducible(n, 2, nst_k2(n, regular_ngon_angles(n))).entries
    assert np.allclose(z, ngon_matrix(n), atol=1e-12)


def test_n4_cyclic():
    z = build_irreducible(4, 2, nst_k2(4, regular_ngon_angles(4))).entries
    assert dissonance(z) == pytest.approx(0.0, abs=1e-14)
    assert residual(z) < 1e-9
    assert classify(z).kind is VerdictKind.UNBALANCED
    # displayed form with entries 1/4; D = 0 so any scaling stays an equilibrium
    c = 0.25 * np.array([[0, 1, 0, -1], [1, 0, 1, 0], [0, 1, 0, 1], [-1, 0, 1, 0]])
    assert residual(c) < 1e-9
    assert np.linalg.norm(c) == pytest.approx(1 / math.sqrt(2))
    assert np.allclose(z, math.sqrt(2) * c, atol=1e-12)


def test_equilibrium_dissonance_values():
    assert equilibrium_dissonance(10, 1) == pytest.approx(-8 / math.sqrt(90))
    assert equilibrium_dissonance(10, 3) == pytest.approx(-0.2760262, abs=1e-7)
    for n in (2, 4, 6, 8):
        assert equilibrium_dissonance(n, n // 2) == 0.0


def test_irreducible_pq_zero_diagonal():
    for n in range(2, 9):
        for k in range(1, n):
            p, q = irreducible_pq(n, k)
            assert p * k == pytest.approx(q * n)


@pytest.mark.parametrize("n", range(3, 9))
def test_irreducible_with_random_orthogonal_rotation(n, rng):
    for k in range(1, n):
        v = nst_harmonic(n, k).v @ random_orthogonal(rng, k)
        z = build_irreducible(n, k, v)
        assert residual(z) < 1e-9
        assert np.allclose(np.linalg.eigvalsh(z.entries), equilibrium_eigenvalues(n, k),
                           atol=1e-9)


def test_build_irreducible_errors():
    with pytest.raises(ValueError):
        build_irreducible(4, 2, nst_k1(4))
    with pytest.raises(ValueError):
        irreducible_pq(4, 4)


def test_block_coefficients_roundtrip():
    for a, b in [(0.1, 0.2), (-0.3, 0.5), (0.0, 0.25)]:
        assert alpha_beta(*block_coefficients(a, b)) == pytest.approx((a, b))
    with pytest.raises(ValueError):
        block_coefficients(0.1, -1.0)


def test_single_block_n4_k1():
    spec, z = build_reducible([(4, 1, nst_k1(4))])
    assert spec.alpha == pytest.approx(1 / math.sqrt(12))
    b = spec.blocks[0]
    assert b.beta == pytest.approx(0.25)
    assert b.p == pytest.approx(math.sqrt(4 / 3))
    assert b.q == pytest.approx(math.sqrt(1 / 3) - 1 / math.sqrt(12))
    assert (b.p, b.q) == pytest.approx(irreducible_pq(4, 1))


@pytest.mark.parametrize("n", range(3, 9))
def test_single_block_reproduces_irreducible(n):
    for k in range(1, n):
        if 2 * k == n:
            continue
        v = nst_harmonic(n, k)
        _, z = build_reducible([(n, k, v)])
        assert np.abs(z.entries - build_irreducible(n, k, v).entries).max() < 1e-10


def test_two_block_cases():
    spec, z = build_reducible([(3, 1, nst_k1(3)), (3, 1, nst_k1(3, [1, -1, 1]))])
    assert residual(z) < 1e-9
    assert np.linalg.norm(z.entries) == pytest.approx(1.0)
    spec, z = build_reducible([(2, 1, nst_k1(2)), (2, 1, nst_k1(2, [1, -1]))],
                              betas=[0.25, 0.25])
    assert spec.epsilon == 0 and spec.alpha == 0.0
    assert residual(z) < 1e-9
    spec, z = build_reducible([(3, 1, nst_k1(3)), (3, 1, nst_k1(3)), (2, 0, None)],
                              permutation=[7, 0, 1, 2, 3, 4, 5, 6])
    assert residual(z) < 1e-9
    assert classify(z).kind is VerdictKind.COMPONENTS
    assert np.all(z.entries[[5, 6]] == 0)
    payload = json.loads(spec.to_json())
    assert set(payload) == {"epsilon", "alpha", "blocks", "permutation"}
    assert payload["blocks"][2]["V"] is None


def test_build_reducible_errors():
    with pytest.raises(ValueError, match="differs"):
        build_reducible([(3, 1, nst_k1(3)), (3, 2, nst_k2(3, regular_ngon_angles(3)))])
    with pytest.raises(ValueError, match="must be 1"):
        build_reducible([(2, 1, nst_k1(2)), (2, 1, nst_k1(2))], betas=[0.25, 0.3])
    with pytest.raises(ValueError):
        build_reducible([(2, 1, nst_k1(2))])
    with pytest.raises(ValueError, match="hint"):
        build_reducible([(3, 1, nst_k1(3))], epsilon_hint=-1)
    with pytest.raises(ValueError):
        EquilibriumBlock(3, 1, nst_k1(3).v, 1.0, 1.0, 0.1)


def test_residual_random_matrix(rng):
    z = random_symmetric_zd(rng, 6, unit=True)
    assert residual(z) > 1e-3


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_enumerate_balanced(n):
    eqs = list(enumerate_balanced(n, n))
    assert len(eqs) == 2 ** (n - 1)
    assert len({z.entries.tobytes() for z in eqs}) == len(eqs)
    for z in eqs:
        assert residual(z) < 1e-12
        if n >= 3:
            assert classify(z).balanced


def test_instability_certificate():
    z = next(iter(enumerate_balanced(5, 5))).entries
    assert instability_certificate(z) < 0
    assert instability_certificate(-z) == pytest.approx(23 * 3 / math.sqrt(20), rel=1e-12)
    assert instability_certificate(-z) == pytest.approx(15.42887, abs=1e-5)
    zero_d = build_irreducible(4, 2, nst_harmonic(4, 2)).entries
    assert instability_certificate(zero_d) == pytest.approx(0.0, abs=1e-12)
    padded = next(iter(enumerate_balanced(3, 5))).entries
    assert instability_certificate(-padded) == pytest.approx(9 * 1 / math.sqrt(6), rel=1e-12)
    with pytest.raises(ValueError):
        instability_certificate(ngon_matrix(5) + 0.01)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 8), st.data())
def test_irreducible_properties(n, data):
    k = data.draw(st.integers(1, n - 1))
    z = build_irreducible(n, k, nst_harmonic(n, k)).entries
    assert np.allclose(z, z.T) and np.all(np.diag(z) == 0)
    assert np.linalg.norm(z) == pytest.approx(1.0, abs=1e-12)
    assert dissonance(z) == pytest.approx(equilibrium_dissonance(n, k), abs=1e-10)
