import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resnet import network as nw
from resnet import operators as ops
from resnet.errors import LengthMismatch, SingularMatrix, SupportTouchesGround


def test_apply_laplacian_examples(p3, k3):
    assert np.allclose(ops.apply_laplacian(p3, [0, 1, 2]), [-1, 0, 1])
    assert np.allclose(ops.apply_laplacian(k3, [1, 0, 0]), [2, -1, -1])
    assert np.allclose(ops.apply_laplacian(k3, np.full(3, 4.2)), 0)


def test_laplacian_structure(rng):
    net = nw.random_connected(25, 3)
    L = ops.laplacian(net)
    assert np.allclose(np.asarray(L.sum(axis=1)).ravel(), 0)
    deg = np.diff(net.adjacency.indptr)
    assert np.array_equal(np.diff(L.indptr), deg + 1)


def test_energy_examples(p3):
    assert ops.energy(p3, [0, 1, 2]) == 2
    assert ops.energy(p3, ops.delta(3, 1)) == 2
    assert ops.energy(p3, np.ones(3), [5, -1, 3]) == 0


def test_energy_length_mismatch(p3):
    with pytest.raises(LengthMismatch):
        ops.energy(p3, [1, 2])


def test_summation_by_parts_examples(p3, k3, rng):
    assert ops.summation_by_parts_check(p3, [0, 1, 2], ops.delta(3, 1)) == (0.0, 0.0)
    assert ops.summation_by_parts_check(p3, ops.delta(3, 0), ops.delta(3, 0)) == (1.0, 1.0)
    a, b = ops.summation_by_parts_check(k3, rng.standard_normal(3), rng.standard_normal(3))
    assert a == pytest.approx(b, rel=1e-12)


def test_gram_examples(p3, k3):
    assert np.allclose(ops.gram_matrix(ops.grounded(k3, 2)), [[2 / 3, 1 / 3], [1 / 3, 2 / 3]])
    assert np.allclose(ops.gram_matrix(ops.grounded(nw.path(2), 1)), [[1.0]])
    assert np.allclose(ops.gram_matrix(ops.grounded(p3, 2)), [[2, 1], [1, 1]])


def test_phi_examples(p3, k3):
    gs = ops.grounded(k3, 2)
    assert np.allclose(ops.phi_map(gs, [1, 0]), [2 / 3, 1 / 3, 0])
    assert np.allclose(ops.phi_map(gs, [0, 0]), 0)
    assert np.allclose(ops.phi_map(ops.grounded(p3, 2), [1, -1]), [1, 0, 0])


def test_phi_rejects_ground_support(k3):
    gs = ops.grounded(k3, 2)
    with pytest.raises(SupportTouchesGround):
        ops.phi_map(gs, [0, 0, 1])
    with pytest.raises(LengthMismatch):
        ops.phi_map(gs, [1, 0, 0, 0])


def test_no_ground_is_singular(k3):
    with pytest.raises(SingularMatrix):
        ops.grounded(k3)


def test_large_system_uses_cg():
    net = nw.lattice(2).wired(35)  # more than 2000 free vertices
    gs = ops.grounded(net)
    assert gs.size > ops.DENSE_GREEN_CAP
    b = np.zeros(gs.size)
    b[gs.position(net.origin)] = 1.0
    x = gs.solve(b)
    assert np.linalg.norm(gs.matrix @ x - b) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 30), st.integers(0, 10_000))
def test_grounded_identities(n, seed):
    net = nw.random_connected(n, seed)
    gs = ops.grounded(net)
    M = gs.green
    assert np.allclose(gs.dense @ M, np.eye(gs.size), atol=1e-9)
    rng = np.random.default_rng(seed)
    xi, eta = rng.standard_normal(gs.size), rng.standard_normal(gs.size)
    u, v = ops.phi_map(gs, xi), ops.phi_map(gs, eta)
    assert ops.energy(net, u) == pytest.approx(xi @ M @ xi, rel=1e-9)
    assert ops.energy(net, u, gs.apply(v)) == pytest.approx(xi @ eta, rel=1e-8, abs=1e-9)
    assert np.allclose(gs.apply(u), ops.phi_map(gs, gs.matrix @ xi), atol=1e-9)
    for j, x in enumerate(gs.free[:5]):
        lw = ops.apply_laplacian(net, gs.monopole(x))
        assert np.allclose(lw[gs.free], ops.delta(net.n, x)[gs.free], atol=1e-10)


def test_matrix_market(k3):
    text = ops.to_matrix_market(ops.grounded(k3, 2).matrix)
    assert text.startswith("%%MatrixMarket")
