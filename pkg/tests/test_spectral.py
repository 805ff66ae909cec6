import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resnet import network as nw
from resnet import operators as ops
from resnet import spectral as spec
from resnet.errors import NonpositiveGap


@pytest.fixture
def gk3(k3):
    return ops.grounded(k3, 2)


def test_measure_k3(gk3):
    mu = spec.spectral_measure(gk3, [1, 0])
    assert np.allclose(mu.lambdas, [1, 3]) and np.allclose(mu.masses, [0.5, 0.5])
    assert mu.total == pytest.approx(1)


def test_measure_eigenvector_and_zero(gk3):
    v = gk3.spectrum.eigenvectors[:, 1]
    mu = spec.spectral_measure(gk3, v)
    assert len(mu.atoms) == 1 and mu.total == pytest.approx(1)
    mu0 = spec.spectral_measure(gk3, [0, 0])
    assert mu0.total == 0 and mu0.atoms == []


def test_degenerate_eigenvalues_merge():
    gs = ops.grounded(nw.complete(5), 4)  # grounded K5 has eigenvalue 5 three times
    mu = spec.spectral_measure(gs, np.arange(1.0, 5.0))
    assert len(mu.atoms) == 2
    assert mu.total == pytest.approx(30.0)


def test_measure_csv(gk3):
    lines = spec.spectral_measure(gk3, [1, 0]).to_csv().splitlines()
    assert lines[0] == "lambda,mass" and len(lines) == 3


def test_moment_examples(gk3):
    rows = spec.moment_identity_check(gk3, [1, 0], n_max=3)
    assert rows[0].lhs == pytest.approx(1) and rows[0].rhs == pytest.approx(1)
    assert rows[1].lhs == pytest.approx(2) and rows[1].rhs == pytest.approx(2)
    assert all(r.deviation < 1e-12 for r in rows)
    assert all(r.lhs == 0 and r.rhs == 0 for r in spec.moment_identity_check(gk3, [0, 0]))
    with pytest.raises(ValueError):
        spec.moment_identity_check(gk3, [1, 0], n_max=9)


def test_radon_nikodym_examples(gk3, rng):
    assert spec.radon_nikodym_check(gk3, [1, 0]) < 1e-10
    assert spec.radon_nikodym_check(gk3, gk3.spectrum.eigenvectors[:, 0]) < 1e-10
    gp = ops.grounded(nw.path(10), 9)
    assert spec.radon_nikodym_check(gp, rng.standard_normal(9)) < 1e-9


def test_energy_measure_matches(gk3):
    mu_e = spec.energy_measure(gk3, [1, 0])
    mu = spec.spectral_measure(gk3, [1, 0])
    assert np.allclose(mu_e.lambdas * mu_e.masses, mu.masses)


def test_spectral_resistance_examples(gk3):
    assert spec.spectral_resistance(gk3, 0, 1) == pytest.approx(2 / 3)
    assert spec.spectral_resistance(gk3, 0, 0) == 0
    net = nw.lattice(2).wired(8)
    gs = ops.grounded(net)
    r = spec.spectral_resistance(gs, net.index("0,0"), net.index("1,0"))
    assert abs(r - 0.5) < 0.02


def test_dirichlet_gap_tree():
    study = spec.dirichlet_gap(nw.tree(), [6, 9, 12])
    v = study.values
    assert v[0] > v[1] > v[2] > 3 - 2 * math.sqrt(2)
    assert study.monotone and study.to_csv().startswith("depth,lambda_min")


@pytest.mark.parametrize("d, depths", [(1, [8, 16, 32]), (2, [4, 8, 16])])
def test_dirichlet_gap_lattice_to_zero(d, depths):
    v = spec.dirichlet_gap(nw.lattice(d), depths).values
    assert v[0] > v[1] > v[2] and v[2] < v[0] / 3


def test_dirichlet_gap_z1_oracle():
    # wired Z^1 ball k: a path of 2k+1 interior vertices with both ends grounded
    k = 16
    m = 2 * k + 1
    oracle = 4 * math.sin(math.pi / (2 * (m + 1))) ** 2
    assert spec.dirichlet_lambda_min(nw.lattice(1), k)[0] == pytest.approx(oracle, rel=1e-8)


def test_gap_bound_examples():
    assert spec.gap_resistance_bound(3 - 2 * math.sqrt(2)) == pytest.approx(6 + 4 * math.sqrt(2))
    assert spec.gap_resistance_bound(2) == 1
    with pytest.raises(NonpositiveGap):
        spec.gap_resistance_bound(0)


def test_inverse_sqrt_examples(gk3):
    chk = spec.inverse_sqrt_energy(gk3, [1, 0])
    assert chk.value == pytest.approx(2 / 3) and chk.energy == pytest.approx(2 / 3)
    gs = ops.grounded(nw.complete(4), 3)  # eigenvalues 1, 4, 4
    v = gs.spectrum.eigenvectors[:, -1] * 3
    assert spec.inverse_sqrt_energy(gs, v).value == pytest.approx(9 / 4)
    assert spec.bochner_inverse_sqrt(1.0) == pytest.approx(1.0, abs=1e-6)


def test_operator_norm(k3):
    assert spec.operator_norm(k3) == pytest.approx(3)


@settings(max_examples=20, deadline=None)
@given(st.integers(4, 40), st.integers(0, 10_000))
def test_spectral_properties(n, seed):
    net = nw.random_connected(n, seed)
    gs = ops.grounded(net)
    xi = np.random.default_rng(seed).standard_normal(gs.size)
    mu = spec.spectral_measure(gs, xi)
    assert mu.total == pytest.approx(xi @ xi, rel=1e-10)
    assert np.all(mu.lambdas > 0)
    assert spec.radon_nikodym_check(gs, xi) < 1e-9
    x, y = int(gs.free[0]), int(gs.free[-1])
    assert spec.spectral_resistance(gs, x, y) == pytest.approx(
        spec.green_resistance(gs, x, y), rel=1e-9)
