"""Acceptance suite: nine criteria, each printing one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the terminal summary.  ``python3 tests/test_acceptance.py`` runs them
without pytest.
"""

import itertools
import math
import time
import warnings

import numpy as np

from resnet import lattice as lat
from resnet import network as nw
from resnet import operators as ops
from resnet import resistance as res
from resnet import spectral as spec
from resnet import walk
from resnet.errors import EmptyBoundary

REPORT: list[str] = []

TREE_GAP = 3 - 2 * math.sqrt(2)
TREE_BOUND = 11.657


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    REPORT.append(line)
    print(line)


def rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(float(np.max(np.abs(b), initial=0.0)), 1e-300)
    return float(np.max(np.abs(a - b), initial=0.0)) / scale


_FIXTURES: list[nw.Network] = []


def fixtures() -> list[nw.Network]:
    """25 random connected networks, 10 <= n <= 60, conductances in [0.1, 10]."""
    if not _FIXTURES:
        sizes = np.random.default_rng(2024).integers(10, 61, size=25)
        _FIXTURES.extend(nw.random_connected(int(n), seed) for seed, n in enumerate(sizes))
    return _FIXTURES


# 1 -----------------------------------------------------------------------------

def identity_deviations(net: nw.Network, seed: int) -> dict[str, float]:
    gs = ops.grounded(net)
    M, L = gs.green, gs.dense
    free = gs.free
    rng = np.random.default_rng(seed)
    out = {}

    W = np.zeros((net.n, net.n))
    W[:, free] = np.array([gs.monopole(x) for x in free]).T
    LW = np.array([ops.apply_laplacian(net, W[:, x]) for x in free]).T
    out["kronecker"] = rel(LW[free], np.eye(gs.size))

    A = net.adjacency.toarray()
    ripple = np.array([net.conductance(x) * W[:, x] - W @ A[x] for x in free]).T
    out["ripple"] = rel(ripple, np.eye(net.n)[:, free])

    iso = inter = comm = 0.0
    for _ in range(3):
        xi, eta = rng.standard_normal(gs.size), rng.standard_normal(gs.size)
        u, v = ops.phi_map(gs, xi), ops.phi_map(gs, eta)
        iso = max(iso, rel(ops.energy(net, u), xi @ M @ xi))
        inter = max(inter, abs(ops.energy(net, u, gs.apply(v)) - xi @ eta)
                    / (np.linalg.norm(xi) * np.linalg.norm(eta)))
        comm = max(comm, rel(gs.apply(u), ops.phi_map(gs, L @ xi)))
    out["isometry"], out["intertwining"], out["commutation"] = iso, inter, comm

    eye = np.eye(gs.size)
    out["green"] = max(rel(L @ M, eye), rel(M @ L, eye))
    out["energy_delta"] = rel([ops.energy(net, ops.delta(net.n, x)) for x in range(net.n)],
                              net.total_conductance)

    ex = nw.from_file(net)
    roy = 0.0
    for k in (1, 2):
        sub = ex.truncation(k)
        with warnings.catch_warnings():
            # a hop ball that already covers the network has no boundary
            warnings.simplefilter("ignore", EmptyBoundary)
            empty = res.boundary_vertices(ex, k).size == 0
        if empty:
            continue
        u = rng.standard_normal(sub.n)
        fin, harm = res.royden_split(ex, k, u)
        roy = max(roy, rel(ops.energy(sub, fin) + ops.energy(sub, harm), ops.energy(sub, u)),
                  abs(ops.energy(sub, fin, harm)) / ops.energy(sub, u))
    out["royden"] = roy
    return out


def test_criterion_1_identity_suite():
    t0 = time.perf_counter()
    worst: dict[str, float] = {}
    for i, net in enumerate(fixtures()):
        for name, dev in identity_deviations(net, i).items():
            worst[name] = max(worst.get(name, 0.0), dev)
    elapsed = time.perf_counter() - t0
    ok = all(v <= 1e-9 for v in worst.values()) and elapsed < 30
    summary = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(1, ok, f"worst relative deviations: {summary}; {elapsed:.1f}s")
    assert ok


# 2 -----------------------------------------------------------------------------

def test_criterion_2_spectral_resolution():
    t0 = time.perf_counter()
    rn_worst = mom_worst = 0.0
    sizes = [40, 60, 80, 100, 120, 140, 160, 180, 200, 200]
    for seed, n in enumerate(sizes):
        gs = ops.grounded(nw.random_connected(n, 100 + seed))
        xi = np.random.default_rng(seed).standard_normal(gs.size)
        rn_worst = max(rn_worst, spec.radon_nikodym_check(gs, xi))
        rows = spec.moment_identity_check(gs, xi, n_max=6)
        assert [r.n for r in rows] == list(range(7))
        mom_worst = max(mom_worst, max(r.deviation for r in rows))
    elapsed = time.perf_counter() - t0
    ok = rn_worst < 1e-9 and mom_worst < 1e-8 and elapsed < 60
    report(2, ok, f"Radon-Nikodym {rn_worst:.1e} (< 1e-9), moments n=0..6 {mom_worst:.1e} "
                  f"(< 1e-8) on 10 systems n<=200; {elapsed:.1f}s")
    assert ok


# 3 -----------------------------------------------------------------------------

def test_criterion_3_spectral_resistance():
    worst, pairs = 0.0, 0
    for net in fixtures():
        gs = ops.grounded(net)
        for x, y in itertools.combinations(range(net.n), 2):
            worst = max(worst, rel(spec.spectral_resistance(gs, x, y),
                                   spec.green_resistance(gs, x, y)))
            pairs += 1
    ok = worst <= 1e-9
    report(3, ok, f"spectral vs Green resistance over {pairs} pairs: worst relative {worst:.1e}")
    assert ok


# 4 -----------------------------------------------------------------------------

LATTICE_CASES = [  # d, exact value, tolerance, truncation depth
    (1, 1.0, 1e-6, 50),
    (2, 0.5, 1e-3, 12),
    (3, 1 / 3, 1e-3, 12),
]


def test_criterion_4_lattice_values():
    t0 = time.perf_counter()
    parts, ok = [], True
    for d, value, tol, depth in LATTICE_CASES:
        o, e1 = [0] * d, [1] + [0] * (d - 1)
        rep = lat.lattice_resistance(d, o, e1)
        trunc = lat.truncation_resistance(d, o, e1, depth)
        good = rep.converged and abs(rep.value - value) <= tol and abs(trunc - rep.value) < 0.02
        ok &= good
        parts.append(f"d={d} quadrature {rep.value:.7f} wired(depth {depth}) {trunc:.5f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    report(4, ok, "; ".join(parts) + f"; factor-4 integrand; {elapsed:.1f}s")
    assert ok


# 5 -----------------------------------------------------------------------------

def test_criterion_5_polya():
    t0 = time.perf_counter()
    parts, ok = [], True
    for d in (1, 2):
        t = lat.transience_probe(d)
        good = t.verdict == "recurrent" and t.monotone and len(t.values) == 4
        ok &= good
        parts.append(f"d={d} recurrent, increments {', '.join(f'{i:.3g}' for i in t.increments)}")
    for d in (3, 4):
        t = lat.transience_probe(d)
        good = t.verdict == "transient" and abs(t.increments[-1]) < 1e-3
        ok &= good
        parts.append(f"d={d} transient, last increment {t.increments[-1]:.1e}")
    quad = lat.monopole_energy(3)
    _, extrap = lat.truncation_monopole_energy(3, [8, 12, 16, 20])
    agree = abs(quad.value - extrap) / quad.value
    ok &= quad.converged and agree < 0.01 and abs(quad.value - 0.2527) < 5e-4
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    parts.append(f"E(w_o) d=3 quadrature {quad.value:.6f} vs truncation {extrap:.6f} "
                 f"({agree:.2%} apart)")
    report(5, ok, "; ".join(parts) + f"; {elapsed:.1f}s")
    assert ok


# 6 -----------------------------------------------------------------------------

def tree_free_resistance_exact(rng) -> float:
    worst = 0.0
    for k in range(1, 13):
        net = nw.binary_tree(k)
        if net.n <= 600:
            gs = ops.grounded(net, net.origin)
            M = np.zeros((net.n, net.n))
            M[np.ix_(gs.free, gs.free)] = gs.green
            dg = np.diag(M)
            R = dg[:, None] + dg[None, :] - 2 * M
            D = np.array([net.hop_distances(i) for i in range(net.n)])
            worst = max(worst, float(np.max(np.abs(R - D))))
        else:
            for _ in range(12):
                x, y = rng.choice(net.n, size=2, replace=False)
                dist = net.hop_distances(int(x))[y]
                worst = max(worst, abs(res.free_resistance(net, int(x), int(y)) - dist) / dist)
    return worst


def test_criterion_6_binary_tree():
    t0 = time.perf_counter()
    net = nw.binary_tree(12)
    w = 2.0 ** -np.array([len(net.label(i)) for i in range(net.n)])
    interior = np.array([len(net.label(i)) < 12 for i in range(net.n)])
    defect = float(np.max(np.abs(ops.apply_laplacian(net, w) - ops.delta(net.n, net.origin))
                          [interior]))
    ok_a = defect <= 1e-10

    rng = np.random.default_rng(6)
    dist_dev = tree_free_resistance_exact(rng)
    ok_b = dist_dev <= 1e-8

    gaps = spec.dirichlet_gap(nw.tree(), [6, 9, 12]).values
    ok_c = gaps[0] > gaps[1] > gaps[2] and 0.1716 <= gaps[2] <= 0.30

    wired = nw.tree().wired(12)
    inner = [i for i in range(wired.n) if i != wired.ground]
    leaves = [i for i in inner if len(wired.label(i)) == 12]
    pairs = [(wired.origin, int(y)) for y in rng.choice(inner, 40, replace=False)]
    pairs += [tuple(int(v) for v in rng.choice(leaves, 2, replace=False)) for _ in range(40)]
    pairs.append((wired.index("0" * 12), wired.index("1" * 12)))
    rw = [res.free_resistance(wired, x, y) for x, y in pairs]
    ok_d = max(rw) <= TREE_BOUND

    elapsed = time.perf_counter() - t0
    ok = ok_a and ok_b and ok_c and ok_d and elapsed < 120
    report(6, ok, f"(a) monopole defect {defect:.1e}; (b) |R - distance| {dist_dev:.1e} on depths "
                  f"1..12; (c) gaps {gaps[0]:.5f} > {gaps[1]:.5f} > {gaps[2]:.5f} "
                  f"(limit {TREE_GAP:.5f}); (d) max wired R over {len(rw)} pairs "
                  f"{max(rw):.4f} <= {TREE_BOUND}; {elapsed:.1f}s")
    assert ok


# 7 -----------------------------------------------------------------------------

def test_criterion_7_walk_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for net in fixtures():
        for x in range(1, net.n):
            worst = max(worst, rel(walk.resistance_via_walk(net, 0, x),
                                   res.free_resistance(net, x, 0)))
    z2 = nw.lattice(2).wired(6)
    cases = {
        "P3": (nw.path(3), 0, 2, ()),
        "K3": (nw.complete(3), 0, 1, ()),
        "wired Z2 depth 6": (z2, z2.index("0,0"), z2.index("2,0"), (z2.ground,)),
    }
    cover = {}
    for name, (net, o, x, absorbing) in cases.items():
        exact = walk.hitting_probability_exact(net, o, x, absorbing)
        cover[name] = sum(
            walk.hitting_probability_mc(net, o, x, 100_000, seed=s, absorbing=absorbing)
            .covers(exact) for s in range(100))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and all(c >= 97 for c in cover.values()) and elapsed < 180
    report(7, ok, f"exact identity worst relative {worst:.1e}; MC 3*ci95 coverage "
                  + ", ".join(f"{k} {v}/100" for k, v in cover.items()) + f"; {elapsed:.1f}s")
    assert ok


# 8 -----------------------------------------------------------------------------

def test_criterion_8_bracketing():
    t0 = time.perf_counter()
    z2 = res.resistance_bracket(nw.lattice(2), "0,0", "1,0", [4, 8, 16])
    ok_z2 = (z2.monotone and z2.gaps[-1] < 0.02
             and z2.wired_values[-1] <= 0.5 <= z2.free_values[-1])
    tr = res.resistance_bracket(nw.tree(), "", "0", [4, 8, 12])
    ok_tr = (np.allclose(tr.free_values, 1.0, atol=1e-9)
             and all(w < 0.95 for w in tr.wired_values) and not tr.converged)
    elapsed = time.perf_counter() - t0
    ok = ok_z2 and ok_tr and elapsed < 120
    report(8, ok, f"Z2 depth 16 [{z2.wired_values[-1]:.5f}, {z2.free_values[-1]:.5f}] width "
                  f"{z2.gaps[-1]:.4f}; tree free {tr.free_values}, wired max "
                  f"{max(tr.wired_values):.5f} (open bracket); {elapsed:.1f}s")
    assert ok


# 9 -----------------------------------------------------------------------------

def test_criterion_9_norm_lower_bound():
    margin = math.inf
    for net in fixtures():
        gs = ops.grounded(net, net.origin)
        M = np.zeros((net.n, net.n))
        M[np.ix_(gs.free, gs.free)] = gs.green
        dg = np.diag(M)
        R = dg[:, None] + dg[None, :] - 2 * M
        off = R[~np.eye(net.n, dtype=bool)]
        margin = min(margin, float(off.min() - 2.0 / spec.operator_norm(net)))
    ok = margin >= 0
    report(9, ok, f"min over all pairs of R(x,y) - 2/lambda_max = {margin:.4e}")
    assert ok


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
