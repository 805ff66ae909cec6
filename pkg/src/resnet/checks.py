"""Invariant suite run by ``resnet verify``.

Every check runs on small stock fixtures and reports the worst deviation
it saw against a fixed tolerance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import lattice as lat
from . import network as nw
from . import operators as ops
from . import resistance as res
from . import solvers
from . import spectral as spec
from . import walk

MODULES = ("network", "operators", "solvers", "resistance", "spectral", "lattice", "walk")


@dataclass
class CheckResult:
    module: str
    name: str
    passed: bool
    worst: float
    tol: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"module": self.module, "name": self.name, "passed": self.passed,
                "worst": self.worst, "tol": self.tol, "detail": self.detail}


@dataclass
class Fixtures:
    seeds: tuple[int, ...] = tuple(range(6))
    size: int = 30
    fault: str | None = None
    _cache: dict = field(default_factory=dict)

    def random(self) -> list[nw.Network]:
        if "random" not in self._cache:
            self._cache["random"] = [nw.random_connected(self.size, s) for s in self.seeds]
        return self._cache["random"]

    def solver_network(self, net: nw.Network) -> nw.Network:
        """Network used to assemble grounded systems; perturbed under a fault."""
        if self.fault != "perturbed-conductance":
            return net
        c = net.c.copy()
        c[0] *= 1.01
        return nw.Network(net.n, net.u, net.v, c, net.origin, net.ground, net.labels)


_REGISTRY: list[tuple[str, str, float, Callable]] = []


def check(module: str, name: str, tol: float):
    def deco(fn):
        _REGISTRY.append((module, name, tol, fn))
        return fn
    return deco


def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(float(np.max(np.abs(a), initial=0)), float(np.max(np.abs(b), initial=0)), 1e-300)
    return float(np.max(np.abs(a - b), initial=0)) / scale


# network ---------------------------------------------------------------------

def _exhaustions():
    return [nw.lattice(1), nw.lattice(2), nw.lattice(3), nw.tree(),
            nw.product(nw.tree(), nw.lattice(1))]


@check("network", "truncations nested and connected", 0.0)
def _nesting(fx):
    bad = 0
    for ex in _exhaustions():
        for k in range(1, 4):
            a, b = ex.truncation(k), ex.truncation(k + 1)
            ids = [b.index(a.label(i)) for i in range(a.n)]
            sub = nw.induced_subnetwork(b, ids)
            ea = sorted((a.label(u), a.label(v), c) for u, v, c in a.edges)
            eb = sorted((sub.label(u), sub.label(v), c) for u, v, c in sub.edges)
            ea = sorted(tuple(sorted(e[:2])) + (e[2],) for e in ea)
            eb = sorted(tuple(sorted(e[:2])) + (e[2],) for e in eb)
            bad += ea != eb
    return float(bad)


@check("network", "collapse conserves boundary conductance", 1e-12)
def _collapse(fx):
    worst = 0.0
    for ex in _exhaustions():
        for k in (1, 2, 3):
            outer, wired = ex.truncation(k + 1), ex.wired(k)
            keep = {outer.index(ex.truncation(k).label(i)) for i in range(ex.truncation(k).n)}
            cut = sum(c for u, v, c in outer.edges if (u in keep) != (v in keep))
            g = wired.ground
            to_ground = wired.c[(wired.u == g) | (wired.v == g)].sum()
            worst = max(worst, abs(cut - to_ground))
    return worst


@check("network", "net conductance equals Laplacian diagonal", 1e-12)
def _diag(fx):
    return max(float(np.max(np.abs(ops.laplacian(n).diagonal()
                                   - [nw.net_conductance(n, x) for x in range(n.n)])))
               for n in fx.random())


@check("network", "complete graph expands more than path", 0.0)
def _expansion(fx):
    bad = 0
    for d, n in itertools.product((2, 3, 4), (3, 4, 6)):
        bad += nw.expansion_constant(nw.complete(d + 1)) < nw.expansion_constant(nw.path(n))
    return float(bad)


# operators -------------------------------------------------------------------

def _systems(fx):
    for net in fx.random():
        yield net, ops.grounded(fx.solver_network(net))


@check("operators", "Kronecker: Lap w_x = delta_x", 1e-10)
def _kronecker(fx):
    worst = 0.0
    for net, gs in _systems(fx):
        M = gs.green
        for j, x in enumerate(gs.free):
            lw = ops.apply_laplacian(net, gs.extend(M[:, j]))
            worst = max(worst, float(np.max(np.abs(lw[gs.free] - ops.delta(net.n, x)[gs.free]))))
    return worst


@check("operators", "ripple: delta_x = c(x) w_x - sum c_xy w_y", 1e-10)
def _ripple(fx):
    worst = 0.0
    for net, gs in _systems(fx):
        W = np.zeros((net.n, net.n))
        W[:, gs.free] = np.array([gs.monopole(x) for x in gs.free]).T
        A = net.adjacency.toarray()
        for x in gs.free:
            lhs = net.conductance(x) * W[:, x] - W @ A[x]
            worst = max(worst, float(np.max(np.abs(lhs - ops.delta(net.n, x)))))
    return worst


def _random_vectors(gs, seed, k=3):
    rng = np.random.default_rng(seed)
    return [rng.standard_normal(gs.size) for _ in range(k)]


@check("operators", "isometry: E(Phi xi) = xi' M xi", 1e-10)
def _isometry(fx):
    worst = 0.0
    for i, (net, gs) in enumerate(_systems(fx)):
        for xi in _random_vectors(gs, i):
            worst = max(worst, _rel(ops.energy(net, ops.phi_map(gs, xi)), xi @ gs.green @ xi))
    return worst


@check("operators", "intertwining: E(Phi xi, Lap Phi eta) = <xi, eta>", 1e-10)
def _intertwining(fx):
    worst = 0.0
    for i, (net, gs) in enumerate(_systems(fx)):
        xi, eta, _ = _random_vectors(gs, 100 + i)
        lhs = ops.energy(net, ops.phi_map(gs, xi), gs.apply(ops.phi_map(gs, eta)))
        worst = max(worst, abs(lhs - xi @ eta) / (np.linalg.norm(xi) * np.linalg.norm(eta)))
    return worst


@check("operators", "commutation: Lap Phi xi = Phi Lap xi", 1e-10)
def _commutation(fx):
    worst = 0.0
    for i, (net, gs) in enumerate(_systems(fx)):
        xi = _random_vectors(gs, 200 + i, 1)[0]
        lhs = gs.apply(ops.phi_map(gs, xi))
        rhs = ops.phi_map(gs, gs.matrix @ xi)
        worst = max(worst, _rel(lhs, rhs))
    return worst


@check("operators", "positivity: E(Phi xi, Lap Phi xi) = |xi|^2 >= 0", 1e-10)
def _positivity(fx):
    worst = 0.0
    for i, (net, gs) in enumerate(_systems(fx)):
        xi = _random_vectors(gs, 300 + i, 1)[0]
        u = ops.phi_map(gs, xi)
        val = ops.energy(net, u, gs.apply(u))
        if val < 0:
            return math.inf
        worst = max(worst, abs(val - xi @ xi) / (xi @ xi))
    return worst


@check("operators", "Green: L M = M L = I", 1e-10)
def _green(fx):
    worst = 0.0
    for net, gs in _systems(fx):
        L, M = gs.dense, gs.green
        eye = np.eye(gs.size)
        worst = max(worst, float(np.max(np.abs(L @ M - eye))), float(np.max(np.abs(M @ L - eye))))
    return worst


@check("operators", "E(delta_x) = c(x)", 1e-12)
def _energy_delta(fx):
    return max(_rel([ops.energy(n, ops.delta(n.n, x)) for x in range(n.n)], n.total_conductance)
               for n in fx.random())


@check("operators", "summation by parts: E(u, v) = <u, Lap v>", 1e-12)
def _sbp(fx):
    worst = 0.0
    for i, net in enumerate(fx.random()):
        rng = np.random.default_rng(400 + i)
        a, b = ops.summation_by_parts_check(net, rng.standard_normal(net.n),
                                            rng.standard_normal(net.n))
        worst = max(worst, _rel(a, b))
    return worst


# solvers -----------------------------------------------------------------------

@check("solvers", "CG agrees with the dense inverse", 1e-8)
def _cg(fx):
    worst = 0.0
    for i, (net, gs) in enumerate(_systems(fx)):
        b = _random_vectors(gs, 500 + i, 1)[0]
        x = solvers.cg_solve(gs.matrix, b).x
        worst = max(worst, _rel(x, gs.green @ b))
    return worst


@check("solvers", "eigendecomposition reconstructs and is orthonormal", 1e-8)
def _eig(fx):
    worst = 0.0
    for net, gs in _systems(fx):
        e = gs.spectrum
        V = e.eigenvectors
        recon = np.linalg.norm(V @ np.diag(e.eigenvalues) @ V.T - gs.dense) / np.linalg.norm(gs.dense)
        orth = float(np.max(np.abs(V.T @ V - np.eye(gs.size))))
        worst = max(worst, recon, orth * 1e-2)
        if e.eigenvalues[0] <= 0:
            return math.inf
    return worst


@check("solvers", "Lanczos matches the smallest dense eigenvalue", 1e-6)
def _lanczos(fx):
    worst = 0.0
    for i, (net, gs) in enumerate(_systems(fx)):
        theta = solvers.lanczos_smallest(gs.matrix, seed=i)
        worst = max(worst, _rel(theta, gs.spectrum.eigenvalues[0]))
    return worst


# resistance --------------------------------------------------------------------

def _resistance_matrix(net):
    gs = ops.grounded(net, net.origin)
    M = np.zeros((net.n, net.n))
    M[np.ix_(gs.free, gs.free)] = gs.green
    d = np.diag(M)
    return d[:, None] + d[None, :] - 2 * M


@check("resistance", "resistance is a metric", 1e-9)
def _metric(fx):
    worst = 0.0
    for net in fx.random()[:3]:
        R = _resistance_matrix(net)
        tri = R[:, :, None] + R[None, :, :] - R[:, None, :]  # R(x,y)+R(y,z)-R(x,z)
        worst = max(worst, -float(tri.min()), float(np.max(np.abs(R - R.T))),
                    float(np.max(np.abs(np.diag(R)))))
        off = R[~np.eye(net.n, dtype=bool)]
        if off.min() <= 0:
            return math.inf
    return worst


@check("resistance", "R(x, y) >= 2 / lambda_max on finite networks", 0.0)
def _lower_bound(fx):
    worst = 0.0
    for net in fx.random():
        R = _resistance_matrix(net)
        bound = 2.0 / spec.operator_norm(net)
        off = R[~np.eye(net.n, dtype=bool)]
        worst = max(worst, float(bound - off.min()))
    return max(worst, 0.0)


@check("resistance", "bracket monotone with wired <= free", 0.0)
def _bracket(fx):
    bad = 0
    for ex, x, y in [(nw.lattice(2), "0,0", "1,0"), (nw.tree(), "", "0"),
                     (nw.lattice(1), "0", "2")]:
        bad += not res.resistance_bracket(ex, x, y, [2, 3, 4, 6]).monotone
    return float(bad)


@check("resistance", "dipole difference law", 1e-10)
def _dipole_law(fx):
    worst = 0.0
    for net in fx.random()[:3]:
        o, x, y = net.origin, 1, 2
        lhs = res.dipole_solve(net, x, y)
        rhs = res.dipole_solve(net, x, o) - res.dipole_solve(net, y, o)
        diff = lhs - rhs
        worst = max(worst, float(np.ptp(diff)) / max(np.ptp(lhs), 1e-300))
    return worst


@check("resistance", "Royden split is energy-orthogonal", 1e-8)
def _royden(fx):
    worst = 0.0
    rng = np.random.default_rng(7)
    for ex, k in [(nw.lattice(2), 4), (nw.tree(), 4)]:
        net = ex.truncation(k)
        u = rng.standard_normal(net.n)
        fin, harm = res.royden_split(ex, k, u)
        worst = max(worst, _rel(ops.energy(net, u), ops.energy(net, fin) + ops.energy(net, harm)))
    return worst


@check("resistance", "sup |f_x| <= R^F(x, o)", 1e-10)
def _sup(fx):
    worst = 0.0
    for ex, k, x in [(nw.lattice(2), 4, "1,0"), (nw.tree(), 5, "01")]:
        s, r = res.sup_norm_bound_check(ex, k, x)
        worst = max(worst, s - r)
    return max(worst, 0.0)


# spectral ----------------------------------------------------------------------

@check("spectral", "resolution of identity", 1e-10)
def _identity(fx):
    worst = 0.0
    for i, (net, gs) in enumerate(_systems(fx)):
        xi = _random_vectors(gs, 600 + i, 1)[0]
        worst = max(worst, _rel(spec.spectral_measure(gs, xi).total, xi @ xi))
    return worst


@check("spectral", "spectral resistance equals Green resistance", 1e-9)
def _spec_res(fx):
    worst = 0.0
    for net, gs in _systems(fx):
        for x, y in [(gs.free[0], gs.free[-1]), (gs.free[1], gs.ground)]:
            worst = max(worst, _rel(spec.spectral_resistance(gs, x, y),
                                    spec.green_resistance(gs, x, y)))
    return worst


@check("spectral", "Radon-Nikodym: lambda dmu_E = dmu_l2", 1e-9)
def _rn(fx):
    return max(spec.radon_nikodym_check(gs, _random_vectors(gs, 700 + i, 1)[0])
               for i, (net, gs) in enumerate(_systems(fx)))


@check("spectral", "resistance <= 2 / gamma on grounded systems", 1e-12)
def _gap_bound(fx):
    worst = 0.0
    for net, gs in _systems(fx):
        gamma = gs.spectrum.eigenvalues[0]
        bound = spec.gap_resistance_bound(gamma)
        for x, y in itertools.combinations(gs.free[:10], 2):
            worst = max(worst, spec.spectral_resistance(gs, x, y) - bound)
    return max(worst, 0.0)


@check("spectral", "Dirichlet gap non-increasing in depth", 1e-9)
def _dirichlet(fx):
    worst = 0.0
    for ex in (nw.tree(), nw.lattice(2)):
        vals = spec.dirichlet_gap(ex, [2, 3, 5]).values
        worst = max(worst, max(b - a for a, b in zip(vals, vals[1:])))
    return max(worst, 0.0)


@check("spectral", "|L^-1/2 xi|^2 = E(Phi xi)", 1e-9)
def _inv_sqrt(fx):
    worst = 0.0
    for i, (net, gs) in enumerate(_systems(fx)):
        chk = spec.inverse_sqrt_energy(gs, _random_vectors(gs, 800 + i, 1)[0])
        worst = max(worst, chk.deviation, chk.bochner_deviation)
    return worst


# lattice -----------------------------------------------------------------------

@check("lattice", "symbol vanishes only at t = 0", 0.0)
def _symbol(fx):
    bad = 0
    for d in (1, 2, 3):
        ax = np.linspace(-np.pi, np.pi, 9)[1:]
        pts = np.array(list(itertools.product(ax, repeat=d)))
        s = lat.symbol(pts)
        zero = np.all(np.abs(pts) < 1e-15, axis=1)
        bad += int(np.any(s[~zero] <= 0)) + int(np.any(s[zero] != 0))
    return float(bad)


@check("lattice", "resistance symmetric and translation/permutation invariant", 1e-9)
def _lat_sym(fx):
    q = lat.TorusQuadrature(3, nodes=32)
    base = lat.lattice_resistance(3, (0, 0, 0), (2, 1, 0), q, strict=False).value
    variants = [((2, 1, 0), (0, 0, 0)), ((1, 1, 1), (3, 2, 1)), ((0, 0, 0), (0, 1, 2)),
                ((0, 0, 0), (-2, 0, 1))]
    return max(abs(lat.lattice_resistance(3, a, b, q, strict=False).value - base)
               for a, b in variants)


@check("lattice", "E(w_o) = w_o(0) in d = 3", 1e-6)
def _lat_energy(fx):
    return abs(lat.monopole_energy(3).value - lat.lattice_monopole_value(3).value)


@check("lattice", "Fourier Kronecker: 6 w_o(0) - 6 w_o(e_1) = 1", 1e-6)
def _lat_kron(fx):
    q = lat.TorusQuadrature(3, nodes=64)
    w0 = lat.lattice_monopole_value(3, None, q, strict=False).value
    w1 = lat.lattice_monopole_value(3, (1, 0, 0), q, strict=False).value
    return abs(6 * w0 - 6 * w1 - 1)


@check("lattice", "quadrature converges before reporting", 0.0)
def _lat_conv(fx):
    reps = [lat.lattice_resistance(2, (0, 0), (1, 1), strict=False),
            lat.lattice_monopole_value(3, strict=False),
            lat.lattice_dipole_value(2, (1, 0), (2, 1), strict=False)]
    return float(sum(not r.converged for r in reps))


# walk --------------------------------------------------------------------------

@check("walk", "detailed balance c(x) p(x,y) = c(y) p(y,x)", 1e-12)
def _balance(fx):
    return max(walk.detailed_balance_defect(n) for n in fx.random())


@check("walk", "R(x, o) = 1 / (c(o) P[o -> x])", 1e-9)
def _walk_identity(fx):
    worst = 0.0
    for net in fx.random():
        x = net.n - 1
        worst = max(worst, _rel(walk.resistance_via_walk(net, net.origin, x),
                                res.free_resistance(net, x, net.origin)))
    return worst


@check("walk", "Monte Carlo reproducible for a fixed seed", 0.0)
def _mc_repro(fx):
    net = nw.complete(3)
    a = walk.hitting_probability_mc(net, 0, 1, 2000, seed=11)
    b = walk.hitting_probability_mc(net, 0, 1, 2000, seed=11, threads=3)
    return float(a != b)


@check("walk", "truncated fraction vanishes as the step cap grows", 0.0)
def _mc_trunc(fx):
    net = nw.path(12)
    fr = [walk.hitting_probability_mc(net, 0, 11, 2000, step_cap=cap, seed=3).truncated_fraction
          for cap in (5, 50, 5000)]
    return float(not (fr[0] >= fr[1] >= fr[2] and fr[2] == 0.0))


def run(modules=None, fault: str | None = None) -> list[CheckResult]:
    fx = Fixtures(fault=fault)
    out = []
    for module, name, tol, fn in _REGISTRY:
        if modules and module not in modules:
            continue
        try:
            worst = float(fn(fx))
            out.append(CheckResult(module, name, bool(worst <= tol), worst, tol))
        except Exception as exc:  # a crashing check is a failing check
            out.append(CheckResult(module, name, False, math.inf, tol,
                                   f"{type(exc).__name__}: {exc}"))
    return out
