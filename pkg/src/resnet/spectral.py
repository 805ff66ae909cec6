"""Spectral measures of grounded systems, the spectral resistance formula
and Dirichlet estimates of the spectral gap."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy import integrate, sparse

from .errors import NonpositiveGap
from .network import Exhaustion
from .operators import GroundedSystem, energy, phi_map
from .solvers import lanczos

MERGE_TOL = 1e-10


@dataclass(frozen=True)
class DiscreteSpectralMeasure:
    """Atoms ``(lambdas[i], masses[i])``; degenerate eigenvalues are merged."""

    lambdas: np.ndarray
    masses: np.ndarray

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.lambdas.tolist(), self.masses.tolist()))

    def integrate(self, fn) -> float:
        return float(np.sum(fn(self.lambdas) * self.masses))

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["lambda", "mass"])
        for lam, m in self.atoms:
            out.writerow([repr(lam), repr(m)])
        return buf.getvalue()


def _merge(lam: np.ndarray, mass: np.ndarray, floor: float) -> DiscreteSpectralMeasure:
    keep_l, keep_m = [], []
    for l_i, m_i in zip(lam, mass):
        if keep_l and abs(l_i - keep_l[-1]) <= MERGE_TOL * max(1.0, abs(l_i)):
            keep_m[-1] += m_i
        else:
            keep_l.append(float(l_i))
            keep_m.append(float(m_i))
    lam, mass = np.array(keep_l), np.array(keep_m)
    sel = mass > floor
    return DiscreteSpectralMeasure(lam[sel], mass[sel])


def spectral_measure(gs: GroundedSystem, xi) -> DiscreteSpectralMeasure:
    """l2 spectral measure of ``xi``: atoms at eigenvalues, masses |<phi_i, xi>|^2."""
    xi = gs.reduced(xi)
    eig = gs.spectrum
    mass = eig.coefficients(xi) ** 2
    return _merge(eig.eigenvalues, mass, 1e-20 * float(xi @ xi))


def energy_measure(gs: GroundedSystem, xi) -> DiscreteSpectralMeasure:
    """Spectral measure of Phi(xi) in the energy geometry.

    The eigenvectors phi_i of the grounded Laplacian are energy-orthogonal
    with E(phi_i) = lambda_i, so the masses are E(phi_i, Phi xi)^2 / lambda_i.
    Energies are taken edge by edge on the host network.
    """
    xi = gs.reduced(xi)
    eig = gs.spectrum
    u = phi_map(gs, xi)
    net = gs.host
    vecs = np.zeros((net.n, eig.n))
    vecs[gs.free] = eig.eigenvectors
    du = net.c * (u[net.u] - u[net.v])
    e_mixed = du @ (vecs[net.u] - vecs[net.v])
    mass = e_mixed ** 2 / eig.eigenvalues
    return _merge(eig.eigenvalues, mass, 1e-20 * max(energy(net, u), 1e-300))


def radon_nikodym_check(gs: GroundedSystem, xi) -> float:
    """max_i |lambda_i m_i^E - m_i^l2| / ||xi||^2 over all eigenvalues."""
    xi = gs.reduced(xi)
    total = float(xi @ xi)
    if total == 0:
        return 0.0
    eig = gs.spectrum
    l2 = eig.coefficients(xi) ** 2
    u = phi_map(gs, xi)
    net = gs.host
    vecs = np.zeros((net.n, eig.n))
    vecs[gs.free] = eig.eigenvectors
    e_mixed = (net.c * (u[net.u] - u[net.v])) @ (vecs[net.u] - vecs[net.v])
    e_mass = e_mixed ** 2 / eig.eigenvalues
    return float(np.max(np.abs(eig.eigenvalues * e_mass - l2)) / total)


@dataclass(frozen=True)
class MomentRow:
    n: int
    lhs: float
    rhs: float

    @property
    def deviation(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs))
        return 0.0 if scale == 0 else abs(self.lhs - self.rhs) / scale


def moment_identity_check(gs: GroundedSystem, xi, n_max: int = 6) -> list[MomentRow]:
    """Rows (n, E(Phi xi, L^(n+1) Phi xi), <xi, L^n xi>) for n = 0..n_max.

    The left side works on vertex functions in the energy space; the right
    side on reduced vectors in l2.
    """
    if n_max > 8:
        raise ValueError("n_max above 8 is numerically meaningless")
    xi = gs.reduced(xi)
    u = phi_map(gs, xi)
    rows = []
    v = gs.apply(u)
    p = xi.copy()
    for n in range(n_max + 1):
        rows.append(MomentRow(n, energy(gs.host, u, v), float(xi @ p)))
        v = gs.apply(v)
        p = gs.matrix @ p
    return rows


def green_resistance(gs: GroundedSystem, x: int, y: int) -> float:
    """(delta_x - delta_y)' M (delta_x - delta_y) by a linear solve."""
    xi = _pair_vector(gs, x, y)
    if not xi.any():
        return 0.0
    return float(xi @ gs.solve(xi))


def spectral_resistance(gs: GroundedSystem, x: int, y: int) -> float:
    """sum_i |<phi_i, delta_x - delta_y>|^2 / lambda_i.

    A ground endpoint contributes nothing to the l2 vector, which gives
    the resistance to ground.
    """
    xi = _pair_vector(gs, x, y)
    if not xi.any():
        return 0.0
    eig = gs.spectrum
    return float(np.sum(eig.coefficients(xi) ** 2 / eig.eigenvalues))


def _pair_vector(gs: GroundedSystem, x: int, y: int) -> np.ndarray:
    xi = np.zeros(gs.size)
    if x == y:
        return xi
    if x != gs.ground:
        xi[gs.position(x)] += 1.0
    if y != gs.ground:
        xi[gs.position(y)] -= 1.0
    return xi


@dataclass
class GapStudy:
    depths: list[int]
    values: list[float]
    residuals: list[float]

    @property
    def monotone(self) -> bool:
        return all(b <= a + 1e-9 for a, b in zip(self.values, self.values[1:]))

    @property
    def upper_estimate(self) -> float:
        """Smallest computed value; an upper estimate of the gap."""
        return min(self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["depth", "lambda_min"])
        for k, v in zip(self.depths, self.values):
            out.writerow([k, repr(v)])
        return buf.getvalue()


def dirichlet_lambda_min(ex: Exhaustion, k: int, iters: int | None = None,
                         seed: int = 0) -> tuple[float, float]:
    gs = GroundedSystem(ex.wired(k))
    res = lanczos(gs.matrix, iters=iters, seed=seed, tol=1e-10)
    return res.value, res.residual


def dirichlet_gap(ex: Exhaustion, depths, *, iters: int | None = None,
                  seed: int = 0) -> GapStudy:
    """Bottom of the Dirichlet spectrum of each wired truncation.

    Each value bounds the gap of the infinite network from above, and the
    sequence cannot increase with depth.
    """
    depths = [int(k) for k in depths]
    if any(b <= a for a, b in zip(depths, depths[1:])):
        raise ValueError("depths must be strictly increasing")
    vals, res = [], []
    for k in depths:
        v, r = dirichlet_lambda_min(ex, k, iters=iters, seed=seed)
        vals.append(v)
        res.append(r)
    return GapStudy(depths, vals, res)


def gap_resistance_bound(gamma: float) -> float:
    """2 / gamma: bound on wired resistance given spectrum in [gamma, inf)."""
    if not gamma > 0:
        raise NonpositiveGap(f"gap must be positive, got {gamma}")
    return 2.0 / gamma


def bochner_inverse_sqrt(lam: float) -> float:
    """pi^(-1/2) int_0^inf t^(-1/2) exp(-t lam) dt by adaptive quadrature."""
    # t = s^2 removes the endpoint singularity
    val, _ = integrate.quad(lambda s: 2.0 * np.exp(-lam * s * s), 0.0, np.inf,
                            epsabs=1e-13, epsrel=1e-12)
    return val / np.sqrt(np.pi)


@dataclass(frozen=True)
class InverseSqrtCheck:
    spectral: float
    energy: float
    bochner: tuple[tuple[float, float, float], ...]  # (lambda, quadrature, lambda^-1/2)

    @property
    def value(self) -> float:
        return self.spectral

    @property
    def deviation(self) -> float:
        scale = max(abs(self.spectral), abs(self.energy), 1e-300)
        return abs(self.spectral - self.energy) / scale

    @property
    def bochner_deviation(self) -> float:
        return max((abs(q - e) for _, q, e in self.bochner), default=0.0)


def inverse_sqrt_energy(gs: GroundedSystem, xi, samples: int = 3) -> InverseSqrtCheck:
    """||L^(-1/2) xi||^2 through the spectrum, against E(Phi xi)."""
    xi = gs.reduced(xi)
    eig = gs.spectrum
    spec = float(np.sum(eig.coefficients(xi) ** 2 / eig.eigenvalues))
    en = energy(gs.host, phi_map(gs, xi))
    idx = np.unique(np.linspace(0, eig.n - 1, min(samples, eig.n)).round().astype(int))
    boch = tuple((float(eig.eigenvalues[i]), bochner_inverse_sqrt(eig.eigenvalues[i]),
                  float(eig.eigenvalues[i] ** -0.5)) for i in idx)
    return InverseSqrtCheck(spec, en, boch)


def operator_norm(net) -> float:
    """Largest eigenvalue of the ungrounded Laplacian."""
    from .operators import laplacian
    L = laplacian(net)
    if net.n <= 2000:
        return float(np.linalg.eigvalsh(L.toarray())[-1])
    from scipy.sparse.linalg import eigsh
    return float(eigsh(sparse.csr_matrix(L), k=1, which="LA", return_eigenvectors=False)[0])
