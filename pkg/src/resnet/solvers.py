"""Conjugate gradient, dense symmetric eigensolver and Lanczos.

All operators may be dense arrays, scipy sparse matrices or anything
``scipy.sparse.linalg.aslinearoperator`` accepts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import aslinearoperator

from .errors import DimensionCap, MaxIterExceeded, NotSpd

log = logging.getLogger(__name__)

DENSE_EIG_CAP = 4000
FLOOR_CHECK_EVERY = 50
FLOOR_FACTOR = 16


@dataclass(frozen=True)
class CgConfig:
    rel_tol: float = 1e-10
    max_iter: int | None = None  # None means 10 n
    preconditioner: str = "jacobi"

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.preconditioner not in ("none", "jacobi"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass(frozen=True)
class CgResult:
    x: np.ndarray
    iterations: int
    residual: float  # ||b - A x|| / ||b||
    floor_limited: bool = False  # stopped at the rounding floor above rel_tol


def _at_rounding_floor(A, x, b, r) -> bool:
    """Normwise backward error ||r|| / (||A|| ||x|| + ||b||) within rounding.

    A wired boundary vertex can touch thousands of edges; the rounding
    noise of its row puts a floor under the attainable relative residual.
    Below this bound x solves a system within rounding of the given one.
    """
    if sparse.issparse(A):
        norm_a = float(abs(A).sum(axis=1).max())
    elif isinstance(A, np.ndarray):
        norm_a = float(np.abs(A).sum(axis=1).max())
    else:
        return False
    bound = FLOOR_FACTOR * np.finfo(float).eps * (norm_a * np.linalg.norm(x) + np.linalg.norm(b))
    return float(np.linalg.norm(r)) <= bound


def _diagonal(A, n: int) -> np.ndarray | None:
    if sparse.issparse(A):
        return np.asarray(A.diagonal(), dtype=float)
    if isinstance(A, np.ndarray):
        return np.diag(A).astype(float)
    return None


def cg_solve(A, b, cfg: CgConfig | None = None) -> CgResult:
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    Raises NotSpd on nonpositive curvature and MaxIterExceeded (carrying
    the best iterate) when the tolerance is not met in time.
    """
    cfg = cfg or CgConfig()
    b = np.asarray(b, dtype=float)
    n = b.size
    op = aslinearoperator(A)
    max_iter = cfg.max_iter or 10 * n
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return CgResult(np.zeros(n), 0, 0.0)

    inv_diag = None
    if cfg.preconditioner == "jacobi":
        diag = _diagonal(A, n)
        if diag is not None:
            if np.any(diag <= 0):
                raise NotSpd("nonpositive diagonal entry")
            inv_diag = 1.0 / diag

    def precondition(r):
        return r * inv_diag if inv_diag is not None else r

    x = np.zeros(n)
    r = b.copy()
    z = precondition(r)
    p = z.copy()
    rz = r @ z
    best_x, best_res = x.copy(), 1.0
    restarts = 0
    for it in range(1, max_iter + 1):
        ap = op.matvec(p)
        curv = p @ ap
        if not curv > 0:
            raise NotSpd(f"nonpositive curvature p'Ap = {curv:.3e} at iteration {it}")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * ap
        if np.linalg.norm(r) / bnorm <= cfg.rel_tol:
            # the recursive residual drifts; confirm against the true one
            r = b - op.matvec(x)
            res = np.linalg.norm(r) / bnorm
            if res < best_res:
                best_x, best_res = x.copy(), res
            if res <= cfg.rel_tol:
                return CgResult(x, it, res)
            if _at_rounding_floor(A, x, b, r):
                log.debug("CG stopped at rounding floor, residual %.3e", res)
                return CgResult(x, it, res, floor_limited=True)
            restarts += 1
            if restarts > 3:
                break
            z = precondition(r)
            p = z.copy()
            rz = r @ z
            continue
        if it % FLOOR_CHECK_EVERY == 0:
            # a stagnating recursive residual may never reach rel_tol
            true_r = b - op.matvec(x)
            res = np.linalg.norm(true_r) / bnorm
            if res < best_res:
                best_x, best_res = x.copy(), res
            if res <= cfg.rel_tol:
                return CgResult(x, it, res)
            if _at_rounding_floor(A, x, b, true_r):
                log.debug("CG stopped at rounding floor, residual %.3e", res)
                return CgResult(x, it, res, floor_limited=True)
        z = precondition(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    else:
        res = np.linalg.norm(b - op.matvec(x)) / bnorm
        if res < best_res:
            best_x, best_res = x.copy(), res
    raise MaxIterExceeded(f"CG did not reach {cfg.rel_tol:g} within {max_iter} iterations "
                          f"(best residual {best_res:.3e})", x=best_x, residual=best_res)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return int(self.eigenvalues.size)

    def coefficients(self, xi) -> np.ndarray:
        """Coordinates of ``xi`` in the eigenbasis."""
        return self.eigenvectors.T @ np.asarray(xi, dtype=float)

    def apply(self, fn, xi) -> np.ndarray:
        """f(A) xi through the eigenbasis."""
        return self.eigenvectors @ (fn(self.eigenvalues) * self.coefficients(xi))


def dense_eig(A) -> SpectralDecomposition:
    """Full eigendecomposition of a symmetric matrix (LAPACK ``syevd``)."""
    if sparse.issparse(A):
        A = A.toarray()
    A = np.asarray(A, dtype=float)
    if A.shape[0] > DENSE_EIG_CAP:
        raise DimensionCap(f"dense eigendecomposition capped at n={DENSE_EIG_CAP}")
    if A.shape[0] == 0:
        return SpectralDecomposition(np.zeros(0), np.zeros((0, 0)))
    lam, vec = np.linalg.eigh(0.5 * (A + A.T))
    return SpectralDecomposition(lam, vec)


@dataclass(frozen=True)
class LanczosResult:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int
    restarts: int


def lanczos(A, iters: int | None = None, seed: int = 0, tol: float = 1e-10) -> LanczosResult:
    """Smallest Ritz pair of symmetric ``A`` by Lanczos with full reorthogonalization.

    Stops once the Ritz residual ``|beta_j s_j|`` drops below ``tol`` times
    the largest Ritz value.  An invariant subspace is handled by restarting
    with a fresh random vector orthogonal to the current basis.
    """
    op = aslinearoperator(A)
    n = op.shape[0]
    m = n if iters is None else min(int(iters), n)
    rng = np.random.default_rng(seed)
    Q = np.zeros((n, m))
    alpha = np.zeros(m)
    beta = np.zeros(m)
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    restarts = 0
    theta, s, j = np.inf, None, 0
    for j in range(m):
        Q[:, j] = q
        w = op.matvec(q)
        alpha[j] = q @ w
        w -= Q[:, :j + 1] @ (Q[:, :j + 1].T @ w)
        w -= Q[:, :j + 1] @ (Q[:, :j + 1].T @ w)
        b = np.linalg.norm(w)
        T_vals, T_vecs = _tridiag_eig(alpha[:j + 1], beta[:j])
        theta, s = T_vals[0], T_vecs[:, 0]
        scale = max(abs(T_vals[0]), abs(T_vals[-1]), 1e-300)
        resid = abs(b * s[-1])
        if j + 1 == n or (resid <= tol * scale and j >= 1):
            break
        if b <= 1e-12 * scale:
            # invariant subspace: continue with a fresh orthogonal direction
            restarts += 1
            log.debug("lanczos breakdown at step %d; restarting", j)
            q = rng.standard_normal(n)
            for _ in range(2):
                q -= Q[:, :j + 1] @ (Q[:, :j + 1].T @ q)
            q /= np.linalg.norm(q)
            beta[j] = 0.0
        else:
            beta[j] = b
            q = w / b
    k = j + 1
    vec = Q[:, :k] @ s
    resid = float(np.linalg.norm(op.matvec(vec) - theta * vec))
    return LanczosResult(float(theta), vec, resid, k, restarts)


def _tridiag_eig(a: np.ndarray, b: np.ndarray):
    from scipy.linalg import eigh_tridiagonal
    if a.size == 1:
        return a.copy(), np.ones((1, 1))
    return eigh_tridiagonal(a, b)


def lanczos_smallest(A, iters: int | None = None, seed: int = 0, tol: float = 1e-10) -> float:
    """Estimate of the smallest eigenvalue of symmetric ``A`` (a Ritz upper bound)."""
    if iters is not None and iters < 1:
        raise ValueError("iters must be positive")
    return lanczos(A, iters=iters, seed=seed, tol=tol).value
