"""Laplacian, energy form, grounded systems, the Gram matrix and the Phi map.

Vertex functions are plain float arrays of length ``net.n``.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
import scipy.linalg
from scipy import sparse

from .errors import LengthMismatch, SingularMatrix, SupportTouchesGround, UnknownVertex
from .network import Network
from .solvers import CgConfig, SpectralDecomposition, cg_solve, dense_eig

DENSE_GREEN_CAP = 2000


def _as_function(net: Network, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (net.n,):
        raise LengthMismatch(f"expected a function on {net.n} vertices, got shape {u.shape}")
    return u


def delta(n: int, x: int) -> np.ndarray:
    e = np.zeros(n)
    e[x] = 1.0
    return e


def laplacian(net: Network) -> sparse.csr_matrix:
    """Full Laplacian: diag c(x), off-diagonal -c_xy.  Rows sum to zero."""
    return (sparse.diags(net.total_conductance) - net.adjacency).tocsr()


def apply_laplacian(net: Network, u) -> np.ndarray:
    """(Lap u)(x) = sum_y c_xy (u(x) - u(y)) at every vertex, ground included."""
    u = _as_function(net, u)
    du = net.c * (u[net.u] - u[net.v])
    out = np.zeros(net.n)
    np.add.at(out, net.u, du)
    np.add.at(out, net.v, -du)
    return out


def energy(net: Network, u, v=None) -> float:
    """Energy bilinear form, one pass over undirected edges."""
    u = _as_function(net, u)
    v = u if v is None else _as_function(net, v)
    return float(np.sum(net.c * (u[net.u] - u[net.v]) * (v[net.u] - v[net.v])))


def summation_by_parts_check(net: Network, u, v) -> tuple[float, float]:
    """Return ``(E(u, v), <u, Lap v>)``; the two agree on any finite network."""
    u = _as_function(net, u)
    return energy(net, u, v), float(u @ apply_laplacian(net, v))


class GroundedSystem:
    """The Laplacian with the ground row and column removed.

    Reduced vectors are indexed by ``free`` (all vertices except the ground,
    in increasing id order).  ``green`` is the dense inverse, i.e. the Gram
    matrix of the grounded monopoles, materialised only for small systems.
    """

    def __init__(self, net: Network, ground: int | None = None):
        g = net.ground if ground is None else ground
        if g is None:
            raise SingularMatrix("network has no ground; the Laplacian is singular")
        if not 0 <= g < net.n:
            raise UnknownVertex(f"ground {g} not a vertex")
        self.host = net
        self.ground = int(g)
        self.free = np.delete(np.arange(net.n), self.ground)
        full = laplacian(net)
        self.matrix = full[self.free][:, self.free].tocsr()
        self._pos = -np.ones(net.n, dtype=np.int64)
        self._pos[self.free] = np.arange(self.free.size)

    @property
    def size(self) -> int:
        return int(self.free.size)

    def position(self, x: int) -> int:
        """Reduced index of vertex ``x``."""
        if x == self.ground:
            raise SupportTouchesGround(f"vertex {x} is the ground")
        return int(self._pos[x])

    def restrict(self, u) -> np.ndarray:
        return np.asarray(u, dtype=float)[self.free]

    def extend(self, xi) -> np.ndarray:
        """Reduced vector -> vertex function vanishing at the ground."""
        out = np.zeros(self.host.n)
        out[self.free] = xi
        return out

    def reduced(self, xi) -> np.ndarray:
        """Accept a reduced vector or a full one that vanishes at the ground."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape == (self.size,):
            return xi
        if xi.shape == (self.host.n,):
            if xi[self.ground] != 0:
                raise SupportTouchesGround("vector is supported on the ground vertex")
            return xi[self.free]
        raise LengthMismatch(f"vector of shape {xi.shape} fits neither {self.size} nor "
                             f"{self.host.n}")

    @cached_property
    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @cached_property
    def _cholesky(self):
        try:
            return scipy.linalg.cho_factor(self.dense, lower=True)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrix("grounded Laplacian is not positive definite") from exc

    @cached_property
    def green(self) -> np.ndarray:
        if self.size > DENSE_GREEN_CAP:
            raise MemoryError(f"dense Green matrix capped at n={DENSE_GREEN_CAP}")
        m = scipy.linalg.cho_solve(self._cholesky, np.eye(self.size))
        return 0.5 * (m + m.T)

    @cached_property
    def spectrum(self) -> SpectralDecomposition:
        return dense_eig(self.dense)

    def apply(self, u) -> np.ndarray:
        """Dirichlet Laplacian on vertex functions vanishing at the ground."""
        return self.extend(self.matrix @ self.reduced(u))

    def solve(self, b) -> np.ndarray:
        """Reduced solve of ``L_g x = b``."""
        b = np.asarray(b, dtype=float)
        if self.size <= DENSE_GREEN_CAP:
            return scipy.linalg.cho_solve(self._cholesky, b)
        return cg_solve(self.matrix, b, CgConfig()).x

    def green_column(self, x: int) -> np.ndarray:
        """Reduced column of M for vertex ``x``, by solve when M is not materialised."""
        if "green" in self.__dict__:
            return self.green[:, self.position(x)]
        return self.solve(delta(self.size, self.position(x)))

    def monopole(self, x: int) -> np.ndarray:
        """w_x: Lap w_x = delta_x off the ground, w_x(ground) = 0."""
        return self.extend(self.green_column(x))


def grounded(net: Network, ground: int | None = None) -> GroundedSystem:
    return GroundedSystem(net, ground)


def gram_matrix(gs: GroundedSystem) -> np.ndarray:
    """M = inverse of the grounded Laplacian; M[i, j] = E(w_i, w_j)."""
    return gs.green


def phi_map(gs: GroundedSystem, xi) -> np.ndarray:
    """Phi(xi) = sum_x xi(x) w_x, as a vertex function vanishing at the ground."""
    return gs.extend(gs.solve(gs.reduced(xi)))


def to_matrix_market(A) -> str:
    """MatrixMarket coordinate text, for debugging."""
    import io
    import scipy.io
    buf = io.BytesIO()
    scipy.io.mmwrite(buf, sparse.coo_matrix(A))
    return buf.getvalue().decode()
