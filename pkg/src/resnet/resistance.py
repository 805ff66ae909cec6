"""Dipoles, monopoles, free and wired effective resistance.

Free values come from plain truncations, wired values from truncations
whose exterior has been collapsed to a ground vertex.  On an exhaustion
the free sequence decreases and the wired sequence increases.
"""

from __future__ import annotations

import io
import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import SameVertex
from .network import Exhaustion, Network
from .operators import GroundedSystem, apply_laplacian, delta, energy

MONOTONE_SLACK = 1e-9
BRACKET_REL_TOL = 1e-3


def _vertex(net: Network, x) -> int:
    return net.index(x)


def dipole_solve(net: Network, x, y) -> np.ndarray:
    """v with Lap v = delta_x - delta_y and v(y) = 0.

    Any ground marked on ``net`` is treated as an ordinary vertex.
    """
    xi, yi = _vertex(net, x), _vertex(net, y)
    if xi == yi:
        raise SameVertex(f"dipole endpoints coincide ({x!r})")
    gs = GroundedSystem(net, yi)
    return gs.extend(gs.solve(delta(gs.size, gs.position(xi))))


def free_resistance(net: Network, x, y) -> float:
    """Effective resistance between x and y on the finite network: E(v)."""
    if _vertex(net, x) == _vertex(net, y):
        return 0.0
    return energy(net, dipole_solve(net, x, y))


def effective_resistance(net: Network, x, y) -> float:
    """Same value as :func:`free_resistance`, read off as v(x) - v(y)."""
    xi, yi = _vertex(net, x), _vertex(net, y)
    if xi == yi:
        return 0.0
    v = dipole_solve(net, xi, yi)
    return float(v[xi] - v[yi])


def free_resistance_at_depth(ex: Exhaustion, k: int, x: str, y: str) -> float:
    net = ex.truncation(k)
    return free_resistance(net, ex.locate(net, x), ex.locate(net, y))


def wired_resistance_at_depth(ex: Exhaustion, k: int, x: str, y: str) -> float:
    net = ex.wired(k)
    return free_resistance(net, ex.locate(net, x), ex.locate(net, y))


@dataclass
class ResistanceBracket:
    x: str
    y: str
    depths: list[int]
    wired_values: list[float]
    free_values: list[float]
    rel_tol: float = BRACKET_REL_TOL
    notes: list[str] = field(default_factory=list)

    @property
    def gaps(self) -> list[float]:
        return [f - w for w, f in zip(self.wired_values, self.free_values)]

    @property
    def converged(self) -> bool:
        """Closed when (free - wired) / free < rel_tol at the final depth."""
        f, w = self.free_values[-1], self.wired_values[-1]
        return f > 0 and (f - w) / f < self.rel_tol

    @property
    def monotone(self) -> bool:
        w, f = np.array(self.wired_values), np.array(self.free_values)
        return bool(np.all(np.diff(w) >= -MONOTONE_SLACK)
                    and np.all(np.diff(f) <= MONOTONE_SLACK)
                    and np.all(w <= f + MONOTONE_SLACK))

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["depth", "wired", "free", "gap"])
        for k, w, f, g in zip(self.depths, self.wired_values, self.free_values, self.gaps):
            out.writerow([k, repr(w), repr(f), repr(g)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "depths": self.depths,
                "wired": self.wired_values, "free": self.free_values, "gap": self.gaps,
                "converged": self.converged, "monotone": self.monotone,
                "rel_tol": self.rel_tol, "notes": self.notes}


def _threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("RESNET_THREADS", "1") or 1)
    return max(1, threads)


def resistance_bracket(ex: Exhaustion, x: str, y: str, depths, *,
                       rel_tol: float = BRACKET_REL_TOL,
                       threads: int | None = None) -> ResistanceBracket:
    """Wired (lower) and free (upper) resistance at each depth."""
    depths = [int(k) for k in depths]
    if any(b <= a for a, b in zip(depths, depths[1:])):
        raise ValueError("depths must be strictly increasing")

    def one(k):
        return (wired_resistance_at_depth(ex, k, x, y), free_resistance_at_depth(ex, k, x, y))

    with ThreadPoolExecutor(_threads(threads)) as pool:
        pairs = list(pool.map(one, depths))
    br = ResistanceBracket(x, y, depths, [p[0] for p in pairs], [p[1] for p in pairs], rel_tol)
    if not br.monotone:
        br.notes.append("monotonicity violated beyond solver slack")
    if not br.converged:
        br.notes.append("bracket open at final depth: free and wired limits reported separately")
    return br


@dataclass(frozen=True)
class MonopoleSolution:
    network: Network
    center: int
    values: np.ndarray
    energy: float


def monopole_solve(ex: Exhaustion, k: int, x: str) -> MonopoleSolution:
    """Grounded monopole at ``x`` on the wired truncation of depth ``k``.

    ``values`` vanish at the ground; the energy equals ``values[x]``.
    """
    net = ex.wired(k)
    xi = ex.locate(net, x)
    gs = GroundedSystem(net)
    w = gs.monopole(xi)
    return MonopoleSolution(net, xi, w, energy(net, w))


def boundary_vertices(ex: Exhaustion, k: int) -> np.ndarray:
    """Vertices of truncation k that have a neighbour in truncation k + 1 outside it."""
    wired = ex.wired(k)
    if wired.ground is None:
        return np.zeros(0, dtype=np.int64)
    g = wired.ground
    inner = ex.truncation(k)
    touching = np.concatenate([wired.u[wired.v == g], wired.v[wired.u == g]])
    return np.array(sorted(inner.index(wired.label(int(t))) for t in touching), dtype=np.int64)


def harmonic_extension(net: Network, boundary, values) -> np.ndarray:
    """The function equal to ``values`` on ``boundary`` and harmonic elsewhere."""
    boundary = np.asarray(boundary, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    if boundary.size == 0:
        raise ValueError("harmonic extension needs a nonempty boundary")
    from scipy.sparse.linalg import spsolve
    from .operators import laplacian
    L = laplacian(net)
    interior = np.setdiff1d(np.arange(net.n), boundary)
    h = np.zeros(net.n)
    h[boundary] = values
    if interior.size:
        rhs = -L[interior][:, boundary] @ values
        A = L[interior][:, interior].tocsc()
        h[interior] = spsolve(A, rhs) if interior.size > 1 else rhs / A.toarray()[0, 0]
    return h


def royden_split(ex: Exhaustion, k: int, u) -> tuple[np.ndarray, np.ndarray]:
    """Split ``u`` on truncation k into (fin, harm).

    ``harm`` agrees with ``u`` on the depth-k boundary and is harmonic
    inside; ``fin = u - harm`` vanishes on the boundary, so the two are
    energy-orthogonal.
    """
    net = ex.truncation(k)
    u = np.asarray(u, dtype=float)
    bd = boundary_vertices(ex, k)
    if bd.size == 0:
        harm = np.full(net.n, u[net.origin])
    else:
        harm = harmonic_extension(net, bd, u[bd])
    return u - harm, harm


def sup_norm_bound_check(ex: Exhaustion, k: int, x: str) -> tuple[float, float]:
    """(sup |f_x|, free R(x, o)) at depth k.

    f_x solves Lap f = delta_x - delta_o on the wired truncation with
    f(o) = 0; by the maximum principle sup |f_x| = f_x(x), the wired
    resistance, which never exceeds the free one.
    """
    wired = ex.wired(k)
    origin_label = wired.label(wired.origin)
    f = dipole_solve(wired, ex.locate(wired, x), wired.origin)
    free = free_resistance_at_depth(ex, k, x, origin_label)
    return float(np.max(np.abs(f))), free


def check_monopole(net: Network, w, center: int) -> float:
    """max |Lap w - delta_center| over non-ground vertices."""
    r = apply_laplacian(net, w) - delta(net.n, center)
    if net.ground is not None:
        r[net.ground] = 0.0
    return float(np.max(np.abs(r)))
