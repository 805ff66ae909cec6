"""The reversible random walk p(x, y) = c_xy / c(x): escape probabilities
exactly and by simulation, and the escape/resistance identity."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .errors import IsolatedVertex, SameVertex
from .network import Network

CHUNK_EPISODES = 8192
Z95 = 1.959963984540054


def transition_matrix(net: Network) -> sparse.csr_matrix:
    c = net.total_conductance
    if np.any(c <= 0):
        raise IsolatedVertex("a vertex has no neighbours")
    return sparse.diags(1.0 / c) @ net.adjacency


def transition_prob(net: Network, x: int, y: int) -> float:
    c = net.conductance(x)
    if c <= 0:
        raise IsolatedVertex(f"vertex {x} has no neighbours")
    net._check_vertex(y)
    return float(net.adjacency[x, y]) / c


def _endpoints(net, o, x, absorbing):
    o, x = net.index(o), net.index(x)
    if o == x:
        raise SameVertex("start and target coincide")
    absorbing = sorted({net.index(a) for a in absorbing} - {o, x})
    return o, x, absorbing


def hitting_probability_exact(net: Network, o, x, absorbing=()) -> float:
    """P[o -> x]: probability that the walk from o hits x before returning to o.

    Vertices in ``absorbing`` kill the walk (counted as failure).  Solved
    on the chain itself: h = P h off the stopping set, h(x) = 1, h = 0 on
    o and the absorbing set.
    """
    o, x, absorbing = _endpoints(net, o, x, absorbing)
    P = transition_matrix(net)
    stop = np.zeros(net.n, dtype=bool)
    stop[[o, x, *absorbing]] = True
    free = np.flatnonzero(~stop)
    h = np.zeros(net.n)
    h[x] = 1.0
    if free.size:
        A = sparse.identity(free.size, format="csc") - P[free][:, free].tocsc()
        rhs = np.asarray(P[free][:, [x]].todense()).ravel()
        h[free] = spsolve(A, rhs) if free.size > 1 else rhs / A.toarray()[0, 0]
    return float(np.asarray(P[o] @ h).ravel()[0])


def resistance_via_walk(net: Network, o, x) -> float:
    """1 / (c(o) P[o -> x]), the free resistance between o and x."""
    o_id = net.index(o)
    return 1.0 / (net.conductance(o_id) * hitting_probability_exact(net, o, x))


@dataclass(frozen=True)
class WalkEstimate:
    p_hat: float
    episodes: int
    successes: int
    failures: int
    truncated: int
    seed: int

    @property
    def ci95(self) -> float:
        """Normal-approximation half width over the terminated episodes."""
        m = self.episodes - self.truncated
        if m == 0:
            return math.inf
        return Z95 * math.sqrt(self.p_hat * (1 - self.p_hat) / m)

    @property
    def truncated_fraction(self) -> float:
        return self.truncated / self.episodes

    def covers(self, value: float, k: float = 3.0) -> bool:
        return abs(self.p_hat - value) <= k * self.ci95

    def to_dict(self) -> dict:
        return {"p_hat": self.p_hat, "ci95": self.ci95, "episodes": self.episodes,
                "successes": self.successes, "failures": self.failures,
                "truncated": self.truncated, "seed": self.seed}


class _Sampler:
    """Vectorised next-step sampling from CSR rows of cumulative probabilities."""

    def __init__(self, net: Network):
        P = transition_matrix(net).tocsr()
        P.sort_indices()
        self.indptr, self.indices = P.indptr, P.indices
        row = np.repeat(np.arange(net.n), np.diff(P.indptr))
        cum = np.zeros_like(P.data)
        for r in range(net.n):
            a, b = P.indptr[r], P.indptr[r + 1]
            cum[a:b] = np.cumsum(P.data[a:b])
            cum[b - 1] = 1.0
        self.keys = row + cum

    def step(self, pos: np.ndarray, u: np.ndarray) -> np.ndarray:
        k = np.searchsorted(self.keys, pos + u, side="right")
        k = np.minimum(k, self.indptr[pos + 1] - 1)
        return self.indices[k]


def _run_chunk(sampler, o, x, stop_fail, n_ep, step_cap, seed, chunk):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))
    pos = np.full(n_ep, o, dtype=np.int64)
    alive = np.arange(n_ep)
    succ = fail = 0
    for _ in range(step_cap):
        if alive.size == 0:
            break
        nxt = sampler.step(pos[alive], rng.random(alive.size))
        hit = nxt == x
        dead = stop_fail[nxt]
        succ += int(hit.sum())
        fail += int(dead.sum())
        keep = ~(hit | dead)
        alive = alive[keep]
        pos[alive] = nxt[keep]
    return succ, fail, int(alive.size)


def hitting_probability_mc(net: Network, o, x, episodes: int = 100_000,
                           step_cap: int = 10_000, seed: int = 0, absorbing=(),
                           threads: int | None = None) -> WalkEstimate:
    """Monte Carlo estimate of P[o -> x].

    Episodes end on hitting x (success), returning to o or entering an
    absorbing vertex (failure), or after ``step_cap`` steps (truncated,
    excluded from the estimate).  Episodes are grouped in fixed chunks and
    chunk ``i`` draws from a Philox stream keyed by ``(seed, i)``, so the
    result does not depend on the thread count.
    """
    if episodes < 1:
        raise ValueError("episodes must be positive")
    o, x, absorbing = _endpoints(net, o, x, absorbing)
    sampler = _Sampler(net)
    stop_fail = np.zeros(net.n, dtype=bool)
    stop_fail[[o, *absorbing]] = True
    sizes = [min(CHUNK_EPISODES, episodes - s) for s in range(0, episodes, CHUNK_EPISODES)]
    if threads is None:
        threads = int(os.environ.get("RESNET_THREADS", "1") or 1)
    with ThreadPoolExecutor(max(1, threads)) as pool:
        parts = list(pool.map(lambda a: _run_chunk(sampler, o, x, stop_fail, a[1], step_cap,
                                                   seed, a[0]), enumerate(sizes)))
    succ = sum(p[0] for p in parts)
    fail = sum(p[1] for p in parts)
    trunc = sum(p[2] for p in parts)
    done = episodes - trunc
    p_hat = succ / done if done else math.nan
    return WalkEstimate(p_hat, episodes, succ, fail, trunc, seed)


def detailed_balance_defect(net: Network) -> float:
    """max |c(x) p(x, y) - c(y) p(y, x)|."""
    P = transition_matrix(net)
    F = sparse.diags(net.total_conductance) @ P
    return float(abs(F - F.T).max()) if F.nnz else 0.0
