"""Weighted networks, standard generators, exhaustions and the wired collapse.

Vertices are dense integer ids.  External identities (lattice coordinates,
tree words) live in ``labels`` so that the same vertex can be found across
truncations of different depth.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .errors import (
    DisconnectedGraph,
    DuplicateEdge,
    EmptyBoundary,
    NonpositiveConductance,
    OriginOutsideKeep,
    SelfLoop,
    TooLargeForExact,
    UnknownVertex,
    VertexOutsideTruncation,
)

GROUND_LABEL = "omega"
EXACT_EXPANSION_CAP = 20


@dataclass(frozen=True, eq=False)
class Network:
    """Finite connected network with symmetric positive conductances.

    Edges are stored once per unordered pair with ``u < v``.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    c: np.ndarray
    origin: int = 0
    ground: int | None = None
    labels: tuple[str, ...] | None = None

    def __repr__(self) -> str:
        return (f"Network(n={self.n}, edges={self.num_edges}, origin={self.origin}, "
                f"ground={self.ground})")

    @property
    def num_edges(self) -> int:
        return int(self.u.size)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(w)) for a, b, w in zip(self.u, self.v, self.c)]

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric conductance matrix ``A[x, y] = c_xy``."""
        rows = np.concatenate([self.u, self.v])
        cols = np.concatenate([self.v, self.u])
        vals = np.concatenate([self.c, self.c])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def total_conductance(self) -> np.ndarray:
        """Vector of net conductances c(x)."""
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def conductance(self, x: int) -> float:
        self._check_vertex(x)
        return float(self.total_conductance[x])

    def neighbors(self, x: int) -> np.ndarray:
        self._check_vertex(x)
        a = self.adjacency
        return a.indices[a.indptr[x]:a.indptr[x + 1]]

    def label(self, x: int) -> str:
        self._check_vertex(x)
        return self.labels[x] if self.labels is not None else str(x)

    @cached_property
    def _label_index(self) -> dict[str, int]:
        if self.labels is None:
            return {str(i): i for i in range(self.n)}
        return {lab: i for i, lab in enumerate(self.labels)}

    def index(self, label: str | int) -> int:
        """Vertex id carrying ``label``; plain ints are taken as ids."""
        if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            self._check_vertex(int(label))
            return int(label)
        try:
            return self._label_index[label]
        except KeyError:
            raise UnknownVertex(f"no vertex labelled {label!r}") from None

    def has_label(self, label: str) -> bool:
        return label in self._label_index

    def hop_distances(self, source: int | None = None) -> np.ndarray:
        src = self.origin if source is None else source
        return sparse.csgraph.shortest_path(
            self.adjacency, unweighted=True, indices=src, directed=False)

    def with_ground(self, ground: int | None) -> Network:
        if ground is not None:
            self._check_vertex(ground)
        return Network(self.n, self.u, self.v, self.c, self.origin, ground, self.labels)

    def _check_vertex(self, x: int) -> None:
        if not 0 <= x < self.n:
            raise UnknownVertex(f"vertex {x} not in network with {self.n} vertices")

    # serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "vertices": self.n,
            "origin": self.origin,
            "ground": self.ground,
            "edges": [[a, b, w] for a, b, w in self.edges],
            "labels": None if self.labels is None
            else {str(i): lab for i, lab in enumerate(self.labels)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> Network:
        n = int(data["vertices"])
        labels = data.get("labels")
        if labels is not None:
            labels = [labels[str(i)] for i in range(n)]
        return build_network([tuple(e) for e in data["edges"]], int(data.get("origin", 0)),
                             ground=data.get("ground"), labels=labels, n=n)

    @classmethod
    def from_json(cls, text: str) -> Network:
        return cls.from_dict(json.loads(text))


def build_network(edges: Iterable[Sequence], origin: int = 0, *, ground: int | None = None,
                  labels: Sequence[str] | None = None, n: int | None = None) -> Network:
    """Validate an edge list ``[(u, v, c), ...]`` and return a Network."""
    edges = list(edges)
    if not edges:
        raise ValueError("edge list is empty")
    arr = np.array([(e[0], e[1]) for e in edges], dtype=np.int64)
    cond = np.array([float(e[2]) if len(e) > 2 else 1.0 for e in edges])
    if np.any(arr[:, 0] == arr[:, 1]):
        bad = arr[arr[:, 0] == arr[:, 1]][0]
        raise SelfLoop(f"self-loop at vertex {bad[0]}")
    if np.any(~(cond > 0)):
        raise NonpositiveConductance(f"conductances must be > 0, got {cond[~(cond > 0)][0]}")
    if arr.min() < 0:
        raise UnknownVertex("negative vertex id")
    lo, hi = arr.min(axis=1), arr.max(axis=1)
    if n is None:
        n = int(hi.max()) + 1
    if hi.max() >= n:
        raise UnknownVertex(f"edge endpoint {hi.max()} >= n={n}")
    key = lo * n + hi
    if np.unique(key).size != key.size:
        raise DuplicateEdge("duplicate unordered edge in edge list")
    if labels is not None:
        labels = tuple(str(x) for x in labels)
        if len(labels) != n or len(set(labels)) != n:
            raise ValueError("labels must be distinct and one per vertex")
    net = Network(n, lo, hi, cond, int(origin), None if ground is None else int(ground), labels)
    net._check_vertex(net.origin)
    if net.ground is not None:
        net._check_vertex(net.ground)
    ncomp, _ = sparse.csgraph.connected_components(net.adjacency, directed=False)
    if ncomp != 1:
        raise DisconnectedGraph(f"network has {ncomp} connected components")
    return net


def net_conductance(net: Network, x: int) -> float:
    """c(x): the sum of conductances of edges at ``x``."""
    return net.conductance(x)


# generators --------------------------------------------------------------

def path(n: int) -> Network:
    """Path P_n on vertices 0..n-1 with unit conductances."""
    if n < 1:
        raise ValueError("path needs at least 1 vertex")
    if n == 1:
        empty = np.zeros(0, dtype=np.int64)
        return Network(1, empty, empty.copy(), np.zeros(0))
    return build_network([(i, i + 1, 1.0) for i in range(n - 1)], 0)


def complete(n: int) -> Network:
    """Complete graph K_n with unit conductances."""
    if n < 2:
        raise ValueError("complete graph needs at least 2 vertices")
    return build_network([(i, j, 1.0) for i, j in itertools.combinations(range(n), 2)], 0)


def format_point(x: Sequence[int]) -> str:
    return ",".join(str(int(t)) for t in x)


def parse_point(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",")) if text.strip() else ()


@lru_cache(maxsize=64)
def lattice_ball(d: int, k: int) -> Network:
    """The l1 ball of radius ``k`` in Z^d with nearest-neighbour unit edges.

    Vertices are ordered by (norm, coordinates), so the ball of radius k is
    an id prefix of the ball of radius k + 1.
    """
    if d < 1 or k < 1:
        raise ValueError("lattice_ball needs d >= 1 and k >= 1")
    pts = [p for p in itertools.product(range(-k, k + 1), repeat=d)
           if sum(abs(t) for t in p) <= k]
    pts.sort(key=lambda p: (sum(abs(t) for t in p), p))
    index = {p: i for i, p in enumerate(pts)}
    edges = []
    for p, i in index.items():
        for axis in range(d):
            q = p[:axis] + (p[axis] + 1,) + p[axis + 1:]
            j = index.get(q)
            if j is not None:
                edges.append((i, j, 1.0))
    return build_network(edges, index[(0,) * d], labels=[format_point(p) for p in pts])


@lru_cache(maxsize=64)
def binary_tree(k: int) -> Network:
    """Binary words of length <= k; the empty word is the origin."""
    if k < 1:
        raise ValueError("binary_tree needs depth >= 1")
    n = 2 ** (k + 1) - 1
    # heap order: children of i are 2i+1 (word+"0") and 2i+2 (word+"1")
    words = [""] * n
    for i in range(1, n):
        words[i] = words[(i - 1) // 2] + ("0" if i % 2 else "1")
    edges = [((i - 1) // 2, i, 1.0) for i in range(1, n)]
    return build_network(edges, 0, labels=words)


def cartesian_product(a: Network, b: Network) -> Network:
    """Cartesian product; vertex (x, y) has id ``x * b.n + y``."""
    nb = b.n
    edges = []
    for x in range(a.n):
        for (y, t, w) in b.edges:
            edges.append((x * nb + y, x * nb + t, w))
    for (x, s, w) in a.edges:
        for y in range(nb):
            edges.append((x * nb + y, s * nb + y, w))
    labels = [f"{a.label(x)}|{b.label(y)}" for x in range(a.n) for y in range(nb)]
    return build_network(edges, a.origin * nb + b.origin, labels=labels, n=a.n * nb)


def induced_subnetwork(net: Network, keep: Iterable[int]) -> Network:
    """Vertex-induced subnetwork; ids are renumbered in increasing order."""
    keep = np.unique(np.fromiter(keep, dtype=np.int64))
    if net.origin not in set(keep.tolist()):
        raise OriginOutsideKeep("origin must be kept")
    new_id = -np.ones(net.n, dtype=np.int64)
    new_id[keep] = np.arange(keep.size)
    mask = (new_id[net.u] >= 0) & (new_id[net.v] >= 0)
    edges = list(zip(new_id[net.u[mask]], new_id[net.v[mask]], net.c[mask]))
    labels = [net.label(int(i)) for i in keep]
    return build_network(edges, int(new_id[net.origin]), labels=labels, n=int(keep.size))


def ball(net: Network, k: int) -> Network:
    """Hop-distance ball of radius ``k`` around the origin."""
    dist = net.hop_distances()
    return induced_subnetwork(net, np.flatnonzero(dist <= k))


def wired_collapse(net: Network, keep: Iterable[int]) -> Network:
    """Identify every vertex outside ``keep`` to a single ground vertex.

    Parallel edges to the ground are merged by summing conductances.  The
    ground gets the last id and the label ``"omega"``.  When nothing lies
    outside ``keep`` the network is returned unchanged with an
    :class:`EmptyBoundary` warning.
    """
    keep = np.unique(np.fromiter(keep, dtype=np.int64))
    inside = np.zeros(net.n, dtype=bool)
    inside[keep] = True
    if not inside[net.origin]:
        raise OriginOutsideKeep("origin must lie in the kept set")
    if inside.all():
        warnings.warn("keep is the full vertex set; nothing to collapse", EmptyBoundary,
                      stacklevel=2)
        return net
    m = int(keep.size)
    new_id = -np.ones(net.n, dtype=np.int64)
    new_id[keep] = np.arange(m)
    iu, iv = inside[net.u], inside[net.v]
    both = iu & iv
    edges = list(zip(new_id[net.u[both]].tolist(), new_id[net.v[both]].tolist(),
                     net.c[both].tolist()))
    cut = iu ^ iv
    boundary = np.where(iu[cut], net.u[cut], net.v[cut])
    to_ground = np.zeros(m)
    np.add.at(to_ground, new_id[boundary], net.c[cut])
    edges += [(int(x), m, float(w)) for x in np.flatnonzero(to_ground) for w in [to_ground[x]]]
    labels = [net.label(int(i)) for i in keep] + [GROUND_LABEL]
    sub = build_network(edges, int(new_id[net.origin]), ground=m, labels=labels, n=m + 1)
    # keep must itself be connected: removing the ground must not split it
    interior = Network(m, sub.u[sub.v < m], sub.v[sub.v < m], sub.c[sub.v < m], sub.origin)
    ncomp, _ = sparse.csgraph.connected_components(interior.adjacency, directed=False)
    if ncomp != 1:
        raise DisconnectedGraph("kept vertex set is not connected")
    return sub


def boundary_size(net: Network, subset: Iterable[int]) -> float:
    """|dS|: total conductance of edges with exactly one end in ``subset``."""
    mask = np.zeros(net.n, dtype=bool)
    mask[list(subset)] = True
    return float(net.c[mask[net.u] ^ mask[net.v]].sum())


def expansion_constant(net: Network, sampler: Iterable[Iterable[int]] | None = None) -> float:
    """Minimum of |dS|/|S| over nonempty proper vertex subsets.

    Exact by enumeration for at most 20 vertices.  For larger networks a
    ``sampler`` yielding candidate subsets must be supplied; the result is
    then only an upper estimate of the true minimum.
    """
    if sampler is not None:
        return min(boundary_size(net, s) / len(set(s)) for s in sampler)
    if net.n > EXACT_EXPANSION_CAP:
        raise TooLargeForExact(f"{net.n} vertices exceeds exact cap {EXACT_EXPANSION_CAP}")
    n = net.n
    # all 2^n masks as a boolean table, vectorised over subsets
    codes = np.arange(1, 2 ** n - 1, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(bool)
    cut = (bits[:, net.u] ^ bits[:, net.v]) @ net.c
    return float(np.min(cut / bits.sum(axis=1)))


# exhaustions ---------------------------------------------------------------

@dataclass(frozen=True)
class Exhaustion:
    """A nested family of finite truncations of an infinite network.

    ``family`` is one of ``lattice`` (needs ``dim``), ``binary-tree``,
    ``product`` (needs two ``factors``) or ``file`` (needs ``network``;
    truncations are hop balls around its origin).
    """

    family: str
    dim: int = 1
    factors: tuple["Exhaustion", ...] = ()
    network: Network | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.family not in ("lattice", "binary-tree", "product", "file"):
            raise ValueError(f"unknown exhaustion family {self.family!r}")
        if self.family == "product" and len(self.factors) != 2:
            raise ValueError("product exhaustion needs two factors")
        if self.family == "file" and self.network is None:
            raise ValueError("file exhaustion needs a network")

    def truncation(self, k: int) -> Network:
        if k < 1:
            raise ValueError("depth must be >= 1")
        if self.family == "lattice":
            return lattice_ball(self.dim, k)
        if self.family == "binary-tree":
            return binary_tree(k)
        if self.family == "product":
            return _product_truncation(self.factors[0], self.factors[1], k)
        return ball(self.network, k)

    def wired(self, k: int) -> Network:
        """Truncation ``k`` collapsed inside truncation ``k + 1``; ground = omega."""
        inner = self.truncation(k)
        outer = self.truncation(k + 1)
        keep = [outer.index(lab) for lab in _labels(inner)]
        return wired_collapse(outer, keep)

    def locate(self, net: Network, label: str) -> int:
        if not net.has_label(label):
            raise VertexOutsideTruncation(f"vertex {label!r} is outside the truncation")
        return net.index(label)


def _labels(net: Network) -> list[str]:
    return [net.label(i) for i in range(net.n)]


@lru_cache(maxsize=32)
def _product_truncation(a: Exhaustion, b: Exhaustion, k: int) -> Network:
    return cartesian_product(a.truncation(k), b.truncation(k))


def lattice(d: int) -> Exhaustion:
    return Exhaustion("lattice", dim=d)


def tree() -> Exhaustion:
    return Exhaustion("binary-tree")


def product(a: Exhaustion, b: Exhaustion) -> Exhaustion:
    return Exhaustion("product", factors=(a, b))


def from_file(net: Network) -> Exhaustion:
    return Exhaustion("file", network=net)


def random_connected(n: int, seed: int, *, extra: float = 0.15,
                     conductance: tuple[float, float] = (0.1, 10.0),
                     grounded: bool = True) -> Network:
    """Random spanning tree plus extra edges, conductances uniform in a range.

    With ``grounded`` a uniformly chosen non-origin vertex is marked as ground.
    """
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    pairs = {tuple(sorted((int(perm[i]), int(perm[rng.integers(i)])))) for i in range(1, n)}
    n_extra = int(extra * n * (n - 1) / 2)
    for _ in range(n_extra):
        a, b = rng.choice(n, size=2, replace=False)
        pairs.add((int(min(a, b)), int(max(a, b))))
    pairs = sorted(pairs)
    cond = rng.uniform(*conductance, size=len(pairs))
    ground = int(rng.integers(1, n)) if grounded else None
    return build_network([(a, b, w) for (a, b), w in zip(pairs, cond)], 0, ground=ground, n=n)
