"""Weighted graphs over the complete pair set, partitions, and file IO.

A graph on ``n`` vertices is stored as a dense vector of C(n,2) nonnegative
edge weights in canonical pair order: (0,1), (0,2), ..., (0,n-1), (1,2), ...
A zero weight denotes a non-edge.  Graphs and partitions are immutable after
construction; every mutation returns a new value, so they can be shared
freely across parallel trial workers.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphParseError

BINARY_MAGIC = b"PRIVCUT\x00"
BINARY_VERSION = 1


def num_pairs(n: int) -> int:
    return n * (n - 1) // 2


def pair_index(n: int, i: int, j: int) -> int:
    """Canonical index of the unordered pair {i, j} with i < j."""
    if i == j:
        raise ValueError(f"self-pair ({i}, {i}) has no index")
    if i > j:
        i, j = j, i
    if i < 0 or j >= n:
        raise ValueError(f"pair ({i}, {j}) out of range for n={n}")
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def pair_array(n: int) -> np.ndarray:
    """All pairs in canonical order as an (C(n,2), 2) int array."""
    iu = np.triu_indices(n, k=1)
    return np.column_stack(iu).astype(np.int64)


def weights_to_matrix(n: int, weights: np.ndarray) -> np.ndarray:
    """Symmetric n-by-n weight matrix with a zero diagonal."""
    mat = np.zeros((n, n), dtype=np.float64)
    iu = np.triu_indices(n, k=1)
    mat[iu] = weights
    mat[(iu[1], iu[0])] = weights
    return mat


def matrix_to_weights(mat: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(mat.shape[0], k=1)
    return np.ascontiguousarray(mat[iu], dtype=np.float64)


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph on vertices 0..n-1.

    ``weights[p] >= 0`` for every canonical pair index p, and the vector
    length is exactly n*(n-1)/2.
    """

    n: int
    weights: np.ndarray
    name: str = ""

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.shape[0] != num_pairs(self.n):
            raise ValueError(
                f"weight vector has length {w.shape[0]}, expected "
                f"{num_pairs(self.n)} for n={self.n}"
            )
        if w.size and w.min() < 0:
            raise ValueError("negative edge weight")
        object.__setattr__(self, "weights", w)
        w.setflags(write=False)

    @classmethod
    def empty(cls, n: int, name: str = "") -> "Graph":
        return cls(n, np.zeros(num_pairs(n)), name)

    @classmethod
    def from_edges(cls, n: int, edges, name: str = "") -> "Graph":
        """Build from an iterable of (u, v, weight) triples."""
        w = np.zeros(num_pairs(n))
        for u, v, wt in edges:
            w[pair_index(n, u, v)] += wt
        return cls(n, w, name)

    @classmethod
    def complete(cls, n: int, weight: float = 1.0, name: str = "") -> "Graph":
        return cls(n, np.full(num_pairs(n), float(weight)), name)

    def weight(self, i: int, j: int) -> float:
        return float(self.weights[pair_index(self.n, i, j)])

    def matrix(self) -> np.ndarray:
        return weights_to_matrix(self.n, self.weights)

    def total_weight(self) -> float:
        return float(self.weights.sum())

    def is_unweighted(self) -> bool:
        """True iff every weight is exactly 0 or 1 (checked on demand)."""
        return bool(np.all((self.weights == 0.0) | (self.weights == 1.0)))

    def with_weights(self, weights: np.ndarray, name: str | None = None) -> "Graph":
        return Graph(self.n, weights, self.name if name is None else name)

    def induced(self, support) -> "Graph":
        """Vertex-induced subgraph on ``support`` (kept in sorted order)."""
        support = np.asarray(sorted(support), dtype=np.int64)
        sub = self.matrix()[np.ix_(support, support)]
        return Graph(len(support), matrix_to_weights(sub), self.name)


@dataclass(frozen=True)
class Partition:
    """Assignment of vertices to blocks 0..k-1.

    Blocks may be empty only where the problem permits (minimum k-cut needs
    all k blocks nonempty, multiway cut pins terminal i to block i); callers
    check what they require.
    """

    labels: np.ndarray
    k: int

    def __post_init__(self):
        lab = np.ascontiguousarray(self.labels, dtype=np.int64)
        if lab.ndim != 1:
            raise ValueError("labels must be a 1-d vector")
        if lab.size and (lab.min() < 0 or lab.max() >= self.k):
            raise ValueError(f"labels must lie in [0, {self.k})")
        object.__setattr__(self, "labels", lab)
        lab.setflags(write=False)

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @classmethod
    def from_labels(cls, labels, k: int | None = None) -> "Partition":
        lab = np.asarray(labels, dtype=np.int64)
        if k is None:
            k = int(lab.max()) + 1 if lab.size else 0
        return cls(lab, k)

    def blocks(self) -> list[list[int]]:
        out = [[] for _ in range(self.k)]
        for v, b in enumerate(self.labels):
            out[int(b)].append(v)
        return out

    def num_nonempty(self) -> int:
        return len(np.unique(self.labels))

    def canonical(self) -> "Partition":
        """Relabel blocks in order of first occurrence (drops empty blocks)."""
        mapping = {}
        new = np.empty_like(self.labels)
        for v, b in enumerate(self.labels):
            b = int(b)
            if b not in mapping:
                mapping[b] = len(mapping)
            new[v] = mapping[b]
        return Partition(new, max(len(mapping), 1))

    def key(self) -> bytes:
        """Hashable canonical form; equivalent partitions collide."""
        return self.canonical().labels.astype(np.uint8).tobytes()

    def same_partition(self, other: "Partition") -> bool:
        return self.key() == other.key()


@dataclass(frozen=True)
class TerminalSet:
    """Terminals for the cut problems.

    kind "multiway": ``terminals`` is a list of k distinct vertices.
    kind "pairs":    ``pairs`` is a list of (s_i, t_i) vertex pairs (a vertex
                     may appear in several pairs).
    kind "st":       a single (s, t) pair with s != t.
    """

    kind: str
    terminals: tuple = ()
    pairs: tuple = ()

    @classmethod
    def multiway(cls, terminals) -> "TerminalSet":
        terminals = tuple(int(t) for t in terminals)
        if len(set(terminals)) != len(terminals):
            raise ValueError("multiway terminals must be pairwise distinct")
        return cls("multiway", terminals=terminals)

    @classmethod
    def st(cls, s: int, t: int) -> "TerminalSet":
        if s == t:
            raise ValueError("s and t must differ")
        return cls("st", pairs=((int(s), int(t)),))

    @classmethod
    def multicut(cls, pairs) -> "TerminalSet":
        pairs = tuple((int(s), int(t)) for s, t in pairs)
        for s, t in pairs:
            if s == t:
                raise ValueError(f"terminal pair ({s}, {t}) is degenerate")
        return cls("pairs", pairs=pairs)

    def validate(self, n: int):
        named = list(self.terminals) + [v for p in self.pairs for v in p]
        for v in named:
            if not 0 <= v < n:
                raise ValueError(f"terminal vertex {v} out of range for n={n}")


@dataclass(frozen=True)
class EdgeDelta:
    """One-edge change between neighboring graphs: |amount| <= 1."""

    pair: tuple
    amount: float

    def __post_init__(self):
        i, j = self.pair
        if i == j:
            raise ValueError("delta pair must join distinct vertices")
        if i > j:
            object.__setattr__(self, "pair", (j, i))
        if abs(self.amount) > 1.0:
            raise ValueError(f"delta amount {self.amount} exceeds 1 in magnitude")

    def inverse(self) -> "EdgeDelta":
        return EdgeDelta(self.pair, -self.amount)


def cut_cost(g: Graph, p: Partition) -> float:
    """Sum of weights over pairs whose endpoints carry different labels."""
    if p.labels.shape[0] != g.n:
        raise ValueError(f"partition is over {p.labels.shape[0]} vertices, graph has {g.n}")
    i, j = np.triu_indices(g.n, k=1)
    crossing = p.labels[i] != p.labels[j]
    return float(g.weights[crossing].sum())


def uncut_cost(g: Graph, p: Partition) -> float:
    """Total weight minus the cut cost (weights on non-crossing pairs)."""
    return g.total_weight() - cut_cost(g, p)


def cut_cost_labels(weights: np.ndarray, n: int, labels: np.ndarray) -> float:
    """cut_cost on a raw weight vector; accepts negative weights."""
    i, j = np.triu_indices(n, k=1)
    return float(weights[labels[i] != labels[j]].sum())


def apply_delta(g: Graph, d: EdgeDelta) -> Graph:
    """Neighboring graph with one edge weight changed; original untouched."""
    idx = pair_index(g.n, *d.pair)
    new_w = float(g.weights[idx]) + d.amount
    if new_w < 0:
        raise ValueError(
            f"delta {d.amount:+g} on pair {d.pair} would make the weight negative"
        )
    w = g.weights.copy()
    w[idx] = new_w
    return g.with_weights(w)


def enumerate_neighbor_deltas(g: Graph, grid):
    """Yield every legal EdgeDelta with an amount from ``grid``.

    Used by the privacy auditor and the dominating-set verifier to sweep
    the whole neighboring relation on small graphs.
    """
    grid = [float(a) for a in grid]
    for a in grid:
        if abs(a) > 1.0:
            raise ValueError(f"grid amount {a} exceeds 1 in magnitude")
    pairs = pair_array(g.n)
    for p in range(pairs.shape[0]):
        i, j = int(pairs[p, 0]), int(pairs[p, 1])
        for a in grid:
            if a == 0.0 or g.weights[p] + a < 0:
                continue
            yield EdgeDelta((i, j), a)


def connected_components(g: Graph, support_threshold: float = 0.0) -> Partition:
    """Component labeling; edges with weight > threshold count as present."""
    if support_threshold < 0:
        raise ValueError("support threshold must be nonnegative")
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    pairs = pair_array(g.n)
    present = np.nonzero(g.weights > support_threshold)[0]
    for p in present:
        ri, rj = find(int(pairs[p, 0])), find(int(pairs[p, 1]))
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = [find(v) for v in range(g.n)]
    labels = np.empty(g.n, dtype=np.int64)
    seen = {}
    for v, r in enumerate(roots):
        if r not in seen:
            seen[r] = len(seen)
        labels[v] = seen[r]
    return Partition(labels, max(len(seen), 1))


def write_graph(g: Graph, path, fmt: str = "text"):
    """Write a graph in edge-list text or dense binary format."""
    if fmt == "text":
        with open(path, "w") as fh:
            fh.write(f"n {g.n}\n")
            pairs = pair_array(g.n)
            for p in np.nonzero(g.weights)[0]:
                i, j = pairs[p]
                fh.write(f"{i} {j} {g.weights[p]!r}\n")
    elif fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(BINARY_MAGIC)
            fh.write(struct.pack("<II", BINARY_VERSION, g.n))
            fh.write(g.weights.astype("<f8").tobytes())
    else:
        raise ValueError(f"unknown graph format {fmt!r}")


def read_graph(path, fmt: str = "text", n: int | None = None) -> Graph:
    """Read a graph written by :func:`write_graph`.

    Text lines are ``u v w`` with 0-based vertices; an optional leading
    ``n <count>`` line fixes the vertex count (otherwise the maximum vertex
    index seen determines it, possibly overridden by ``n``).
    """
    if fmt == "binary":
        with open(path, "rb") as fh:
            data = fh.read()
        if data[: len(BINARY_MAGIC)] != BINARY_MAGIC:
            raise GraphParseError("bad magic in binary graph file")
        ver, gn = struct.unpack_from("<II", data, len(BINARY_MAGIC))
        if ver != BINARY_VERSION:
            raise GraphParseError(f"unsupported binary version {ver}")
        w = np.frombuffer(data, dtype="<f8", offset=len(BINARY_MAGIC) + 8)
        if w.shape[0] != num_pairs(gn):
            raise GraphParseError(
                f"binary payload has {w.shape[0]} weights, expected {num_pairs(gn)}"
            )
        return Graph(gn, w.astype(np.float64))
    if fmt != "text":
        raise ValueError(f"unknown graph format {fmt!r}")

    edges = []
    declared_n = n
    max_vertex = -1
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "n" and len(parts) == 2:
                try:
                    declared_n = int(parts[1])
                except ValueError:
                    raise GraphParseError("bad vertex count", line=lineno) from None
                continue
            if len(parts) != 3:
                raise GraphParseError(f"expected 'u v w', got {line!r}", line=lineno)
            try:
                u, v, wt = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise GraphParseError(f"malformed edge line {line!r}", line=lineno) from None
            if u == v:
                raise GraphParseError(f"self-loop on vertex {u}", line=lineno)
            if u < 0 or v < 0:
                raise GraphParseError("negative vertex index", line=lineno)
            if wt < 0:
                raise GraphParseError(f"negative weight {wt}", line=lineno)
            edges.append((u, v, wt, lineno))
            max_vertex = max(max_vertex, u, v)
    if declared_n is None:
        declared_n = max_vertex + 1
    w = np.zeros(num_pairs(declared_n))
    for u, v, wt, lineno in edges:
        if u >= declared_n or v >= declared_n:
            raise GraphParseError(
                f"vertex {max(u, v)} out of range for n={declared_n}", line=lineno
            )
        w[pair_index(declared_n, u, v)] += wt
    return Graph(declared_n, w)


def graph_to_json(g: Graph) -> str:
    return json.dumps({"n": g.n, "name": g.name, "weights": g.weights.tolist()})


def graph_from_json(text: str) -> Graph:
    obj = json.loads(text)
    return Graph(obj["n"], np.asarray(obj["weights"], dtype=np.float64), obj.get("name", ""))
