"""Deterministic generators for hard instances and random test corpora.

Every generator is a pure function of its spec: regenerating with the same
parameters and seed yields a byte-identical graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dp import RandomSource
from .graphs import Graph, TerminalSet, num_pairs, pair_index


@dataclass(frozen=True)
class InstanceSpec:
    """Family tag plus parameters plus seed; the full recipe for a graph."""

    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps({"family": self.family, "params": self.params, "seed": self.seed})

    @classmethod
    def from_json(cls, text: str) -> "InstanceSpec":
        obj = json.loads(text)
        return cls(obj["family"], obj.get("params", {}), obj.get("seed", 0))


def gen_star_multiway(n: int, k: int, epsilon: float, assignment, weight: float | None = None):
    """Star-of-terminals hard instance for multiway cut.

    Vertices 0..k-1 are the terminals; each non-terminal k+i connects to
    exactly terminal assignment[i] with weight ln(k/6)/(2 eps) (clamped at
    zero where the formula dips negative, i.e. k < 6; pass ``weight`` to
    override).  The optimal multiway cut cost is 0 for every assignment.
    """
    if k < 2 or k > n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    assignment = [int(a) for a in assignment]
    if len(assignment) != n - k:
        raise ValueError(
            f"assignment names {len(assignment)} non-terminals, expected {n - k}"
        )
    if any(not 0 <= a < k for a in assignment):
        raise ValueError("assignment entries must be terminal indices")
    if weight is None:
        weight = max(0.0, float(np.log(k / 6.0) / (2.0 * epsilon)))
    w = np.zeros(num_pairs(n))
    for i, a in enumerate(assignment):
        w[pair_index(n, a, k + i)] = weight
    g = Graph(n, w, name=f"star-multiway-n{n}-k{k}")
    return g, TerminalSet.multiway(range(k))


def gen_path_of_cliques(num_cliques: int, clique_size: int, bridge_width: int) -> Graph:
    """Unweighted path of cliques with d-edge bridges between neighbors.

    Edge count is num_cliques * C(clique_size, 2) + (num_cliques-1) * d.
    Bridges take the d lexicographically first cross pairs between
    adjacent cliques.
    """
    if clique_size < 2:
        raise ValueError("clique size must be at least 2")
    if bridge_width > clique_size * clique_size:
        raise ValueError(
            f"bridge width {bridge_width} exceeds the {clique_size ** 2} "
            "distinct cross pairs between adjacent cliques"
        )
    n = num_cliques * clique_size
    w = np.zeros(num_pairs(n))
    for c in range(num_cliques):
        base = c * clique_size
        for i in range(clique_size):
            for j in range(i + 1, clique_size):
                w[pair_index(n, base + i, base + j)] = 1.0
    for c in range(num_cliques - 1):
        left = c * clique_size
        right = (c + 1) * clique_size
        cross = [(left + i, right + j) for i in range(clique_size) for j in range(clique_size)]
        for u, v in cross[:bridge_width]:
            w[pair_index(n, u, v)] = 1.0
    return Graph(n, w, name=f"path-of-cliques-{num_cliques}x{clique_size}-d{bridge_width}")


def bridge_pairs(num_cliques: int, clique_size: int, bridge_width: int) -> list:
    """The vertex pairs of each bridge, in path order."""
    out = []
    for c in range(num_cliques - 1):
        left = c * clique_size
        right = (c + 1) * clique_size
        cross = [(left + i, right + j) for i in range(clique_size) for j in range(clique_size)]
        out.append(cross[:bridge_width])
    return out


def gen_removed_bridges(g0: Graph, num_cliques: int, clique_size: int,
                        bridge_width: int, subset) -> Graph:
    """Remove the bridges named by ``subset`` from a path-of-cliques graph;
    with |subset| = k-1 the result has exactly k components and zero
    minimum k-cut."""
    bridges = bridge_pairs(num_cliques, clique_size, bridge_width)
    w = g0.weights.copy()
    for b in subset:
        if not 0 <= b < len(bridges):
            raise ValueError(f"bridge index {b} out of range")
        for u, v in bridges[b]:
            w[pair_index(g0.n, u, v)] = 0.0
    return Graph(g0.n, w, name=g0.name + f"-minus-{sorted(subset)}")


def gen_gnp(n: int, p: float, seed: int) -> Graph:
    """Unweighted Erdos-Renyi G(n, p)."""
    rng = RandomSource(seed, stream=101)
    w = (rng.gen.random(num_pairs(n)) < p).astype(np.float64)
    return Graph(n, w, name=f"gnp-n{n}-p{p}")


def gen_uniform_weighted(n: int, seed: int, high: float = 1.0, dyadic: bool = False) -> Graph:
    """Complete graph with uniform random weights; ``dyadic`` snaps weights
    to multiples of 1/64 so cut comparisons are exact in float arithmetic."""
    rng = RandomSource(seed, stream=102)
    w = rng.gen.random(num_pairs(n)) * high
    if dyadic:
        w = np.round(w * 64.0) / 64.0
    return Graph(n, w, name=f"uniform-n{n}")


def gen_planted_kcut(n: int, k: int, seed: int, hi: float = 1.0, lo: float = 0.1) -> Graph:
    """k planted groups: intra-group weight hi, cross-group weight lo."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    rng = RandomSource(seed, stream=103)
    labels = rng.gen.integers(0, k, size=n)
    labels[:k] = np.arange(k)  # every group nonempty
    w = np.zeros(num_pairs(n))
    p = 0
    for i in range(n):
        for j in range(i + 1, n):
            w[p] = hi if labels[i] == labels[j] else lo
            p += 1
    return Graph(n, w, name=f"planted-n{n}-k{k}")


def gen_cycle(n: int, weight: float = 1.0) -> Graph:
    edges = [(i, (i + 1) % n, weight) for i in range(n)]
    return Graph.from_edges(n, edges, name=f"cycle-n{n}")


def gen_random(spec: InstanceSpec):
    """Dispatch a spec to its generator; returns (Graph, extras dict)."""
    return generate(spec)


FAMILIES = {}


def _family(name):
    def deco(fn):
        FAMILIES[name] = fn
        return fn
    return deco


@_family("star-multiway")
def _f_star(params, seed):
    n, k = int(params["n"]), int(params["k"])
    eps = float(params.get("epsilon", 1.0))
    assignment = params.get("assignment")
    if assignment is None:
        rng = RandomSource(seed, stream=104)
        assignment = rng.gen.integers(0, k, size=n - k).tolist()
    weight = params.get("weight")
    g, terms = gen_star_multiway(n, k, eps, assignment, weight)
    return g, {"terminals": terms, "assignment": list(assignment)}


@_family("path-of-cliques")
def _f_cliques(params, seed):
    g = gen_path_of_cliques(
        int(params["num_cliques"]), int(params["clique_size"]), int(params["bridge_width"])
    )
    return g, {}


@_family("removed-bridges")
def _f_removed(params, seed):
    nc, cs, d = int(params["num_cliques"]), int(params["clique_size"]), int(params["bridge_width"])
    g0 = gen_path_of_cliques(nc, cs, d)
    g = gen_removed_bridges(g0, nc, cs, d, [int(b) for b in params["subset"]])
    return g, {}


@_family("random-gnp")
def _f_gnp(params, seed):
    return gen_gnp(int(params["n"]), float(params.get("p", 0.5)), seed), {}


@_family("random-weighted")
def _f_weighted(params, seed):
    g = gen_uniform_weighted(
        int(params["n"]), seed, float(params.get("high", 1.0)), bool(params.get("dyadic", False))
    )
    return g, {}


@_family("planted-kcut")
def _f_planted(params, seed):
    g = gen_planted_kcut(
        int(params["n"]), int(params["k"]), seed,
        float(params.get("hi", 1.0)), float(params.get("lo", 0.1)),
    )
    return g, {}


@_family("cycle")
def _f_cycle(params, seed):
    return gen_cycle(int(params["n"]), float(params.get("weight", 1.0))), {}


def generate(spec: InstanceSpec):
    """Instantiate a spec; pure in (family, params, seed)."""
    try:
        fn = FAMILIES[spec.family]
    except KeyError:
        raise ValueError(
            f"unknown instance family {spec.family!r}; known: {sorted(FAMILIES)}"
        ) from None
    return fn(spec.params, spec.seed)
