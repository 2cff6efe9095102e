"""Non-private exact solvers and enumerators.

These serve three roles: the deterministic inner solver of the shifting
mechanism, ground truth for error measurement, and approximate-cut counting
for the k-cut analysis.  Every oracle uses a fixed canonical tie-break so it
is a true function of its input; recomputed cut cost of the returned
partition always equals the returned cost exactly.

The ``brute_*`` variants accept raw (possibly negative) weight matrices;
they exist because the dominating-set verifier has to evaluate solvers on
shifted inputs that may dip below zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CapabilityError
from .graphs import Graph, Partition, TerminalSet, cut_cost, weights_to_matrix

EVAL_CAP = 30_000_000


def _lex_pick(rows: np.ndarray, largest: bool) -> np.ndarray:
    """Lexicographically smallest (or largest) row of a 2-d label array."""
    if rows.shape[0] == 1:
        return rows[0]
    order = np.lexsort(rows.T[::-1])
    return rows[order[-1 if largest else 0]]


def _cost_of(wmat: np.ndarray, labels: np.ndarray) -> float:
    i, j = np.triu_indices(wmat.shape[0], k=1)
    return float(wmat[i, j][labels[i] != labels[j]].sum())


def _check_cap(count: int, what: str):
    if count > EVAL_CAP:
        raise CapabilityError(
            f"{what} needs {count} evaluations, above the exhaustive cap {EVAL_CAP}"
        )


# ---------------------------------------------------------------------------
# brute-force solvers on raw weight matrices (negative weights allowed)

def brute_min_st_cut(wmat: np.ndarray, s: int, t: int) -> np.ndarray:
    """Labels (0 = s-side) of a minimum s-t cut; ties resolve to the
    lexicographically largest label vector, which on nonnegative inputs is
    the inclusion-minimal source side."""
    n = wmat.shape[0]
    _check_cap(1 << max(n - 2, 0), "brute min s-t cut")
    free = np.array([v for v in range(n) if v not in (s, t)], dtype=np.int64)
    base = np.zeros(n, dtype=np.uint8)
    base[t] = 1
    costs = kernels.bipartition_cut_costs(wmat, free, base)
    cand = np.nonzero(costs == costs.min())[0]
    labs = kernels.decode_bipartitions(cand, free, base)
    return _lex_pick(labs, largest=True).astype(np.int64)


def brute_max_st_cut(wmat: np.ndarray, s: int, t: int) -> np.ndarray:
    """Labels of a maximum s-t cut; ties resolve to the lexicographically
    smallest label vector."""
    n = wmat.shape[0]
    _check_cap(1 << max(n - 2, 0), "brute max s-t cut")
    free = np.array([v for v in range(n) if v not in (s, t)], dtype=np.int64)
    base = np.zeros(n, dtype=np.uint8)
    base[t] = 1
    costs = kernels.bipartition_cut_costs(wmat, free, base)
    cand = np.nonzero(costs == costs.max())[0]
    labs = kernels.decode_bipartitions(cand, free, base)
    return _lex_pick(labs, largest=False).astype(np.int64)


def brute_max_cut(wmat: np.ndarray) -> np.ndarray:
    """Labels of a maximum cut (vertex 0 pinned to side 0); lex-smallest ties."""
    n = wmat.shape[0]
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    _check_cap(1 << (n - 1), "brute max cut")
    free = np.arange(1, n, dtype=np.int64)
    base = np.zeros(n, dtype=np.uint8)
    costs = kernels.bipartition_cut_costs(wmat, free, base)
    cand = np.nonzero(costs == costs.max())[0]
    labs = kernels.decode_bipartitions(cand, free, base)
    return _lex_pick(labs, largest=False).astype(np.int64)


def _multicut_labelings(n: int, pairs, max_blocks: int):
    """Feasible multicut labelings: at most ``max_blocks`` blocks, every
    terminal pair separated.  Rows in lexicographic (canonical) order."""
    total = sum(kernels.stirling2(n, j) for j in range(1, min(max_blocks, n) + 1))
    _check_cap(total, "exact multicut enumeration")
    parts = [np.asarray(kernels.rgs_labelings(n, j)) for j in range(1, min(max_blocks, n) + 1)]
    labs = np.concatenate([p for p in parts if p.size], axis=0)
    ok = np.ones(labs.shape[0], dtype=bool)
    for s, t in pairs:
        ok &= labs[:, s] != labs[:, t]
    return labs[ok]


def brute_multicut(wmat: np.ndarray, pairs) -> np.ndarray:
    """Labels of a minimum multicut into at most 2k blocks; ties resolve to
    the lexicographically smallest canonical labeling."""
    n = wmat.shape[0]
    labs = _multicut_labelings(n, pairs, 2 * len(pairs))
    if labs.shape[0] == 0:
        raise ValueError("no feasible multicut labeling")
    costs = kernels.batch_cut_costs(wmat, labs)
    cand = np.nonzero(costs == costs.min())[0]
    return _lex_pick(labs[cand], largest=False).astype(np.int64)


# ---------------------------------------------------------------------------
# public oracles on Graphs

def exact_min_st_cut(g: Graph, s: int, t: int):
    """Minimum s-t cut via max-flow.

    Returns (Partition, cost); the partition is the source-side-minimal
    minimum cut (residual reachability), the canonical tie-break.
    """
    if s == t:
        raise ValueError("s and t must differ")
    flow, mask = kernels.dinic_min_st_cut(g.matrix(), s, t)
    labels = (1 - np.asarray(mask, dtype=np.int64))
    part = Partition(labels, 2)
    cost = cut_cost(g, part)
    if abs(cost - flow) > 1e-9 * max(1.0, abs(cost)):
        raise AssertionError(f"max-flow {flow} disagrees with cut cost {cost}")
    return part, cost


def exact_min_kcut(g: Graph, k: int):
    """Exhaustive-equivalent minimum k-cut (branch and bound with an
    admissible bound; lexicographically smallest canonical labeling)."""
    if not 2 <= k <= g.n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={g.n}")
    try:
        cost, labels, _ = kernels.kcut_bb(g.matrix(), k, EVAL_CAP)
    except RuntimeError as exc:
        raise CapabilityError(f"exact k-cut at n={g.n}, k={k}: {exc}") from exc
    part = Partition(labels, k)
    return part, cut_cost(g, part)


def exact_multiway_cut(g: Graph, terminals: TerminalSet):
    """Exact minimum multiway cut; terminal i pinned to block i."""
    if terminals.kind != "multiway":
        raise ValueError("exact_multiway_cut expects multiway terminals")
    terminals.validate(g.n)
    terms = np.asarray(terminals.terminals, dtype=np.int64)
    try:
        cost, labels, _ = kernels.multiway_bb(g.matrix(), terms, EVAL_CAP)
    except RuntimeError as exc:
        raise CapabilityError(f"exact multiway cut at n={g.n}: {exc}") from exc
    part = Partition(labels, len(terms))
    return part, cut_cost(g, part)


def exact_multicut(g: Graph, pairs):
    """Exact minimum multicut over partitions into at most 2k blocks."""
    pairs = [(int(s), int(t)) for s, t in pairs]
    for s, t in pairs:
        if s == t:
            raise ValueError("terminal pair is degenerate")
        if not (0 <= s < g.n and 0 <= t < g.n):
            raise ValueError("terminal out of range")
    labels = brute_multicut(g.matrix(), pairs)
    part = Partition(labels, int(labels.max()) + 1)
    return part, cut_cost(g, part)


def exact_max_cut(g: Graph):
    """Exact maximum cut (canonical: vertex 0 on side 0, lex-smallest ties)."""
    labels = brute_max_cut(g.matrix())
    part = Partition(labels, 2)
    return part, cut_cost(g, part)


# ---------------------------------------------------------------------------
# approximate-cut catalogs

@dataclass
class CutCatalog:
    """All k-cuts found with cost at most ``threshold``.

    ``complete`` is True only for exhaustive enumeration.  Cuts are sorted
    by nondecreasing cost, ties in lexicographic labeling order, with no
    duplicates up to block relabeling (labelings are canonical).
    """

    threshold: float
    cuts: list
    complete: bool

    def costs(self) -> np.ndarray:
        return np.array([c for _, c in self.cuts])

    def partitions(self) -> list:
        return [p for p, _ in self.cuts]

    def __len__(self):
        return len(self.cuts)

    def recheck(self, g: Graph) -> bool:
        return all(abs(cut_cost(g, p) - c) < 1e-9 for p, c in self.cuts)

    def to_json(self) -> str:
        return json.dumps(
            {
                "threshold": self.threshold,
                "complete": self.complete,
                "cuts": [
                    {"labels": p.labels.tolist(), "k": p.k, "cost": c}
                    for p, c in self.cuts
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CutCatalog":
        obj = json.loads(text)
        cuts = [
            (Partition(np.asarray(c["labels"], dtype=np.int64), c["k"]), float(c["cost"]))
            for c in obj["cuts"]
        ]
        return cls(obj["threshold"], cuts, obj["complete"])


def _sorted_cuts(labs: np.ndarray, costs: np.ndarray, k: int):
    order = np.lexsort(tuple(labs.T[::-1]) + (costs,))
    return [(Partition(labs[i].astype(np.int64), k), float(costs[i])) for i in order]


def enumerate_kcuts_within(g: Graph, k: int, alpha: float) -> CutCatalog:
    """Complete catalog of k-cuts with cost at most alpha * OPT_k(g)."""
    if alpha < 1:
        raise ValueError(f"alpha must be at least 1, got {alpha}")
    if not 2 <= k <= g.n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={g.n}")
    _check_cap(kernels.stirling2(g.n, k), f"k-cut enumeration at n={g.n}, k={k}")
    labs = np.asarray(kernels.rgs_labelings(g.n, k))
    costs = kernels.batch_cut_costs(g.matrix(), labs)
    opt = costs.min()
    threshold = alpha * opt
    keep = costs <= threshold + 1e-9 * max(1.0, threshold)
    return CutCatalog(float(threshold), _sorted_cuts(labs[keep], costs[keep], k), True)


def default_contraction_repetitions(n: int, k: int, alpha: float, c: float = 4.0) -> int:
    """Repetition schedule c * n^(2 alpha (k-1)) * ln n for the contraction
    enumerator; with the default c it recovers the full catalog with
    empirical frequency >= 0.99 on brute-force-checkable instances."""
    return int(np.ceil(c * n ** (2.0 * alpha * (k - 1)) * max(np.log(n), 1.0)))


def _contract_once(wmat: np.ndarray, k: int, rng) -> np.ndarray:
    """One randomized contraction down to k supernodes; returns labels."""
    n = wmat.shape[0]
    gen = rng.gen if hasattr(rng, "gen") else rng
    w = wmat.copy()
    alive = list(range(n))
    member = {v: [v] for v in range(n)}
    while len(alive) > k:
        iu = [(a, b) for ai, a in enumerate(alive) for b in alive[ai + 1:]]
        weights = np.array([w[a, b] for a, b in iu])
        total = weights.sum()
        if total <= 0:
            pick = int(gen.integers(len(iu)))
        else:
            cum = np.cumsum(weights)
            pick = int(min(np.searchsorted(cum, gen.random() * total, side="right"), len(iu) - 1))
        a, b = iu[pick]
        for v in alive:
            if v not in (a, b):
                w[a, v] += w[b, v]
                w[v, a] = w[a, v]
        member[a].extend(member[b])
        alive.remove(b)
    labels = np.empty(n, dtype=np.int64)
    for lab, v in enumerate(alive):
        labels[member[v]] = lab
    return labels


def contraction_enumerate_kcuts(
    g: Graph, k: int, alpha: float, rng, repetitions: int | None = None
) -> CutCatalog:
    """Randomized repeated-contraction catalog of near-minimum k-cuts.

    Collects the distinct k-cuts seen over the repetition schedule and keeps
    those within alpha of the best cost found; marked incomplete.  The
    catalog is always a subset of the brute-force one.
    """
    if alpha < 1:
        raise ValueError(f"alpha must be at least 1, got {alpha}")
    if not 2 <= k <= g.n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={g.n}")
    if repetitions is None:
        repetitions = default_contraction_repetitions(g.n, k, alpha)
    wmat = g.matrix()
    seen = {}
    for _ in range(repetitions):
        labels = _contract_once(wmat, k, rng)
        part = Partition(labels, k).canonical()
        key = part.key()
        if key not in seen:
            seen[key] = (part.labels, _cost_of(wmat, part.labels))
    best = min(c for _, c in seen.values())
    threshold = alpha * best
    kept = [(l, c) for l, c in seen.values() if c <= threshold + 1e-9 * max(1.0, threshold)]
    labs = np.array([l for l, _ in kept], dtype=np.uint8)
    costs = np.array([c for _, c in kept])
    return CutCatalog(float(threshold), _sorted_cuts(labs, costs, k), False)


def global_min_cut_value(g: Graph) -> float:
    """Weight of the global minimum cut (n >= 2)."""
    if g.n < 2:
        raise ValueError("global min cut needs n >= 2")
    value, _ = kernels.stoer_wagner(g.matrix())
    return float(value)
