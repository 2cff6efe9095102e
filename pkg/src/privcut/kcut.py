"""Private minimum k-cut.

Two routes: the augmented double exponential mechanism (raise the minimum
k-cut to a data-independent anchor along an increasing edge chain, then
sample a k-cut with probability decaying in its cost), with a restricted
(eps, delta) variant sampling only near-minimum cuts; and a private SPLIT
2-approximation that repeatedly picks a piece by a noisy min-cut score and
splits it with a private min cut.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels, oracles
from .dp import CompositionLedger, PrivacyBudget, RandomSource, exponential_mechanism_probs, sample_index
from .errors import CapabilityError
from .graphs import Graph, Partition, cut_cost, pair_array, pair_index, weights_to_matrix


@dataclass(frozen=True)
class AugmentationChain:
    """Strictly increasing edge sets H_0 = {} through H_{C(n,2)} = all pairs.

    ``pairs[i]`` is the single pair added at step i+1; the chain must be
    independent of the input weights so neighboring graphs share it.
    """

    n: int
    pairs: tuple
    rule: str = "lexicographic"

    def __len__(self):
        return len(self.pairs) + 1

    def prefix_indices(self, i: int) -> np.ndarray:
        return np.array(
            [pair_index(self.n, a, b) for a, b in self.pairs[:i]], dtype=np.int64
        )


def default_chain(n: int, g: Graph | None = None) -> AugmentationChain:
    """Deterministic lexicographic chain over canonical pair order.

    The optional graph argument is accepted for interface symmetry and
    ignored: data-independence is what keeps the chain shared between
    neighboring graphs.
    """
    pairs = tuple((int(i), int(j)) for i, j in pair_array(n))
    return AugmentationChain(n, pairs)


@dataclass(frozen=True)
class KCutBoundProfile:
    """Black-box approximate-k-cut counting parameters f(k), g(k), h(k).

    The bound reads: at most n^(alpha f) * g^(alpha h) k-cuts within factor
    alpha of optimum.  The shipped instantiation is the Chekuri profile
    f = 2(k-1), g = h = 0.
    """

    k: int
    f: float
    g: float
    h: float

    def s_of_k(self, n: int) -> float:
        extra = self.h * np.log(self.g) if self.h > 0 and self.g > 0 else 0.0
        return self.f * np.log(n) + extra

    def anchor(self, n: int, epsilon: float) -> float:
        return 4.0 * self.s_of_k(n) / epsilon

    def c_prime(self, n: int, epsilon: float) -> float:
        return 2.0 * self.s_of_k(n) / epsilon


def chekuri_profile(k: int) -> KCutBoundProfile:
    return KCutBoundProfile(k, 2.0 * (k - 1), 0.0, 0.0)


def augmented_weights(g: Graph, chain: AugmentationChain, i: int) -> np.ndarray:
    """Weights of G union H_i; chain edges stack weight 1 on what is there."""
    w = g.weights.copy()
    idx = chain.prefix_indices(i)
    if idx.size:
        w[idx] += 1.0
    return w


def _raw_em_probs(scores: np.ndarray, epsilon: float) -> np.ndarray:
    """Selection probabilities proportional to exp(-epsilon * score)."""
    return exponential_mechanism_probs(scores, sensitivity=1.0, epsilon=2.0 * epsilon)


def opt_values_along_chain(g: Graph, k: int, chain: AugmentationChain) -> np.ndarray:
    """OPT_k(G union H_i) for every prefix i, computed incrementally."""
    n = g.n
    if k == 2:
        opts = np.empty(len(chain))
        for i in range(len(chain)):
            opts[i], _ = kernels.stoer_wagner(weights_to_matrix(n, augmented_weights(g, chain, i)))
        return opts
    if kernels.stirling2(n, k) > oracles.EVAL_CAP:
        raise CapabilityError(f"chain OPT_k needs S({n},{k}) labelings, above cap")
    labs = np.asarray(kernels.rgs_labelings(n, k))
    costs = kernels.batch_cut_costs(g.matrix(), labs)
    opts = np.empty(len(chain))
    opts[0] = costs.min()
    for i, (a, b) in enumerate(chain.pairs):
        costs = costs + (labs[:, a] != labs[:, b])
        opts[i + 1] = costs.min()
    return opts


def choose_augmentation(
    g: Graph,
    k: int,
    chain: AugmentationChain,
    anchor: float,
    epsilon: float,
    rng,
):
    """Sample a chain index with probability exp(-eps |OPT_k(G u H_i) - anchor|)."""
    opts = opt_values_along_chain(g, k, chain)
    scores = np.abs(opts - anchor)
    idx = sample_index(_raw_em_probs(scores, epsilon), rng)
    return idx, opts


def _kcut_costs_at_index(g: Graph, k: int, chain: AugmentationChain, index: int):
    labs = np.asarray(kernels.rgs_labelings(g.n, k))
    costs = kernels.batch_cut_costs(g.matrix(), labs)
    for a, b in chain.pairs[:index]:
        costs = costs + (labs[:, a] != labs[:, b])
    return labs, costs


RESTRICTED_CATALOGS = ("exhaustive", "contraction")


def restricted_alpha(k: int) -> float:
    return 1.0 + k / (k - 1.0)


def private_kcut_exponential(
    g: Graph,
    k: int,
    epsilon: float,
    rng,
    mode: str = "pure",
    catalog_method: str = "exhaustive",
    chain: AugmentationChain | None = None,
    return_trace: bool = False,
):
    """Augmentation then exponential mechanism over k-cuts.

    mode "pure": samples over all k-cuts of the augmented graph; the run
    is 2 eps differentially private (eps per stage, composed).
    mode "restricted": samples only over the catalog of cuts within factor
    1 + k/(k-1) of the augmented optimum, giving (eps, O(1/n^2))-DP via
    the coupling argument; statistically O(1/n^2)-close to pure mode.
    """
    if not 2 <= k <= g.n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={g.n}")
    if mode not in ("pure", "restricted"):
        raise ValueError(f"unknown mode {mode!r}")
    if chain is None:
        chain = default_chain(g.n)
    profile = chekuri_profile(k)
    anchor = profile.anchor(g.n, epsilon)
    index, opts = choose_augmentation(g, k, chain, anchor, epsilon, rng)
    ledger = CompositionLedger(mode="basic")
    ledger.spend("kcut-augmentation", epsilon)

    if mode == "pure" or catalog_method == "exhaustive":
        labs, costs = _kcut_costs_at_index(g, k, chain, index)
        if mode == "restricted":
            alpha = restricted_alpha(k)
            keep = costs <= alpha * costs.min() + 1e-9
            labs, costs = labs[keep], costs[keep]
    else:
        if catalog_method not in RESTRICTED_CATALOGS:
            raise ValueError(f"unknown catalog method {catalog_method!r}")
        g_aug = g.with_weights(augmented_weights(g, chain, index))
        catalog = oracles.contraction_enumerate_kcuts(g_aug, k, restricted_alpha(k), rng)
        labs = np.array([p.labels for p in catalog.partitions()], dtype=np.uint8)
        costs = catalog.costs()
    cut_idx = sample_index(_raw_em_probs(costs, epsilon), rng)
    ledger.spend("kcut-selection", epsilon)
    part = Partition(labs[cut_idx].astype(np.int64), k)
    if return_trace:
        trace = {
            "chain_index": int(index),
            "opt_along_chain": opts.tolist(),
            "anchor": anchor,
            "mode": mode,
            "budget": [ledger.total().epsilon, 0.0 if mode == "pure" else None],
        }
        return part, ledger, trace
    return part


def kcut_exponential_distribution(
    g: Graph, k: int, epsilon: float, mode: str = "pure", chain: AugmentationChain | None = None
):
    """Exact output distribution of the two-stage mechanism.

    Returns (labelings, probabilities): the mixture over chain indices of
    the per-index selection distributions.  Used by the privacy auditor in
    exact-probability form and by the restricted-vs-pure distance check.
    """
    if chain is None:
        chain = default_chain(g.n)
    profile = chekuri_profile(k)
    anchor = profile.anchor(g.n, epsilon)
    opts = opt_values_along_chain(g, k, chain)
    p_index = _raw_em_probs(np.abs(opts - anchor), epsilon)

    labs = np.asarray(kernels.rgs_labelings(g.n, k))
    base = kernels.batch_cut_costs(g.matrix(), labs)
    probs = np.zeros(labs.shape[0])
    costs = base.copy()
    for i in range(len(chain)):
        if i > 0:
            a, b = chain.pairs[i - 1]
            costs = costs + (labs[:, a] != labs[:, b])
        if mode == "pure":
            probs += p_index[i] * _raw_em_probs(costs, epsilon)
        else:
            alpha = restricted_alpha(k)
            keep = costs <= alpha * costs.min() + 1e-9
            cond = np.zeros(labs.shape[0])
            cond[keep] = _raw_em_probs(costs[keep], epsilon)
            probs += p_index[i] * cond
    return labs, probs


def private_min_cut(g: Graph, epsilon: float, delta: float, rng, return_trace: bool = False):
    """Private global minimum cut: the k = 2 instance of the augmented
    exponential mechanism, run at half budget per stage so the total is
    (epsilon, 0) <= (epsilon, delta).

    Meets the subroutine contract empirically: the output cut exceeds
    OPT + 20 ln(n)/epsilon with frequency at most about 1/n^2.
    """
    n = g.n
    if n < 2:
        raise ValueError("min cut needs n >= 2")
    if (1 << (n - 1)) > oracles.EVAL_CAP:
        raise CapabilityError(f"min-cut selection over 2^{n - 1} cuts is above the cap")
    eps_stage = epsilon / 2.0
    chain = default_chain(n)
    profile = chekuri_profile(2)
    anchor = profile.anchor(n, eps_stage)
    index, opts = choose_augmentation(g, 2, chain, anchor, eps_stage, rng)

    w_aug = augmented_weights(g, chain, index)
    free = np.arange(1, n, dtype=np.int64)
    base = np.zeros(n, dtype=np.uint8)
    costs = kernels.bipartition_cut_costs(weights_to_matrix(n, w_aug), free, base)
    # index 0 is the one-block labeling; a 2-cut needs both sides nonempty
    probs = _raw_em_probs(costs[1:], eps_stage)
    pick = 1 + sample_index(probs, rng)
    labels = kernels.decode_bipartition(pick, free, base).astype(np.int64)
    part = Partition(labels, 2)
    if return_trace:
        ledger = CompositionLedger(mode="basic")
        ledger.spend("mincut-augmentation", eps_stage)
        ledger.spend("mincut-selection", eps_stage)
        return part, ledger, {"chain_index": int(index), "anchor": anchor}
    return part


# ---------------------------------------------------------------------------
# private SPLIT

@dataclass
class SplitState:
    """Vertex-disjoint pieces (supports partition [n]) plus the per-iteration
    budget; mutated as the algorithm splits pieces."""

    pieces: list
    eps0: float
    delta0: float
    iteration: int = 0

    def supports_partition(self, n: int) -> bool:
        seen = np.concatenate([np.asarray(p) for p in self.pieces])
        return len(seen) == n and len(np.unique(seen)) == n


def split_budget(k: int, epsilon: float, delta: float):
    """Per-iteration budget of the private SPLIT: eps0 = eps/(6 sqrt(k ln(2/delta))),
    delta0 = delta/(2k)."""
    if delta <= 0 or delta >= 1:
        raise ValueError("private SPLIT needs delta in (0, 1)")
    eps0 = epsilon / (6.0 * np.sqrt(k * np.log(2.0 / delta)))
    delta0 = delta / (2.0 * k)
    return eps0, delta0


def split_ledger(k: int, epsilon: float, delta: float) -> CompositionLedger:
    """The (k-1)-iteration ledger: blocks of (3 eps0, delta0) composed in
    advanced mode with slack delta' = delta/2."""
    eps0, delta0 = split_budget(k, epsilon, delta)
    ledger = CompositionLedger(mode="advanced", delta_prime=delta / 2.0)
    for i in range(k - 1):
        ledger.spend(f"split-iteration-{i + 1}", 3.0 * eps0, delta0)
    return ledger


def private_split_kcut(
    g: Graph, k: int, epsilon: float, delta: float, rng, return_trace: bool = False
):
    """Private SPLIT 2-approximation (k-1 rounds of choose-piece + private
    min cut); (epsilon, delta)-DP overall via advanced composition."""
    n = g.n
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    eps0, delta0 = split_budget(k, epsilon, delta)
    state = SplitState([np.arange(n, dtype=np.int64)], eps0, delta0)
    trace = {"eps0": eps0, "delta0": delta0, "iterations": []}
    rng_local = rng if isinstance(rng, RandomSource) else None

    for it in range(1, k):
        state.iteration = it
        scores = np.array(
            [
                oracles.global_min_cut_value(g.induced(p)) if len(p) >= 2 else np.inf
                for p in state.pieces
            ]
        )
        eligible = np.nonzero(np.isfinite(scores))[0]
        probs = _raw_em_probs(scores[eligible], eps0)
        sub_rng = rng_local.derive(it) if rng_local is not None else rng
        choice = int(eligible[sample_index(probs, sub_rng)])
        piece = state.pieces.pop(choice)
        sub = g.induced(piece)
        cut = private_min_cut(sub, eps0, delta0, sub_rng)
        side = piece[np.asarray(cut.labels) == 0]
        rest = piece[np.asarray(cut.labels) == 1]
        state.pieces.extend([side, rest])
        assert state.supports_partition(n)
        trace["iterations"].append(
            {
                "chosen_piece": choice,
                "piece": piece.tolist(),
                "cut_side": side.tolist(),
                "scores": [None if not np.isfinite(s) else float(s) for s in scores],
            }
        )

    labels = np.empty(n, dtype=np.int64)
    for b, piece in enumerate(sorted(state.pieces, key=lambda p: int(p.min()))):
        labels[piece] = b
    part = Partition(labels, k)
    if return_trace:
        ledger = split_ledger(k, epsilon, delta)
        trace["budget_total"] = [ledger.total().epsilon, ledger.total().delta]
        return part, ledger, trace
    return part


def split_kcut_noiseless(g: Graph, k: int):
    """Ablation with every mechanism replaced by its exact argmin.

    This is exactly the greedy SPLIT 2-approximation: repeatedly split the
    piece with the lightest minimum cut by that exact cut.  Returns the
    partition and the sequence of removed cut weights.
    """
    n = g.n
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    pieces = [np.arange(n, dtype=np.int64)]
    removed = []
    for _ in range(1, k):
        best, best_val, best_mask = -1, np.inf, None
        for pi, piece in enumerate(pieces):
            if len(piece) < 2:
                continue
            val, mask = kernels.stoer_wagner(g.induced(piece).matrix())
            if val < best_val:
                best, best_val, best_mask = pi, float(val), np.asarray(mask)
        piece = pieces.pop(best)
        removed.append(best_val)
        pieces.append(piece[best_mask == 1])
        pieces.append(piece[best_mask == 0])
    labels = np.empty(n, dtype=np.int64)
    for b, piece in enumerate(sorted(pieces, key=lambda p: int(p.min()))):
        labels[piece] = b
    return Partition(labels, k), removed


# ---------------------------------------------------------------------------
# analysis helpers: cut counting bound and the greedy comparison sequence

def verify_cut_count_bound(g: Graph, k: int, alpha: float) -> dict:
    """Count alpha-approximate k-cuts and compare against n^floor(2 alpha (k-1))."""
    catalog = oracles.enumerate_kcuts_within(g, k, alpha)
    bound = g.n ** int(np.floor(2.0 * alpha * (k - 1)))
    return {
        "count": len(catalog),
        "bound": int(bound),
        "ok": len(catalog) <= bound,
        "threshold": catalog.threshold,
    }


def isolating_cut_weights(g: Graph, part: Partition) -> list:
    """Weights of the cuts isolating each block; they sum to twice the
    partition's cut cost."""
    mat = g.matrix()
    out = []
    for block in part.blocks():
        if not block:
            continue
        inside = np.zeros(g.n, dtype=bool)
        inside[block] = True
        out.append(float(mat[inside][:, ~inside].sum()))
    return sorted(out)


def comparison_cut_sequence(g: Graph, k: int) -> list:
    """The greedy benchmark sequence of cut weights.

    For every present edge take the minimum cut separating its endpoints,
    sort those cuts by weight, and greedily select ones not contained in
    the union so far until the union disconnects the graph into at least k
    components; each selected cut repeats by the number of new components
    it created, truncated to k-1 entries.
    """
    n = g.n
    mat = g.matrix()
    pairs = pair_array(n)
    cuts = []
    for p in np.nonzero(g.weights)[0]:
        u, v = int(pairs[p, 0]), int(pairs[p, 1])
        value, mask = kernels.dinic_min_st_cut(mat, u, v)
        mask = np.asarray(mask, dtype=bool)
        edge_set = frozenset(
            (int(a), int(c))
            for a in range(n)
            for c in range(a + 1, n)
            if mat[a, c] > 0 and mask[a] != mask[c]
        )
        cuts.append((float(value), edge_set))
    cuts.sort(key=lambda vc: vc[0])

    def comps(removed: set) -> int:
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for p in np.nonzero(g.weights)[0]:
            u, v = int(pairs[p, 0]), int(pairs[p, 1])
            if (u, v) in removed:
                continue
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
        return len({find(v) for v in range(n)})

    union: set = set()
    seq = []
    ncomp = comps(union)
    for value, edge_set in cuts:
        if ncomp >= k or len(seq) >= k - 1:
            break
        if edge_set <= union:
            continue
        union |= edge_set
        newcomp = comps(union)
        for _ in range(min(newcomp - ncomp, k - 1 - len(seq))):
            seq.append(value)
        ncomp = newcomp
    return seq
