"""The shifting mechanism and its cut-problem instantiations.

Noise is added only on a declared dominating set of the solver: a set of
coordinates S such that any one-edge change of the input can be absorbed by
a correction vector supported on S (bounded l1 norm) without changing the
solver output.  Adding Laplace(sensitivity/epsilon) noise on S and running
the exact solver on the noisy input is then (epsilon, 0)-DP.

The correction builders are shipped explicitly (not searched for) so the
dominating-set property is executable: ``verify_dominating_set`` replays
the definition against brute-force solvers on concrete instances.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import oracles
from .dp import RandomSource, laplace
from .errors import DominatingSetViolation
from .graphs import (
    EdgeDelta,
    Graph,
    Partition,
    apply_delta,
    num_pairs,
    pair_index,
)

log = logging.getLogger("privcut.shifting")


@dataclass(frozen=True)
class DominatingSetSpec:
    """A dominating set: noise-carrying pairs plus the correction budget."""

    pairs: tuple
    sensitivity: float
    problem: str

    def __post_init__(self):
        canon = tuple(sorted((min(p), max(p)) for p in self.pairs))
        object.__setattr__(self, "pairs", canon)
        if self.sensitivity <= 0:
            raise ValueError("sensitivity must be positive")

    def indices(self, n: int) -> np.ndarray:
        return np.array([pair_index(n, i, j) for i, j in self.pairs], dtype=np.int64)


@dataclass(frozen=True)
class CorrectionVector:
    """The bounded shift restoring the solver output after an edge change."""

    amounts: dict

    def l1(self) -> float:
        return float(sum(abs(v) for v in self.amounts.values()))

    def support(self):
        return set(self.amounts)


@dataclass(frozen=True)
class ShiftPlan:
    """Where and how much to shift: Laplace scale and uniform lift on S."""

    spec: DominatingSetSpec
    scale: float
    lift: float = 0.0
    clamp: bool = False

    @classmethod
    def for_epsilon(cls, spec, epsilon, lift=0.0, clamp=False):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        return cls(spec, spec.sensitivity / epsilon, lift, clamp)


def st_dominating_set(n: int, s: int, t: int) -> DominatingSetSpec:
    """Terminal-to-non-terminal pairs; sensitivity 2 for min s-t cut."""
    pairs = [(b, u) for b in (s, t) for u in range(n) if u not in (s, t)]
    return DominatingSetSpec(tuple(pairs), 2.0, "min-st-cut")


def multicut_dominating_set(n: int, terminal_pairs) -> DominatingSetSpec:
    """Pairs {u, v} with u a terminal of some pair i and v outside that pair."""
    pairs = set()
    for s, t in terminal_pairs:
        for u in (s, t):
            for v in range(n):
                if v not in (s, t):
                    pairs.add((min(u, v), max(u, v)))
    return DominatingSetSpec(tuple(sorted(pairs)), 2.0, "multicut")


def max_st_dominating_set(n_hat: int, s: int, t: int) -> DominatingSetSpec:
    spec = st_dominating_set(n_hat, s, t)
    return DominatingSetSpec(spec.pairs, 2.0, "max-st-cut")


def shift_and_solve(g: Graph, plan: ShiftPlan, solver, rng) -> Partition:
    """Add lift + Laplace(scale) on exactly the pairs in S, then solve.

    All other weights are untouched.  When the solver requires nonnegative
    weights (``plan.clamp``), noisy weights are clamped at zero; the clamp
    applies identically for all inputs, so it is post-noise processing of
    the solver input.  The solver must be deterministic (fixed tie-break).
    """
    w = g.weights.copy()
    idx = plan.spec.indices(g.n)
    if idx.size:
        if plan.scale > 0:
            noise = laplace(plan.scale, rng, size=idx.size)
        else:
            noise = np.zeros(idx.size)
        w[idx] += plan.lift + noise
    if plan.clamp:
        neg = w < 0
        if neg.any():
            log.info("clamping %d negative noisy weights to zero", int(neg.sum()))
            w = np.where(neg, 0.0, w)
    return solver(w)


# ---------------------------------------------------------------------------
# solver adapters: weight vector -> Partition, brute-force tie-broken

def make_st_solver(n: int, s: int, t: int, method: str = "maxflow"):
    """Minimum s-t cut solver on a raw weight vector.

    "maxflow" needs nonnegative weights and returns the source-side-minimal
    cut; "brute" accepts signed weights and matches maxflow on nonnegative
    inputs (lex-largest label vector = inclusion-minimal source side).
    """
    from . import kernels
    from .graphs import weights_to_matrix

    if method == "maxflow":
        def solver(w):
            _, mask = kernels.dinic_min_st_cut(weights_to_matrix(n, w), s, t)
            return Partition((1 - np.asarray(mask, dtype=np.int64)), 2)
    elif method == "brute":
        def solver(w):
            labels = oracles.brute_min_st_cut(weights_to_matrix(n, w), s, t)
            return Partition(labels, 2)
    else:
        raise ValueError(f"unknown method {method!r}")
    return solver


def make_multicut_solver(n: int, terminal_pairs):
    from .graphs import weights_to_matrix

    pairs = [(int(s), int(t)) for s, t in terminal_pairs]

    def solver(w):
        labels = oracles.brute_multicut(weights_to_matrix(n, w), pairs)
        return Partition(labels, int(labels.max()) + 1)

    return solver


def make_max_st_solver(n: int, s: int, t: int):
    from .graphs import weights_to_matrix

    def solver(w):
        labels = oracles.brute_max_st_cut(weights_to_matrix(n, w), s, t)
        return Partition(labels, 2)

    return solver


# ---------------------------------------------------------------------------
# the three shipped mechanisms

def default_lift(n: int, epsilon: float, c: float | None = None) -> float:
    """Uniform additive lift c*ln(n), default c = 20/epsilon.

    The default makes the lift dominate the maximum of the O(n) Laplace
    tails at failure probability about n^-2, so clamping almost never
    fires.
    """
    if c is None:
        c = 20.0 / epsilon
    return c * np.log(max(n, 2))


def private_min_st_cut(
    g: Graph, s: int, t: int, epsilon: float, rng, lift_c: float | None = None
) -> Partition:
    """Shifting mechanism for min s-t cut: Laplace(2/eps) + lift on the
    terminal-to-non-terminal pairs, then an exact max-flow solve."""
    if s == t:
        raise ValueError("s and t must differ")
    spec = st_dominating_set(g.n, s, t)
    plan = ShiftPlan.for_epsilon(
        spec, epsilon, lift=default_lift(g.n, epsilon, lift_c), clamp=True
    )
    return shift_and_solve(g, plan, make_st_solver(g.n, s, t, "maxflow"), rng)


def private_multicut(
    g: Graph, terminal_pairs, epsilon: float, rng, lift_c: float | None = None
) -> Partition:
    """Shifting mechanism for multicut with the terminal-pair dominating set."""
    spec = multicut_dominating_set(g.n, terminal_pairs)
    plan = ShiftPlan.for_epsilon(
        spec, epsilon, lift=default_lift(g.n, epsilon, lift_c), clamp=True
    )
    return shift_and_solve(g, plan, make_multicut_solver(g.n, terminal_pairs), rng)


def extend_with_terminals(g: Graph) -> tuple:
    """Two fresh zero-weight terminals appended after the original vertices."""
    n_hat = g.n + 2
    w = np.zeros(num_pairs(n_hat))
    for p, (i, j) in enumerate(np.column_stack(np.triu_indices(g.n, k=1))):
        w[pair_index(n_hat, int(i), int(j))] = g.weights[p]
    return Graph(n_hat, w, g.name), g.n, g.n + 1


def private_max_cut(
    g: Graph, epsilon: float, rng, lift_c: float | None = None
) -> Partition:
    """Max cut via the max s-t cut reduction.

    Builds the extension with two fresh terminals, shifts the terminal
    pairs (positive lift keeps noisy weights nonnegative w.h.p.; the brute
    solver tolerates the rest), solves max s-t cut exactly, and projects
    the answer back onto the original vertices.
    """
    ghat, s, t = extend_with_terminals(g)
    spec = max_st_dominating_set(ghat.n, s, t)
    plan = ShiftPlan.for_epsilon(
        spec, epsilon, lift=default_lift(ghat.n, epsilon, lift_c), clamp=False
    )
    full = shift_and_solve(ghat, plan, make_max_st_solver(ghat.n, s, t), rng)
    return Partition(full.labels[: g.n], 2)


# ---------------------------------------------------------------------------
# correction-vector builders (the executable content of the dominating sets)

def make_st_correction_builder(n: int, s: int, t: int):
    """Case-by-case correction for min s-t cut.

    The solver output labels the s-side 0.  For a change z on a pair of
    non-terminals (u, v) the correction depends only on the sign of z and
    the output-side pattern of u and v; changes touching a terminal cancel
    inside the dominating set, and a change on {s, t} shifts every feasible
    cut equally.
    """

    def build(base: Partition, delta: EdgeDelta) -> CorrectionVector:
        u, v = delta.pair
        z = delta.amount
        if {u, v} == {s, t}:
            return CorrectionVector({})
        if u in (s, t) or v in (s, t):
            return CorrectionVector({delta.pair: -z})
        lu, lv = int(base.labels[u]), int(base.labels[v])
        if z >= 0:
            if lu == lv:
                return CorrectionVector({})
            if lu == 0:
                return CorrectionVector({_cp(s, u): 1.0, _cp(t, v): 1.0})
            return CorrectionVector({_cp(s, v): 1.0, _cp(t, u): 1.0})
        if lu != lv:
            return CorrectionVector({})
        if lu == 0:
            return CorrectionVector({_cp(s, u): 1.0, _cp(t, v): -1.0})
        return CorrectionVector({_cp(t, u): 1.0, _cp(s, v): -1.0})

    return build


def make_max_st_correction_builder(n: int, s: int, t: int):
    """Mirror of the min s-t cut cases for maximization."""

    def build(base: Partition, delta: EdgeDelta) -> CorrectionVector:
        u, v = delta.pair
        z = delta.amount
        if {u, v} == {s, t}:
            return CorrectionVector({})
        if u in (s, t) or v in (s, t):
            return CorrectionVector({delta.pair: -z})
        lu, lv = int(base.labels[u]), int(base.labels[v])
        if z >= 0:
            if lu != lv:
                return CorrectionVector({})
            if lu == 0:
                return CorrectionVector({_cp(s, u): -1.0, _cp(t, v): 1.0})
            return CorrectionVector({_cp(t, u): -1.0, _cp(s, v): 1.0})
        if lu == lv:
            return CorrectionVector({})
        if lu == 0:
            return CorrectionVector({_cp(s, u): -1.0, _cp(t, v): -1.0})
        return CorrectionVector({_cp(t, u): -1.0, _cp(s, v): -1.0})

    return build


def make_multicut_correction_builder(n: int, terminal_pairs):
    """Correction for multicut.

    Terminal-touching changes cancel in the dominating set; a change on a
    conflicting pair shifts every feasible solution equally.  For two
    non-terminals the two-block construction needs care once more than two
    blocks exist: when no conflicting pair spans the two output blocks of
    u and v, a single anchor terminal in u's block carries the correction
    (+1 toward u, -1 toward v for separating changes; +1 toward both for
    merging changes), which is minimized pointwise at the base pattern for
    any number of blocks.
    """
    pairs = [(int(s), int(t)) for s, t in terminal_pairs]
    spec = multicut_dominating_set(n, pairs)
    in_s = set(spec.pairs)
    conflicts = {frozenset(p) for p in pairs}
    terminals = sorted({v for p in pairs for v in p})

    def build(base: Partition, delta: EdgeDelta) -> CorrectionVector:
        u, v = delta.pair
        z = delta.amount
        if (u, v) in in_s:
            return CorrectionVector({(u, v): -z})
        if frozenset((u, v)) in conflicts:
            return CorrectionVector({})
        bu, bv = int(base.labels[u]), int(base.labels[v])
        if z >= 0 and bu == bv:
            return CorrectionVector({})
        if z < 0 and bu != bv:
            return CorrectionVector({})
        if z >= 0:
            for si, ti in pairs:
                ls, lt = int(base.labels[si]), int(base.labels[ti])
                if ls == bu and lt == bv:
                    return CorrectionVector({_cp(si, u): 1.0, _cp(ti, v): 1.0})
                if ls == bv and lt == bu:
                    return CorrectionVector({_cp(ti, u): 1.0, _cp(si, v): 1.0})
            anchor = _anchor_terminal(base, terminals, bu)
            if anchor is None:
                anchor = _anchor_terminal(base, terminals, bv)
                if anchor is None:
                    return CorrectionVector({})
                return CorrectionVector({_cp(anchor, v): 1.0, _cp(anchor, u): -1.0})
            return CorrectionVector({_cp(anchor, u): 1.0, _cp(anchor, v): -1.0})
        anchor = _anchor_terminal(base, terminals, bu)
        if anchor is None:
            return CorrectionVector({})
        return CorrectionVector({_cp(anchor, u): 1.0, _cp(anchor, v): 1.0})

    return build


def _cp(a: int, b: int) -> tuple:
    return (a, b) if a < b else (b, a)


def _anchor_terminal(base: Partition, terminals, block: int):
    for term in terminals:
        if int(base.labels[term]) == block:
            return term
    return None


# ---------------------------------------------------------------------------
# verifier

def verify_dominating_set(
    g: Graph,
    spec: DominatingSetSpec,
    solver,
    delta: EdgeDelta,
    builder,
) -> CorrectionVector:
    """Executable check of the dominating-set definition on one instance.

    Computes the base output, asks the builder for a correction from the
    output and the delta alone, and asserts the solver on the delta'd,
    S-shifted weights reproduces the base output.  Raises
    :class:`DominatingSetViolation` with a serializable counterexample
    otherwise.
    """
    base = solver(g.weights)
    a = builder(base, delta)
    in_s = set(spec.pairs)
    if not a.support() <= in_s:
        raise DominatingSetViolation(
            "correction leaves the dominating set",
            _report(g, delta, a, base, None),
        )
    if a.l1() > spec.sensitivity + 1e-12:
        raise DominatingSetViolation(
            f"correction l1 norm {a.l1()} exceeds sensitivity {spec.sensitivity}",
            _report(g, delta, a, base, None),
        )
    shifted = apply_delta(g, delta).weights.copy()
    for (i, j), amount in a.amounts.items():
        shifted[pair_index(g.n, i, j)] += amount
    out = solver(shifted)
    if not np.array_equal(base.labels, out.labels):
        raise DominatingSetViolation(
            "solver output changed despite correction",
            _report(g, delta, a, base, out),
        )
    return a


def _report(g, delta, a, base, out):
    return {
        "n": g.n,
        "weights": g.weights.tolist(),
        "delta": {"pair": list(delta.pair), "amount": delta.amount},
        "correction": {f"{i},{j}": amt for (i, j), amt in a.amounts.items()},
        "base_labels": base.labels.tolist() if base is not None else None,
        "shifted_labels": out.labels.tolist() if out is not None else None,
    }
