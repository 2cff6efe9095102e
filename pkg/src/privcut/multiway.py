"""Private multiway cut: noisy simplex embedding plus rounding.

Pipeline: draw Laplace noise only on terminal-to-non-terminal pairs
(scale sqrt(2) k / eps), embed every vertex in the k-simplex by solving a
linear program whose terminal-distance terms stay affine for any noise
sign, then round the fractional placement; rounding is post-processing,
so the partition inherits the embedding's (eps, 0) guarantee.

Cut costs of placements use the convention
``cost(x) = (1/2) sum_{u<v} w_uv ||x_u - x_v||_1`` so integral placements
cost exactly their partition's cut weight.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dp import laplace
from .graphs import Graph, Partition, TerminalSet, pair_index
from .simplexlp import LinearProgram, SimplexResult, solve_simplex

SIMPLEX_COORD_TOL = 1e-9
SIMPLEX_SUM_TOL = 1e-7
TERMINAL_TOL = 1e-7


@dataclass(frozen=True)
class Placement:
    """One point of the k-simplex per vertex; terminals sit at basis vectors."""

    k: int
    points: np.ndarray
    terminals: tuple

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        object.__setattr__(self, "points", pts)
        pts.setflags(write=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def validate(self):
        pts = self.points
        if pts.shape[1] != self.k:
            raise ValueError("placement dimension does not match k")
        if pts.min() < -SIMPLEX_COORD_TOL:
            raise ValueError(f"negative simplex coordinate {pts.min()}")
        sums = pts.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > SIMPLEX_SUM_TOL:
            raise ValueError("simplex coordinates do not sum to 1")
        for i, term in enumerate(self.terminals):
            e = np.zeros(self.k)
            e[i] = 1.0
            if np.max(np.abs(pts[term] - e)) > TERMINAL_TOL:
                raise ValueError(f"terminal {term} is not pinned to basis vector {i}")
        # distance sum invariance: (1/2) sum_t ||x - e_t||_1 = k - 1
        dists = np.abs(pts[:, None, :] - np.eye(self.k)[None, :, :]).sum(axis=2)
        if np.max(np.abs(0.5 * dists.sum(axis=1) - (self.k - 1))) > 1e-6:
            raise ValueError("terminal-distance sum invariant violated")

    def is_integral(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.max(self.points, axis=1) >= 1.0 - tol))

    def to_partition(self) -> Partition:
        return Partition(np.argmax(self.points, axis=1).astype(np.int64), self.k)

    def to_json(self) -> str:
        return json.dumps(
            {"k": self.k, "terminals": list(self.terminals), "points": self.points.tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "Placement":
        obj = json.loads(text)
        return cls(obj["k"], np.asarray(obj["points"]), tuple(obj["terminals"]))


@dataclass(frozen=True)
class NoiseMatrix:
    """Laplace draws Z[t, u] for terminal index t and non-terminal u."""

    values: np.ndarray
    scale: float

    @classmethod
    def draw(cls, k: int, n_free: int, epsilon: float, rng) -> "NoiseMatrix":
        b = np.sqrt(2.0) * k / epsilon
        values = laplace(b, rng, size=(k, n_free)) if n_free else np.zeros((k, 0))
        return cls(np.asarray(values, dtype=np.float64), b)

    @classmethod
    def zero(cls, k: int, n_free: int) -> "NoiseMatrix":
        return cls(np.zeros((k, n_free)), 0.0)


@dataclass
class LPSolution:
    placement: Placement
    objective: float
    status: str
    iterations: int
    noise: NoiseMatrix | None = None


@dataclass
class MultiwayModel:
    """LP1 instance: the LinearProgram plus the vertex/variable layout."""

    lp: LinearProgram
    g: Graph
    terminals: tuple
    others: tuple
    noise: NoiseMatrix

    @property
    def k(self) -> int:
        return len(self.terminals)


def _ordered_terminals(terminals) -> tuple:
    if isinstance(terminals, TerminalSet):
        if terminals.kind != "multiway":
            raise ValueError("multiway cut expects multiway terminals")
        return tuple(terminals.terminals)
    return tuple(int(t) for t in terminals)


def build_lp1(g: Graph, terminals, noise: NoiseMatrix) -> MultiwayModel:
    """Emit the noisy simplex-embedding LP.

    Terminal-to-vertex distances enter as the affine expressions
    2 (1 - x_u^{(t)}), valid for either noise sign; absolute differences
    between non-terminal pairs get auxiliary variables d >= +-(x_u - x_v)
    per coordinate, valid because original weights are nonnegative
    (zero-weight pairs contribute nothing and are skipped).
    """
    terms = _ordered_terminals(terminals)
    if len(set(terms)) != len(terms):
        raise ValueError("terminals must be distinct")
    for t in terms:
        if not 0 <= t < g.n:
            raise ValueError(f"terminal {t} out of range")
    if g.weights.size and g.weights.min() < 0:
        raise ValueError("negative weight: absolute-value linearization invalid")
    k = len(terms)
    others = tuple(v for v in range(g.n) if v not in set(terms))
    if noise.values.shape != (k, len(others)):
        raise ValueError(
            f"noise matrix shape {noise.values.shape} does not match "
            f"(k={k}, non-terminals={len(others)})"
        )

    nx = len(others) * k
    col_of = {(u, i): ui * k + i for ui, u in enumerate(others) for i in range(k)}
    dpairs = []
    for a in range(len(others)):
        for b in range(a + 1, len(others)):
            w = g.weight(others[a], others[b])
            if w > 0.0:
                dpairs.append((a, b, w))
    nd = len(dpairs) * k
    nvars = nx + nd

    c = np.zeros(nvars)
    offset = 0.0
    term_index = {t: i for i, t in enumerate(terms)}
    # terminal-terminal pairs cross fully: constant (1/2) * w * 2
    for i in range(k):
        for j in range(i + 1, k):
            offset += g.weight(terms[i], terms[j])
    # terminal-to-non-terminal: (w + Z) * (1 - x_u^{(t)})
    for ti, t in enumerate(terms):
        for ui, u in enumerate(others):
            coef = g.weight(t, u) + float(noise.values[ti, ui])
            offset += coef
            c[col_of[(u, ti)]] -= coef
    # non-terminal pairs: (w/2) * sum_i d_{uv,i}
    for di, (a, b, w) in enumerate(dpairs):
        for i in range(k):
            c[nx + di * k + i] = w / 2.0

    A_eq = np.zeros((len(others), nvars))
    for ui in range(len(others)):
        A_eq[ui, ui * k: (ui + 1) * k] = 1.0
    b_eq = np.ones(len(others))

    A_ub = np.zeros((2 * nd, nvars))
    for di, (a, b, w) in enumerate(dpairs):
        for i in range(k):
            d_col = nx + di * k + i
            r = 2 * (di * k + i)
            A_ub[r, col_of[(others[a], i)]] = 1.0
            A_ub[r, col_of[(others[b], i)]] = -1.0
            A_ub[r, d_col] = -1.0
            A_ub[r + 1, col_of[(others[a], i)]] = -1.0
            A_ub[r + 1, col_of[(others[b], i)]] = 1.0
            A_ub[r + 1, d_col] = -1.0
    b_ub = np.zeros(2 * nd)

    names = [f"x[{u}][{i}]" for u in others for i in range(k)]
    names += [f"d[{others[a]},{others[b]}][{i}]" for a, b, _ in dpairs for i in range(k)]
    lp = LinearProgram(c, A_eq, b_eq, A_ub, b_ub, offset, names)
    return MultiwayModel(lp, g, terms, others, noise)


def solve_lp(model: MultiwayModel, pivot_rule: str = "dantzig") -> LPSolution:
    """Solve LP1 and reassemble the placement; never returns silently
    suboptimal answers (numerical failure raises a capability error)."""
    res: SimplexResult = solve_simplex(model.lp, pivot_rule=pivot_rule)
    if res.status != "optimal":
        from .errors import CapabilityError

        raise CapabilityError(f"LP solve ended with status {res.status}")
    k = model.k
    points = np.zeros((model.g.n, k))
    for i, t in enumerate(model.terminals):
        points[t, i] = 1.0
    for ui, u in enumerate(model.others):
        points[u] = res.x[ui * k: (ui + 1) * k]
    placement = Placement(k, points, model.terminals)
    placement.validate()
    recomputed = lp1_objective(model.g, model.terminals, model.noise, placement)
    if abs(recomputed - res.objective) > 1e-6 * max(1.0, abs(res.objective)):
        from .errors import CapabilityError

        raise CapabilityError(
            f"LP objective {res.objective} disagrees with recomputation {recomputed}"
        )
    return LPSolution(placement, res.objective, res.status, res.iterations, model.noise)


def fractional_cut_cost(g: Graph, placement: Placement) -> float:
    """(1/2) sum_{u<v} w_uv ||x_u - x_v||_1; equals cut_cost on integral x."""
    pts = placement.points
    total = 0.0
    for p, (i, j) in enumerate(zip(*np.triu_indices(g.n, k=1))):
        w = g.weights[p]
        if w != 0.0:
            total += w * np.abs(pts[i] - pts[j]).sum()
    return 0.5 * total


def fractional_uncut(g: Graph, placement: Placement) -> float:
    """Total weight minus the fractional cut cost."""
    return g.total_weight() - fractional_cut_cost(g, placement)


def lp1_objective(g: Graph, terminals, noise: NoiseMatrix, placement: Placement) -> float:
    """The noisy objective: fractional cut cost plus the noise terms."""
    terms = _ordered_terminals(terminals)
    others = [v for v in range(g.n) if v not in set(terms)]
    total = fractional_cut_cost(g, placement)
    for ti in range(len(terms)):
        for ui, u in enumerate(others):
            z = float(noise.values[ti, ui])
            if z != 0.0:
                total += 0.5 * z * np.abs(placement.points[terms[ti]] - placement.points[u]).sum()
    return total


def noisy_uncut(g: Graph, terminals, noise: NoiseMatrix, placement: Placement) -> float:
    """Uncut under the noisy costs: noisy total weight minus noisy cut."""
    w_hat = g.total_weight() + float(noise.values.sum())
    return w_hat - lp1_objective(g, terminals, noise, placement)


def private_simplex_embedding(g: Graph, terminals, epsilon: float, rng) -> LPSolution:
    """Draw the noise matrix at scale sqrt(2) k / eps, solve LP1.

    The returned placement is (eps, 0)-differentially private; everything
    downstream is post-processing.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    terms = _ordered_terminals(terminals)
    noise = NoiseMatrix.draw(len(terms), g.n - len(terms), epsilon, rng)
    return solve_lp(build_lp1(g, terms, noise))


def round_ckr(placement: Placement, rng) -> Partition:
    """Threshold rounding: draw theta in (0, 1) and a random terminal
    permutation, assign each vertex to the first terminal in permutation
    order whose coordinate reaches theta; the last terminal takes the
    remainder.  Integral placements map to their own partition with
    probability 1; expected cost is within 3/2 - 1/k of the fractional
    cost."""
    placement.validate()
    gen = rng.gen if hasattr(rng, "gen") else rng
    k = placement.k
    theta = gen.random()
    while theta == 0.0:
        theta = gen.random()
    perm = gen.permutation(k)
    pts = placement.points
    labels = np.full(placement.n, int(perm[-1]), dtype=np.int64)
    taken = np.zeros(placement.n, dtype=bool)
    for i in perm:
        hit = ~taken & (pts[:, i] >= theta)
        labels[hit] = int(i)
        taken |= hit
    return Partition(labels, k)


ROUNDINGS = {"ckr": round_ckr}


def round_placement(placement: Placement, g: Graph, rng, scheme: str = "ckr") -> Partition:
    """Pluggable rounding interface; the shipped default is the 1.5-factor
    threshold scheme."""
    try:
        fn = ROUNDINGS[scheme]
    except KeyError:
        raise ValueError(f"unknown rounding scheme {scheme!r}") from None
    return fn(placement, rng)


def private_multiway_cut(
    g: Graph, terminals, epsilon: float, rng, scheme: str = "ckr"
) -> Partition:
    """Private simplex embedding followed by rounding (post-processing)."""
    sol = private_simplex_embedding(g, terminals, epsilon, rng)
    return round_placement(sol.placement, g, rng, scheme)


def sample_simplex_points(k: int, count: int, rng) -> np.ndarray:
    """Uniform Dirichlet(1) samples on the k-simplex."""
    gen = rng.gen if hasattr(rng, "gen") else rng
    return gen.dirichlet(np.ones(k), size=count)
