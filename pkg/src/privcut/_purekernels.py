"""Pure numpy fallback for the compiled kernels.

Semantics must match ``_kernels.pyx`` exactly: same output orders, same
tie-breaks, same traversal order in the branch-and-bound searches.  The
compiled module is preferred at import time; this one keeps the package
fully functional without a C toolchain.
"""

from __future__ import annotations

import numpy as np

BACKEND = "pure"


def bipartition_cut_costs(wmat, free, base_labels):
    """Cut costs of all 2^f labelings obtained by toggling ``free`` vertices.

    Index t encodes the labeling where ``free[j]`` carries label
    ``base_labels[free[j]] XOR bit_j(t)`` and all other vertices keep their
    base label.  Computed with a meet-in-the-middle split so the whole
    table reduces to a few dense matmuls.
    """
    wmat = np.asarray(wmat, dtype=np.float64)
    free = np.asarray(free, dtype=np.int64)
    base = np.asarray(base_labels, dtype=np.uint8)
    n = wmat.shape[0]
    f = free.shape[0]
    iu = np.triu_indices(n, k=1)
    if f == 0:
        return np.array([float(wmat[iu][base[iu[0]] != base[iu[1]]].sum())])

    fa = (f + 1) // 2
    free_a, free_b = free[:fa], free[fa:]
    fb = f - fa
    fixed = np.setdiff1d(np.arange(n), free)

    bits_a = ((np.arange(1 << fa)[:, None] >> np.arange(fa)[None, :]) & 1).astype(np.uint8)
    bits_b = ((np.arange(1 << fb)[:, None] >> np.arange(fb)[None, :]) & 1).astype(np.uint8)
    lab_a = bits_a ^ base[free_a][None, :]
    lab_b = bits_b ^ base[free_b][None, :]

    def _half_cost(lab, idx):
        cost = np.zeros(lab.shape[0])
        for a in range(idx.shape[0]):
            for b in range(a + 1, idx.shape[0]):
                w = wmat[idx[a], idx[b]]
                if w != 0.0:
                    cost += w * (lab[:, a] != lab[:, b])
            for v in fixed:
                w = wmat[idx[a], v]
                if w != 0.0:
                    cost += w * (lab[:, a] != base[v])
        return cost

    cost_a = _half_cost(lab_a, free_a)
    cost_b = _half_cost(lab_b, free_b)

    const = 0.0
    if fixed.size > 1:
        fi, fj = np.triu_indices(fixed.size, k=1)
        sub = wmat[np.ix_(fixed, fixed)][fi, fj]
        const = float(sub[base[fixed][fi] != base[fixed][fj]].sum())

    wab = wmat[np.ix_(free_a, free_b)]
    la = lab_a.astype(np.float64)
    lb = lab_b.astype(np.float64)
    cross = (la @ wab) @ (1.0 - lb).T + ((1.0 - la) @ wab) @ lb.T
    costs = cost_b[:, None] + cost_a[None, :] + cross.T + const
    return np.ascontiguousarray(costs.reshape(-1))


def rgs_labelings(n, k):
    """All surjective restricted-growth strings of length n onto k labels.

    Rows come out in lexicographic order; the row count is the Stirling
    partition number S(n, k).  A restricted growth string has a_0 = 0 and
    a_i <= 1 + max(a_0..a_{i-1}), so each set partition appears exactly
    once, already in canonical first-occurrence labeling.
    """
    if k < 1 or k > n:
        return np.zeros((0, n), dtype=np.uint8)
    labels = np.zeros((1, 1), dtype=np.uint8)
    maxl = np.zeros(1, dtype=np.int64)
    for _ in range(1, n):
        counts = np.minimum(maxl + 2, k)
        reps = np.repeat(np.arange(labels.shape[0]), counts)
        ends = np.cumsum(counts)
        newcol = (np.arange(ends[-1]) - np.repeat(ends - counts, counts)).astype(np.uint8)
        labels = np.column_stack([labels[reps], newcol])
        maxl = np.maximum(maxl[reps], newcol.astype(np.int64))
    keep = maxl == k - 1
    return np.ascontiguousarray(labels[keep])


def batch_cut_costs(wmat, labelings):
    """Cut cost of every labeling row under the given weight matrix."""
    wmat = np.asarray(wmat, dtype=np.float64)
    n = wmat.shape[0]
    costs = np.zeros(labelings.shape[0])
    for i in range(n):
        for j in range(i + 1, n):
            w = wmat[i, j]
            if w != 0.0:
                costs += w * (labelings[:, i] != labelings[:, j])
    return costs


def dinic_min_st_cut(wmat, s, t):
    """Max-flow / min s-t cut on a dense symmetric capacity matrix.

    Returns ``(flow_value, source_mask)``; the source mask is the residual
    reachable set from s, i.e. the unique inclusion-minimal source side
    among all minimum cuts.
    """
    n = wmat.shape[0]
    cap = np.array(wmat, dtype=np.float64)
    eps = 1e-12 * max(1.0, float(cap.sum()))
    flow = 0.0
    while True:
        level = np.full(n, -1, dtype=np.int64)
        level[s] = 0
        queue = [s]
        while queue:
            nxt = []
            for u in queue:
                for v in range(n):
                    if level[v] < 0 and cap[u, v] > eps:
                        level[v] = level[u] + 1
                        nxt.append(v)
            queue = nxt
        if level[t] < 0:
            break
        it = [0] * n

        def dfs(u, pushed):
            if u == t:
                return pushed
            while it[u] < n:
                v = it[u]
                if cap[u, v] > eps and level[v] == level[u] + 1:
                    d = dfs(v, min(pushed, float(cap[u, v])))
                    if d > 0:
                        cap[u, v] -= d
                        cap[v, u] += d
                        return d
                it[u] += 1
            return 0.0

        while True:
            pushed = dfs(s, float("inf"))
            if pushed <= 0:
                break
            flow += pushed

    mask = np.zeros(n, dtype=np.uint8)
    mask[s] = 1
    stack = [s]
    while stack:
        u = stack.pop()
        for v in range(n):
            if not mask[v] and cap[u, v] > eps:
                mask[v] = 1
                stack.append(v)
    return flow, mask


def stoer_wagner(wmat):
    """Deterministic global minimum cut (n >= 2) via maximum-adjacency search.

    Ties in the adjacency search and between phase cuts resolve to the
    lowest vertex index, matching the compiled kernel bit for bit.
    """
    n = wmat.shape[0]
    w = np.array(wmat, dtype=np.float64)
    groups = [[v] for v in range(n)]
    active = list(range(n))
    best = np.inf
    best_side = [0]
    while len(active) > 1:
        a = active[0]
        rest = [v for v in active if v != a]
        key = {v: float(w[a, v]) for v in rest}
        order = [a]
        while key:
            pick, pick_w = None, -np.inf
            for v in sorted(key):
                if key[v] > pick_w:
                    pick, pick_w = v, key[v]
            order.append(pick)
            del key[pick]
            for v in key:
                key[v] += float(w[pick, v])
        tlast = order[-1]
        cut_of_phase = float(sum(w[tlast, v] for v in active if v != tlast))
        if cut_of_phase < best:
            best = cut_of_phase
            best_side = list(groups[tlast])
        slast = order[-2]
        for v in active:
            if v != slast and v != tlast:
                w[slast, v] += w[tlast, v]
                w[v, slast] = w[slast, v]
        groups[slast].extend(groups[tlast])
        active.remove(tlast)
    mask = np.zeros(n, dtype=np.uint8)
    mask[best_side] = 1
    return float(best), mask


class _Bound:
    """Incremental attachment bound shared by the two branch-and-bounds.

    For every unassigned vertex v it tracks tot[v] (weight to assigned
    vertices) and same[v][lab] (weight to assigned vertices with that
    label).  The admissible lower bound on future cost is
    sum_v (tot[v] - max_lab same[v][lab]).
    """

    def __init__(self, wmat, k):
        n = wmat.shape[0]
        self.w = wmat
        self.k = k
        self.tot = np.zeros(n)
        self.same = np.zeros((n, k))

    def assign(self, v, lab, upto, n):
        for u in range(upto, n):
            wvu = self.w[v, u]
            if wvu != 0.0:
                self.tot[u] += wvu
                self.same[u, lab] += wvu

    def unassign(self, v, lab, upto, n):
        for u in range(upto, n):
            wvu = self.w[v, u]
            if wvu != 0.0:
                self.tot[u] -= wvu
                self.same[u, lab] -= wvu

    def future(self, upto, n):
        b = 0.0
        for u in range(upto, n):
            best = 0.0
            for lab in range(self.k):
                if self.same[u, lab] > best:
                    best = self.same[u, lab]
            b += self.tot[u] - best
        return b


def multiway_bb(wmat, terminals, node_cap):
    """Exact minimum multiway cut by depth-first branch and bound.

    Terminals are pinned to their own blocks; the remaining vertices are
    assigned in index order with labels tried in increasing order, so the
    first optimum reached is the lexicographically smallest labeling and
    equal-cost latecomers are pruned.  The bound is admissible (accumulated
    crossing weight plus cheapest attachments), which keeps the search
    exhaustive-equivalent.

    Returns (cost, labels, nodes); raises RuntimeError past ``node_cap``.
    """
    wmat = np.asarray(wmat, dtype=np.float64)
    n = wmat.shape[0]
    terminals = np.asarray(terminals, dtype=np.int64)
    k = terminals.shape[0]
    order = list(terminals) + [v for v in range(n) if v not in set(terminals.tolist())]
    order = np.asarray(order, dtype=np.int64)
    pw = wmat[np.ix_(order, order)]

    labels = np.full(n, -1, dtype=np.int64)
    best_labels = np.full(n, -1, dtype=np.int64)
    best = np.inf
    nodes = 0
    bnd = _Bound(pw, k)

    stack_cost = np.zeros(n + 1)
    for i in range(k):
        add = 0.0
        for u in range(i):
            if labels[u] != i:
                add += pw[i, u]
        labels[i] = i
        stack_cost[i + 1] = stack_cost[i] + add
        bnd.assign(i, i, k, n)

    def rec(v, cost):
        nonlocal best, nodes
        nodes += 1
        if nodes > node_cap:
            raise RuntimeError("branch-and-bound node cap exceeded")
        if v == n:
            if cost < best:
                best = cost
                best_labels[:] = labels
            return
        for lab in range(k):
            add = bnd.tot[v] - bnd.same[v, lab]
            newcost = cost + add
            if newcost >= best:
                continue
            labels[v] = lab
            bnd.assign(v, lab, v + 1, n)
            if newcost + bnd.future(v + 1, n) < best:
                rec(v + 1, newcost)
            bnd.unassign(v, lab, v + 1, n)
            labels[v] = -1

    rec(k, stack_cost[k])

    out = np.empty(n, dtype=np.int64)
    out[order] = best_labels
    return float(best), out, nodes


def kcut_bb(wmat, k, node_cap):
    """Exact minimum k-cut by branch and bound over restricted growth strings.

    Only canonical labelings are explored (vertex 0 labeled 0, new labels
    extend the running maximum), pruning on crossing cost, the attachment
    bound, and infeasibility of opening the remaining blocks.  First
    optimum found is the lexicographically smallest canonical labeling.
    """
    wmat = np.asarray(wmat, dtype=np.float64)
    n = wmat.shape[0]
    labels = np.zeros(n, dtype=np.int64)
    best_labels = np.zeros(n, dtype=np.int64)
    best = np.inf
    nodes = 0
    bnd = _Bound(wmat, k)
    bnd.assign(0, 0, 1, n)

    def rec(v, cost, maxl):
        nonlocal best, nodes
        nodes += 1
        if nodes > node_cap:
            raise RuntimeError("branch-and-bound node cap exceeded")
        if v == n:
            if maxl == k - 1 and cost < best:
                best = cost
                best_labels[:] = labels
            return
        if (k - 1 - maxl) > (n - v):
            return
        top = min(maxl + 1, k - 1)
        for lab in range(top + 1):
            add = bnd.tot[v] - bnd.same[v, lab]
            newcost = cost + add
            if newcost >= best:
                continue
            labels[v] = lab
            bnd.assign(v, lab, v + 1, n)
            if newcost + bnd.future(v + 1, n) < best:
                rec(v + 1, newcost, lab if lab > maxl else maxl)
            bnd.unassign(v, lab, v + 1, n)
        labels[v] = 0

    rec(1, 0.0, 0)
    return float(best), best_labels, nodes
