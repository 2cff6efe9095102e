# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: exhaustive cut enumeration, max-flow, Stoer-Wagner,
and the branch-and-bound oracles.

Must stay semantically identical to ``_purekernels.py`` (same output orders,
same tie-breaks, same traversal order); the selector in ``kernels.py`` picks
whichever is available.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def bipartition_cut_costs(wmat, free, base_labels):
    """Cut costs of all 2^f labelings obtained by toggling ``free`` vertices.

    Index t encodes the labeling where ``free[j]`` carries label
    ``base_labels[free[j]] XOR bit_j(t)``.  Enumerated by a Gray-code walk
    with periodic from-scratch resyncs to keep float drift bounded.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] w = np.ascontiguousarray(wmat, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] fr = np.ascontiguousarray(free, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] lab = np.ascontiguousarray(base_labels, dtype=np.uint8).copy()
    cdef int n = w.shape[0]
    cdef int f = fr.shape[0]
    cdef Py_ssize_t total = (<Py_ssize_t>1) << f
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(total, dtype=np.float64)
    cdef double cost = 0.0
    cdef int i, j, v, p
    cdef Py_ssize_t t, g
    cdef double wv

    for i in range(n):
        for j in range(i + 1, n):
            if lab[i] != lab[j]:
                cost += w[i, j]
    out[0] = cost
    for t in range(1, total):
        p = 0
        while not (t >> p) & 1:
            p += 1
        v = fr[p]
        # flipping v moves every incident pair in or out of the cut
        for i in range(n):
            if i == v:
                continue
            wv = w[v, i]
            if wv != 0.0:
                if lab[i] != lab[v]:
                    cost -= wv
                else:
                    cost += wv
        lab[v] ^= 1
        if (t & 0xFFF) == 0:
            cost = 0.0
            for i in range(n):
                for j in range(i + 1, n):
                    if lab[i] != lab[j]:
                        cost += w[i, j]
        g = t ^ (t >> 1)
        out[g] = cost
    return out


def rgs_labelings(n, k):
    """All surjective restricted-growth strings of length n onto k labels,
    in lexicographic order (count = Stirling partition number S(n, k))."""
    cdef int cn = n, ck = k
    if ck < 1 or ck > cn:
        return np.zeros((0, cn), dtype=np.uint8)
    # Stirling numbers for the exact allocation
    cdef cnp.ndarray[cnp.int64_t, ndim=2] S = np.zeros((cn + 1, ck + 1), dtype=np.int64)
    cdef int a, b
    S[0, 0] = 1
    for a in range(1, cn + 1):
        for b in range(1, min(a, ck) + 1):
            S[a, b] = b * S[a - 1, b] + S[a - 1, b - 1]
    cdef Py_ssize_t count = S[cn, ck]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.empty((count, cn), dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] cur = np.zeros(cn, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int8_t, ndim=1] maxl = np.zeros(cn, dtype=np.int8)
    cdef Py_ssize_t row = 0
    cdef int pos = 1, lab, top, m
    cdef int[64] choice
    if cn == 1:
        out[0, 0] = 0
        return out
    choice[1] = 0
    while pos >= 1:
        lab = choice[pos]
        m = maxl[pos - 1]
        top = m + 1 if m + 1 < ck - 1 else ck - 1
        if lab > top:
            pos -= 1
            if pos >= 1:
                choice[pos] += 1
            continue
        cur[pos] = <cnp.uint8_t>lab
        maxl[pos] = m if m > lab else lab
        # prune branches that can no longer open the remaining blocks
        if (ck - 1 - maxl[pos]) > (cn - 1 - pos):
            choice[pos] += 1
            continue
        if pos == cn - 1:
            if maxl[pos] == ck - 1:
                for a in range(cn):
                    out[row, a] = cur[a]
                row += 1
            choice[pos] += 1
        else:
            pos += 1
            choice[pos] = 0
    return out


def batch_cut_costs(wmat, labelings):
    """Cut cost of every labeling row under the given weight matrix."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] w = np.ascontiguousarray(wmat, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] lab = np.ascontiguousarray(labelings, dtype=np.uint8)
    cdef Py_ssize_t L = lab.shape[0]
    cdef int n = w.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(L, dtype=np.float64)
    cdef Py_ssize_t r
    cdef int i, j
    cdef double c, wij
    for r in range(L):
        c = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                if lab[r, i] != lab[r, j]:
                    c += w[i, j]
        out[r] = c
    return out


cdef double _dinic_dfs(double[:, :] cap, long[:] level, long[:] it, int n,
                       int u, int t, double pushed, double eps):
    cdef int v
    cdef double d
    if u == t:
        return pushed
    while it[u] < n:
        v = <int>it[u]
        if cap[u, v] > eps and level[v] == level[u] + 1:
            d = _dinic_dfs(cap, level, it, n, v,
                           t, pushed if pushed < cap[u, v] else cap[u, v], eps)
            if d > 0:
                cap[u, v] -= d
                cap[v, u] += d
                return d
        it[u] += 1
    return 0.0


def dinic_min_st_cut(wmat, s, t):
    """Max-flow / min s-t cut on a dense symmetric capacity matrix.

    Returns ``(flow_value, source_mask)``; the source mask is the residual
    reachable set from s (the inclusion-minimal source side).
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cap = np.array(wmat, dtype=np.float64)
    cdef int n = cap.shape[0]
    cdef int cs = s, ct = t
    cdef double eps = 1e-12 * max(1.0, float(np.asarray(wmat).sum()))
    cdef double flow = 0.0, pushed
    cdef cnp.ndarray[cnp.int64_t, ndim=1] level = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] it = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] queue = np.empty(n, dtype=np.int64)
    cdef int qh, qt, u, v

    while True:
        for u in range(n):
            level[u] = -1
        level[cs] = 0
        queue[0] = cs
        qh, qt = 0, 1
        while qh < qt:
            u = <int>queue[qh]
            qh += 1
            for v in range(n):
                if level[v] < 0 and cap[u, v] > eps:
                    level[v] = level[u] + 1
                    queue[qt] = v
                    qt += 1
        if level[ct] < 0:
            break
        for u in range(n):
            it[u] = 0
        while True:
            pushed = _dinic_dfs(cap, level, it, n, cs, ct, float("inf"), eps)
            if pushed <= 0:
                break
            flow += pushed

    cdef cnp.ndarray[cnp.uint8_t, ndim=1] mask = np.zeros(n, dtype=np.uint8)
    mask[cs] = 1
    queue[0] = cs
    qh, qt = 0, 1
    while qh < qt:
        u = <int>queue[qh]
        qh += 1
        for v in range(n):
            if mask[v] == 0 and cap[u, v] > eps:
                mask[v] = 1
                queue[qt] = v
                qt += 1
    return flow, mask


def stoer_wagner(wmat):
    """Deterministic global minimum cut (n >= 2) via maximum-adjacency search;
    ties resolve to the lowest vertex index."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] w = np.array(wmat, dtype=np.float64)
    cdef int n = w.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] alive = np.ones(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] in_a = np.empty(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] key = np.empty(n, dtype=np.float64)
    # groups[v] tracks the original vertices merged into v as a bitmask list
    groups = [[v] for v in range(n)]
    cdef double best = float("inf"), cut_of_phase, kw
    best_side = [0]
    cdef int remaining = n, a, u, v, pick, slast, tlast, step

    while remaining > 1:
        a = -1
        for v in range(n):
            if alive[v]:
                a = v
                break
        for v in range(n):
            in_a[v] = 0
            key[v] = w[a, v]
        in_a[a] = 1
        slast = a
        tlast = a
        for step in range(remaining - 1):
            pick = -1
            kw = -1.0
            for v in range(n):
                if alive[v] and not in_a[v]:
                    if pick < 0 or key[v] > kw:
                        pick = v
                        kw = key[v]
            in_a[pick] = 1
            slast = tlast
            tlast = pick
            for v in range(n):
                if alive[v] and not in_a[v]:
                    key[v] += w[pick, v]
        cut_of_phase = 0.0
        for v in range(n):
            if alive[v] and v != tlast:
                cut_of_phase += w[tlast, v]
        if cut_of_phase < best:
            best = cut_of_phase
            best_side = list(groups[tlast])
        for v in range(n):
            if alive[v] and v != slast and v != tlast:
                w[slast, v] += w[tlast, v]
                w[v, slast] = w[slast, v]
        groups[slast].extend(groups[tlast])
        alive[tlast] = 0
        remaining -= 1

    mask = np.zeros(n, dtype=np.uint8)
    mask[best_side] = 1
    return best, mask


cdef struct BBState:
    int n
    int k
    Py_ssize_t nodes
    Py_ssize_t node_cap
    int overflow
    double best


cdef void _bb_assign(double[:, :] w, double[:] tot, double[:, :] same,
                     int v, int lab, int upto, int n):
    cdef int u
    cdef double wvu
    for u in range(upto, n):
        wvu = w[v, u]
        if wvu != 0.0:
            tot[u] += wvu
            same[u, lab] += wvu


cdef void _bb_unassign(double[:, :] w, double[:] tot, double[:, :] same,
                       int v, int lab, int upto, int n):
    cdef int u
    cdef double wvu
    for u in range(upto, n):
        wvu = w[v, u]
        if wvu != 0.0:
            tot[u] -= wvu
            same[u, lab] -= wvu


cdef double _bb_future(double[:] tot, double[:, :] same, int k, int upto, int n):
    cdef int u, lab
    cdef double b = 0.0, m
    for u in range(upto, n):
        m = 0.0
        for lab in range(k):
            if same[u, lab] > m:
                m = same[u, lab]
        b += tot[u] - m
    return b


cdef void _multiway_rec(BBState* st, double[:, :] w, double[:] tot,
                        double[:, :] same, long[:] labels, long[:] best_labels,
                        int v, double cost):
    cdef int lab, n = st.n, k = st.k, i
    cdef double add, newcost
    st.nodes += 1
    if st.nodes > st.node_cap:
        st.overflow = 1
        return
    if v == n:
        if cost < st.best:
            st.best = cost
            for i in range(n):
                best_labels[i] = labels[i]
        return
    for lab in range(k):
        add = tot[v] - same[v, lab]
        newcost = cost + add
        if newcost >= st.best:
            continue
        labels[v] = lab
        _bb_assign(w, tot, same, v, lab, v + 1, n)
        if newcost + _bb_future(tot, same, k, v + 1, n) < st.best:
            _multiway_rec(st, w, tot, same, labels, best_labels, v + 1, newcost)
        _bb_unassign(w, tot, same, v, lab, v + 1, n)
        labels[v] = -1
        if st.overflow:
            return


def multiway_bb(wmat, terminals, node_cap):
    """Exact minimum multiway cut by branch and bound (lex-smallest optimum).

    Returns (cost, labels, nodes); raises RuntimeError past ``node_cap``.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] wfull = np.ascontiguousarray(wmat, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] terms = np.ascontiguousarray(terminals, dtype=np.int64)
    cdef int n = wfull.shape[0]
    cdef int k = terms.shape[0]
    order_l = list(terms) + [v for v in range(n) if v not in set(terms.tolist())]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.asarray(order_l, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] w = np.ascontiguousarray(wfull[np.ix_(order_l, order_l)])

    cdef cnp.ndarray[cnp.float64_t, ndim=1] tot = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] same = np.zeros((n, k), dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] labels = np.full(n, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] best_labels = np.full(n, -1, dtype=np.int64)
    cdef BBState st
    st.n = n
    st.k = k
    st.nodes = 0
    st.node_cap = node_cap
    st.overflow = 0
    st.best = float("inf")

    cdef double cost = 0.0, add
    cdef int i, u
    for i in range(k):
        add = 0.0
        for u in range(i):
            if labels[u] != i:
                add += w[i, u]
        labels[i] = i
        cost += add
        _bb_assign(w, tot, same, i, i, k, n)

    _multiway_rec(&st, w, tot, same, labels, best_labels, k, cost)
    if st.overflow:
        raise RuntimeError("branch-and-bound node cap exceeded")
    out = np.empty(n, dtype=np.int64)
    out[order] = best_labels
    return st.best, out, st.nodes


cdef void _kcut_rec(BBState* st, double[:, :] w, double[:] tot,
                    double[:, :] same, long[:] labels, long[:] best_labels,
                    int v, double cost, int maxl):
    cdef int lab, top, n = st.n, k = st.k, i
    cdef double add, newcost
    st.nodes += 1
    if st.nodes > st.node_cap:
        st.overflow = 1
        return
    if v == n:
        if maxl == k - 1 and cost < st.best:
            st.best = cost
            for i in range(n):
                best_labels[i] = labels[i]
        return
    if (k - 1 - maxl) > (n - v):
        return
    top = maxl + 1 if maxl + 1 < k - 1 else k - 1
    for lab in range(top + 1):
        add = tot[v] - same[v, lab]
        newcost = cost + add
        if newcost >= st.best:
            continue
        labels[v] = lab
        _bb_assign(w, tot, same, v, lab, v + 1, n)
        if newcost + _bb_future(tot, same, k, v + 1, n) < st.best:
            _kcut_rec(st, w, tot, same, labels, best_labels, v + 1, newcost,
                      lab if lab > maxl else maxl)
        _bb_unassign(w, tot, same, v, lab, v + 1, n)
        if st.overflow:
            return
    labels[v] = 0


def kcut_bb(wmat, k, node_cap):
    """Exact minimum k-cut by branch and bound over restricted growth
    strings (lex-smallest canonical optimum)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] w = np.ascontiguousarray(wmat, dtype=np.float64)
    cdef int n = w.shape[0]
    cdef int ck = k
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tot = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] same = np.zeros((n, ck), dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] labels = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] best_labels = np.zeros(n, dtype=np.int64)
    cdef BBState st
    st.n = n
    st.k = ck
    st.nodes = 0
    st.node_cap = node_cap
    st.overflow = 0
    st.best = float("inf")
    _bb_assign(w, tot, same, 0, 0, 1, n)
    _kcut_rec(&st, w, tot, same, labels, best_labels, 1, 0.0, 0)
    if st.overflow:
        raise RuntimeError("branch-and-bound node cap exceeded")
    return st.best, best_labels, st.nodes
