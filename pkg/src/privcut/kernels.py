"""Kernel backend selection.

The compiled extension (``_kernels``) is used when importable; otherwise the
pure numpy fallback (``_purekernels``) takes over transparently.  Setting the
environment variable ``PRIVCUT_PURE=1`` forces the fallback, which is how the
benchmark compares the two.  Both backends expose identical semantics.
"""

from __future__ import annotations

import os
from functools import lru_cache

import numpy as np

from . import _purekernels

if os.environ.get("PRIVCUT_PURE", "") not in ("", "0"):
    _impl = _purekernels
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _purekernels

BACKEND = _impl.BACKEND

bipartition_cut_costs = _impl.bipartition_cut_costs
batch_cut_costs = _impl.batch_cut_costs
dinic_min_st_cut = _impl.dinic_min_st_cut
stoer_wagner = _impl.stoer_wagner
multiway_bb = _impl.multiway_bb
kcut_bb = _impl.kcut_bb


@lru_cache(maxsize=32)
def rgs_labelings(n: int, k: int) -> np.ndarray:
    """Cached surjective restricted-growth strings (see backend docs)."""
    out = _impl.rgs_labelings(n, k)
    out.setflags(write=False)
    return out


def stirling2(n: int, k: int) -> int:
    """Stirling partition number S(n, k) as an exact integer."""
    if k < 0 or k > n:
        return 0
    row = [1] + [0] * k
    for _ in range(n):
        new = [0] * (k + 1)
        for b in range(1, k + 1):
            new[b] = b * row[b] + row[b - 1]
        row = new
    return row[k]


def decode_bipartition(index: int, free: np.ndarray, base_labels: np.ndarray) -> np.ndarray:
    """Labels for one index of :func:`bipartition_cut_costs`."""
    lab = np.array(base_labels, dtype=np.uint8)
    for j in range(len(free)):
        if (index >> j) & 1:
            lab[free[j]] ^= 1
    return lab


def decode_bipartitions(indices: np.ndarray, free: np.ndarray, base_labels: np.ndarray) -> np.ndarray:
    """Vectorized :func:`decode_bipartition` (rows in the order of ``indices``)."""
    indices = np.asarray(indices, dtype=np.int64)
    f = len(free)
    bits = ((indices[:, None] >> np.arange(f)[None, :]) & 1).astype(np.uint8)
    out = np.tile(np.asarray(base_labels, dtype=np.uint8), (indices.shape[0], 1))
    out[:, free] ^= bits
    return out
