"""Pure-numpy kernels (fallback path)."""
import numpy as np


def csr_gather_sum(ptr, col, row, w):
    """out[r] = sum(w[col[p]] for p in ptr[r]:ptr[r+1]).

    ``row`` is the expanded row index of every stored entry (sorted), which
    lets ``np.bincount`` accumulate sequentially in storage order.
    """
    nrows = ptr.shape[0] - 1
    if col.shape[0] == 0:
        return np.zeros(nrows)
    return np.bincount(row, weights=w[col], minlength=nrows)


def nb_walk_sums(succ_ptr, succ_col, dst, weight, first_edges, depth, n):
    """Enumerate every walk that starts with one of ``first_edges`` and
    continues along successor edges, up to ``depth`` edges long.

    Returns ``(sums, abs_sums, count)`` where ``sums[L, v]`` is the total
    product weight of walks with ``L`` edges ending at ``v``.  Walks are
    expanded level by level, one array row per walk.
    """
    sums = np.zeros((depth + 1, n))
    abs_sums = np.zeros((depth + 1, n))
    count = 0
    if depth < 1 or first_edges.shape[0] == 0:
        return sums, abs_sums, count
    edges = first_edges.astype(np.int64)
    w = weight[edges]
    for length in range(1, depth + 1):
        ends = dst[edges]
        np.add.at(sums[length], ends, w)
        np.add.at(abs_sums[length], ends, np.abs(w))
        count += edges.shape[0]
        if length == depth:
            break
        starts = succ_ptr[edges]
        lens = succ_ptr[edges + 1] - starts
        total = int(lens.sum())
        if total == 0:
            break
        offsets = np.arange(total) - np.repeat(np.cumsum(lens) - lens, lens)
        nxt = succ_col[np.repeat(starts, lens) + offsets]
        w = np.repeat(w, lens) * weight[nxt]
        edges = nxt
    return sums, abs_sums, count
