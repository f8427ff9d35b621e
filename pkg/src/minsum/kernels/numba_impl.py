"""numba-compiled kernels."""
import numpy as np
from numba import njit


@njit(cache=True)
def _gather_sum(ptr, col, w):
    nrows = ptr.shape[0] - 1
    out = np.zeros(nrows)
    for r in range(nrows):
        s = 0.0
        for p in range(ptr[r], ptr[r + 1]):
            s += w[col[p]]
        out[r] = s
    return out


def csr_gather_sum(ptr, col, row, w):
    # `row` is only needed by the numpy path; kept for a uniform signature.
    return _gather_sum(ptr, col, w)


@njit(cache=True)
def _nb_walk_sums(succ_ptr, succ_col, dst, weight, first_edges, depth, n):
    sums = np.zeros((depth + 1, n))
    abs_sums = np.zeros((depth + 1, n))
    count = 0
    if depth < 1:
        return sums, abs_sums, count
    stack_edge = np.empty(depth, np.int64)
    stack_pos = np.empty(depth, np.int64)
    stack_w = np.empty(depth)
    for q in range(first_edges.shape[0]):
        e0 = first_edges[q]
        lvl = 0
        stack_edge[0] = e0
        stack_w[0] = weight[e0]
        stack_pos[0] = succ_ptr[e0]
        sums[1, dst[e0]] += stack_w[0]
        abs_sums[1, dst[e0]] += abs(stack_w[0])
        count += 1
        while lvl >= 0:
            if lvl + 1 >= depth:
                lvl -= 1
                continue
            e = stack_edge[lvl]
            p = stack_pos[lvl]
            if p < succ_ptr[e + 1]:
                stack_pos[lvl] = p + 1
                f = succ_col[p]
                wf = stack_w[lvl] * weight[f]
                lvl += 1
                stack_edge[lvl] = f
                stack_w[lvl] = wf
                stack_pos[lvl] = succ_ptr[f]
                sums[lvl + 1, dst[f]] += wf
                abs_sums[lvl + 1, dst[f]] += abs(wf)
                count += 1
            else:
                lvl -= 1
    return sums, abs_sums, count


def nb_walk_sums(succ_ptr, succ_col, dst, weight, first_edges, depth, n):
    return _nb_walk_sums(
        succ_ptr, succ_col, dst, weight, np.asarray(first_edges, dtype=np.int64), int(depth), int(n)
    )
