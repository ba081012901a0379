"""Compiled hot paths shared by the public modules.

Everything here works on flat ``int64`` gene arrays and a ``numpy.random.Generator``
passed in by the caller. Gene layout (one row, full levels-back)::

    [f_0, c_0_0 .. c_0_{a-1}, f_1, ..., f_{n-1}, c_{n-1}_*, o_0 .. o_{m-1}]

Addresses ``0..ni-1`` are program inputs, node ``i`` has address ``ni + i``.
"""

import numpy as np
from numba import njit

# boolean op codes
B_AND, B_OR, B_XOR, B_NOR, B_NAND, B_XNOR, B_ANDN, B_NOT, B_ID = range(9)
# real op codes
R_ADD, R_SUB, R_MUL, R_DIV, R_SIN, R_COS, R_LOG, R_EXP = range(8)

KIND_BOOLEAN = 0
KIND_REAL = 1

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_S1 = np.uint64(1)
_S2 = np.uint64(2)
_S4 = np.uint64(4)
_S56 = np.uint64(56)


@njit(cache=True)
def popcount64(x):
    x = x - ((x >> _S1) & _M1)
    x = (x & _M2) + ((x >> _S2) & _M2)
    x = (x + (x >> _S4)) & _M4
    return (x * _H01) >> _S56


@njit(cache=True)
def active_mask(genes, ni, nn, na, no, arity):
    active = np.zeros(nn, dtype=np.bool_)
    width = na + 1
    base = nn * width
    for k in range(no):
        a = genes[base + k]
        if a >= ni:
            active[a - ni] = True
    for i in range(nn - 1, -1, -1):
        if active[i]:
            g = i * width
            for j in range(arity[genes[g]]):
                a = genes[g + 1 + j]
                if a >= ni:
                    active[a - ni] = True
    return active


@njit(cache=True)
def apply_bool(op, a, b):
    if op == B_AND:
        return a & b
    if op == B_OR:
        return a | b
    if op == B_XOR:
        return a ^ b
    if op == B_NOR:
        return ~(a | b)
    if op == B_NAND:
        return ~(a & b)
    if op == B_XNOR:
        return ~(a ^ b)
    if op == B_ANDN:
        return a & ~b
    if op == B_NOT:
        return ~a
    return a


@njit(cache=True)
def apply_real(op, a, b):
    if op == R_ADD:
        return a + b
    if op == R_SUB:
        return a - b
    if op == R_MUL:
        return a * b
    if op == R_DIV:
        if b == 0.0:
            return 1.0
        return a / b
    if op == R_SIN:
        return np.sin(a)
    if op == R_COS:
        return np.cos(a)
    if op == R_LOG:
        if a == 0.0:
            return 0.0
        return np.log(np.abs(a))
    if op == R_EXP:
        return np.exp(a)
    return a


@njit(cache=True)
def exec_bool(ni, nn, node_idx, node_op, node_in, out_addr, words):
    """Run an explicit node list over packed truth-table words (ni, W)."""
    w = words.shape[1]
    vals = np.zeros((ni + nn, w), dtype=np.uint64)
    vals[:ni] = words
    for k in range(node_idx.shape[0]):
        dst = ni + node_idx[k]
        op = node_op[k]
        a = node_in[k, 0]
        b = node_in[k, 1] if node_in.shape[1] > 1 else a
        if b < 0:
            b = a
        for c in range(w):
            vals[dst, c] = apply_bool(op, vals[a, c], vals[b, c])
    out = np.empty((out_addr.shape[0], w), dtype=np.uint64)
    for k in range(out_addr.shape[0]):
        out[k] = vals[out_addr[k]]
    return out


@njit(cache=True)
def exec_real(ni, nn, node_idx, node_op, node_in, out_addr, points):
    """Run an explicit node list over input columns (ni, P)."""
    p = points.shape[1]
    vals = np.zeros((ni + nn, p), dtype=np.float64)
    vals[:ni] = points
    for k in range(node_idx.shape[0]):
        dst = ni + node_idx[k]
        op = node_op[k]
        a = node_in[k, 0]
        b = node_in[k, 1] if node_in.shape[1] > 1 else a
        if b < 0:
            b = a
        for c in range(p):
            vals[dst, c] = apply_real(op, vals[a, c], vals[b, c])
    out = np.empty((out_addr.shape[0], p), dtype=np.float64)
    for k in range(out_addr.shape[0]):
        out[k] = vals[out_addr[k]]
    return out


@njit(cache=True)
def fitness_bool(genes, ni, nn, na, no, arity, ops, words, target, mask):
    active = active_mask(genes, ni, nn, na, no, arity)
    width = na + 1
    w = words.shape[1]
    vals = np.empty((ni + nn, w), dtype=np.uint64)
    vals[:ni] = words
    for i in range(nn):
        if active[i]:
            g = i * width
            op = ops[genes[g]]
            a = genes[g + 1]
            b = genes[g + 2] if na > 1 else a
            for c in range(w):
                vals[ni + i, c] = apply_bool(op, vals[a, c], vals[b, c])
    base = nn * width
    diff = 0
    for k in range(no):
        src = genes[base + k]
        for c in range(w):
            diff += popcount64((vals[src, c] ^ target[k, c]) & mask[c])
    return float(diff)


@njit(cache=True)
def fitness_real(genes, ni, nn, na, no, arity, ops, points, target):
    active = active_mask(genes, ni, nn, na, no, arity)
    width = na + 1
    p = points.shape[1]
    vals = np.empty((ni + nn, p), dtype=np.float64)
    vals[:ni] = points
    for i in range(nn):
        if active[i]:
            g = i * width
            op = ops[genes[g]]
            a = genes[g + 1]
            b = genes[g + 2] if na > 1 else a
            for c in range(p):
                vals[ni + i, c] = apply_real(op, vals[a, c], vals[b, c])
    base = nn * width
    total = 0.0
    for k in range(no):
        src = genes[base + k]
        for c in range(p):
            total += np.abs(vals[src, c] - target[k, c])
    if not np.isfinite(total):
        return np.inf
    return total


# ---------------------------------------------------------------- mutation


@njit(cache=True)
def _resample_other(rng, lo, hi, current):
    v = lo + rng.integers(0, hi - lo - 1)
    if v >= current:
        v += 1
    return v


@njit(cache=True)
def point_mutate(genes, lo, hi, rate, rng):
    child = genes.copy()
    if rate <= 0.0:
        return child
    for g in range(child.shape[0]):
        if rng.random() < rate and hi[g] - lo[g] >= 2:
            child[g] = _resample_other(rng, lo[g], hi[g], child[g])
    return child


@njit(cache=True)
def active_gene_positions(genes, lo, hi, ni, nn, na, no, arity):
    """Mutable genes that are read by the phenotype (active function/used
    connection genes and output genes)."""
    active = active_mask(genes, ni, nn, na, no, arity)
    width = na + 1
    pos = np.empty(genes.shape[0], dtype=np.int64)
    n = 0
    for i in range(nn):
        if active[i]:
            g = i * width
            if hi[g] - lo[g] >= 2:
                pos[n] = g
                n += 1
            for j in range(arity[genes[g]]):
                if hi[g + 1 + j] - lo[g + 1 + j] >= 2:
                    pos[n] = g + 1 + j
                    n += 1
    base = nn * width
    for k in range(no):
        if hi[base + k] - lo[base + k] >= 2:
            pos[n] = base + k
            n += 1
    return pos[:n]


@njit(cache=True)
def single_active_mutate(genes, lo, hi, ni, nn, na, no, arity, rng):
    child = genes.copy()
    pos = active_gene_positions(genes, lo, hi, ni, nn, na, no, arity)
    if pos.shape[0] == 0:
        return child, False
    g = pos[rng.integers(0, pos.shape[0])]
    child[g] = _resample_other(rng, lo[g], hi[g], child[g])
    return child, True


@njit(cache=True)
def insert_node(genes, ni, nn, na, no, arity, rng):
    child = genes.copy()
    active = active_mask(genes, ni, nn, na, no, arity)
    width = na + 1
    base = nn * width
    # legal attachment sites per inactive node
    counts = np.zeros(nn, dtype=np.int64)
    n_cand = 0
    for m in range(nn):
        if active[m]:
            continue
        addr = ni + m
        c = 0
        for j in range(m + 1, nn):
            if active[j]:
                g = j * width
                for q in range(arity[genes[g]]):
                    if genes[g + 1 + q] < addr:
                        c += 1
        for k in range(no):
            if genes[base + k] < addr:
                c += 1
        counts[m] = c
        if c > 0:
            n_cand += 1
    if n_cand == 0:
        return child, False
    pick = rng.integers(0, n_cand)
    m = -1
    for i in range(nn):
        if counts[i] > 0:
            if pick == 0:
                m = i
                break
            pick -= 1
    addr = ni + m
    s_pick = rng.integers(0, counts[m])
    site = -1
    for j in range(m + 1, nn):
        if site >= 0:
            break
        if active[j]:
            g = j * width
            for q in range(arity[genes[g]]):
                if genes[g + 1 + q] < addr:
                    if s_pick == 0:
                        site = g + 1 + q
                        break
                    s_pick -= 1
    if site < 0:
        for k in range(no):
            if genes[base + k] < addr:
                if s_pick == 0:
                    site = base + k
                    break
                s_pick -= 1
    former = child[site]
    child[site] = addr
    g = m * width
    child[g + 1] = former
    # pool: program inputs plus active nodes below m
    n_pool = ni
    for i in range(m):
        if active[i]:
            n_pool += 1
    for q in range(1, na):
        r = rng.integers(0, n_pool)
        if r < ni:
            child[g + 1 + q] = r
        else:
            r -= ni
            for i in range(m):
                if active[i]:
                    if r == 0:
                        child[g + 1 + q] = ni + i
                        break
                    r -= 1
    return child, True


@njit(cache=True)
def _splice_out(genes, m, active, ni, nn, na, no, arity, allow_oti, rng):
    trial = genes.copy()
    width = na + 1
    base = nn * width
    addr = ni + m
    src = trial[m * width + 1]
    for j in range(m + 1, nn):
        if active[j]:
            g = j * width
            for q in range(arity[trial[g]]):
                if trial[g + 1 + q] == addr:
                    trial[g + 1 + q] = src
    n_other = 0
    for i in range(nn):
        if active[i] and i != m:
            n_other += 1
    for k in range(no):
        if trial[base + k] == addr:
            if src < ni and not allow_oti:
                r = rng.integers(0, n_other)
                for i in range(nn):
                    if active[i] and i != m:
                        if r == 0:
                            trial[base + k] = ni + i
                            break
                        r -= 1
            else:
                trial[base + k] = src
    return trial


@njit(cache=True)
def delete_node(genes, ni, nn, na, no, arity, min_active, allow_oti, rng):
    child = genes.copy()
    active = active_mask(genes, ni, nn, na, no, arity)
    n_active = 0
    for i in range(nn):
        if active[i]:
            n_active += 1
    if n_active <= min_active or n_active < 2:
        return child, False
    trials = np.empty((nn, genes.shape[0]), dtype=np.int64)
    removed = np.full(nn, nn + 1, dtype=np.int64)
    for m in range(nn):
        if not active[m]:
            continue
        trial = _splice_out(genes, m, active, ni, nn, na, no, arity, allow_oti, rng)
        after = active_mask(trial, ni, nn, na, no, arity)
        lost = 0
        for i in range(nn):
            if active[i] and not after[i]:
                lost += 1
        trials[m] = trial
        removed[m] = lost
    best = nn + 1
    for m in range(nn):
        # lost == 0 cannot happen for a valid splice; guard anyway
        if removed[m] >= 1 and removed[m] < best:
            best = removed[m]
    if best > nn or n_active - best < min_active:
        return child, False
    n_best = 0
    for m in range(nn):
        if removed[m] == best:
            n_best += 1
    pick = rng.integers(0, n_best)
    for m in range(nn):
        if removed[m] == best:
            if pick == 0:
                return trials[m].copy(), True
            pick -= 1
    return child, False


@njit(cache=True)
def breed(parent, lo, hi, ni, nn, na, no, arity, point_rate, ins_rate, del_rate,
          min_active, use_sagms, allow_oti, rng):
    if use_sagms:
        child, _ = single_active_mutate(parent, lo, hi, ni, nn, na, no, arity, rng)
    else:
        child = point_mutate(parent, lo, hi, point_rate, rng)
    if ins_rate > 0.0 and rng.random() < ins_rate:
        child, _ = insert_node(child, ni, nn, na, no, arity, rng)
    if del_rate > 0.0 and rng.random() < del_rate:
        child, _ = delete_node(child, ni, nn, na, no, arity, min_active, allow_oti, rng)
    return child


# ---------------------------------------------------------------- evolution


@njit(cache=True)
def _fitness(kind, genes, ni, nn, na, no, arity, ops, words, bool_target, mask,
             points, real_target):
    if kind == KIND_BOOLEAN:
        return fitness_bool(genes, ni, nn, na, no, arity, ops, words, bool_target, mask)
    return fitness_real(genes, ni, nn, na, no, arity, ops, points, real_target)


@njit(cache=True)
def evolve(parent, lo, hi, ni, nn, na, no, arity, ops, kind,
           words, bool_target, mask, points, real_target,
           lam, target_fitness, max_evals, max_gens,
           point_rate, ins_rate, del_rate, min_active, use_sagms, allow_oti,
           trace, rng):
    """(1+lambda) loop with neutral acceptance.

    Returns (best genes, best fitness, generations, evaluations, success,
    parent-fitness trace).
    """
    cur = parent.copy()
    cur_fit = _fitness(kind, cur, ni, nn, na, no, arity, ops, words, bool_target,
                       mask, points, real_target)
    evals = 1
    gen = 0
    n_trace = max_gens + 1 if trace else 0
    history = np.empty(n_trace, dtype=np.float64)
    if trace:
        history[0] = cur_fit
    if cur_fit <= target_fitness:
        return cur, cur_fit, gen, evals, True, history[:1]
    length = parent.shape[0]
    kids = np.empty((lam, length), dtype=np.int64)
    fits = np.empty(lam, dtype=np.float64)
    while True:
        if max_gens > 0 and gen >= max_gens:
            break
        if max_evals > 0 and evals + lam > max_evals:
            break
        gen += 1
        for k in range(lam):
            kids[k] = breed(cur, lo, hi, ni, nn, na, no, arity, point_rate, ins_rate,
                            del_rate, min_active, use_sagms, allow_oti, rng)
            fits[k] = _fitness(kind, kids[k], ni, nn, na, no, arity, ops, words,
                               bool_target, mask, points, real_target)
        evals += lam
        best = fits.min()
        if best <= cur_fit:
            n_best = 0
            for k in range(lam):
                if fits[k] == best:
                    n_best += 1
            pick = rng.integers(0, n_best)
            for k in range(lam):
                if fits[k] == best:
                    if pick == 0:
                        cur = kids[k].copy()
                        break
                    pick -= 1
            cur_fit = best
        if trace:
            history[gen] = cur_fit
        if cur_fit <= target_fitness:
            return cur, cur_fit, gen, evals, True, history[:gen + 1]
    if trace:
        return cur, cur_fit, gen, evals, False, history[:gen + 1]
    return cur, cur_fit, gen, evals, False, history[:0]
