"""Pure-Python twin of the compiled kernels.

Operates on plain lists internally (cheaper than elementwise numpy indexing)
but performs the exact arithmetic of the compiled core: IEEE doubles, same
expressions, same order.  See the package docstring for the draw contract.
"""

from __future__ import annotations

import numpy as np

EPSILON = 1e-9  # roulette floor so all-equal fitness stays selectable

GENOME_BITS = 9


def play_rounds(indptr, indices, p_post, q, l, c0, r0, c1, c2, r1, r2,
                payout, reward_to_author, R, K, C,
                posts, reads, comments_made, comments_received,
                meta_made, meta_received,
                rng, n_rounds, record, payout_fn=None):
    """Play ``n_rounds`` rounds, accumulating into the state arrays.

    Returns a list with one (posts, reads, comments, metas) event tuple per
    round when ``record`` is true, else None.  ``payout_fn`` overrides the
    constant per-post payout (pure backend only).
    """
    n = len(p_post)
    u01 = rng.random
    neigh = [indices[indptr[j]:indptr[j + 1]].tolist() for j in range(n)]
    pp = p_post.tolist()
    qv = q.tolist()
    lv = l.tolist()
    c0v = c0.tolist()
    r0v = r0.tolist()
    Rv = R.tolist()
    Kv = K.tolist()
    Cv = C.tolist()
    n_posts = posts.tolist()
    n_reads = reads.tolist()
    n_cm = comments_made.tolist()
    n_cr = comments_received.tolist()
    n_mm = meta_made.tolist()
    n_mr = meta_received.tolist()
    posted = [False] * n

    events = [] if record else None
    for _ in range(n_rounds):
        rposts, rreads, rcomments, rmetas = [], [], [], []
        for i in range(n):
            posted[i] = False
        # phase 1: posting trials
        for i in range(n):
            if u01() < pp[i]:
                posted[i] = True
                n_posts[i] += 1
                Cv[i] += c0v[i]
                Kv[i] += payout if payout_fn is None else payout_fn(i)
                if record:
                    rposts.append(i)
        # phase 2: reads, comments, meta-comments
        for j in range(n):
            s = 0
            for i in neigh[j]:
                if posted[i]:
                    s += 1
            if s == 0:
                continue
            for i in neigh[j]:
                if not posted[i]:
                    continue
                if u01() < qv[i] / s:
                    n_reads[j] += 1
                    if reward_to_author:
                        Rv[i] += r0v[i]
                    else:
                        Rv[j] += r0v[i]
                    if record:
                        rreads.append((i, j))
                    if u01() < lv[j] * qv[i]:
                        n_cm[j] += 1
                        n_cr[i] += 1
                        Cv[j] += c1
                        Rv[i] += r1
                        if record:
                            rcomments.append((i, j))
                        if u01() < lv[i] * qv[i]:
                            n_mm[i] += 1
                            n_mr[j] += 1
                            Cv[i] += c2
                            Rv[j] += r2
                            if record:
                                rmetas.append((i, j))
        if record:
            events.append((rposts, rreads, rcomments, rmetas))

    R[:] = Rv
    K[:] = Kv
    C[:] = Cv
    posts[:] = n_posts
    reads[:] = n_reads
    comments_made[:] = n_cm
    comments_received[:] = n_cr
    meta_made[:] = n_mm
    meta_received[:] = n_mr
    return events


def roulette_cumulative(values) -> list[float]:
    """Cumulative roulette weights: fitness shifted by its minimum plus a
    floor so the wheel stays well defined when all entries coincide."""
    mn = values[0]
    for v in values:
        if v < mn:
            mn = v
    cum = []
    acc = 0.0
    for v in values:
        acc += v - mn + EPSILON
        cum.append(acc)
    return cum


def pick(cum, u: float) -> int:
    """Index of the wheel slot hit by uniform draw ``u``."""
    target = u * cum[-1]
    for k, c in enumerate(cum):
        if target < c:
            return k
    return len(cum) - 1


def cross_bits(a: int, b: int, one_point: bool, u01) -> int:
    if one_point:
        cut = 1 + int(u01() * (GENOME_BITS - 1))
        mask = (1 << cut) - 1
        return (a & mask) | (b & ~mask & 0x1FF)
    out = 0
    for k in range(GENOME_BITS):
        src = a if u01() < 0.5 else b
        out |= src & (1 << k)
    return out


def mutate_bits(g: int, m: float, u01) -> int:
    for k in range(GENOME_BITS):
        if u01() < m:
            g ^= 1 << k
    return g


def evolve_generation(bits, fitness, population_wide, mutation_rate,
                      one_point, rng):
    """Produce the next generation's genome matrix (synchronous replacement).

    MWGA mode draws both parents of child (w, i) from the fitness column of
    agent i across worlds; population-wide mode (the naive GA baseline,
    W = 1) draws them from the whole population of the single world.
    """
    W, N = bits.shape
    if population_wide and W != 1:
        raise ValueError("population-wide selection requires a single world")
    u01 = rng.random
    b = bits.tolist()
    f = fitness.tolist()
    child = [[0] * N for _ in range(W)]
    if population_wide:
        cum = roulette_cumulative(f[0])
        row = b[0]
        out = child[0]
        for i in range(N):
            pa = row[pick(cum, u01())]
            pb = row[pick(cum, u01())]
            out[i] = mutate_bits(cross_bits(pa, pb, one_point, u01),
                                 mutation_rate, u01)
    else:
        cums = []
        for i in range(N):
            cums.append(roulette_cumulative([f[w][i] for w in range(W)]))
        for w in range(W):
            out = child[w]
            for i in range(N):
                cum = cums[i]
                pa = b[pick(cum, u01())][i]
                pb = b[pick(cum, u01())][i]
                out[i] = mutate_bits(cross_bits(pa, pb, one_point, u01),
                                     mutation_rate, u01)
    return np.array(child, dtype=np.uint16)
