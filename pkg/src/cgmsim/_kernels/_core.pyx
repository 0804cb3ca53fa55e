# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the simulation kernels.

Must stay bit-for-bit interchangeable with ``_purepy``: same draw order
(one ``next_double`` per stochastic decision), same IEEE double arithmetic
in the same order.  See the package docstring for the draw contract.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t

cnp.import_array()

cdef double EPSILON = 1e-9    # matches _purepy.EPSILON
cdef int NBITS = 9            # genome width; bit masks below assume it


cdef bitgen_t *_bitgen(object rng) except NULL:
    capsule = rng.bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline double _u01(bitgen_t *bg) noexcept nogil:
    return bg.next_double(bg.state)


cdef void _one_round(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices,
                     double[::1] p_post, double[::1] q, double[::1] l,
                     double[::1] c0, double[::1] r0,
                     double c1, double c2, double r1, double r2,
                     double payout, bint reward_to_author,
                     double[::1] R, double[::1] K, double[::1] C,
                     cnp.int64_t[::1] posts, cnp.int64_t[::1] reads,
                     cnp.int64_t[::1] comments_made,
                     cnp.int64_t[::1] comments_received,
                     cnp.int64_t[::1] meta_made,
                     cnp.int64_t[::1] meta_received,
                     cnp.uint8_t[::1] posted, bint record,
                     cnp.int64_t[::1] ev_posts,
                     cnp.int64_t[:, ::1] ev_reads,
                     cnp.int64_t[:, ::1] ev_comments,
                     cnp.int64_t[:, ::1] ev_metas,
                     cnp.int64_t[::1] ev_counts,
                     bitgen_t *bg) noexcept nogil:
    cdef Py_ssize_t n = p_post.shape[0]
    cdef Py_ssize_t i, j, k, s
    cdef cnp.int64_t n_posts = 0, n_reads = 0, n_comments = 0, n_metas = 0

    for i in range(n):
        posted[i] = 0
    # phase 1: posting trials
    for i in range(n):
        if _u01(bg) < p_post[i]:
            posted[i] = 1
            posts[i] += 1
            C[i] += c0[i]
            K[i] += payout
            if record:
                ev_posts[n_posts] = i
            n_posts += 1
    # phase 2: reads, comments, meta-comments
    for j in range(n):
        s = 0
        for k in range(indptr[j], indptr[j + 1]):
            if posted[indices[k]]:
                s += 1
        if s == 0:
            continue
        for k in range(indptr[j], indptr[j + 1]):
            i = indices[k]
            if not posted[i]:
                continue
            if _u01(bg) < q[i] / s:
                reads[j] += 1
                if reward_to_author:
                    R[i] += r0[i]
                else:
                    R[j] += r0[i]
                if record:
                    ev_reads[n_reads, 0] = i
                    ev_reads[n_reads, 1] = j
                n_reads += 1
                if _u01(bg) < l[j] * q[i]:
                    comments_made[j] += 1
                    comments_received[i] += 1
                    C[j] += c1
                    R[i] += r1
                    if record:
                        ev_comments[n_comments, 0] = i
                        ev_comments[n_comments, 1] = j
                    n_comments += 1
                    if _u01(bg) < l[i] * q[i]:
                        meta_made[i] += 1
                        meta_received[j] += 1
                        C[i] += c2
                        R[j] += r2
                        if record:
                            ev_metas[n_metas, 0] = i
                            ev_metas[n_metas, 1] = j
                        n_metas += 1
    ev_counts[0] = n_posts
    ev_counts[1] = n_reads
    ev_counts[2] = n_comments
    ev_counts[3] = n_metas


def play_rounds(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices,
                double[::1] p_post, double[::1] q, double[::1] l,
                double[::1] c0, double[::1] r0,
                double c1, double c2, double r1, double r2,
                double payout, bint reward_to_author,
                double[::1] R, double[::1] K, double[::1] C,
                cnp.int64_t[::1] posts, cnp.int64_t[::1] reads,
                cnp.int64_t[::1] comments_made,
                cnp.int64_t[::1] comments_received,
                cnp.int64_t[::1] meta_made,
                cnp.int64_t[::1] meta_received,
                object rng, int n_rounds, bint record):
    """Compiled round executor; same contract as the pure version, except
    that custom payout callables are not supported here."""
    cdef Py_ssize_t n = p_post.shape[0]
    cdef Py_ssize_t cap = indices.shape[0] if record else 1
    cdef bitgen_t *bg = _bitgen(rng)

    posted_arr = np.zeros(n, dtype=np.uint8)
    ev_posts_arr = np.zeros(n if record else 1, dtype=np.int64)
    ev_reads_arr = np.zeros((cap, 2), dtype=np.int64)
    ev_comments_arr = np.zeros((cap, 2), dtype=np.int64)
    ev_metas_arr = np.zeros((cap, 2), dtype=np.int64)
    ev_counts_arr = np.zeros(4, dtype=np.int64)

    cdef cnp.uint8_t[::1] posted = posted_arr
    cdef cnp.int64_t[::1] ev_posts = ev_posts_arr
    cdef cnp.int64_t[:, ::1] ev_reads = ev_reads_arr
    cdef cnp.int64_t[:, ::1] ev_comments = ev_comments_arr
    cdef cnp.int64_t[:, ::1] ev_metas = ev_metas_arr
    cdef cnp.int64_t[::1] ev_counts = ev_counts_arr

    events = [] if record else None
    cdef int r
    for r in range(n_rounds):
        with nogil:
            _one_round(indptr, indices, p_post, q, l, c0, r0,
                       c1, c2, r1, r2, payout, reward_to_author,
                       R, K, C, posts, reads,
                       comments_made, comments_received,
                       meta_made, meta_received,
                       posted, record,
                       ev_posts, ev_reads, ev_comments, ev_metas, ev_counts,
                       bg)
        if record:
            events.append((
                ev_posts_arr[:ev_counts[0]].tolist(),
                [(int(a), int(b)) for a, b in ev_reads_arr[:ev_counts[1]]],
                [(int(a), int(b)) for a, b in ev_comments_arr[:ev_counts[2]]],
                [(int(a), int(b)) for a, b in ev_metas_arr[:ev_counts[3]]],
            ))
    return events


cdef inline Py_ssize_t _pick(double[:, ::1] cums, Py_ssize_t row,
                             Py_ssize_t width, double u) noexcept nogil:
    cdef double target = u * cums[row, width - 1]
    cdef Py_ssize_t k
    for k in range(width):
        if target < cums[row, k]:
            return k
    return width - 1


cdef inline int _cross(int a, int b, bint one_point, bitgen_t *bg) noexcept nogil:
    cdef int out = 0, k, cut, mask
    if one_point:
        cut = 1 + <int> (_u01(bg) * (NBITS - 1))
        mask = (1 << cut) - 1
        return (a & mask) | (b & ~mask & 0x1FF)
    for k in range(NBITS):
        if _u01(bg) < 0.5:
            out |= a & (1 << k)
        else:
            out |= b & (1 << k)
    return out


cdef inline int _mutate(int g, double m, bitgen_t *bg) noexcept nogil:
    cdef int k
    for k in range(NBITS):
        if _u01(bg) < m:
            g ^= 1 << k
    return g


def evolve_generation(cnp.uint16_t[:, ::1] bits, double[:, ::1] fitness,
                      bint population_wide, double mutation_rate,
                      bint one_point, object rng):
    """Compiled next-generation builder; contract as the pure version."""
    cdef Py_ssize_t W = bits.shape[0]
    cdef Py_ssize_t N = bits.shape[1]
    if population_wide and W != 1:
        raise ValueError("population-wide selection requires a single world")
    cdef bitgen_t *bg = _bitgen(rng)

    child_arr = np.empty((W, N), dtype=np.uint16)
    cdef cnp.uint16_t[:, ::1] child = child_arr
    if population_wide:
        cums_arr = np.empty((1, N))
    else:
        cums_arr = np.empty((N, W))
    cdef double[:, ::1] cums = cums_arr

    cdef Py_ssize_t w, i, pa, pb
    cdef double mn, acc
    with nogil:
        if population_wide:
            mn = fitness[0, 0]
            for i in range(N):
                if fitness[0, i] < mn:
                    mn = fitness[0, i]
            acc = 0.0
            for i in range(N):
                acc += fitness[0, i] - mn + EPSILON
                cums[0, i] = acc
            for i in range(N):
                pa = _pick(cums, 0, N, _u01(bg))
                pb = _pick(cums, 0, N, _u01(bg))
                child[0, i] = <cnp.uint16_t> _mutate(
                    _cross(bits[0, pa], bits[0, pb], one_point, bg),
                    mutation_rate, bg)
        else:
            for i in range(N):
                mn = fitness[0, i]
                for w in range(W):
                    if fitness[w, i] < mn:
                        mn = fitness[w, i]
                acc = 0.0
                for w in range(W):
                    acc += fitness[w, i] - mn + EPSILON
                    cums[i, w] = acc
            for w in range(W):
                for i in range(N):
                    pa = _pick(cums, i, W, _u01(bg))
                    pb = _pick(cums, i, W, _u01(bg))
                    child[w, i] = <cnp.uint16_t> _mutate(
                        _cross(bits[pa, i], bits[pb, i], one_point, bg),
                        mutation_rate, bg)
    return child_arr
