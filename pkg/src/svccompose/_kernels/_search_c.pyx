# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled forward search over bitset-encoded STRIPS states.

Same contract as ``_search_py.bfs_plan``; states are fixed-width arrays of
uint64 words stored as ``bytes`` keys in the visited map.
"""

from libc.stdint cimport uint64_t
from libc.string cimport memcpy
from libc.stdlib cimport malloc, free


cdef inline bint _covers(const uint64_t* s, const uint64_t* m, Py_ssize_t w) noexcept nogil:
    cdef Py_ssize_t k
    for k in range(w):
        if (s[k] & m[k]) != m[k]:
            return False
    return True


cdef inline bint _disjoint(const uint64_t* s, const uint64_t* m, Py_ssize_t w) noexcept nogil:
    cdef Py_ssize_t k
    for k in range(w):
        if s[k] & m[k]:
            return False
    return True


def bfs_plan(const uint64_t[::1] pre_pos, const uint64_t[::1] pre_neg,
             const uint64_t[::1] add, const uint64_t[::1] dele,
             const uint64_t[::1] init, const uint64_t[::1] goal,
             Py_ssize_t n_words, int bound):
    cdef Py_ssize_t w = n_words
    cdef Py_ssize_t n_actions = add.shape[0] // w if w else 0
    cdef Py_ssize_t nbytes = w * 8
    cdef Py_ssize_t i, k, depth
    cdef uint64_t* cur
    cdef uint64_t* nxt
    cdef const uint64_t* g = &goal[0]
    cdef bytes key, skey
    cdef dict parent
    cdef list frontier, new_frontier

    if _covers(&init[0], g, w):
        return []

    cur = <uint64_t*> malloc(nbytes)
    nxt = <uint64_t*> malloc(nbytes)
    if cur == NULL or nxt == NULL:
        free(cur)
        free(nxt)
        raise MemoryError()
    try:
        key = (<const char*> &init[0])[:nbytes]
        parent = {key: None}
        frontier = [key]
        for depth in range(bound):
            new_frontier = []
            for skey in frontier:
                memcpy(cur, <const char*> skey, nbytes)
                for i in range(n_actions):
                    if not _covers(cur, &pre_pos[i * w], w):
                        continue
                    if not _disjoint(cur, &pre_neg[i * w], w):
                        continue
                    for k in range(w):
                        nxt[k] = (cur[k] & ~dele[i * w + k]) | add[i * w + k]
                    key = (<char*> nxt)[:nbytes]
                    if key in parent:
                        continue
                    parent[key] = (skey, i)
                    if _covers(nxt, g, w):
                        return _path(parent, key)
                    new_frontier.append(key)
            if not new_frontier:
                return None
            frontier = new_frontier
        return None
    finally:
        free(cur)
        free(nxt)


cdef list _path(dict parent, bytes state):
    cdef list out = []
    link = parent[state]
    while link is not None:
        prev, i = link
        out.append(i)
        link = parent[prev]
    out.reverse()
    return out
