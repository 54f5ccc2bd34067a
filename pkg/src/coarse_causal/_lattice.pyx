# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled enumeration of set partitions and quotient-acyclicity checks.

Partitions are restricted growth strings: ``labels[0] == 0`` and
``labels[i] <= 1 + max(labels[:i])``. Edge arrays hold 0-based node
indices.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t

cnp.import_array()

MAX_NODES = 63


cdef bint _acyclic(const signed char* lab, int k, const int* eu, const int* ev,
                   Py_ssize_t m, uint64_t* inmask) noexcept nogil:
    cdef Py_ssize_t i
    cdef int j, a, b
    cdef uint64_t remaining, one = 1
    cdef bint progress
    for j in range(k):
        inmask[j] = 0
    for i in range(m):
        a = lab[eu[i]]
        b = lab[ev[i]]
        if a != b:
            inmask[b] |= one << a
    remaining = (one << k) - 1
    while remaining:
        progress = False
        for j in range(k):
            if (remaining >> j) & 1 and (inmask[j] & remaining) == 0:
                remaining &= ~(one << j)
                progress = True
        if not progress:
            return False
    return True


def quotient_is_acyclic(labels, eu, ev):
    """True iff the quotient graph of the edges under ``labels`` is acyclic."""
    cdef cnp.ndarray[signed char, ndim=1] lab = np.ascontiguousarray(labels, dtype=np.int8)
    cdef cnp.ndarray[int, ndim=1] u = np.ascontiguousarray(eu, dtype=np.intc)
    cdef cnp.ndarray[int, ndim=1] v = np.ascontiguousarray(ev, dtype=np.intc)
    cdef int k = int(lab.max()) + 1 if lab.shape[0] else 0
    if k > MAX_NODES:
        raise ValueError("too many parts for the compiled kernel")
    cdef uint64_t inmask[64]
    return _acyclic(&lab[0], k, &u[0] if u.shape[0] else NULL,
                    &v[0] if v.shape[0] else NULL, u.shape[0], inmask)


def partition_labels(int d, eu=None, ev=None, Py_ssize_t capacity=0):
    """Enumerate restricted growth strings of length ``d`` in lexicographic order.

    With edge arrays given, keep only labelings whose quotient is acyclic.
    ``capacity`` must bound the number of results (a Bell number suffices).
    """
    if d < 1 or d > MAX_NODES:
        raise ValueError(f"d must be in 1..{MAX_NODES}")
    cdef bint check = eu is not None
    cdef cnp.ndarray[int, ndim=1] u = np.ascontiguousarray(eu if check else [], dtype=np.intc)
    cdef cnp.ndarray[int, ndim=1] v = np.ascontiguousarray(ev if check else [], dtype=np.intc)
    cdef Py_ssize_t m = u.shape[0]
    cdef const int* pu = &u[0] if m else NULL
    cdef const int* pv = &v[0] if m else NULL
    cdef cnp.ndarray[signed char, ndim=2] out = np.empty((capacity, d), dtype=np.int8)
    cdef signed char a[64]
    cdef signed char mx[64]
    cdef uint64_t inmask[64]
    cdef Py_ssize_t count = 0
    cdef int i, j
    for i in range(d):
        a[i] = 0
        mx[i] = 0
    with nogil:
        while True:
            if not check or _acyclic(a, mx[d - 1] + 1, pu, pv, m, inmask):
                if count >= capacity:
                    with gil:
                        raise ValueError("capacity exceeded")
                for j in range(d):
                    out[count, j] = a[j]
                count += 1
            i = d - 1
            while i >= 1 and a[i] > mx[i - 1]:
                i -= 1
            if i < 1:
                break
            a[i] += 1
            mx[i] = mx[i - 1] if mx[i - 1] > a[i] else a[i]
            for j in range(i + 1, d):
                a[j] = 0
                mx[j] = mx[i]
    return out[:count].copy()
