# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp

ctypedef cnp.int64_t idx_t


def conjugacy_class_labels(table, inverse):
    cdef const idx_t[:, :] tab = np.ascontiguousarray(table, dtype=np.int64)
    cdef const idx_t[:] inv = np.ascontiguousarray(inverse, dtype=np.int64)
    cdef Py_ssize_t n = tab.shape[0]
    out = np.full(n, -1, dtype=np.int64)
    cdef idx_t[:] labels = out
    cdef Py_ssize_t x, g
    cdef idx_t next_label = 0
    for x in range(n):
        if labels[x] >= 0:
            continue
        for g in range(n):
            labels[tab[tab[inv[g], x], g]] = next_label
        next_label += 1
    return out


def pair_class_histogram(row, class_of, Py_ssize_t num_classes):
    cdef const idx_t[:] r = np.ascontiguousarray(row, dtype=np.int64)
    cdef const idx_t[:] cls = np.ascontiguousarray(class_of, dtype=np.int64)
    out = np.zeros((num_classes, num_classes), dtype=np.int64)
    cdef idx_t[:, :] counts = out
    cdef Py_ssize_t h
    for h in range(r.shape[0]):
        counts[cls[h], cls[r[h]]] += 1
    return out


def support_closure(pair_ptr, support_index, involution, seed):
    cdef const idx_t[:] ptr = np.ascontiguousarray(pair_ptr, dtype=np.int64)
    cdef const idx_t[:] sup = np.ascontiguousarray(support_index, dtype=np.int64)
    cdef const idx_t[:] inv = np.ascontiguousarray(involution, dtype=np.int64)
    cdef Py_ssize_t n = inv.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[:] members = out
    order_arr = np.empty(n, dtype=np.int64)
    cdef idx_t[:] order = order_arr
    cdef Py_ssize_t count = 0, done = 0, i, k, x, y, c
    seed_arr = np.ascontiguousarray(seed, dtype=np.uint8)
    cdef const cnp.uint8_t[:] s = seed_arr
    for i in range(n):
        if s[i] and not members[i]:
            members[i] = 1
            order[count] = i
            count += 1
    while done < count:
        x = order[done]
        done += 1
        if not members[inv[x]]:
            members[inv[x]] = 1
            order[count] = inv[x]
            count += 1
        for i in range(done):
            y = order[i]
            for k in range(ptr[x * n + y], ptr[x * n + y + 1]):
                c = sup[k]
                if not members[c]:
                    members[c] = 1
                    order[count] = c
                    count += 1
            for k in range(ptr[y * n + x], ptr[y * n + x + 1]):
                c = sup[k]
                if not members[c]:
                    members[c] = 1
                    order[count] = c
                    count += 1
    return out
