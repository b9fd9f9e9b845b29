# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops; see _pykernels.py for the reference semantics."""

from libc.math cimport fabs


def lipschitz_pairs(const double[::1] times, const double[::1] scores, double c):
    cdef Py_ssize_t n = times.shape[0]
    cdef Py_ssize_t i, j
    cdef double total = 0.0
    cdef double dt, ti, si
    cdef long count = 0
    for i in range(n):
        ti = times[i]
        si = scores[i]
        for j in range(i + 1, n):
            dt = times[j] - ti
            if dt > c:
                break
            if dt > 0.0:
                total += fabs(scores[j] - si) / dt
                count += 1
    return total, count


def count_flips(const double[::1] scores, double tau):
    cdef Py_ssize_t n = scores.shape[0]
    cdef Py_ssize_t i
    cdef long flips = 0
    cdef int prev = -1
    cdef int state
    for i in range(n):
        state = 1 if scores[i] >= tau else 0
        if prev != -1 and state != prev:
            flips += 1
        prev = state
    return flips


def mann_whitney_u(const double[::1] scores, const signed char[::1] labels):
    cdef Py_ssize_t n = scores.shape[0]
    cdef Py_ssize_t i = 0, j
    cdef long p, q
    cdef long neg_below = 0
    cdef double u = 0.0
    while i < n:
        j = i
        p = 0
        q = 0
        while j < n and scores[j] == scores[i]:
            if labels[j]:
                p += 1
            else:
                q += 1
            j += 1
        u += <double>(p * neg_below) + 0.5 * <double>p * <double>q
        neg_below += q
        i = j
    return u


def average_precision(const double[::1] scores, const signed char[::1] labels):
    cdef Py_ssize_t n = scores.shape[0]
    cdef Py_ssize_t i = 0, j
    cdef long total_pos = 0, tp = 0, seen = 0, gp
    cdef double ap = 0.0
    for i in range(n):
        if labels[i]:
            total_pos += 1
    if total_pos == 0:
        return 0.0
    i = 0
    while i < n:
        j = i
        gp = 0
        while j < n and scores[j] == scores[i]:
            if labels[j]:
                gp += 1
            j += 1
        seen += j - i
        tp += gp
        if gp:
            ap += (<double>tp / <double>seen) * <double>gp
        i = j
    return ap / <double>total_pos
