# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sweep kernel: per-direction lower-envelope update over lattice chains.

For one direction whose lattice step is a constant flat-index stride, the
nodes decompose into disjoint maximal chains.  Every node on a chain sees
the same clipped line, so one scan per chain updates all of its nodes.
Chains are independent; the outer loop is OpenMP-parallel.  Writes are
disjoint per direction, so results are identical for any thread count.
"""
import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange, threadid
from libc.math cimport INFINITY

BACKEND = "compiled"


cpdef void sweep_aligned(
    double[::1] old,
    double[::1] new,
    long long[::1] starts,
    long long[::1] lengths,
    long long stride,
    int di,
    int[::1] bestdir,
    int[::1] l1a,
    int[::1] l2a,
    double[::1] lama,
    double[:, ::1] wbuf,
    long long[:, ::1] ybuf,
    double[:, ::1] cbuf,
    int threads,
) noexcept:
    cdef Py_ssize_t nchains = starts.shape[0]
    cdef Py_ssize_t ci, j, t
    cdef long long s, L, node, lo, hi, n
    cdef int tid
    cdef double wi, lam, val, clo, chi
    for ci in prange(nchains, nogil=True, num_threads=threads, schedule="static"):
        tid = threadid()
        s = starts[ci]
        L = lengths[ci]
        if L < 2:
            continue
        # gather chain values
        for j in range(L):
            wbuf[tid, j] = old[s + j * stride]
        # lower-envelope scan, +inf samples skipped
        n = 0
        for j in range(L):
            wi = wbuf[tid, j]
            if wi == INFINITY:
                continue
            while n >= 2 and (
                (cbuf[tid, n - 1] - cbuf[tid, n - 2]) * (j - ybuf[tid, n - 1])
                >= (wi - cbuf[tid, n - 1]) * (ybuf[tid, n - 1] - ybuf[tid, n - 2])
            ):
                n = n - 1
            ybuf[tid, n] = j
            cbuf[tid, n] = wi
            n = n + 1
        if n < 2:
            continue
        # evaluate the hull strictly inside each support segment
        for t in range(n - 1):
            lo = ybuf[tid, t]
            hi = ybuf[tid, t + 1]
            clo = cbuf[tid, t]
            chi = cbuf[tid, t + 1]
            for j in range(lo + 1, hi):
                if wbuf[tid, j] == INFINITY:
                    continue
                lam = (<double> (j - lo)) / (<double> (hi - lo))
                val = lam * chi + (1.0 - lam) * clo
                node = s + j * stride
                if val < new[node]:
                    new[node] = val
                    bestdir[node] = di
                    l1a[node] = <int> (lo - j)
                    l2a[node] = <int> (hi - j)
                    lama[node] = lam
