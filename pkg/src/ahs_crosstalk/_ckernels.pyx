# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled propagation core.

Same contract as ``_pykernels``; the loops run without the GIL and in a fixed
order, so results are deterministic for a given input.
"""
from libc.math cimport cos, sin, sqrt
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

import numpy as np

ctypedef double complex cplx

BACKEND = "cython"


cdef void _apply(const cplx* psi, const double* diag, Py_ssize_t dim, int n,
                 cplx up, cplx down, cplx* out) noexcept nogil:
    cdef Py_ssize_t i, j, bit, lo, base
    cdef int k
    for i in range(dim):
        out[i] = diag[i] * psi[i]
    if up == 0:
        return
    for k in range(n):
        bit = (<Py_ssize_t>1) << k
        base = 0
        while base < dim:
            for lo in range(bit):
                i = base + lo
                j = i + bit
                out[j] = out[j] + up * psi[i]
                out[i] = out[i] + down * psi[j]
            base += 2 * bit


def apply(const cplx[::1] psi, const double[::1] diag, int n, cplx up, cplx[::1] out):
    """``out = H psi`` for diagonal ``diag`` and drive coupling ``up`` = <r|H|g>."""
    cdef Py_ssize_t dim = psi.shape[0]
    if diag.shape[0] != dim or out.shape[0] != dim or dim != ((<Py_ssize_t>1) << n):
        raise ValueError("dimension mismatch")
    with nogil:
        _apply(&psi[0], &diag[0], dim, n, up, up.conjugate(), &out[0])
    return np.asarray(out)


cdef int _taylor_step(cplx* psi, const double* diag, Py_ssize_t dim, int n,
                      cplx up, double h, double tol, int max_terms,
                      cplx* term, cplx* tmp) noexcept nogil:
    cdef Py_ssize_t i
    cdef int m
    cdef double nrm
    cdef cplx factor
    cdef cplx* swap
    memcpy(term, psi, dim * sizeof(cplx))
    for m in range(1, max_terms + 1):
        _apply(term, diag, dim, n, up, up.conjugate(), tmp)
        factor = -1j * h / m
        nrm = 0.0
        for i in range(dim):
            tmp[i] = tmp[i] * factor
            psi[i] = psi[i] + tmp[i]
            nrm += tmp[i].real * tmp[i].real + tmp[i].imag * tmp[i].imag
        swap = term
        term = tmp
        tmp = swap
        if sqrt(nrm) < tol:
            return m
    return -1


def propagate(cplx[::1] psi, const double[::1] vdw, const double[::1] nr,
              const double[::1] hb, const double[::1] omega, const double[::1] phi,
              const double[::1] dglobal, const double[::1] dlocal,
              double h, double tol, int max_terms):
    """Advance ``psi`` in place through ``len(omega)`` steps of size ``h``.

    Step ``s`` applies exp(-i h H_s) by truncated Taylor series, where H_s has
    diagonal ``vdw - dglobal[s]*nr - dlocal[s]*hb`` and drive Rabi frequency
    ``omega[s]`` with phase ``phi[s]``. Returns the largest number of Taylor
    terms used, or -1 if some step failed to converge.
    """
    cdef Py_ssize_t dim = psi.shape[0]
    cdef Py_ssize_t steps = omega.shape[0]
    cdef Py_ssize_t s, i
    cdef int n = 0, used, worst = 0
    cdef cplx up
    while ((<Py_ssize_t>1) << n) < dim:
        n += 1
    if ((<Py_ssize_t>1) << n) != dim or vdw.shape[0] != dim or nr.shape[0] != dim or hb.shape[0] != dim:
        raise ValueError("dimension mismatch")
    if phi.shape[0] != steps or dglobal.shape[0] != steps or dlocal.shape[0] != steps:
        raise ValueError("parameter arrays must have one entry per step")
    if steps == 0:
        return 0
    cdef cplx* term = <cplx*> malloc(dim * sizeof(cplx))
    cdef cplx* tmp = <cplx*> malloc(dim * sizeof(cplx))
    cdef double* diag = <double*> malloc(dim * sizeof(double))
    if term == NULL or tmp == NULL or diag == NULL:
        free(term); free(tmp); free(diag)
        raise MemoryError()
    try:
        with nogil:
            for s in range(steps):
                for i in range(dim):
                    diag[i] = vdw[i] - dglobal[s] * nr[i] - dlocal[s] * hb[i]
                up = 0.5 * omega[s] * (cos(phi[s]) - 1j * sin(phi[s]))
                used = _taylor_step(&psi[0], diag, dim, n, up, h, tol, max_terms, term, tmp)
                if used < 0:
                    worst = -1
                    break
                if used > worst:
                    worst = used
    finally:
        free(term); free(tmp); free(diag)
    return worst
