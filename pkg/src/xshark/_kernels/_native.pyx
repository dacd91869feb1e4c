# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled execute-stage kernels. Must match pyfallback bit for bit:
plain f32 ops, no FMA contraction (see -ffp-contract=off in setup.py),
ascending-k accumulation, input tiles snapshotted before writing dst, and
NaN results canonicalized to the quiet NaN 0x7fc00000 (payload propagation
is implementation-defined, so the ISA pins it)."""

from libc.string cimport memcpy

BACKEND = "native"

DEF LANES = 16
DEF TILE = 16

cdef float _canon_nan():
    cdef unsigned int bits = 0x7fc00000u
    cdef float f
    memcpy(&f, &bits, 4)
    return f

cdef float CANON = _canon_nan()


def v_add(unsigned char[::1] buf, Py_ssize_t d_off, Py_ssize_t a_off, Py_ssize_t b_off):
    cdef float* d = <float*><void*>&buf[d_off]
    cdef float* a = <float*><void*>&buf[a_off]
    cdef float* b = <float*><void*>&buf[b_off]
    cdef Py_ssize_t i
    cdef float v
    for i in range(LANES):
        v = a[i] + b[i]
        d[i] = CANON if v != v else v


def v_mul(unsigned char[::1] buf, Py_ssize_t d_off, Py_ssize_t a_off, Py_ssize_t b_off):
    cdef float* d = <float*><void*>&buf[d_off]
    cdef float* a = <float*><void*>&buf[a_off]
    cdef float* b = <float*><void*>&buf[b_off]
    cdef Py_ssize_t i
    cdef float v
    for i in range(LANES):
        v = a[i] * b[i]
        d[i] = CANON if v != v else v


def mxu_mm(unsigned char[::1] buf, Py_ssize_t d_off, Py_ssize_t a_off, Py_ssize_t b_off):
    cdef float a[TILE * TILE]
    cdef float b[TILE * TILE]
    cdef float* d = <float*><void*>&buf[d_off]
    cdef float* pa = <float*><void*>&buf[a_off]
    cdef float* pb = <float*><void*>&buf[b_off]
    cdef Py_ssize_t i, j, k
    cdef float acc
    for i in range(TILE * TILE):
        a[i] = pa[i]
        b[i] = pb[i]
    for i in range(TILE):
        for j in range(TILE):
            acc = d[i * TILE + j]
            for k in range(TILE):
                acc = acc + a[i * TILE + k] * b[k * TILE + j]
            d[i * TILE + j] = CANON if acc != acc else acc
