# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled GF(p) kernels; the hot loops behind every elimination in the
package. Mirrors `_pure` exactly — see there for the contracts."""

from array import array

from cpython cimport array as carray


cdef inline long long _inv_mod(long long a, long long p):
    # p is a small prime, a != 0 mod p
    cdef long long result = 1
    cdef long long base = a % p
    cdef long long e = p - 2
    while e:
        if e & 1:
            result = result * base % p
        base = base * base % p
        e >>= 1
    return result


def mat_mul_flat(a, Py_ssize_t ar, Py_ssize_t ac, b, Py_ssize_t bc, long long p):
    cdef carray.array abuf = a if isinstance(a, array) else array("q", a)
    cdef carray.array bbuf = b if isinstance(b, array) else array("q", b)
    cdef carray.array obuf = carray.clone(abuf, ar * bc, True)
    cdef long long[::1] av = abuf
    cdef long long[::1] bv = bbuf
    cdef long long[::1] ov = obuf
    cdef Py_ssize_t i, j, k, abase, bbase, obase
    cdef long long aik
    for i in range(ar):
        abase = i * ac
        obase = i * bc
        for k in range(ac):
            aik = av[abase + k]
            if aik:
                bbase = k * bc
                for j in range(bc):
                    ov[obase + j] = (ov[obase + j] + aik * bv[bbase + j]) % p
    return obuf


def rref_flat(a, Py_ssize_t r, Py_ssize_t c, long long p):
    cdef carray.array buf = array("q", a)
    cdef long long[::1] m = buf
    cdef list pivots = []
    cdef Py_ssize_t pr = 0, col, k, j, sel, pbase, kbase
    cdef long long inv, f, tmp
    for col in range(c):
        sel = -1
        for k in range(pr, r):
            if m[k * c + col]:
                sel = k
                break
        if sel < 0:
            continue
        if sel != pr:
            pbase = pr * c
            kbase = sel * c
            for j in range(c):
                tmp = m[pbase + j]
                m[pbase + j] = m[kbase + j]
                m[kbase + j] = tmp
        pbase = pr * c
        inv = _inv_mod(m[pbase + col], p)
        if inv != 1:
            for j in range(col, c):
                m[pbase + j] = m[pbase + j] * inv % p
        for k in range(r):
            if k != pr:
                f = m[k * c + col]
                if f:
                    kbase = k * c
                    for j in range(col, c):
                        m[kbase + j] = (m[kbase + j] - f * m[pbase + j]) % p
        pivots.append(col)
        pr += 1
        if pr == r:
            break
    cdef carray.array flat = carray.clone(buf, pr * c, False)
    cdef long long[::1] fv = flat
    for j in range(pr * c):
        fv[j] = m[j]
    return flat, pivots


def ref_reduce(rows, pivots, Py_ssize_t width, v, long long p):
    cdef carray.array rbuf = rows if isinstance(rows, array) else array("q", rows)
    cdef carray.array out = array("q", v)
    cdef long long[::1] rv = rbuf
    cdef long long[::1] ov = out
    cdef Py_ssize_t i, j, base, pv
    cdef long long f
    cdef Py_ssize_t n = len(pivots)
    for i in range(n):
        pv = pivots[i]
        f = ov[pv]
        if f:
            base = i * width
            for j in range(pv, width):
                ov[j] = (ov[j] - f * rv[base + j]) % p
    return out
