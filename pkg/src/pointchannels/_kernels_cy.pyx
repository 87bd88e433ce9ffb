# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled versions of the numerical hot spots.

Mirrors _kernels_py exactly: same names, signatures and return conventions.
The kernels dispatcher prefers this module when the extension built.
"""

import numpy as np

from libc.math cimport cos, sin, sqrt


def exp_smooth(fw, rho):
    """S_i = sum_j rho^(|i-j|) fw_j for a geometric ratio rho (possibly complex).

    Runs two first-order recursions (left and right accumulation), which is
    O(N) instead of the O(N^2) direct sum.
    """
    cdef double complex[::1] f = np.ascontiguousarray(fw, dtype=np.complex128)
    cdef Py_ssize_t size = f.shape[0]
    out_arr = np.empty(size, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef double complex r = rho
    cdef double complex acc = 0.0
    cdef Py_ssize_t i
    for i in range(size):
        acc = f[i] + r * acc
        out[i] = acc
    acc = 0.0
    for i in range(size - 1, -1, -1):
        acc = f[i] + r * acc
        out[i] = out[i] + acc - f[i]
    return out_arr


def kp_disc(alpha, p, ks):
    """Lattice discriminant cos(pk) + alpha/(2k) sin(pk), finite at k=0."""
    ks_in = np.asarray(ks, dtype=np.float64)
    shape = ks_in.shape
    flat = np.ascontiguousarray(ks_in).ravel()
    cdef double[::1] kflat = flat
    out_arr = np.empty(flat.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double pp = p
    cdef double half_ap = 0.5 * alpha * p
    cdef double x
    cdef Py_ssize_t i
    for i in range(kflat.shape[0]):
        x = pp * kflat[i]
        if x == 0.0:
            out[i] = 1.0 + half_ap
        else:
            out[i] = cos(x) + half_ap * sin(x) / x
    res = out_arr.reshape(shape)
    if res.ndim == 0:
        return np.float64(res)
    return res


cdef double _normalized_absdet_one(double complex[:, ::1] g, Py_ssize_t size,
                                   bint normalize) nogil:
    """|det g|, divided by prod(row 2-norms) if asked; destroys g."""
    cdef double denom = 1.0
    cdef double rn, av, best
    cdef double absdet = 1.0
    cdef Py_ssize_t i, j, col, r, pivrow
    cdef double complex piv, factor, tmp

    if normalize:
        for i in range(size):
            rn = 0.0
            for j in range(size):
                av = abs(g[i, j])
                rn += av * av
            rn = sqrt(rn)
            if rn == 0.0:
                return 0.0
            denom *= rn

    for col in range(size):
        pivrow = col
        best = abs(g[col, col])
        for r in range(col + 1, size):
            av = abs(g[r, col])
            if av > best:
                best = av
                pivrow = r
        if best == 0.0:
            return 0.0
        if pivrow != col:
            for j in range(col, size):
                tmp = g[col, j]
                g[col, j] = g[pivrow, j]
                g[pivrow, j] = tmp
        piv = g[col, col]
        absdet *= abs(piv)
        for r in range(col + 1, size):
            factor = g[r, col] / piv
            for j in range(col + 1, size):
                g[r, j] = g[r, j] - factor * g[col, j]
    return absdet / denom


cdef void _assemble_one(double complex[:, ::1] g,
                        double complex[:, ::1] l,
                        double complex[:, ::1] m,
                        Py_ssize_t n,
                        double complex u,
                        double complex v,
                        double complex ik) nogil:
    cdef double complex w1_00 = ik * (u - 1.0)
    cdef double complex w1_01 = -ik * (v - 1.0)
    cdef double complex w1_10 = 1.0 - u
    cdef double complex w1_11 = 1.0 - v
    cdef double complex w2_00 = 0.5 * (u + 1.0)
    cdef double complex w2_01 = 0.5 * (v + 1.0)
    cdef double complex w2_10 = 0.5 * ik * (u + 1.0)
    cdef double complex w2_11 = -0.5 * ik * (v + 1.0)
    cdef Py_ssize_t i, j
    for i in range(2 * n):
        for j in range(n):
            g[i, j] = (l[i, j] * w1_00 + l[i, j + n] * w1_10
                       - m[i, j] * w2_00 - m[i, j + n] * w2_10)
            g[i, j + n] = (l[i, j] * w1_01 + l[i, j + n] * w1_11
                           - m[i, j] * w2_01 - m[i, j + n] * w2_11)


def floquet_absdet_grid(lmat, mmat, p, n, ks, thetas, chunk=65536, normalize=True):
    """|det| of the Bloch-cell system on the (ks x thetas) grid.

    Row-norm normalized unless normalize=False. Returns shape
    (len(ks), len(thetas)). k may be complex (k = i*kappa scans negative
    energies). chunk is accepted for signature parity; the compiled loop
    needs no chunking.
    """
    ks = np.asarray(ks, dtype=np.complex128)
    thetas = np.asarray(thetas, dtype=float)
    cdef double complex[:, ::1] l = np.array(lmat, dtype=np.complex128, order='C')
    cdef double complex[:, ::1] m = np.array(mmat, dtype=np.complex128, order='C')
    cdef double complex[::1] uk = np.ascontiguousarray(np.exp(1j * ks * p))
    cdef double complex[::1] vk = np.ascontiguousarray(np.exp(-1j * ks * p))
    cdef double complex[::1] bloch = np.ascontiguousarray(np.exp(-1j * thetas))
    cdef double complex[::1] kv = np.array(ks, dtype=np.complex128)
    cdef Py_ssize_t nn = n
    cdef Py_ssize_t nk = kv.shape[0]
    cdef Py_ssize_t nt = bloch.shape[0]
    out_arr = np.empty((nk, nt), dtype=float)
    cdef double[:, ::1] out = out_arr
    scratch_arr = np.empty((2 * nn, 2 * nn), dtype=np.complex128)
    cdef double complex[:, ::1] g = scratch_arr
    cdef Py_ssize_t i, t
    cdef double complex ik
    cdef bint norm = normalize
    with nogil:
        for i in range(nk):
            ik = 1j * kv[i]
            for t in range(nt):
                _assemble_one(g, l, m, nn, bloch[t] * uk[i], bloch[t] * vk[i], ik)
                out[i, t] = _normalized_absdet_one(g, 2 * nn, norm)
    return out_arr


def floquet_absdet_pairs(lmat, mmat, p, n, ks, thetas, normalize=True):
    """|det| at paired (ks[i], thetas[i]) samples, shape (len(ks),).

    Row-norm normalized unless normalize=False.
    """
    ks = np.asarray(ks, dtype=np.complex128)
    thetas = np.asarray(thetas, dtype=float)
    cdef double complex[:, ::1] l = np.array(lmat, dtype=np.complex128, order='C')
    cdef double complex[:, ::1] m = np.array(mmat, dtype=np.complex128, order='C')
    cdef double complex[::1] uk = np.ascontiguousarray(np.exp(1j * ks * p))
    cdef double complex[::1] vk = np.ascontiguousarray(np.exp(-1j * ks * p))
    cdef double complex[::1] bloch = np.ascontiguousarray(np.exp(-1j * thetas))
    cdef double complex[::1] kv = np.array(ks, dtype=np.complex128)
    cdef Py_ssize_t nn = n
    cdef Py_ssize_t nk = kv.shape[0]
    out_arr = np.empty(nk, dtype=float)
    cdef double[::1] out = out_arr
    scratch_arr = np.empty((2 * nn, 2 * nn), dtype=np.complex128)
    cdef double complex[:, ::1] g = scratch_arr
    cdef Py_ssize_t i
    cdef bint norm = normalize
    with nogil:
        for i in range(nk):
            _assemble_one(g, l, m, nn, bloch[i] * uk[i], bloch[i] * vk[i], 1j * kv[i])
            out[i] = _normalized_absdet_one(g, 2 * nn, norm)
    return out_arr
