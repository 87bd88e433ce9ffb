"""Pure numpy implementations of the numerical hot spots.

Kept importable everywhere; the compiled extension in _kernels_cy mirrors
these signatures exactly and is preferred at import time when available.
"""

import numpy as np
import scipy.signal


def exp_smooth(fw, rho):
    """S_i = sum_j rho^(|i-j|) fw_j for a geometric ratio rho (possibly complex).

    Runs two first-order recursions (left and right accumulation), which is
    O(N) instead of the O(N^2) direct sum.
    """
    fw = np.asarray(fw, dtype=np.complex128)
    b = np.array([1.0], dtype=np.complex128)
    a = np.array([1.0, -rho], dtype=np.complex128)
    left = scipy.signal.lfilter(b, a, fw)
    right = scipy.signal.lfilter(b, a, fw[::-1])[::-1]
    return left + right - fw


def kp_disc(alpha, p, ks):
    """Lattice discriminant cos(pk) + alpha/(2k) sin(pk), finite at k=0."""
    ks = np.asarray(ks, dtype=float)
    x = p * ks
    return np.cos(x) + 0.5 * alpha * p * np.sinc(x / np.pi)


def _assemble_floquet(lmat, mmat, n, u, v, ik):
    """Bloch-cell matrices L*kron(w1, E_n) - M*kron(w2, E_n) for broadcast u, v, ik.

    u, v, ik are broadcast-compatible complex arrays; the result gains their
    broadcast shape as leading axes, trailing shape (2n, 2n).
    """
    l1, l2 = lmat[:, :n], lmat[:, n:]
    m1, m2 = mmat[:, :n], mmat[:, n:]
    w1_00 = ik * (u - 1.0)
    w1_01 = -ik * (v - 1.0)
    w1_10 = 1.0 - u
    w1_11 = 1.0 - v
    w2_00 = 0.5 * (u + 1.0)
    w2_01 = 0.5 * (v + 1.0)
    w2_10 = 0.5 * ik * (u + 1.0)
    w2_11 = -0.5 * ik * (v + 1.0)

    shape = np.broadcast(u, v).shape
    out = np.empty(shape + (2 * n, 2 * n), dtype=np.complex128)
    out[..., :, :n] = (
        l1 * w1_00[..., None, None]
        + l2 * w1_10[..., None, None]
        - m1 * w2_00[..., None, None]
        - m2 * w2_10[..., None, None]
    )
    out[..., :, n:] = (
        l1 * w1_01[..., None, None]
        + l2 * w1_11[..., None, None]
        - m1 * w2_01[..., None, None]
        - m2 * w2_11[..., None, None]
    )
    return out


def _normalized_absdet(mats, normalize=True):
    """|det| of each matrix, divided by the product of its row norms if asked.

    Normalized values are scale-free: they lie in [0, 1] (Hadamard's
    inequality), vanish exactly on singular matrices, and stay comparable
    across energies where the raw determinant grows like k^(2n). A zero row
    means singular, so 0.
    """
    dets = np.abs(np.linalg.det(mats))
    if not normalize:
        return dets
    norms = np.sqrt(np.sum(np.abs(mats) ** 2, axis=-1))
    denom = np.prod(norms, axis=-1)
    out = np.zeros_like(dets)
    good = denom > 0.0
    out[good] = dets[good] / denom[good]
    return out


def floquet_absdet_grid(lmat, mmat, p, n, ks, thetas, chunk=65536, normalize=True):
    """|det| of the Bloch-cell system on the (ks x thetas) grid.

    Row-norm normalized unless normalize=False. Returns shape
    (len(ks), len(thetas)). k may be complex (k = i*kappa scans negative
    energies).
    """
    ks = np.asarray(ks, dtype=np.complex128)
    thetas = np.asarray(thetas, dtype=float)
    kk, tt = np.meshgrid(ks, thetas, indexing="ij")
    kk = kk.ravel()
    tt = tt.ravel()
    out = np.empty(kk.size, dtype=float)
    for lo in range(0, kk.size, chunk):
        hi = min(lo + chunk, kk.size)
        kc, tc = kk[lo:hi], tt[lo:hi]
        bloch = np.exp(-1j * tc)
        u = bloch * np.exp(1j * kc * p)
        v = bloch * np.exp(-1j * kc * p)
        mats = _assemble_floquet(lmat, mmat, n, u, v, 1j * kc)
        out[lo:hi] = _normalized_absdet(mats, normalize)
    return out.reshape(len(ks), len(thetas))


def floquet_absdet_pairs(lmat, mmat, p, n, ks, thetas, normalize=True):
    """|det| at paired (ks[i], thetas[i]) samples, shape (len(ks),).

    Row-norm normalized unless normalize=False.
    """
    ks = np.asarray(ks, dtype=np.complex128)
    thetas = np.asarray(thetas, dtype=float)
    bloch = np.exp(-1j * thetas)
    u = bloch * np.exp(1j * ks * p)
    v = bloch * np.exp(-1j * ks * p)
    mats = _assemble_floquet(lmat, mmat, n, u, v, 1j * ks)
    return _normalized_absdet(mats, normalize)
