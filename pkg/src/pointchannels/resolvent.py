"""Resolvents of n-channel operators with point conditions at q_1 < ... < q_m.

The resolvent at spectral parameter zeta (off the essential spectrum [0, inf))
differs from the free one by a finite-rank correction built from the two
exponential profiles per point and channel,

    g_s(x) = e^(-kappa |x - q_s|) / (2 kappa),
    h_s(x) = sign(x - q_s) e^(-kappa |x - q_s|) / 2,    kappa = sqrt(-zeta),

whose coefficients solve a linear system in the jump/mean parameterization:
with block-diagonal L, M collecting the per-point forms, the mean boundary
data of the candidate solution is (free part) + Q(zeta) c, its jump data is
the coefficient vector c itself, so L c = M (free + Q c). The correction
coefficient matrix (M Q - L)^(-1) M depends only on the condition, not on the
(L, M) representative. Indices are laid out per point as the g-block of n
channels followed by the h-block; sign(0) = 0 throughout, which makes values
at an interaction point mean one-sided averages.
"""

import collections
import warnings

import numpy as np
import scipy.optimize

from .bc import ab_to_lm
from .errors import (
    NotRegular,
    OnEssentialSpectrum,
    ShapeMismatch,
    ToleranceWarning,
    WindowTooCoarse,
)
from .kernels import exp_smooth
from .reduction import ChannelSystem

TOL_SINGULAR = 1e-12    # relative smallest singular value of M Q - L
TOL_NEAR = 1e-10        # conditioning warning threshold
TAIL_DECADES = 12.0     # required grid margin in units of 1/Re(kappa)


def sqrt_minus(zeta):
    """kappa = sqrt(-zeta) with Re(kappa) > 0 away from the essential spectrum."""
    zeta = complex(zeta)
    if zeta.imag == 0.0 and zeta.real >= 0.0:
        raise OnEssentialSpectrum("zeta=%r lies on the essential spectrum [0, inf)" % (zeta,))
    return complex(np.sqrt(-zeta))


def g_basis(q, zeta, x):
    """Even exponential profile centered at q (value 1/(2 kappa) at q)."""
    kappa = sqrt_minus(zeta)
    return np.exp(-kappa * np.abs(np.asarray(x) - q)) / (2.0 * kappa)


def h_basis(q, zeta, x):
    """Odd exponential profile centered at q (jump 1 at q, sign(0)=0)."""
    kappa = sqrt_minus(zeta)
    x = np.asarray(x)
    return np.sign(x - q) * np.exp(-kappa * np.abs(x - q)) / 2.0


class KreinSystem:
    """A channel system with its conditions assembled into block-diagonal
    jump/mean matrices L, M of size 2mn x 2mn (point-major layout)."""

    def __init__(self, system):
        if isinstance(system, KreinSystem):
            raise ShapeMismatch("already a KreinSystem")
        if not isinstance(system, ChannelSystem):
            raise ShapeMismatch("expected a ChannelSystem")
        n = system.n
        m = len(system.points)
        lmat = np.zeros((2 * m * n, 2 * m * n), dtype=np.complex128)
        mmat = np.zeros_like(lmat)
        for s, p in enumerate(system.points):
            lm = ab_to_lm(p.bc.as_ab())
            sl = slice(2 * n * s, 2 * n * (s + 1))
            lmat[sl, sl] = lm.l
            mmat[sl, sl] = lm.m
        lmat.setflags(write=False)
        mmat.setflags(write=False)
        self.system = system
        self.n = n
        self.m = m
        self.positions = np.array(system.positions)
        self.lmat = lmat
        self.mmat = mmat

    def is_real(self):
        if self.m == 0:
            return True
        scale = max(1.0, float(np.abs(self.lmat).max()), float(np.abs(self.mmat).max()))
        return (
            float(np.abs(self.lmat.imag).max()) <= 1e-13 * scale
            and float(np.abs(self.mmat.imag).max()) <= 1e-13 * scale
        )

    def __repr__(self):
        return "KreinSystem(n=%d, m=%d)" % (self.n, self.m)


def _as_krein(system):
    return system if isinstance(system, KreinSystem) else KreinSystem(system)


def build_q(positions, n, zeta):
    """The 2mn x 2mn matrix mapping correction coefficients to mean data.

    Per point pair (l, s) the 2 x 2 scalar block (tensored with the n x n
    identity) is e^(-kappa d)/2 times [[1/kappa, sgn], [-sgn, -kappa]] with
    d = |q_l - q_s| and sgn = sign(q_l - q_s); the diagonal blocks lose their
    off-diagonal entries through sign(0) = 0.
    """
    kappa = sqrt_minus(zeta)
    qs = np.asarray(positions, dtype=float)
    m = len(qs)
    diff = qs[:, None] - qs[None, :]
    damp = np.exp(-kappa * np.abs(diff)) / 2.0
    sgn = np.sign(diff)
    small = np.zeros((2 * m, 2 * m), dtype=np.complex128)
    small[0::2, 0::2] = damp / kappa
    small[0::2, 1::2] = sgn * damp
    small[1::2, 0::2] = -sgn * damp
    small[1::2, 1::2] = -kappa * damp
    return np.kron(small, np.eye(n))


def _correction_matrix(ks, zeta):
    amat = ks.mmat @ build_q(ks.positions, ks.n, zeta) - ks.lmat
    if amat.size == 0:
        return amat
    sv = np.linalg.svd(amat, compute_uv=False)
    rel = sv[-1] / sv[0]
    if rel < TOL_SINGULAR:
        raise NotRegular(
            "M Q - L is singular at zeta=%r (relative smallest singular value %.3e); "
            "zeta is in or near the discrete spectrum" % (zeta, rel)
        )
    if rel < TOL_NEAR:
        warnings.warn(
            "M Q - L is badly conditioned at zeta=%r (%.3e)" % (zeta, rel), ToleranceWarning
        )
    return amat


def krein_alpha(system, zeta):
    """Correction coefficient matrix (M Q(zeta) - L)^(-1) M, shape 2mn x 2mn."""
    ks = _as_krein(system)
    amat = _correction_matrix(ks, zeta)
    return np.linalg.solve(amat, ks.mmat)


def green_kernel(system, zeta, x, y):
    """Resolvent kernel value G(zeta; x, y) as an n x n matrix."""
    ks = _as_krein(system)
    kappa = sqrt_minus(zeta)
    alpha = krein_alpha(ks, zeta)
    n, m = ks.n, ks.m

    def profiles(pt):
        d = np.abs(pt - ks.positions)
        damp = np.exp(-kappa * d)
        return np.stack([damp / (2.0 * kappa), np.sign(pt - ks.positions) * damp / 2.0], axis=1)

    phix = profiles(float(x))
    phiy = profiles(float(y))
    free = np.exp(-kappa * abs(float(x) - float(y))) / (2.0 * kappa) * np.eye(n)
    corr = np.einsum("sa,sajlbk,lb->jk", phix, alpha.reshape(m, 2, n, m, 2, n), phiy)
    return free - corr


def resolve(system, zeta, xs, f):
    """Apply the resolvent to a function sampled on a uniform grid.

    xs must be uniformly spaced with every interaction point on a node
    (the quadrature then stays second order through the kinks and jumps of
    the kernel profiles); f has shape (len(xs),) for one channel or
    (len(xs), n). Returns the solution samples in the same shape.
    """
    ks = _as_krein(system)
    n, m = ks.n, ks.m
    kappa = sqrt_minus(zeta)
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size < 8:
        raise ShapeMismatch("xs must be a 1-d grid with at least 8 nodes")
    h = float(xs[1] - xs[0])
    if h <= 0 or np.max(np.abs(np.diff(xs) - h)) > 1e-9 * h:
        raise ShapeMismatch("xs must be uniformly spaced and increasing")

    f = np.asarray(f, dtype=np.complex128)
    flat = f.ndim == 1
    if flat:
        f = f[:, None]
    if f.shape != (xs.size, n):
        raise ShapeMismatch("f must have shape (len(xs), n)=(%d, %d)" % (xs.size, n))

    node = np.rint((ks.positions - xs[0]) / h).astype(int)
    if m:
        if np.any(node < 0) or np.any(node >= xs.size):
            raise ShapeMismatch("every interaction point must lie inside the grid")
        if np.max(np.abs(xs[node] - ks.positions)) > 1e-6 * h:
            raise ShapeMismatch("interaction points must sit on grid nodes")
        margin = TAIL_DECADES / kappa.real
        if xs[0] > ks.positions[0] - margin or xs[-1] < ks.positions[-1] + margin:
            warnings.warn(
                "grid ends within %g of the outermost point; truncated exponential "
                "tails may spoil the quadrature" % margin,
                ToleranceWarning,
            )

    w = np.full(xs.size, h)
    w[0] = w[-1] = h / 2.0

    rho = np.exp(-kappa * h)
    u0 = np.stack([exp_smooth(w * f[:, j], rho) for j in range(n)], axis=1) / (2.0 * kappa)

    phi2 = np.zeros(2 * m * n, dtype=np.complex128)
    hprof = np.empty((m, xs.size), dtype=np.complex128)
    gprof = np.empty_like(hprof)
    for s in range(m):
        d = np.abs(xs - ks.positions[s])
        damp = np.exp(-kappa * d)
        gprof[s] = damp / (2.0 * kappa)
        hprof[s] = np.sign(xs - ks.positions[s]) * damp / 2.0
        phi2[2 * n * s : 2 * n * s + n] = u0[node[s]]
        phi2[2 * n * s + n : 2 * n * (s + 1)] = (w * hprof[s]) @ f

    amat = _correction_matrix(ks, zeta)
    coeff = -np.linalg.solve(amat, ks.mmat @ phi2)

    u = u0
    for s in range(m):
        u = u + np.outer(gprof[s], coeff[2 * n * s : 2 * n * s + n])
        u = u + np.outer(hprof[s], coeff[2 * n * s + n : 2 * n * (s + 1)])
    return u[:, 0] if flat else u


BoundState = collections.namedtuple("BoundState", ["energy", "multiplicity"])


def _detfun(ks, real_path):
    if real_path:
        lmat, mmat = ks.lmat.real, ks.mmat.real

        def det(e):
            q = build_q(ks.positions, ks.n, e)
            return float(np.linalg.det(mmat @ q.real - lmat))

    else:

        def det(e):
            q = build_q(ks.positions, ks.n, e)
            return complex(np.linalg.det(ks.mmat @ q - ks.lmat))

    return det


def _singular_data(ks, e):
    amat = ks.mmat @ build_q(ks.positions, ks.n, e) - ks.lmat
    sv = np.linalg.svd(amat, compute_uv=False)
    return sv[-1] / sv[0], int(np.sum(sv < 1e-8 * sv[0]))


def _polish(det, e, lo, hi):
    """Newton steps on det along the real axis; keeps the best magnitude seen.

    The bounded minimizer localizes a magnitude minimum only to about
    sqrt(eps); for a simple determinant root Newton recovers the remaining
    digits. Steps use the real part of det/det', which is the leading term
    of the distance to a real root.
    """
    best, best_mag = e, abs(det(e))
    for _ in range(16):
        h = 1e-7 * max(abs(e), 1e-3)
        d0 = det(e)
        deriv = (det(e + h) - det(e - h)) / (2.0 * h)
        if deriv == 0.0:
            break
        step = (d0 / deriv).real
        e_new = min(max(e - step, lo), hi)
        mag = abs(det(e_new))
        if mag < best_mag:
            best, best_mag = e_new, mag
        if abs(e_new - e) <= 1e-15 * max(1.0, abs(e)):
            break
        e = e_new
    return best


def _scan_window(ks, e_min, e_max, res):
    det = _detfun(ks, ks.is_real())
    es = np.linspace(e_min, e_max, res)
    es = es[es < 0.0]
    vals = np.array([det(e) for e in es])
    mags = np.abs(vals)

    candidates = []
    if ks.is_real():
        for i in np.where(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
            candidates.append(
                scipy.optimize.brentq(det, es[i], es[i + 1], xtol=1e-13, rtol=8.9e-16)
            )
    interior = np.where((mags[1:-1] <= mags[:-2]) & (mags[1:-1] <= mags[2:]))[0] + 1
    for i in interior:
        out = scipy.optimize.minimize_scalar(
            lambda e: abs(det(e)),
            bounds=(es[i - 1], es[i + 1]),
            method="bounded",
            options={"xatol": 1e-13},
        )
        candidates.append(_polish(det, float(out.x), es[i - 1], es[i + 1]))

    found = []
    for e in candidates:
        rel, mult = _singular_data(ks, e)
        if rel < 1e-8 and mult >= 1:
            if not any(abs(e - prev.energy) <= 1e-8 * max(1.0, abs(e)) for prev in found):
                found.append(BoundState(e, mult))
    return sorted(found)


def find_bound_states(system, e_min, e_max=0.0, resolution=1024):
    """Discrete spectrum in the window [e_min, e_max), e_max <= 0.

    Scans det(M Q(E) - L) on a grid: sign changes (real representations) and
    local minima of the magnitude are refined, then certified through the
    smallest singular value; multiplicity is the count of collapsed singular
    values. The scan is repeated at doubled resolution; a changed count
    triggers one more doubling (warned) before giving up with WindowTooCoarse.
    """
    if not (e_min < e_max <= 0.0):
        raise ShapeMismatch("window must satisfy e_min < e_max <= 0")
    ks = _as_krein(system)
    if ks.m == 0:
        return []
    first = _scan_window(ks, e_min, e_max, resolution)
    second = _scan_window(ks, e_min, e_max, 2 * resolution)
    if len(first) == len(second):
        return second
    third = _scan_window(ks, e_min, e_max, 4 * resolution)
    if len(second) == len(third):
        warnings.warn(
            "bound-state count stabilized only after refining the scan grid", ToleranceWarning
        )
        return third
    raise WindowTooCoarse(
        "bound-state count kept changing under grid refinement (%d/%d/%d)"
        % (len(first), len(second), len(third))
    )
