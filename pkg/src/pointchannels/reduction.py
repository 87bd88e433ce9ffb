"""Decoupling of n-channel point conditions into independent scalar problems.

A system of conditions decouples iff the four n x n corner blocks of every
condition's unitary (across all interaction points) are normal and mutually
commuting; the decoupling change of basis is then any common eigenbasis.
After the basis change each channel s carries, at each point, an ordinary
scalar condition given by the 2 x 2 unitary of corresponding eigenvalues.
"""

import enum
import warnings

import numpy as np
import scipy.linalg

from .bc import BoundaryForm, UForm, _check_channels, _fro
from .errors import (
    NotReducible,
    NotSimultaneouslyDiagonalizable,
    ShapeMismatch,
    ToleranceWarning,
)

TOL_NORMAL = 1e-8
TOL_DIAG = 1e-9
BORDERLINE_FACTOR = 10.0


class InteractionPoint:
    """A position on the line together with its boundary condition."""

    def __init__(self, q, bc):
        q = float(q)
        if not np.isfinite(q):
            raise ShapeMismatch("interaction point position must be finite")
        if not isinstance(bc, BoundaryForm):
            raise ShapeMismatch("bc must be a boundary condition form")
        self.q = q
        self.bc = bc

    def __repr__(self):
        return "InteractionPoint(q=%g, %r)" % (self.q, self.bc)


class ChannelSystem:
    """n channels coupled at finitely many distinct points (kept sorted by q)."""

    def __init__(self, n, points):
        _check_channels(n)
        points = sorted(points, key=lambda p: p.q)
        for p in points:
            if p.bc.n != n:
                raise ShapeMismatch(
                    "condition at q=%g has n=%d, system has n=%d" % (p.q, p.bc.n, n)
                )
        qs = [p.q for p in points]
        gaps = np.diff(qs)
        if len(gaps) and np.min(gaps) <= 0.0:
            raise ShapeMismatch("interaction points must be pairwise distinct")
        self.n = n
        self.points = points

    @property
    def positions(self):
        return [p.q for p in self.points]

    def min_gap(self):
        qs = self.positions
        return float(np.min(np.diff(qs))) if len(qs) > 1 else np.inf

    def __repr__(self):
        return "ChannelSystem(n=%d, points=%r)" % (self.n, self.positions)


def unitary_blocks(form):
    """The four n x n corner blocks of the condition's 2n x 2n unitary."""
    u = form.as_u().u
    n = form.n
    return u[:n, :n], u[:n, n:], u[n:, :n], u[n:, n:]


class ReducibilityReport:
    """Outcome of the normal-and-commuting block test, truthy when reducible."""

    def __init__(self, reducible, witness=None, borderline=False, max_ratio=0.0):
        self.reducible = reducible
        self.witness = witness
        self.borderline = borderline
        self.max_ratio = max_ratio

    def __bool__(self):
        return self.reducible

    def __repr__(self):
        return "ReducibilityReport(reducible=%r, witness=%r)" % (self.reducible, self.witness)


def is_reducible(system, tol=TOL_NORMAL):
    """Test whether all condition blocks are normal and pairwise commuting.

    The witness of a failure names the first offending block (kind
    'non_normal') or block pair (kind 'non_commuting') by point position and
    block indices. Quantities within a factor 10 of the decision threshold
    raise a ToleranceWarning and set the borderline flag.
    """
    labeled = []
    for p in system.points:
        b11, b12, b21, b22 = unitary_blocks(p.bc)
        for (j, k), blk in (((1, 1), b11), ((1, 2), b12), ((2, 1), b21), ((2, 2), b22)):
            labeled.append((p.q, j, k, blk))

    witness = None
    ratios = []
    for q, j, k, x in labeled:
        defect = _fro(x @ x.conj().T - x.conj().T @ x)
        thr = tol * max(1.0, _fro(x) ** 2)
        ratios.append(defect / thr)
        if defect > thr and witness is None:
            witness = {
                "kind": "non_normal",
                "blocks": [(q, j, k)],
                "residual": defect,
                "threshold": thr,
            }
    for idx in range(len(labeled)):
        qa, ja, ka, x = labeled[idx]
        for qb, jb, kb, y in labeled[idx + 1 :]:
            defect = _fro(x @ y - y @ x)
            thr = tol * max(1.0, _fro(x) * _fro(y))
            ratios.append(defect / thr)
            if defect > thr and witness is None:
                witness = {
                    "kind": "non_commuting",
                    "blocks": [(qa, ja, ka), (qb, jb, kb)],
                    "residual": defect,
                    "threshold": thr,
                }

    ratios = np.array(ratios) if ratios else np.zeros(1)
    borderline = bool(np.any((ratios > 1.0 / BORDERLINE_FACTOR) & (ratios < BORDERLINE_FACTOR)))
    if borderline:
        warnings.warn(
            "reducibility test has residuals near the decision threshold "
            "(max ratio %.3g)" % float(np.max(ratios)),
            ToleranceWarning,
        )
    return ReducibilityReport(
        witness is None, witness=witness, borderline=borderline, max_ratio=float(np.max(ratios))
    )


def _is_scalar_family(family, dim, tol):
    for x in family:
        if _fro(x - (np.trace(x) / dim) * np.eye(dim)) > tol:
            return False
    return True


def _diag_recurse(family, rng, depth):
    dim = family[0].shape[0]
    if dim == 1:
        return np.eye(1, dtype=np.complex128)
    if depth > 32:
        raise NotSimultaneouslyDiagonalizable("cluster recursion failed to terminate")
    if _is_scalar_family(family, dim, 1e-11 * max(1.0, max(_fro(x) for x in family))):
        return np.eye(dim, dtype=np.complex128)

    herm = []
    for x in family:
        herm.append(x + x.conj().T)
        herm.append(1j * (x - x.conj().T))
    for _attempt in range(8):
        coeffs = rng.standard_normal(len(herm))
        h = sum(c * hm for c, hm in zip(coeffs, herm))
        hnorm = _fro(h)
        if hnorm < 1e-12:
            continue
        w, v = np.linalg.eigh(h)
        gap_thr = 1e-7 * max(1.0, hnorm)
        splits = np.where(np.diff(w) > gap_thr)[0]
        if len(splits) == 0:
            # the combination degenerated onto a single cluster; draw again
            continue
        bounds = [0] + list(splits + 1) + [dim]
        cols = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            vc = v[:, lo:hi]
            projected = [vc.conj().T @ x @ vc for x in family]
            w_inner = _diag_recurse(projected, rng, depth + 1)
            cols.append(vc @ w_inner)
        return np.hstack(cols)
    raise NotSimultaneouslyDiagonalizable(
        "random Hermitian combinations kept producing a single eigenvalue cluster"
    )


def simultaneous_diagonalizer(family, tol=TOL_DIAG, rng=None):
    """Common unitary eigenbasis of a family of commuting normal matrices.

    Eigendecomposes a random Hermitian combination of the family and recurses
    inside eigenvalue clusters, which handles degenerate spectra (the all-ones
    matrix, projections) without a gap assumption. The result is verified:
    off-diagonal residual of every conjugated member must stay below tol
    (scaled), otherwise NotSimultaneouslyDiagonalizable is raised.
    """
    family = [np.asarray(x, dtype=np.complex128) for x in family]
    if not family:
        raise ShapeMismatch("family must contain at least one matrix")
    dim = family[0].shape[0]
    for x in family:
        if x.shape != (dim, dim):
            raise ShapeMismatch("family matrices must share one square shape")
    if rng is None:
        rng = np.random.default_rng(182417)
    theta = _diag_recurse(family, rng, 0)
    for x in family:
        conj = theta.conj().T @ x @ theta
        off = conj - np.diag(np.diag(conj))
        if _fro(off) > tol * max(1.0, _fro(x)):
            raise NotSimultaneouslyDiagonalizable(
                "off-diagonal residual %.3e exceeds tolerance" % _fro(off)
            )
    return theta


class ReductionResult:
    """Decoupling basis theta plus per-point, per-channel 2 x 2 scalar blocks.

    lam has shape (num_points, n, 2, 2); lam[p, s] is the unitary of the
    scalar condition seen by channel s at the p-th point.
    """

    def __init__(self, theta, positions, lam):
        self.theta = theta
        self.positions = list(positions)
        self.lam = lam
        self.n = theta.shape[0]
        theta.setflags(write=False)
        lam.setflags(write=False)

    def scalar_condition(self, point_index, channel):
        return UForm(self.lam[point_index, channel])

    def channel_system(self, channel):
        """The decoupled single-channel system seen by one channel index."""
        pts = [
            InteractionPoint(q, UForm(self.lam[i, channel]))
            for i, q in enumerate(self.positions)
        ]
        return ChannelSystem(1, pts)

    def to_json_dict(self):
        theta = [[[float(z.real), float(z.imag)] for z in row] for row in self.theta]
        channels = []
        for i, q in enumerate(self.positions):
            for s in range(self.n):
                mat = [[[float(z.real), float(z.imag)] for z in row] for row in self.lam[i, s]]
                channels.append({"q": q, "s": s, "lambda": mat})
        return {"theta": theta, "channels": channels}

    def __repr__(self):
        return "ReductionResult(n=%d, points=%r)" % (self.n, self.positions)


def reduce_system(system, tol_diag=TOL_DIAG, rng=None):
    """Decouple a reducible system into n independent scalar conditions.

    Channels are ordered deterministically: by the eigenvalue assigned to the
    first block of the first point (lexicographic on (Re, Im), rounded to 8
    digits), with ties broken by the remaining blocks in point order.
    """
    report = is_reducible(system)
    if not report:
        raise NotReducible("system blocks are not normal/commuting", witness=report.witness)
    n = system.n
    if not system.points:
        return ReductionResult(np.eye(n, dtype=np.complex128), [], np.empty((0, n, 2, 2), dtype=np.complex128))
    family = []
    per_point_blocks = []
    for p in system.points:
        blks = unitary_blocks(p.bc)
        per_point_blocks.append(blks)
        family.extend(blks)
    theta = simultaneous_diagonalizer(family, tol=tol_diag, rng=rng)

    m = len(system.points)
    lam = np.empty((m, n, 2, 2), dtype=np.complex128)
    for i, blks in enumerate(per_point_blocks):
        for t, blk in enumerate(blks):
            diag = np.diag(theta.conj().T @ blk @ theta)
            lam[i, :, t // 2, t % 2] = diag

    # deterministic channel order: eigenvalue tuples across blocks, first block primary
    keys = []
    for i in range(m):
        for j in range(2):
            for k in range(2):
                keys.append(np.round(lam[i, :, j, k].real, 8))
                keys.append(np.round(lam[i, :, j, k].imag, 8))
    order = np.lexsort(tuple(reversed(keys)))
    theta = theta[:, order]
    lam = lam[:, order]

    for i in range(m):
        for s in range(n):
            blk = lam[i, s]
            if _fro(blk.conj().T @ blk - np.eye(2)) > 1e-8:
                raise NotSimultaneouslyDiagonalizable(
                    "scalar block at point %d channel %d is not unitary" % (i, s)
                )
    return ReductionResult(theta, system.positions, lam)


# ---------------------------------------------------------------------------
# structural reducibility certificates


class VectorRelation:
    """Scalar relation a*(f'(q+) + c'*f'(q-)) = b*(f(q+) + c*f(q-)) holding
    componentwise on the whole boundary subspace; (a, b) is stored normalized
    with a*a + b*b = 1 and a canonical sign."""

    def __init__(self, c, cprime, alpha, beta):
        norm = float(np.hypot(alpha, beta))
        if norm == 0.0:
            raise ShapeMismatch("vector relation needs a nonzero coefficient pair")
        alpha, beta = alpha / norm, beta / norm
        lead = alpha if abs(alpha) > 1e-12 else beta
        if lead < 0:
            alpha, beta = -alpha, -beta
        self.c = int(c)
        self.cprime = int(cprime)
        self.alpha = float(alpha)
        self.beta = float(beta)

    def __repr__(self):
        return "VectorRelation(c=%+d, c'=%+d, alpha=%.6g, beta=%.6g)" % (
            self.c,
            self.cprime,
            self.alpha,
            self.beta,
        )


def detect_vector_relation(bc, tol=1e-9):
    """All componentwise scalar value/derivative relations of one condition.

    For each sign pair (c, c') the residual map (alpha, beta) ->
    alpha*(G+ + c'*G-) - beta*(F+ + c*F-) applied to the subspace basis is a
    linear map from R^2 into matrices; relations are its near-null vectors
    (smallest singular value <= tol, relative). When the map vanishes
    entirely, the two generators (1,0) and (0,1) are returned for that pair.
    """
    sub = bc.to_subspace()
    n = sub.n
    v = sub.basis
    f_minus, f_plus = v[:n], v[n : 2 * n]
    g_minus, g_plus = -v[2 * n : 3 * n], v[3 * n :]

    out = []
    for c in (1, -1):
        for cp in (1, -1):
            p = g_plus + cp * g_minus
            r = f_plus + c * f_minus
            col_p = np.concatenate([p.real.ravel(), p.imag.ravel()])
            col_r = np.concatenate([r.real.ravel(), r.imag.ravel()])
            mat = np.stack([col_p, -col_r], axis=1)
            sv, vecs = np.linalg.svd(mat, full_matrices=False)[1:]
            if sv[0] <= tol:
                out.append(VectorRelation(c, cp, 1.0, 0.0))
                out.append(VectorRelation(c, cp, 0.0, 1.0))
            elif sv[1] <= tol * max(1.0, sv[0]):
                alpha, beta = vecs[1]
                out.append(VectorRelation(c, cp, alpha, beta))
    return out


class ContinuityKind(enum.Enum):
    CONTINUOUS = "continuous"
    ANTICONTINUOUS = "anticontinuous"
    DERIV_CONTINUOUS = "deriv_continuous"
    DERIV_ANTICONTINUOUS = "deriv_anticontinuous"


def continuity_class(bc, tol=1e-9):
    """Which of the four componentwise (anti)continuity properties hold.

    Reads them off detect_vector_relation: a relation with vanishing
    derivative coefficient and c=-1 says every f is continuous, c=+1
    anticontinuous; vanishing value coefficient classifies f'. A nonempty
    result certifies that the single-point condition is reducible.
    """
    out = set()
    for rel in detect_vector_relation(bc, tol=tol):
        if abs(rel.alpha) <= 1e-8:
            out.add(
                ContinuityKind.CONTINUOUS if rel.c == -1 else ContinuityKind.ANTICONTINUOUS
            )
        if abs(rel.beta) <= 1e-8:
            out.add(
                ContinuityKind.DERIV_CONTINUOUS
                if rel.cprime == -1
                else ContinuityKind.DERIV_ANTICONTINUOUS
            )
    return out


def permutation_invariant(bc, sigma, tol=1e-8):
    """Whether relabeling channels by sigma maps the condition onto itself.

    sigma is a sequence with sigma[j] = image of channel j (0-based). The
    permutation acts identically on all four trace blocks; invariance means
    the subspace projector commutes with that action.
    """
    n = bc.n
    sigma = list(sigma)
    if sorted(sigma) != list(range(n)):
        raise ShapeMismatch("sigma must be a permutation of 0..n-1")
    perm = np.zeros((n, n))
    for j, img in enumerate(sigma):
        perm[j, img] = 1.0
    big = np.kron(np.eye(4), perm)
    proj = bc.to_subspace().projector
    return _fro(big @ proj - proj @ big) <= tol * max(1.0, _fro(proj))


class ThetaInvariance:
    """Result of the commuting-symmetry test, truthy when theta commutes with
    every block; reduction_basis is set when the eigenvalues of theta are all
    simple, in which case its eigenbasis decouples the system."""

    def __init__(self, commutes, distinct_eigenvalues, reduction_basis=None):
        self.commutes = commutes
        self.distinct_eigenvalues = distinct_eigenvalues
        self.reduction_basis = reduction_basis

    def __bool__(self):
        return self.commutes

    def __repr__(self):
        return "ThetaInvariance(commutes=%r, distinct_eigenvalues=%r)" % (
            self.commutes,
            self.distinct_eigenvalues,
        )


def theta_invariant(system, theta, tol=1e-8, gap_tol=1e-8):
    """Test whether a unitary channel symmetry commutes with all blocks.

    When it does and its eigenvalues are pairwise separated by more than
    gap_tol, the system is reducible and the eigenbasis of theta is a valid
    decoupling basis (returned in the report).
    """
    theta = np.asarray(theta, dtype=np.complex128)
    n = system.n
    if theta.shape != (n, n):
        raise ShapeMismatch("theta must be n x n with the system's n=%d" % n)
    if _fro(theta.conj().T @ theta - np.eye(n)) > 1e-8 * max(1.0, n):
        raise ShapeMismatch("theta must be unitary")

    commutes = True
    for p in system.points:
        for blk in unitary_blocks(p.bc):
            if _fro(blk @ theta - theta @ blk) > tol * max(1.0, _fro(blk) * _fro(theta)):
                commutes = False
                break
        if not commutes:
            break

    tmat, z = scipy.linalg.schur(theta, output="complex")
    eigs = np.diag(tmat)
    dist = np.abs(eigs[:, None] - eigs[None, :]) + np.eye(n)
    distinct = bool(np.min(dist) > gap_tol)
    basis = z if (commutes and distinct) else None
    return ThetaInvariance(commutes, distinct, reduction_basis=basis)


def star_reduce(u, tol=1e-8):
    """Robin angles of a star vertex condition on n half-lines.

    The eigenvalues e^(i*theta_j) of the n x n vertex unitary give decoupled
    scalar conditions (1 - e^(i*theta)) g(0) = i (1 + e^(i*theta)) g'(0) on
    each half-line; theta=0 is Neumann, theta=pi Dirichlet. Returns the
    angles sorted in [0, 2*pi), a conjugation invariant of the condition.
    """
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ShapeMismatch("star condition must be a square matrix")
    n = u.shape[0]
    _check_channels(n)
    if _fro(u.conj().T @ u - np.eye(n)) > tol * max(1.0, n):
        raise ShapeMismatch("star condition must be unitary")
    tmat = scipy.linalg.schur(u, output="complex")[0]
    angles = np.mod(np.angle(np.diag(tmat)), 2.0 * np.pi)
    angles[angles > 2.0 * np.pi - 1e-9] = 0.0
    return np.sort(angles)
