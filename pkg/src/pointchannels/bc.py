"""Self-adjoint boundary conditions for n coupled half-line channels at a point.

A condition at a point q constrains the one-sided traces of an n-channel
function f. Four equivalent matrix parameterizations are supported:

* value/derivative pair form: ``A @ val = B @ der`` with the value trace
  ``val = (f(q-), f(q+))`` and the signed derivative trace
  ``der = (-f'(q-), f'(q+))``, both in C^(2n);
* unitary form: ``(val - i*der) = U @ (val + i*der)`` with U in U(2n);
* jump/mean pair form: ``L @ jump = M @ mean`` with
  ``jump = (f'(q-) - f'(q+), f(q+) - f(q-))`` and
  ``mean = ((f(q-) + f(q+))/2, (f'(q-) + f'(q+))/2)``;
* transfer form: ``(f'(q+), f(q+)) = C @ (f'(q-), f(q-))`` with n x n blocks
  C11, C12, C21, C22 (exists only when the condition couples the two sides).

Every form resolves to the same geometric object, a 2n-dimensional Lagrangian
subspace of boundary data in the fixed coordinate order
``(f(q-), f(q+), -f'(q-), f'(q+))``; conversions are compared through that
subspace because matrix pairs are only determined up to a left factor.
"""

import numpy as np

from .errors import (
    DegenerateSubspace,
    NotConnecting,
    NotSelfAdjoint,
    ParseError,
    RankDeficient,
    ShapeMismatch,
)

TOL_SA = 1e-9        # symmetry defect, scaled by max(1, input norms)
TOL_U = 1e-9         # unitarity defect, absolute
TOL_RANK = 1e-9      # relative smallest singular value before declaring rank loss
TOL_EQ = 1e-8        # projector distance below which two conditions are "the same"
MAX_CHANNELS = 64


def _fro(x):
    return float(np.linalg.norm(x))


def _scaled(tol, *mats):
    return tol * max(1.0, *(_fro(m) for m in mats))


def _square(x, name):
    m = np.array(x, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch("%s must be a square matrix, got shape %r" % (name, m.shape))
    m.setflags(write=False)
    return m


def _check_channels(n):
    if n < 1 or n > MAX_CHANNELS:
        raise ShapeMismatch("channel count n=%d outside supported range 1..%d" % (n, MAX_CHANNELS))


def _blocks2(tl, tr, bl, br):
    return np.block([[tl, tr], [bl, br]])


class BoundarySubspace:
    """A 2n-dim subspace of boundary data in (f(q-), f(q+), -f'(q-), f'(q+)) order.

    Carries an orthonormal basis (4n x 2n) and its orthogonal projector.
    Construction verifies the dimension and that the Green-identity form
    <val_x, der_y> - <der_x, val_y> vanishes on the subspace (the Lagrangian
    property equivalent to self-adjointness).
    """

    def __init__(self, n, basis, tol=1e-8):
        _check_channels(n)
        basis = np.array(basis, dtype=np.complex128)
        if basis.shape != (4 * n, 2 * n):
            raise DegenerateSubspace(
                "subspace basis must be 4n x 2n = %d x %d, got %r" % (4 * n, 2 * n, basis.shape)
            )
        gram = basis.conj().T @ basis
        if _fro(gram - np.eye(2 * n)) > 1e-10:
            # orthonormalize, then re-check the dimension survived
            q, r = np.linalg.qr(basis)
            if np.min(np.abs(np.diag(r))) < 1e-12:
                raise DegenerateSubspace("basis is numerically rank deficient")
            basis = q
        omega = np.zeros((4 * n, 4 * n), dtype=np.complex128)
        omega[: 2 * n, 2 * n :] = np.eye(2 * n)
        omega[2 * n :, : 2 * n] = -np.eye(2 * n)
        defect = _fro(basis.conj().T @ omega @ basis)
        if defect > tol:
            raise DegenerateSubspace(
                "subspace is not Lagrangian (Green form residual %.3e)" % defect
            )
        basis.setflags(write=False)
        self.n = n
        self.basis = basis
        self.projector = basis @ basis.conj().T
        self.projector.setflags(write=False)

    def distance(self, other):
        """Frobenius distance between the two orthogonal projectors."""
        return _fro(self.projector - other.projector)

    def contains(self, vec, tol=1e-9):
        vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
        scale = max(1.0, float(np.linalg.norm(vec)))
        return float(np.linalg.norm(self.projector @ vec - vec)) <= tol * scale

    def __repr__(self):
        return "BoundarySubspace(n=%d)" % self.n


class BoundaryForm:
    """Shared behaviour of the four parameterizations."""

    def as_ab(self):
        raise NotImplementedError

    def to_subspace(self):
        """The boundary subspace, computed once and cached."""
        cached = getattr(self, "_subspace", None)
        if cached is None:
            ab = self.as_ab()
            cached = _null_subspace(ab.a, ab.b, self.n, tol_scale=_tol_of(self))
            self._subspace = cached
        return cached

    def as_u(self):
        return ab_to_u(self.as_ab())

    def same_condition(self, other, tol=TOL_EQ):
        """True when both forms define the same subspace (projector distance)."""
        if self.n != other.n:
            return False
        return self.to_subspace().distance(other.to_subspace()) <= tol


class ABForm(BoundaryForm):
    """Pair form A @ val = B @ der. Validates self-adjointness on construction."""

    form_name = "ab"

    def __init__(self, a, b, tol_scale=1.0):
        a = _square(a, "a")
        b = _square(b, "b")
        if a.shape != b.shape:
            raise ShapeMismatch("a and b must have equal shape, got %r vs %r" % (a.shape, b.shape))
        if a.shape[0] % 2 != 0:
            raise ShapeMismatch("a and b must be 2n x 2n, got odd size %d" % a.shape[0])
        n = a.shape[0] // 2
        _check_channels(n)
        sym = a @ b.conj().T - b @ a.conj().T
        if _fro(sym) > tol_scale * _scaled(TOL_SA, a, b):
            raise NotSelfAdjoint(
                "A B* - B A* has norm %.3e, condition is not self-adjoint" % _fro(sym)
            )
        # maximal rank of (A B), cross-checked against the determinant criterion
        sv = np.linalg.svd(np.hstack([a, b]), compute_uv=False)
        rank_ok = sv[-1] > tol_scale * TOL_RANK * sv[0]
        det_ok = True
        for sign in (1.0, -1.0):
            s2 = np.linalg.svd(b + sign * 1j * a, compute_uv=False)
            if s2[-1] <= tol_scale * TOL_RANK * s2[0]:
                det_ok = False
        if rank_ok != det_ok or not rank_ok:
            raise RankDeficient(
                "(A B) rank test %s, det(B +/- iA) test %s (smallest rel. sv %.3e)"
                % ("pass" if rank_ok else "fail", "pass" if det_ok else "fail", sv[-1] / sv[0])
            )
        self.n = n
        self.a = a
        self.b = b
        self.tol_scale = float(tol_scale)

    def as_ab(self):
        return self

    def __repr__(self):
        return "ABForm(n=%d)" % self.n


class UForm(BoundaryForm):
    """Unitary form (val - i*der) = U @ (val + i*der), U a full 2n x 2n unitary."""

    form_name = "u"

    def __init__(self, u, tol_scale=1.0):
        u = _square(u, "u")
        if u.shape[0] % 2 != 0:
            raise ShapeMismatch("u must be 2n x 2n, got odd size %d" % u.shape[0])
        n = u.shape[0] // 2
        _check_channels(n)
        defect = _fro(u.conj().T @ u - np.eye(2 * n))
        if defect > tol_scale * TOL_U * max(1.0, 2 * n):
            raise NotSelfAdjoint("U is not unitary (defect %.3e)" % defect)
        self.n = n
        self.u = u
        self.tol_scale = float(tol_scale)

    def as_ab(self):
        return u_to_ab(self)

    def as_u(self):
        return self

    def __repr__(self):
        return "UForm(n=%d)" % self.n


class LMForm(BoundaryForm):
    """Jump/mean pair form L @ jump = M @ mean; same matrix conditions as (A, B)."""

    form_name = "lm"

    def __init__(self, l, m, tol_scale=1.0):
        l = _square(l, "l")
        m = _square(m, "m")
        if l.shape != m.shape:
            raise ShapeMismatch("l and m must have equal shape, got %r vs %r" % (l.shape, m.shape))
        if l.shape[0] % 2 != 0:
            raise ShapeMismatch("l and m must be 2n x 2n, got odd size %d" % l.shape[0])
        n = l.shape[0] // 2
        _check_channels(n)
        sym = l @ m.conj().T - m @ l.conj().T
        if _fro(sym) > tol_scale * _scaled(TOL_SA, l, m):
            raise NotSelfAdjoint(
                "L M* - M L* has norm %.3e, condition is not self-adjoint" % _fro(sym)
            )
        sv = np.linalg.svd(np.hstack([l, m]), compute_uv=False)
        if sv[-1] <= tol_scale * TOL_RANK * sv[0]:
            raise RankDeficient("(L M) is rank deficient (smallest rel. sv %.3e)" % (sv[-1] / sv[0]))
        self.n = n
        self.l = l
        self.m = m
        self.tol_scale = float(tol_scale)

    def as_ab(self):
        return lm_to_ab(self)

    def __repr__(self):
        return "LMForm(n=%d)" % self.n


class TransferForm(BoundaryForm):
    """Transfer form (f'(q+), f(q+)) = C @ (f'(q-), f(q-)) in n x n blocks."""

    form_name = "transfer"

    def __init__(self, c11, c12, c21, c22, tol_scale=1.0):
        c11 = _square(c11, "c11")
        c12 = _square(c12, "c12")
        c21 = _square(c21, "c21")
        c22 = _square(c22, "c22")
        n = c11.shape[0]
        _check_channels(n)
        for name, blk in (("c12", c12), ("c21", c21), ("c22", c22)):
            if blk.shape != (n, n):
                raise ShapeMismatch("%s must match c11 shape %r" % (name, c11.shape))
        tol = tol_scale * _scaled(TOL_SA, c11, c12, c21, c22)
        eye = np.eye(n)
        relations = [
            c12 @ c11.conj().T - c11 @ c12.conj().T,
            c21 @ c22.conj().T - c22 @ c21.conj().T,
            c11 @ c22.conj().T - c12 @ c21.conj().T - eye,
        ]
        for idx, res in enumerate(relations, start=1):
            if _fro(res) > tol:
                raise NotSelfAdjoint(
                    "transfer block relation %d violated (residual %.3e)" % (idx, _fro(res)),
                    relation_index=idx,
                )
        self.n = n
        self.c11 = c11
        self.c12 = c12
        self.c21 = c21
        self.c22 = c22
        self.tol_scale = float(tol_scale)

    @property
    def c(self):
        return _blocks2(self.c11, self.c12, self.c21, self.c22)

    def as_ab(self):
        return transfer_to_ab(self)

    def __repr__(self):
        return "TransferForm(n=%d)" % self.n


def validate_ab(a, b, tol_scale=1.0):
    """Check the pair conditions and wrap (a, b) as an ABForm."""
    return ABForm(a, b, tol_scale=tol_scale)


def validate_transfer(c11, c12, c21, c22, tol_scale=1.0):
    """Check the three transfer block relations and wrap the blocks."""
    return TransferForm(c11, c12, c21, c22, tol_scale=tol_scale)


def _tol_of(form):
    """Validation loosening carried by a form (1.0 when it never had one)."""
    return getattr(form, "tol_scale", 1.0)


def _null_subspace(a, b, n, tol_scale=1.0):
    """Null space of (A | -B) acting on (val, der) stacked boundary data."""
    big = np.hstack([a, -b])
    u_, sv, vh = np.linalg.svd(big, full_matrices=True)
    if sv[-1] <= TOL_RANK * sv[0]:
        raise DegenerateSubspace(
            "boundary matrix pair is rank deficient, null space exceeds 2n"
        )
    basis = vh[2 * n :].conj().T
    return BoundarySubspace(n, basis, tol=1e-8 * tol_scale)


def to_subspace(form):
    """Boundary subspace of any form (cached on the form object)."""
    return form.to_subspace()


def ab_to_u(form):
    """Unitary parameterization U = -(A - iB)^(-1) (A + iB) of a pair form."""
    ab = form.as_ab()
    u = -np.linalg.solve(ab.a - 1j * ab.b, ab.a + 1j * ab.b)
    return UForm(u, tol_scale=_tol_of(form))


def u_to_ab(form):
    """Pair form A = I - U, B = i(I + U)."""
    u = form.u if isinstance(form, UForm) else form.as_u().u
    eye = np.eye(u.shape[0])
    return ABForm(eye - u, 1j * (eye + u), tol_scale=_tol_of(form))


def _jump_mean_maps(n):
    """Coefficient matrices of the pair <-> jump/mean change of coordinates."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    d1 = _blocks2(zero, -eye, zero, eye)
    d2 = _blocks2(eye, zero, eye, zero)
    k1 = _blocks2(eye, eye, zero, zero)
    k2 = _blocks2(zero, zero, -eye, eye)
    return d1, d2, k1, k2


def ab_to_lm(form):
    """Convert a pair form to the jump/mean parameterization."""
    ab = form.as_ab()
    d1, d2, _, _ = _jump_mean_maps(ab.n)
    l = 0.5 * (ab.a @ d1 + ab.b @ d2)
    m = ab.b @ d1 - ab.a @ d2
    return LMForm(l, m, tol_scale=_tol_of(form))


def lm_to_ab(form):
    """Convert a jump/mean form back to a pair form (same subspace)."""
    if not isinstance(form, LMForm):
        raise ShapeMismatch("lm_to_ab expects an LMForm")
    _, _, k1, k2 = _jump_mean_maps(form.n)
    a = form.l @ k2 - 0.5 * form.m @ k1
    b = 0.5 * form.m @ k2 + form.l @ k1
    return ABForm(a, b, tol_scale=_tol_of(form))


def transfer_to_ab(form):
    """Pair form of a transfer condition."""
    if not isinstance(form, TransferForm):
        raise ShapeMismatch("transfer_to_ab expects a TransferForm")
    n = form.n
    eye = np.eye(n)
    zero = np.zeros((n, n))
    a = _blocks2(form.c12, zero, form.c22, -eye)
    b = _blocks2(form.c11, eye, form.c21, zero)
    return ABForm(a, b, tol_scale=_tol_of(form))


def ab_to_transfer(form):
    """Transfer form of a condition, when the subspace is a graph over the left data.

    Raises NotConnecting when boundary data on the left side does not
    determine the right side (separated or partially separated conditions).
    """
    sub = form.to_subspace()
    n = sub.n
    basis = sub.basis
    left = np.vstack([-basis[2 * n : 3 * n], basis[:n]])        # (f'(q-), f(q-)) rows
    right = np.vstack([basis[3 * n :], basis[n : 2 * n]])       # (f'(q+), f(q+)) rows
    sv = np.linalg.svd(left, compute_uv=False)
    if sv[-1] <= TOL_RANK * max(1.0, sv[0]):
        raise NotConnecting(
            "left boundary data does not span C^2n (smallest sv %.3e)" % sv[-1]
        )
    c = right @ np.linalg.inv(left)
    out = TransferForm(c[:n, :n], c[:n, n:], c[n:, :n], c[n:, n:], tol_scale=_tol_of(form))
    if out.to_subspace().distance(sub) > TOL_EQ:
        raise DegenerateSubspace("transfer extraction failed to reproduce the subspace")
    return out


def is_connecting(form):
    """Whether the condition admits a transfer representation."""
    try:
        ab_to_transfer(form)
    except NotConnecting:
        return False
    return True


# ---------------------------------------------------------------------------
# couplings


class CouplingSpec:
    """One of the four standard exchange couplings, identified by kind + strength.

    Kinds: 'delta', 'delta_prime_s', 'delta_p', 'delta_prime'. Kirchhoff is
    delta with strength 0. The unitary of the condition is
    a*E + b*J on C^(2n) with J the all-ones matrix; coefficients follow
    from the kind and strength through `coefficients(n)`.
    """

    KINDS = ("delta", "delta_prime_s", "delta_p", "delta_prime")

    def __init__(self, kind, strength):
        if kind not in self.KINDS:
            raise ParseError("unknown coupling kind %r" % (kind,))
        self.kind = kind
        self.strength = float(strength)

    def coefficients(self, n):
        """Scalars (a, b) with U = a*E_2n + b*J_2n for n channels."""
        s = self.strength
        if self.kind == "delta":
            return -1.0, 2.0 / (2 * n + 1j * s)
        if self.kind == "delta_prime_s":
            return 1.0, -2.0 / (2 * n - 1j * s)
        if self.kind == "delta_p":
            return (2 * n - 1j * s) / (2 * n + 1j * s), -2.0 / (2 * n + 1j * s)
        return -(2 * n + 1j * s) / (2 * n - 1j * s), 2.0 / (2 * n - 1j * s)

    def scaled(self, factor):
        """Same kind with strength multiplied by factor (channel reduction uses 1/n)."""
        return CouplingSpec(self.kind, self.strength * factor)

    def __eq__(self, other):
        return (
            isinstance(other, CouplingSpec)
            and self.kind == other.kind
            and self.strength == other.strength
        )

    def __repr__(self):
        return "CouplingSpec(%r, %g)" % (self.kind, self.strength)


def delta(alpha):
    return CouplingSpec("delta", alpha)


def delta_prime_s(beta):
    return CouplingSpec("delta_prime_s", beta)


def delta_p(alpha):
    return CouplingSpec("delta_p", alpha)


def delta_prime(beta):
    return CouplingSpec("delta_prime", beta)


def kirchhoff():
    return CouplingSpec("delta", 0.0)


def make_coupling(spec, n):
    """Unitary form of a standard coupling on n channels."""
    _check_channels(n)
    a, b = spec.coefficients(n)
    u = a * np.eye(2 * n) + b * np.ones((2 * n, 2 * n))
    return UForm(u)


def matrix_delta(strength):
    """Value-continuous condition with a matrix jump law for the derivatives.

    f(q-) = f(q+) and f'(q+) - f'(q-) = strength @ f(q); strength must be
    Hermitian n x n. The scalar case reduces to delta(alpha).
    """
    s = _square(strength, "strength")
    if _fro(s - s.conj().T) > _scaled(TOL_SA, s):
        raise NotSelfAdjoint("matrix delta strength must be Hermitian")
    n = s.shape[0]
    eye = np.eye(n)
    zero = np.zeros((n, n))
    a = _blocks2(eye, -eye, s, zero)
    b = _blocks2(zero, zero, eye, eye)
    return ABForm(a, b)


def coupling_domain_check(spec, n, trace, tol=1e-9):
    """Check the textbook trace relations of a coupling on one boundary vector.

    `trace` holds plain one-sided data (f(q-), f(q+), f'(q-), f'(q+)), each
    block of length n. Note the third block is the actual derivative, not the
    signed one used in subspace coordinates. Used as an independent oracle
    against make_coupling + to_subspace.
    """
    vec = np.asarray(trace, dtype=np.complex128).reshape(-1)
    if vec.size != 4 * n:
        raise ShapeMismatch("trace must have length 4n = %d, got %d" % (4 * n, vec.size))
    fm, fp, dm, dp = vec[:n], vec[n : 2 * n], vec[2 * n : 3 * n], vec[3 * n :]
    s = spec.strength
    scale = max(1.0, float(np.max(np.abs(vec))))
    tol = tol * scale

    def close(x, y=0.0):
        return np.all(np.abs(x - y) <= tol)

    if spec.kind == "delta":
        allvals = np.concatenate([fm, fp])
        common = np.mean(allvals)
        return close(allvals, common) and close(np.sum(dp - dm), s * common)
    if spec.kind == "delta_prime_s":
        allders = np.concatenate([-dm, dp])
        common = np.mean(allders)
        return close(allders, common) and close(np.sum(fp + fm), s * common)
    if spec.kind == "delta_p":
        plus = dp[:, None] - dp[None, :] - (s / (2 * n)) * (fp[:, None] - fp[None, :])
        minus = -dm[:, None] + dm[None, :] - (s / (2 * n)) * (fm[:, None] - fm[None, :])
        return close(plus) and close(minus) and close(np.sum(fm + fp))
    plus = fp[:, None] - fp[None, :] - (s / (2 * n)) * (dp[:, None] - dp[None, :])
    minus = fm[:, None] - fm[None, :] - (s / (2 * n)) * (-dm[:, None] + dm[None, :])
    return close(plus) and close(minus) and close(np.sum(dp - dm))


# ---------------------------------------------------------------------------
# serialization


def _mat_to_json(m):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _mat_from_json(obj, name):
    try:
        m = np.array([[complex(entry[0], entry[1]) for entry in row] for row in obj])
    except (TypeError, IndexError, ValueError) as exc:
        raise ParseError("bad matrix payload for %r: %s" % (name, exc))
    if m.ndim != 2:
        raise ParseError("matrix %r is not two dimensional" % name)
    return m


def form_to_json(form):
    """JSON-ready dict for a boundary condition form (row-major [re, im] pairs)."""
    if isinstance(form, ABForm):
        return {"form": "ab", "n": form.n, "a": _mat_to_json(form.a), "b": _mat_to_json(form.b)}
    if isinstance(form, UForm):
        return {"form": "u", "n": form.n, "u": _mat_to_json(form.u)}
    if isinstance(form, LMForm):
        return {"form": "lm", "n": form.n, "l": _mat_to_json(form.l), "m": _mat_to_json(form.m)}
    if isinstance(form, TransferForm):
        return {
            "form": "transfer",
            "n": form.n,
            "c11": _mat_to_json(form.c11),
            "c12": _mat_to_json(form.c12),
            "c21": _mat_to_json(form.c21),
            "c22": _mat_to_json(form.c22),
        }
    raise ParseError("cannot serialize %r" % (form,))


def coupling_to_json(spec, n):
    return {"form": "coupling", "n": n, "type": spec.kind, "strength": spec.strength}


def form_from_json(obj, n=None, tol_scale=1.0):
    """Rebuild a validated form from its JSON dict.

    Accepts the four matrix forms plus 'coupling' (returned as the UForm of
    make_coupling) and 'matrix_delta'. A surrounding config may pass its
    channel count to cross-check against the stored one; tol_scale loosens or
    tightens the validation tolerances.
    """
    if not isinstance(obj, dict) or "form" not in obj:
        raise ParseError("boundary condition entry must be a dict with a 'form' key")
    kind = obj["form"]
    stored_n = obj.get("n", n)
    if stored_n is None:
        raise ParseError("boundary condition needs a channel count 'n'")
    stored_n = int(stored_n)
    if n is not None and stored_n != n:
        raise ParseError("bc channel count %d does not match system n=%d" % (stored_n, n))
    try:
        if kind == "ab":
            return ABForm(
                _mat_from_json(obj["a"], "a"), _mat_from_json(obj["b"], "b"), tol_scale=tol_scale
            )
        if kind == "u":
            return UForm(_mat_from_json(obj["u"], "u"), tol_scale=tol_scale)
        if kind == "lm":
            return LMForm(
                _mat_from_json(obj["l"], "l"), _mat_from_json(obj["m"], "m"), tol_scale=tol_scale
            )
        if kind == "transfer":
            return TransferForm(
                _mat_from_json(obj["c11"], "c11"),
                _mat_from_json(obj["c12"], "c12"),
                _mat_from_json(obj["c21"], "c21"),
                _mat_from_json(obj["c22"], "c22"),
                tol_scale=tol_scale,
            )
        if kind == "coupling":
            ctype = obj.get("type")
            if ctype == "kirchhoff":
                return make_coupling(kirchhoff(), stored_n)
            strength = obj.get("strength", obj.get("alpha", obj.get("beta")))
            if strength is None:
                raise ParseError("coupling needs a 'strength' (or alpha/beta) value")
            return make_coupling(CouplingSpec(ctype, float(strength)), stored_n)
        if kind == "matrix_delta":
            return matrix_delta(_mat_from_json(obj["strength"], "strength"))
    except KeyError as exc:
        raise ParseError("missing key %s for form %r" % (exc, kind))
    raise ParseError("unknown boundary condition form %r" % (kind,))


def coupling_from_json(obj):
    """CouplingSpec encoded in a bc dict, or None when it is a matrix form."""
    if isinstance(obj, dict) and obj.get("form") == "coupling":
        ctype = obj.get("type")
        if ctype == "kirchhoff":
            return kirchhoff()
        strength = obj.get("strength", obj.get("alpha", obj.get("beta")))
        return CouplingSpec(ctype, float(strength))
    return None
