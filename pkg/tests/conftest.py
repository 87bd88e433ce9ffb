"""Shared helpers: random unitaries, random valid conditions, reducible systems."""

import numpy as np
import pytest

from pointchannels import (
    ABForm,
    ChannelSystem,
    InteractionPoint,
    LMForm,
    TransferForm,
    UForm,
    ab_to_lm,
    ab_to_transfer,
)

OMEGA_SIGN = 1.0


def haar_unitary(m, rng):
    """Haar-distributed unitary via QR with the standard phase fix."""
    z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_uform(n, rng):
    return UForm(haar_unitary(2 * n, rng))


def random_abform(n, rng):
    """AB pair drawn by left-multiplying a valid condition by a random invertible."""
    u = haar_unitary(2 * n, rng)
    a = np.eye(2 * n) - u
    b = 1j * (np.eye(2 * n) + u)
    g = rng.normal(size=(2 * n, 2 * n)) + 1j * rng.normal(size=(2 * n, 2 * n))
    g = g + 2.0 * np.eye(2 * n)
    return ABForm(g @ a, g @ b)


def random_lmform(n, rng):
    return ab_to_lm(random_abform(n, rng))


def random_transferform(n, rng, tries=64):
    """A random connecting condition in transfer parameterization."""
    for _ in range(tries):
        try:
            return ab_to_transfer(random_uform(n, rng).as_ab())
        except Exception:
            continue
    raise RuntimeError("failed to draw a connecting condition")


def scalar_blocks_to_big(theta, lams):
    """Assemble the 2n x 2n unitary whose Theta-reduction has the given
    2 x 2 scalar blocks (lams: sequence of n matrices)."""
    n = theta.shape[0]
    big = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    for s in range(n):
        proj = np.outer(theta[:, s], theta[:, s].conj())
        lam = np.asarray(lams[s])
        for a in range(2):
            for b in range(2):
                big[a * n : (a + 1) * n, b * n : (b + 1) * n] += lam[a, b] * proj
    return big


def build_reducible_system(n, positions, rng, theta=None):
    """Random reducible system; returns (system, theta, lams[point][channel])."""
    if theta is None:
        theta = haar_unitary(n, rng)
    pts = []
    all_lams = []
    for q in positions:
        lams = [haar_unitary(2, rng) for _ in range(n)]
        all_lams.append(lams)
        pts.append(InteractionPoint(q, UForm(scalar_blocks_to_big(theta, lams))))
    return ChannelSystem(n, pts), theta, all_lams


def projector_distance(form_a, form_b):
    pa = form_a.to_subspace().projector
    pb = form_b.to_subspace().projector
    return float(np.max(np.abs(pa - pb)))


def match_multiset(got, expected, tol):
    """Greedy matching of two lists of small matrices up to tol (max norm)."""
    got = list(got)
    for e in expected:
        hit = None
        for i, g in enumerate(got):
            if np.max(np.abs(np.asarray(g) - np.asarray(e))) <= tol:
                hit = i
                break
        if hit is None:
            return False
        got.pop(hit)
    return not got


@pytest.fixture
def rng():
    return np.random.default_rng(182417)
