"""Compiled and pure-python kernels must agree to rounding error."""

import subprocess
import sys

import numpy as np
import pytest

import pointchannels as pc
from pointchannels import _kernels_py as pyk
from pointchannels import kernels
from conftest import random_uform

try:
    from pointchannels import _kernels_cy as cyk
except ImportError:
    cyk = None

backends = [pyk] + ([cyk] if cyk is not None else [])


def cell_matrices(rng, n=2):
    lm = pc.ab_to_lm(random_uform(n, rng).as_ab())
    return lm.l, lm.m


@pytest.mark.parametrize("impl", backends)
def test_exp_smooth_matches_direct_sum(impl, rng):
    for _ in range(5):
        size = int(rng.integers(3, 60))
        f = rng.normal(size=size) + 1j * rng.normal(size=size)
        rho = complex(0.2 + 0.7 * rng.random(), 0.5 * rng.random())
        idx = np.arange(size)
        direct = (rho ** np.abs(idx[:, None] - idx[None, :])) @ f
        got = impl.exp_smooth(f, rho)
        assert np.max(np.abs(got - direct)) < 1e-10 * max(1.0, np.max(np.abs(direct)))


@pytest.mark.parametrize("impl", backends)
def test_kp_disc_formula_and_zero(impl):
    p = np.pi
    ks = np.linspace(0.1, 8.0, 200)
    expected = np.cos(p * ks) + 1.7 / (2 * ks) * np.sin(p * ks)
    got = impl.kp_disc(1.7, p, ks)
    assert np.max(np.abs(got - expected)) < 1e-12
    assert abs(impl.kp_disc(1.7, p, np.array(0.0)) - (1.0 + 1.7 * p / 2)) < 1e-14
    # shape preserved, scalars stay scalar-like
    assert impl.kp_disc(1.0, p, np.zeros((3, 4))).shape == (3, 4)


def test_backends_agree_on_floquet(rng):
    if cyk is None:
        pytest.skip("compiled backend not built")
    l, m = cell_matrices(rng)
    ks = np.linspace(0.05, 5.0, 40).astype(complex)
    thetas = np.linspace(0.0, 2 * np.pi, 17)
    for normalize in (True, False):
        a = pyk.floquet_absdet_grid(l, m, np.pi, 2, ks, thetas, normalize=normalize)
        b = cyk.floquet_absdet_grid(l, m, np.pi, 2, ks, thetas, normalize=normalize)
        assert a.shape == b.shape == (40, 17)
        scale = max(1.0, float(np.max(a)))
        assert np.max(np.abs(a - b)) < 1e-10 * scale
    kp = ks[:17]
    for normalize in (True, False):
        a = pyk.floquet_absdet_pairs(l, m, np.pi, 2, kp, thetas, normalize=normalize)
        b = cyk.floquet_absdet_pairs(l, m, np.pi, 2, kp, thetas, normalize=normalize)
        assert np.max(np.abs(a - b)) < 1e-10 * max(1.0, float(np.max(a)))


def test_backends_agree_on_complex_momentum(rng):
    if cyk is None:
        pytest.skip("compiled backend not built")
    l, m = cell_matrices(rng)
    kaps = 1j * np.linspace(0.1, 3.0, 23)
    thetas = np.linspace(0.0, 2 * np.pi, 9)
    a = pyk.floquet_absdet_grid(l, m, 1.5, 2, kaps, thetas)
    b = cyk.floquet_absdet_grid(l, m, 1.5, 2, kaps, thetas)
    assert np.max(np.abs(a - b)) < 1e-10 * max(1.0, float(np.max(a)))


@pytest.mark.parametrize("impl", backends)
def test_floquet_accepts_readonly_inputs(impl, rng):
    l, m = cell_matrices(rng)
    l = l.copy()
    m = m.copy()
    l.setflags(write=False)
    m.setflags(write=False)
    out = impl.floquet_absdet_pairs(l, m, np.pi, 2, np.array([1.0 + 0j]), np.array([0.5]))
    assert out.shape == (1,)


@pytest.mark.parametrize("impl", backends)
def test_normalized_absdet_range_and_zero_row(impl, rng):
    l, m = cell_matrices(rng)
    ks = np.linspace(0.1, 4.0, 50).astype(complex)
    thetas = np.linspace(0.0, 2 * np.pi, 11)
    vals = impl.floquet_absdet_grid(l, m, np.pi, 2, ks, thetas)
    assert np.all(vals >= 0.0)
    assert np.all(vals <= 1.0 + 1e-12)  # Hadamard bound after row normalization
    # a singular assembled system must report exactly zero
    z = np.zeros((4, 4), dtype=complex)
    out = impl.floquet_absdet_pairs(z, z, np.pi, 2, np.array([1.0 + 0j]), np.array([0.0]))
    assert out[0] == 0.0


def test_dispatch_module_exports():
    assert kernels.get_backend() in ("cython", "python")
    assert kernels.BACKEND == kernels.get_backend()
    assert pc.BACKEND == kernels.BACKEND
    assert pc.get_backend is kernels.get_backend


def test_env_var_forces_python_backend():
    code = (
        "import pointchannels as pc; "
        "assert pc.BACKEND == 'python', pc.BACKEND; "
        "import numpy as np; "
        "s = pc.ChannelSystem(1, [pc.InteractionPoint(0.0, pc.make_coupling(pc.delta(-2.0), 1))]); "
        "st = pc.find_bound_states(s, -5.0, -0.1); "
        "assert abs(st[0].energy + 1.0) < 1e-9"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"POINTCHANNELS_KERNELS": "python", "PATH": "/usr/bin:/bin"},
    )
    assert out.returncode == 0, out.stderr
