import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgflow import _kernels
from qgflow.fields import random_annulus
from qgflow.spectral import Grid2D


def modes(f):
    g = f.grid
    c = np.where(g.dealias_mask, f.coeffs, 0.0)
    nz = np.nonzero(c)
    return g.k1[nz].astype(np.int64), g.k2[nz].astype(np.int64), c[nz].astype(np.complex128)


@given(seed=st.integers(0, 10**6), a=st.floats(0, 2))
@settings(max_examples=10, deadline=None)
def test_weighted_convolution_backends_agree(seed, a):
    g = Grid2D(16)
    f = random_annulus(g, 1, 5, seed=seed)
    h = random_annulus(g, 1, 5, seed=seed + 1)
    args = (*modes(f), *modes(h), g.n, g.kmax, a)
    np.testing.assert_allclose(_kernels.weighted_convolution(*args), _kernels.numpy_kernels["weighted_convolution"](*args),
                               rtol=1e-12, atol=1e-15)


def test_shell_max_backends_agree():
    g = Grid2D(32)
    absc = np.abs(random_annulus(g, 1, 10, seed=0).coeffs)
    shell = g.k_l1.astype(np.int64)
    n = int(shell.max()) + 1
    np.testing.assert_array_equal(_kernels.shell_max(absc, shell, n), _kernels.numpy_kernels["shell_max"](absc, shell, n))


@pytest.mark.parametrize("K", [1, 3, 5])
def test_pair_exponent_backends_agree(K):
    assert _kernels.pair_exponent_max(K) == _kernels.numpy_kernels["pair_exponent_max"](K) == 0


def test_numpy_fallback_selected_by_env():
    env = dict(os.environ, QG_NUMBA="0")
    code = ("from qgflow import _kernels, verify; print(_kernels.BACKEND); "
            "print(verify.check_pair_weights(8).passed)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]
