"""Initial data and seeded random field banks."""
import math

import numpy as np

from .spectral import SpectralField


def _hermitian(grid, c):
    ni = grid._neg_index
    c = 0.5 * (c + np.conj(c[ni][:, ni]))
    c[0, 0] = 0.0
    return c


def _normalise(field, amplitude):
    peak = np.abs(field.values()).max()
    if peak == 0:
        return field
    return field * (amplitude / peak)


def single_mode(grid, k1, k2, amplitude=1.0, kind="cos"):
    """``amplitude * cos(k.x)`` (or ``sin``) for an integer lattice mode."""
    n = grid.n
    c = np.zeros((n, n), dtype=np.complex128)
    if kind == "cos":
        c[k1 % n, k2 % n] += 0.5 * amplitude
        c[-k1 % n, -k2 % n] += 0.5 * amplitude
    elif kind == "sin":
        c[k1 % n, k2 % n] += -0.5j * amplitude
        c[-k1 % n, -k2 % n] += 0.5j * amplitude
    else:
        raise ValueError(f"kind must be 'cos' or 'sin', got {kind!r}")
    return SpectralField(grid, c)


def two_mode(grid, amplitude=0.1):
    """``amplitude * (cos x1 + cos 2 x2)``: the smallest datum with a live nonlinearity."""
    return single_mode(grid, 1, 0, amplitude) + single_mode(grid, 0, 2, amplitude)


def random_annulus(grid, kmin, kmax, amplitude=1.0, seed=0, rng=None):
    """Gaussian coefficients on ``kmin <= |k| <= kmax`` (lattice units).

    The result is Hermitian, mean-zero, Nyquist-free and scaled so that its
    grid maximum equals ``amplitude``.
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    n = grid.n
    kk = np.hypot(grid.k1, grid.k2)
    band = (kk >= kmin) & (kk <= kmax) & grid.dealias_mask
    c = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * band
    return _normalise(SpectralField(grid, _hermitian(grid, c)), amplitude)


def random_bank(grid, count, kmin, kmax, seed=0):
    """``count`` unit-amplitude annulus fields from one seeded stream."""
    rng = np.random.default_rng(seed)
    return [random_annulus(grid, kmin, kmax, 1.0, rng=rng) for _ in range(count)]


def broadband(grid, amplitude=0.1, slope=2.0, seed=0):
    """Gaussian coefficients on the whole 2/3 band with envelope ``|k|**-slope``."""
    rng = np.random.default_rng(seed)
    n = grid.n
    kk = np.hypot(grid.k1, grid.k2)
    env = np.zeros_like(kk)
    nz = (kk > 0) & grid.dealias_mask
    env[nz] = kk[nz] ** (-slope)
    c = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * env
    return _normalise(SpectralField(grid, _hermitian(grid, c)), amplitude)


def square_waves(grid, amplitude=0.05, width=0.1):
    """Poisson-smoothed square waves ``amplitude * (S(x1) + S(x2))``.

    ``S`` jumps from -1 to 1 at ``x = 0`` and back at ``x = L/2``; the jump
    profile is the 1-D Poisson kernel of half-width ``width``. Away from the
    jumps the field is flat, so ``|grad theta|`` decays like ``1/t`` for
    ``width << t << L``.
    """
    n = grid.n
    k = np.rint(np.fft.fftfreq(n) * n).astype(int)
    m = np.abs(k)
    kmax = grid.kmax
    s = np.zeros(n, dtype=np.complex128)
    odd = (m % 2 == 1) & (m <= kmax)
    # square wave sign(sin(2 pi x / L)) = sum_{m odd} 4/(pi m) sin(m 2 pi x / L)
    s[odd] = -2j / (math.pi * k[odd]) * np.exp(-width * grid.scale * m[odd])
    c = np.zeros((n, n), dtype=np.complex128)
    c[:, 0] += s
    c[0, :] += s
    return SpectralField(grid, amplitude * c)
