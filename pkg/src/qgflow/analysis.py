"""Spectral analyticity radius and power-law decay fits."""
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _kernels
from .errors import DomainError, InsufficientDataError
from .spectral import inverse

NOISE_FLOOR = 1e-14
MIN_SHELLS = 4
QUALITY_THRESHOLD = 0.9


@dataclass(frozen=True)
class RadiusEstimate:
    time: float
    radius: float
    fit_quality: float
    shells_used: int

    @property
    def reliable(self):
        return self.shells_used >= MIN_SHELLS and self.fit_quality >= QUALITY_THRESHOLD


def shell_maxima(f):
    """``max |coeffs(k)|`` over each l1 shell ``|k1| + |k2| = m``; index is ``m``."""
    g = f.grid
    shell = g.k_l1.astype(np.int64)
    return _kernels.shell_max(np.abs(f.coeffs), shell, int(shell.max()) + 1)


def analyticity_radius(f, time=math.nan, noise_floor=NOISE_FLOOR):
    """Exponential decay rate of the spectrum in the l1 wavenumber.

    Fits ``log max_{|k|_1 = m} |coeffs|`` linearly against the physical l1
    wavenumber over shells within ``noise_floor`` of the largest coefficient.
    ``radius = max(0, -slope)``; ``fit_quality`` is the R^2 of the fit. With
    fewer than four qualifying shells the estimate is returned as radius 0,
    quality 0.
    """
    sm = shell_maxima(f)
    peak = sm.max()
    if peak == 0:
        return RadiusEstimate(time, 0.0, 0.0, 0)
    m = np.nonzero(sm >= noise_floor * peak)[0]
    m = m[m > 0]
    if m.size < MIN_SHELLS:
        return RadiusEstimate(time, 0.0, 0.0, int(m.size))
    x = m * f.grid.scale
    y = np.log(sm[m])
    fit = stats.linregress(x, y)
    r2 = float(fit.rvalue**2) if np.isfinite(fit.rvalue) else 0.0
    return RadiusEstimate(time, max(0.0, -float(fit.slope)), r2, int(m.size))


def trajectory_radii(traj, noise_floor=NOISE_FLOOR):
    return [analyticity_radius(u, t, noise_floor) for t, u in zip(traj.times, traj.snapshots)]


# ---------------------------------------------------------------------------
# derivative norms and decay fits


def derivative_magnitude(f, k):
    """Pointwise ``|grad^k f|``: root-sum-square over all k-th order partials."""
    if k < 0:
        raise DomainError(f"derivative order must be >= 0, got {k}")
    g = f.grid
    if k == 0:
        return np.abs(f.values())
    acc = np.zeros((g.n, g.n))
    for i in range(k + 1):
        sym = (1j * g.xi1) ** i * (1j * g.xi2) ** (k - i)
        v = inverse(g, f.coeffs * sym, real=f.real)
        acc += math.comb(k, i) * np.abs(v) ** 2
    return np.sqrt(acc)


def derivative_norm(f, k, norm="linf"):
    """``||grad^k f||`` in ``linf`` (grid maximum) or ``l2``."""
    mag = derivative_magnitude(f, k)
    if norm == "linf":
        return float(mag.max())
    if norm == "l2":
        return float(np.sqrt(np.sum(mag**2) * f.grid.cell_area))
    raise DomainError(f"norm must be 'linf' or 'l2', got {norm!r}")


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    stderr: float
    band: tuple
    r2: float
    semilog_r2: float
    power_law: bool
    times: np.ndarray
    values: np.ndarray


def fit_power_law(times, values, confidence=0.95):
    """Log-log least squares with a ``confidence`` band on the slope.

    The fit is flagged (``power_law=False``) when R^2 < 0.99 or when a
    log-linear (exponential) model fits better.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < 3:
        raise InsufficientDataError(f"need at least 3 points, got {t.size}")
    if np.any(v <= 0) or np.any(t <= 0):
        raise InsufficientDataError("power-law fit needs positive times and values")
    lx, ly = np.log(t), np.log(v)
    fit = stats.linregress(lx, ly)
    semi = stats.linregress(t, ly)
    r2 = float(fit.rvalue**2)
    r2_semi = float(semi.rvalue**2)
    half = stats.t.ppf(0.5 + confidence / 2, t.size - 2) * fit.stderr
    ok = r2 >= 0.99 and r2 >= r2_semi
    return DecayFit(float(fit.slope), float(fit.intercept), float(fit.stderr), (fit.slope - half, fit.slope + half),
                    r2, r2_semi, bool(ok), t, v)


def decay_rate_fit(traj, k=1, norm="linf", window=None, confidence=0.95):
    """Power-law exponent of ``||grad^k theta(t)||`` over a time window.

    The window defaults to the whole trajectory after ``t = 0`` and must span
    at least one decade.
    """
    t = np.asarray(traj.times)
    lo, hi = window if window is not None else (t[t > 0].min(), t.max())
    if lo <= 0 or hi / lo < 10 * (1 - 1e-9):
        raise InsufficientDataError(f"fit window [{lo:g}, {hi:g}] spans less than one decade")
    sel = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
    covered = t[sel].size >= 3 and t[sel].min() <= lo * (1 + 1e-9) and t[sel].max() >= hi * (1 - 1e-9)
    if not covered:
        raise InsufficientDataError(f"trajectory does not cover the fit window [{lo:g}, {hi:g}]")
    vals = [derivative_norm(u, k, norm) for u, keep in zip(traj.snapshots, sel) if keep]
    return fit_power_law(t[sel], vals, confidence)
