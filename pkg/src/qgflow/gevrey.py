"""Gevrey transform, time-weighted norms and the Gevrey-twisted product.

The Gevrey transform is ``Theta(t) = exp(alpha t**(1/gamma) Lambda_1) theta(t)``
with ``Lambda_1`` the l1-symbol multiplier ``|xi_1| + |xi_2|``.
"""
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import _kernels
from .dynamics import TrajectoryRecord
from .errors import ConfigError, DomainError, GevreyOverflowError, InsufficientDataError, StructuralError
from .littlewood_paley import BesovIndex, besov_norm, tilde_besov_norm
from .spectral import (
    EXP_CAP,
    SpectralField,
    dealiased_product,
    forward,
    inverse,
    lp_norm,
    riesz_velocity,
)

# FFT round-off amplified by the outer weight stays below this in the direct form
_FFT_SAFE_AMPLIFICATION = 1e-13 / np.finfo(float).eps


@dataclass(frozen=True)
class GevreyConfig:
    alpha: float = None
    gamma: float = 1.5
    exp_cap: float = EXP_CAP

    def __post_init__(self):
        if self.alpha is None:
            object.__setattr__(self, "alpha", 1.0 if self.gamma > 1 else 0.25)
        errs = []
        if not 1 <= self.gamma <= 2:
            errs.append(f"gamma must lie in [1, 2], got {self.gamma}")
        if not 0 < self.alpha <= 1:
            errs.append(f"Gevrey rate alpha must lie in (0, 1], got {self.alpha}")
        if self.gamma == 1 and self.alpha > 0.25:
            errs.append(f"critical case gamma=1 requires alpha <= 1/4 (|xi|_1/4 < |xi|/2), got alpha={self.alpha}")
        if not self.exp_cap > 0:
            errs.append("exp_cap must be positive")
        if errs:
            raise ConfigError(errs)

    def rate(self, t):
        """Weight parameter ``alpha * t**(1/gamma)``."""
        return self.alpha * t ** (1.0 / self.gamma)


# ---------------------------------------------------------------------------
# transform


def gevrey_transform(traj, cfg, noise_floor=None, on_overflow="raise"):
    """Apply ``exp(alpha t**(1/gamma) Lambda_1)`` snapshot by snapshot.

    ``noise_floor`` (relative to the largest coefficient of each snapshot)
    zeroes round-off-level coefficients first; without it the weight turns
    round-off at the top shells into spurious mass. Snapshots whose exponent
    exceeds ``exp_cap`` raise :class:`GevreyOverflowError` naming the first
    failing ``(t, shell)``, or are dropped when ``on_overflow="skip"``.
    The Gevrey velocity ``V = (-R2 Theta, R1 Theta)`` is stored in
    ``extras["velocity"]``.
    """
    times, snaps, vel, failures = [], [], [], []
    for t, u in zip(traj.times, traj.snapshots):
        c = u.coeffs
        if noise_floor is not None:
            peak = np.abs(c).max()
            c = np.where(np.abs(c) >= noise_floor * peak, c, 0.0)
        a = cfg.rate(t)
        g = u.grid
        nz = c != 0
        if nz.any() and a * g.xi_l1[nz].max() > cfg.exp_cap:
            shell = int(g.k_l1[nz & (a * g.xi_l1 > cfg.exp_cap)].min())
            failures.append((float(t), shell))
            continue
        w = np.exp(np.minimum(a * g.xi_l1, cfg.exp_cap))
        big = u.with_coeffs(np.where(nz, c * w, 0.0))
        times.append(t)
        snaps.append(big)
        vel.append(riesz_velocity(big))
    if failures and on_overflow == "raise":
        t0, s0 = failures[0]
        raise GevreyOverflowError(
            f"Gevrey weight exceeds cap {cfg.exp_cap:g}: first failure at t={t0:.6g}, shell |k|_1={s0}",
            failures)
    return TrajectoryRecord(times, snaps, params=traj.params,
                            extras={"velocity": vel, "refused": failures})


# ---------------------------------------------------------------------------
# time-weighted norms


@dataclass(frozen=True)
class WeightedNormSpec:
    """Besov/Lebesgue indices for the time-weighted budgets.

    ``s = 2/p + 1 - gamma`` is the critical regularity, ``beta = 1 - 1/gamma
    - 2/(r gamma)`` the Lebesgue time weight and ``p1 = 2/(gamma - 1)``.
    ``alpha_k`` is the extra regularity of the second term of the K budget.
    """

    gamma: float
    p: float = 2.0
    q: float = 2.0
    r: float = 8.0
    alpha_k: float = 0.5

    def __post_init__(self):
        errs = self.violations()
        if errs:
            raise ConfigError(errs)

    @property
    def s(self):
        return 2.0 / self.p + 1.0 - self.gamma

    @property
    def beta(self):
        return 1.0 - 1.0 / self.gamma - 2.0 / (self.r * self.gamma)

    @property
    def p1(self):
        return 2.0 / (self.gamma - 1.0) if self.gamma > 1 else math.inf

    def violations(self):
        errs = []
        if not (self.p >= 1 and self.q >= 1):
            errs.append(f"p, q must be >= 1, got p={self.p}, q={self.q}")
        if not 1 <= self.gamma <= 2:
            errs.append(f"gamma must lie in [1, 2], got {self.gamma}")
        if self.gamma == 1 or errs:
            return errs
        g, r = self.gamma, self.r
        if not 1 < r < math.inf:
            errs.append(f"r must satisfy 1 < r < inf, got {r}")
        if not 0 < 2.0 / r < g - 1:
            errs.append(f"admissibility (i) 0 < 2/r < gamma-1 fails: 2/r={2.0 / r:.6g}, gamma-1={g - 1:.6g}")
        if not 2.0 / self.p + 1 - g - 2.0 / r > 0:
            errs.append(f"admissibility (ii) 2/p+1-gamma-2/r > 0 fails: value {2.0 / self.p + 1 - g - 2.0 / r:.6g}")
        if not 0 < self.beta < 1 - self.alpha_k / g:
            errs.append(f"admissibility (iii) 0 < beta < 1-alpha/gamma fails: beta={self.beta:.6g}, "
                        f"1-alpha/gamma={1 - self.alpha_k / g:.6g}")
        if not self.alpha_k > 0:
            errs.append(f"alpha_k must be positive, got {self.alpha_k}")
        return errs


@dataclass
class NormReport:
    """Evaluated budgets plus per-time series.

    ``series`` columns: time, radius, fit_quality, k_norm, g_norm, e1_norm.
    ``k_norm``/``g_norm`` hold the bracket inside each supremum at that time;
    ``e1_norm`` holds the E1 budget over ``[0, t]``.
    """

    k_norm: float = None
    k_time: float = None
    g_norm: float = None
    g_time: float = None
    e1_norm: float = None
    decay_slopes: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)


SERIES_COLUMNS = ("time", "radius", "fit_quality", "k_norm", "g_norm", "e1_norm")


def _sup_with_time(times, vals):
    i = int(np.argmax(vals))
    return float(vals[i]), float(times[i])


def k_g_e1_norms(traj, spec, frame, radii=None):
    """K and G budgets (gamma > 1) or the E1 budget (gamma = 1).

    Suprema run over the recorded snapshots; ``radii`` may carry
    :class:`RadiusEstimate` objects to fill the radius columns.
    """
    errs = spec.violations()
    if errs:
        raise ConfigError(errs)
    if len(traj) == 0:
        raise InsufficientDataError("empty trajectory")
    t = np.asarray(traj.times)
    rep = NormReport(meta={"gamma": spec.gamma, "p": spec.p, "q": spec.q, "r": spec.r,
                           "alpha_k": spec.alpha_k, "s": spec.s})
    nan = np.full(t.shape, np.nan)
    k_series, g_series, e1_series = nan.copy(), nan.copy(), nan.copy()
    if spec.gamma > 1:
        low = BesovIndex(spec.s, spec.p, spec.q)
        high = BesovIndex(spec.s + spec.alpha_k, spec.p, spec.q)
        k_series = np.array([besov_norm(u, low, frame) + tt ** (spec.alpha_k / spec.gamma) * besov_norm(u, high, frame)
                             for tt, u in zip(t, traj.snapshots)])
        g_series = np.array([lp_norm(u, spec.p1) + tt**spec.beta * lp_norm(u, spec.r)
                             for tt, u in zip(t, traj.snapshots)])
        rep.k_norm, rep.k_time = _sup_with_time(t, k_series)
        rep.g_norm, rep.g_time = _sup_with_time(t, g_series)
    else:
        sup_idx = BesovIndex(2.0 / spec.p, spec.p, spec.q)
        int_idx = BesovIndex(2.0 / spec.p + 1, spec.p, spec.q)
        if len(traj) >= 2:
            for i in range(1, len(traj)):
                part = TrajectoryRecord(t[: i + 1], traj.snapshots[: i + 1])
                e1_series[i] = (tilde_besov_norm(part, math.inf, sup_idx, frame)
                                + tilde_besov_norm(part, 1, int_idx, frame))
            e1_series[0] = besov_norm(traj.snapshots[0], sup_idx, frame)
            rep.e1_norm = float(e1_series[-1])
        else:
            rep.e1_norm = e1_series[0] = besov_norm(traj.snapshots[0], sup_idx, frame)
    radius = nan.copy()
    quality = nan.copy()
    if radii is not None:
        radius = np.array([r.radius for r in radii])
        quality = np.array([r.fit_quality for r in radii])
    rep.series = {"time": t, "radius": radius, "fit_quality": quality,
                  "k_norm": k_series, "g_norm": g_series, "e1_norm": e1_series}
    return rep


# ---------------------------------------------------------------------------
# Gevrey-twisted product


def _bilinear_rate(t, cfg):
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t}")
    return t ** (1.0 / cfg.gamma)


def _modes(f):
    g = f.grid
    c = np.where(g.dealias_mask, f.coeffs, 0.0)
    nz = np.nonzero(c)
    return (g.k1[nz].astype(np.int64), g.k2[nz].astype(np.int64), c[nz].astype(np.complex128))


def gevrey_bilinear_direct(f, g, t, cfg):
    """``exp(a Lambda_1)(exp(-a Lambda_1) f * exp(-a Lambda_1) g)`` with ``a = t**(1/gamma)``.

    Damps both inputs, takes the dealiased product and re-amplifies. When the
    outer weight would amplify FFT round-off past ~1e-13 the product is
    formed by exact coefficient convolution instead, so every output mode is
    accurate relative to its own size.
    """
    a = _bilinear_rate(t, cfg)
    grid = f.grid
    if g.grid != grid:
        raise StructuralError("grid mismatch")
    worst = a * grid.scale * 2 * grid.kmax
    if worst > cfg.exp_cap:
        raise GevreyOverflowError(
            f"outer weight exponent {worst:.4g} exceeds cap {cfg.exp_cap:g}; first failing shell "
            f"|k|_1={int(math.floor(cfg.exp_cap / (a * grid.scale))) + 1}")
    real = f.real and g.real
    if math.exp(worst) <= _FFT_SAFE_AMPLIFICATION:
        damp = np.exp(-a * grid.xi_l1)
        prod = dealiased_product(f.with_coeffs(f.coeffs * damp), g.with_coeffs(g.coeffs * damp))
        return SpectralField(grid, prod.coeffs * np.exp(a * grid.xi_l1), real=real)
    p1, p2, fv = _modes(f)
    q1, q2, gv = _modes(g)
    out = _kernels.weighted_convolution(p1, p2, fv, q1, q2, gv, grid.n, grid.kmax, a * grid.scale)
    return SpectralField(grid, out, real=real)


SIGNS = (1, -1)


def half_line(grid, axis, sign):
    """Indicator of the half-line ``xi_axis >= 0`` (sign=+1) or ``< 0`` (sign=-1)."""
    k = grid.k1 if axis == 1 else grid.k2
    return (k >= 0) if sign == 1 else (k < 0)


def axis_damping(grid, axis, a, sign):
    """Identity for sign=+1, ``exp(-2 a |xi_axis|)`` for sign=-1."""
    xi = grid.xi1 if axis == 1 else grid.xi2
    return np.ones(xi.shape) if sign == 1 else np.exp(-2.0 * a * np.abs(xi))


def branch_operator(grid, a, out_signs, in_signs):
    """Symbol of ``K_{b1} L_{a1 b1} (x) K_{b2} L_{a2 b2}``."""
    sym = np.ones((grid.n, grid.n))
    for axis, (s_out, s_in) in enumerate(zip(out_signs, in_signs), start=1):
        sym = sym * half_line(grid, axis, s_in) * axis_damping(grid, axis, a, s_out * s_in)
    return sym


def branch_terms(f, g, t, cfg):
    """Yield ``((out, f_signs, g_signs), term)`` over all 64 sign branches."""
    a = _bilinear_rate(t, cfg)
    grid = f.grid
    for out in product(SIGNS, SIGNS):
        k_out = half_line(grid, 1, out[0]) & half_line(grid, 2, out[1])
        for bf in product(SIGNS, SIGNS):
            zf = f.with_coeffs(f.coeffs * branch_operator(grid, a, out, bf), real=False)
            for bg in product(SIGNS, SIGNS):
                zg = g.with_coeffs(g.coeffs * branch_operator(grid, a, out, bg), real=False)
                prod = dealiased_product(zf, zg)
                yield (out, bf, bg), prod.with_coeffs(prod.coeffs * k_out, real=False)


def gevrey_bilinear_split(f, g, t, cfg):
    """Same operator assembled from one-dimensional pieces.

    On each axis the input frequencies are split by sign (half-line
    projections), damped by ``exp(-2 a |xi_i|)`` when their sign differs from
    that of the output frequency, multiplied, and the product is projected
    onto the output half-lines. Nothing is ever amplified. Each branch
    product is formed separately in physical space; the transforms of the
    16 products sharing an output quadrant are pooled.
    """
    a = _bilinear_rate(t, cfg)
    grid = f.grid
    if g.grid != grid:
        raise StructuralError("grid mismatch")
    mask = grid.dealias_mask
    fc = np.where(mask, f.coeffs, 0.0)
    gc = np.where(mask, g.coeffs, 0.0)
    total = np.zeros((grid.n, grid.n), dtype=np.complex128)
    for out in product(SIGNS, SIGNS):
        fz = [inverse(grid, fc * branch_operator(grid, a, out, b), real=False) for b in product(SIGNS, SIGNS)]
        gz = [inverse(grid, gc * branch_operator(grid, a, out, b), real=False) for b in product(SIGNS, SIGNS)]
        acc = np.zeros((grid.n, grid.n), dtype=np.complex128)
        for u in fz:
            for v in gz:
                acc += u * v
        k_out = half_line(grid, 1, out[0]) & half_line(grid, 2, out[1])
        total += np.where(mask & k_out, forward(grid, acc), 0.0)
    return SpectralField(grid, total, real=f.real and g.real)


def pair_exponent_max(K):
    """Max of ``|k+l|_1 - |k|_1 - |l|_1`` over ``|k_i|, |l_i| <= K`` (never positive)."""
    return int(_kernels.pair_exponent_max(int(K)))


# ---------------------------------------------------------------------------
# auxiliary multipliers


def defect_exponent(s, t, gamma):
    """``(t-s)**(1/gamma) + s**(1/gamma) - t**(1/gamma)``, non-negative on ``0 <= s <= t``."""
    if not 0 <= s <= t:
        raise DomainError(f"need 0 <= s <= t, got s={s}, t={t}")
    g = 1.0 / gamma
    return (t - s) ** g + s**g - t**g


def gevrey_defect_smoothing(f, s, t, gamma):
    """``exp(-a Lambda_1)`` with ``a = defect_exponent(s, t, gamma)``; identity when ``a = 0``."""
    a = defect_exponent(s, t, gamma)
    if a == 0:
        return f
    return f.with_coeffs(f.coeffs * np.exp(-a * f.grid.xi_l1))


def dissipative_gevrey_symbol(grid, a, gamma):
    """Symbol ``exp(a**(1/gamma) |xi|_1 - a |xi|**gamma / 2)``."""
    return np.exp(a ** (1.0 / gamma) * grid.xi_l1 - 0.5 * a * grid.xi_abs**gamma)


def dissipative_gevrey_amplification(bank, a_values, gamma, ps=(2, 4)):
    """Max ``||E f||_p / ||f||_p`` over the bank for each ``a`` and ``p``.

    Returns ``{"a": [...], "by_p": {p: [...]}, "symbol_max": [...], "sup": float}``.
    """
    if gamma <= 1:
        raise DomainError(f"needs gamma > 1, got {gamma}")
    if any(a < 0 for a in a_values):
        raise DomainError("a values must be >= 0")
    grid = bank[0].grid
    by_p = {p: [] for p in ps}
    sym_max = []
    for a in a_values:
        sym = dissipative_gevrey_symbol(grid, a, gamma)
        sym_max.append(float(sym[grid.retained].max()))
        for p in ps:
            by_p[p].append(max(lp_norm(f.with_coeffs(f.coeffs * sym), p) / lp_norm(f, p) for f in bank))
    sup = max(max(v) for v in by_p.values())
    return {"a": list(a_values), "by_p": by_p, "symbol_max": sym_max, "sup": sup}
