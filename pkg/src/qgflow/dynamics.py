"""Dissipative QG dynamics: advection term, time stepping, Picard solver, monitors."""
import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.integrate import cumulative_trapezoid

from .errors import BlowUpError, CFLError, ConfigError, DomainError, PicardDivergenceError
from .spectral import (
    Grid2D,
    PhysicalParams,
    SpectralField,
    fft_workers,
    half_to_full,
    inverse,
    sup_norm,
)

log = logging.getLogger(__name__)

SCHEMES = ("integrating_factor_rk4",)


@dataclass(frozen=True)
class PicardConfig:
    n_time_nodes: int = 65
    max_iters: int = 50
    tol: float = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    params: PhysicalParams
    n: int = 64
    dt: float = 1e-2
    T: float = 1.0
    snapshot_every: int = 1
    scheme: str = "integrating_factor_rk4"
    picard: PicardConfig = field(default_factory=PicardConfig)
    box_length: float = 2 * math.pi
    cfl: float = 0.5
    blowup_factor: float = 10.0

    def __post_init__(self):
        errs = self.violations()
        if errs:
            raise ConfigError(errs)

    def violations(self):
        errs = []
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 8 and self.n & (self.n - 1) == 0):
            errs.append(f"n must be a power of two >= 8, got {self.n}")
        if not self.dt > 0:
            errs.append(f"dt must be positive, got {self.dt}")
        if not self.T >= self.dt:
            errs.append(f"T must be >= dt, got T={self.T}, dt={self.dt}")
        if not (isinstance(self.snapshot_every, (int, np.integer)) and self.snapshot_every >= 1):
            errs.append(f"snapshot_every must be a positive integer, got {self.snapshot_every}")
        if self.scheme not in SCHEMES:
            errs.append(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.box_length > 0:
            errs.append("box_length must be positive")
        if not 0 < self.cfl <= 1:
            errs.append(f"cfl constant must lie in (0, 1], got {self.cfl}")
        p = self.picard
        if p.n_time_nodes < 2:
            errs.append("picard n_time_nodes must be >= 2")
        if p.max_iters < 1:
            errs.append("picard max_iters must be >= 1")
        if not p.tol > 0:
            errs.append("picard tol must be positive")
        return errs

    @property
    def grid(self):
        return Grid2D(self.n, self.box_length)


@dataclass
class TrajectoryRecord:
    """Snapshots on increasing times plus an optional per-step diagnostic table."""

    times: np.ndarray
    snapshots: list
    diagnostics: dict = field(default_factory=dict)
    params: PhysicalParams = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.snapshots):
            raise ValueError("times and snapshots differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if self.snapshots:
            g = self.snapshots[0].grid
            if any(s.grid != g for s in self.snapshots):
                raise ValueError("snapshots must share one grid")

    @property
    def grid(self):
        return self.snapshots[0].grid

    def __len__(self):
        return len(self.snapshots)


@dataclass
class PicardState:
    iterate_index: int
    fields: list
    residual_history: list
    converged: bool = False

    def contraction_ratios(self, floor=1e-13):
        r = np.asarray(self.residual_history)
        ok = r[:-1] > floor
        return r[1:][ok] / r[:-1][ok]


# ---------------------------------------------------------------------------
# right-hand side


def nonlinear_term(theta):
    """Advection in divergence form, ``div(v theta)``, with 2/3 dealiasing."""
    g = theta.grid
    n = g.n
    mask, m_r2, r1, ixi1, ixi2 = g._advection_half
    c = theta.coeffs[:, : n // 2 + 1] * mask
    th, v1, v2 = sfft.irfft2(np.stack([c, m_r2 * c, r1 * c]), s=(n, n), workers=fft_workers())
    p1, p2 = sfft.rfft2(np.stack([v1 * th, v2 * th]), workers=fft_workers())
    out = (ixi1 * p1 + ixi2 * p2) * (mask * n**2)
    return SpectralField(g, half_to_full(g, out))


def max_speed(theta):
    g = theta.grid
    r1, r2 = g._riesz_symbols
    v1, v2 = inverse(g, np.stack([-r2 * theta.coeffs, r1 * theta.coeffs]))
    return float(np.sqrt(v1**2 + v2**2).max())


def cfl_limit(theta, cfg):
    """Largest admissible step; ``inf`` for a quiescent field."""
    g = theta.grid
    vmax = max_speed(theta)
    kmax = g.kmax * g.scale
    return math.inf if vmax == 0 else cfg.cfl / (vmax * kmax)


def _propagator(grid, params, tau):
    return np.exp(-tau * params.kappa * grid.xi_abs**params.gamma)


def _advects(u, stages, limit, grid):
    """False when every stage tendency is round-off relative to ``|u| / limit``.

    Fields the advection leaves untouched (one-dimensional or single-shell
    data) are propagated exactly, so the transport limit does not apply.
    """
    scale = np.abs(u).max() / limit if math.isfinite(limit) else 0.0
    return max(np.abs(k).max() for k in stages) > 1e-13 * scale


def step(theta, dt, cfg):
    """One integrating-factor RK4 step.

    With ``E(tau) = exp(-tau kappa Lambda^gamma)`` the stages advance
    ``eta = E(-tau) theta`` by classical RK4; only forward propagators appear,
    so nothing overflows at high wavenumber. The linear part is exact.
    The CFL guard is enforced only when the advection term is active.
    """
    g = theta.grid
    p = cfg.params
    e_half = _propagator(g, p, 0.5 * dt)
    e_full = e_half * e_half
    u = theta.coeffs

    def rhs(c):
        return -nonlinear_term(theta.with_coeffs(c)).coeffs

    k1 = rhs(u)
    k2 = rhs(e_half * (u + 0.5 * dt * k1))
    k3 = rhs(e_half * u + 0.5 * dt * k2)
    k4 = rhs(e_full * u + dt * e_half * k3)
    limit = cfl_limit(theta, cfg)
    if dt > limit * (1 + 1e-12) and _advects(u, (k1, k2, k3, k4), limit, g):
        raise CFLError(f"dt={dt:.4g} exceeds CFL limit {limit:.4g} (c_cfl={cfg.cfl})")
    new = e_full * u + (dt / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)
    return theta.with_coeffs(new)


# ---------------------------------------------------------------------------
# diagnostics


def _diag_row(theta, t, params, refine_sup):
    g = theta.grid
    c2 = np.abs(theta.coeffs) ** 2
    area = g.box_length**2
    k = g.xi_abs
    return {
        "time": t,
        "mean": float(theta.coeffs[0, 0].real),
        "l2": math.sqrt(area * c2.sum()),
        "linf": sup_norm(theta, refine=refine_sup),
        "h1": math.sqrt(area * np.sum(k**2 * c2)),
        "dissipation": params.kappa * area * float(np.sum(k**params.gamma * c2)),
        "h1_dissipation": params.kappa * area * float(np.sum(k ** (2 + params.gamma) * c2)),
    }


DIAG_COLUMNS = ("time", "mean", "l2", "linf", "h1", "dissipation", "h1_dissipation", "h1_dissipation_integral",
                "balance_residual")


def _require_mean_zero(theta):
    scale = max(np.abs(theta.coeffs).max(), 1e-300)
    if abs(theta.coeffs[0, 0]) > 1e-12 * scale:
        raise DomainError("initial datum must be mean-zero")


class _BalanceWindow:
    """In-run L^2 balance residual from a 5-step centred stencil.

    Each mode's energy ``|c_k|^2`` is multiplied by ``exp(2 kappa |k|^gamma (t - t_i))``
    before differencing, so the stencil only sees the slow nonlinear
    exchange; the residual at ``t_i`` is half the differenced weighted energy.
    Stiff high modes would otherwise dominate the difference error.
    """

    def __init__(self, grid, params, h):
        self.h = h
        self.area = grid.box_length**2
        rate = 2 * params.kappa * grid.xi_abs**params.gamma
        self.weights = [np.exp(np.minimum(rate * s * h, 700.0)) * w
                        for s, w in zip(range(-2, 3), _D1_4TH)]
        self.buf = deque(maxlen=5)

    def push(self, theta):
        """Add one step; returns the residual at the stencil centre once five steps are in."""
        self.buf.append(np.abs(theta.coeffs) ** 2)
        if len(self.buf) < 5:
            return None
        acc = sum(w * e for w, e in zip(self.weights, self.buf))
        return 0.5 * self.area * float(acc.sum()) / self.h


def _log_mean(a, b):
    """Elementwise logarithmic mean; exact step average of a pure exponential."""
    out = 0.5 * (a + b)
    pos = (a > 0) & (b > 0)
    ratio = np.divide(b, a, out=np.ones_like(a), where=pos)
    live = pos & (np.abs(ratio - 1) > 1e-8)
    out[live] = (b[live] - a[live]) / np.log(ratio[live])
    out[(a > 0) ^ (b > 0)] = 0.0
    return out


def simulate(theta0, cfg, refine_sup=True):
    """Integrate from ``theta0`` to ``cfg.T``.

    Diagnostics are recorded every step; snapshots every ``snapshot_every``
    steps and at the final time. Raises :class:`BlowUpError` (with the partial
    trajectory attached) if the sup norm exceeds ``blowup_factor`` times its
    initial value.
    """
    _require_mean_zero(theta0)
    if theta0.grid.n != cfg.n or theta0.grid.box_length != cfg.box_length:
        raise ConfigError(f"datum grid {theta0.grid} does not match config n={cfg.n}, L={cfg.box_length}")
    p = cfg.params
    nsteps = max(1, int(math.ceil(cfg.T / cfg.dt - 1e-9)))
    theta = theta0.truncated()
    t = 0.0
    rows = [_diag_row(theta, t, p, refine_sup)]
    times = [t]
    snaps = [theta]
    limit = rows[0]["linf"] * cfg.blowup_factor
    balance = _BalanceWindow(theta.grid, p, cfg.dt)
    balance.push(theta)
    g = theta.grid
    h1_weight = p.kappa * g.box_length**2 * g.xi_abs ** (2 + p.gamma)
    energy = np.abs(theta.coeffs) ** 2
    h1_int = 0.0
    rows[0]["h1_dissipation_integral"] = h1_int
    for i in range(1, nsteps + 1):
        h = min(cfg.dt, cfg.T - t) if i == nsteps else cfg.dt
        theta = step(theta, h, cfg)
        t = cfg.T if i == nsteps else i * cfg.dt
        row = _diag_row(theta, t, p, refine_sup)
        new_energy = np.abs(theta.coeffs) ** 2
        h1_int += h * float(np.sum(h1_weight * _log_mean(energy, new_energy)))
        energy = new_energy
        row["h1_dissipation_integral"] = h1_int
        rows.append(row)
        if abs(h - cfg.dt) <= 1e-9 * cfg.dt:
            r = balance.push(theta)
            if r is not None:
                rows[i - 2]["balance_residual"] = r
        if i % cfg.snapshot_every == 0 or i == nsteps:
            times.append(t)
            snaps.append(theta)
        if row["linf"] > limit:
            traj = TrajectoryRecord(times, snaps, _table(rows), p)
            raise BlowUpError(f"sup norm {row['linf']:.4g} exceeded guard {limit:.4g} at t={t:.4g}", traj)
    return TrajectoryRecord(times, snaps, _table(rows), p)


def _table(rows):
    return {k: np.array([r.get(k, math.nan) for r in rows]) for k in DIAG_COLUMNS}


def diagnostics_from_snapshots(traj, refine_sup=True):
    p = traj.params or PhysicalParams(gamma=1.0)
    return _table([_diag_row(s, t, p, refine_sup) for t, s in zip(traj.times, traj.snapshots)])


# ---------------------------------------------------------------------------
# Picard iteration for the mild formulation


def picard_solve(theta0, cfg):
    """Fixed-point iteration of the Duhamel formula on uniform time nodes.

    The time integral uses the composite trapezoid rule, evaluated by the
    recursion ``I_m = E_h (I_{m-1} + h/2 N_{m-1}) + h/2 N_m`` which is exactly
    the trapezoid sum with the exact propagator at every node.
    """
    _require_mean_zero(theta0)
    pc = cfg.picard
    M = pc.n_time_nodes
    nodes = np.linspace(0.0, cfg.T, M)
    h = nodes[1] - nodes[0]
    g = theta0.grid
    p = cfg.params
    theta0 = theta0.truncated()
    u0 = theta0.coeffs
    linear = [u0 * _propagator(g, p, t) for t in nodes]
    e_h = _propagator(g, p, h)
    current = [c.copy() for c in linear]
    history = []
    growth = 0
    converged = False
    it = 0
    for it in range(1, pc.max_iters + 1):
        N = [nonlinear_term(theta0.with_coeffs(c)).coeffs for c in current]
        new = [linear[0]]
        acc = np.zeros_like(u0)
        for m in range(1, M):
            acc = e_h * (acc + 0.5 * h * N[m - 1]) + 0.5 * h * N[m]
            new.append(linear[m] - acc)
        res = 0.0
        for a, b in zip(new, current):
            den = np.sqrt(np.sum(np.abs(a) ** 2))
            num = np.sqrt(np.sum(np.abs(a - b) ** 2))
            res = max(res, num / den if den > 0 else num)
        if history and res > history[-1]:
            growth += 1
            log.warning("Picard residual grew: %.3e -> %.3e", history[-1], res)
        else:
            growth = 0
        history.append(res)
        current = new
        if res <= pc.tol:
            converged = True
            break
        if growth >= 3:
            state = PicardState(it, [theta0.with_coeffs(c) for c in current], history, False)
            raise PicardDivergenceError(
                f"Picard residual grew on 3 consecutive iterates (last {res:.3e}); shorten T", state)
    fields = [theta0.with_coeffs(c) for c in current]
    if not converged:
        log.warning("Picard stopped after %d iterates at residual %.3e", it, history[-1])
    state = PicardState(it, fields, history, converged)
    return TrajectoryRecord(nodes, fields, params=p), state


# ---------------------------------------------------------------------------
# monitors

_D1_4TH = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def _centered_derivative(y, h):
    """Fourth-order centred first derivative at interior points; NaN at the ends."""
    d = np.full(y.shape, np.nan)
    if y.size >= 5:
        d[2:-2] = (y[:-4] * _D1_4TH[0] + y[1:-3] * _D1_4TH[1]
                   + y[3:-1] * _D1_4TH[3] + y[4:] * _D1_4TH[4]) / h
    return d


def monitors(traj):
    """Physical diagnostic series.

    Returns a dict of arrays keyed by ``time``, ``linf``, ``linf_increase``
    (running maximum of ``linf[i] - min(linf[:i])``), ``balance_residual``
    (``d/dt ||theta||^2/2 + kappa ||Lambda^{gamma/2} theta||^2``; taken from
    the in-run column recorded by :func:`simulate` when present, otherwise a
    centred difference of the recorded energies; NaN where the stencil does
    not fit or the spacing is non-uniform), ``balance_relative`` (residual over ``||theta||^2``),
    ``h1_margin`` (``||grad theta(t)||^2 + 2 int_0^t kappa ||Lambda^{1+gamma/2}
    theta||^2 - ||grad theta_0||^2``; the integral is the in-run per-mode
    logarithmic-mean sum when present, else a trapezoid over the table) and ``mean``.
    """
    if len(traj) < 2:
        raise ValueError("monitors need at least two snapshots")
    d = traj.diagnostics or diagnostics_from_snapshots(traj)
    t = np.asarray(d["time"])
    linf = np.asarray(d["linf"])
    energy = 0.5 * np.asarray(d["l2"]) ** 2
    steps = np.diff(t)
    h = steps[0]
    resid = np.full(t.shape, np.nan)
    uniform = np.abs(steps - h) <= 1e-9 * h
    if "balance_residual" in d and np.isfinite(d["balance_residual"]).any():
        resid = np.asarray(d["balance_residual"], dtype=float)
    elif uniform.all():
        resid = _centered_derivative(energy, h) + d["dissipation"]
    else:
        cut = int(np.argmin(uniform)) + 1
        resid[:cut] = _centered_derivative(energy[:cut], h) + d["dissipation"][:cut]
    l2sq = 2 * energy
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(l2sq > 0, np.abs(resid) / l2sq, np.where(np.isnan(resid), np.nan, 0.0))
    running_min = np.minimum.accumulate(linf)
    increase = np.concatenate([[0.0], linf[1:] - running_min[:-1]])
    h1sq = np.asarray(d["h1"]) ** 2
    if "h1_dissipation_integral" in d and np.isfinite(d["h1_dissipation_integral"]).all():
        integral = np.asarray(d["h1_dissipation_integral"])
    else:
        integral = cumulative_trapezoid(d["h1_dissipation"], t, initial=0.0)
    return {
        "time": t,
        "mean": np.asarray(d["mean"]),
        "linf": linf,
        "linf_increase": increase,
        "balance_residual": resid,
        "balance_relative": rel,
        "h1_margin": h1sq + 2 * integral - h1sq[0],
    }


# ---------------------------------------------------------------------------
# scaling symmetry


def rescale_datum(theta, lam, gamma, target):
    """``lam**(gamma-1) theta(lam x)`` on ``target``: mode ``k`` moves to ``lam k``.

    ``lam`` must be a positive integer and ``target`` must host every
    ``lam k`` of the retained band of ``theta``.
    """
    lam = int(lam)
    if lam < 1:
        raise DomainError("lambda must be a positive integer")
    g = theta.grid
    if target.box_length != g.box_length or target.kmax < lam * g.kmax:
        raise ConfigError(f"target grid n={target.n} cannot host modes up to {lam * g.kmax}")
    c = np.zeros((target.n, target.n), dtype=np.complex128)
    k1 = g.k1[g.retained].astype(int)
    k2 = g.k2[g.retained].astype(int)
    c[(lam * k1) % target.n, (lam * k2) % target.n] = theta.coeffs[g.retained]
    return SpectralField(target, lam ** (gamma - 1) * c, real=theta.real)


def restrict_rescaled(theta_lam, lam, gamma, target):
    """Inverse of :func:`rescale_datum`: read mode ``lam k`` back into mode ``k``."""
    lam = int(lam)
    g = theta_lam.grid
    k1 = target.k1[target.retained].astype(int)
    k2 = target.k2[target.retained].astype(int)
    c = np.zeros((target.n, target.n), dtype=np.complex128)
    c[target.retained] = theta_lam.coeffs[(lam * k1) % g.n, (lam * k2) % g.n]
    return SpectralField(target, lam ** (1 - gamma) * c, real=theta_lam.real)
