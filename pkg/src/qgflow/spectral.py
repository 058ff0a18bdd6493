"""Periodic grid, spectral fields and diagonal Fourier multipliers.

Conventions
-----------
The box is ``[0, L)^2`` with ``L = box_length`` (default ``2*pi``). Array axis 0
is ``x1`` and axis 1 is ``x2``; coefficient arrays use the same axes in FFT
order, so ``coeffs[k1 % n, k2 % n]`` is the Fourier-series coefficient of
``exp(i (xi1 x1 + xi2 x2))`` with ``xi = 2*pi*k / L``. The forward transform
carries the ``1/n**2`` factor. Nyquist rows/columns are zeroed on construction.
"""
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .errors import DomainError, GevreyOverflowError, StructuralError, ConfigError

EXP_CAP = 200.0


def fft_workers():
    try:
        return max(1, int(os.environ.get("QG_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid2D:
    n: int
    box_length: float = 2 * math.pi

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise StructuralError(f"grid size must be a power of two >= 8, got {n!r}")
        if not self.box_length > 0:
            raise StructuralError("box_length must be positive")

    @cached_property
    def scale(self):
        """Physical wavenumber of the lattice unit, ``2*pi/L``."""
        return 2 * math.pi / self.box_length

    @cached_property
    def kmax(self):
        """Largest integer wavenumber per axis kept by the 2/3 rule."""
        return (self.n - 1) // 3

    @cached_property
    def _k(self):
        k = np.rint(np.fft.fftfreq(self.n) * self.n).astype(np.int64)
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        k1.flags.writeable = False
        k2.flags.writeable = False
        return k1, k2

    @property
    def k1(self):
        return self._k[0]

    @property
    def k2(self):
        return self._k[1]

    @cached_property
    def xi1(self):
        return self.scale * self.k1

    @cached_property
    def xi2(self):
        return self.scale * self.k2

    @cached_property
    def xi_abs(self):
        return np.hypot(self.xi1, self.xi2)

    @cached_property
    def xi_l1(self):
        return np.abs(self.xi1) + np.abs(self.xi2)

    @cached_property
    def k_l1(self):
        return np.abs(self.k1) + np.abs(self.k2)

    @cached_property
    def retained(self):
        """False on the Nyquist row and column."""
        h = self.n // 2
        return (np.abs(self.k1) != h) & (np.abs(self.k2) != h)

    @cached_property
    def dealias_mask(self):
        K = self.kmax
        return (np.abs(self.k1) <= K) & (np.abs(self.k2) <= K)

    @cached_property
    def cell_area(self):
        return (self.box_length / self.n) ** 2

    @cached_property
    def x(self):
        """Physical coordinates ``(x1, x2)`` on the collocation grid."""
        s = np.arange(self.n) * (self.box_length / self.n)
        return np.meshgrid(s, s, indexing="ij")

    @cached_property
    def _riesz_symbols(self):
        mod = self.xi_abs
        out = []
        for xi in (self.xi1, self.xi2):
            r = np.zeros(mod.shape, dtype=np.complex128)
            nz = mod > 0
            r[nz] = 1j * xi[nz] / mod[nz]
            r.flags.writeable = False
            out.append(r)
        return tuple(out)

    @cached_property
    def _advection_half(self):
        """Half-spectrum arrays for the advection term: mask, ``-R2``, ``R1``, ``i xi1``, ``i xi2``."""
        h = self.n // 2 + 1
        r1, r2 = self._riesz_symbols
        arrs = (self.dealias_mask[:, :h].astype(float), -r2[:, :h], r1[:, :h],
                1j * self.xi1[:, :h], 1j * self.xi2[:, :h])
        for a in arrs:
            a.flags.writeable = False
        return arrs

    @cached_property
    def _neg_index(self):
        return (-np.arange(self.n)) % self.n


def _require_same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise StructuralError(f"grid mismatch: {g} vs {f.grid}")
    return g


def forward(grid, values):
    """Physical values -> Fourier-series coefficients (full n x n array).

    A stack of real fields with shape ``(..., n, n)`` is transformed in one call.
    """
    n = grid.n
    values = np.asarray(values)
    if values.shape[-2:] != (n, n):
        raise StructuralError(f"expected trailing shape {(n, n)}, got {values.shape}")
    if np.iscomplexobj(values):
        return sfft.fft2(values, workers=fft_workers()) / n**2
    return half_to_full(grid, sfft.rfft2(values, workers=fft_workers()) / n**2)


def half_to_full(grid, half):
    """Complete a half spectrum ``(..., n, n//2+1)`` by Hermitian symmetry."""
    n = grid.n
    h = n // 2 + 1
    full = np.empty(half.shape[:-1] + (n,), dtype=np.complex128)
    full[..., :h] = half
    cols = n - np.arange(h, n)
    full[..., h:] = np.conj(half[..., grid._neg_index, :][..., cols])
    return full


def inverse(grid, coeffs, real=True):
    """Fourier-series coefficients -> physical values; leading axes are batched."""
    n = grid.n
    if real:
        return sfft.irfft2(coeffs[..., : n // 2 + 1], s=(n, n), workers=fft_workers()) * n**2
    return sfft.ifft2(coeffs, workers=fft_workers()) * n**2


class SpectralField:
    """Immutable Fourier representation of a periodic field.

    ``real`` records whether the field is real-valued (Hermitian coefficients).
    Every shipped operation returns a new field.
    """

    __slots__ = ("grid", "coeffs", "real")

    def __init__(self, grid, coeffs, real=True):
        c = np.array(coeffs, dtype=np.complex128)
        if c.shape != (grid.n, grid.n):
            raise StructuralError(f"coefficient array {c.shape} does not match grid n={grid.n}")
        c[~grid.retained] = 0.0
        if real:
            c[0, 0] = c[0, 0].real
        c.flags.writeable = False
        self.grid = grid
        self.coeffs = c
        self.real = bool(real)

    @classmethod
    def from_physical(cls, grid, values):
        values = np.asarray(values)
        return cls(grid, forward(grid, values), real=not np.iscomplexobj(values))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.n, grid.n), dtype=np.complex128))

    def values(self):
        return inverse(self.grid, self.coeffs, real=self.real)

    def with_coeffs(self, coeffs, real=None):
        return SpectralField(self.grid, coeffs, self.real if real is None else real)

    def truncated(self):
        """2/3-rule truncation."""
        return self.with_coeffs(np.where(self.grid.dealias_mask, self.coeffs, 0.0))

    @property
    def mean(self):
        return self.coeffs[0, 0]

    def hermitian_defect(self):
        c = self.coeffs
        ni = self.grid._neg_index
        mirror = np.conj(c[ni][:, ni])
        scale = max(np.abs(c).max(), 1e-300)
        return float(np.abs(c - mirror).max() / scale)

    def l2(self):
        """L2 norm over the box via Parseval."""
        return float(self.grid.box_length * np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def __add__(self, other):
        _require_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs, self.real and other.real)

    def __sub__(self, other):
        _require_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs, self.real and other.real)

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, s):
        if isinstance(s, SpectralField):
            return NotImplemented
        real = self.real and np.isrealobj(s)
        return SpectralField(self.grid, self.coeffs * s, real)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / s)

    def __repr__(self):
        return f"SpectralField(n={self.grid.n}, L={self.grid.box_length:.6g}, real={self.real})"


# ---------------------------------------------------------------------------
# physical parameters


@dataclass(frozen=True)
class PhysicalParams:
    gamma: float
    kappa: float = 1.0
    alpha: float = None

    def __post_init__(self):
        if self.alpha is None:
            object.__setattr__(self, "alpha", 1.0 if self.gamma > 1 else 0.25)
        errs = []
        if not 1.0 <= self.gamma <= 2.0:
            errs.append(f"gamma must lie in [1, 2] (supercritical gamma < 1 is not supported), got {self.gamma}")
        if not self.kappa > 0:
            errs.append(f"kappa must be positive, got {self.kappa}")
        if not 0 < self.alpha <= 1:
            errs.append(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.gamma == 1 and self.alpha > 0.25:
            errs.append(f"critical case gamma=1 needs alpha <= 1/4 (|xi|_1/4 < |xi|/2), got alpha={self.alpha}")
        if errs:
            raise ConfigError(errs)


# ---------------------------------------------------------------------------
# multipliers


@dataclass(frozen=True)
class MultiplierSymbol:
    """A diagonal Fourier multiplier, evaluated lazily on a grid.

    ``hermitian`` marks symbols with ``m(-k) = conj(m(k))``, which map real
    fields to real fields.
    """

    func: Callable
    label: str
    hermitian: bool = True

    def on(self, grid):
        arr = np.asarray(self.func(grid))
        if arr.shape != (grid.n, grid.n):
            raise StructuralError(f"symbol {self.label!r} has shape {arr.shape}, lattice is {(grid.n, grid.n)}")
        return arr

    @classmethod
    def from_array(cls, arr, label="array", hermitian=True):
        arr = np.asarray(arr)
        return cls(lambda grid: arr, label, hermitian)


def identity_symbol():
    return MultiplierSymbol(lambda g: np.ones((g.n, g.n)), "identity")


def fractional_laplacian(gamma):
    """Symbol ``|xi|**gamma``."""
    return MultiplierSymbol(lambda g: g.xi_abs**gamma, f"Lambda^{gamma}")


def l1_symbol():
    """Symbol ``|xi_1| + |xi_2|``."""
    return MultiplierSymbol(lambda g: g.xi_l1, "Lambda_1")


def derivative_symbol(axis):
    return MultiplierSymbol(lambda g: 1j * (g.xi1 if axis == 1 else g.xi2), f"d/dx{axis}")


def _riesz(g, axis):
    return g._riesz_symbols[axis - 1]


def riesz_symbol(axis):
    """Riesz transform ``R_l`` with symbol ``i xi_l / |xi|`` (zero at the origin)."""
    return MultiplierSymbol(lambda g: _riesz(g, axis), f"R{axis}")


def heat_symbol(t, gamma, kappa=1.0):
    return MultiplierSymbol(lambda g: np.exp(-t * kappa * g.xi_abs**gamma), f"exp(-{t} Lambda^{gamma})")


def apply_multiplier(f, m):
    arr = m.on(f.grid)
    return SpectralField(f.grid, f.coeffs * arr, real=f.real and m.hermitian)


def riesz_velocity(theta):
    """Velocity ``v = (-R2 theta, R1 theta)``."""
    g = theta.grid
    v1 = theta.with_coeffs(-_riesz(g, 2) * theta.coeffs)
    v2 = theta.with_coeffs(_riesz(g, 1) * theta.coeffs)
    return v1, v2


def gradient(f):
    g = f.grid
    return f.with_coeffs(1j * g.xi1 * f.coeffs), f.with_coeffs(1j * g.xi2 * f.coeffs)


def fractional_semigroup(f, t, params):
    """Exact propagator ``exp(-t kappa Lambda^gamma)``."""
    if t < 0:
        raise DomainError(f"semigroup time must be >= 0, got {t}")
    g = f.grid
    return f.with_coeffs(f.coeffs * np.exp(-t * params.kappa * g.xi_abs**params.gamma))


def _support_l1(f):
    nz = f.coeffs != 0
    return f.grid.xi_l1[nz], f.grid.k_l1[nz]


def check_gevrey_exponent(f, a, exp_cap=EXP_CAP):
    """Return the worst exponent ``a*|xi|_1`` on the support, or raise."""
    xi, k = _support_l1(f)
    if xi.size == 0:
        return 0.0
    worst = a * xi.max()
    if worst > exp_cap:
        bad = a * xi > exp_cap
        shell = int(k[bad].min())
        raise GevreyOverflowError(
            f"Gevrey exponent {worst:.4g} exceeds cap {exp_cap:g}; first failing shell |k|_1={shell}",
            failures=[(None, shell)],
        )
    return float(worst)


def gevrey_multiplier(f, a, exp_cap=EXP_CAP):
    """Gevrey weight ``exp(a Lambda_1)``; refuses exponents above ``exp_cap``."""
    if a < 0:
        raise DomainError(f"Gevrey parameter must be >= 0, got {a}")
    check_gevrey_exponent(f, a, exp_cap)
    g = f.grid
    w = np.exp(np.minimum(a * g.xi_l1, exp_cap))
    return f.with_coeffs(f.coeffs * w)


def gevrey_damping(f, a):
    """Inverse Gevrey weight ``exp(-a Lambda_1)``."""
    if a < 0:
        raise DomainError(f"Gevrey parameter must be >= 0, got {a}")
    return f.with_coeffs(f.coeffs * np.exp(-a * f.grid.xi_l1))


def dealiased_product(f, g):
    """Pointwise product with 2/3-rule truncation of inputs and output."""
    grid = _require_same_grid(f, g)
    mask = grid.dealias_mask
    real = f.real and g.real
    fv = inverse(grid, np.where(mask, f.coeffs, 0.0), real=f.real)
    gv = inverse(grid, np.where(mask, g.coeffs, 0.0), real=g.real)
    c = forward(grid, fv * gv)
    return SpectralField(grid, np.where(mask, c, 0.0), real=real)


def lp_norm(f, p):
    """Riemann-sum ``L^p`` norm over the box; ``p=inf`` is the grid maximum."""
    if not (p == math.inf or p >= 1):
        raise DomainError(f"L^p norm needs p >= 1, got {p}")
    a = np.abs(f.values())
    if p == math.inf:
        return float(a.max())
    if p == 2:
        return float(math.sqrt(np.sum(a * a) * f.grid.cell_area))
    return float((np.sum(a**p) * f.grid.cell_area) ** (1.0 / p))


def sup_norm(f, refine=True, candidates=4, iters=12):
    """Sup norm of a real field, optionally refined off-grid by Newton steps.

    The grid maximum under-estimates the true supremum whenever the crest
    sits between collocation points; refinement evaluates the trigonometric
    polynomial exactly near the best grid candidates.
    """
    vals = f.values()
    grid_max = float(np.abs(vals).max())
    if not refine or not f.real or grid_max == 0.0:
        return grid_max
    g = f.grid
    nz = np.nonzero(f.coeffs)
    c = f.coeffs[nz]
    x1k = g.xi1[nz]
    x2k = g.xi2[nz]
    best = grid_max
    flat = np.abs(vals).ravel()
    idx = np.argpartition(flat, -candidates)[-candidates:]
    X1, X2 = g.x
    for i in idx:
        x = np.array([X1.ravel()[i], X2.ravel()[i]])
        s = 1.0 if vals.ravel()[i] >= 0 else -1.0
        for _ in range(iters):
            e = c * np.exp(1j * (x1k * x[0] + x2k * x[1]))
            grad = s * np.array([np.sum(1j * x1k * e).real, np.sum(1j * x2k * e).real])
            h11 = -s * np.sum(x1k * x1k * e).real
            h12 = -s * np.sum(x1k * x2k * e).real
            h22 = -s * np.sum(x2k * x2k * e).real
            lam, vec = np.linalg.eigh(np.array([[h11, h12], [h12, h22]]))
            big = np.abs(lam).max()
            if big == 0 or lam[1] > 1e-10 * big:
                break
            # Newton step in the eigenbasis; flat directions (1-D structure) are skipped
            proj = vec.T @ grad
            live = lam < -1e-10 * big
            step = vec[:, live] @ (proj[live] / lam[live])
            x = x - step
            if np.abs(step).max() < 1e-14 * g.box_length:
                break
        val = abs(np.sum(c * np.exp(1j * (x1k * x[0] + x2k * x[1]))).real)
        best = max(best, val)
    return float(best)
