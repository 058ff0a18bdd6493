"""Quadrature checks of the singular integrals and kernel scalings used in the estimates."""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special, stats

from .errors import DomainError


@dataclass
class CheckResult:
    name: str
    measured: float
    threshold: float
    passed: bool
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# int_0^t (t-s)^-a s^-b ds = B(1-a, 1-b) t^(1-a-b)


def singular_time_integral(a, b, t=1.0):
    """``int_0^t (t-s)**-a s**-b ds`` by algebraic-weight adaptive quadrature."""
    if not (0 < a < 1 and 0 < b < 1):
        raise DomainError(f"need 0 < a, b < 1, got a={a}, b={b}")
    val, err = integrate.quad(lambda s: 1.0, 0.0, t, weight="alg", wvar=(-b, -a),
                              epsabs=0.0, epsrel=1e-13, limit=200)
    return val, err


def beta_integral_check(a_values=(0.1, 0.3, 0.5, 0.7, 0.9), b_values=None, times=(0.5, 1.0, 3.0), tol=1e-6):
    b_values = a_values if b_values is None else b_values
    worst = 0.0
    table = []
    for a in a_values:
        for b in b_values:
            for t in times:
                val, _ = singular_time_integral(a, b, t)
                exact = special.beta(1 - a, 1 - b) * t ** (1 - a - b)
                rel = abs(val / exact - 1)
                worst = max(worst, rel)
                table.append((a, b, t, val, exact, rel))
    return CheckResult("beta_integral", worst, tol, worst <= tol, {"table": table})


# ---------------------------------------------------------------------------
# Poisson kernel and its Riesz transform in the plane


def poisson_kernel(rho, t):
    """``P_t(x) = t / (2 pi (t^2 + |x|^2)^{3/2})``, the inverse transform of ``exp(-t|xi|)``."""
    return t / (2 * math.pi * (t * t + rho * rho) ** 1.5)


def riesz_poisson_kernel(rho, t):
    """``|R P_t(x)| = |x| / (2 pi (t^2 + |x|^2)^{3/2})`` (vector magnitude)."""
    return rho / (2 * math.pi * (t * t + rho * rho) ** 1.5)


def riesz_poisson_hankel(rho, t):
    """Same kernel from its spectral form ``(1/2pi) int_0^inf e^{-tk} k J_1(k rho) dk``."""
    val, _ = integrate.quad(lambda k: math.exp(-t * k) * k * special.j1(k * rho), 0, math.inf, limit=400)
    return val / (2 * math.pi)


def radial_lp_norm(kernel, t, p):
    """``(2 pi int_0^inf |K(rho)|^p rho d rho)^{1/p}`` split at ``rho = t``."""
    f = lambda r: abs(kernel(r, t)) ** p * r
    a, _ = integrate.quad(f, 0, t, epsrel=1e-12, limit=200)
    b, _ = integrate.quad(f, t, math.inf, epsrel=1e-12, limit=200)
    return (2 * math.pi * (a + b)) ** (1.0 / p)


def lp_exponent_fit(kernel, p, times=(0.5, 1.0, 2.0, 4.0)):
    """Slope of ``log ||K_t||_p`` against ``log t``."""
    norms = [radial_lp_norm(kernel, t, p) for t in times]
    return float(stats.linregress(np.log(times), np.log(norms)).slope), norms


def poisson_scaling_check(ps=(2, 4), times=(0.5, 1.0, 2.0, 4.0), rel_tol=0.02):
    out = []
    for name, kern in (("poisson", poisson_kernel), ("riesz_poisson", riesz_poisson_kernel)):
        for p in ps:
            expected = -2 * (1 - 1 / p)
            slope, norms = lp_exponent_fit(kern, p, times)
            rel = abs(slope / expected - 1)
            out.append(CheckResult(f"{name}_L{p}_exponent", rel, rel_tol, rel <= rel_tol,
                                   {"slope": slope, "expected": expected, "norms": norms}))
    return out


def poisson_l1_norms(times=(0.5, 1.0, 2.0, 4.0)):
    return [radial_lp_norm(poisson_kernel, t, 1) for t in times]


# ---------------------------------------------------------------------------
# tensor product of 1-D Poisson kernels (symbol exp(-a |xi|_1))


def poisson_1d(x, a):
    return a / (math.pi * (a * a + x * x))


def product_poisson_l1(a):
    """L^1 norm of ``P_a(x1) P_a(x2)``: square of the 1-D integral."""
    one = sum(integrate.quad(poisson_1d, lo, hi, args=(a,), epsrel=1e-12, limit=200)[0]
              for lo, hi in ((-math.inf, -a), (-a, a), (a, math.inf)))
    return one * one


# ---------------------------------------------------------------------------
# 1-D fractional integration of order 1/2


def half_integral(a_vals, T=1.0):
    """``I(t_i) = int_0^{t_i} (t_i - s)^{-1/2} a(s) ds`` for piecewise-constant ``a``.

    Cell integrals of the weight are exact, so the only approximation is the
    piecewise-constant input itself.
    """
    m = len(a_vals)
    edges = np.linspace(0.0, T, m + 1)
    out = np.zeros(m)
    for i in range(1, m + 1):
        t = edges[i]
        w = 2 * (np.sqrt(t - edges[:i]) - np.sqrt(t - edges[1:i + 1]))
        out[i - 1] = np.dot(w, a_vals[:i])
    return out


def hls_ratios(count=200, cells=256, seed=0, T=1.0):
    """``sup_t |I(t)| / ||a||_{L^2}`` for a seeded bank of Gaussian piecewise-constant inputs."""
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(count):
        a = rng.standard_normal(cells)
        l2 = math.sqrt(np.sum(a * a) * T / cells)
        ratios.append(np.abs(half_integral(a, T)).max() / l2)
    return np.array(ratios)
