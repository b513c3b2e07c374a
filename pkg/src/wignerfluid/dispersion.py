"""Transverse electromagnetic dispersion: fluid cubic, long-wavelength
approximation, and kinetic relations with the quantum diffusion operator.

The diffusion operator L = sinh(theta)/theta with theta = w d/dv_z and
half-window w = hbar k / (2 m) is an interval average,

    (L g)(v) = (1 / 2w) * integral of g over [v - w, v + w],

which is how the exact mode evaluates it. The series mode truncates
sum_j w^(2j) / (2j+1)! d^(2j)/dv^(2j) at order J.

For a separable equilibrium f0 = n0 f_T(v_perp) f_par(v_z) the
perpendicular integral folds into P_perp = (m/2) int v_perp^2 f0, and the
kinetic relation becomes

    omega^2 = omega_p^2 + c^2 k^2
              + k^2 omega_p^2 (P_perp / m n0) int (L f_par) / (omega - k v)^2 dv.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import hermite_e
from scipy import integrate, special

from . import csvio
from .params import EquilibriumPressure, PhysicalSetup

__all__ = [
    "DiffusionOperator",
    "EquilibriumDistribution1D",
    "DispersionResult",
    "apply_L",
    "series_multiplier",
    "figure_profile",
    "figure_rows",
    "write_figure_csv",
    "fluid_dispersion_roots",
    "fluid_dispersion_approx",
    "fluid_dispersion_function",
    "cubic_residual",
    "kinetic_dispersion_function",
    "kinetic_dispersion_solve",
    "gd_kinetic_eval",
    "equivalence_sweep",
    "dispersion_scan",
    "write_scan_csv",
]

QUAD_OPTS = dict(epsabs=1e-15, epsrel=1e-12, limit=200)


# ---------------------------------------------------------------------------
# diffusion operator

@dataclass(frozen=True)
class DiffusionOperator:
    k: float
    hbar: float
    mass: float
    mode: str = "exact"
    order: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "series"):
            raise ValueError("mode must be 'exact' or 'series'")
        if self.k < 0 or self.hbar < 0 or self.mass <= 0:
            raise ValueError("need k >= 0, hbar >= 0, mass > 0")
        if self.order < 0:
            raise ValueError("series order must be non-negative")

    @classmethod
    def from_setup(cls, k: float, setup: PhysicalSetup, mode: str = "exact", order: int = 0):
        return cls(k, setup.hbar, setup.mass, mode, order)

    @property
    def half_width(self) -> float:
        return self.hbar * self.k / (2.0 * self.mass)

    @property
    def is_identity(self) -> bool:
        return self.half_width == 0 or (self.mode == "series" and self.order == 0)


def series_multiplier(kappa, w: float, order: int) -> np.ndarray:
    """Fourier symbol of the truncated series: sum_j (-1)^j (kappa w)^(2j) / (2j+1)!."""
    x2 = (np.asarray(kappa, dtype=float) * w) ** 2
    out = np.zeros_like(x2)
    term = np.ones_like(x2)
    for j in range(order + 1):
        if j:
            term = term * (-x2) / ((2 * j) * (2 * j + 1))
        out = out + term
    return out


def _average_callable(g: Callable, v, w: float) -> np.ndarray:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    out = np.empty_like(v)
    for i, vi in enumerate(v):
        val, _ = integrate.quad(g, vi - w, vi + w, **QUAD_OPTS)
        out[i] = val / (2.0 * w)
    return out


def _average_samples(g: np.ndarray, v: np.ndarray, w: float, decay_tol: float) -> np.ndarray:
    from scipy.interpolate import CubicSpline

    span = v[-1] - v[0]
    if 2 * w >= span:
        raise ValueError("averaging window exceeds the sampled domain")
    peak = max(np.abs(g).max(), 1e-300)
    if max(abs(g[0]), abs(g[-1])) > decay_tol * peak:
        raise ValueError("averaging window leaves the sampled domain and g does not decay there")
    anti = CubicSpline(v, g).antiderivative()
    total = anti(v[-1])
    lo = np.clip(v - w, v[0], v[-1])
    hi = np.clip(v + w, v[0], v[-1])
    # outside the samples g is taken as zero
    F = lambda x: np.where(x <= v[0], 0.0, np.where(x >= v[-1], total, anti(x)))  # noqa: E731
    return (F(hi) - F(lo)) / (2.0 * w)


def _series_samples(g: np.ndarray, v: np.ndarray, w: float, order: int) -> np.ndarray:
    n = v.size
    dv = v[1] - v[0]
    kappa = 2.0 * np.pi * np.fft.fftfreq(n, d=dv)
    gh = np.fft.fft(g)
    # high powers of kappa would blow up roundoff-level modes
    gh[np.abs(gh) < 1e-15 * np.abs(gh).max()] = 0.0
    return np.fft.ifft(gh * series_multiplier(kappa, w, order)).real


def apply_L(op: DiffusionOperator, g, v=None, decay_tol: float = 1e-12):
    """Apply L to ``g``.

    ``g`` is either a callable of v_z or an array sampled on the uniform grid
    ``v``. With a callable and no ``v`` the result is a callable (exact mode
    only); otherwise an array on ``v`` is returned.
    """
    w = op.half_width
    if callable(g):
        if v is None:
            if op.mode != "exact":
                raise ValueError("series mode needs a sample grid")
            if op.is_identity:
                return g
            return lambda x: _average_callable(g, x, w) if np.ndim(x) else float(_average_callable(g, x, w)[0])
        v = np.asarray(v, dtype=float)
        if op.is_identity:
            return np.asarray(g(v), dtype=float) * np.ones_like(v)
        if op.mode == "exact":
            return _average_callable(g, v, w)
        g = np.asarray(g(v), dtype=float)
    g = np.asarray(g, dtype=float)
    if v is None:
        raise ValueError("sampled input needs its grid v")
    v = np.asarray(v, dtype=float)
    if v.shape != g.shape or v.ndim != 1 or v.size < 4:
        raise ValueError("g and v must be matching 1D arrays")
    if not np.allclose(np.diff(v), v[1] - v[0], rtol=1e-9, atol=0):
        raise ValueError("sample grid must be uniform")
    if op.is_identity:
        return g.copy()
    if op.mode == "exact":
        return _average_samples(g, v, w, decay_tol)
    return _series_samples(g, v, w, op.order)


# ---------------------------------------------------------------------------
# equilibrium

@dataclass(frozen=True)
class EquilibriumDistribution1D:
    """Unit-normalized Maxwellian parallel profile plus the perpendicular pressure."""

    v0: float
    p_perp: float
    n0: float = 1.0

    def __post_init__(self):
        if self.v0 <= 0:
            raise ValueError("v0 must be positive")
        if self.p_perp < 0 or self.n0 <= 0:
            raise ValueError("need p_perp >= 0 and n0 > 0")

    def f_par(self, v):
        v = np.asarray(v, dtype=float)
        return np.exp(-0.5 * (v / self.v0) ** 2) / (math.sqrt(2.0 * math.pi) * self.v0)

    def df_par(self, v):
        return -np.asarray(v, dtype=float) / self.v0**2 * self.f_par(v)

    def averaged(self, v, w: float):
        """(L f_par)(v) in closed form via the normal distribution function."""
        v = np.asarray(v, dtype=float)
        if w == 0:
            return self.f_par(v)
        if w < 1e-4 * self.v0:
            # short Taylor form avoids cancellation in the cdf difference
            x = v / self.v0
            r2 = (w / self.v0) ** 2
            return self.f_par(v) * (1.0 + r2 / 6.0 * hermite_e.hermeval(x, [0, 0, 1])
                                    + r2**2 / 120.0 * hermite_e.hermeval(x, [0, 0, 0, 0, 1]))
        a = (v - w) / self.v0
        b = (v + w) / self.v0
        # difference of survival functions on the right, of cdfs on the left
        diff = np.where(v >= 0, special.ndtr(-a) - special.ndtr(-b), special.ndtr(b) - special.ndtr(a))
        return diff / (2.0 * w)

    def series_averaged(self, v, w: float, order: int):
        """Truncated series of L applied to f_par, using Hermite derivatives."""
        x = np.asarray(v, dtype=float) / self.v0
        r2 = (w / self.v0) ** 2
        coeffs = np.zeros(2 * order + 1)
        for j in range(order + 1):
            coeffs[2 * j] = r2**j / math.factorial(2 * j + 1)
        return self.f_par(v) * hermite_e.hermeval(x, coeffs)

    def perp_mean_square(self, mass: float) -> float:
        return 2.0 * self.p_perp / (mass * self.n0)

    def cutoff(self, w: float = 0.0) -> float:
        return 8.0 * self.v0 + w


# ---------------------------------------------------------------------------
# reference Gaussian profile

def figure_profile(H: float, v, v0: float = 1.0) -> np.ndarray:
    """L applied to the unit-peak Gaussian exp(-v^2 / 2 v0^2) at quantum parameter H."""
    op = DiffusionOperator(k=1.0, hbar=2.0 * H * v0, mass=1.0)
    return apply_L(op, lambda x: np.exp(-0.5 * (x / v0) ** 2), v)


def figure_rows(H_values=(0.0, 1.0, 2.0), v_max: float = 5.0, points: int = 201, v0: float = 1.0):
    v = np.linspace(-v_max * v0, v_max * v0, points)
    for H in H_values:
        for vi, fi in zip(v, figure_profile(H, v, v0)):
            yield (vi, fi, float(H))


def write_figure_csv(path=None, **kw) -> str:
    return csvio.write(path, ["v_z", "f_parallel", "H"], figure_rows(**kw))


# ---------------------------------------------------------------------------
# fluid relation

@dataclass
class DispersionResult:
    k: float
    omega: float
    residual: float
    branch: str = "em"
    iterations: int = 0
    method: str = "fluid"


def _cubic_coeffs(k, setup: PhysicalSetup, eq: EquilibriumPressure, quantum: bool = True):
    m, n0, wp2 = setup.mass, setup.n0, setup.omega_p**2
    c2k2 = (setup.c_light * k) ** 2
    a1 = -(c2k2 + wp2)
    a2 = -wp2 * k**2 * eq.p_perp / (n0 * m)
    a3 = -wp2 * setup.hbar**2 * k**6 * eq.p_perp / (4 * n0 * m**3) if quantum else 0.0
    return np.array([1.0, a1, a2, a3])


def cubic_residual(x, k, setup: PhysicalSetup, eq: EquilibriumPressure, quantum: bool = True):
    """Cubic in x = omega^2 at (possibly complex) x, relative to the size of its terms."""
    coeffs = _cubic_coeffs(k, setup, eq, quantum)
    x = np.asarray(x, dtype=complex)
    terms = np.stack([c * x ** (3 - i) for i, c in enumerate(coeffs)])
    scale = np.abs(terms).sum(axis=0)
    return np.abs(terms.sum(axis=0)) / np.where(scale > 0, scale, 1.0)


def fluid_dispersion_function(omega, k, setup: PhysicalSetup, eq: EquilibriumPressure,
                              quantum: bool = True):
    """omega^2 - k^2 c^2 - omega_p^2 [1 + k^2 P/(n0 m w^2) + hbar^2 k^6 P/(4 n0 m^3 w^4)]."""
    m, n0, wp2 = setup.mass, setup.n0, setup.omega_p**2
    w2 = np.asarray(omega) ** 2
    bracket = 1 + k**2 * eq.p_perp / (n0 * m * w2)
    if quantum:
        bracket = bracket + setup.hbar**2 * k**6 * eq.p_perp / (4 * n0 * m**3 * w2**2)
    return w2 - (k * setup.c_light) ** 2 - wp2 * bracket


def fluid_dispersion_roots(k: float, setup: PhysicalSetup, eq: EquilibriumPressure,
                           quantum: bool = True) -> DispersionResult:
    """Electromagnetic branch of the fluid relation as a cubic in omega^2.

    The cubic has coefficient signs (+, -, -, -), so it has exactly one
    positive root; that root is the branch through omega_p^2 + c^2 k^2.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    coeffs = _cubic_coeffs(k, setup, eq, quantum)
    roots = np.roots(coeffs)
    cand = [r.real for r in roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r)) and r.real > 0]
    if not cand:
        raise ArithmeticError(f"no positive root on the electromagnetic branch at k={k}")
    x = max(cand)
    poly, dpoly = np.poly1d(coeffs), np.poly1d(coeffs).deriv()
    it = 0
    for it in range(1, 6):
        d = dpoly(x)
        if d == 0:
            break
        step = poly(x) / d
        x -= step
        if abs(step) <= 1e-16 * x:
            break
    omega = math.sqrt(x)
    res = abs(fluid_dispersion_function(omega, k, setup, eq, quantum)) / x
    return DispersionResult(k=float(k), omega=omega, residual=float(res), iterations=it, method="fluid")


def fluid_dispersion_approx(k: float, setup: PhysicalSetup, eq: EquilibriumPressure) -> float:
    if k < 0:
        raise ValueError("k must be non-negative")
    m, n0, wp2 = setup.mass, setup.n0, setup.omega_p**2
    return math.sqrt(wp2 + (setup.c_light * k) ** 2 + eq.p_perp * k**2 / (m * n0)
                     + setup.hbar**2 * k**6 * eq.p_perp / (4 * m**3 * n0 * wp2))


# ---------------------------------------------------------------------------
# kinetic relations

def _lf(f0: EquilibriumDistribution1D, op: DiffusionOperator) -> Callable:
    w = op.half_width
    if op.mode == "exact":
        return lambda v: f0.averaged(v, w)
    return lambda v: f0.series_averaged(v, w, op.order)


def _check_resonance(omega, k, cutoff):
    if k > 0 and abs(omega) / k <= cutoff:
        raise ValueError(f"resonance: omega/k = {abs(omega) / k:.6g} does not exceed the cutoff {cutoff:.6g}")


def _kinetic_integral(omega, k, g, cutoff, power):
    val, _ = integrate.quad(lambda v: g(v) / (omega - k * v) ** power, -cutoff, cutoff, **QUAD_OPTS)
    return val


def kinetic_dispersion_function(omega: float, k: float, setup: PhysicalSetup,
                                f0: EquilibriumDistribution1D, mode: str = "exact",
                                order: int = 0) -> float:
    """Right side of the gauge-invariant kinetic relation minus omega^2."""
    op = DiffusionOperator.from_setup(k, setup, mode, order)
    cutoff = f0.cutoff(op.half_width)
    _check_resonance(omega, k, cutoff)
    wp2 = setup.omega_p**2
    coef = k**2 * wp2 * f0.p_perp / (setup.mass * f0.n0)
    integral = _kinetic_integral(omega, k, _lf(f0, op), cutoff, 2) if coef else 0.0
    return wp2 + (setup.c_light * k) ** 2 + coef * integral - omega**2


def gd_kinetic_eval(omega: float, k: float, setup: PhysicalSetup, f0: EquilibriumDistribution1D) -> float:
    """Right side of the gauge-dependent kinetic relation minus omega^2.

    Uses the finite difference f_par(v + w) - f_par(v - w) over hbar; at
    hbar = 0 the derivative limit is taken.
    """
    w = setup.hbar * k / (2.0 * setup.mass)
    cutoff = f0.cutoff(w)
    _check_resonance(omega, k, cutoff)
    wp2 = setup.omega_p**2
    if f0.p_perp == 0 or k == 0:
        integral_term = 0.0
    elif w == 0:
        val = _kinetic_integral(omega, k, f0.df_par, cutoff, 1)
        integral_term = -wp2 * f0.p_perp * k / (setup.mass * f0.n0) * val
    else:
        val = _kinetic_integral(omega, k, lambda v: f0.f_par(v + w) - f0.f_par(v - w), cutoff, 1)
        integral_term = -wp2 * f0.p_perp / (f0.n0 * setup.hbar) * val
    return wp2 + (setup.c_light * k) ** 2 + integral_term - omega**2


def kinetic_dispersion_solve(k: float, setup: PhysicalSetup, f0: EquilibriumDistribution1D,
                             mode: str = "exact", order: int = 0, omega_guess: float | None = None,
                             max_iter: int = 100) -> DispersionResult:
    """Real EM-branch root of the gauge-invariant kinetic relation by damped Newton."""
    if k < 0:
        raise ValueError("k must be non-negative")
    wp = setup.omega_p
    if k == 0:
        return DispersionResult(0.0, wp, 0.0, "em", 0, f"kinetic-{mode}")
    op = DiffusionOperator.from_setup(k, setup, mode, order)
    cutoff = f0.cutoff(op.half_width)
    g = _lf(f0, op)
    coef = k**2 * wp**2 * f0.p_perp / (setup.mass * f0.n0)

    def D(om):
        _check_resonance(om, k, cutoff)
        i2 = _kinetic_integral(om, k, g, cutoff, 2) if coef else 0.0
        return om**2 - wp**2 - (setup.c_light * k) ** 2 - coef * i2

    def dD(om):
        i3 = _kinetic_integral(om, k, g, cutoff, 3) if coef else 0.0
        return 2 * om + 2 * coef * i3

    if omega_guess is None:
        omega_guess = fluid_dispersion_approx(k, setup, EquilibriumPressure(f0.p_perp, f0.p_perp))
    om = float(omega_guess)
    val = D(om)
    for it in range(1, max_iter + 1):
        step = val / dD(om)
        lam = 1.0
        while True:
            trial = om - lam * step
            try:
                tval = D(trial)
            except ValueError:
                tval = None
            if tval is not None and (abs(tval) <= abs(val) or lam < 1e-6):
                break
            lam *= 0.5
            if lam < 1e-12:
                raise ArithmeticError(f"line search failed at k={k}")
        om, val = trial, tval
        if abs(lam * step) < 1e-12 * wp:
            return DispersionResult(float(k), om, abs(val) / wp**2, "em", it, f"kinetic-{mode}")
    raise ArithmeticError(f"kinetic solve did not converge at k={k} after {max_iter} iterations")


def equivalence_sweep(seed: int, count: int = 20, setup: PhysicalSetup | None = None,
                      v0: float = 1.0) -> list[float]:
    """|gauge-dependent minus gauge-invariant| kinetic functions at random off-root points."""
    rng = np.random.default_rng(seed)
    base = setup or PhysicalSetup()
    out = []
    while len(out) < count:
        s = base.with_hbar(rng.uniform(0.05, 3.0))
        k = rng.uniform(0.01, 1.0)
        f0 = EquilibriumDistribution1D(v0=v0, p_perp=rng.uniform(0.2, 2.0) * s.mass * s.n0 * v0**2, n0=s.n0)
        om = math.sqrt(s.omega_p**2 + (s.c_light * k) ** 2) * rng.uniform(0.7, 1.3)
        if om / k <= 1.05 * f0.cutoff(s.hbar * k / (2 * s.mass)):
            continue
        a = gd_kinetic_eval(om, k, s, f0)
        b = kinetic_dispersion_function(om, k, s, f0)
        out.append(abs(a - b))
    return out


# ---------------------------------------------------------------------------
# scans

def dispersion_scan(k_min: float, k_max: float, steps: int, which: str, setup: PhysicalSetup,
                    eq: EquilibriumPressure, v0: float = 1.0, order: int = 0) -> list[DispersionResult]:
    """Uniform k grid; ``which`` is fluid, approx, kinetic or kinetic-series.

    k_min == k_max gives a single row.
    """
    if k_min < 0 or k_max < k_min:
        raise ValueError("need 0 <= k_min <= k_max")
    if k_max == k_min:
        ks = np.array([k_min])
    else:
        if steps < 2:
            raise ValueError("steps must be at least 2")
        ks = np.linspace(k_min, k_max, steps)
    out: list[DispersionResult] = []
    prev = None
    f0 = EquilibriumDistribution1D(v0=v0, p_perp=eq.p_perp, n0=setup.n0)
    for k in ks:
        try:
            if which == "fluid":
                r = fluid_dispersion_roots(k, setup, eq)
            elif which == "approx":
                om = fluid_dispersion_approx(k, setup, eq)
                r = DispersionResult(float(k), om, abs(fluid_dispersion_function(om, k, setup, eq)) / om**2,
                                     "em", 0, "approx")
            elif which in ("kinetic", "kinetic-series"):
                mode = "exact" if which == "kinetic" else "series"
                guess = None
                if prev is not None:
                    # carry the previous correction over to the new k
                    guess = prev[1] * fluid_dispersion_approx(k, setup, eq) / fluid_dispersion_approx(prev[0], setup, eq)
                r = kinetic_dispersion_solve(k, setup, f0, mode, order, omega_guess=guess)
            else:
                raise ValueError(f"unknown method {which!r}")
        except (ValueError, ArithmeticError) as exc:
            if isinstance(exc, ValueError) and str(exc).startswith("unknown method"):
                raise
            raise type(exc)(f"k={k:.6g}: {exc}") from exc
        prev = (k, r.omega)
        out.append(r)
    return out


def write_scan_csv(results, path=None) -> str:
    rows = ((r.k, r.omega, r.residual, r.branch, r.method) for r in results)
    return csvio.write(path, ["k", "omega", "residual", "branch", "method"], rows)
