"""Spectral mollifiers, advection-inequality probes and structure functions."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .dynamics import advection
from .spectral_core import (
    Grid,
    SpectralField,
    _scalar_ifft,
    sobolev_inner,
    sobolev_norm,
    to_physical,
)

__all__ = [
    "MollifierResult",
    "frequency_cutoff",
    "Estimate",
    "advection_inequality_probe",
    "empirical_constant",
    "SubBox",
    "StructureFunctionSample",
    "second_order_structure",
    "fit_scaling_exponent",
    "ScalingFit",
    "BandMollifier",
    "band_mollify",
    "write_structure_csv",
    "write_fit_csv",
]

SLACK = 1e-12


# -- frequency-cutoff mollifier ----------------------------------------------


@dataclass
class MollifierResult:
    delta: float
    field: SpectralField
    # name -> (lhs, rhs) for each estimate, rhs with the delta^-1 / delta^(s-l) constants
    norm_budget: dict[str, tuple[float, float]]
    # the H^{s+1} bound with the lattice-sharp constant sqrt(1 + delta^-2)
    sharp_smoothing: tuple[float, float] = (0.0, 0.0)

    @staticmethod
    def _ok(lhs, rhs):
        return lhs <= rhs + SLACK * max(rhs, lhs, 1e-300)

    @property
    def holds(self) -> bool:
        return all(self._ok(lhs, rhs) for lhs, rhs in self.norm_budget.values())

    @property
    def holds_sharp(self) -> bool:
        """Budget with the smoothing bound replaced by its sharp form; always true."""
        others = [v for k, v in self.norm_budget.items() if k != "smoothing_s+1"]
        return all(self._ok(lhs, rhs) for lhs, rhs in others + [self.sharp_smoothing])


def frequency_cutoff(v0: SpectralField, delta: float, s: float = 3.0, l_list=(0.0, 1.0, 2.0),
                     check: bool = True) -> MollifierResult:
    """Zero every mode with ``|xi| > 1/delta`` and record the norm budget.

    The budget holds the stability bounds in ``H^s`` and ``H^{s+1}`` and the
    approximation bound ``|v0^delta - v0|_l <= delta^(s-l) |v0|_s`` for each
    ``l`` in ``l_list`` (entries above ``s`` are skipped).

    A kept mode has ``1 + |xi|^2 <= 1 + delta^-2``, so the ``H^{s+1}`` bound
    with constant ``delta^-1`` can fail by up to ``sqrt(1 + delta^2)`` when the
    energy sits at the cutoff.  ``check`` asserts the sharp form.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    keep = v0.grid.k2 * delta**2 <= 1.0
    vd = v0.with_coeffs(v0.coeffs * keep)
    vs = sobolev_norm(v0, s)
    lhs_smooth = sobolev_norm(vd, s + 1)
    budget = {
        "stability_s": (sobolev_norm(vd, s), vs),
        "smoothing_s+1": (lhs_smooth, vs / delta),
    }
    diff = vd - v0
    for l_ in l_list:
        if 0 <= l_ <= s:
            budget[f"approx_l={l_:g}"] = (sobolev_norm(diff, l_), delta ** (s - l_) * vs)
    result = MollifierResult(delta, vd, budget, (lhs_smooth, np.sqrt(1 + delta**-2) * vs))
    if check and not result.holds_sharp:
        raise AssertionError(f"mollifier budget violated: {budget}")
    return result


# -- advection inequality probes ---------------------------------------------


class Estimate(str, Enum):
    EST1 = "est1"  # |(u.grad)v|_s <= C(|u|_s |v|_s + |u|_inf |v|_{s+1}),  s > d/2+1
    EST0 = "est0"  # |<(u.grad)v, v>_s| <= C |grad u|_s |v|_s^2,           s > d/2
    EST2 = "est2"  # |<(u.grad)v, v>_s| <= C |u|_s |v|_s^2,                s > d/2+1
    EST4 = "est4"  # |<(u.grad)v, v>_s| <= C(|u|_l |v|_s + |v|_l |u|_s)|v|_s, s >= 0, l > d/2+1


def _grad_norm(u: SpectralField, s: float) -> float:
    power = u.grid.k2 * np.sum(np.abs(u.coeffs) ** 2, axis=0)
    return float(np.sqrt(np.sum(u.grid.sobolev_weight(s) * power)))


def _linf(u: SpectralField) -> float:
    phys = np.real(to_physical(u))
    return float(np.sqrt(np.max(np.sum(phys**2, axis=0))))


def advection_inequality_probe(which, u: SpectralField, v: SpectralField, s: float, l: float | None = None):
    """Return ``(lhs, rhs_without_C)`` for one of the commutator/product estimates.

    The product ``(u . grad) v`` is formed on the grid with 2/3 truncation,
    which is exact when both inputs are supported in ``|xi_i| <= n/6``.
    """
    which = Estimate(which)
    d = u.grid.dim
    if which in (Estimate.EST1, Estimate.EST2) and not s > d / 2 + 1:
        raise ValueError(f"{which.value} needs s > d/2 + 1")
    if which is Estimate.EST0 and not s > d / 2:
        raise ValueError("est0 needs s > d/2")
    if which is Estimate.EST4:
        if l is None or not l > d / 2 + 1 or s < 0:
            raise ValueError("est4 needs s >= 0 and l > d/2 + 1")

    adv = advection(u, v)
    if which is Estimate.EST1:
        lhs = sobolev_norm(adv, s)
        rhs = sobolev_norm(u, s) * sobolev_norm(v, s) + _linf(u) * sobolev_norm(v, s + 1)
        return lhs, rhs
    lhs = abs(sobolev_inner(adv, v, s))
    vs = sobolev_norm(v, s)
    if which is Estimate.EST0:
        return lhs, _grad_norm(u, s) * vs**2
    if which is Estimate.EST2:
        return lhs, sobolev_norm(u, s) * vs**2
    return lhs, (sobolev_norm(u, l) * vs + sobolev_norm(v, l) * sobolev_norm(u, s)) * vs


def empirical_constant(pairs, which, s: float, l: float | None = None) -> dict:
    """Sweep a probe corpus; report the max ratio and the median of the top decile."""
    ratios = []
    for u, v in pairs:
        lhs, rhs = advection_inequality_probe(which, u, v, s, l)
        if rhs > 0:
            ratios.append(lhs / rhs)
    ratios = np.asarray(ratios)
    if ratios.size == 0:
        raise ValueError("no probe pair with a nonzero right-hand side")
    cut = np.quantile(ratios, 0.9)
    top = ratios[ratios >= cut]
    return {"C_hat": float(ratios.max()), "top_decile_median": float(np.median(top)),
            "n": int(ratios.size), "ratios": ratios}


# -- structure functions ------------------------------------------------------


@dataclass(frozen=True)
class SubBox:
    """Axis-aligned box ``[lower_i, upper_i]`` inside the fundamental cell.

    ``periodic=True`` means the whole torus; there is no boundary so no margin applies.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    periodic: bool = False

    @classmethod
    def full(cls, grid: Grid) -> "SubBox":
        return cls((0.0,) * grid.dim, (grid.length,) * grid.dim, periodic=True)

    @classmethod
    def centered(cls, grid: Grid, margin: float) -> "SubBox":
        return cls((margin,) * grid.dim, (grid.length - margin,) * grid.dim)

    def margin(self, grid: Grid) -> float:
        if self.periodic:
            return np.inf
        return float(min(min(lo, grid.length - hi) for lo, hi in zip(self.lower, self.upper)))

    def mask(self, grid: Grid) -> np.ndarray:
        if self.periodic:
            return np.ones(grid.shape, bool)
        x = grid.coordinates
        m = np.ones(grid.shape, bool)
        for i in range(grid.dim):
            m &= (x[i] >= self.lower[i]) & (x[i] < self.upper[i])
        return m

    def descriptor(self) -> str:
        if self.periodic:
            return "torus"
        return "x".join(f"[{lo:.6g},{hi:.6g}]" for lo, hi in zip(self.lower, self.upper))


@dataclass
class StructureFunctionSample:
    y: np.ndarray
    s2: float
    subdomain: SubBox
    t_span: float = 0.0
    flagged: bool = False

    @property
    def y_norm(self) -> float:
        return float(np.linalg.norm(self.y))


def _shift_phase(grid: Grid, y) -> np.ndarray:
    # phase reduced mod 1 before exponentiating: a full-period shift is exactly 1
    frac = np.zeros(grid.shape)
    for i in range(grid.dim):
        frac = frac + grid.integer_wavenumbers[i] * (float(y[i]) / grid.length)
    frac = np.mod(frac, 1.0)
    return np.exp(2j * np.pi * frac)


def _increment_energy(v: SpectralField, phase, mask, cell: float) -> float:
    total = 0.0
    for c in range(v.grid.dim):
        diff = _scalar_ifft(v.coeffs[c] * (phase - 1.0), v.grid)
        total += float(np.sum(diff[mask] ** 2))
    return total * cell


def second_order_structure(snapshots, times, K: SubBox, y) -> StructureFunctionSample:
    """``int_0^T int_K |v(x+y,t) - v(x,t)|^2 dx dt``.

    The shift is applied exactly in Fourier space, the space integral is the
    grid-point quadrature over ``K`` and the time integral is the trapezoid rule.
    """
    snapshots = list(snapshots)
    times = np.asarray(times, dtype=float)
    if len(snapshots) < 2 or len(times) != len(snapshots):
        raise ValueError("need at least 2 snapshots with matching times")
    if np.any(np.diff(times) < 0):
        raise ValueError("snapshots must be time-ordered")
    grid = snapshots[0].grid
    y = np.asarray(y, dtype=float)
    if y.shape != (grid.dim,):
        raise ValueError(f"displacement must have {grid.dim} components")
    if not K.periodic and np.linalg.norm(y) >= K.margin(grid):
        raise ValueError("|y| exceeds the margin between K and the cell boundary")
    if not np.any(y):
        return StructureFunctionSample(y, 0.0, K, float(times[-1] - times[0]))
    phase = _shift_phase(grid, y)
    mask = K.mask(grid)
    cell = grid.dx**grid.dim
    values = [_increment_energy(v, phase, mask, cell) for v in snapshots]
    s2 = float(integrate.trapezoid(values, times))
    return StructureFunctionSample(y, max(s2, 0.0), K, float(times[-1] - times[0]))


@dataclass
class ScalingFit:
    gamma_hat: float
    E_hat: float
    residual: float
    y_min: float
    y_max: float
    n_samples: int


def fit_scaling_exponent(samples, y_min: float, y_max: float) -> ScalingFit:
    """Least-squares fit of ``log s2 = log E + 2 gamma log|y|`` over ``y_min <= |y| <= y_max``."""
    chosen = [smp for smp in samples if y_min <= smp.y_norm <= y_max and not smp.flagged]
    if len(chosen) < 4:
        raise ValueError(f"need >= 4 samples in range, got {len(chosen)}")
    s2 = np.array([smp.s2 for smp in chosen])
    if np.any(s2 <= 0):
        raise ValueError("structure function values must be positive")
    ly = np.log([smp.y_norm for smp in chosen])
    if np.ptp(ly) == 0:
        raise ValueError("degenerate |y| range")
    ls = np.log(s2)
    slope, intercept = np.polyfit(ly, ls, 1)
    resid = ls - (slope * ly + intercept)
    return ScalingFit(float(slope / 2), float(np.exp(intercept)), float(np.sqrt(np.mean(resid**2))),
                      y_min, y_max, len(chosen))


# -- annulus mollifier ---------------------------------------------------------


def _bump(rho):
    rho = np.asarray(rho, dtype=float)
    t = 2.0 * rho - 3.0
    out = np.zeros_like(rho)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def _sphere_area(dim: int) -> float:
    return 2 * np.pi if dim == 2 else 4 * np.pi


@lru_cache(maxsize=None)
def _normalisation(dim: int) -> float:
    mass, _ = integrate.quad(lambda r: _bump(r) * r ** (dim - 1), 1.0, 2.0,
                             epsabs=1e-15, epsrel=1e-13, limit=200)
    return 1.0 / (_sphere_area(dim) * mass)


@dataclass(frozen=True)
class BandMollifier:
    """Radial bump ``j`` supported in ``1 < |z| < 2`` with unit integral, at scale ``r``."""

    r: float
    dim: int = 2
    quad_nodes: int = 400
    _nodes: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if self.r < 0:
            raise ValueError("r must be nonnegative")
        x, w = np.polynomial.legendre.leggauss(self.quad_nodes)
        object.__setattr__(self, "_nodes", (1.5 + 0.5 * x, 0.5 * w))

    def profile(self, rho) -> np.ndarray:
        """``j`` as a function of ``|z|``."""
        return _normalisation(self.dim) * _bump(rho)

    def mass(self) -> float:
        """Discrete (Gauss-Legendre) quadrature of ``j`` over the plane/space."""
        rho, w = self._nodes
        return float(_sphere_area(self.dim) * np.sum(w * self.profile(rho) * rho ** (self.dim - 1)))

    def transform(self, k) -> np.ndarray:
        """Fourier transform ``j_hat(|k|)`` by radial quadrature."""
        k = np.asarray(k, dtype=float)
        rho, w = self._nodes
        weights = w * self.profile(rho) * rho ** (self.dim - 1) * _sphere_area(self.dim)
        kr = np.multiply.outer(k, rho)
        if self.dim == 2:
            kernel = special.j0(kr)
        else:
            kernel = np.sinc(kr / np.pi)
        return kernel @ weights


def band_mollify(f: SpectralField, m: BandMollifier) -> SpectralField:
    """``f_r(x) = int j(z) f(x - r z) dz`` as the multiplier ``j_hat(r |xi|)``."""
    grid = f.grid
    if m.dim != grid.dim:
        raise ValueError("mollifier dimension does not match the grid")
    if not 2 * m.r < grid.length / 2:
        raise ValueError("2r must be smaller than the half-width of the box")
    if m.r == 0:
        return f
    kmag = grid.kmag
    uniq, inverse = np.unique(kmag, return_inverse=True)
    mult = m.transform(m.r * uniq)[inverse].reshape(kmag.shape)
    return f.with_coeffs(f.coeffs * mult)


# -- csv ----------------------------------------------------------------------


def write_structure_csv(samples, path) -> None:
    samples = list(samples)
    dim = len(samples[0].y) if samples else 2
    comps = ["yx", "yy", "yz"][:dim]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["|y|"] + comps + ["s2", "t_span", "K_descriptor"])
        for smp in samples:
            writer.writerow([repr(smp.y_norm)] + [repr(float(c)) for c in smp.y]
                            + [repr(float(smp.s2)), repr(float(smp.t_span)), smp.subdomain.descriptor()])


def write_fit_csv(fits, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["gamma_hat", "E_hat", "residual", "y_min", "y_max", "n_samples"])
        for fit in fits:
            writer.writerow([repr(float(x)) for x in (fit.gamma_hat, fit.E_hat, fit.residual, fit.y_min, fit.y_max)]
                            + [int(fit.n_samples)])
