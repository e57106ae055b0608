"""Right-hand sides and RK4 time integration for Euler and inviscid Leray-alpha.

Both systems share one code path: the advecting velocity is ``u = K * v`` and
the identity kernel gives Euler.  Pressure is removed by Leray projection, the
quadratic product is formed on the grid and truncated with the 2/3 rule.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .kernels import IDENTITY, KernelSpec, apply_kernel
from .spectral_core import (
    DIVFREE_TOL,
    Grid,
    SpectralField,
    _scalar_fft,
    _scalar_ifft,
    divergence_residual,
    hermitian_part,
    leray_project,
    save_checkpoint,
    sobolev_norm,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ICKind",
    "InitialCondition",
    "DtPolicy",
    "SolverConfig",
    "DiagnosticsRecord",
    "Trajectory",
    "BlowUpError",
    "CFLViolation",
    "make_initial_condition",
    "taylor_green",
    "advection",
    "rhs_leray_alpha",
    "rhs_euler",
    "pressure",
    "step",
    "cfl_dt",
    "simulate",
    "write_diagnostics_csv",
]


class BlowUpError(RuntimeError):
    """Raised when the solution leaves the resolved regime (NaN/Inf or norm growth)."""

    def __init__(self, message, t=None, norm=None):
        super().__init__(message)
        self.t = t
        self.norm = norm


class CFLViolation(ValueError):
    pass


# -- initial conditions -------------------------------------------------------


class ICKind(str, Enum):
    TAYLOR_GREEN = "taylor_green"
    RANDOM_BAND_LIMITED = "random_band_limited"


@dataclass(frozen=True)
class InitialCondition:
    kind: ICKind = ICKind.RANDOM_BAND_LIMITED
    band: int = 4
    # None keeps the natural amplitude (Taylor-Green only)
    target_norm: float | None = 1.0
    seed: int = 0
    s_norm: float = 0.0
    # random modes get amplitude |xi|^(-spectral_slope)
    spectral_slope: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ICKind(self.kind))
        if self.kind is ICKind.RANDOM_BAND_LIMITED and self.target_norm is None:
            raise ValueError("random initial condition needs a target_norm")


def taylor_green(grid: Grid, amplitude: float = 1.0) -> SpectralField:
    """Steady Taylor-Green cell ``(sin x cos y, -cos x sin y[, 0])`` (cos z factor in 3D)."""
    x = grid.coordinates * (2 * np.pi / grid.length)
    if grid.dim == 2:
        vel = np.stack([np.sin(x[0]) * np.cos(x[1]), -np.cos(x[0]) * np.sin(x[1])])
    else:
        cz = np.cos(x[2])
        vel = np.stack([np.sin(x[0]) * np.cos(x[1]) * cz,
                        -np.cos(x[0]) * np.sin(x[1]) * cz,
                        np.zeros(grid.shape)])
    coeffs = np.fft.fftn(amplitude * vel, axes=tuple(range(1, grid.dim + 1))) / grid.n**grid.dim
    # drop roundoff-level modes so the field is exactly band-limited
    coeffs[np.abs(coeffs) < 1e-14 * max(abs(amplitude), 1.0)] = 0.0
    return SpectralField(grid, coeffs, is_divfree=True)


def random_band_limited(grid: Grid, band: int, seed: int, spectral_slope: float = 0.0) -> SpectralField:
    """Divergence-free, zero-mean, real field supported on ``0 < |xi| <= band``."""
    if band < 1:
        raise ValueError("band must be >= 1")
    if band > grid.n // 3:
        raise ValueError(f"band {band} exceeds the dealiased range {grid.n // 3}")
    rng = np.random.default_rng(seed)
    shape = (grid.dim,) + grid.shape
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    kint = np.sqrt(np.sum(grid.integer_wavenumbers.astype(float) ** 2, axis=0))
    support = (kint <= band) & (kint > 0)
    weight = np.where(support, np.where(kint > 0, kint, 1.0) ** (-spectral_slope), 0.0)
    coeffs *= weight
    coeffs = hermitian_part(coeffs, grid.dim)
    return leray_project(SpectralField(grid, coeffs))


def make_initial_condition(ic: InitialCondition, grid: Grid) -> SpectralField:
    if ic.kind is ICKind.TAYLOR_GREEN:
        v = taylor_green(grid)
    else:
        v = random_band_limited(grid, ic.band, ic.seed, ic.spectral_slope)
    if ic.target_norm is not None:
        current = sobolev_norm(v, ic.s_norm)
        if current == 0:
            raise ValueError("initial condition is identically zero")
        v = v.with_coeffs(v.coeffs * (ic.target_norm / current))
    return v


# -- right-hand sides ---------------------------------------------------------


def _physical_components(coeffs, grid):
    return [_scalar_ifft(c, grid) for c in coeffs]


def _advection_coeffs(u_coeffs, v_coeffs, grid: Grid) -> np.ndarray:
    """Dealiased coefficients of ``(u . grad) v``."""
    k = grid.wavenumbers
    u = _physical_components(u_coeffs, grid)
    out = np.empty_like(v_coeffs)
    for i in range(grid.dim):
        acc = np.zeros(grid.shape)
        for j in range(grid.dim):
            acc += u[j] * _scalar_ifft(1j * k[j] * v_coeffs[i], grid)
        out[i] = _scalar_fft(acc, grid)
    return out * grid.dealias_mask


def advection(u: SpectralField, v: SpectralField) -> SpectralField:
    """``(u . grad) v`` computed on the grid, truncated by the 2/3 rule.

    Exact (alias-free) whenever ``u`` and ``v`` live inside the dealiased band.
    """
    return SpectralField(v.grid, _advection_coeffs(u.coeffs, v.coeffs, v.grid))


def _project_coeffs(coeffs, grid: Grid) -> np.ndarray:
    k = grid.wavenumbers
    safe = np.where(grid.k2 == 0, 1.0, grid.k2)
    return coeffs - k * (np.sum(k * coeffs, axis=0) / safe)


def _rhs_coeffs(v_coeffs, grid: Grid, multiplier) -> np.ndarray:
    u_coeffs = v_coeffs if multiplier is None else multiplier * v_coeffs
    return -_project_coeffs(_advection_coeffs(u_coeffs, v_coeffs, grid), grid)


def _multiplier(k: KernelSpec, grid: Grid):
    return None if k.is_identity else k.multiplier(grid.k2)


def _require_divfree(v: SpectralField):
    scale = max(float(np.max(np.abs(v.coeffs), initial=0.0)), 1.0)
    if not v.is_divfree and divergence_residual(v) > DIVFREE_TOL * scale * v.grid.n:
        raise ValueError("velocity field is not divergence-free")


def rhs_leray_alpha(v: SpectralField, k: KernelSpec) -> SpectralField:
    """``-P[(u . grad) v]`` with ``u = K * v``."""
    _require_divfree(v)
    out = _rhs_coeffs(v.coeffs, v.grid, _multiplier(k, v.grid))
    return SpectralField(v.grid, out, is_divfree=True)


def rhs_euler(v: SpectralField) -> SpectralField:
    return rhs_leray_alpha(v, IDENTITY)


def pressure(v: SpectralField, k: KernelSpec = IDENTITY) -> np.ndarray:
    """Scalar pressure coefficients solving ``-Lap p = div[(u . grad) v]``.

    Diagnostic only; the integrator never uses it.
    """
    grid = v.grid
    u = apply_kernel(k, v)
    adv = _advection_coeffs(u.coeffs, v.coeffs, grid)
    div = np.sum(1j * grid.wavenumbers * adv, axis=0)
    safe = np.where(grid.k2 == 0, 1.0, grid.k2)
    p = div / safe
    p[grid.k2 == 0] = 0.0
    return p


# -- time stepping ------------------------------------------------------------


def max_velocity(v: SpectralField) -> float:
    phys = _physical_components(v.coeffs, v.grid)
    return float(np.sqrt(np.max(sum(c**2 for c in phys))))


def cfl_dt(v: SpectralField, k: KernelSpec, safety: float) -> float:
    """``safety * dx / max|u|`` for the advecting velocity ``u = K * v``."""
    umax = max_velocity(apply_kernel(k, v))
    if umax == 0:
        return np.inf
    return safety * v.grid.dx / umax


def _rk4(coeffs, dt, grid, mult):
    k1 = _rhs_coeffs(coeffs, grid, mult)
    k2 = _rhs_coeffs(coeffs + 0.5 * dt * k1, grid, mult)
    k3 = _rhs_coeffs(coeffs + 0.5 * dt * k2, grid, mult)
    k4 = _rhs_coeffs(coeffs + dt * k3, grid, mult)
    new = coeffs + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    # keep the state exactly in the projected, dealiased subspace
    return _project_coeffs(new * grid.dealias_mask, grid)


def step(state: SpectralField, dt: float, k: KernelSpec, cfl: float | None = None) -> SpectralField:
    """One classical RK4 step.  With ``cfl`` set, reject steps above the CFL limit."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return state
    _require_divfree(state)
    if cfl is not None:
        limit = cfl_dt(state, k, cfl)
        if dt > limit * (1 + 1e-12):
            raise CFLViolation(f"dt={dt:g} exceeds CFL limit {limit:g}")
    new = _rk4(state.coeffs, dt, state.grid, _multiplier(k, state.grid))
    if not np.all(np.isfinite(new)):
        raise BlowUpError("non-finite values after RK4 step")
    return SpectralField(state.grid, new, is_divfree=True)


@dataclass(frozen=True)
class DtPolicy:
    """Either a fixed step (``kind='fixed'``) or a CFL safety factor (``kind='cfl'``)."""

    kind: str = "cfl"
    value: float = 0.5

    def __post_init__(self):
        if self.kind == "fixed":
            if not self.value > 0:
                raise ValueError("fixed dt must be positive")
        elif self.kind == "cfl":
            if not 0 < self.value <= 1:
                raise ValueError("CFL safety factor must lie in (0, 1]")
        else:
            raise ValueError(f"unknown dt policy {self.kind!r}")


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid
    kernel: KernelSpec = IDENTITY
    dt_policy: DtPolicy = DtPolicy()
    t_end: float = 1.0
    ic: InitialCondition = InitialCondition()
    record_every: int = 1
    diag_s: tuple[float, ...] = (0.0, 1.0)
    blowup_factor: float = 50.0
    checkpoint_dir: str | None = None

    def __post_init__(self):
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class DiagnosticsRecord:
    t: float
    l2_energy: float
    hs_norms: dict[float, float]
    max_velocity: float
    divergence: float = 0.0


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    snapshots: list[SpectralField] = field(default_factory=list)
    diagnostics: list[DiagnosticsRecord] = field(default_factory=list)
    completed: bool = True
    failure: str | None = None

    @property
    def final(self) -> SpectralField:
        return self.snapshots[-1]


def diagnose(v: SpectralField, t: float, s_list) -> DiagnosticsRecord:
    return DiagnosticsRecord(
        t=t,
        l2_energy=0.5 * sobolev_norm(v, 0.0) ** 2,
        hs_norms={float(s): sobolev_norm(v, s) for s in s_list},
        max_velocity=max_velocity(v),
        divergence=divergence_residual(v),
    )


def simulate(cfg: SolverConfig, v0: SpectralField | None = None, raise_on_failure: bool = True) -> Trajectory:
    """Advance the initial condition to ``cfg.t_end``.

    A fixed ``dt`` is shrunk to ``t_end / ceil(t_end / dt)`` so the run ends
    exactly at ``t_end``.  The run stops when the ``H^s`` norm (``s = ic.s_norm``)
    exceeds ``blowup_factor`` times its initial value.  With
    ``raise_on_failure=False`` the partial trajectory is returned with
    ``completed=False`` instead.
    """
    grid = cfg.grid
    v = make_initial_condition(cfg.ic, grid) if v0 is None else v0
    s_list = sorted(set(cfg.diag_s) | {cfg.ic.s_norm})
    traj = Trajectory()
    ckpt = Path(cfg.checkpoint_dir) if cfg.checkpoint_dir else None
    if ckpt:
        ckpt.mkdir(parents=True, exist_ok=True)

    def record(field_, t, nstep):
        traj.times.append(t)
        traj.snapshots.append(field_)
        traj.diagnostics.append(diagnose(field_, t, s_list))
        if ckpt:
            save_checkpoint(field_, ckpt / f"state_{nstep:06d}.lasf")

    record(v, 0.0, 0)
    if cfg.t_end == 0:
        return traj

    norm0 = sobolev_norm(v, cfg.ic.s_norm)
    limit = cfg.blowup_factor * norm0
    mult = _multiplier(cfg.kernel, grid)
    coeffs = v.coeffs
    t = 0.0
    nstep = 0
    if cfg.dt_policy.kind == "fixed":
        nsteps = max(1, int(np.ceil(cfg.t_end / cfg.dt_policy.value - 1e-12)))
        dt_fixed = cfg.t_end / nsteps
    try:
        while t < cfg.t_end * (1 - 1e-14):
            if cfg.dt_policy.kind == "fixed":
                dt = dt_fixed
                if nstep == nsteps - 1:
                    dt = cfg.t_end - t
            else:
                state = SpectralField(grid, coeffs, is_divfree=True)
                dt = min(cfl_dt(state, cfg.kernel, cfg.dt_policy.value), cfg.t_end - t)
            coeffs = _rk4(coeffs, dt, grid, mult)
            nstep += 1
            t = cfg.t_end if cfg.t_end - (t + dt) < 1e-14 * cfg.t_end else t + dt
            if not np.all(np.isfinite(coeffs)):
                raise BlowUpError("non-finite values", t=t)
            norm = float(np.sqrt(np.sum(grid.sobolev_weight(cfg.ic.s_norm)
                                        * np.sum(np.abs(coeffs) ** 2, axis=0))))
            if norm > limit:
                raise BlowUpError(f"H^{cfg.ic.s_norm} norm {norm:.3g} exceeds {limit:.3g}", t=t, norm=norm)
            if nstep % cfg.record_every == 0 or t >= cfg.t_end:
                record(SpectralField(grid, coeffs, is_divfree=True), t, nstep)
    except BlowUpError as exc:
        logger.warning("trajectory aborted at t=%s: %s", exc.t, exc)
        if raise_on_failure:
            raise
        traj.completed = False
        traj.failure = str(exc)
    return traj


def write_diagnostics_csv(records, path) -> None:
    records = list(records)
    s_keys = sorted(records[0].hs_norms) if records else []
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "l2_energy"] + [f"hs_norm_{s:g}" for s in s_keys] + ["max_velocity"])
        for r in records:
            vals = [r.t, r.l2_energy] + [r.hs_norms[s] for s in s_keys] + [r.max_velocity]
            writer.writerow([repr(float(x)) for x in vals])
