"""Alpha sweeps: convergence rates to Euler, kernel-driver rates, structure functions.

All trajectories of one experiment share the grid, the initial condition and a
fixed time step, so differences between branches are due to the kernel alone.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .analysis import (
    StructureFunctionSample,
    SubBox,
    fit_scaling_exponent,
    second_order_structure,
    write_fit_csv,
    write_structure_csv,
)
from .dynamics import (
    DtPolicy,
    SolverConfig,
    Trajectory,
    cfl_dt,
    make_initial_condition,
    random_band_limited,
    simulate,
)
from .kernels import IDENTITY, KernelKind, KernelSpec, apply_kernel
from .spectral_core import SpectralField, derivative, sobolev_norm, to_physical
from . import plotting

logger = logging.getLogger(__name__)

WORKERS_ENV = "LERAY_ALPHA_WORKERS"

__all__ = [
    "iota_predicted",
    "ExperimentConfig",
    "RateFitResult",
    "CorollaryReport",
    "StructureReport",
    "run_rate_experiment",
    "run_corollary_experiment",
    "run_structure_experiment",
    "surrogate_ratio",
    "fit_loglog",
    "emit_report",
    "WORKERS_ENV",
]


def iota_predicted(s: float, s_prime: float) -> float:
    """Rate exponent: ``s - s'`` for ``s-2 <= s' <= s-1`` and ``2`` for ``0 <= s' <= s-2``."""
    if not 0 <= s_prime <= s - 1:
        raise ValueError(f"s'={s_prime} outside [0, s-1] for s={s}")
    return float(min(2.0, s - s_prime))


def fit_loglog(x, y) -> tuple[float, float, float]:
    """Slope, intercept and RMS log-residual of a least-squares line through (log x, log y)."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


@dataclass(frozen=True)
class ExperimentConfig:
    base: SolverConfig
    alpha_list: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)
    s: float = 4.0
    s_prime_list: tuple[float, ...] = (0.0, 2.0, 3.0)
    t_eval: float = 0.5
    kernel_kinds: tuple[str, ...] = ("helmholtz",)
    same_ic_for_all: bool = True
    # perturbed-IC mode: v0^alpha = v0 + ic_perturbation * alpha^2 * |v0|_0 * w, |w|_0 = 1
    ic_perturbation: float = 0.0
    floor_factor: float = 10.0
    slope_tol: float = 0.4
    ratio_spread_max: float = 10.0
    workers: int | None = None

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alpha_list)
        object.__setattr__(self, "alpha_list", alphas)
        if any(b >= a for a, b in zip(alphas, alphas[1:])):
            raise ValueError("alpha_list must be strictly decreasing")
        if any(a <= 0 for a in alphas):
            raise ValueError("alphas must be positive")
        dim = self.base.grid.dim
        if not self.s > dim / 2 + 1:
            raise ValueError(f"s={self.s} must exceed d/2 + 1 = {dim / 2 + 1}")
        if not 0 < self.t_eval <= self.base.t_end:
            raise ValueError("t_eval must lie in (0, base.t_end]")

    def worker_count(self) -> int:
        if self.workers is not None:
            return max(1, int(self.workers))
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))


# -- trajectories --------------------------------------------------------------


def _fixed_dt(cfg: ExperimentConfig, v0: SpectralField) -> float:
    pol = cfg.base.dt_policy
    if pol.kind == "fixed":
        return pol.value
    # one step size for every branch, from the CFL limit of the unfiltered data
    return cfl_dt(v0, IDENTITY, pol.value)


def _run(base: SolverConfig, kernel: KernelSpec, v0: SpectralField, dt: float, t_end: float,
         record_every: int = 10**9) -> Trajectory:
    cfg = replace(base, kernel=kernel, dt_policy=DtPolicy("fixed", dt), t_end=t_end,
                  record_every=record_every, checkpoint_dir=None)
    return simulate(cfg, v0=v0, raise_on_failure=False)


def _run_task(args):
    return _run(*args)


def _map(cfg: ExperimentConfig, tasks):
    n = cfg.worker_count()
    if n == 1 or len(tasks) == 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_run_task, tasks))


def field_hash(f: SpectralField) -> str:
    return hashlib.sha256(np.ascontiguousarray(f.coeffs).tobytes()).hexdigest()


def _initial_data(cfg: ExperimentConfig, alpha: float, v0: SpectralField) -> SpectralField:
    if cfg.same_ic_for_all or cfg.ic_perturbation == 0:
        return v0
    w = random_band_limited(v0.grid, cfg.base.ic.band, cfg.base.ic.seed + 7919)
    w = w * (1.0 / sobolev_norm(w, 0.0))
    return v0 + w * (cfg.ic_perturbation * alpha**2 * sobolev_norm(v0, 0.0))


def strain_time_product(v0: SpectralField, t: float) -> float:
    """``t * max |grad v0|``; values <= 0.5 keep the run well inside one eddy turnover."""
    gmax = 0.0
    for j in range(v0.grid.dim):
        gmax = max(gmax, float(np.max(np.abs(np.real(to_physical(derivative(v0, j)))))))
    return t * gmax


# -- rate experiment -----------------------------------------------------------


@dataclass
class RateFitResult:
    s_prime: float
    alphas: list[float]
    errors: list[float]
    iota_hat: float
    iota_predicted: float
    residual: float
    kernel: str = "helmholtz"
    s: float = 4.0
    included: list[bool] = field(default_factory=list)
    self_error: float = 0.0
    monotone: bool = True
    passed: bool = False
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _fit_rates(cfg, kind, alphas, finals, failures, ref, ref_half, v0):
    results = []
    turnover = strain_time_product(v0, cfg.t_eval)
    for sp in cfg.s_prime_list:
        pred = iota_predicted(cfg.s, sp)
        flags = []
        if turnover > 0.5:
            flags.append(f"t_eval*max|grad v0|={turnover:.3g} > 0.5")
        errors = [np.nan if f is None else sobolev_norm(f - ref, sp) for f in finals]
        self_err = sobolev_norm(ref - ref_half, sp)
        for a, fail in zip(alphas, failures):
            if fail:
                flags.append(f"alpha={a:g} aborted: {fail}")
        if all(e == 0 for e in errors):
            flags.append("all errors zero; fit skipped")
            results.append(RateFitResult(sp, list(alphas), errors, np.nan, pred, np.nan, kind, cfg.s,
                                         [False] * len(alphas), self_err, True, False, flags))
            continue
        included = [np.isfinite(e) and e > cfg.floor_factor * self_err for e in errors]
        for a, inc in zip(alphas, included):
            if not inc:
                flags.append(f"alpha={a:g} below discretisation floor")
        finite = [e for e in errors if np.isfinite(e)]
        monotone = len(finite) == len(errors) and all(b < a for a, b in zip(errors, errors[1:]))
        if not monotone:
            flags.append("errors not strictly decreasing in alpha")
        xs = [a for a, inc in zip(alphas, included) if inc]
        ys = [e for e, inc in zip(errors, included) if inc]
        if len(xs) >= 2:
            slope, _, resid = fit_loglog(xs, ys)
        else:
            slope, resid = np.nan, np.nan
            flags.append("fewer than 2 points above the floor")
        passed = bool(monotone and np.isfinite(slope) and slope >= pred - cfg.slope_tol)
        results.append(RateFitResult(sp, list(alphas), [float(e) for e in errors], float(slope), pred,
                                     float(resid), kind, cfg.s, included, float(self_err), monotone,
                                     passed, flags))
    return results


def _sweep(cfg: ExperimentConfig, kind: str, v0: SpectralField, dt: float, t_end: float,
           record_every: int = 10**9):
    tasks = [(cfg.base, KernelSpec(kind, a), _initial_data(cfg, a, v0), dt, t_end, record_every)
             for a in cfg.alpha_list]
    return _map(cfg, tasks)


def run_rate_experiment(cfg: ExperimentConfig, return_reference: bool = False):
    """Euler reference once, one Leray-alpha branch per alpha, error slopes per ``s'``."""
    grid = cfg.base.grid
    v0 = make_initial_condition(cfg.base.ic, grid)
    dt = _fixed_dt(cfg, v0)
    ref_traj = _run(cfg.base, IDENTITY, v0, dt, cfg.t_eval)
    half_traj = _run(cfg.base, IDENTITY, v0, dt / 2, cfg.t_eval)
    if not (ref_traj.completed and half_traj.completed):
        raise RuntimeError(f"Euler reference failed: {ref_traj.failure or half_traj.failure}")
    ref = ref_traj.final
    ref_hash = field_hash(ref)
    results = []
    for kind in cfg.kernel_kinds:
        trajs = _sweep(cfg, kind, v0, dt, cfg.t_eval)
        finals = [t.final if t.completed else None for t in trajs]
        failures = [t.failure for t in trajs]
        results += _fit_rates(cfg, kind, cfg.alpha_list, finals, failures, ref, half_traj.final, v0)
    if field_hash(ref) != ref_hash:
        raise RuntimeError("Euler reference changed during the sweep")
    if return_reference:
        return results, ref_hash
    return results


# -- corollary experiment ------------------------------------------------------


@dataclass
class CorollaryReport:
    kind: str
    s_prime: float
    alphas: list[float]
    errors: list[float]
    drivers: list[float]
    ratios: list[float]
    t_eval: float
    driver_slope: float
    driver_residual: float
    ratio_ceiling: float
    ratio_spread: float
    bounded: bool
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def run_corollary_experiment(cfg: ExperimentConfig, eps: float = 1e-300) -> list[CorollaryReport]:
    """Tabulate ``|v^a - v|_{s'}`` against the driver ``|K^a * v^a - v^a|_{s'}`` per kernel."""
    if not cfg.kernel_kinds:
        raise ValueError("kernel_kinds is empty")
    grid = cfg.base.grid
    v0 = make_initial_condition(cfg.base.ic, grid)
    dt = _fixed_dt(cfg, v0)
    ref_traj = _run(cfg.base, IDENTITY, v0, dt, cfg.t_eval)
    if not ref_traj.completed:
        raise RuntimeError(f"Euler reference failed: {ref_traj.failure}")
    ref = ref_traj.final
    reports = []
    for kind in cfg.kernel_kinds:
        trajs = _sweep(cfg, kind, v0, dt, cfg.t_eval)
        for sp in cfg.s_prime_list:
            flags = []
            errors, drivers = [], []
            for a, tr in zip(cfg.alpha_list, trajs):
                if not tr.completed:
                    flags.append(f"alpha={a:g} aborted: {tr.failure}")
                    errors.append(np.nan)
                    drivers.append(np.nan)
                    continue
                va = tr.final
                errors.append(sobolev_norm(va - ref, sp))
                drivers.append(sobolev_norm(apply_kernel(KernelSpec(kind, a), va) - va, sp))
            ratios = [e / (d * cfg.t_eval + eps) for e, d in zip(errors, drivers)]
            good = [r for r in ratios if np.isfinite(r) and r > 0]
            if good:
                ceiling = max(good)
                spread = ceiling / min(good)
            else:
                ceiling, spread = 0.0, 1.0
            pos = [(a, d) for a, d in zip(cfg.alpha_list, drivers) if np.isfinite(d) and d > 0]
            if len(pos) >= 2:
                slope, _, resid = fit_loglog(*zip(*pos))
            else:
                slope, resid = np.nan, np.nan
                flags.append("driver slope not fitted")
            bounded = bool(len(good) == len(ratios) and spread <= cfg.ratio_spread_max) or not good
            reports.append(CorollaryReport(kind, sp, list(cfg.alpha_list), errors, drivers, ratios,
                                           cfg.t_eval, slope, resid, ceiling, spread, bounded, flags))
    return reports


# -- structure experiment -------------------------------------------------------


def surrogate_ratio(v: SpectralField, alpha: float) -> float:
    """``|alpha^2 Lap u|_{H^-1} / (alpha |v|_{L^2})`` with ``u`` the Helmholtz-filtered ``v``."""
    u = apply_kernel(KernelSpec(KernelKind.HELMHOLTZ, alpha), v)
    lap = u.with_coeffs(-(alpha**2) * u.grid.k2 * u.coeffs)
    denom = alpha * sobolev_norm(v, 0.0)
    return sobolev_norm(lap, -1.0) / denom if denom > 0 else 0.0


@dataclass
class StructureReport:
    alphas: list[float]
    samples: dict[float, list[StructureFunctionSample]]
    fits: dict[float, object]
    joint_fit: object
    sup_ratio: list[float]
    surrogate: dict[float, float]
    surrogate_C: float
    surrogate_spread: float
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "alphas": self.alphas,
            "samples": {str(a): [{"y": list(map(float, smp.y)), "s2": smp.s2, "t_span": smp.t_span,
                                  "K": smp.subdomain.descriptor(), "flagged": smp.flagged}
                                 for smp in lst] for a, lst in self.samples.items()},
            "fits": {str(a): None if f is None else asdict(f) for a, f in self.fits.items()},
            "joint_fit": None if self.joint_fit is None else asdict(self.joint_fit),
            "sup_ratio": self.sup_ratio,
            "surrogate": {str(a): c for a, c in self.surrogate.items()},
            "surrogate_C": self.surrogate_C,
            "surrogate_spread": self.surrogate_spread,
            "flags": self.flags,
        }


def run_structure_experiment(cfg: ExperimentConfig, y_list, K: SubBox, record_every: int = 1,
                             eta=lambda a: a) -> StructureReport:
    """Time-integrated structure functions per alpha plus the H^-1 surrogate bound.

    Samples with ``|y| < eta(alpha)`` are flagged and left out of that alpha's fit.
    """
    grid = cfg.base.grid
    y_list = [np.asarray(y, float) for y in y_list]
    margin = K.margin(grid)
    for y in y_list:
        # one spare grid cell between the shifted box and the cell boundary
        if np.linalg.norm(y) + grid.dx > margin:
            raise ValueError(f"|y|={np.linalg.norm(y):.4g} plus one cell exceeds the margin {margin:.4g} of K")
    v0 = make_initial_condition(cfg.base.ic, grid)
    dt = _fixed_dt(cfg, v0)
    trajs = _sweep(cfg, cfg.kernel_kinds[0], v0, dt, cfg.t_eval, record_every)
    flags = []
    samples, fits, surrogate = {}, {}, {}
    for a, tr in zip(cfg.alpha_list, trajs):
        if not tr.completed:
            flags.append(f"alpha={a:g} aborted: {tr.failure}")
        rows = []
        for y in y_list:
            smp = second_order_structure(tr.snapshots, tr.times, K, y)
            smp.flagged = smp.y_norm < eta(a)
            rows.append(smp)
        samples[a] = rows
        try:
            fits[a] = fit_scaling_exponent(rows, min(r.y_norm for r in rows), max(r.y_norm for r in rows))
        except ValueError as exc:
            fits[a] = None
            flags.append(f"alpha={a:g} fit skipped: {exc}")
        surrogate[a] = max(surrogate_ratio(v, a) for v in tr.snapshots)

    pooled = [smp for rows in samples.values() for smp in rows]
    try:
        joint = fit_scaling_exponent(pooled, min(s.y_norm for s in pooled), max(s.y_norm for s in pooled))
        gamma = joint.gamma_hat
    except ValueError as exc:
        joint, gamma = None, 1.0
        flags.append(f"joint fit skipped: {exc}")
    sup_ratio = []
    for i, y in enumerate(y_list):
        r = np.linalg.norm(y)
        vals = [samples[a][i].s2 / r ** (2 * gamma) for a in cfg.alpha_list
                if not samples[a][i].flagged and r > 0]
        sup_ratio.append(float(max(vals)) if vals else float("nan"))
    cvals = [c for c in surrogate.values() if c > 0]
    spread = max(cvals) / min(cvals) if cvals else 1.0
    return StructureReport(list(cfg.alpha_list), samples, fits, joint, sup_ratio, surrogate,
                           max(cvals, default=0.0), spread, flags)


# -- reports -------------------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x))


def _write_rates(results, out: Path) -> list[Path]:
    written = []
    path = out / "rates.csv"
    lines = ["s_prime,alpha,error,iota_hat,iota_predicted,residual"]
    for r in results:
        for a, e in zip(r.alphas, r.errors):
            lines.append(",".join(_fmt(x) for x in (r.s_prime, a, e, r.iota_hat, r.iota_predicted, r.residual)))
    path.write_text("\n".join(lines) + "\n")
    written.append(path)
    for r in results:
        svg = out / f"rate_{r.kernel}_sprime_{r.s_prime:g}.svg"
        pts = [(a, e) for a, e, inc in zip(r.alphas, r.errors, r.included or [True] * len(r.alphas))
               if inc and np.isfinite(e) and e > 0]
        svg.write_text(plotting.loglog_svg(
            pts, slope=r.iota_hat, guide_slope=r.iota_predicted,
            title=f"{r.kernel}: H^{r.s_prime:g} error vs alpha", xlabel="alpha", ylabel="error"))
        written.append(svg)
    return written


def _write_corollary(reports, out: Path) -> list[Path]:
    path = out / "corollary.csv"
    lines = ["kind,s_prime,alpha,error,driver,ratio,driver_slope,ratio_ceiling"]
    for r in reports:
        for a, e, d, q in zip(r.alphas, r.errors, r.drivers, r.ratios):
            lines.append(",".join([r.kind] + [_fmt(x) for x in (r.s_prime, a, e, d, q, r.driver_slope,
                                                                r.ratio_ceiling)]))
    path.write_text("\n".join(lines) + "\n")
    written = [path]
    for r in reports:
        pts = [(a, d) for a, d in zip(r.alphas, r.drivers) if np.isfinite(d) and d > 0]
        svg = out / f"driver_{r.kind}_sprime_{r.s_prime:g}.svg"
        svg.write_text(plotting.loglog_svg(pts, slope=r.driver_slope, guide_slope=2.0,
                                           title=f"{r.kind}: kernel driver in H^{r.s_prime:g}",
                                           xlabel="alpha", ylabel="driver"))
        written.append(svg)
    return written


def _write_structure(report: StructureReport, out: Path) -> list[Path]:
    written = []
    samples = [smp for a in report.alphas for smp in report.samples[a]]
    path = out / "structure.csv"
    write_structure_csv(samples, path)
    written.append(path)
    fits = [f for f in report.fits.values() if f is not None]
    if report.joint_fit is not None:
        fits.append(report.joint_fit)
    path = out / "structure_fits.csv"
    write_fit_csv(fits, path)
    written.append(path)
    for a in report.alphas:
        fit = report.fits[a]
        if fit is None:
            continue
        pts = [(smp.y_norm, smp.s2) for smp in report.samples[a] if not smp.flagged and smp.s2 > 0]
        svg = out / f"structure_alpha_{a:g}.svg"
        svg.write_text(plotting.loglog_svg(pts, slope=2 * fit.gamma_hat, guide_slope=2.0,
                                           title=f"S2 at alpha={a:g}", xlabel="|y|", ylabel="S2"))
        written.append(svg)
    return written


def emit_report(results, out_dir) -> list[Path]:
    """Write CSV tables and log-log SVG plots; output is a pure function of ``results``."""
    results = list(results)
    if not results:
        raise ValueError("no results to report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    rates = [r for r in results if isinstance(r, RateFitResult)]
    coros = [r for r in results if isinstance(r, CorollaryReport)]
    structs = [r for r in results if isinstance(r, StructureReport)]
    written = []
    if rates:
        written += _write_rates(rates, out)
    if coros:
        written += _write_corollary(coros, out)
    for rep in structs:
        written += _write_structure(rep, out)
    return written


def save_results(results, path) -> None:
    """Serialise results as JSON so ``report`` can regenerate tables later."""
    payload = []
    for r in results:
        tag = type(r).__name__
        payload.append({"type": tag, "data": r.to_dict()})
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True, default=float))


def load_results(path) -> list:
    from .analysis import ScalingFit

    out = []
    for item in json.loads(Path(path).read_text()):
        data = item["data"]
        if item["type"] == "RateFitResult":
            out.append(RateFitResult(**data))
        elif item["type"] == "CorollaryReport":
            out.append(CorollaryReport(**data))
        elif item["type"] == "StructureReport":
            alphas = [float(a) for a in data["alphas"]]
            samples = {}
            for a in alphas:
                samples[a] = [StructureFunctionSample(np.array(s["y"]), s["s2"], _box_from(s["K"]),
                                                      s["t_span"], s["flagged"])
                              for s in data["samples"][str(a)]]
            fits = {a: (None if data["fits"][str(a)] is None else ScalingFit(**data["fits"][str(a)]))
                    for a in alphas}
            joint = None if data["joint_fit"] is None else ScalingFit(**data["joint_fit"])
            out.append(StructureReport(alphas, samples, fits, joint, data["sup_ratio"],
                                       {float(k): v for k, v in data["surrogate"].items()},
                                       data["surrogate_C"], data["surrogate_spread"], data["flags"]))
    return out


def _box_from(descriptor: str) -> SubBox:
    if descriptor == "torus":
        return SubBox((), (), periodic=True)
    lows, highs = [], []
    for part in descriptor.split("x"):
        lo, hi = part.strip("[]").split(",")
        lows.append(float(lo))
        highs.append(float(hi))
    return SubBox(tuple(lows), tuple(highs))
