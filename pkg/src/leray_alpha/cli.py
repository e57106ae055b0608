"""Command line entry point.

Every subcommand reads an INI-style config (see ``configs/example.ini``) and
writes CSV/SVG output; the exit status is 0 iff every enabled check passed.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .analysis import SubBox, frequency_cutoff
from .dynamics import (
    BlowUpError,
    DtPolicy,
    InitialCondition,
    SolverConfig,
    make_initial_condition,
    simulate,
    write_diagnostics_csv,
)
from .experiments import (
    ExperimentConfig,
    emit_report,
    load_results,
    run_corollary_experiment,
    run_rate_experiment,
    run_structure_experiment,
    save_results,
)
from .kernels import KernelSpec, certify_kernel, write_certificate_csv
from .littlewood_paley import write_blocks_csv
from .spectral_core import load_checkpoint, make_grid

log = logging.getLogger("leray_alpha")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def read_config(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not cp.read(path):
        raise FileNotFoundError(f"cannot read config {path}")
    return cp


def solver_config(cp: configparser.ConfigParser) -> SolverConfig:
    g = cp["grid"] if cp.has_section("grid") else {}
    grid = make_grid(int(g.get("dim", 2)), int(g.get("n", 64)), float(g.get("length", 2 * np.pi)))
    k = cp["kernel"] if cp.has_section("kernel") else {}
    kernel = KernelSpec(k.get("kind", "identity"), float(k.get("alpha", 1.0)))
    t = cp["time"] if cp.has_section("time") else {}
    policy = DtPolicy(t.get("dt_policy", "cfl"), float(t.get("dt_value", 0.5)))
    i = cp["initial_condition"] if cp.has_section("initial_condition") else {}
    target = i.get("target_norm", "1.0")
    ic = InitialCondition(
        kind=i.get("kind", "random_band_limited"),
        band=int(i.get("band", 4)),
        target_norm=None if target.strip().lower() == "none" else float(target),
        seed=int(i.get("seed", 0)),
        s_norm=float(i.get("s_norm", 0.0)),
        spectral_slope=float(i.get("spectral_slope", 0.0)),
    )
    d = cp["diagnostics"] if cp.has_section("diagnostics") else {}
    o = cp["output"] if cp.has_section("output") else {}
    ckpt = None
    if o.get("checkpoints", "no").lower() in ("1", "yes", "true", "on"):
        ckpt = str(Path(o.get("dir", "out")) / "checkpoints")  # re-rooted under --out by simulate
    return SolverConfig(
        grid=grid,
        kernel=kernel,
        dt_policy=policy,
        t_end=float(t.get("t_end", 1.0)),
        ic=ic,
        record_every=int(t.get("record_every", 1)),
        diag_s=_floats(d.get("hs_s", "0 1")),
        blowup_factor=float(t.get("blowup_factor", 50.0)),
        checkpoint_dir=ckpt,
    )


def experiment_config(cp: configparser.ConfigParser) -> ExperimentConfig:
    base = solver_config(cp)
    e = cp["experiment"] if cp.has_section("experiment") else {}
    kinds = tuple(e.get("kernel_kinds", "helmholtz").replace(",", " ").split())
    workers = e.get("workers")
    return ExperimentConfig(
        base=base,
        alpha_list=_floats(e.get("alpha_list", "0.2 0.1 0.05 0.025")),
        s=float(e.get("s", 4.0)),
        s_prime_list=_floats(e.get("s_prime_list", "0 2 3")),
        t_eval=float(e.get("t_eval", base.t_end)),
        kernel_kinds=kinds,
        same_ic_for_all=e.get("same_ic_for_all", "yes").lower() in ("1", "yes", "true", "on"),
        ic_perturbation=float(e.get("ic_perturbation", 0.0)),
        floor_factor=float(e.get("floor_factor", 10.0)),
        slope_tol=float(e.get("slope_tol", 0.4)),
        ratio_spread_max=float(e.get("ratio_spread_max", 10.0)),
        workers=None if workers is None else int(workers),
    )


def _out_dir(cp, override=None) -> Path:
    if override:
        out = Path(override)
    else:
        out = Path(cp.get("output", "dir", fallback="out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _field(cp, args):
    if getattr(args, "checkpoint", None):
        return load_checkpoint(args.checkpoint)
    cfg = solver_config(cp)
    return make_initial_condition(cfg.ic, cfg.grid)


# -- subcommands ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    cp = read_config(args.config)
    cfg = solver_config(cp)
    out = _out_dir(cp, args.out)
    if cfg.checkpoint_dir is not None:
        cfg = replace(cfg, checkpoint_dir=str(out / "checkpoints"))
    try:
        traj = simulate(cfg, raise_on_failure=False)
    except BlowUpError as exc:  # pragma: no cover - raise_on_failure=False returns instead
        log.error("%s", exc)
        return 1
    write_diagnostics_csv(traj.diagnostics, out / "diagnostics.csv")
    if not traj.completed:
        log.error("run aborted: %s", traj.failure)
        return 1
    e = [d.l2_energy for d in traj.diagnostics]
    drift = max(abs(x - e[0]) for x in e) / e[0] if e[0] else 0.0
    log.info("t=%g reached, relative energy drift %.3e", traj.times[-1], drift)
    return 0


def cmd_mollify(args) -> int:
    cp = read_config(args.config)
    out = _out_dir(cp, args.out)
    v0 = _field(cp, args)
    m = cp["mollify"] if cp.has_section("mollify") else {}
    deltas = _floats(m.get("deltas", "1 0.5 0.25 0.125"))
    s = float(m.get("s", 3.0))
    l_list = _floats(m.get("l_list", "0 1 2"))
    ok = True
    with open(out / "mollify.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["delta", "estimate", "lhs", "rhs", "holds"])
        for d in deltas:
            res = frequency_cutoff(v0, d, s, l_list, check=False)
            rows = dict(res.norm_budget)
            rows["smoothing_s+1_sharp"] = res.sharp_smoothing
            for name, (lhs, rhs) in rows.items():
                holds = lhs <= rhs * (1 + 1e-12)
                writer.writerow([repr(float(d)), name, repr(float(lhs)), repr(float(rhs)), int(holds)])
            ok &= res.holds_sharp
    return 0 if ok else 1


def cmd_structure(args) -> int:
    cp = read_config(args.config)
    cfg = experiment_config(cp)
    out = _out_dir(cp, args.out)
    st = cp["structure"] if cp.has_section("structure") else {}
    grid = cfg.base.grid
    mags = _floats(st.get("y_magnitudes", " ".join(str(grid.length / m) for m in (64, 48, 32, 24, 16, 12, 8))))
    direction = np.array(_floats(st.get("y_direction", " ".join(["1"] + ["0"] * (grid.dim - 1)))))
    direction = direction / np.linalg.norm(direction)
    if st.get("box", "torus").strip() == "torus":
        K = SubBox.full(grid)
    else:
        K = SubBox.centered(grid, float(st.get("box_margin")))
    report = run_structure_experiment(cfg, [m * direction for m in mags], K,
                                      record_every=int(st.get("record_every", 1)))
    save_results([report], out / "results.json")
    emit_report([report], out)
    max_spread = st.get("max_surrogate_spread")
    ok = report.joint_fit is not None
    if max_spread is not None:
        ok &= report.surrogate_spread <= float(max_spread)
    return 0 if ok else 1


def cmd_converge(args) -> int:
    cp = read_config(args.config)
    cfg = experiment_config(cp)
    out = _out_dir(cp, args.out)
    results = run_rate_experiment(cfg)
    save_results(results, out / "results.json")
    emit_report(results, out)
    for r in results:
        log.info("s'=%g iota_hat=%.3f predicted=%g passed=%s %s", r.s_prime, r.iota_hat,
                 r.iota_predicted, r.passed, "; ".join(r.flags))
    return 0 if all(r.passed for r in results) else 1


def cmd_corollary(args) -> int:
    cp = read_config(args.config)
    cfg = experiment_config(cp)
    out = _out_dir(cp, args.out)
    reports = run_corollary_experiment(cfg)
    save_results(reports, out / "results.json")
    emit_report(reports, out)
    return 0 if all(r.bounded for r in reports) else 1


def cmd_report(args) -> int:
    results = load_results(Path(args.in_dir) / "results.json")
    emit_report(results, args.out)
    return 0


def cmd_lp_analyze(args) -> int:
    cp = read_config(args.config)
    out = _out_dir(cp, args.out)
    f = _field(cp, args)
    sigma = args.sigma if args.sigma is not None else cp.getfloat("lp", "sigma", fallback=0.0)
    write_blocks_csv(f, sigma, out / "lp_blocks.csv")
    return 0


def cmd_certify(args) -> int:
    cp = read_config(args.config)
    out = _out_dir(cp, args.out)
    cfg = solver_config(cp)
    c = cp["certify"] if cp.has_section("certify") else {}
    nprobe = int(c.get("probes", 10))
    probes = [make_initial_condition(InitialCondition(band=cfg.ic.band, target_norm=1.0, seed=i), cfg.grid)
              for i in range(nprobe)]
    cert = certify_kernel(cfg.kernel, probes, _floats(c.get("l_list", "0 1 2 3")),
                          _floats(c.get("alpha_seq", "1 0.5 0.25 0.125")), s=float(c.get("s", 2.0)))
    write_certificate_csv(cert, out / f"certificate_{cfg.kernel.kind.value}.csv")
    return 0 if cert.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leray-alpha", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, config=True, checkpoint=False):
        p = sub.add_parser(name, help=help_)
        if config:
            p.add_argument("--config", required=True)
            p.add_argument("--out", help="output directory (overrides [output] dir)")
        if checkpoint:
            p.add_argument("--checkpoint", help="read the field from a binary checkpoint")
        p.set_defaults(func=func)
        return p

    add("simulate", cmd_simulate, "run one trajectory, write diagnostics.csv")
    add("mollify", cmd_mollify, "frequency-cutoff norm budget", checkpoint=True)
    add("structure", cmd_structure, "structure-function campaign over alpha")
    add("converge", cmd_converge, "convergence-rate experiment")
    add("corollary", cmd_corollary, "kernel-driver experiment")
    lp = add("lp-analyze", cmd_lp_analyze, "Littlewood-Paley block energies", checkpoint=True)
    lp.add_argument("--sigma", type=float)
    add("certify", cmd_certify, "kernel certificate CSV")
    rep = sub.add_parser("report", help="regenerate CSV/SVG from a results directory")
    rep.add_argument("--in", dest="in_dir", required=True)
    rep.add_argument("--out", required=True)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return int(args.func(args))
    except (ValueError, KeyError, OSError, configparser.Error) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
