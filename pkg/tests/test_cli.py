import csv
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from leray_alpha.cli import experiment_config, main, read_config, solver_config
from leray_alpha.kernels import KernelKind
from leray_alpha.spectral_core import load_checkpoint

EXAMPLE = Path(__file__).resolve().parents[1] / "configs" / "example.ini"

SMALL = """
[grid]
dim = 2
n = 32
[kernel]
kind = helmholtz
alpha = 0.2
[time]
dt_policy = cfl
dt_value = 0.5
t_end = 0.2
record_every = 2
[initial_condition]
band = 3
seed = 1
s_norm = 4
target_norm = 8
[diagnostics]
hs_s = 0, 2
[output]
dir = {out}
checkpoints = {ckpt}
[experiment]
alpha_list = 0.2 0.1 0.05
t_eval = 0.2
kernel_kinds = helmholtz
[structure]
y_magnitudes = 0.3 0.45 0.6 0.8 1.0
box = {box}
box_margin = 1.2
[mollify]
deltas = 1 0.5
[certify]
probes = 3
l_list = 0 1
"""


def write_cfg(tmp_path, ckpt="no", box="torus"):
    path = tmp_path / "cfg.ini"
    path.write_text(SMALL.format(out=tmp_path / "default", ckpt=ckpt, box=box))
    return path


def rows(path):
    return list(csv.reader(Path(path).open()))


def test_example_config_parses():
    cp = read_config(EXAMPLE)
    cfg = experiment_config(cp)
    assert cfg.base.grid.n == 128
    assert cfg.alpha_list == (0.2, 0.1, 0.05, 0.025)
    assert cfg.base.ic.target_norm == 20.0
    assert cfg.base.kernel.kind is KernelKind.HELMHOLTZ
    assert cfg.base.diag_s == (0.0, 1.0, 4.0)


def test_simulate_with_checkpoints(tmp_path):
    cfg = write_cfg(tmp_path, ckpt="yes")
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    table = rows(out / "diagnostics.csv")
    # the blow-up guard norm (s_norm = 4) is always tracked
    assert table[0] == ["t", "l2_energy", "hs_norm_0", "hs_norm_2", "hs_norm_4", "max_velocity"]
    assert float(table[-1][0]) == pytest.approx(0.2)
    ckpts = sorted((out / "checkpoints").iterdir())
    assert len(ckpts) == len(table) - 1
    assert load_checkpoint(ckpts[-1]).grid.n == 32
    assert not (tmp_path / "default").exists()


def test_output_dir_from_config(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["simulate", "--config", str(cfg)]) == 0
    assert (tmp_path / "default" / "diagnostics.csv").exists()


def test_lp_and_mollify_from_checkpoint(tmp_path):
    cfg = write_cfg(tmp_path, ckpt="yes")
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "sim")])
    ck = sorted((tmp_path / "sim" / "checkpoints").iterdir())[-1]
    assert main(["lp-analyze", "--config", str(cfg), "--out", str(tmp_path / "lp"),
                 "--checkpoint", str(ck), "--sigma", "1"]) == 0
    table = rows(tmp_path / "lp" / "lp_blocks.csv")
    assert table[0] == ["j", "block_l2", "weighted_block_l2"]
    assert main(["mollify", "--config", str(cfg), "--out", str(tmp_path / "m"), "--checkpoint", str(ck)]) == 0
    table = rows(tmp_path / "m" / "mollify.csv")
    assert table[0] == ["delta", "estimate", "lhs", "rhs", "holds"]
    assert {r[1] for r in table[1:]} >= {"stability_s", "smoothing_s+1", "smoothing_s+1_sharp", "approx_l=0"}


def test_certify(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["certify", "--config", str(cfg), "--out", str(tmp_path / "c")]) == 0
    table = rows(tmp_path / "c" / "certificate_helmholtz.csv")
    assert table[0] == ["kind", "alpha", "l", "bound_constant", "approx_error_s"]


def test_converge_and_report(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "conv"
    assert main(["converge", "--config", str(cfg), "--out", str(out)]) == 0
    assert rows(out / "rates.csv")[0] == ["s_prime", "alpha", "error", "iota_hat", "iota_predicted", "residual"]
    again = tmp_path / "again"
    assert main(["report", "--in", str(out), "--out", str(again)]) == 0
    for name in ("rates.csv", "rate_helmholtz_sprime_0.svg", "rate_helmholtz_sprime_3.svg"):
        assert (out / name).read_bytes() == (again / name).read_bytes()


def test_corollary(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "cor"
    assert main(["corollary", "--config", str(cfg), "--out", str(out)]) == 0
    assert rows(out / "corollary.csv")[0][:3] == ["kind", "s_prime", "alpha"]


@pytest.mark.parametrize("box", ["torus", "centered"])
def test_structure(tmp_path, box):
    cfg = write_cfg(tmp_path, box=box)
    out = tmp_path / "st"
    assert main(["structure", "--config", str(cfg), "--out", str(out)]) == 0
    table = rows(out / "structure.csv")
    assert table[0] == ["|y|", "yx", "yy", "s2", "t_span", "K_descriptor"]
    assert len(table) == 1 + 3 * 5
    assert (table[1][-1] == "torus") == (box == "torus")
    assert (out / "structure_fits.csv").exists()


def test_bad_config_exit_code(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[grid]\nn = 7\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.ini")]) == 2


def test_failed_check_exit_code(tmp_path):
    cfg = write_cfg(tmp_path)
    text = cfg.read_text().replace("t_eval = 0.2", "t_eval = 0.2\nslope_tol = -5")
    cfg.write_text(text)
    assert main(["converge", "--config", str(cfg), "--out", str(tmp_path / "c")]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "leray_alpha", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("simulate", "mollify", "structure", "converge", "corollary", "lp-analyze", "certify", "report"):
        assert cmd in proc.stdout


def test_solver_config_taylor_green(tmp_path):
    cfg = tmp_path / "tg.ini"
    cfg.write_text("[initial_condition]\nkind = taylor_green\ntarget_norm = none\n[kernel]\nkind = identity\n")
    sc = solver_config(read_config(cfg))
    assert sc.ic.target_norm is None
    assert sc.kernel.is_identity
    assert np.isclose(sc.grid.length, 2 * np.pi)
