import numpy as np
import pytest

from leray_alpha.dynamics import (
    BlowUpError,
    CFLViolation,
    DtPolicy,
    ICKind,
    InitialCondition,
    SolverConfig,
    cfl_dt,
    make_initial_condition,
    pressure,
    random_band_limited,
    rhs_euler,
    rhs_leray_alpha,
    simulate,
    step,
    taylor_green,
    write_diagnostics_csv,
)
from leray_alpha.kernels import IDENTITY, KernelKind, KernelSpec, apply_kernel, helmholtz
from leray_alpha.spectral_core import (
    SpectralField,
    divergence_residual,
    load_checkpoint,
    make_grid,
    sobolev_norm,
)

from oracles import convolution_advection, project_modes, sparse_modes


def oracle_rhs(v, kernel):
    n = v.grid.n
    u = apply_kernel(kernel, v)
    adv = convolution_advection(sparse_modes(np.asarray(u.coeffs), n), sparse_modes(np.asarray(v.coeffs), n))
    return {xi: -vec for xi, vec in project_modes(adv).items()}


def assert_matches_oracle(rhs, oracle, atol):
    n = rhs.grid.n
    dense = np.zeros_like(rhs.coeffs)
    for xi, vec in oracle.items():
        dense[(slice(None),) + tuple(i % n for i in xi)] += vec
    np.testing.assert_allclose(rhs.coeffs, dense, atol=atol)


class TestInitialConditions:
    def test_random_field_properties(self):
        g = make_grid(2, 32)
        ic = InitialCondition(band=4, target_norm=2.5, seed=3, s_norm=2.0)
        v = make_initial_condition(ic, g)
        assert sobolev_norm(v, 2.0) == pytest.approx(2.5, rel=1e-10)
        assert divergence_residual(v) < 1e-13
        assert v.hermitian_defect() < 1e-15
        assert np.all(v.coeffs[:, 0, 0] == 0)
        assert np.all(v.coeffs[:, g.kmag > 4 + 1e-12] == 0)

    def test_deterministic_under_seed(self):
        g = make_grid(2, 16)
        a = make_initial_condition(InitialCondition(seed=5), g)
        b = make_initial_condition(InitialCondition(seed=5), g)
        c = make_initial_condition(InitialCondition(seed=6), g)
        np.testing.assert_array_equal(a.coeffs, b.coeffs)
        assert not np.allclose(a.coeffs, c.coeffs)

    def test_band_beyond_dealias_rejected(self):
        with pytest.raises(ValueError):
            random_band_limited(make_grid(2, 16), 6, 0)

    def test_taylor_green_natural_amplitude(self):
        g = make_grid(2, 16)
        v = make_initial_condition(InitialCondition(ICKind.TAYLOR_GREEN, target_norm=None), g)
        # four modes (+-1, +-1), each with |coefficient|^2 = 1/8
        assert sobolev_norm(v, 0.0) == pytest.approx(np.sqrt(0.5), rel=1e-14)
        assert divergence_residual(v) < 1e-15

    def test_spectral_slope(self):
        g = make_grid(2, 64)
        flat = random_band_limited(g, 20, 1)
        steep = random_band_limited(g, 20, 1, spectral_slope=2.0)
        high = g.kmag > 10
        ratio_flat = np.sum(np.abs(flat.coeffs[:, high]) ** 2) / np.sum(np.abs(flat.coeffs) ** 2)
        ratio_steep = np.sum(np.abs(steep.coeffs[:, high]) ** 2) / np.sum(np.abs(steep.coeffs) ** 2)
        assert ratio_steep < 0.2 * ratio_flat


class TestRHS:
    @pytest.mark.parametrize("alpha", [1.0, 0.3, 0.05])
    def test_taylor_green_steady_leray(self, alpha):
        g = make_grid(2, 16)
        v = taylor_green(g)
        rhs = rhs_leray_alpha(v, helmholtz(alpha))
        assert np.max(np.abs(rhs.coeffs)) < 1e-12
        assert_matches_oracle(rhs, oracle_rhs(v, helmholtz(alpha)), 1e-12)

    def test_taylor_green_steady_euler(self):
        g = make_grid(2, 32)
        v = taylor_green(g)
        assert np.max(np.abs(rhs_euler(v).coeffs)) < 1e-12
        assert_matches_oracle(rhs_euler(v), oracle_rhs(v, IDENTITY), 1e-12)

    def test_taylor_green_advection_is_gradient(self):
        g = make_grid(2, 16)
        v = taylor_green(g)
        adv = convolution_advection(sparse_modes(np.asarray(v.coeffs), 16), sparse_modes(np.asarray(v.coeffs), 16))
        assert any(np.max(np.abs(vec)) > 0.1 for vec in adv.values())
        assert all(np.max(np.abs(vec)) < 1e-14 for vec in project_modes(adv).values())

    def test_zero_field(self, grid2):
        assert not rhs_euler(SpectralField.zeros(grid2)).coeffs.any()
        assert not rhs_leray_alpha(SpectralField.zeros(grid2), helmholtz(0.1)).coeffs.any()

    def test_identity_kernel_equals_euler(self, grid2):
        v = random_band_limited(grid2, 4, 2)
        np.testing.assert_array_equal(rhs_leray_alpha(v, IDENTITY).coeffs, rhs_euler(v).coeffs)

    def test_shear_mode(self, grid2):
        coeffs = np.zeros((2,) + grid2.shape, complex)
        coeffs[1, 1, 0] = 1.0
        coeffs[1, -1, 0] = 1.0
        v = SpectralField(grid2, coeffs)
        assert np.max(np.abs(rhs_euler(v).coeffs)) < 1e-15

    @pytest.mark.parametrize("kernel", [IDENTITY, helmholtz(0.4), KernelSpec(KernelKind.GAUSSIAN, 0.3)])
    @pytest.mark.parametrize("seed", range(3))
    def test_random_field_against_convolution(self, kernel, seed):
        g = make_grid(2, 16)
        v = random_band_limited(g, 2, seed)
        assert_matches_oracle(rhs_leray_alpha(v, kernel), oracle_rhs(v, kernel), 1e-13)

    def test_3d_against_convolution(self, grid3):
        v = random_band_limited(grid3, 1, 4)
        assert_matches_oracle(rhs_leray_alpha(v, helmholtz(0.5)), oracle_rhs(v, helmholtz(0.5)), 1e-13)

    def test_output_divergence_free(self, grid2):
        v = random_band_limited(grid2, 5, 7)
        assert divergence_residual(rhs_leray_alpha(v, helmholtz(0.2))) < 1e-12

    def test_rejects_compressible_input(self, grid2):
        v = SpectralField.single_mode(grid2, (1, 0), (1.0, 0.0))
        with pytest.raises(ValueError):
            rhs_euler(v)

    @pytest.mark.parametrize("kernel", [IDENTITY, helmholtz(0.2)])
    def test_energy_skew_symmetry(self, kernel):
        g = make_grid(2, 32)
        v = random_band_limited(g, 10, 1)
        rhs = rhs_leray_alpha(v, kernel)
        power = np.real(np.sum(rhs.coeffs * np.conj(v.coeffs)))
        assert abs(power) < 1e-13 * sobolev_norm(rhs, 0) * sobolev_norm(v, 0)

    def test_pressure_recovers_gradient_part(self):
        g = make_grid(2, 16)
        v = taylor_green(g)
        p = pressure(v)
        # Taylor-Green: p = (cos 2x + cos 2y) / 4
        assert p[2, 0] == pytest.approx(0.125, abs=1e-14)
        assert p[0, 2] == pytest.approx(0.125, abs=1e-14)
        mask = np.ones(g.shape, bool)
        mask[[2, -2, 0, 0], [0, 0, 2, -2]] = False
        assert np.max(np.abs(p[mask])) < 1e-14


class TestStep:
    def test_taylor_green_unchanged(self):
        g = make_grid(2, 32)
        v = taylor_green(g)
        dt = cfl_dt(v, IDENTITY, 0.5)
        w = step(v, dt, helmholtz(0.3), cfl=0.5)
        assert np.max(np.abs(w.coeffs - v.coeffs)) < 1e-10

    def test_zero_dt(self, grid2):
        v = random_band_limited(grid2, 3, 0)
        assert step(v, 0.0, IDENTITY) is v

    def test_energy_one_step(self):
        g = make_grid(2, 64)
        v = random_band_limited(g, 8, 3)
        w = step(v, 1e-3, helmholtz(0.1))
        e0, e1 = sobolev_norm(v, 0) ** 2, sobolev_norm(w, 0) ** 2
        assert abs(e1 - e0) / e0 <= 1e-8
        assert divergence_residual(w) < 1e-13
        assert w.hermitian_defect() < 1e-13

    def test_cfl_violation(self, grid2):
        v = random_band_limited(grid2, 3, 0)
        with pytest.raises(CFLViolation):
            step(v, 10 * cfl_dt(v, IDENTITY, 0.5), IDENTITY, cfl=0.5)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_nan_detection(self, grid2):
        v = random_band_limited(grid2, 3, 0)
        with pytest.raises(BlowUpError):
            step(v * 1e200, 1.0, IDENTITY)


class TestSimulate:
    def test_taylor_green_to_one(self):
        g = make_grid(2, 32)
        cfg = SolverConfig(g, helmholtz(0.5), DtPolicy("cfl", 0.5), 1.0,
                           InitialCondition(ICKind.TAYLOR_GREEN, target_norm=None), record_every=5)
        traj = simulate(cfg)
        v0, v1 = traj.snapshots[0], traj.final
        assert traj.times[-1] == 1.0
        assert sobolev_norm(v1 - v0, 0) / sobolev_norm(v0, 0) < 1e-8

    def test_t_end_zero(self, grid2):
        traj = simulate(SolverConfig(grid2, t_end=0.0))
        assert traj.times == [0.0]
        assert len(traj.snapshots) == 1

    def test_fixed_dt_lands_on_t_end(self, grid2):
        cfg = SolverConfig(grid2, dt_policy=DtPolicy("fixed", 0.03), t_end=0.1, ic=InitialCondition(band=3))
        traj = simulate(cfg)
        assert traj.times[-1] == pytest.approx(0.1, abs=1e-15)
        assert len(traj.times) == 5  # 0 plus 4 steps of 0.025

    def test_record_every(self, grid2):
        cfg = SolverConfig(grid2, dt_policy=DtPolicy("fixed", 0.01), t_end=0.1, record_every=3,
                           ic=InitialCondition(band=3))
        traj = simulate(cfg)
        assert traj.times[0] == 0.0
        assert np.all(np.diff(traj.times) > 0)
        assert len(traj.times) == 1 + 3 + 1

    def test_blowup_threshold(self, grid2):
        cfg = SolverConfig(grid2, dt_policy=DtPolicy("fixed", 0.01), t_end=0.5, blowup_factor=1.0 + 1e-12,
                           ic=InitialCondition(band=3, s_norm=3.0, target_norm=5.0))
        with pytest.raises(BlowUpError):
            simulate(cfg)
        traj = simulate(cfg, raise_on_failure=False)
        assert not traj.completed
        assert "exceeds" in traj.failure

    def test_checkpoints_and_csv(self, tmp_path, grid2):
        cfg = SolverConfig(grid2, dt_policy=DtPolicy("fixed", 0.05), t_end=0.1, diag_s=(0.0, 2.0),
                           ic=InitialCondition(band=3), checkpoint_dir=str(tmp_path / "ck"))
        traj = simulate(cfg)
        files = sorted((tmp_path / "ck").iterdir())
        assert len(files) == 3
        np.testing.assert_array_equal(load_checkpoint(files[-1]).coeffs, traj.final.coeffs)
        write_diagnostics_csv(traj.diagnostics, tmp_path / "d.csv")
        header = (tmp_path / "d.csv").read_text().splitlines()[0]
        assert header == "t,l2_energy,hs_norm_0,hs_norm_2,max_velocity"

    def test_dt_policy_validation(self):
        with pytest.raises(ValueError):
            DtPolicy("cfl", 1.5)
        with pytest.raises(ValueError):
            DtPolicy("fixed", 0.0)
        with pytest.raises(ValueError):
            DtPolicy("adaptive", 0.1)

    @pytest.mark.parametrize("kernel", [IDENTITY, helmholtz(0.1)])
    def test_energy_and_divergence_along_trajectory(self, kernel):
        g = make_grid(2, 64)
        cfg = SolverConfig(g, kernel, DtPolicy("cfl", 0.5), 0.5, InitialCondition(band=4, seed=2))
        traj = simulate(cfg)
        e = np.array([d.l2_energy for d in traj.diagnostics])
        assert np.max(np.abs(e - e[0])) / e[0] <= 1e-6
        assert max(d.divergence for d in traj.diagnostics) <= 1e-10
        assert max(s.hermitian_defect() for s in traj.snapshots) < 1e-12

    def test_mean_mode_preserved(self):
        g = make_grid(2, 32)
        traj = simulate(SolverConfig(g, helmholtz(0.2), t_end=0.3, ic=InitialCondition(band=5, seed=8)))
        assert max(np.abs(s.coeffs[:, 0, 0]).max() for s in traj.snapshots) < 1e-15

    def test_alpha_ordering(self):
        g = make_grid(2, 64)
        ic = InitialCondition(band=4, seed=1, s_norm=4.0, target_norm=20.0)
        v0 = make_initial_condition(ic, g)
        dt = cfl_dt(v0, IDENTITY, 0.5)
        base = dict(dt_policy=DtPolicy("fixed", dt), t_end=0.5, ic=ic)
        ref = simulate(SolverConfig(g, IDENTITY, **base)).final
        errs = [sobolev_norm(simulate(SolverConfig(g, helmholtz(a), **base)).final - ref, 0)
                for a in (0.2, 0.1, 0.05)]
        assert errs[0] > errs[1] > errs[2]

    def test_3d_runs(self):
        g = make_grid(3, 16)
        drift = []
        for cfl in (0.5, 0.25):
            cfg = SolverConfig(g, helmholtz(0.2), DtPolicy("cfl", cfl), 0.2, InitialCondition(band=3))
            traj = simulate(cfg)
            e = [d.l2_energy for d in traj.diagnostics]
            drift.append(abs(e[-1] - e[0]) / e[0])
            assert traj.diagnostics[-1].divergence < 1e-10
        # energy defect is pure time-stepping error: shrinks by well over 2^4 per halving
        assert drift[0] < 1e-6
        assert drift[1] < drift[0] / 16
