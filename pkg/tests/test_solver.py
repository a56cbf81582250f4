import math

import numpy as np
import pytest

import nlfisher as nl
from nlfisher import solver as sv


def tophat_params(mu=1.0):
    return sv.ModelParams(sv.NonlocalFisher(mu), nl.TopHat(1.0))


class TestGridField:
    def test_grid_geometry(self):
        g = sv.Grid(10.0, 64)
        assert g.dx == pytest.approx(20.0 / 64)
        assert g.x[0] == -10.0
        assert g.x[-1] == pytest.approx(10.0 - g.dx)

    def test_grid_validation(self):
        with pytest.raises(nl.ConfigError):
            sv.Grid(10.0, 15)
        with pytest.raises(nl.ConfigError):
            sv.Grid(10.0, 8)
        with pytest.raises(nl.ConfigError):
            sv.Grid(-1.0, 64)

    def test_field_rejects_nonfinite(self):
        g = sv.Grid(10.0, 64)
        bad = np.zeros(64)
        bad[3] = np.inf
        with pytest.raises(nl.ConfigError):
            sv.Field(g, bad)

    def test_mollified_step_range(self):
        g = sv.Grid(40.0, 256)
        f = sv.mollified_step(g)
        assert f.values[0] == pytest.approx(1.0, abs=1e-12)
        assert f.values[-1] == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.diff(f.values) <= 0)
        mid = slice(g.n_points // 4, 3 * g.n_points // 4)
        assert np.all(np.diff(f.values[mid]) < 0)


class TestModelParams:
    def test_local_mode_takes_no_kernel(self):
        with pytest.raises(nl.ConfigError):
            sv.ModelParams(sv.LocalFisher(1.0), nl.TopHat(1.0))
        sv.ModelParams(sv.LocalFisher(1.0))

    def test_nonlocal_needs_kernel(self):
        with pytest.raises(nl.ConfigError):
            sv.ModelParams(sv.NonlocalFisher(1.0))

    def test_parameter_ranges(self):
        with pytest.raises(nl.ConfigError):
            sv.NonlocalFisher(-1.0)
        with pytest.raises(nl.ConfigError):
            sv.NonlocalBistable(1.5)


class TestReactionTerm:
    def test_steady_state_one(self):
        p = tophat_params(mu=1.0)
        assert sv.reaction_term(1.0, 1.0, p) == 0.0

    def test_fisher_arithmetic(self):
        p = tophat_params(mu=2.0)
        assert sv.reaction_term(0.5, 0.25, p) == pytest.approx(0.75)

    def test_local_ignores_convolution(self):
        p = sv.ModelParams(sv.LocalFisher(2.0))
        assert sv.reaction_term(0.5, None, p) == pytest.approx(0.5)

    def test_bistable_zero_at_alpha(self):
        p = sv.ModelParams(sv.NonlocalBistable(0.3), nl.TopHat(1.0))
        assert sv.reaction_term(0.3, 0.9, p) == 0.0


class TestConvolve:
    def _grid(self, n=512, L=40.0):
        return sv.Grid(L, n)

    def test_constant_preserved(self):
        g = self._grid()
        tk = nl.TopHat(1.0).tabulate(g.dx, 1e-10)
        out = sv.convolve(sv.uniform_field(g, 1.0), tk, 1.0, 1.0)
        assert np.max(np.abs(out.values - 1.0)) < 1e-12

    def test_zero_preserved(self):
        g = self._grid()
        tk = nl.Gaussian(1.0).tabulate(g.dx, 1e-10)
        out = sv.convolve(sv.uniform_field(g, 0.0), tk, 0.0, 0.0)
        assert np.max(np.abs(out.values)) == 0.0

    def test_linear_profile_fixed_in_interior(self):
        # even kernel: first-moment cancellation leaves x unchanged; checked
        # against the direct-sum path away from the pad-affected zone
        g = self._grid()
        tk = nl.TopHat(1.0).tabulate(g.dx, 1e-10)
        f = sv.Field(g, g.x.copy())
        out = sv.convolve(f, tk, 0.0, 0.0, method="direct")
        m = tk.half_width
        inner = slice(m + 1, g.n_points - m - 1)
        assert np.max(np.abs(out.values[inner] - g.x[inner])) < 1e-10

    @pytest.mark.parametrize("n", [256, 1024, 4096])
    def test_fft_matches_direct_sum_on_random_fields(self, n):
        g = self._grid(n=n)
        rng = np.random.default_rng(42 + n)
        kernels = [nl.TopHat(1.0), nl.Gaussian(1.0), nl.Laplace(1.0),
                   nl.PowerTail(5.0)]
        for kernel in kernels:
            tol = 1e-6 if isinstance(kernel, nl.PowerTail) else 1e-10
            tk = kernel.tabulate(g.dx, tol)
            for _ in range(10):
                f = sv.Field(g, rng.uniform(0.0, 1.0, n))
                lp, rp = rng.uniform(0.0, 1.0, 2)
                d = sv.convolve(f, tk, lp, rp, method="direct")
                ff = sv.convolve(f, tk, lp, rp, method="fft")
                assert np.max(np.abs(d.values - ff.values)) < 1e-12

    def test_stencil_overrun(self):
        g = sv.Grid(5.0, 128)
        tk = nl.Laplace(1.0).tabulate(g.dx, 1e-10)  # radius ~ 23
        with pytest.raises(nl.StencilOverrun):
            sv.convolve(sv.uniform_field(g, 1.0), tk, 1.0, 1.0)

    def test_spacing_mismatch_rejected(self):
        g = self._grid()
        tk = nl.TopHat(1.0).tabulate(0.5 * g.dx, 1e-10)
        with pytest.raises(nl.ConfigError):
            sv.convolve(sv.uniform_field(g, 1.0), tk, 1.0, 1.0)


class TestSchemeResolution:
    def test_default_dt_is_diffusion_limited(self):
        g = sv.Grid(40.0, 512)
        p = tophat_params()
        cfg = sv.SimConfig(t_final=1.0)
        scheme = sv.resolve_scheme(g, p, cfg)
        assert scheme.mode == "centered"
        assert scheme.dt == pytest.approx(0.2 * g.dx ** 2)

    def test_oversized_dt_rejected(self):
        g = sv.Grid(40.0, 512)
        p = tophat_params()
        cfg = sv.SimConfig(t_final=1.0, dt=g.dx ** 2)
        with pytest.raises(nl.ConfigError):
            sv.resolve_scheme(g, p, cfg)

    def test_rapid_frame_switches_to_shift(self):
        g = sv.Grid(120.0, 2048)
        p = tophat_params(mu=100.0)
        cfg = sv.SimConfig(t_final=1.0, frame_speed=500.0)
        scheme = sv.resolve_scheme(g, p, cfg)
        assert scheme.mode == "shift"
        assert scheme.shift_cells >= 1
        assert scheme.dt == pytest.approx(scheme.shift_cells * g.dx / 500.0)

    def test_wave_tail_rate(self):
        assert sv.wave_tail_rate(2.0, 1.0) == pytest.approx(1.0)
        with pytest.raises(nl.ConfigError):
            sv.wave_tail_rate(1.0, 1.0)


class TestFixedPoints:
    def test_uniform_states_fixed_under_step(self):
        g = sv.Grid(40.0, 256)
        p = tophat_params()
        cfg1 = sv.SimConfig(t_final=1.0, left_pad=1.0, right_pad=1.0)
        out = sv.step(sv.uniform_field(g, 1.0), p, cfg1)
        assert np.max(np.abs(out.values - 1.0)) == 0.0
        cfg0 = sv.SimConfig(t_final=1.0, left_pad=0.0, right_pad=0.0)
        out = sv.step(sv.uniform_field(g, 0.0), p, cfg0)
        assert np.max(np.abs(out.values)) == 0.0

    def test_bistable_alpha_fixed(self):
        alpha = 0.3
        g = sv.Grid(40.0, 256)
        p = sv.ModelParams(sv.NonlocalBistable(alpha), nl.TopHat(1.0))
        cfg = sv.SimConfig(t_final=1.0, left_pad=alpha, right_pad=alpha)
        out = sv.step(sv.uniform_field(g, alpha), p, cfg)
        assert np.max(np.abs(out.values - alpha)) == 0.0

    def test_uniform_state_fixed_in_shift_mode(self):
        g = sv.Grid(120.0, 1024)
        p = tophat_params(mu=100.0)
        cfg = sv.SimConfig(t_final=0.01, frame_speed=600.0,
                           left_pad=1.0, right_pad=1.0)
        assert sv.resolve_scheme(g, p, cfg).mode == "shift"
        out = sv.step(sv.uniform_field(g, 1.0), p, cfg)
        # stencil renormalization leaves the uniform state fixed to rounding
        assert np.max(np.abs(out.values - 1.0)) < 1e-13


class TestEvolve:
    def test_steady_state_stops_immediately(self):
        g = sv.Grid(40.0, 256)
        p = tophat_params()
        cfg = sv.SimConfig(t_final=10.0, left_pad=1.0, right_pad=1.0,
                           steady_tol=1e-10, output_stride=1)
        traj = sv.evolve(sv.uniform_field(g, 1.0), p, cfg)
        assert traj.stop_reason == "steady_tol"
        assert traj.steps == 1

    def test_blowup_detected_with_step_index(self):
        g = sv.Grid(40.0, 256)
        p = tophat_params()
        cfg = sv.SimConfig(t_final=10.0, steady_tol=0.0)
        with pytest.raises(nl.BlowUp) as err:
            sv.evolve(sv.uniform_field(g, 50.0), p, cfg)
        assert err.value.step_index is not None
        assert err.value.trajectory is not None
        assert err.value.trajectory.stop_reason == "blowup"

    def test_front_positions_recorded(self):
        g = sv.Grid(40.0, 512)
        p = sv.ModelParams(sv.LocalFisher(1.0))
        cfg = sv.SimConfig(t_final=5.0, steady_tol=0.0, output_stride=50)
        traj = sv.evolve(sv.mollified_step(g, width=0.5), p, cfg)
        assert np.all(np.isfinite(traj.front_positions))
        assert traj.front_positions[-1] > traj.front_positions[0]

    def test_recentering_keeps_front_inside(self):
        g = sv.Grid(20.0, 512)
        p = sv.ModelParams(sv.LocalFisher(2.0))
        cfg = sv.SimConfig(t_final=12.0, steady_tol=0.0, output_stride=25,
                           recenter=True)
        traj = sv.evolve(sv.mollified_step(g, width=0.4), p, cfg)
        assert traj.shift_offset > 0
        # physical front position keeps advancing monotonically through shifts
        diffs = np.diff(traj.front_positions[2:])
        assert np.all(diffs > -1e-8)

    def test_positivity_preserved_at_stable_dt(self):
        g = sv.Grid(40.0, 512)
        cases = [
            (tophat_params(1.0), sv.SimConfig(t_final=5.0, steady_tol=0.0)),
            (sv.ModelParams(sv.NonlocalBistable(0.3), nl.TopHat(1.0)),
             sv.SimConfig(t_final=5.0, steady_tol=0.0, left_pad=1.0,
                          right_pad=0.0)),
        ]
        for params, cfg in cases:
            traj = sv.evolve(sv.mollified_step(g), params, cfg)
            assert traj.final.values.min() >= -1e-12

    def test_snapshots_recorded_at_interval(self):
        g = sv.Grid(40.0, 256)
        p = tophat_params()
        cfg = sv.SimConfig(t_final=1.0, steady_tol=0.0, snapshot_interval=0.25)
        traj = sv.evolve(sv.mollified_step(g), p, cfg)
        times = [t for t, _ in traj.snapshots]
        assert times[0] == 0.0
        assert times[-1] == pytest.approx(1.0, abs=1e-9)
        assert len(times) >= 5


class TestLinearizedDecay:
    def test_perturbation_decay_matches_dispersion(self):
        # modes around u == 1 decay at -k^2 - mu * phi_hat(k) (linear theory)
        kernel = nl.Gaussian(1.0)
        mu, k = 2.0, 2.0
        g = sv.Grid(20.0, 1024)
        p = sv.ModelParams(sv.NonlocalFisher(mu), kernel)
        eps = 1e-4
        u0 = sv.Field(g, 1.0 + eps * np.cos(k * g.x))
        cfg = sv.SimConfig(t_final=0.4, steady_tol=0.0, left_pad=1.0,
                           right_pad=1.0, output_stride=131072,
                           snapshot_interval=0.05)
        traj = sv.evolve(u0, p, cfg)
        quarter = slice(3 * g.n_points // 8, 5 * g.n_points // 8)
        ts, amps = [], []
        for t, u in traj.snapshots:
            ts.append(t)
            amps.append(np.max(np.abs(u[quarter] - 1.0)))
        rate = np.polyfit(ts, np.log(amps), 1)[0]
        lam = nl.dispersion_growth(kernel, mu, k)
        assert rate == pytest.approx(lam, rel=0.05)


class TestAccuracy:
    def test_second_order_self_convergence(self):
        # smooth bump over the rest state, fixed horizon and time step,
        # Richardson between three grids
        mu = 1.0
        p = sv.ModelParams(sv.LocalFisher(mu))
        L, T = 20.0, 0.5
        sols = {}
        for n in (256, 512, 1024):
            g = sv.Grid(L, n)
            u0 = sv.Field(g, 0.4 * np.exp(-0.25 * g.x ** 2))
            cfg = sv.SimConfig(t_final=T, steady_tol=0.0, left_pad=0.0,
                               right_pad=0.0, dt=0.2 * (2 * L / 1024) ** 2)
            sols[n] = sv.evolve(u0, p, cfg).final.values
        e1 = np.max(np.abs(sols[512][::2] - sols[256]))
        e2 = np.max(np.abs(sols[1024][::2] - sols[512]))
        order = math.log2(e1 / e2)
        assert 1.7 < order < 2.3

    def test_frame_consistency(self):
        # lab evolution shifted by c*t matches moving-frame evolution; the
        # mismatch shrinks at second order under refinement
        mu, c, T = 1.0, 1.0, 1.0
        L = 20.0
        errs = {}
        for n in (256, 512):
            g = sv.Grid(L, n)
            u0 = sv.Field(g, 0.4 * np.exp(-0.25 * g.x ** 2))
            dt = 0.1 * (2 * L / 512) ** 2
            lab = sv.evolve(u0, sv.ModelParams(sv.LocalFisher(mu)),
                            sv.SimConfig(t_final=T, steady_tol=0.0, dt=dt,
                                         left_pad=0.0, right_pad=0.0,
                                         recenter=False)).final.values
            mov = sv.evolve(u0, sv.ModelParams(sv.LocalFisher(mu)),
                            sv.SimConfig(t_final=T, steady_tol=0.0, dt=dt,
                                         frame_speed=c, left_pad=0.0,
                                         right_pad=0.0)).final.values
            shift_cells = int(round(c * T / g.dx))
            # moving-frame u(x) equals lab u(x + c t)
            inner = slice(n // 4, n // 2)
            errs[n] = np.max(np.abs(mov[inner] - lab[shift_cells:][inner]))
        assert errs[256] < 2e-2
        ratio = errs[256] / errs[512]
        assert 2.5 < ratio < 6.0


class TestSteadyResidual:
    def test_uniform_states_have_zero_residual(self):
        g = sv.Grid(40.0, 256)
        p = tophat_params()
        one = sv.uniform_field(g, 1.0)
        assert sv.steady_residual(one, 2.0, p, left_pad=1.0, right_pad=1.0) < 1e-12
        zero = sv.uniform_field(g, 0.0)
        assert sv.steady_residual(zero, 2.0, p, left_pad=0.0, right_pad=0.0) == 0.0

    def test_converged_profile_residual_drops_fourfold(self):
        # second-order spatial accuracy: the wave-equation defect of the
        # converged discrete travelling state scales like dx^2
        kernel = nl.TopHat(1.0)
        mu, c = 1.0, 2.3
        p = sv.ModelParams(sv.NonlocalFisher(mu), kernel)
        w = 1.0 / sv.wave_tail_rate(c, mu)
        res = {}
        for n in (512, 1024):
            g = sv.Grid(40.0, n)
            cfg = sv.SimConfig(frame_speed=c, t_final=40.0, steady_tol=0.0,
                               output_stride=10 ** 9)
            traj = sv.evolve(sv.mollified_step(g, width=w), p, cfg)
            res[n] = sv.steady_residual(traj.final, c, p)
        ratio = res[512] / res[1024]
        assert 2.8 < ratio < 5.5

    def test_invalid_derivative_order(self):
        g = sv.Grid(40.0, 256)
        with pytest.raises(nl.ConfigError):
            sv.steady_residual(sv.uniform_field(g, 1.0), 2.0, tophat_params(),
                               derivative_order=3)
