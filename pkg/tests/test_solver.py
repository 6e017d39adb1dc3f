import math

import numpy as np
import pytest
from scipy import stats

from adavar.objective import BoxDomain, Quadratic, Rastrigin, StochasticRastrigin
from adavar.sampler import derive_stream, uniform_in_box
from adavar.schedule import (ClassicalSchedule, PracticalSchedule, StepScalars,
                             TheoreticalSchedule)
from adavar.solver import (REGIME_HIGH, REGIME_LOW, REGIME_RESTART,
                           SolverConfig, read_trace_csv, reflect_into_box, run,
                           step_gradient_free, step_restart, step_two_stage,
                           write_trace_csv)
from conftest import FixedNormals, SquaredNorm


def _scalars(low, sigma=1.0, eta=1.0, cutoff=1.0):
    return StepScalars(eta=eta, sigma=sigma, cutoff=cutoff, low=low)


class TestStepRestart:
    def test_fixed_point_of_deterministic_part(self):
        f = Quadratic(np.array([1.0, 1.0]))
        box = BoxDomain.cube(-5, 5, 2)
        x = np.zeros(2)  # zero gradient
        x_new, regime = step_restart(f, box, x, 0.0, _scalars(low=True, sigma=0.0),
                                     derive_stream(1, 0))
        assert np.array_equal(x_new, x)
        assert regime == REGIME_LOW

    def test_newton_like_contraction(self):
        # f = |x|^2/2, eta = 1: one step maps any point to the origin
        f = Quadratic(np.array([1.0, 1.0]))
        box = BoxDomain.cube(-5, 5, 2)
        x_new, _ = step_restart(f, box, np.array([3.0, -2.0]), 6.5,
                                _scalars(low=True, sigma=0.0), derive_stream(1, 0))
        assert np.allclose(x_new, 0.0, atol=1e-15)

    def test_restart_branch_uniform(self):
        f = Quadratic(np.array([1.0, 1.0]))
        box = BoxDomain.cube(-20, 20, 2)
        rng = derive_stream(5, 0)
        n = 100_000
        landings = np.array([
            step_restart(f, box, np.zeros(2), 0.0, _scalars(low=False), rng)[0]
            for _ in range(n)
        ])
        se = 40.0 / math.sqrt(12.0) / math.sqrt(n)
        assert np.all(np.abs(landings.mean(axis=0)) < 3 * se)
        # chi-square uniformity over a 4x4 partition at significance 0.001
        counts, _, _ = np.histogram2d(landings[:, 0], landings[:, 1],
                                      bins=4, range=[[-20, 20], [-20, 20]])
        chi2 = ((counts - n / 16.0) ** 2 / (n / 16.0)).sum()
        assert chi2 < stats.chi2.ppf(0.999, df=15)


class TestStepTwoStage:
    def test_low_regime_displacement_covariance(self):
        f = Quadratic(np.array([1e-12, 1e-12]))  # effectively zero gradient
        box = BoxDomain.cube(-1e9, 1e9, 2)
        rng = derive_stream(6, 0)
        sigma = 0.7
        n = 100_000
        steps = np.array([
            step_two_stage(f, box, np.zeros(2), 0.0, _scalars(low=True, sigma=sigma),
                           rng, sigma_high=20.0)[0]
            for _ in range(n)
        ])
        cov = np.cov(steps.T)
        assert np.all(np.abs(np.diag(cov) / sigma**2 - 1.0) < 0.02)
        assert abs(cov[0, 1]) < 0.02 * sigma**2

    def test_high_noise_covers_quadrants(self):
        f = Rastrigin(c=0.05, dim=2)
        box = BoxDomain.cube(-20, 20, 2)
        rng = derive_stream(7, 0)
        x0 = np.array([10.0, 10.0])
        quadrants = set()
        for _ in range(10_000):
            x, regime, sigma = step_two_stage(f, box, x0, f.value(x0),
                                              _scalars(low=False, sigma=1.0), rng,
                                              sigma_high=20.0)
            assert regime == REGIME_HIGH and sigma == 20.0
            quadrants.add((x[0] > 0, x[1] > 0))
        assert len(quadrants) == 4

    def test_two_stage_collapses_when_sigmas_equal(self):
        # alpha -> 0 makes sigma_low constant; set sigma_high to the same value
        f = Rastrigin(c=0.05, dim=2)
        box = BoxDomain.cube(-20, 20, 2)
        sched = PracticalSchedule(sigma0=2.0, sigma_high=2.0, alpha=1e-12)
        cfg = SolverConfig(variant="two_stage", box=box, iterations=200,
                           objective=f, schedule=sched)
        trace = run(cfg, derive_stream(8, 0))
        assert np.all(trace.sigmas[1:] == pytest.approx(2.0, rel=1e-9))

    def test_reflection_keeps_iterates_inside(self):
        f = Rastrigin(c=0.05, dim=2)
        box = BoxDomain.cube(-20, 20, 2)
        sched = PracticalSchedule()
        cfg = SolverConfig(variant="two_stage", box=box, iterations=2000,
                           objective=f, schedule=sched, boundary="reflect")
        trace = run(cfg, derive_stream(9, 0))
        assert np.all(trace.positions >= -20.0) and np.all(trace.positions <= 20.0)


class TestReflection:
    def test_interior_point_unchanged(self):
        box = BoxDomain.cube(-1, 1, 2)
        x = np.array([0.3, -0.9])
        assert np.array_equal(reflect_into_box(x, box), x)

    def test_single_fold(self):
        box = BoxDomain.cube(0, 4, 1)
        assert reflect_into_box(np.array([4.5]), box)[0] == pytest.approx(3.5)
        assert reflect_into_box(np.array([-0.5]), box)[0] == pytest.approx(0.5)

    def test_many_folds(self):
        box = BoxDomain.cube(0, 1, 1)
        assert reflect_into_box(np.array([7.3]), box)[0] == pytest.approx(0.7)


class TestClassicalVariant:
    def test_zero_noise_is_pure_gradient_descent(self):
        h = np.array([0.5, 1.5])
        f = Quadratic(h)
        box = BoxDomain.cube(-50, 50, 2)
        sched = ClassicalSchedule(sigma0=0.0, decay="inverse_sqrt_n", eta=1.0)
        x0 = np.array([4.0, -3.0])
        cfg = SolverConfig(variant="classical", box=box, iterations=30,
                           objective=f, schedule=sched, initial=x0)
        trace = run(cfg, derive_stream(10, 0))
        # closed form X_n = (1 - eta h)^n X_0 componentwise
        for n in (1, 5, 17, 30):
            expected = (1.0 - h) ** n * x0
            assert np.allclose(trace.positions[n], expected, rtol=1e-12, atol=1e-12)
        ratio = max(abs(1.0 - h[0]), abs(1.0 - h[1]))
        norms = np.linalg.norm(trace.positions, axis=1)
        assert np.all(norms[1:] <= ratio * norms[:-1] + 1e-12)

    def test_sigma_schedule_recorded(self):
        f = Rastrigin(c=0.05, dim=2)
        box = BoxDomain.cube(-20, 20, 2)
        sched = ClassicalSchedule(sigma0=1.0, decay="inverse_sqrt_n")
        cfg = SolverConfig(variant="classical", box=box, iterations=100,
                           objective=f, schedule=sched)
        trace = run(cfg, derive_stream(11, 0))
        assert trace.sigmas[100] == pytest.approx(1.0 / math.sqrt(99))
        assert np.all(trace.regimes[1:] == REGIME_LOW)


class TestBatchVariant:
    def _config(self, rule, noise_std=math.sqrt(0.5), iterations=50):
        f = StochasticRastrigin(Rastrigin(c=0.05, dim=2), noise_std=noise_std)
        box = BoxDomain.cube(-20, 20, 2)
        sched = PracticalSchedule()
        return SolverConfig(variant="batch", box=box, iterations=iterations,
                            objective=f, schedule=sched, batch_rule=rule)

    def test_proposed_rule_sizes(self):
        trace = run(self._config("proposed", iterations=10), derive_stream(12, 0))
        assert trace.batch_sizes[7] == 7
        assert trace.batch_sizes[0] == 1  # clamped to >= 1

    def test_classical_log_rule_sizes(self):
        trace = run(self._config("classical_log", iterations=12), derive_stream(13, 0))
        assert trace.batch_sizes[10] == 5  # ceil(ln 100) = 5
        assert trace.batch_sizes[1] == 3   # ceil(ln 10) = 3

    def test_zero_noise_values_exact(self):
        cfg = self._config("proposed", noise_std=0.0)
        trace = run(cfg, derive_stream(14, 0))
        base = cfg.objective.base
        for n in range(len(trace)):
            assert trace.f_values[n] == pytest.approx(base.value(trace.positions[n]),
                                                      rel=1e-12)

    def test_regime_matches_cutoff_comparison(self):
        trace = run(self._config("proposed", iterations=200), derive_stream(15, 0))
        for n in range(200):
            if trace.regimes[n + 1] == REGIME_LOW:
                assert trace.f_values[n] < trace.cutoffs[n + 1]
            else:
                assert trace.regimes[n + 1] == REGIME_RESTART
                assert trace.f_values[n] >= trace.cutoffs[n + 1]


class TestGradientFree:
    def test_periodic_wrap(self):
        box = BoxDomain.cube(0, 4, 1)
        region = BoxDomain.cube(1.5, 2.5, 1)
        rng = FixedNormals([np.array([0.3])])
        x, regime, sigma = step_gradient_free(box, region, np.array([3.9]), 1.0, rng)
        assert x[0] == pytest.approx(0.2)
        assert regime == REGIME_HIGH  # 3.9 lies outside [1.5, 2.5]
        assert sigma == 1.0

    def test_region_scales(self):
        box = BoxDomain.cube(0, 4, 1)
        region = BoxDomain.cube(1.5, 2.5, 1)
        rng = FixedNormals([np.array([0.0]), np.array([0.0])])
        _, regime, sigma = step_gradient_free(box, region, np.array([2.0]), 0.4, rng)
        assert regime == REGIME_LOW and sigma == 0.4
        _, regime, sigma = step_gradient_free(box, region, np.array([0.5]), 0.4, rng)
        assert regime == REGIME_HIGH and sigma == pytest.approx(2.5)

    def test_scale_validated(self):
        box = BoxDomain.cube(0, 4, 1)
        with pytest.raises(ValueError):
            step_gradient_free(box, box, np.array([1.0]), 0.0, derive_stream(1, 0))

    def test_unit_scale_uniform_occupancy(self):
        box = BoxDomain.cube(0, 4, 1)
        cfg = SolverConfig(variant="gradient_free", box=box, iterations=200_000,
                           region=BoxDomain.cube(1.5, 2.5, 1), scale=1.0,
                           initial=np.array([1.0]))
        trace = run(cfg, derive_stream(16, 0))
        counts, _ = np.histogram(trace.positions[1:, 0], bins=16, range=(0, 4))
        n = counts.sum()
        chi2 = ((counts - n / 16.0) ** 2 / (n / 16.0)).sum()
        # the chain mixes fast at unit scale; mild inflation allows residual
        # autocorrelation relative to the i.i.d. chi-square reference
        assert chi2 < 2.0 * stats.chi2.ppf(0.999, df=15)


class TestRunContract:
    def _cfg(self, iterations=1):
        return SolverConfig(
            variant="two_stage", box=BoxDomain.cube(-20, 20, 2),
            iterations=iterations, objective=Rastrigin(c=0.05, dim=2),
            schedule=PracticalSchedule())

    def test_single_step_trace_length(self):
        trace = run(self._cfg(1), derive_stream(17, 0))
        assert len(trace) == 2

    def test_same_seed_identical(self):
        a = run(self._cfg(300), derive_stream(18, 4))
        b = run(self._cfg(300), derive_stream(18, 4))
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.f_values, b.f_values)
        assert np.array_equal(a.regimes, b.regimes)

    def test_best_so_far_non_increasing(self):
        trace = run(self._cfg(500), derive_stream(19, 0))
        assert np.all(np.diff(trace.best_f) <= 0)
        assert trace.best_f[-1] == trace.f_values.min()

    def test_regime_labels_match_predecessor_comparison(self):
        trace = run(self._cfg(400), derive_stream(20, 0))
        for n in range(400):
            low = trace.f_values[n] < trace.cutoffs[n + 1]
            assert (trace.regimes[n + 1] == REGIME_LOW) == low

    def test_initial_record_has_no_step_metadata(self):
        trace = run(self._cfg(5), derive_stream(21, 0))
        assert math.isnan(trace.sigmas[0]) and math.isnan(trace.cutoffs[0])
        assert trace.regimes[0] == 0

    def test_initial_point_respected(self):
        cfg = SolverConfig(
            variant="two_stage", box=BoxDomain.cube(-20, 20, 2), iterations=5,
            objective=Rastrigin(c=0.05, dim=2), schedule=PracticalSchedule(),
            initial=np.array([3.0, 4.0]))
        trace = run(cfg, derive_stream(22, 0))
        assert np.array_equal(trace.positions[0], [3.0, 4.0])

    def test_invalid_configs_rejected(self):
        box = BoxDomain.cube(-20, 20, 2)
        with pytest.raises(ValueError):
            SolverConfig(variant="simulated", box=box, iterations=10)
        with pytest.raises(ValueError):
            SolverConfig(variant="two_stage", box=box, iterations=0,
                         objective=Rastrigin(dim=2), schedule=PracticalSchedule())
        with pytest.raises(ValueError):
            SolverConfig(variant="gradient_free", box=BoxDomain.cube(0, 4, 1),
                         iterations=10, scale=0.4)  # missing region
        with pytest.raises(ValueError):
            SolverConfig(variant="two_stage", box=box, iterations=10,
                         objective=Rastrigin(dim=3), schedule=PracticalSchedule())

    def test_restart_variant_with_theoretical_schedule(self):
        f = SquaredNorm(2)
        box = BoxDomain.cube(-1, 1, 2)
        cutoffs = np.linspace(2.0, 0.5, 50)
        sched = TheoreticalSchedule(alpha=0.02, omega0_volume=box.volume(), dim=2,
                                    cutoffs=cutoffs)
        cfg = SolverConfig(variant="restart", box=box, iterations=49,
                           objective=f, schedule=sched)
        trace = run(cfg, derive_stream(23, 0))
        # theoretical convention: low regime iff f <= cutoff
        for n in range(49):
            low = trace.f_values[n] <= trace.cutoffs[n + 1]
            assert (trace.regimes[n + 1] == REGIME_LOW) == low


class TestTraceCsv:
    def test_round_trip(self, tmp_path):
        cfg = SolverConfig(
            variant="two_stage", box=BoxDomain.cube(-20, 20, 2), iterations=25,
            objective=Rastrigin(c=0.05, dim=2), schedule=PracticalSchedule())
        trace = run(cfg, derive_stream(24, 0))
        path = tmp_path / "trace.csv"
        write_trace_csv(trace, path, coords=True)
        data = read_trace_csv(path)
        assert np.array_equal(data["f_value"], trace.f_values, equal_nan=True)
        assert np.array_equal(data["regime"], trace.regimes)
        assert np.array_equal(data["positions"], trace.positions)
        # byte-stable re-export
        path2 = tmp_path / "trace2.csv"
        write_trace_csv(trace, path2, coords=True)
        assert path.read_bytes() == path2.read_bytes()

    def test_header_and_column_order(self, tmp_path):
        cfg = SolverConfig(
            variant="two_stage", box=BoxDomain.cube(-20, 20, 2), iterations=2,
            objective=Rastrigin(c=0.05, dim=2), schedule=PracticalSchedule())
        trace = run(cfg, derive_stream(25, 0))
        path = tmp_path / "trace.csv"
        write_trace_csv(trace, path)
        header = path.read_text().splitlines()[0]
        assert header == "n,f_value,cutoff,sigma_used,regime,best_f"
