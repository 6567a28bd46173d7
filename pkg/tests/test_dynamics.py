import unittest

import numpy as np
import scipy.integrate
import scipy.stats

from forestmfg.dynamics import (DensitySpec, Reflection, Scheme, counterfactual_panel, density_grid, lognormal_tpd,
                                median_cover_path, reflected_cdf, reflected_tpd, simulate_path, simulate_paths,
                                simulate_reflected, simulate_reflected_paths, stationary_cdf, stationary_density)
from forestmfg.equilibrium import q_mfe_stationary
from forestmfg.errors import DomainError, ValidationError
from forestmfg.model import BeliefPrior, ModelParams, CALIBRATED_PARAMS, CALIBRATED_PRIOR
from forestmfg.panel import Panel
from forestmfg.synthetic import model_panel

# mu - sigma^2/2 = 0.1 with a zero rate
STRONG_GROWTH = ModelParams(mu=0.12, sigma=0.2, rho=0.05, gamma=2.0)


class SimulatePathTest(unittest.TestCase):

    def test_reproducible(self):
        first = simulate_path(50.0, 0.05, CALIBRATED_PARAMS, 30.0, 1.0, seed=7)
        second = simulate_path(50.0, 0.05, CALIBRATED_PARAMS, 30.0, 1.0, seed=7)
        np.testing.assert_array_equal(first.values, second.values)
        other = simulate_path(50.0, 0.05, CALIBRATED_PARAMS, 30.0, 1.0, seed=7, path_index=1)
        self.assertFalse(np.array_equal(first.values, other.values))

    def test_grid(self):
        path = simulate_path(50.0, 0.05, CALIBRATED_PARAMS, 10.0, 0.25, seed=1)
        self.assertEqual(41, len(path.times))
        self.assertAlmostEqual(50.0, path.values[0], places=10)
        self.assertAlmostEqual(10.0, path.times[-1])
        self.assertTrue(np.all(path.values > 0.0))

    def test_zero_sigma_is_deterministic(self):
        params = ModelParams(mu=0.03, sigma=0.0, rho=0.05, gamma=2.0)
        path = simulate_path(10.0, 0.01, params, 5.0, 1.0, seed=3)
        np.testing.assert_allclose(path.values, 10.0 * np.exp(0.02 * path.times), rtol=1e-13)

    def test_euler_maruyama(self):
        path = simulate_path(50.0, 0.05, CALIBRATED_PARAMS, 20.0, 0.1, seed=5, scheme=Scheme.EULER_MARUYAMA)
        self.assertIs(Scheme.EULER_MARUYAMA, path.scheme)
        self.assertTrue(np.all(path.values > 0.0))
        same = simulate_path(50.0, 0.05, CALIBRATED_PARAMS, 20.0, 0.1, seed=5, scheme="EulerMaruyama")
        np.testing.assert_array_equal(path.values, same.values)

    def test_invalid(self):
        with self.assertRaises(ValidationError):
            simulate_path(0.0, 0.05, CALIBRATED_PARAMS, 10.0, 1.0, seed=1)
        with self.assertRaises(ValidationError):
            simulate_path(10.0, 0.05, CALIBRATED_PARAMS, 10.0, -1.0, seed=1)
        with self.assertRaises(ValueError):
            simulate_path(10.0, 0.05, CALIBRATED_PARAMS, 10.0, 1.0, seed=1, scheme="Milstein")

    def test_log_mean(self):
        rate, horizon = 0.03, 10.0
        endpoints = simulate_paths(50.0, rate, CALIBRATED_PARAMS, horizon, 1.0, seed=11, n_paths=20000)
        expected = np.log(50.0) + (CALIBRATED_PARAMS.threshold - rate) * horizon
        self.assertAlmostEqual(expected, np.log(endpoints).mean(), delta=0.03)

    def test_paths_match_single_paths(self):
        endpoints = simulate_paths(50.0, 0.05, CALIBRATED_PARAMS, 10.0, 1.0, seed=9, n_paths=5)
        for i in range(5):
            single = simulate_path(50.0, 0.05, CALIBRATED_PARAMS, 10.0, 1.0, seed=9, path_index=i)
            self.assertAlmostEqual(single.final, endpoints[i], delta=1e-12 * single.final)

    def test_thread_count_does_not_change_results(self):
        serial = simulate_paths(50.0, 0.05, CALIBRATED_PARAMS, 5.0, 1.0, seed=9, n_paths=2500, threads=1)
        threaded = simulate_paths(50.0, 0.05, CALIBRATED_PARAMS, 5.0, 1.0, seed=9, n_paths=2500, threads=4)
        np.testing.assert_array_equal(serial, threaded)


class ReflectedPathTest(unittest.TestCase):

    def test_stays_below_cap(self):
        for reflection in (Reflection.FOLD, Reflection.BRIDGE):
            path = simulate_reflected(50.0, 0.0, STRONG_GROWTH, 60.0, 50.0, 0.5, seed=2, reflection=reflection)
            self.assertTrue(np.all(path.values <= 60.0))
            self.assertTrue(np.all(path.values > 0.0))

    def test_start_above_cap(self):
        with self.assertRaises(DomainError):
            simulate_reflected(70.0, 0.0, STRONG_GROWTH, 60.0, 10.0, 1.0, seed=2)

    def test_paths_match_single_paths(self):
        endpoints = simulate_reflected_paths(50.0, 0.0, STRONG_GROWTH, 60.0, 10.0, 1.0, seed=4, n_paths=3,
                                             reflection=Reflection.BRIDGE)
        for i in range(3):
            single = simulate_reflected(50.0, 0.0, STRONG_GROWTH, 60.0, 10.0, 1.0, seed=4,
                                        reflection=Reflection.BRIDGE, path_index=i)
            self.assertAlmostEqual(single.final, endpoints[i], places=10)

    def test_bridge_matches_density(self):
        spec = DensitySpec.from_params(STRONG_GROWTH, 0.0, 50.0, cap=100.0)
        endpoints = simulate_reflected_paths(50.0, 0.0, STRONG_GROWTH, 100.0, 80.0, 1.0, seed=42, n_paths=10000,
                                             reflection="bridge")
        result = scipy.stats.kstest(endpoints, lambda x: reflected_cdf(x, 80.0, spec))
        self.assertGreater(result.pvalue, 0.01)

    def test_fold_matches_density(self):
        spec = DensitySpec.from_params(STRONG_GROWTH, 0.0, 50.0, cap=100.0)
        endpoints = simulate_reflected_paths(50.0, 0.0, STRONG_GROWTH, 100.0, 10.0, 0.01, seed=42, n_paths=10000,
                                             threads=4)
        result = scipy.stats.kstest(endpoints, lambda x: reflected_cdf(x, 10.0, spec))
        self.assertGreater(result.pvalue, 0.01)

    def test_fold_reaches_stationary_density(self):
        endpoints = simulate_reflected_paths(100.0, 0.0, STRONG_GROWTH, 100.0, 100.0, 0.01, seed=43, n_paths=10000)
        result = scipy.stats.kstest(np.log(endpoints), lambda y: stationary_cdf(y, STRONG_GROWTH, 0.0, 100.0))
        self.assertGreater(result.pvalue, 0.01)

    def test_median_cover_path(self):
        solution = q_mfe_stationary(CALIBRATED_PARAMS, CALIBRATED_PRIOR)
        path = median_cover_path(50.0, CALIBRATED_PARAMS, CALIBRATED_PRIOR, solution, horizon=10.0)
        self.assertEqual(50.0, path.values[0])
        drift = CALIBRATED_PARAMS.threshold - solution.q_tilde_star
        self.assertAlmostEqual(50.0 * np.exp(10.0 * drift), path.final)

    def test_huge_cap_matches_free_path(self):
        free = simulate_path(50.0, 0.05, CALIBRATED_PARAMS, 20.0, 1.0, seed=3)
        capped = simulate_reflected(50.0, 0.05, CALIBRATED_PARAMS, 1e12, 20.0, 1.0, seed=3)
        np.testing.assert_allclose(capped.values, free.values, rtol=1e-12)

    def test_geometric_mean_follows_median_cover(self):
        params = CALIBRATED_PARAMS.replace(sigma=0.05)
        solution = q_mfe_stationary(params, CALIBRATED_PRIOR)
        adherence = CALIBRATED_PRIOR.sample(np.random.default_rng(5), 10000)
        rates = solution.rate_at(adherence)
        finals = [simulate_path(50.0, rate, params, 10.0, 1.0, seed=6, path_index=i).final
                  for i, rate in enumerate(rates)]
        median = median_cover_path(50.0, params, CALIBRATED_PRIOR, solution, horizon=10.0).final
        self.assertAlmostEqual(np.log(median), np.mean(np.log(finals)), delta=0.01)


class DensityTest(unittest.TestCase):

    def _mass(self, spec, t):
        log_cap = np.log(spec.cap)
        value, _ = scipy.integrate.quad(lambda y: reflected_tpd(np.exp(y), t, spec) * np.exp(y),
                                        log_cap - 12.0, log_cap, limit=200)
        return value

    @staticmethod
    def _integrate(density, lower, upper, width):
        edges = np.linspace(lower, upper, int(np.ceil((upper - lower) / width)) + 1)
        return sum(scipy.integrate.quad(density, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
                   for a, b in zip(edges[:-1], edges[1:]))

    def test_random_parameterizations_normalized(self):
        rng = np.random.default_rng(2024)
        for draw in range(20):
            mu_star = rng.uniform(-0.1, 0.1)
            sigma = rng.uniform(0.1, 0.4)
            x0 = rng.uniform(10.0, 90.0)
            cap = x0 * rng.uniform(1.05, 2.0)
            t = rng.uniform(1.0, 20.0)
            scale = sigma * np.sqrt(t)
            center = np.log(x0) + mu_star * t
            label = "draw %d" % draw

            free = DensitySpec(mu_star, sigma, x0)
            mass = self._integrate(lambda y: lognormal_tpd(np.exp(y), t, free) * np.exp(y),
                                   center - 12.0 * scale, center + 12.0 * scale, scale)
            self.assertAlmostEqual(1.0, mass, delta=1e-8, msg=label)

            capped = DensitySpec(mu_star, sigma, x0, cap=cap)
            log_cap = np.log(cap)
            reach = log_cap - np.log(x0) + abs(mu_star) * t + 12.0 * scale
            mass = self._integrate(lambda y: reflected_tpd(np.exp(y), t, capped) * np.exp(y),
                                   log_cap - reach, log_cap, scale)
            self.assertAlmostEqual(1.0, mass, delta=1e-6, msg=label)

            growth = abs(mu_star) + 0.01
            params = ModelParams(mu=growth + 0.5 * sigma ** 2, sigma=sigma, rho=0.05, gamma=2.0)
            k = 2.0 * growth / sigma ** 2
            mass = self._integrate(lambda y: stationary_density(y, params, 0.0, cap), log_cap - 40.0 / k, log_cap,
                                   1.0 / k)
            self.assertAlmostEqual(1.0, mass, delta=1e-8, msg=label)

    def test_lognormal_integrates_to_one(self):
        spec = DensitySpec(0.02, 0.258, 50.0)
        value, _ = scipy.integrate.quad(lambda y: lognormal_tpd(np.exp(y), 5.0, spec) * np.exp(y),
                                        np.log(50.0) - 10.0, np.log(50.0) + 10.0, limit=200)
        self.assertAlmostEqual(1.0, value, places=7)

    def test_lognormal_rejects_cap(self):
        with self.assertRaises(ValidationError):
            lognormal_tpd(40.0, 1.0, DensitySpec(0.02, 0.258, 50.0, cap=60.0))

    def test_reflected_integrates_to_one(self):
        for mu_star in (0.05, -0.05, 0.0):
            spec = DensitySpec(mu_star, 0.258, 50.0, cap=60.0)
            self.assertAlmostEqual(1.0, self._mass(spec, 5.0), places=6, msg="mu_star=%g" % mu_star)

    def test_reflected_cdf_consistent(self):
        spec = DensitySpec(0.03, 0.2, 40.0, cap=60.0)
        lower, upper = 20.0, 50.0
        mass, _ = scipy.integrate.quad(lambda x: reflected_tpd(x, 3.0, spec), lower, upper)
        self.assertAlmostEqual(reflected_cdf(upper, 3.0, spec) - reflected_cdf(lower, 3.0, spec), mass, places=7)
        self.assertEqual(1.0, reflected_cdf(60.0, 3.0, spec))
        self.assertEqual(0.0, reflected_tpd(61.0, 3.0, spec))

    def test_reflected_requires_cap(self):
        with self.assertRaises(ValidationError):
            reflected_tpd(40.0, 1.0, DensitySpec(0.02, 0.258, 50.0))

    def test_invalid_x(self):
        spec = DensitySpec(0.02, 0.258, 50.0)
        with self.assertRaises(DomainError):
            lognormal_tpd(np.array([1.0, -1.0]), 1.0, spec)

    def test_stationary(self):
        k = 2.0 * 0.1 / 0.2 ** 2
        log_cap = np.log(100.0)
        self.assertAlmostEqual(k, stationary_density(log_cap, STRONG_GROWTH, 0.0, 100.0))
        self.assertEqual(0.0, stationary_density(log_cap + 0.1, STRONG_GROWTH, 0.0, 100.0))
        self.assertAlmostEqual(1.0, stationary_cdf(log_cap, STRONG_GROWTH, 0.0, 100.0))
        self.assertAlmostEqual(np.exp(-k), stationary_cdf(log_cap - 1.0, STRONG_GROWTH, 0.0, 100.0))
        value, _ = scipy.integrate.quad(lambda y: stationary_density(y, STRONG_GROWTH, 0.0, 100.0),
                                        log_cap - 20.0, log_cap)
        self.assertAlmostEqual(1.0, value, places=8)

    def test_long_run_matches_stationary(self):
        spec = DensitySpec.from_params(STRONG_GROWTH, 0.0, 50.0, cap=100.0)
        y = np.log(np.array([60.0, 80.0, 95.0]))
        np.testing.assert_allclose(reflected_cdf(np.exp(y), 200.0, spec),
                                   stationary_cdf(y, STRONG_GROWTH, 0.0, 100.0), rtol=1e-8)

    def test_stationary_requires_growth(self):
        with self.assertRaises(ValidationError):
            stationary_density(0.0, CALIBRATED_PARAMS, 0.05, 100.0)

    def test_huge_cap_matches_lognormal(self):
        x = np.array([20.0, 45.0, 60.0, 90.0])
        np.testing.assert_allclose(reflected_tpd(x, 5.0, DensitySpec(0.02, 0.258, 50.0, cap=1e6)),
                                   lognormal_tpd(x, 5.0, DensitySpec(0.02, 0.258, 50.0)), rtol=1e-8)

    def test_density_grid(self):
        grid = density_grid(DensitySpec(0.02, 0.258, 50.0, cap=60.0), 5.0)
        self.assertTrue(grid.reflected)
        self.assertTrue(np.all(grid.x <= 60.0 * (1.0 + 1e-12)))
        self.assertEqual(201, grid.x.size)
        frame = grid.to_frame()
        self.assertEqual(["x", "density", "cdf"], list(frame.columns))
        free = density_grid(DensitySpec(0.02, 0.258, 50.0), 5.0, points=11)
        self.assertFalse(free.reflected)
        self.assertAlmostEqual(0.5, free.cdf[5])


class CounterfactualTest(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.panel = model_panel(n_units=300, seed=12)

    def test_table(self):
        table, summary = counterfactual_panel(self.panel, CALIBRATED_PARAMS, CALIBRATED_PRIOR, (2002, 2013))
        self.assertEqual(["unit", "observed", "predicted", "counterfactual", "diff_km2", "diff_pct"],
                         list(table.columns))
        self.assertEqual(300, len(table))
        np.testing.assert_allclose(table["diff_km2"], table["counterfactual"] - table["observed"])
        self.assertTrue(np.all(table["counterfactual"] <= table["predicted"] * (1.0 + 1e-12)))
        self.assertEqual((), summary.missing_units)
        self.assertEqual("UnsustainableForAll", str(summary.sustainability))
        self.assertAlmostEqual(0.0451, summary.to_dict()["published_rate"])

    def test_gap_grows_with_beliefs(self):
        gaps = []
        for alpha in (1.0, 2.0, 3.0):
            prior = BeliefPrior(alpha, 10.0 - alpha)
            panel = model_panel(prior=prior, n_units=5000, seed=13)
            _, summary = counterfactual_panel(panel, CALIBRATED_PARAMS, prior, (2002, 2013))
            gaps.append(-summary.model_gap_km2)
        self.assertTrue(gaps[0] < gaps[1] < gaps[2])

    def test_missing_units_reported(self):
        frame = self.panel.frame
        frame = frame[~((frame["unit_id"] == "a0000") & (frame["year"] == 2013))]
        with self.assertLogs("forestmfg.dynamics", level="WARNING"):
            table, summary = counterfactual_panel(Panel(frame), CALIBRATED_PARAMS, CALIBRATED_PRIOR, (2002, 2013))
        self.assertEqual(("a0000",), summary.missing_units)
        self.assertTrue(np.isnan(table.loc[table["unit"] == "a0000", "observed"].iloc[0]))

    def test_years_order(self):
        with self.assertRaises(ValidationError):
            counterfactual_panel(self.panel, CALIBRATED_PARAMS, CALIBRATED_PRIOR, (2013, 2002))
        with self.assertRaises(ValidationError):
            counterfactual_panel(self.panel, CALIBRATED_PARAMS, CALIBRATED_PRIOR, (1950, 2013))


if __name__ == "__main__":
    unittest.main()
