"""
Unit tests for ordinary and universal kriging.
"""

import numpy as np
import pytest

from src.geometry.sites import Observations, Site
from src.kriging.universal import (
    DriftBasis,
    RankDeficientDriftError,
    assemble_system,
    fit_dual,
    has_full_column_rank,
    predict_bordered,
    predict_dual,
    predict_dual_many,
    predict_primal,
)
from src.utils.errors import IllConditionedError, InsufficientDataError
from src.variogram.models import GaussianCovariogram


def _random_instance(rng, n, degree):
    coords = rng.uniform(0.0, 10.0, size=(n, 2))
    values = rng.normal(size=n) * rng.uniform(0.5, 5.0)
    c1 = rng.uniform(0.5, 3.0)
    c0 = c1 * rng.uniform(0.15, 1.0)
    model = GaussianCovariogram(c0, c1, rng.uniform(0.5, 3.0))
    return Observations.from_arrays(coords, values), model, DriftBasis(degree)


class TestDriftBasis:
    """Test drift basis evaluation."""

    def test_constant(self):
        """Test degree 0 gives a column of ones."""
        design = DriftBasis(0).design(np.array([[1.0, 2.0], [3.0, 4.0]]))
        np.testing.assert_array_equal(design, [[1.0], [1.0]])

    def test_planar(self):
        """Test degree 1 gives (1, x, y)."""
        design = DriftBasis(1).design(np.array([[1.0, 2.0]]))
        np.testing.assert_array_equal(design, [[1.0, 1.0, 2.0]])
        assert DriftBasis(1).size == 3

    def test_invalid_degree(self):
        """Test unsupported degrees are rejected."""
        with pytest.raises(ValueError):
            DriftBasis(2)

    def test_rank_check_ignores_offset(self):
        """Test the rank check is unaffected by a far coordinate origin."""
        square = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]) + 1e6
        line = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]) + 1e6
        assert has_full_column_rank(DriftBasis(1).design(square))
        assert not has_full_column_rank(DriftBasis(1).design(line))


class TestSingleObservation:
    """Test the closed forms for one observation."""

    def setup_method(self):
        """Set up test fixtures."""
        self.model = GaussianCovariogram(0.5, 2.0, 1.0)
        self.obs = Observations.from_arrays([[0.0, 0.0]], [3.0])
        self.system = assemble_system(self.obs, self.model, DriftBasis(0))

    def test_primal(self):
        """Test the prediction is Z and the variance is twice the semivariance."""
        prediction = predict_primal(self.system, Site(1.0, 0.0))
        assert prediction.value == pytest.approx(3.0, rel=1e-12)
        expected = 2.0 * float(self.model.semivariogram(1.0))
        assert prediction.variance == pytest.approx(expected, rel=1e-10, abs=1e-10)
        np.testing.assert_allclose(prediction.weights, [1.0], rtol=1e-12)

    def test_variance_random_pairs(self):
        """Test the closed form over random models and distances."""
        rng = np.random.default_rng(17)
        for _ in range(100):
            model = GaussianCovariogram(rng.uniform(0.0, 2.0), rng.uniform(0.1, 5.0), rng.uniform(0.2, 5.0))
            obs = Observations.from_arrays([rng.uniform(-10, 10, 2)], [rng.normal()])
            h = rng.uniform(0.01, 10.0)
            angle = rng.uniform(0.0, 2.0 * np.pi)
            origin = obs.sites[0]
            t0 = Site(origin.x + h * np.cos(angle), origin.y + h * np.sin(angle))

            prediction = predict_primal(assemble_system(obs, model, DriftBasis(0)), t0)
            h_actual = float(np.hypot(t0.x - origin.x, t0.y - origin.y))
            expected = 2.0 * float(model.semivariogram(h_actual))
            assert prediction.variance == pytest.approx(expected, rel=1e-10, abs=1e-10)

    def test_dual(self):
        """Test V1 = 0 and V2 = Z."""
        fit = fit_dual(self.system)
        np.testing.assert_allclose(fit.v1, [0.0], atol=1e-12)
        np.testing.assert_allclose(fit.v2, [3.0], rtol=1e-12)
        assert predict_dual(fit, Site(5.0, 5.0)) == pytest.approx(3.0, rel=1e-12)


class TestPrimalDualAgreement:
    """Test the primal and dual forms agree."""

    def test_random_instances(self):
        """Test predictions agree on 50 random instances of both drift degrees."""
        rng = np.random.default_rng(2024)
        for trial in range(50):
            n = int(rng.integers(5, 101))
            obs, model, basis = _random_instance(rng, n, trial % 2)
            system = assemble_system(obs, model, basis)
            fit = fit_dual(system)

            targets = rng.uniform(-1.0, 11.0, size=(5, 2))
            primal = []
            for x, y in targets:
                p = predict_primal(system, Site(x, y))
                np.testing.assert_allclose(system.design.T @ p.weights, basis.at(Site(x, y)), atol=1e-8)
                primal.append(p.value)
            dual = predict_dual_many(fit, targets)

            scale = float(np.max(np.abs(obs.values_array)))
            np.testing.assert_allclose(np.array(primal), dual, rtol=1e-8, atol=1e-8 * scale)


class TestKrigingProperties:
    """Test structural properties of the kriging predictor."""

    def setup_method(self):
        """Set up test fixtures."""
        rng = np.random.default_rng(7)
        self.coords = rng.uniform(0.0, 10.0, size=(40, 2))
        self.values = rng.normal(size=40)
        self.obs = Observations.from_arrays(self.coords, self.values)
        self.model = GaussianCovariogram(0.3, 2.0, 2.0)

    def test_exact_interpolation(self):
        """Test zero-nugget predictions at data sites reproduce the data with zero variance."""
        xs, ys = np.meshgrid(np.arange(6) * 1.5, np.arange(6) * 1.5)
        model = GaussianCovariogram(0.0, 1.0, 1.0)
        for seed in range(20):
            rng = np.random.default_rng(seed)
            coords = np.column_stack([xs.ravel(), ys.ravel()]) + rng.uniform(-0.1, 0.1, size=(36, 2))
            obs = Observations.from_arrays(coords, rng.normal(size=36) * 10.0)
            tolerance = 1e-7 * float(np.ptp(obs.values_array))

            system = assemble_system(obs, model, DriftBasis(seed % 2))
            fit = fit_dual(system)
            for site, value in zip(obs.sites, obs.values):
                prediction = predict_primal(system, site)
                assert prediction.value == pytest.approx(value, abs=tolerance)
                assert prediction.variance <= 1e-10
            np.testing.assert_allclose(predict_dual_many(fit, obs.coords), obs.values_array, atol=tolerance)

    def test_unbiasedness_constraint(self):
        """Test the weights satisfy X' lambda = x(t0)."""
        basis = DriftBasis(1)
        system = assemble_system(self.obs, self.model, basis)
        for t0 in (Site(2.5, 7.5), Site(-3.0, 12.0), Site(5.0, 5.0)):
            prediction = predict_primal(system, t0)
            np.testing.assert_allclose(system.design.T @ prediction.weights, basis.at(t0), atol=1e-8)

    def test_bordered_matches_primal(self):
        """Test weights and variance from the bordered factorization match the primal formulas."""
        for degree in (0, 1):
            system = assemble_system(self.obs, self.model, DriftBasis(degree))
            for t0 in (Site(1.0, 9.0), Site(6.5, 3.2)):
                primal = predict_primal(system, t0)
                bordered = predict_bordered(system, t0)
                np.testing.assert_allclose(bordered.weights, primal.weights, atol=1e-10)
                np.testing.assert_allclose(bordered.lagrange, primal.lagrange, atol=1e-9)
                assert bordered.variance == pytest.approx(primal.variance, rel=1e-9, abs=1e-12)

    def test_ordinary_weights_sum_to_one(self):
        """Test ordinary kriging weights sum to one."""
        system = assemble_system(self.obs, self.model, DriftBasis(0))
        prediction = predict_primal(system, Site(4.0, 6.0))
        assert float(np.sum(prediction.weights)) == pytest.approx(1.0, abs=1e-10)
        assert prediction.variance >= 0.0

    def test_planar_data_reproduced(self):
        """Test planar data gives V1 = 0 and V2 = beta under a planar drift."""
        beta = np.array([1.0, 2.0, -3.0])
        values = beta[0] + beta[1] * self.coords[:, 0] + beta[2] * self.coords[:, 1]
        system = assemble_system(self.obs.with_values(values), self.model, DriftBasis(1))
        fit = fit_dual(system)

        np.testing.assert_allclose(fit.v1, 0.0, atol=1e-7)
        np.testing.assert_allclose(fit.v2, beta, rtol=1e-8, atol=1e-8)
        assert predict_dual(fit, Site(20.0, -5.0)) == pytest.approx(1.0 + 40.0 + 15.0, rel=1e-8)

    def test_linearity(self):
        """Test the predictor is linear in the data."""
        other = np.cos(self.coords[:, 0])
        t0 = Site(3.3, 4.4)
        basis = DriftBasis(1)

        def krige(values):
            return predict_primal(assemble_system(self.obs.with_values(values), self.model, basis), t0).value

        combined = krige(2.0 * self.values - 0.5 * other)
        assert combined == pytest.approx(2.0 * krige(self.values) - 0.5 * krige(other), abs=1e-10)

    def test_rigid_motion_invariance(self):
        """Test rotating and translating sites and targets leaves predictions unchanged."""
        angle = 0.7
        rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        shift = np.array([1000.0, -250.0])
        moved = Observations.from_arrays(self.coords @ rotation.T + shift, self.values)
        targets = np.array([[1.0, 2.0], [5.5, 5.5], [9.0, 0.5]])
        moved_targets = targets @ rotation.T + shift

        for degree in (0, 1):
            basis = DriftBasis(degree)
            before = assemble_system(self.obs, self.model, basis)
            after = assemble_system(moved, self.model, basis)
            for t, m in zip(targets, moved_targets):
                p_before = predict_primal(before, Site(*t))
                p_after = predict_primal(after, Site(*m))
                assert p_after.value == pytest.approx(p_before.value, abs=1e-6)
                assert p_after.variance == pytest.approx(p_before.variance, abs=1e-6)


class TestKrigingErrors:
    """Test failure modes of the kriging system."""

    def test_collinear_sites(self):
        """Test collinear sites under a planar drift are rank deficient."""
        obs = Observations.from_arrays([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]],
                                       [1.0, 2.0, 3.0, 4.0])
        with pytest.raises(RankDeficientDriftError):
            assemble_system(obs, GaussianCovariogram(0.1, 1.0, 1.0), DriftBasis(1))

    def test_too_few_observations(self):
        """Test a planar drift needs at least three observations."""
        obs = Observations.from_arrays([[0.0, 0.0], [1.0, 0.0]], [1.0, 2.0])
        with pytest.raises(InsufficientDataError):
            assemble_system(obs, GaussianCovariogram(0.1, 1.0, 1.0), DriftBasis(1))

    def test_near_duplicate_sites_without_nugget(self):
        """Test nearly coincident sites with no nugget are reported as ill-conditioned."""
        obs = Observations.from_arrays([[0.0, 0.0], [1e-9, 0.0], [5.0, 5.0]], [1.0, 2.0, 3.0])
        with pytest.raises(IllConditionedError):
            assemble_system(obs, GaussianCovariogram(0.0, 1.0, 1.0), DriftBasis(0))
