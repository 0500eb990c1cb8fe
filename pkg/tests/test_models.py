import numpy as np
import pytest
from scipy.special import expit, log_ndtr
from scipy.stats import norm

import rateorank as rr
from helpers import fd_gradient, fd_hessian


def _pairwise_design(d, reps):
    pairs = [(a, b) for a in range(d) for b in range(a + 1, d)]
    return np.array(pairs * reps, dtype=np.intp)


class TestQualityVector:
    def test_centering_enforced(self):
        with pytest.raises(ValueError, match="sum to zero"):
            rr.QualityVector(np.array([1.0, 2.0, -1.0]))
        w = rr.QualityVector.centered([1.0, 2.0, 6.0])
        assert w.values.sum() == pytest.approx(0.0, abs=1e-12)
        assert w.d == 3 and len(w) == 3

    def test_box_bound(self):
        rr.QualityVector(np.array([0.5, -0.5]), b_bound=0.5)
        with pytest.raises(ValueError, match="box"):
            rr.QualityVector(np.array([1.5, -1.5]), b_bound=1.0)
        with pytest.raises(ValueError, match="positive"):
            rr.QualityVector(np.array([0.0, 0.0]), b_bound=0.0)

    def test_immutable_and_finite(self):
        w = rr.QualityVector.centered([0.0, 1.0, 2.0])
        with pytest.raises(ValueError):
            w.values[0] = 5.0
        with pytest.raises(ValueError, match="finite"):
            rr.QualityVector(np.array([np.inf, -np.inf]))
        with pytest.raises(ValueError):
            rr.QualityVector(np.array([0.0]))

    def test_as_values(self):
        w = rr.QualityVector.centered([3.0, 1.0])
        assert np.array_equal(rr.as_values(w), w.values)
        arr = np.array([1.0, -1.0])
        assert np.array_equal(rr.as_values(arr), arr)


class TestModelSpec:
    def test_binary_kinds_need_sigma_and_box(self):
        for kind in rr.BINARY_KINDS:
            rr.ModelSpec(kind, sigma=1.0, b_bound=2.0)
            with pytest.raises(ValueError):
                rr.ModelSpec(kind, sigma=0.0, b_bound=1.0)
            with pytest.raises(ValueError):
                rr.ModelSpec(kind, sigma=1.0)

    def test_linear_kinds_allow_zero_sigma(self):
        rr.ModelSpec("cardinal", sigma=0.0)
        rr.ModelSpec("paired_linear", sigma=0.0)
        with pytest.raises(ValueError):
            rr.ModelSpec("cardinal", sigma=-0.1)
        with pytest.raises(ValueError):
            rr.ModelSpec("elo", sigma=1.0)


class TestObservationSet:
    def test_shape_validation(self):
        spec = rr.ModelSpec("paired_linear", sigma=1.0)
        with pytest.raises(ValueError, match="shape"):
            rr.ObservationSet(spec, 3, np.zeros(4, dtype=int), np.zeros(4))
        with pytest.raises(ValueError, match="self-comparison"):
            rr.ObservationSet(spec, 3, np.array([[1, 1]]), np.zeros(1))
        with pytest.raises(IndexError):
            rr.ObservationSet(spec, 3, np.array([[0, 3]]), np.zeros(1))
        cardinal = rr.ModelSpec("cardinal", sigma=1.0)
        with pytest.raises(ValueError, match="shape"):
            rr.ObservationSet(cardinal, 3, np.array([[0, 1]]), np.zeros(1))

    def test_binary_outcomes_validated(self):
        spec = rr.ModelSpec("thurstone", sigma=1.0, b_bound=1.0)
        rr.ObservationSet(spec, 3, np.array([[0, 1], [1, 2]]), np.array([1.0, -1.0]))
        with pytest.raises(ValueError, match=r"\+1 or -1"):
            rr.ObservationSet(spec, 3, np.array([[0, 1]]), np.array([0.5]))

    def test_subset_and_with_sigma(self):
        spec = rr.ModelSpec("btl", sigma=2.0, b_bound=1.0)
        obs = rr.ObservationSet(spec, 3, np.array([[0, 1], [1, 2], [0, 2]]), np.array([1.0, -1.0, 1.0]))
        sub = obs.subset(np.array([2, 0]))
        assert sub.n == 2 and tuple(sub.outcomes) == (1.0, 1.0)
        assert obs.with_sigma(0.5).model.sigma == 0.5
        assert obs.with_sigma(0.5).model.kind == "btl"


class TestProbPositive:
    def test_link_values(self):
        w = rr.QualityVector.centered([2.0, 0.0])
        thur = rr.ModelSpec("thurstone", sigma=1.0, b_bound=1.0)
        assert rr.prob_positive(thur, w, (0, 1)) == pytest.approx(norm.cdf(2.0), abs=1e-12)
        assert rr.prob_positive(thur, w, (1, 0)) == pytest.approx(norm.cdf(-2.0), abs=1e-12)
        btl = rr.ModelSpec("btl", sigma=0.5, b_bound=1.0)
        assert rr.prob_positive(btl, w, (0, 1)) == pytest.approx(expit(4.0), abs=1e-12)

    def test_rejects_cardinal(self):
        with pytest.raises(rr.ModelKindError):
            rr.prob_positive(rr.ModelSpec("cardinal", sigma=1.0), np.zeros(2), (0, 1))


class TestSampling:
    def test_deterministic_under_seed(self):
        w = rr.QualityVector.centered(np.linspace(-1, 1, 5))
        design = _pairwise_design(5, 3)
        spec = rr.ModelSpec("btl", sigma=1.0, b_bound=1.0)
        a = rr.sample(spec, w, design, 42)
        b = rr.sample(spec, w, design, 42)
        assert np.array_equal(a.outcomes, b.outcomes)
        assert not np.array_equal(a.outcomes, rr.sample(spec, w, design, 43).outcomes)

    def test_cardinal_sampling_moments(self):
        w = rr.QualityVector.centered([1.0, -1.0, 0.0])
        spec = rr.ModelSpec("cardinal", sigma=0.0)
        obs = rr.sample(spec, w, np.array([0, 1, 2, 0]), 0)
        assert np.allclose(obs.outcomes, [1.0, -1.0, 0.0, 1.0])

    def test_binary_frequencies_match_link(self):
        rng = np.random.default_rng(7)
        w = rr.QualityVector.centered([0.8, -0.8, 0.0, 0.0])
        design = np.array([(0, 1)] * 4000, dtype=np.intp)
        for kind in rr.BINARY_KINDS:
            spec = rr.ModelSpec(kind, sigma=1.0, b_bound=1.0)
            obs = rr.sample(spec, w, design, int(rng.integers(2**31)))
            freq = float(np.mean(obs.outcomes > 0))
            p = rr.prob_positive(spec, w, (0, 1))
            assert abs(freq - p) < 4.0 * np.sqrt(p * (1 - p) / 4000)

    def test_paired_linear_outcomes_are_real(self):
        w = rr.QualityVector.centered([0.3, -0.3])
        spec = rr.ModelSpec("paired_linear", sigma=0.0)
        obs = rr.sample(spec, w, np.array([[0, 1], [1, 0]]), 5)
        assert np.allclose(obs.outcomes, [0.6, -0.6])


class TestLikelihood:
    def test_quadratic_kinds_are_squared_error(self):
        w = np.array([0.5, -0.5, 0.0])
        spec = rr.ModelSpec("paired_linear", sigma=1.0)
        obs = rr.ObservationSet(spec, 3, np.array([[0, 1], [1, 2]]), np.array([2.0, -1.0]))
        assert rr.neg_log_likelihood(spec, w, obs) == pytest.approx((2.0 - 1.0) ** 2 + (-1.0 + 0.5) ** 2)
        card = rr.ModelSpec("cardinal", sigma=1.0)
        cobs = rr.ObservationSet(card, 3, np.array([0, 2]), np.array([1.0, 1.0]))
        assert rr.neg_log_likelihood(card, w, cobs) == pytest.approx(0.25 + 1.0)

    def test_binary_nll_matches_direct_formulas(self):
        w = np.array([0.4, -0.4])
        design = np.array([[0, 1], [1, 0]])
        y = np.array([1.0, 1.0])
        thur = rr.ModelSpec("thurstone", sigma=2.0, b_bound=1.0)
        obs = rr.ObservationSet(thur, 2, design, y)
        expected = -(log_ndtr(0.4) + log_ndtr(-0.4))
        assert rr.neg_log_likelihood(thur, w, obs) == pytest.approx(expected, rel=1e-12)
        btl = rr.ModelSpec("btl", sigma=2.0, b_bound=1.0)
        obs = rr.ObservationSet(btl, 2, design, y)
        expected = float(np.logaddexp(0, -0.4) + np.logaddexp(0, 0.4))
        assert rr.neg_log_likelihood(btl, w, obs) == pytest.approx(expected, rel=1e-12)

    def test_nll_finite_at_extreme_margins(self):
        w = np.array([30.0, -30.0])
        spec = rr.ModelSpec("thurstone", sigma=1.0, b_bound=31.0)
        obs = rr.ObservationSet(spec, 2, np.array([[1, 0]]), np.array([1.0]))
        val = rr.neg_log_likelihood(spec, w, obs)
        assert np.isfinite(val) and val > 100.0

    def test_kind_mismatch_rejected(self):
        spec = rr.ModelSpec("thurstone", sigma=1.0, b_bound=1.0)
        obs = rr.ObservationSet(spec, 2, np.array([[0, 1]]), np.array([1.0]))
        other = rr.ModelSpec("btl", sigma=1.0, b_bound=1.0)
        for fn in (rr.neg_log_likelihood, rr.gradient, rr.hessian):
            with pytest.raises(rr.ModelKindError):
                fn(other, np.zeros(2), obs)


class TestDerivatives:
    def _random_instance(self, kind, rng):
        d = int(rng.integers(3, 7))
        w_true = rr.QualityVector.centered(rng.uniform(-1, 1, d), b_bound=2.0)
        sigma = float(rng.uniform(0.5, 2.0))
        spec = rr.ModelSpec(kind, sigma=sigma, b_bound=2.0)
        if kind == "cardinal":
            design = np.arange(3 * d) % d
        else:
            design = _pairwise_design(d, 2)
        obs = rr.sample(spec, w_true, design, int(rng.integers(2**31)))
        w_at = rng.uniform(-1, 1, d)
        return spec, w_at, obs

    @pytest.mark.parametrize("kind", rr.MODEL_KINDS)
    def test_gradient_matches_finite_differences(self, kind):
        rng = np.random.default_rng(101)
        for _ in range(5):
            spec, w, obs = self._random_instance(kind, rng)
            g = rr.gradient(spec, w, obs)
            fd = fd_gradient(spec, w, obs)
            assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(fd))

    @pytest.mark.parametrize("kind", rr.MODEL_KINDS)
    def test_hessian_matches_finite_differences(self, kind):
        rng = np.random.default_rng(202)
        for _ in range(5):
            spec, w, obs = self._random_instance(kind, rng)
            h = rr.hessian(spec, w, obs)
            fd = fd_hessian(spec, w, obs)
            assert np.linalg.norm(h - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))
            assert np.allclose(h, h.T)
            if kind != "cardinal":
                assert np.allclose(h @ np.ones(len(w)), 0.0, atol=1e-9)

    def test_hessian_positive_semidefinite(self):
        rng = np.random.default_rng(303)
        for kind in rr.BINARY_KINDS:
            spec, w, obs = self._random_instance(kind, rng)
            eigs = np.linalg.eigvalsh(rr.hessian(spec, w, obs))
            assert eigs.min() >= -1e-10


class TestCurvatureScalar:
    def test_btl_is_bernoulli_variance(self):
        spec = rr.ModelSpec("btl", sigma=1.0, b_bound=1.0)
        for t in (-3.0, -0.5, 0.0, 1.2, 4.0):
            p = expit(t)
            assert rr.strong_convexity_scalar(spec, t) == pytest.approx(p * (1 - p), rel=1e-12)

    def test_thurstone_closed_form_at_zero(self):
        spec = rr.ModelSpec("thurstone", sigma=1.0, b_bound=1.0)
        assert rr.strong_convexity_scalar(spec, 0.0) == pytest.approx(2.0 / np.pi, rel=1e-12)

    def test_thurstone_matches_loss_curvature(self):
        # The scalar is d^2/dt^2 of -log(1 - Phi(t)); check by central differences.
        spec = rr.ModelSpec("thurstone", sigma=1.0, b_bound=1.0)
        h = 1e-4
        for t in (-2.0, -0.7, 0.0, 0.9, 2.5):
            f = lambda u: -norm.logsf(u)
            fd = (f(t + h) - 2 * f(t) + f(t - h)) / h**2
            assert rr.strong_convexity_scalar(spec, t) == pytest.approx(fd, rel=1e-5)

    def test_positive_everywhere(self):
        for kind in rr.BINARY_KINDS:
            spec = rr.ModelSpec(kind, sigma=1.0, b_bound=1.0)
            grid = np.linspace(-6, 6, 241)
            vals = [rr.strong_convexity_scalar(spec, t) for t in grid]
            assert min(vals) > 0.0

    def test_branch_mirror_symmetry(self):
        # Curvature of the +1 branch at t equals the -1 branch's value at -t,
        # so a symmetric-interval minimum covers both outcome labels.
        spec = rr.ModelSpec("thurstone", sigma=1.0, b_bound=1.0)
        h = 1e-4
        for t in (-1.5, 0.3, 2.0):
            f = lambda u: -norm.logcdf(u)
            fd = (f(t + h) - 2 * f(t) + f(t - h)) / h**2
            assert rr.strong_convexity_scalar(spec, -t) == pytest.approx(fd, rel=1e-5)

    def test_rejects_linear_kinds(self):
        with pytest.raises(rr.ModelKindError):
            rr.strong_convexity_scalar(rr.ModelSpec("cardinal", sigma=1.0), 0.0)
