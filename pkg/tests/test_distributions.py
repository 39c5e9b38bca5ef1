import numpy as np
import pytest
from scipy import integrate

from randcorr.distributions import (
    CONSISTENT,
    REJECTED,
    histogram,
    ks_threshold,
    law_test,
    product_distribution_test,
    product_pure_cdf,
    product_pure_pdf,
    sample_std,
    theoretical_density,
)
from randcorr.quantum import DensityMatrix, bell_state, make_reference_state, product_state
from randcorr.sampling import run_experiment

KET0 = [1, 0]


def product_pure(n):
    return product_state(*[KET0] * n)


class TestHistogram:
    def test_counts_and_density(self):
        ds = run_experiment(bell_state(), 2000, seed=1)
        h = histogram(ds, [1, 2])
        assert h.counts.sum() == 2000 and len(h.counts) == 50
        d = histogram(ds, [1, 2], density=True)
        assert np.sum(d.counts * d.widths) == pytest.approx(1)

    def test_signed_range(self):
        ds = run_experiment(bell_state(), 200, seed=1)
        h = histogram(ds, 1, bins=10, signed=True)
        assert h.edges[0] == -1 and h.edges[-1] == 1

    def test_invalid(self):
        ds = run_experiment(bell_state(), 20, seed=1)
        with pytest.raises(ValueError):
            histogram(ds, 3, bins=1)


class TestReferenceLaws:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_pdf_normalized(self, n):
        total, _ = integrate.quad(lambda x: product_pure_pdf(np.array([x]), n)[0], 0, 1, limit=200)
        assert total == pytest.approx(1, abs=1e-6)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_cdf_against_monte_carlo(self, n):
        rng = np.random.default_rng(n)
        prod = np.prod(rng.random((200_000, n)), axis=1)
        for x in (0.05, 0.2, 0.5, 0.9):
            assert product_pure_cdf(np.array([x]), n)[0] == pytest.approx(np.mean(prod <= x), abs=5e-3)

    def test_cdf_endpoints(self):
        assert product_pure_cdf(np.array([0.0, 1.0]), 3).tolist() == [0.0, 1.0]

    def test_theoretical_models(self):
        g = np.linspace(0, 1, 101)
        np.testing.assert_array_equal(theoretical_density("uniform", g), 1.0)
        delta = theoretical_density("mixed-delta", g)
        assert delta[0] == pytest.approx(100) and delta[1:].sum() == 0
        with pytest.raises(ValueError):
            theoretical_density("gaussian", g)


class TestLawTests:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_product_pure(self, n):
        ds = run_experiment(product_pure(n), 5000, seed=40 + n)
        res = law_test(ds.values((1 << n) - 1), "product-pure", n)
        assert res.verdict == CONSISTENT

    def test_product_pure_wrong_n_rejected(self):
        ds = run_experiment(product_pure(3), 5000, seed=1)
        assert law_test(ds.values(7), "product-pure", 1).verdict == REJECTED

    def test_bell_uniform(self):
        ds = run_experiment(bell_state(), 5000, seed=2)
        assert law_test(ds.values(3), "uniform").verdict == CONSISTENT

    def test_mixed_single_qubit_width(self):
        ds = run_experiment(DensityMatrix.maximally_mixed(1), 10_000, 475, seed=3)
        assert sample_std(ds, 1) == pytest.approx(0.046, rel=0.1)

    def test_threshold_shrinks(self):
        assert ks_threshold(10_000, None, 0.01) < ks_threshold(100, None, 0.01)
        assert ks_threshold(100, 100, 0.01) == pytest.approx(ks_threshold(50, None, 0.01))


class TestProductDistribution:
    def test_product_state_consistent(self):
        ds = run_experiment(make_reference_state("trisep"), 5000, seed=5)
        assert product_distribution_test(ds, [1, 2], [3, 4]).verdict == CONSISTENT

    def test_bell_pair_rejected(self):
        ds = run_experiment(make_reference_state("trisep"), 5000, seed=5)
        assert product_distribution_test(ds, [1], [2]).verdict == REJECTED

    def test_ghz_full_cut_rejected(self):
        ds = run_experiment(make_reference_state("ghz"), 5000, seed=6)
        assert product_distribution_test(ds, [1, 2], [3, 4]).rejected

    def test_invalid_subsets(self):
        ds = run_experiment(bell_state(), 50, seed=1)
        with pytest.raises(ValueError):
            product_distribution_test(ds, [1], [1, 2])
        with pytest.raises(ValueError):
            product_distribution_test(ds, 0, [2])
