import numpy as np
import pytest

from randcorr.moments import (
    MomentEstimate,
    bayes_correct_moment,
    deconvolve,
    estimate_all,
    estimate_moment,
    exact_moment,
    exact_moments,
    second_moment_error,
)
from randcorr.quantum import (
    DensityMatrix,
    bell_state,
    correlation_tensor,
    make_reference_state,
    mask_qubits,
    popcount,
)
from randcorr.sampling import CorrelationDataset, run_experiment

from conftest import brute_tensor, design_moment, random_density


def constant_dataset(c, ns=100, n=1, n_shots=None):
    corr = np.full((ns, 1 << n), float(c))
    corr[:, 0] = 1
    return CorrelationDataset(n, np.zeros((ns, n, 3)), corr, n_shots)


class TestExactMoment:
    def test_bell(self):
        assert exact_moment(correlation_tensor(bell_state()), [1, 2]).value == pytest.approx(1 / 3)

    def test_ghz_full(self):
        m = exact_moment(correlation_tensor(make_reference_state("ghz")), [1, 2, 3, 4])
        assert m.value == pytest.approx(1 / 9, abs=1e-14)
        assert m.error == 0 and m.tag == "exact"

    def test_maximally_mixed(self):
        for m in exact_moments(correlation_tensor(DensityMatrix.maximally_mixed(3))).values():
            assert m.value == pytest.approx(0, abs=1e-15)

    def test_rejects_other_orders(self):
        with pytest.raises(ValueError):
            exact_moment(correlation_tensor(bell_state()), [1, 2], k=4)

    def test_against_brute_tensor_sum(self, rng):
        m = random_density(3, rng)
        T = correlation_tensor(DensityMatrix(m))
        brute = brute_tensor(m)
        for mask, est in exact_moments(T).items():
            idx = tuple(slice(1, 4) if mask >> q & 1 else 0 for q in range(3))
            assert est.value == pytest.approx(np.sum(brute[idx] ** 2) / 3 ** popcount(mask), abs=1e-13)

    def test_against_spherical_design(self, reference):
        # the Haar average of E^2 computed without any tensor algebra
        _, rho, T = reference
        moments = exact_moments(T)
        for mask in (0b0001, 0b0011, 0b0110, 0b1011, 0b1111):
            qubits = [q - 1 for q in mask_qubits(mask)]
            assert moments[mask].value == pytest.approx(design_moment(rho.matrix, qubits, 4), abs=1e-12)


class TestEstimateMoment:
    def test_ghz_exact_mode(self):
        ds = run_experiment(make_reference_state("ghz"), 10_000, seed=3)
        est = estimate_moment(ds, 0b1111)
        assert est.tag == "raw"
        assert abs(est.value - 1 / 9) < 3 * est.error

    def test_degenerate_sample(self):
        c = 0.3
        ds = constant_dataset(c, ns=1000)
        est = estimate_moment(ds, 1)
        assert est.value == pytest.approx(c**2)
        # only the (N_s-3)/(N_s-1) residual is left
        resid = np.sqrt((c**4 - 997 / 999 * c**4) / 1000)
        assert est.error == pytest.approx(resid, rel=1e-9)
        assert estimate_moment(ds, 1, k=4).value == pytest.approx(c**4)

    def test_maximally_mixed(self):
        ds = run_experiment(DensityMatrix.maximally_mixed(2), 1000, seed=1)
        est = estimate_moment(ds, 0b11)
        assert abs(est.value) <= 3 * est.error + 1e-15

    def test_too_few_settings(self):
        with pytest.raises(ValueError):
            estimate_moment(constant_dataset(0.5, ns=3), 1)

    def test_error_formula_matches_sample_spread(self):
        # Δ predicts the scatter of the estimator across repetitions
        T = correlation_tensor(make_reference_state("cluster"))
        vals, errs = [], []
        for s in range(40):
            est = estimate_moment(run_experiment(T, 500, seed=100 + s), 0b1111)
            vals.append(est.value)
            errs.append(est.error)
        assert np.std(vals, ddof=1) == pytest.approx(np.mean(errs), rel=0.35)

    def test_second_moment_error_direct(self):
        assert second_moment_error(0.5, 0.25, 100) == pytest.approx(np.sqrt((0.25 - 97 / 99 * 0.25) / 100))
        with pytest.raises(ValueError):
            second_moment_error(0.5, 0.25, 3)


class TestBayesCorrection:
    def test_exact_mode_passthrough(self):
        ds = run_experiment(make_reference_state("ghz"), 2000, seed=2)
        raw = estimate_moment(ds, 0b1111)
        cor = bayes_correct_moment(ds, 0b1111)
        assert cor.tag == "bayes-corrected"
        assert abs(cor.value - raw.value) < 1e-4

    def test_mixed_state_bias_removed(self):
        ds = run_experiment(DensityMatrix.maximally_mixed(4), 10_000, 475, seed=8)
        raw = estimate_moment(ds, 0b1111).value
        cor = bayes_correct_moment(ds, 0b1111).value
        assert raw == pytest.approx(1 / 475, rel=0.1)
        assert cor < 0.0007

    def test_ghz_corrected(self):
        ds = run_experiment(make_reference_state("ghz"), 10_000, 475, seed=9)
        raw = estimate_moment(ds, 0b1111)
        cor = bayes_correct_moment(ds, 0b1111)
        assert abs(cor.value - 1 / 9) < 3 * cor.error
        assert raw.value - cor.value == pytest.approx((1 - 1 / 9) / 475, rel=0.5)

    def test_single_pass_is_partial(self):
        rng = np.random.default_rng(0)
        e = rng.binomial(475, 0.5, 10_000) * 2 / 475 - 1
        g, w1 = deconvolve(e, 475, iterations=1)
        _, wn = deconvolve(e, 475)
        raw = np.mean(e**2)
        assert w1 @ g**2 < raw
        assert wn @ g**2 < w1 @ g**2

    def test_weights_normalized(self):
        g, w = deconvolve(np.array([0.1, -0.2, 0.3, 0.05]), 100)
        assert len(g) == 2001 and w.sum() == pytest.approx(1) and w.min() >= 0

    def test_estimate_all_keys(self):
        ds = run_experiment(make_reference_state("ghz"), 200, 100, seed=1)
        out = estimate_all(ds, "raw")
        assert sorted(out) == list(range(1, 16))
        assert all(isinstance(m, MomentEstimate) and m.tag == "raw" for m in out.values())


def test_moment_estimate_validation():
    with pytest.raises(ValueError):
        MomentEstimate(1, 2, 0.1, -1.0, "raw")
    with pytest.raises(ValueError):
        MomentEstimate(1, 2, 0.1, 0.0, "fancy")
