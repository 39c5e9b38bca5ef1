import numpy as np
import pytest

from randcorr.bisep import boundary_state
from randcorr.moments import MomentEstimate, exact_moments
from randcorr.quantum import (
    CorrelationTensor,
    DensityMatrix,
    apply_local_unitaries,
    bell_state,
    correlation_tensor,
    haar_local_unitary,
    make_reference_state,
    product_state,
    purity,
    state_from_tensor,
)
from randcorr.sampling import run_experiment
from randcorr.witnesses import (
    DETECTED,
    P0,
    batch_witness,
    bisep_bound,
    bisep_bound_slope,
    exact_report,
    subset_purity,
    witness_report,
    witness_value,
)

from conftest import random_density

PS = np.linspace(0, 1, 41)


def full_witness(rho):
    T = correlation_tensor(rho)
    return witness_value(exact_moments(T), T.n)[0], purity(T)


class TestBound:
    def test_examples(self):
        assert bisep_bound(2, 1.0) == 0
        assert bisep_bound(3, 0.5) == pytest.approx(2 / 27)
        assert 8 * 0.5 * 0.5 / 27 == pytest.approx(2 / 27)
        upper = 8 * (1 - P0**2) / 81
        middle = 2 * (-8 * P0**2 + 16 * P0 + 1) / 243
        assert upper == pytest.approx(middle, abs=1e-12)
        assert P0 == pytest.approx(0.598, abs=1e-3)

    @pytest.mark.parametrize("n,cuts", [(2, [0.5]), (3, [0.25, 0.5]), (4, [0.25, P0])])
    def test_continuity(self, n, cuts):
        for c in cuts:
            assert bisep_bound(n, c - 1e-12) == pytest.approx(bisep_bound(n, c + 1e-12), abs=1e-10)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_zero_at_minimum_purity(self, n):
        # a maximally mixed state has zero witness and sits on the bound
        assert bisep_bound(n, 2.0**-n) == pytest.approx(0, abs=1e-15)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_slope_matches_finite_difference(self, n):
        for p in np.linspace(2.0**-n + 0.01, 0.99, 17):
            h = 1e-7
            fd = (bisep_bound(n, p + h) - bisep_bound(n, p - h)) / (2 * h)
            assert bisep_bound_slope(n, p) == pytest.approx(fd, abs=1e-6)

    def test_errors(self):
        with pytest.raises(ValueError):
            bisep_bound(5, 0.5)
        with pytest.raises(ValueError):
            bisep_bound(3, 0.1)
        with pytest.raises(ValueError):
            bisep_bound(2, 1.01)


class TestWitnessValue:
    def test_ghz(self):
        T = correlation_tensor(make_reference_state("ghz"))
        w, err = witness_value(exact_moments(T), 4)
        assert w == pytest.approx(2 / 27, abs=1e-14)
        assert err == 0

    def test_bell(self):
        assert full_witness(bell_state())[0] == pytest.approx(1 / 3)

    def test_product(self):
        w, _ = full_witness(product_state([1, 0], [1, 0]))
        assert w == pytest.approx(0, abs=1e-15)

    def test_reduces_to_two_qubit_form(self, rng):
        T = correlation_tensor(DensityMatrix(random_density(2, rng)))
        m = exact_moments(T)
        assert witness_value(m, 2)[0] == pytest.approx(m[3].value - m[1].value * m[2].value)

    def test_three_qubit_form(self, rng):
        T = correlation_tensor(DensityMatrix(random_density(3, rng)))
        m = {k: v.value for k, v in exact_moments(T).items()}
        expected = m[7] - m[1] * m[6] - m[2] * m[5] - m[4] * m[3]
        assert witness_value(exact_moments(T), 3)[0] == pytest.approx(expected)

    def test_missing_subset(self):
        m = exact_moments(correlation_tensor(bell_state()))
        del m[1]
        with pytest.raises(KeyError):
            witness_value(m, 2)

    def test_mixed_tags(self):
        m = exact_moments(correlation_tensor(bell_state()))
        m[1] = MomentEstimate(1, 2, 0.0, 0.01, "raw")
        with pytest.raises(ValueError):
            witness_value(m, 2)

    def test_error_propagation(self):
        m = {1: MomentEstimate(1, 2, 0.2, 0.01, "raw"),
             2: MomentEstimate(2, 2, 0.1, 0.02, "raw"),
             3: MomentEstimate(3, 2, 0.3, 0.03, "raw")}
        w, err = witness_value(m, 2)
        assert w == pytest.approx(0.3 - 0.02)
        assert err == pytest.approx(np.sqrt(0.03**2 + (0.1 * 0.01) ** 2 + (0.2 * 0.02) ** 2))

    def test_batch_agrees(self, rng):
        mats = [random_density(3, rng) for _ in range(5)]
        tensors = np.stack([correlation_tensor(DensityMatrix(m)).entries for m in mats])
        w, p = batch_witness(tensors)
        for k, m in enumerate(mats):
            wk, pk = full_witness(DensityMatrix(m))
            assert w[k] == pytest.approx(wk, abs=1e-14)
            assert p[k] == pytest.approx(pk, abs=1e-14)


class TestPurityIdentity:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_random_states(self, n, rng):
        for _ in range(20):
            rho = DensityMatrix(random_density(n, rng))
            p, dp = subset_purity(exact_moments(correlation_tensor(rho)), (1 << n) - 1)
            assert p == pytest.approx(rho.purity(), abs=1e-10)
            assert dp == 0

    def test_subset_purity_is_reduced_purity(self, reference):
        _, rho, T = reference
        m = exact_moments(T)
        for keep in ([1], [2, 3], [1, 2, 4]):
            mask = sum(1 << (q - 1) for q in keep)
            assert subset_purity(m, mask)[0] == pytest.approx(rho.partial_trace(keep).purity(), abs=1e-10)


class TestTightness:
    def test_two_qubits(self):
        for p in PS:
            w, P = full_witness(boundary_state(2, p))
            assert w == pytest.approx((1 - (2 * p - 1) ** 4) / 9, abs=1e-12)
            assert w == pytest.approx(bisep_bound(2, P), abs=1e-12)

    def test_three_qubits(self):
        for p in PS:
            w, P = full_witness(boundary_state(3, p))
            assert w == pytest.approx(2 * (1 - (2 * p - 1) ** 4) / 27, abs=1e-12)
            assert P >= 0.5 - 1e-12
            assert w == pytest.approx(bisep_bound(3, P), abs=1e-12)

    def test_four_qubits(self):
        for p in PS:
            w, P = full_witness(boundary_state(4, p))
            assert P == pytest.approx(1 - 1.5 * p * (1 - p), abs=1e-12)
            assert P >= 5 / 8 - 1e-12
            assert w == pytest.approx(bisep_bound(4, P), abs=1e-12)


class TestStrengthExample:
    @pytest.fixture
    def state(self):
        s3 = np.sqrt(3)
        e = np.zeros((4, 4))
        e[0, 0] = 1
        e[1, 1] = e[2, 2] = 1 / s3
        e[3, 3] = -1 / s3
        e[0, 3] = (-3 + s3 + np.sqrt(2) * 3**0.75) / 6
        e[3, 0] = (-3 + s3 - np.sqrt(2) * 3**0.75) / 6
        return state_from_tensor(CorrelationTensor(e))

    def test_old_criterion_silent(self, state):
        m12 = exact_moments(correlation_tensor(state))[3].value
        assert 9 * m12 == pytest.approx(1, abs=1e-12)

    def test_new_criterion_violated(self, state):
        w, P = full_witness(state)
        assert w - bisep_bound(2, P) > 0
        assert exact_report(correlation_tensor(state)).verdict == DETECTED


class TestReports:
    def test_ghz_exact(self):
        rep = exact_report(correlation_tensor(make_reference_state("ghz")))
        assert rep.detected_subsets() == [0b1111]
        assert rep.full.bound == pytest.approx(0, abs=1e-12)

    def test_trisep_exact(self):
        rep = exact_report(correlation_tensor(make_reference_state("trisep")))
        assert rep.detected_subsets() == [0b0011]
        assert rep.witness == pytest.approx(-2 / 27, abs=1e-12)
        assert rep.subsets[0b0100].purity == pytest.approx(1)
        assert rep.subsets[0b1000].purity == pytest.approx(1)

    def test_bisep_exact(self):
        rep = exact_report(correlation_tensor(make_reference_state("bisep", 0.2)))
        assert rep.detected_subsets() == [0b0011, 0b1100]

    def test_cluster_exact(self):
        rep = exact_report(correlation_tensor(make_reference_state("cluster")))
        assert rep.witness == pytest.approx(4 / 81, abs=1e-12)
        assert rep.verdict == DETECTED

    def test_maximally_mixed_sampled(self):
        ds = run_experiment(DensityMatrix.maximally_mixed(4), 2000, 475, seed=3)
        assert witness_report(ds).detected_subsets() == []

    def test_ghz_sampled(self):
        ds = run_experiment(make_reference_state("ghz"), 10_000, 475, seed=17)
        rep = witness_report(ds)
        assert rep.verdict == DETECTED
        assert not any(rep.subsets[m].detected for m in (0b0111, 0b1011, 0b1101, 0b1110))

    def test_lu_invariance(self, reference, rng):
        _, rho, T = reference
        before = exact_report(T)
        after = exact_report(correlation_tensor(apply_local_unitaries(rho, [haar_local_unitary(rng) for _ in range(4)])))
        for mask, r in before.subsets.items():
            a = after.subsets[mask]
            assert a.purity == pytest.approx(r.purity, abs=1e-10)
            if r.witness is not None:
                assert a.witness == pytest.approx(r.witness, abs=1e-10)
            assert a.verdict == r.verdict
