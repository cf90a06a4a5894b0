import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfilter import ErrorModel, sample_real_outcome, validate_error_model
from qfilter.errormodel import inverse_cdf_index
from qfilter.errors import (
    ColumnSumDeviationError,
    IndexOutOfRangeError,
    NegativeEntryError,
)
from qfilter.photonbox import PhotonBoxParams, detection_error_model


class TestValidation:
    def test_identity_is_valid(self):
        model = validate_error_model(np.eye(4))
        assert model.m_real == model.m_ideal == 4

    def test_column_sum_deviation_named(self):
        with pytest.raises(ColumnSumDeviationError) as err:
            validate_error_model([[0.9], [0.2]])
        assert err.value.col == 0
        assert err.value.deviation == pytest.approx(0.1, abs=1e-12)

    def test_negative_entry_named(self):
        with pytest.raises(NegativeEntryError) as err:
            validate_error_model([[1.1], [-0.1]])
        assert (err.value.row, err.value.col) == (1, 0)

    def test_detection_model_instance_columns(self):
        # evaluate the detection formulas and confirm every column is stochastic
        params = PhotonBoxParams(
            detection_efficiency=0.8, assign_error_g=0.1, assign_error_e=0.15
        )
        model = detection_error_model(params)
        assert np.abs(model.eta.sum(axis=0) - 1.0).max() < 1e-12

    @settings(max_examples=80, deadline=None)
    @given(
        seed=st.integers(0, 2**31 - 1),
        m_real=st.integers(1, 5),
        m_ideal=st.integers(1, 5),
        corrupt=st.booleans(),
    )
    def test_accepts_exactly_the_stochastic_matrices(
        self, seed, m_real, m_ideal, corrupt
    ):
        rng = np.random.default_rng(seed)
        eta = rng.random((m_real, m_ideal)) + 0.01
        eta /= eta.sum(axis=0)
        eta[-1, :] = 1.0 - eta[:-1, :].sum(axis=0)
        if not corrupt:
            validate_error_model(eta)  # must not raise
            return
        bad = eta.copy()
        p = int(rng.integers(m_real))
        q = int(rng.integers(m_ideal))
        if rng.random() < 0.5:
            bad[p, q] += 1e-6  # break the column sum
            with pytest.raises(ColumnSumDeviationError):
                validate_error_model(bad)
        else:
            bad[p, q] = -1e-9  # negative entry (checked first)
            with pytest.raises((NegativeEntryError, ColumnSumDeviationError)):
                validate_error_model(bad)


class TestSampling:
    def test_identity_model_is_deterministic(self, rng):
        model = ErrorModel.identity(4)
        assert all(sample_real_outcome(model, 2, rng) == 2 for _ in range(50))

    def test_index_out_of_range(self, rng):
        with pytest.raises(IndexOutOfRangeError):
            sample_real_outcome(ErrorModel.identity(3), 3, rng)

    def test_balanced_column_frequency(self):
        model = ErrorModel([[0.5, 0.0], [0.5, 1.0]])
        rng = np.random.default_rng(77)
        n = 10_000
        hits = sum(sample_real_outcome(model, 0, rng) == 0 for _ in range(n))
        sigma = np.sqrt(0.25 / n)
        assert abs(hits / n - 0.5) <= 3 * sigma

    def test_zero_entry_never_drawn(self):
        model = ErrorModel([[0.0, 1.0], [0.6, 0.0], [0.4, 0.0]])
        rng = np.random.default_rng(5)
        draws = {sample_real_outcome(model, 0, rng) for _ in range(100_000)}
        assert 0 not in draws

    def test_reproducible_bit_exact(self):
        model = ErrorModel([[0.3, 0.2], [0.7, 0.8]])
        rng_a = np.random.default_rng(99)
        rng_b = np.random.default_rng(99)
        seq_a = [sample_real_outcome(model, k % 2, rng_a) for k in range(200)]
        seq_b = [sample_real_outcome(model, k % 2, rng_b) for k in range(200)]
        assert seq_a == seq_b

    def test_residual_mass_goes_to_last_index(self):
        # u beyond the accumulated sum (cumulative rounding) selects the
        # final index; an exhausted-mass final entry is never hit otherwise
        assert inverse_cdf_index(np.array([0.5, 0.5]), 1.0 - 1e-16) == 1
        assert inverse_cdf_index(np.array([1.0, 0.0]), 1.0 - 1e-16) == 0
        assert inverse_cdf_index(np.array([0.3, 0.7 - 1e-6]), 1.0 - 1e-9) == 1
