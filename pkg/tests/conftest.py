import numpy as np
import pytest

from qfilter import DensityOperator, ErrorModel, KrausFamily, MeasurementStep


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def projective_family():
    """Measurement in the computational basis of a two-level system."""
    return KrausFamily(
        [np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)],
        completeness_tolerance=1e-12,
        labels=["down", "up"],
    )


@pytest.fixture
def noisy_readout():
    """Symmetric 10% readout error on two outcomes."""
    return ErrorModel([[0.9, 0.1], [0.1, 0.9]])


@pytest.fixture
def two_level_step(projective_family, noisy_readout):
    return MeasurementStep(projective_family, noisy_readout, label="two-level")


@pytest.fixture
def mixed_qubit():
    return DensityOperator(np.eye(2) / 2)
