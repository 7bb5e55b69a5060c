import numpy as np
import pytest

import holevo_lab as hl


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def eb_channel():
    """A fixed non-trivial measure-and-prepare qubit channel."""
    povm = [
        hl.HermitianOperator(np.array([[0.7, 0.2], [0.2, 0.4]], dtype=complex)),
        hl.HermitianOperator(np.array([[0.3, -0.2], [-0.2, 0.6]], dtype=complex)),
    ]
    outs = [
        hl.DensityOperator(np.array([[0.9, 0.1], [0.1, 0.1]], dtype=complex)),
        hl.DensityOperator.diagonal([0.2, 0.8]),
    ]
    return hl.measure_prepare(povm, outs)


def pure2(a, b):
    return hl.DensityOperator.pure(np.array([a, b], dtype=complex))
