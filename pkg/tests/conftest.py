"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from qsnn import core, neurons, parameters


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260826)


@pytest.fixture(scope="session")
def exc_8_17():
    return parameters.solve_exc(8, 17)


@pytest.fixture(scope="session")
def phase_3_82():
    return parameters.solve_phase(3, 82)


@pytest.fixture(scope="session")
def exc_spec(exc_8_17):
    return neurons.make_spec("excitation", exc_8_17, (0, 1), 2)


@pytest.fixture(scope="session")
def phase_spec(phase_3_82):
    return neurons.make_spec("phase", phase_3_82, (0, 1), 2)


def random_state(num_qubits: int, rng) -> core.StateVector:
    dim = 2**num_qubits
    amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    amps /= np.linalg.norm(amps)
    return core.StateVector(num_qubits, amps)


def bell_with_output(label: str, output_bit: int) -> core.StateVector:
    """Three-qubit state: Bell pair on qubits (0,1), |output_bit> on qubit 2."""
    out = core.StateVector(1, [1.0, 0.0] if output_bit == 0 else [0.0, 1.0])
    return core.bell_state(label).tensor(out)
