"""End-to-end acceptance checks for the delivered functionality.

Each test verifies one headline requirement at its stated tolerance using
the public API only.
"""

from __future__ import annotations

import itertools
import math
import time

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.stats import unitary_group

from qsnn import core, fidelity, network, neurons, parameters

from conftest import random_state


def _neuron_report(kind: str, params, tol=1e-9) -> fidelity.FidelityReport:
    spec = neurons.make_spec(kind, params, (0, 1), 2)
    return fidelity.average_fidelity(
        neurons.neuron_unitary(spec, tol=tol),
        neurons.ideal_unitary(kind, params),
        neurons.protocol_subspace(kind, params),
    )


def test_01_excitation_neuron_fidelity():
    started = time.perf_counter()
    report = _neuron_report("excitation", parameters.solve_exc(8, 17))
    elapsed = time.perf_counter() - started
    assert report.f_avg == pytest.approx(0.9998, abs=5e-4)
    assert elapsed < 30.0


def test_02_excitation_neuron_leakage():
    report = _neuron_report("excitation", parameters.solve_exc(8, 17))
    assert report.leakage <= 5e-4


def test_03_phase_neuron_fidelity():
    f_3_82 = _neuron_report("phase", parameters.solve_phase(3, 82)).f_avg
    f_5_80 = _neuron_report("phase", parameters.solve_phase(5, 80)).f_avg
    assert f_3_82 == pytest.approx(0.9907, abs=3e-3)
    assert f_5_80 == pytest.approx(0.9638, abs=5e-3)


def test_04_tuned_phase_neuron_fidelity():
    started = time.perf_counter()
    from_3_82 = parameters.tune(
        parameters.solve_phase(3, 82), "phase", budget=300, seed=0
    )
    from_5_80 = parameters.tune(
        parameters.solve_phase(5, 80), "phase", budget=300, seed=0
    )
    elapsed = time.perf_counter() - started
    assert from_3_82.final_fidelity >= 0.9955
    assert from_5_80.final_fidelity >= 0.9905
    assert from_3_82.evaluations <= 300 and from_5_80.evaluations <= 300
    assert elapsed < 600.0


def test_05_truth_tables_per_state():
    exc = _neuron_report("excitation", parameters.solve_exc(8, 17))
    assert min(exc.per_state) >= 0.999
    phase = _neuron_report("phase", parameters.solve_phase(3, 82))
    assert min(phase.per_state) >= 0.985


def test_06_spectrum_oracles():
    # Excitation/final closed form is exact for every tested parameter set.
    for k, l in ((3, 5), (8, 17), (20, 29)):
        spec = neurons.make_spec(
            "excitation", parameters.solve_exc(k, l), (0, 1), 2
        )
        assert neurons.spectrum_report(spec).max_deviation < 1e-10
    # The phase neuron's positive-sign block has exact eigenvalues J ± delta.
    for m, n in ((3, 82), (5, 80), (2, 40)):
        params = parameters.solve_phase(m, n)
        ham = neurons.build_phase_hamiltonian(params)
        static = core.TimeDependentHamiltonian(3, ham.static_terms, ())
        down = np.array([1.0, 0.0], dtype=complex)
        up = np.array([0.0, 1.0], dtype=complex)
        basis = np.array(
            [
                np.kron(core.BELL_VECTORS[label], out)
                for label in ("Phi+", "Psi+")
                for out in (down, up)
            ]
        ).T
        block = basis.conj().T @ static.matrix(0.0) @ basis
        eigs = np.sort(np.linalg.eigvalsh(block))
        j, d = params.coupling_j, params.delta
        assert np.max(np.abs(eigs - np.sort([j - d] * 2 + [j + d] * 2))) < 1e-10


def test_07_network_truth_table():
    started = time.perf_counter()
    thresholds = {"reduced": (0.97, 0.03), "full": (0.95, 0.05)}
    for template, (diag_min, off_max) in thresholds.items():
        spec = network.template(template)
        for a, b in itertools.product(core.BELL_LABELS, repeat=2):
            p = network.output_excitation_probability(
                spec,
                (network.BellAmplitudes.pure(a), network.BellAmplitudes.pure(b)),
            )
            if a == b:
                assert p >= diag_min, (template, a, b, p)
            else:
                assert p <= off_max, (template, a, b, p)
    assert time.perf_counter() - started < 300.0


def test_08_measurement_back_action():
    spec = network.template("reduced")
    half = network.BellAmplitudes(
        0.0, 1 / math.sqrt(2), 1 / math.sqrt(2), 0.0
    )
    final = network.run(spec, (half, half))
    up = network.back_action(final, spec, "up")
    down = network.back_action(final, spec, "down")
    assert up.probability == pytest.approx(0.5, abs=0.03)
    assert up.branch_overlaps["matched"] >= 0.97
    assert down.branch_overlaps["mismatched"] >= 0.97


def test_09_comparison_kernel(rng):
    spec = network.template("reduced")
    for case in range(100):
        va = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        vb = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        a = network.BellAmplitudes.from_sequence(va / np.linalg.norm(va))
        b = network.BellAmplitudes.from_sequence(vb / np.linalg.norm(vb))
        closed = sum(
            abs(x) ** 2 * abs(y) ** 2
            for x, y in zip(a.as_tuple(), b.as_tuple())
        )
        assert network.bell_kernel(a, b) == closed
        if case < 3:
            assert network.simulated_bell_kernel(spec, a, b) == pytest.approx(
                closed, abs=0.03
            )


def test_10_numerical_integrity(rng):
    ham = neurons.build_exc_hamiltonian(parameters.solve_exc(8, 17))
    # Norm drift below 1e-9 on every run.
    for _ in range(5):
        state = random_state(3, rng)
        out = core.evolve(state, ham, math.pi, tol=1e-10)
        assert abs(out.norm() - 1.0) < 1e-9
    # Integrator matches the fine-step piecewise-exponential oracle.
    state = random_state(3, rng)
    fast = core.evolve(state, ham, math.pi / 3, tol=1e-11)
    oracle = core.piecewise_constant_evolve(
        state, ham, math.pi / 3, step=math.pi / 1e5
    )
    assert np.linalg.norm(fast.amplitudes - oracle.amplitudes) < 1e-7
    # Monte-Carlo fidelity oracle within 3 standard errors on 20 cases.
    basis = [np.eye(8)[:, i].astype(complex) for i in range(6)]
    for case in range(20):
        ideal = core.DenseOperator(unitary_group.rvs(8, random_state=case))
        herm = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        herm = (herm + herm.conj().T) / 2
        actual = core.DenseOperator(ideal.matrix @ expm(0.1j * herm))
        closed = fidelity.average_fidelity(actual, ideal, basis).f_avg
        mean, stderr = fidelity.mc_average_fidelity(
            actual, ideal, basis, n_samples=4000, seed=case
        )
        assert abs(mean - closed) <= 3 * max(stderr, 1e-12)


def test_11_final_layer_drive_equivalence():
    rot = parameters.make_final_params("detect_upup", 29, 15, 0)
    loc = parameters.make_final_params(
        "detect_upup", 29, 15, 0, drive_mode="local_field", omega=50.0
    )
    spec_rot = neurons.make_spec("final_upup", rot, (0, 1), 2)
    spec_loc = neurons.make_spec("final_upup", loc, (0, 1), 2)
    for bits in itertools.product((0, 1), repeat=2):
        state = core.StateVector.from_bits((*bits, 0))
        a = neurons.apply_neuron(state, spec_rot)
        b = neurons.apply_neuron(state, spec_loc)
        assert abs(a.overlap(b)) >= 0.99
