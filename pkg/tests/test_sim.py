import math
import random

import numpy as np
import pytest

from conftest import make_backend, random_program
from qmultiprog import fixtures
from qmultiprog.circuit import Gate, QuantumProgram, parse_program
from qmultiprog.sim import (
    QubitCapExceeded,
    apply_gate,
    distribution_vector,
    gate_matrix,
    marginal_distribution,
    modal_outcome,
    noisy_output_distribution,
    noisy_success_probability,
    output_distribution,
    simulate_statevector,
    total_variation,
)


def state(n, index=0):
    vec = np.zeros(2 ** n, dtype=complex)
    vec[index] = 1.0
    return vec


def test_x_flips_zero():
    out = apply_gate(state(1), Gate("x", (0,), (), 0))
    assert out[1] == pytest.approx(1.0)


def test_cnot_flips_target_when_control_set():
    # state |control=1, target=0> on qubits (1, 0): index 0b10 = 2
    out = apply_gate(state(2, index=2), Gate("cx", (1, 0), (), 0))
    assert out[3] == pytest.approx(1.0)  # -> |11>
    # control clear: nothing happens
    out = apply_gate(state(2, index=1), Gate("cx", (1, 0), (), 0))
    assert out[1] == pytest.approx(1.0)


def test_little_endian_convention():
    # x on qubit 0 sets the least significant bit
    out = apply_gate(state(2), Gate("x", (0,), (), 0))
    assert out[1] == pytest.approx(1.0)
    out = apply_gate(state(2), Gate("x", (1,), (), 0))
    assert out[2] == pytest.approx(1.0)


def test_hadamard_involution():
    psi = state(1)
    for _ in range(2):
        psi = apply_gate(psi, Gate("h", (0,), (), 0))
    assert abs(psi[0] - 1.0) < 1e-12


def test_measure_has_no_unitary():
    with pytest.raises(ValueError):
        apply_gate(state(1), Gate("measure", (0,), (), 0))


def test_norm_preserved_over_many_random_gates():
    rng = random.Random(2024)
    n = 4
    psi = state(n)
    kinds_1q = ["h", "x", "y", "z", "s", "sdg", "t", "tdg"]
    for i in range(10_000):
        if rng.random() < 0.3:
            a = rng.randrange(n)
            b = (a + rng.randrange(1, n)) % n
            psi = apply_gate(psi, Gate("cx", (a, b), (), i))
        elif rng.random() < 0.5:
            psi = apply_gate(psi, Gate(rng.choice(kinds_1q), (rng.randrange(n),), (), i))
        else:
            params = tuple(rng.uniform(0, 2 * math.pi) for _ in range(3))
            psi = apply_gate(psi, Gate("u3", (rng.randrange(n),), params, i))
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-12


def expand_unitary(gate, n):
    """Independent oracle: full 2^n matrix via kron / explicit permutation."""
    if gate.kind == "cx":
        control, target = gate.qubits
        dim = 2 ** n
        mat = np.zeros((dim, dim), dtype=complex)
        for i in range(dim):
            j = i ^ (((i >> control) & 1) << target)
            mat[j, i] = 1.0
        return mat
    m = gate_matrix(gate)
    q = gate.qubits[0]
    return np.kron(np.eye(2 ** (n - 1 - q)), np.kron(m, np.eye(2 ** q)))


@pytest.mark.parametrize("seed", range(10))
def test_simulator_matches_matrix_chain(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 3)
    program = random_program(f"mc{seed}", n, 5 if n > 1 else 0, 8, seed=seed)
    psi = simulate_statevector(program)
    full = np.eye(2 ** n, dtype=complex)
    for g in program.gates:
        full = expand_unitary(g, n) @ full
    oracle = full @ state(n)
    assert np.allclose(psi, oracle, atol=1e-12)


def test_bv_marginal_is_point_mass():
    program = fixtures.load_benchmark("bv_n3")
    probs = distribution_vector(program)
    data = marginal_distribution(probs, 3, [0, 1])
    assert data[0b11] == pytest.approx(1.0, abs=1e-12)
    # the ancilla is left in superposition, so the full state is not a point mass
    full = output_distribution(program)
    assert set(full) == {"011", "111"}


def test_empty_circuit_distribution():
    program = parse_program("qreg q[2];", name="empty")
    assert output_distribution(program) == {"00": 1.0}


def test_single_hadamard_distribution():
    program = parse_program("qreg q[1]; h q[0];")
    dist = output_distribution(program)
    assert dist["0"] == pytest.approx(0.5)
    assert dist["1"] == pytest.approx(0.5)


def test_distribution_prunes_tiny_entries():
    program = parse_program("qreg q[2]; h q[0];")
    dist = output_distribution(program)
    assert set(dist) == {"00", "01"}


def test_qubit_cap_enforced():
    program = QuantumProgram("wide", 13, ())
    with pytest.raises(QubitCapExceeded):
        output_distribution(program, cap=12)


@pytest.mark.parametrize("seed", range(5))
def test_permutation_covariance(seed):
    rng = random.Random(seed)
    n = 3
    program = random_program(f"perm{seed}", n, 4, 6, seed=100 + seed)
    perm = list(range(n))
    rng.shuffle(perm)
    relabeled = QuantumProgram(
        name="relabeled",
        n_qubits=n,
        gates=tuple(
            Gate(g.kind, tuple(perm[q] for q in g.qubits), g.params, g.id) for g in program.gates
        ),
    )
    p = distribution_vector(program)
    q = distribution_vector(relabeled)
    for idx in range(2 ** n):
        mapped = 0
        for bit in range(n):
            mapped |= ((idx >> bit) & 1) << perm[bit]
        assert q[mapped] == pytest.approx(p[idx], abs=1e-12)


def test_modal_outcome_unique_and_ambiguous():
    assert modal_outcome(np.array([0.1, 0.7, 0.2])) == 1
    assert modal_outcome(np.array([0.5, 0.5])) is None


def _three_qubit_instance():
    backend = make_backend(3, [(0, 1), (1, 2), (0, 2)], cnot=0.03, readout=0.02, oneq=0.002)
    program = fixtures.load_benchmark("toffoli_3")
    layout = {0: 0, 1: 1, 2: 2}
    ideal = distribution_vector(program)
    return backend, program, layout, ideal


def test_noisy_zero_error_matches_ideal_modal():
    backend = make_backend(3, [(0, 1), (1, 2), (0, 2)], cnot=0.0, readout=0.0, oneq=0.0)
    program = fixtures.load_benchmark("toffoli_3")
    ideal = distribution_vector(program)
    [pst] = noisy_success_probability(program, [{0: 0, 1: 1, 2: 2}], backend, [ideal])
    assert pst == pytest.approx(float(ideal[modal_outcome(ideal)]), abs=1e-12)


def test_noisy_ambiguous_modal_reports_none():
    # the hidden-string fixture leaves its ancilla in superposition, so the
    # full-state mode is ambiguous and the success rate is undefined
    backend = make_backend(3, [(0, 1), (1, 2), (0, 2)], cnot=0.0, readout=0.0, oneq=0.0)
    program = fixtures.load_benchmark("bv_n3")
    ideal = distribution_vector(program)
    [pst] = noisy_success_probability(program, [{0: 0, 1: 1, 2: 2}], backend, [ideal])
    assert pst is None


def test_noisy_degradation_is_strict():
    clean = make_backend(3, [(0, 1), (1, 2), (0, 2)], cnot=0.0, readout=0.0, oneq=0.0)
    broken = make_backend(3, [(0, 1), (1, 2), (0, 2)], cnot=0.9, readout=0.0, oneq=0.0)
    program = fixtures.load_benchmark("toffoli_3")
    ideal = distribution_vector(program)
    [clean_pst] = noisy_success_probability(program, [{0: 0, 1: 1, 2: 2}], clean, [ideal])
    [broken_pst] = noisy_success_probability(program, [{0: 0, 1: 1, 2: 2}], broken, [ideal])
    assert broken_pst < clean_pst


def test_noisy_distribution_normalized():
    backend, program, layout, ideal = _three_qubit_instance()
    dist = noisy_output_distribution(program, backend)
    assert dist.sum() == pytest.approx(1.0, abs=1e-10)
    assert (dist >= -1e-12).all()


def test_sampled_mode_agrees_with_exact_within_3_sigma():
    backend, program, layout, ideal = _three_qubit_instance()
    [exact] = noisy_success_probability(program, [layout], backend, [ideal], mode="exact")
    shots = 8024
    [sampled] = noisy_success_probability(
        program, [layout], backend, [ideal], mode="sampled", shots=shots, seed=11
    )
    sigma = math.sqrt(exact * (1 - exact) / shots)
    assert abs(sampled - exact) <= 3 * sigma


def test_total_variation_basic():
    assert total_variation(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(1.0)
    assert total_variation(np.array([0.5, 0.5]), np.array([0.5, 0.5])) == 0.0


def _depolarize_oracle(rho, q, n):
    dim = 2 ** n
    out = np.zeros_like(rho)
    for i in range(dim):
        for j in range(dim):
            if ((i >> q) & 1) == ((j >> q) & 1):
                bi, bj = i & ~(1 << q), j & ~(1 << q)
                out[i, j] += (rho[bi, bj] + rho[bi | (1 << q), bj | (1 << q)]) / 2
    return out


def _noisy_oracle(program, backend):
    """Dense-matrix re-implementation of the stochastic failure model."""
    n = program.n_qubits
    rho = np.zeros((2 ** n, 2 ** n), dtype=complex)
    rho[0, 0] = 1.0
    for g in program.gates:
        if g.kind in ("measure", "barrier"):
            continue
        full = expand_unitary(g, n)
        rho = full @ rho @ full.conj().T
        if g.kind == "cx":
            a, b = g.qubits
            err = backend.calib.cnot_error[(min(a, b), max(a, b))]
        else:
            err = backend.calib.oneq_error[g.qubits[0]]
        if err:
            mixed = rho.copy()
            for q in g.qubits:
                mixed = _depolarize_oracle(mixed, q, n)
            rho = (1 - err) * rho + err * mixed
    probs = np.real(np.diag(rho)).copy()
    for q in range(n):
        r = backend.calib.readout_error[q]
        flipped = np.array([probs[i ^ (1 << q)] for i in range(len(probs))])
        probs = (1 - r) * probs + r * flipped
    return probs


@pytest.mark.parametrize("name", ["toffoli_3", "fredkin_3", "bv_n3"])
def test_noisy_exact_matches_dense_oracle(name):
    backend = make_backend(3, [(0, 1), (1, 2), (0, 2)], cnot=0.04, readout=0.03, oneq=0.005)
    program = fixtures.load_benchmark(name)
    got = noisy_output_distribution(program, backend)
    assert np.allclose(got, _noisy_oracle(program, backend), atol=1e-12)
