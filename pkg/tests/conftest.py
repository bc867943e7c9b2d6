import random

import pytest

from qmultiprog import fixtures
from qmultiprog.circuit import Gate, QuantumProgram
from qmultiprog.hardware import Backend, Calibration, CouplingGraph


def make_backend(n, pairs, cnot=0.02, readout=0.03, oneq=0.001, name="chip"):
    """Backend with uniform (or per-item dict) calibration over given edges."""
    graph = CouplingGraph.from_pairs(n, pairs)
    cnot_map = {e: cnot for e in graph.edges} if not isinstance(cnot, dict) else dict(cnot)
    ro_map = {q: readout for q in range(n)} if not isinstance(readout, dict) else dict(readout)
    oneq_map = {q: oneq for q in range(n)} if not isinstance(oneq, dict) else dict(oneq)
    return Backend(graph=graph, calib=Calibration(cnot_map, ro_map, oneq_map, "test"), name=name)


def random_program(name, n_qubits, n_cnot, n_1q, seed):
    """Seeded random circuit over the supported gate alphabet."""
    rng = random.Random(seed)
    kinds = ["h", "t", "tdg", "x", "s"]
    gates = []
    cx, oneq = n_cnot, n_1q
    while cx or oneq:
        if rng.randrange(cx + oneq) < cx:
            a = rng.randrange(n_qubits)
            b = rng.randrange(n_qubits - 1)
            if b >= a:
                b += 1
            gates.append(Gate("cx", (a, b), (), id=len(gates)))
            cx -= 1
        else:
            gates.append(Gate(rng.choice(kinds), (rng.randrange(n_qubits),), (), id=len(gates)))
            oneq -= 1
    return QuantumProgram(name=name, n_qubits=n_qubits, gates=tuple(gates))


def random_graph(n, seed, extra_edge_prob=0.3):
    """Connected random graph on n nodes (spanning tree plus extras)."""
    rng = random.Random(seed)
    nodes = list(range(n))
    rng.shuffle(nodes)
    pairs = set()
    for i in range(1, n):
        a = nodes[i]
        b = nodes[rng.randrange(i)]
        pairs.add((min(a, b), max(a, b)))
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in pairs and rng.random() < extra_edge_prob:
                pairs.add((a, b))
    return CouplingGraph.from_pairs(n, pairs)


@pytest.fixture(scope="session")
def london():
    return fixtures.load_fixture_backend("london")


@pytest.fixture(scope="session")
def tokyo20():
    return fixtures.load_fixture_backend("tokyo20")


@pytest.fixture(scope="session")
def melbourne():
    return fixtures.load_fixture_backend("melbourne")
