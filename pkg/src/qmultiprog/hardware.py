"""Chip model: coupling graph, calibration data, hop-distance matrices and
synthetic backend generation.

Distances are unweighted hop counts. Noise awareness enters through the
partitioning reward and the fidelity estimates, never through distances, so
SWAP-count arithmetic stays exact. Everything here is immutable after
construction and safe to share across threads.
"""
from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass
from pathlib import Path

Edge = tuple[int, int]


def _norm_edge(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


class UnreachableError(ValueError):
    """Raised when arithmetic is attempted on an unreachable distance."""


@dataclass(frozen=True)
class CouplingGraph:
    """Undirected connectivity of a chip's physical qubits."""

    n_qubits: int
    edges: frozenset[Edge]

    def __post_init__(self):
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop on qubit {a}")
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise ValueError(f"edge ({a},{b}) out of range")
            if a > b:
                raise ValueError("edges must be stored as (low, high) pairs")

    @staticmethod
    def from_pairs(n_qubits: int, pairs) -> "CouplingGraph":
        return CouplingGraph(n_qubits, frozenset(_norm_edge(a, b) for a, b in pairs))

    def neighbors(self, q: int) -> list[int]:
        out = [b for a, b in self.edges if a == q] + [a for a, b in self.edges if b == q]
        return sorted(out)

    def has_edge(self, a: int, b: int) -> bool:
        return _norm_edge(a, b) in self.edges

    def degree(self, q: int) -> int:
        return len(self.neighbors(q))

    def is_connected(self) -> bool:
        if self.n_qubits == 0:
            return False
        seen = {0}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for w in self.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == self.n_qubits


@dataclass(frozen=True)
class Calibration:
    """Per-edge CNOT error rates plus per-qubit readout and one-qubit rates.

    Fidelity is always 1 - rate.
    """

    cnot_error: dict[Edge, float]
    readout_error: dict[int, float]
    oneq_error: dict[int, float]
    timestamp: str = ""

    def validate(self, graph: CouplingGraph):
        for e in graph.edges:
            if e not in self.cnot_error:
                raise ValueError(f"missing cnot_error for edge {e}")
        for q in range(graph.n_qubits):
            if q not in self.readout_error:
                raise ValueError(f"missing readout_error for qubit {q}")
            if q not in self.oneq_error:
                raise ValueError(f"missing oneq_error for qubit {q}")
        for label, rates in (
            ("cnot_error", self.cnot_error.values()),
            ("readout_error", self.readout_error.values()),
            ("oneq_error", self.oneq_error.values()),
        ):
            for r in rates:
                if not 0.0 <= r < 1.0:
                    raise ValueError(f"{label} rate {r} outside [0, 1)")

    def cnot_fidelity(self, a: int, b: int) -> float:
        return 1.0 - self.cnot_error[_norm_edge(a, b)]

    def readout_fidelity(self, q: int) -> float:
        return 1.0 - self.readout_error[q]

    def oneq_fidelity(self, q: int) -> float:
        return 1.0 - self.oneq_error[q]


@dataclass(frozen=True)
class Backend:
    """A chip: coupling graph plus one calibration snapshot."""

    graph: CouplingGraph
    calib: Calibration
    name: str = "backend"

    def __post_init__(self):
        self.calib.validate(self.graph)

    @property
    def n_qubits(self) -> int:
        return self.graph.n_qubits


@dataclass(frozen=True)
class DistanceMatrix:
    """All-pairs hop counts, possibly restricted to an allowed qubit subset.

    Entries involving excluded or mutually unreachable qubits hold ``None``;
    use :meth:`hops` when a finite distance is required.
    """

    n: int
    dist: tuple[tuple[int | None, ...], ...]

    def get(self, a: int, b: int) -> int | None:
        return self.dist[a][b]

    def hops(self, a: int, b: int) -> int:
        d = self.dist[a][b]
        if d is None:
            raise UnreachableError(f"no path between qubits {a} and {b} in the restriction")
        return d

    def reachable(self, a: int, b: int) -> bool:
        return self.dist[a][b] is not None


def shortest_paths(graph: CouplingGraph, allowed: set[int] | None = None) -> DistanceMatrix:
    """BFS hop distances within the subgraph induced by ``allowed``.

    With ``allowed=None`` every qubit participates (the chip-wide matrix);
    otherwise rows/columns outside ``allowed`` are ``None``.
    """
    universe = set(range(graph.n_qubits)) if allowed is None else set(allowed)
    adj: dict[int, list[int]] = {q: [] for q in universe}
    for a, b in graph.edges:
        if a in universe and b in universe:
            adj[a].append(b)
            adj[b].append(a)
    rows: list[tuple[int | None, ...]] = []
    for src in range(graph.n_qubits):
        row: list[int | None] = [None] * graph.n_qubits
        if src in universe:
            row[src] = 0
            queue = deque([src])
            while queue:
                v = queue.popleft()
                for w in adj[v]:
                    if row[w] is None:
                        row[w] = row[v] + 1
                        queue.append(w)
        rows.append(tuple(row))
    return DistanceMatrix(graph.n_qubits, tuple(rows))


# --- backend documents --------------------------------------------------------

_REQUIRED_FIELDS = ("n_qubits", "edges", "cnot_error", "readout_error", "oneq_error")


def load_backend(doc: dict) -> Backend:
    """Validate a backend description document (parsed JSON) into a Backend.

    Unknown extra fields (T1, T2, notes, ...) are accepted and ignored;
    missing required fields, disconnected graphs and out-of-range rates are
    rejected.
    """
    for f in _REQUIRED_FIELDS:
        if f not in doc:
            raise ValueError(f"backend document missing required field {f!r}")
    n = int(doc["n_qubits"])
    graph = CouplingGraph.from_pairs(n, [(int(a), int(b)) for a, b in doc["edges"]])
    if not graph.is_connected():
        raise ValueError("coupling graph is disconnected")
    cnot_error: dict[Edge, float] = {}
    for key, rate in doc["cnot_error"].items():
        a, b = key.split("-")
        cnot_error[_norm_edge(int(a), int(b))] = float(rate)
    readout = {q: float(r) for q, r in enumerate(doc["readout_error"])}
    oneq = {q: float(r) for q, r in enumerate(doc["oneq_error"])}
    calib = Calibration(cnot_error, readout, oneq, timestamp=str(doc.get("timestamp", "")))
    return Backend(graph=graph, calib=calib, name=str(doc.get("name", "backend")))


def load_backend_file(path) -> Backend:
    return load_backend(json.loads(Path(path).read_text()))


def backend_to_doc(backend: Backend) -> dict:
    return {
        "name": backend.name,
        "n_qubits": backend.n_qubits,
        "edges": [list(e) for e in sorted(backend.graph.edges)],
        "cnot_error": {f"{a}-{b}": backend.calib.cnot_error[(a, b)] for a, b in sorted(backend.graph.edges)},
        "readout_error": [backend.calib.readout_error[q] for q in range(backend.n_qubits)],
        "oneq_error": [backend.calib.oneq_error[q] for q in range(backend.n_qubits)],
        "timestamp": backend.calib.timestamp,
    }


def random_backend(topology: CouplingGraph, base: Calibration, seed: int, name: str = "random") -> Backend:
    """Draw a synthetic calibration for ``topology``, uniformly per category
    within the min/max range observed in ``base``. Deterministic in ``seed``."""
    rng = random.Random(seed)

    def bounds(values) -> tuple[float, float]:
        vals = list(values)
        if not vals:
            raise ValueError("base calibration has an empty rate category")
        lo, hi = min(vals), max(vals)
        if lo > hi:
            raise ValueError("degenerate base calibration (min > max)")
        return lo, hi

    c_lo, c_hi = bounds(base.cnot_error.values())
    r_lo, r_hi = bounds(base.readout_error.values())
    o_lo, o_hi = bounds(base.oneq_error.values())
    cnot = {e: rng.uniform(c_lo, c_hi) for e in sorted(topology.edges)}
    readout = {q: rng.uniform(r_lo, r_hi) for q in range(topology.n_qubits)}
    oneq = {q: rng.uniform(o_lo, o_hi) for q in range(topology.n_qubits)}
    calib = Calibration(cnot, readout, oneq, timestamp=f"synthetic-seed-{seed}")
    return Backend(graph=topology, calib=calib, name=name)
