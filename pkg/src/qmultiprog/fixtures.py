"""Bundled benchmark circuits, chip descriptions and regression instances.

The two ``*_instance`` helpers reconstruct the small co-location scenarios
used throughout the test suite: two programs placed so that one crossing
SWAP (through a neighbor program or a spare qubit) replaces several SWAPs
confined to each program's own region.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from .circuit import QuantumProgram, parse_program
from .hardware import Backend, load_backend_file
from .routing import GlobalMapping


def _data_root() -> Path:
    return Path(str(resources.files("qmultiprog").joinpath("data")))


def benchmark_names() -> list[str]:
    return sorted(p.stem for p in (_data_root() / "benchmarks").glob("*.qasm"))


def benchmark_path(name: str) -> Path:
    path = _data_root() / "benchmarks" / f"{name}.qasm"
    if not path.exists():
        raise FileNotFoundError(f"no bundled benchmark named {name!r}")
    return path


def load_benchmark(name: str) -> QuantumProgram:
    return parse_program(benchmark_path(name).read_text(), name=name)


def backend_names() -> list[str]:
    return sorted(p.stem for p in (_data_root() / "backends").glob("*.backend"))


def backend_path(name: str) -> Path:
    path = _data_root() / "backends" / f"{name}.backend"
    if not path.exists():
        raise FileNotFoundError(f"no bundled backend named {name!r}")
    return path


def load_fixture_backend(name: str) -> Backend:
    return load_backend_file(backend_path(name))


def boundary_swap_instance() -> tuple[list[QuantumProgram], GlobalMapping, Backend]:
    """Two 3-qubit programs on the 2x3 grid chip.

    Each program has one blocked CNOT; routed separately each needs one SWAP
    in its own region (two total), while a single SWAP across the boundary
    (physical edge 1-4) unblocks both at once.
    """
    backend = load_fixture_backend("grid2x3")
    p1 = load_benchmark("boundary_p1")
    p2 = load_benchmark("boundary_p2")
    mapping = GlobalMapping(
        [{0: 1, 1: 0, 2: 3}, {0: 5, 1: 4, 2: 2}], n_phys=backend.n_qubits
    )
    return [p1, p2], mapping, backend


def shortcut_swap_instance() -> tuple[list[QuantumProgram], GlobalMapping, Backend]:
    """A 5-qubit and a 4-qubit program on the 9-qubit crossed-grid chip.

    The first program's last CNOT joins the two ends of its snake-shaped
    region (4 hops apart inside the region), but the chip's diagonal links
    offer a 2-hop path through the neighbor program's qubit 4, so one
    crossing SWAP replaces three region-confined ones.
    """
    backend = load_fixture_backend("cross9")
    p1 = load_benchmark("shortcut_p1")
    p2 = load_benchmark("shortcut_p2")
    mapping = GlobalMapping(
        [{0: 0, 1: 1, 2: 2, 3: 5, 4: 8}, {0: 3, 1: 6, 2: 7, 3: 4}],
        n_phys=backend.n_qubits,
    )
    return [p1, p2], mapping, backend
