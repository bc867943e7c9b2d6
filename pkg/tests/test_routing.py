import random

import pytest

from conftest import make_backend, random_program
from qmultiprog import fixtures
from qmultiprog.circuit import Gate, QuantumProgram, parse_program
from qmultiprog.hardware import UnreachableError, shortest_paths
from qmultiprog.routing import (
    FREE,
    GlobalMapping,
    RoutingError,
    UnroutableProgramError,
    baseline_route,
    decompose,
    gain,
    obtain_swaps,
    swap_score,
    verify_equivalence,
    verify_schedule,
    xswap_route,
)


# --- mapping -----------------------------------------------------------------


def test_global_mapping_owner_and_swap():
    mapping = GlobalMapping([{0: 0, 1: 1}, {0: 3}], n_phys=4)
    assert mapping.owner_of(0) == 0
    assert mapping.owner_of(3) == 1
    assert mapping.owner_of(2) == FREE
    mapping.apply_swap(1, 2)  # move a logical qubit onto a free qubit
    assert mapping.phys(0, 1) == 2
    assert mapping.owner_of(1) == FREE
    mapping.apply_swap(2, 3)  # exchange occupants of two programs
    assert mapping.phys(0, 1) == 3
    assert mapping.phys(1, 0) == 2


def test_global_mapping_rejects_overlap():
    with pytest.raises(ValueError):
        GlobalMapping([{0: 0}, {0: 0}], n_phys=2)
    with pytest.raises(ValueError):
        GlobalMapping([{0: 0, 1: 0}], n_phys=2)


# --- heuristics ----------------------------------------------------------------


def test_gain_on_crossed_grid():
    programs, mapping, backend = fixtures.shortcut_swap_instance()
    full = shortest_paths(backend.graph)
    own = shortest_paths(backend.graph, set(mapping.region(0)))
    blocked = programs[0].gates[-1]
    assert full.hops(0, 8) == 2
    assert own.hops(0, 8) == 4
    assert gain(blocked, mapping.sigmas[0], full, own) == 2


def test_gain_zero_when_alone_or_adjacent():
    backend = make_backend(4, [(0, 1), (1, 2), (2, 3)])
    program = parse_program("qreg q[2]; cx q[0],q[1];", name="adj")
    mapping = GlobalMapping([{0: 0, 1: 1}], n_phys=4)
    full = shortest_paths(backend.graph)
    own = shortest_paths(backend.graph, set(range(4)))  # alone: everything allowed
    assert gain(program.gates[0], mapping.sigmas[0], full, own) == 0


def test_gain_raises_on_unreachable():
    backend = make_backend(4, [(0, 1), (1, 2), (2, 3)])
    program = parse_program("qreg q[2]; cx q[0],q[1];", name="far")
    mapping = GlobalMapping([{0: 0, 1: 3}], n_phys=4)
    full = shortest_paths(backend.graph)
    own = shortest_paths(backend.graph, {0, 3})  # disconnected restriction
    with pytest.raises(UnreachableError):
        gain(program.gates[0], mapping.sigmas[0], full, own)


def test_obtain_swaps_crossed_grid_candidates():
    programs, mapping, backend = fixtures.shortcut_swap_instance()
    blocked = programs[0].gates[-1]
    swaps = obtain_swaps([(0, blocked)], backend.graph, mapping)
    keys = [s.key() for s in swaps]
    # edges incident to the blocked operands (phys 0 and 8), owners ignored
    assert keys == [(0, 1), (0, 3), (0, 4), (4, 8), (5, 8), (7, 8)]
    by_key = {s.key(): s for s in swaps}
    assert by_key[(0, 4)].swap_class == "inter"
    assert by_key[(0, 1)].swap_class == "intra"


def test_obtain_swaps_path_chip():
    backend = make_backend(3, [(0, 1), (1, 2)])
    program = parse_program("qreg q[2]; cx q[0],q[1];", name="p")
    mapping = GlobalMapping([{0: 0, 1: 2}], n_phys=3)
    swaps = obtain_swaps([(0, program.gates[0])], backend.graph, mapping)
    assert [s.key() for s in swaps] == [(0, 1), (1, 2)]
    assert obtain_swaps([], backend.graph, mapping) == []


def test_score_prefers_shortcut_swap():
    programs, mapping, backend = fixtures.shortcut_swap_instance()
    full = shortest_paths(backend.graph)
    own = [
        shortest_paths(backend.graph, set(mapping.region(i)) | set(mapping.free_qubits()))
        for i in range(2)
    ]
    blocked = programs[0].gates[-1]
    fronts = [[blocked], []]
    candidates = obtain_swaps([(0, blocked)], backend.graph, mapping)
    scores = {
        s.key(): swap_score(s, fronts, mapping, full, own, gain_cap=backend.n_qubits)
        for s in candidates
    }
    # the two shortcut swaps on the 0-4-8 path win; ties resolve to (0, 4)
    assert scores[(0, 4)] == min(scores.values())
    assert scores[(0, 4)] == pytest.approx(scores[(4, 8)])
    assert all(scores[k] > scores[(0, 4)] for k in scores if k not in ((0, 4), (4, 8)))


# --- routers ---------------------------------------------------------------------


def test_boundary_swap_instance_regression():
    programs, mapping, backend = fixtures.boundary_swap_instance()
    joint = xswap_route(programs, mapping, backend)
    split = baseline_route(programs, mapping, backend)
    assert joint.swap_count == 1
    assert joint.swaps_by_class() == {"intra": 0, "inter": 1, "free": 0}
    assert split.swap_count == 2
    assert split.swaps_by_class() == {"intra": 2, "inter": 0, "free": 0}
    assert decompose(joint).stats["added_cnots"] == 3
    assert decompose(split).stats["added_cnots"] == 6


def test_shortcut_swap_instance_regression():
    programs, mapping, backend = fixtures.shortcut_swap_instance()
    joint = xswap_route(programs, mapping, backend)
    split = baseline_route(programs, mapping, backend)
    assert joint.swap_count == 1
    [swap] = joint.swaps()
    assert swap.key() == (0, 4)  # on the 2-hop shortcut path
    assert swap.swap_class == "inter"
    assert split.swap_count == 3
    assert all(s.swap_class == "intra" for s in split.swaps())


def test_adjacent_program_needs_no_swaps():
    backend = make_backend(4, [(0, 1), (1, 2), (2, 3)])
    program = parse_program(
        "qreg q[4]; h q[0]; cx q[0],q[1]; cx q[1],q[2]; cx q[2],q[3];", name="adj"
    )
    mapping = GlobalMapping([{i: i for i in range(4)}], n_phys=4)
    schedule = xswap_route([program], mapping, backend)
    assert schedule.swap_count == 0
    assert baseline_route([program], mapping, backend).swap_count == 0


def test_every_gate_scheduled_exactly_once():
    programs, mapping, backend = fixtures.boundary_swap_instance()
    schedule = xswap_route(programs, mapping, backend)
    seen = set()
    for event in schedule.events:
        if hasattr(event, "gate_id"):
            key = (event.program, event.gate_id)
            assert key not in seen
            seen.add(key)
    expected = {(i, g.id) for i, p in enumerate(programs) for g in p.gates}
    assert seen == expected


@pytest.mark.parametrize("router", [xswap_route, baseline_route])
def test_per_program_event_order_is_topological(router):
    for instance in (fixtures.boundary_swap_instance, fixtures.shortcut_swap_instance):
        programs, mapping, backend = instance()
        schedule = router(programs, mapping, backend)
        from qmultiprog.circuit import build_dag

        for i, program in enumerate(programs):
            order = [e.gate_id for e in schedule.events
                     if hasattr(e, "gate_id") and e.program == i]
            position = {gid: k for k, gid in enumerate(order)}
            dag = build_dag(program)
            for u, v in dag.edges:
                assert position[u] < position[v]


def test_schedules_are_deterministic():
    programs, mapping, backend = fixtures.shortcut_swap_instance()
    a = xswap_route(programs, mapping, backend).to_json()
    b = xswap_route(programs, mapping, backend).to_json()
    assert a == b
    c = baseline_route(programs, mapping, backend).to_json()
    d = baseline_route(programs, mapping, backend).to_json()
    assert c == d


def test_joint_router_never_beaten_on_fixtures():
    for instance in (fixtures.boundary_swap_instance, fixtures.shortcut_swap_instance):
        programs, mapping, backend = instance()
        joint = xswap_route(programs, mapping, backend)
        split = baseline_route(programs, mapping, backend)
        assert joint.swap_count <= split.swap_count


def test_routers_identical_when_region_covers_chip():
    backend = make_backend(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    program = random_program("whole", 5, 12, 6, seed=42)
    mapping = GlobalMapping([{i: i for i in range(5)}], n_phys=5)
    joint = xswap_route([program], mapping, backend)
    split = baseline_route([program], mapping, backend)
    assert [s.key() for s in joint.swaps()] == [s.key() for s in split.swaps()]
    assert joint.swap_count == split.swap_count


def test_lone_program_partial_region_dominance():
    # free qubits can only help the joint router
    backend = make_backend(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)])
    program = random_program("part", 4, 10, 4, seed=43)
    mapping = GlobalMapping([{0: 0, 1: 1, 2: 2, 3: 3}], n_phys=6)
    joint = xswap_route([program], mapping, backend)
    split = baseline_route([program], mapping, backend)
    assert joint.swap_count <= split.swap_count


@pytest.mark.parametrize("router", [xswap_route, baseline_route])
def test_forced_walk_fallback_still_correct(router):
    # stall_limit=0 makes every blocked step take the deterministic
    # shortest-path walk instead of the scored candidates
    for instance in (fixtures.boundary_swap_instance, fixtures.shortcut_swap_instance):
        programs, mapping, backend = instance()
        schedule = router(programs, mapping, backend, stall_limit=0)
        seen = {(e.program, e.gate_id) for e in schedule.events if hasattr(e, "gate_id")}
        assert seen == {(i, g.id) for i, p in enumerate(programs) for g in p.gates}
        ok, _ = verify_schedule(schedule)
        assert ok
        again = router(programs, mapping, backend, stall_limit=0)
        assert schedule.to_json() == again.to_json()


def test_baseline_unroutable_region_reported():
    backend = make_backend(4, [(0, 1), (1, 2), (2, 3)])
    program = parse_program("qreg q[2]; cx q[0],q[1];", name="gap")
    mapping = GlobalMapping([{0: 0, 1: 3}], n_phys=4)  # region {0,3} has no path
    with pytest.raises(UnroutableProgramError) as err:
        baseline_route([program], mapping, backend)
    assert "gap" in str(err.value)
    # the joint router routes it through the free middle qubits
    schedule = xswap_route([program], mapping, backend)
    assert schedule.swap_count > 0
    assert verify_schedule(schedule)[0]


# --- decomposition ------------------------------------------------------------------


def test_decompose_single_swap_three_cnots():
    backend = make_backend(3, [(0, 1), (1, 2)])
    program = parse_program("qreg q[2]; cx q[0],q[1];", name="one")
    mapping = GlobalMapping([{0: 0, 1: 2}], n_phys=3)
    schedule = xswap_route([program], mapping, backend)
    assert schedule.swap_count == 1
    compiled = decompose(schedule)
    cnots = [g for g in compiled.combined.gates if g.kind == "cx"]
    assert len(cnots) == 4  # 3 from the swap + the program's own
    assert compiled.stats["post_gates"] == program.gate_count + 3


def test_decompose_stats_partition_swaps():
    programs, mapping, backend = fixtures.boundary_swap_instance()
    compiled = decompose(xswap_route(programs, mapping, backend))
    per = compiled.stats["per_program"]
    assert sum(p["swaps"] for p in per) == compiled.stats["swaps"]
    for p, program in zip(per, programs):
        assert p["post_gates"] == program.gate_count + 3 * p["swaps"]
    total = sum(p.gate_count for p in programs)
    assert compiled.stats["post_gates"] == total + 3 * compiled.stats["swaps"]


def test_decompose_rejects_corrupted_schedule():
    programs, mapping, backend = fixtures.boundary_swap_instance()
    schedule = xswap_route(programs, mapping, backend)
    # corrupt the final mapping: pretend a different permutation happened
    broken = schedule.final.clone()
    a, b = sorted(broken.sigmas[0])[:2]
    broken.sigmas[0][a], broken.sigmas[0][b] = broken.sigmas[0][b], broken.sigmas[0][a]
    from qmultiprog.routing import Schedule

    bad = Schedule(schedule.programs, schedule.events, schedule.initial, broken, backend)
    with pytest.raises(RoutingError):
        decompose(bad)


def test_measures_remapped_through_final_layout():
    backend = make_backend(3, [(0, 1), (1, 2)])
    program = parse_program(
        "qreg q[2]; creg c[2]; h q[0]; cx q[0],q[1]; measure q[0] -> c[0]; measure q[1] -> c[1];",
        name="meas",
    )
    mapping = GlobalMapping([{0: 0, 1: 2}], n_phys=3)
    schedule = xswap_route([program], mapping, backend)
    assert schedule.swap_count >= 1
    compiled = decompose(schedule)
    measures = [g for g in compiled.combined.gates if g.kind == "measure"]
    assert [g.qubits[0] for g in measures] == [
        schedule.final.phys(0, 0),
        schedule.final.phys(0, 1),
    ]
    # measures land at the very end of the compiled stream
    tail = compiled.combined.gates[-2:]
    assert all(g.kind == "measure" for g in tail)


# --- equivalence oracle ----------------------------------------------------------


@pytest.mark.parametrize("router", [xswap_route, baseline_route])
def test_equivalence_on_fixture_instances(router):
    for instance in (fixtures.boundary_swap_instance, fixtures.shortcut_swap_instance):
        programs, mapping, backend = instance()
        ok, tv = verify_schedule(router(programs, mapping, backend))
        assert ok
        assert tv <= 1e-9


def test_equivalence_mutation_negative_control():
    programs, mapping, backend = fixtures.boundary_swap_instance()
    schedule = xswap_route(programs, mapping, backend)
    compiled = decompose(schedule)
    gates = list(compiled.combined.gates)
    # drop the middle CNOT of the first swap triple: no longer a permutation
    swap_start = next(
        i for i in range(len(gates) - 2)
        if gates[i].kind == "cx" and gates[i + 1].kind == "cx"
        and gates[i].qubits == tuple(reversed(gates[i + 1].qubits))
    )
    del gates[swap_start + 1]
    corrupted = QuantumProgram(
        name="corrupted",
        n_qubits=compiled.combined.n_qubits,
        gates=tuple(Gate(g.kind, g.qubits, g.params, i) for i, g in enumerate(gates)),
    )
    layouts = [dict(s) for s in schedule.final.sigmas]
    ok, tv = verify_equivalence(programs, corrupted, layouts)
    assert not ok
    assert tv > 1e-6


def test_equivalence_identity_programs():
    backend = make_backend(4, [(0, 1), (1, 2), (2, 3)])
    p1 = parse_program("qreg q[1];", name="id1")
    p2 = parse_program("qreg q[1];", name="id2")
    mapping = GlobalMapping([{0: 0}, {0: 3}], n_phys=4)
    schedule = xswap_route([p1, p2], mapping, backend)
    ok, tv = verify_schedule(schedule)
    assert ok and tv == 0.0


def test_equivalence_cap():
    wide = QuantumProgram("wide", 13, ())
    from qmultiprog.sim import QubitCapExceeded

    with pytest.raises(QubitCapExceeded):
        verify_equivalence([wide], wide, [{q: q for q in range(13)}], limit=12)


@pytest.mark.parametrize("seed", range(6))
def test_random_colocations_verify(seed):
    rng = random.Random(seed)
    backend = fixtures.load_fixture_backend("cross9")
    p1 = random_program(f"ra{seed}", 3, rng.randint(3, 8), rng.randint(2, 6), seed=seed)
    p2 = random_program(f"rb{seed}", 3, rng.randint(3, 8), rng.randint(2, 6), seed=seed + 50)
    mapping = GlobalMapping([{0: 0, 1: 1, 2: 2}, {0: 6, 1: 7, 2: 8}], n_phys=9)
    for router in (xswap_route, baseline_route):
        schedule = router([p1, p2], mapping, backend)
        ok, tv = verify_schedule(schedule)
        assert ok, f"{router.__name__} failed at tv={tv}"


def _with_measures_and_barrier(program):
    gates = list(program.gates)
    gates.append(Gate("barrier", tuple(range(program.n_qubits)), (), len(gates)))
    for q in range(program.n_qubits):
        gates.append(Gate("measure", (q,), (), len(gates)))
    return QuantumProgram(program.name + "_m", program.n_qubits, tuple(gates))


@pytest.mark.parametrize("seed", range(8))
def test_pipeline_stress_three_programs_with_measures(seed):
    rng = random.Random(1000 + seed)
    backend = fixtures.load_fixture_backend("cross9")
    programs = [
        _with_measures_and_barrier(
            random_program(f"s{seed}_{k}", sizes, rng.randint(2, 9), rng.randint(1, 5), seed=rng.randrange(1 << 30))
        )
        for k, sizes in enumerate((3, 2, 3))
    ]
    # scattered layout with one free qubit (phys 4, the hub)
    mapping = GlobalMapping(
        [{0: 0, 1: 1, 2: 2}, {0: 3, 1: 6}, {0: 5, 1: 7, 2: 8}], n_phys=9
    )
    for router in (xswap_route, baseline_route):
        schedule = router(programs, mapping, backend)
        compiled = decompose(schedule)
        measures = [g for g in compiled.combined.gates if g.kind == "measure"]
        assert len(measures) == 8
        ok, tv = verify_schedule(schedule)
        assert ok, f"{router.__name__} seed={seed} tv={tv}"
