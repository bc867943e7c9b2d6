"""Mapping transition: a joint router that may SWAP across program boundaries
and through free qubits, a per-program baseline router for comparison, SWAP
decomposition into CNOTs, and an exact-simulation equivalence check.

Both routers follow the same loop: execute every hardware-compliant gate,
then insert the best-scoring SWAP among candidates touching the blocked
critical gates, until nothing is left. They differ in the candidate set
(joint: any coupling edge incident to a blocked operand; baseline: edges
inside the program's own region) and in the score (the joint router gets a
bonus for SWAPs that shortcut a constraint across program boundaries).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .circuit import (
    BARRIER,
    CNOT,
    MEASURE,
    Dag,
    Gate,
    QuantumProgram,
    build_dag,
    critical_gates,
    front_layer,
    ready_gates,
)
from .hardware import Backend, DistanceMatrix, shortest_paths
from . import sim

FREE = -1


class RoutingError(RuntimeError):
    pass


class UnroutableProgramError(RoutingError):
    """A program's region cannot connect the operands of one of its CNOTs."""

    def __init__(self, program_name: str, detail: str):
        super().__init__(f"program {program_name!r} is unroutable: {detail}")
        self.program_name = program_name


class GlobalMapping:
    """Joint logical-to-physical placement of several programs.

    Each physical qubit hosts at most one (program, logical) occupant; the
    rest are free. Swaps exchange occupants (or move one onto a free qubit).
    """

    def __init__(self, sigmas, n_phys: int):
        self.n_phys = n_phys
        self.sigmas: list[dict[int, int]] = [dict(s) for s in sigmas]
        self._occupant: dict[int, tuple[int, int]] = {}
        for i, sigma in enumerate(self.sigmas):
            for logical, phys in sigma.items():
                if not 0 <= phys < n_phys:
                    raise ValueError(f"physical qubit {phys} out of range")
                if phys in self._occupant:
                    raise ValueError(f"physical qubit {phys} assigned twice")
                self._occupant[phys] = (i, logical)
            if len(set(sigma.values())) != len(sigma):
                raise ValueError(f"sigma of program {i} is not injective")

    def clone(self) -> "GlobalMapping":
        return GlobalMapping(self.sigmas, self.n_phys)

    def phys(self, program: int, logical: int) -> int:
        return self.sigmas[program][logical]

    def owner_of(self, phys: int) -> int:
        occ = self._occupant.get(phys)
        return FREE if occ is None else occ[0]

    def occupant(self, phys: int) -> tuple[int, int] | None:
        return self._occupant.get(phys)

    def region(self, program: int) -> frozenset[int]:
        return frozenset(self.sigmas[program].values())

    def free_qubits(self) -> frozenset[int]:
        return frozenset(p for p in range(self.n_phys) if p not in self._occupant)

    def apply_swap(self, a: int, b: int):
        occ_a, occ_b = self._occupant.pop(a, None), self._occupant.pop(b, None)
        if occ_b is not None:
            self._occupant[a] = occ_b
            self.sigmas[occ_b[0]][occ_b[1]] = a
        if occ_a is not None:
            self._occupant[b] = occ_a
            self.sigmas[occ_a[0]][occ_a[1]] = b

    def to_doc(self) -> dict:
        return {
            "n_phys": self.n_phys,
            "sigmas": [{str(k): v for k, v in sorted(s.items())} for s in self.sigmas],
        }


@dataclass(frozen=True)
class SwapOp:
    """A SWAP on a coupling edge, classified by who owned its endpoints when
    it was inserted. ``attributed`` names the single program charged for it
    in per-program accounting (the lowest-indexed owner)."""

    phys_a: int
    phys_b: int
    swap_class: str  # "intra" | "inter" | "free"
    owners: tuple[int, ...]
    attributed: int

    def key(self) -> tuple[int, int]:
        return (self.phys_a, self.phys_b)


@dataclass(frozen=True)
class GateEvent:
    program: int
    gate_id: int
    kind: str
    phys: tuple[int, ...]
    params: tuple[float, ...] = ()


@dataclass(frozen=True)
class SwapEvent:
    swap: SwapOp


@dataclass(frozen=True)
class Schedule:
    """Ordered executed-gate/SWAP stream plus the evolving mapping endpoints."""

    programs: tuple[QuantumProgram, ...]
    events: tuple
    initial: GlobalMapping
    final: GlobalMapping
    backend: Backend

    def swaps(self) -> list[SwapOp]:
        return [e.swap for e in self.events if isinstance(e, SwapEvent)]

    @property
    def swap_count(self) -> int:
        return len(self.swaps())

    def swaps_by_class(self) -> dict[str, int]:
        counts = {"intra": 0, "inter": 0, "free": 0}
        for s in self.swaps():
            counts[s.swap_class] += 1
        return counts

    def attributed_swaps(self, program: int) -> int:
        return sum(1 for s in self.swaps() if s.attributed == program)

    def to_doc(self) -> dict:
        events = []
        for e in self.events:
            if isinstance(e, SwapEvent):
                events.append(
                    {
                        "swap": [e.swap.phys_a, e.swap.phys_b],
                        "class": e.swap.swap_class,
                        "owners": list(e.swap.owners),
                    }
                )
            else:
                events.append(
                    {
                        "program": e.program,
                        "gate": e.gate_id,
                        "kind": e.kind,
                        "phys": list(e.phys),
                        "params": list(e.params),
                    }
                )
        return {
            "programs": [p.name for p in self.programs],
            "events": events,
            "initial": self.initial.to_doc(),
            "final": self.final.to_doc(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), sort_keys=True, separators=(",", ":"))


def mapping_from_partition(partition, programs, n_phys: int) -> GlobalMapping:
    """Arrange a partition's placements in the callers' program order."""
    return GlobalMapping([partition.mapping_for(p).sigma for p in programs], n_phys)


# --- heuristics ----------------------------------------------------------------


def gain(gate: Gate, sigma: dict[int, int], full_dist: DistanceMatrix, own_dist: DistanceMatrix) -> int:
    """SWAPs saved by resolving this CNOT through foreign/free qubits instead
    of inside its own region: restricted hop count minus chip-wide hop count."""
    a, b = sigma[gate.qubits[0]], sigma[gate.qubits[1]]
    return own_dist.hops(a, b) - full_dist.hops(a, b)


def obtain_swaps(to_resolve, graph, mapping: GlobalMapping) -> list[SwapOp]:
    """Candidate SWAPs: every coupling edge incident to a physical qubit that
    hosts an operand of a gate to resolve, regardless of who owns the other
    endpoint (this is what admits cross-program and free-qubit SWAPs)."""
    edges: set[tuple[int, int]] = set()
    for program, g in to_resolve:
        for lq in g.qubits:
            p = mapping.phys(program, lq)
            for nb in graph.neighbors(p):
                edges.add((min(p, nb), max(p, nb)))
    return [_classify(mapping, a, b) for a, b in sorted(edges)]


def _classify(mapping: GlobalMapping, a: int, b: int) -> SwapOp:
    oa, ob = mapping.owner_of(a), mapping.owner_of(b)
    owners = tuple(sorted(o for o in (oa, ob) if o != FREE))
    if not owners:
        raise RoutingError("swap with both endpoints free is never a candidate")
    if oa == FREE or ob == FREE:
        cls = "free"
    elif oa == ob:
        cls = "intra"
    else:
        cls = "inter"
    return SwapOp(min(a, b), max(a, b), cls, owners, owners[0])


def swap_score(
    swap: SwapOp,
    fronts,
    mapping: GlobalMapping,
    h_dist: DistanceMatrix,
    own_dists=None,
    gain_cap: int = 0,
) -> float:
    """Score a candidate SWAP; lower is better.

    The base term sums, over every front-layer CNOT, its operand distance
    after hypothetically applying the SWAP. When ``own_dists`` is given, a
    bonus is subtracted for each front gate whose chip-wide shortest path the
    SWAP lies on, proportional to the SWAPs that gate saves by crossing
    program boundaries (normalized per front layer). Subtracting makes the
    minimization prefer exactly the shortcut SWAPs.
    """
    a, b = swap.phys_a, swap.phys_b

    def after(p: int) -> int:
        return b if p == a else a if p == b else p

    score = 0.0
    for i, front in enumerate(fronts):
        if not front:
            continue
        per_layer = 1.0 / len(front)
        for g in front:
            pa = mapping.phys(i, g.qubits[0])
            pb = mapping.phys(i, g.qubits[1])
            score += h_dist.hops(after(pa), after(pb))
            if own_dists is None:
                continue
            d = h_dist.hops(pa, pb)
            on_path = (
                h_dist.hops(pa, a) + 1 + h_dist.hops(b, pb) == d
                or h_dist.hops(pa, b) + 1 + h_dist.hops(a, pb) == d
            )
            if on_path:
                restricted = own_dists[i].get(pa, pb)
                saved = gain_cap if restricted is None else restricted - d
                score -= per_layer * saved
    return score


# --- routers --------------------------------------------------------------------


class _ProgramState:
    def __init__(self, index: int, program: QuantumProgram):
        self.index = index
        self.program = program
        self.dag: Dag = build_dag(program)
        self.executed: set[int] = set()

    def done(self) -> bool:
        return len(self.executed) == len(self.program.gates)

    def front_gates(self) -> list[Gate]:
        return [self.program.gates[gid] for gid in sorted(front_layer(self.dag, self.executed))]

    def resolve_gates(self) -> list[Gate]:
        front = front_layer(self.dag, self.executed)
        chosen = critical_gates(self.dag, front) or front
        return [self.program.gates[gid] for gid in sorted(chosen)]


def _execute_compliant(states, mapping: GlobalMapping, graph, events, pending_measures) -> bool:
    """Greedily execute every gate that needs no SWAP; returns True if any ran."""
    progress = False
    moved = True
    while moved:
        moved = False
        for st in states:
            for gid in ready_gates(st.dag, st.executed):
                g = st.program.gates[gid]
                if g.kind == MEASURE:
                    st.executed.add(gid)
                    pending_measures.append((st.index, gid, g.qubits[0]))
                    moved = progress = True
                elif g.kind == BARRIER:
                    st.executed.add(gid)
                    events.append(
                        GateEvent(st.index, gid, BARRIER, tuple(mapping.phys(st.index, q) for q in g.qubits))
                    )
                    moved = progress = True
                elif not g.is_cnot:
                    st.executed.add(gid)
                    events.append(
                        GateEvent(st.index, gid, g.kind, (mapping.phys(st.index, g.qubits[0]),), g.params)
                    )
                    moved = progress = True
                else:
                    pa = mapping.phys(st.index, g.qubits[0])
                    pb = mapping.phys(st.index, g.qubits[1])
                    if graph.has_edge(pa, pb):
                        st.executed.add(gid)
                        events.append(GateEvent(st.index, gid, CNOT, (pa, pb)))
                        moved = progress = True
    return progress


def _flush_measures(pending_measures, mapping: GlobalMapping, events):
    """Measurements are pinned to the end, remapped through the final layout."""
    for program, gid, logical in pending_measures:
        events.append(GateEvent(program, gid, MEASURE, (mapping.phys(program, logical),)))


def xswap_route(
    programs, initial: GlobalMapping, backend: Backend, stall_limit: int | None = None
) -> Schedule:
    """Route all programs jointly, allowing SWAPs across program boundaries
    and through free qubits.

    Candidate SWAPs touch the operands of each program's blocked critical
    gates (all blocked front gates when none is critical). A deterministic
    fallback walks the oldest blocked gate along a chip-wide shortest path if
    ``stall_limit`` (default 3 * n_qubits) consecutive SWAPs execute no gate.
    """
    graph = backend.graph
    mapping = initial.clone()
    states = [_ProgramState(i, p) for i, p in enumerate(programs)]
    events: list = []
    pending_measures: list[tuple[int, int, int]] = []
    full_dist = shortest_paths(graph)
    own_cache: dict[frozenset, DistanceMatrix] = {}
    gain_cap = graph.n_qubits
    if stall_limit is None:
        stall_limit = 3 * graph.n_qubits
    stalled = 0

    def own_dist(i: int) -> DistanceMatrix:
        allowed = frozenset(mapping.free_qubits() | mapping.region(i))
        if allowed not in own_cache:
            own_cache[allowed] = shortest_paths(graph, set(allowed))
        return own_cache[allowed]

    while True:
        if _execute_compliant(states, mapping, graph, events, pending_measures):
            stalled = 0
        if all(st.done() for st in states):
            break
        to_resolve = [(st.index, g) for st in states for g in st.resolve_gates()]
        if stalled >= stall_limit:
            program, g = to_resolve[0]
            pa = mapping.phys(program, g.qubits[0])
            pb = mapping.phys(program, g.qubits[1])
            step = min(graph.neighbors(pa), key=lambda x: (full_dist.hops(x, pb), x))
            best = _classify(mapping, pa, step)
        else:
            fronts = [st.front_gates() for st in states]
            dists = [own_dist(i) for i in range(len(states))]
            best = min(
                obtain_swaps(to_resolve, graph, mapping),
                key=lambda s: (swap_score(s, fronts, mapping, full_dist, dists, gain_cap), s.key()),
            )
        mapping.apply_swap(best.phys_a, best.phys_b)
        events.append(SwapEvent(best))
        stalled += 1
    _flush_measures(pending_measures, mapping, events)
    return Schedule(tuple(programs), tuple(events), initial.clone(), mapping, backend)


def baseline_route(
    programs, initial: GlobalMapping, backend: Backend, stall_limit: int | None = None
) -> Schedule:
    """Route each program independently inside its own region, then merge the
    per-program event streams round-robin.

    Candidates are restricted to coupling edges with both endpoints in the
    program's region and distances to the region-induced subgraph, mirroring
    per-program heuristic routing. Raises UnroutableProgramError when a
    region cannot connect a CNOT's operands.
    """
    graph = backend.graph
    mapping = initial.clone()
    if stall_limit is None:
        stall_limit = 3 * graph.n_qubits
    streams: list[list] = []
    for i, program in enumerate(programs):
        st = _ProgramState(i, program)
        events_i: list = []
        pending: list[tuple[int, int, int]] = []
        region = sorted(mapping.region(i))
        region_dist = shortest_paths(graph, set(region))
        region_edges = [
            (a, b) for a, b in sorted(graph.edges) if a in set(region) and b in set(region)
        ]
        stalled = 0
        while True:
            if _execute_compliant([st], mapping, graph, events_i, pending):
                stalled = 0
            if st.done():
                break
            resolve = st.resolve_gates()
            for g in resolve:
                pa, pb = mapping.phys(i, g.qubits[0]), mapping.phys(i, g.qubits[1])
                if not region_dist.reachable(pa, pb):
                    raise UnroutableProgramError(
                        program.name, f"region {region} cannot connect qubits {pa} and {pb}"
                    )
            if stalled >= stall_limit:
                g = resolve[0]
                pa, pb = mapping.phys(i, g.qubits[0]), mapping.phys(i, g.qubits[1])
                neighbors = [x for x in graph.neighbors(pa) if region_dist.reachable(x, pb)]
                step = min(neighbors, key=lambda x: (region_dist.hops(x, pb), x))
                best = _classify(mapping, pa, step)
            else:
                operand_phys = {mapping.phys(i, q) for g in resolve for q in g.qubits}
                candidates = [
                    _classify(mapping, a, b)
                    for a, b in region_edges
                    if a in operand_phys or b in operand_phys
                ]
                fronts_one = [st.front_gates()]
                best = min(
                    candidates,
                    key=lambda s: (
                        _restricted_score(s, fronts_one, mapping, i, region_dist),
                        s.key(),
                    ),
                )
            mapping.apply_swap(best.phys_a, best.phys_b)
            events_i.append(SwapEvent(best))
            stalled += 1
        _flush_measures(pending, mapping, events_i)
        streams.append(events_i)
    merged: list = []
    cursors = [0] * len(streams)
    while any(c < len(s) for c, s in zip(cursors, streams)):
        for i, stream in enumerate(streams):
            if cursors[i] < len(stream):
                merged.append(stream[cursors[i]])
                cursors[i] += 1
    return Schedule(tuple(programs), tuple(merged), initial.clone(), mapping, backend)


def _restricted_score(swap: SwapOp, fronts_one, mapping: GlobalMapping, program: int, region_dist):
    a, b = swap.phys_a, swap.phys_b

    def after(p: int) -> int:
        return b if p == a else a if p == b else p

    total = 0.0
    for g in fronts_one[0]:
        pa = mapping.phys(program, g.qubits[0])
        pb = mapping.phys(program, g.qubits[1])
        total += region_dist.hops(after(pa), after(pb))
    return total


# --- decomposition and verification ----------------------------------------------


@dataclass(frozen=True)
class CompiledCircuits:
    """Physical circuits obtained by expanding SWAPs into CNOT triples."""

    combined: QuantumProgram
    per_program: tuple[QuantumProgram, ...]
    stats: dict = field(repr=False)


def decompose(schedule: Schedule) -> CompiledCircuits:
    """Expand every SWAP into three CNOTs and emit physical circuits.

    Replays the schedule to verify that executed CNOTs and SWAPs act on
    adjacent qubits and that the accumulated permutation matches the final
    mapping; a violated schedule raises RoutingError.
    """
    graph = schedule.backend.graph
    n_phys = schedule.initial.n_phys
    replayed = schedule.initial.clone()
    combined: list[Gate] = []
    per_program: list[list[Gate]] = [[] for _ in schedule.programs]

    def emit(target: list[Gate], kind: str, phys: tuple[int, ...], params=()):
        target.append(Gate(kind, phys, tuple(params), id=len(target)))

    for event in schedule.events:
        if isinstance(event, SwapEvent):
            a, b = event.swap.phys_a, event.swap.phys_b
            if not graph.has_edge(a, b):
                raise RoutingError(f"swap ({a},{b}) is not a coupling edge")
            for pair in ((a, b), (b, a), (a, b)):
                emit(combined, CNOT, pair)
                emit(per_program[event.swap.attributed], CNOT, pair)
            replayed.apply_swap(a, b)
        else:
            if event.kind == CNOT:
                pa, pb = event.phys
                if not graph.has_edge(pa, pb):
                    raise RoutingError(f"executed CNOT on non-adjacent qubits ({pa},{pb})")
            expected = tuple(replayed.phys(event.program, q)
                             for q in schedule.programs[event.program].gates[event.gate_id].qubits)
            if expected != event.phys:
                raise RoutingError(
                    f"event operands {event.phys} disagree with replayed mapping {expected}"
                )
            emit(combined, event.kind, event.phys, event.params)
            emit(per_program[event.program], event.kind, event.phys, event.params)
    for i, sigma in enumerate(replayed.sigmas):
        if sigma != schedule.final.sigmas[i]:
            raise RoutingError(f"final mapping of program {i} does not match the replay")

    swaps = schedule.swaps()
    per_stats = []
    for i, program in enumerate(schedule.programs):
        attributed = schedule.attributed_swaps(i)
        per_stats.append(
            {
                "name": program.name,
                "swaps": attributed,
                "added_cnots": 3 * attributed,
                "original_gates": program.gate_count,
                "post_gates": program.gate_count + 3 * attributed,
            }
        )
    total_original = sum(p.gate_count for p in schedule.programs)
    stats = {
        "per_program": per_stats,
        "swap_classes": schedule.swaps_by_class(),
        "swaps": len(swaps),
        "added_cnots": 3 * len(swaps),
        "post_gates": total_original + 3 * len(swaps),
        "depth": _depth(combined),
    }
    combined_program = QuantumProgram(name="combined", n_qubits=n_phys, gates=tuple(combined))
    views = tuple(
        QuantumProgram(name=f"{p.name}@phys", n_qubits=n_phys, gates=tuple(gates))
        for p, gates in zip(schedule.programs, per_program)
    )
    return CompiledCircuits(combined=combined_program, per_program=views, stats=stats)


def _depth(gates) -> int:
    level: dict[int, int] = {}
    for g in gates:
        if g.kind == BARRIER:
            sync = max((level.get(q, 0) for q in g.qubits), default=0)
            for q in g.qubits:
                level[q] = sync
            continue
        d = max(level.get(q, 0) for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = d
    return max(level.values(), default=0)


def verify_equivalence(
    programs,
    compiled: QuantumProgram,
    final_layouts,
    limit: int = sim.DEFAULT_QUBIT_CAP,
    tolerance: float = 1e-9,
) -> tuple[bool, float]:
    """Check the compiled physical circuit against exact simulation.

    Simulates the compiled circuit from |0..0>, marginalizes it onto every
    program's final layout, and compares with the tensor product of the
    programs' standalone output distributions. Returns (equivalent, total
    variation distance). Raises QubitCapExceeded above ``limit``.
    """
    if compiled.n_qubits > limit:
        raise sim.QubitCapExceeded(
            f"{compiled.n_qubits} physical qubits exceed the verification cap {limit}"
        )
    phys_probs = sim.distribution_vector(compiled, cap=limit)
    keep: list[int] = []
    ideal = np.array([1.0])
    for program, layout in zip(programs, final_layouts):
        keep.extend(layout[q] for q in sorted(layout))
        ideal = np.kron(sim.distribution_vector(program, cap=limit), ideal)
    marginal = sim.marginal_distribution(phys_probs, compiled.n_qubits, keep)
    tv = sim.total_variation(marginal, ideal)
    return tv <= tolerance, tv


def verify_schedule(schedule: Schedule, limit: int = sim.DEFAULT_QUBIT_CAP) -> tuple[bool, float]:
    compiled = decompose(schedule)
    layouts = [dict(s) for s in schedule.final.sigmas]
    return verify_equivalence(schedule.programs, compiled.combined, layouts, limit=limit)
