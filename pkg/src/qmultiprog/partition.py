"""Noise-aware chip partitioning for concurrent programs.

A dendrogram of qubit communities is built bottom-up over the coupling graph:
each merge maximizes a reward combining the modularity delta of the grouping
with the fidelity of the links crossing the merge. Programs then claim
regions by climbing the tree from its leaves, and an interaction-graph greedy
(greatest weighted edge first) places logical qubits inside the claimed
region. A greedy utility-based partitioner is included as the comparison
baseline.
"""
from __future__ import annotations

from dataclasses import dataclass

from .circuit import QuantumProgram
from .hardware import Backend, CouplingGraph, shortest_paths

DEFAULT_OMEGA = 0.95
UNMERGEABLE = float("-inf")


class PartitionError(ValueError):
    pass


class HierarchyNode:
    """A community of physical qubits; leaves hold exactly one qubit.

    ``alive`` is the subset not yet consumed by an allocation; it shrinks as
    programs claim qubits, while ``qubits`` records the community as built.
    """

    __slots__ = ("qubits", "left", "right", "parent", "alive", "merge_step", "reward")

    def __init__(self, qubits, left=None, right=None, merge_step=None, reward=None):
        self.qubits: frozenset[int] = frozenset(qubits)
        self.left: HierarchyNode | None = left
        self.right: HierarchyNode | None = right
        self.parent: HierarchyNode | None = None
        self.alive: set[int] = set(qubits)
        self.merge_step: int | None = merge_step
        self.reward: float | None = reward
        if left is not None:
            left.parent = self
        if right is not None:
            right.parent = self

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    def __repr__(self):
        return f"HierarchyNode({sorted(self.qubits)})"


@dataclass
class HierarchyTree:
    """Dendrogram over a backend's qubits, as produced by the merge loop."""

    root: HierarchyNode
    leaves: dict[int, HierarchyNode]
    omega: float

    def nodes(self) -> list[HierarchyNode]:
        out: list[HierarchyNode] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            out.append(node)
            if not node.is_leaf:
                stack.extend([node.right, node.left])
        return out

    def internal_nodes(self) -> list[HierarchyNode]:
        return [n for n in self.nodes() if not n.is_leaf]

    def clone(self) -> "HierarchyTree":
        """Structurally independent copy; allocation mutates alive sets, so
        every partitioning call must run on its own clone."""

        def copy_node(node: HierarchyNode) -> HierarchyNode:
            if node.is_leaf:
                fresh = HierarchyNode(node.qubits)
            else:
                fresh = HierarchyNode(
                    node.qubits,
                    copy_node(node.left),
                    copy_node(node.right),
                    merge_step=node.merge_step,
                    reward=node.reward,
                )
            fresh.alive = set(node.alive)
            return fresh

        root = copy_node(self.root)
        leaves: dict[int, HierarchyNode] = {}
        stack = [root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                (q,) = node.qubits
                leaves[q] = node
            else:
                stack.extend([node.left, node.right])
        return HierarchyTree(root=root, leaves=leaves, omega=self.omega)


def modularity(grouping: dict[int, int], graph: CouplingGraph) -> float:
    """Newman modularity of a qubit grouping: sum over groups of
    (fraction of edges inside the group) - (fraction of edge endpoints in it)^2.
    """
    m = len(graph.edges)
    if m == 0:
        raise ValueError("modularity is undefined on an edgeless graph")
    inside: dict[int, int] = {}
    endpoints: dict[int, int] = {}
    for a, b in graph.edges:
        ga, gb = grouping[a], grouping[b]
        endpoints[ga] = endpoints.get(ga, 0) + 1
        endpoints[gb] = endpoints.get(gb, 0) + 1
        if ga == gb:
            inside[ga] = inside.get(ga, 0) + 1
    groups = set(grouping.values())
    return sum(inside.get(g, 0) / m - (endpoints.get(g, 0) / (2 * m)) ** 2 for g in groups)


def _between_edges(a: frozenset[int], b: frozenset[int], graph: CouplingGraph):
    return [(x, y) for x, y in graph.edges if (x in a and y in b) or (x in b and y in a)]


def merge_reward(
    a: HierarchyNode,
    b: HierarchyNode,
    grouping: dict[int, int],
    backend: Backend,
    omega: float,
) -> float:
    """Benefit of merging communities a and b: modularity delta plus
    omega * (mean CNOT fidelity of crossing links) * (mean readout fidelity of
    their endpoint qubits). Returns -inf when no link crosses (unmergeable).
    """
    crossing = _between_edges(a.qubits, b.qubits, backend.graph)
    if not crossing:
        return UNMERGEABLE
    q_origin = modularity(grouping, backend.graph)
    merged_group = min(grouping[q] for q in a.qubits | b.qubits)
    merged = {q: (merged_group if q in a.qubits or q in b.qubits else g) for q, g in grouping.items()}
    q_merged = modularity(merged, backend.graph)
    link_fid = sum(backend.calib.cnot_fidelity(x, y) for x, y in crossing) / len(crossing)
    endpoint_qubits = sorted({q for e in crossing for q in e})
    readout_fid = sum(backend.calib.readout_fidelity(q) for q in endpoint_qubits) / len(endpoint_qubits)
    return q_merged - q_origin + omega * link_fid * readout_fid


def build_hierarchy_tree(backend: Backend, omega: float = DEFAULT_OMEGA) -> HierarchyTree:
    """Agglomerate single-qubit communities by repeatedly merging the pair
    with the highest reward until one community remains.

    Ties take the pair with the smallest (min qubit of first, min qubit of
    second) after ordering each pair by its minimum qubit.
    """
    if omega < 0:
        raise ValueError("omega must be non-negative")
    communities = [HierarchyNode([q]) for q in range(backend.n_qubits)]
    leaves = {q: communities[q] for q in range(backend.n_qubits)}
    step = 0
    while len(communities) > 1:
        grouping = {q: i for i, node in enumerate(communities) for q in node.qubits}
        best = None
        for i in range(len(communities) - 1):
            for j in range(i + 1, len(communities)):
                a, b = communities[i], communities[j]
                if min(a.qubits) > min(b.qubits):
                    a, b = b, a
                reward = merge_reward(a, b, grouping, backend, omega)
                if reward == UNMERGEABLE:
                    continue
                key = (-reward, min(a.qubits), min(b.qubits))
                if best is None or key < best[0]:
                    best = (key, a, b, reward)
        if best is None:
            raise PartitionError("coupling graph is disconnected; cannot finish the dendrogram")
        _, a, b, reward = best
        step += 1
        merged = HierarchyNode(a.qubits | b.qubits, a, b, merge_step=step, reward=reward)
        communities = [c for c in communities if c is not a and c is not b]
        communities.append(merged)
    return HierarchyTree(root=communities[0], leaves=leaves, omega=omega)


def max_redundant_qubits(node: HierarchyNode) -> int:
    """Worst-case unused qubits when a program lands on this community:
    its size minus one more than its larger child."""
    if node.is_leaf:
        raise ValueError("redundancy is defined for internal nodes only")
    return node.n_qubits - (1 + max(node.left.n_qubits, node.right.n_qubits))


def average_redundancy(tree: HierarchyTree) -> float:
    internal = tree.internal_nodes()
    if not internal:
        raise ValueError("tree has no internal nodes")
    return sum(max_redundant_qubits(n) for n in internal) / len(internal)


# --- region assignment ---------------------------------------------------------


@dataclass(frozen=True)
class InitialMapping:
    """Injective placement of one program's logical qubits onto the chip."""

    program: QuantumProgram
    sigma: dict[int, int]

    def __post_init__(self):
        image = set(self.sigma.values())
        if len(image) != len(self.sigma) or len(self.sigma) != self.program.n_qubits:
            raise ValueError("mapping must place every logical qubit injectively")

    @property
    def region(self) -> frozenset[int]:
        return frozenset(self.sigma.values())


@dataclass(frozen=True)
class Assignment:
    program: QuantumProgram
    qubits: frozenset[int]
    avg_fidelity: float
    mapping: InitialMapping


@dataclass(frozen=True)
class Partition:
    """Outcome of dividing the chip among programs: disjoint per-program
    regions plus the programs that must fall back to running alone."""

    assignments: tuple[Assignment, ...]
    unassigned: tuple[QuantumProgram, ...] = ()

    def mapping_for(self, program: QuantumProgram) -> InitialMapping:
        for a in self.assignments:
            if a.program is program:
                return a.mapping
        raise KeyError(program.name)


def _region_avg_fidelity(qubits: set[int], backend: Backend) -> float:
    """Pooled mean of CNOT-link fidelities inside the set and readout
    fidelities of its members."""
    values = [
        backend.calib.cnot_fidelity(a, b)
        for a, b in backend.graph.edges
        if a in qubits and b in qubits
    ]
    values += [backend.calib.readout_fidelity(q) for q in qubits]
    return sum(values) / len(values)


def _allocation_pressure(mapping: "InitialMapping", backend: Backend) -> int | None:
    """CNOT-weighted excess hop count of a placement, measured inside the
    region it occupies (the router confined to that region pays for every
    extra hop). None when some interacting pair has no internal path at all,
    which makes the placement unusable."""
    used = set(mapping.sigma.values())
    dist = shortest_paths(backend.graph, used)
    total = 0
    for (a, b), w in mapping.program.cnot_weights().items():
        d = dist.get(mapping.sigma[a], mapping.sigma[b])
        if d is None:
            return None
        total += w * (d - 1)
    return total


def program_order(programs) -> list[QuantumProgram]:
    """Compilation priority: densest-in-CNOTs first, bigger first on ties,
    then name for determinism."""
    return sorted(programs, key=lambda p: (-p.cnot_density, -p.n_qubits, p.name))


def allocate(program: QuantumProgram, region: set[int], backend: Backend) -> InitialMapping:
    """Greatest-weighted-edge-first placement of a program inside a region.

    The heaviest interacting logical pair is seeded onto the region's most
    reliable internal link; remaining logical qubits grow outward from mapped
    neighbors (heaviest half-mapped edge first, best adjacent free link),
    falling back to the nearest free qubit by hops. Logical qubits that never
    interact fill leftover region qubits by descending readout fidelity.
    All ties break toward the lowest index, so the result is deterministic.
    """
    region = set(region)
    if len(region) < program.n_qubits:
        raise PartitionError(
            f"region of {len(region)} qubits cannot host {program.name} ({program.n_qubits} qubits)"
        )
    weights = program.cnot_weights()
    logical_weight = {q: 0 for q in range(program.n_qubits)}
    for (a, b), w in weights.items():
        logical_weight[a] += w
        logical_weight[b] += w
    region_edges = [e for e in sorted(backend.graph.edges) if e[0] in region and e[1] in region]
    full_dist = shortest_paths(backend.graph)

    sigma: dict[int, int] = {}
    used: set[int] = set()

    def phys_edge_anchor_score(p: int) -> float:
        return sum(
            backend.calib.cnot_fidelity(a, b)
            for a, b in region_edges
            if p in (a, b)
        )

    def place(logical: int, phys: int):
        sigma[logical] = phys
        used.add(phys)

    def free_region() -> list[int]:
        return sorted(region - used)

    def coverage(logical: int, p: int) -> float:
        """Weighted fidelity of links from p to the already-mapped partners of
        ``logical``; placing next to every partner beats a single good link."""
        total = 0.0
        for other, phys in sigma.items():
            key = (min(logical, other), max(logical, other))
            if key in weights and backend.graph.has_edge(p, phys):
                total += weights[key] * backend.calib.cnot_fidelity(p, phys)
        return total

    pending = sorted(weights, key=lambda e: (-weights[e], e))
    while True:
        half = [
            e for e in pending
            if (e[0] in sigma) != (e[1] in sigma)
        ]
        if half:
            la, lb = min(half, key=lambda e: (-weights[e], e))
            anchor, free_l = (la, lb) if la in sigma else (lb, la)
            anchor_p = sigma[anchor]
            adjacent = [
                p for p in free_region() if backend.graph.has_edge(anchor_p, p)
            ]
            if adjacent:
                target = max(
                    adjacent,
                    key=lambda p: (coverage(free_l, p), backend.calib.cnot_fidelity(anchor_p, p), -p),
                )
            else:
                target = min(free_region(), key=lambda p: (full_dist.hops(anchor_p, p), p))
            place(free_l, target)
            continue
        unmapped_edges = [e for e in pending if e[0] not in sigma and e[1] not in sigma]
        if not unmapped_edges:
            break
        la, lb = min(unmapped_edges, key=lambda e: (-weights[e], e))
        free_edges = [e for e in region_edges if e[0] not in used and e[1] not in used]
        if not free_edges:
            break  # no internal link left; the readout fill below handles the rest
        pa, pb = max(free_edges, key=lambda e: (backend.calib.cnot_fidelity(*e), (-e[0], -e[1])))
        if logical_weight[la] < logical_weight[lb] or (
            logical_weight[la] == logical_weight[lb] and la > lb
        ):
            la, lb = lb, la  # heavier (or lower-index) logical first
        if phys_edge_anchor_score(pa) < phys_edge_anchor_score(pb):
            pa, pb = pb, pa  # better-connected physical spot first
        place(la, pa)
        place(lb, pb)

    for logical in range(program.n_qubits):
        if logical not in sigma:
            target = max(free_region(), key=lambda p: (backend.calib.readout_fidelity(p), -p))
            place(logical, target)
    return InitialMapping(program=program, sigma=sigma)


def partition_qubits(tree: HierarchyTree, programs, backend: Backend) -> Partition:
    """Assign disjoint chip regions to programs by climbing the dendrogram.

    For each program (densest first) every leaf climbs until a node with
    enough alive qubits is found; the candidate with the best pooled average
    fidelity over its alive subgraph wins. The placed qubits are removed from
    every node containing them; surplus alive qubits of the winning community
    stay available for later programs. A sibling left with no link to any
    other alive qubit is cut loose so it never seeds an unusable region.
    """
    if not programs:
        raise PartitionError("no programs to partition")
    if len({id(p) for p in programs}) != len(list(programs)):
        raise PartitionError(
            "each program must be a distinct object; parse the source again to co-run a circuit with itself"
        )
    assignments: list[Assignment] = []
    unassigned: list[QuantumProgram] = []
    for program in program_order(programs):
        need = program.n_qubits
        candidates: list[HierarchyNode] = []
        seen: set[int] = set()
        for q in sorted(tree.leaves):
            node: HierarchyNode | None = tree.leaves[q]
            while node is not None and len(node.alive) < need:
                node = node.parent
            if node is not None and id(node) not in seen:
                seen.add(id(node))
                candidates.append(node)
        if not candidates:
            unassigned.append(program)
            continue
        # Score each candidate by the region the program would actually occupy
        # (pooled alive-set means would punish supersets for qubits left
        # unused): fewest forced SWAPs first, then best pooled fidelity.
        # Candidates that leave interacting qubits without an internal path
        # are unusable and dropped.
        scored = []
        for node in candidates:
            trial = allocate(program, set(node.alive), backend)
            trial_used = set(trial.sigma.values())
            pressure = _allocation_pressure(trial, backend)
            if pressure is None:
                continue
            scored.append(
                (
                    pressure,
                    -_region_avg_fidelity(trial_used, backend),
                    tuple(sorted(trial_used)),
                    trial,
                    node,
                )
            )
        if not scored:
            unassigned.append(program)
            continue
        scored.sort(key=lambda t: t[:3])
        _, neg_fid, _, mapping, winner = scored[0]
        used = set(mapping.sigma.values())
        for q in used:
            node = tree.leaves[q]
            while node is not None:
                node.alive.discard(q)
                node = node.parent
        parent = winner.parent
        if parent is not None:
            sibling = parent.left if parent.right is winner else parent.right
            sib_alive = set(sibling.alive)
            other_alive = set(tree.root.alive) - sib_alive
            linked = any(
                (a in sib_alive and b in other_alive) or (b in sib_alive and a in other_alive)
                for a, b in backend.graph.edges
            )
            if sib_alive and not linked:
                node = sibling.parent
                while node is not None:
                    node.alive -= sib_alive
                    node = node.parent
                sibling.parent = None
        assignments.append(
            Assignment(program=program, qubits=frozenset(used), avg_fidelity=-neg_fid, mapping=mapping)
        )
    return Partition(assignments=tuple(assignments), unassigned=tuple(unassigned))


# --- greedy comparison baseline -------------------------------------------------


def frp_partition(programs, backend: Backend) -> Partition:
    """Greedy utility-driven region growth, the pre-existing multi-programming
    strategy used as baseline: pick the available qubit with the best
    (link count / summed CNOT error) utility as root, then repeatedly absorb
    the best-utility available neighbor until the region is program-sized.
    """
    if not programs:
        raise PartitionError("no programs to partition")
    available = set(range(backend.n_qubits))
    assignments: list[Assignment] = []
    unassigned: list[QuantumProgram] = []

    def utility(q: int) -> float:
        links = [n for n in backend.graph.neighbors(q) if n in available]
        if not links:
            return 0.0
        err = sum(backend.calib.cnot_error[(min(q, n), max(q, n))] for n in links)
        return float("inf") if err == 0 else len(links) / err

    for program in program_order(programs):
        if program.n_qubits > len(available):
            unassigned.append(program)
            continue
        root = max(sorted(available), key=lambda q: (utility(q), -q))
        region = {root}
        while len(region) < program.n_qubits:
            frontier = sorted(
                {n for q in region for n in backend.graph.neighbors(q) if n in available - region}
            )
            if not frontier:
                break
            region.add(max(frontier, key=lambda q: (utility(q), -q)))
        if len(region) < program.n_qubits:
            unassigned.append(program)
            continue
        mapping = allocate(program, region, backend)
        available -= region
        assignments.append(
            Assignment(
                program=program,
                qubits=frozenset(region),
                avg_fidelity=_region_avg_fidelity(region, backend),
                mapping=mapping,
            )
        )
    return Partition(assignments=tuple(assignments), unassigned=tuple(unassigned))
