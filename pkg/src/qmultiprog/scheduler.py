"""Success-rate estimation and the compilation-task batching loop.

Queued programs are batched greedily from the head of the queue: a candidate
joins the current batch only while every member's estimated success rate
stays within a relative threshold of what it would achieve running alone.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .circuit import QuantumProgram
from .hardware import Backend
from .partition import HierarchyTree, Partition, partition_qubits

DEFAULT_EPSILON = 0.15
DEFAULT_LOOKAHEAD = 8
DEFAULT_MAX_COLOCATE = 2


class SchedulingError(ValueError):
    pass


@dataclass
class Job:
    """A queued program with cached success-rate estimates."""

    id: int
    program: QuantumProgram
    ind_epst: float | None = None
    co_epst: float | None = None
    status: str = "queued"  # queued | batched | independent | done


@dataclass(frozen=True)
class Batch:
    """Jobs admitted to run together, with the partition that justified it and
    each job's recorded estimate violation."""

    jobs: tuple[Job, ...]
    partition: Partition | None
    decision_record: dict[int, float | None] = field(default_factory=dict)


def epst(program: QuantumProgram, region, backend: Backend) -> float:
    """Estimated probability of a successful trial on the given region:
    (mean CNOT fidelity)^#CNOTs * (mean 1q fidelity)^#1q * (mean readout
    fidelity)^#qubits, all means over the region's qubits/internal links."""
    region = set(region)
    if len(region) < program.n_qubits:
        raise SchedulingError(
            f"region of {len(region)} qubits is too small for {program.name}"
        )
    edges = [(a, b) for a, b in backend.graph.edges if a in region and b in region]
    if program.n_cnot > 0 and not edges:
        raise SchedulingError(
            f"region {sorted(region)} has no internal link but {program.name} has CNOTs"
        )
    f_2q = (
        sum(backend.calib.cnot_fidelity(a, b) for a, b in edges) / len(edges) if edges else 1.0
    )
    f_1q = sum(backend.calib.oneq_fidelity(q) for q in region) / len(region)
    f_ro = sum(backend.calib.readout_fidelity(q) for q in region) / len(region)
    return f_2q ** program.n_cnot * f_1q ** program.n_1q * f_ro ** program.n_qubits


def independent_epst(job: Job, tree: HierarchyTree, backend: Backend) -> float:
    """Best estimate the job's program can reach with the chip to itself."""
    partition = partition_qubits(tree.clone(), [job.program], backend)
    if partition.unassigned:
        raise SchedulingError(f"{job.program.name} cannot be placed even alone")
    assignment = partition.assignments[0]
    return epst(job.program, assignment.qubits, backend)


def _co_epsts(jobs, tree: HierarchyTree, backend: Backend) -> dict[int, float] | None:
    """Estimates for all jobs under a joint partition, or None if any job
    cannot be placed alongside the others."""
    partition = partition_qubits(tree.clone(), [j.program for j in jobs], backend)
    if partition.unassigned:
        return None
    out: dict[int, float] = {}
    for job in jobs:
        region = next(a.qubits for a in partition.assignments if a.program is job.program)
        try:
            out[job.id] = epst(job.program, region, backend)
        except SchedulingError:
            return None
    return out


def _violation(ind: float, co: float) -> float:
    return 1.0 - co / ind


def _acceptable(violation: float, epsilon: float) -> bool:
    # A co-location that costs nothing is always admissible, even at epsilon=0.
    return violation < epsilon or violation <= 0.0


def schedule_tasks(
    queue,
    tree: HierarchyTree,
    backend: Backend,
    epsilon: float = DEFAULT_EPSILON,
    lookahead: int = DEFAULT_LOOKAHEAD,
    max_colocate: int = DEFAULT_MAX_COLOCATE,
) -> list[Batch]:
    """Greedy head-of-queue batching.

    Seed a batch with the queue head, then scan up to ``lookahead`` positions,
    tentatively adding each job and recomputing every member's co-located
    estimate under a joint partition; a tentative addition that pushes any
    member's violation past ``epsilon`` is dropped. Jobs whose programs fail
    partitioning run independently.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if lookahead < 1 or max_colocate < 1:
        raise ValueError("lookahead and max_colocate must be at least 1")
    jobs: list[Job] = list(queue)
    batches: list[Batch] = []
    while jobs:
        head = jobs[0]
        try:
            if head.ind_epst is None:
                head.ind_epst = independent_epst(head, tree, backend)
        except SchedulingError:
            head.status = "independent"
            head.co_epst = None
            batches.append(Batch(jobs=(head,), partition=None, decision_record={head.id: None}))
            jobs = jobs[1:]
            continue
        members = [head]
        idx = 1
        while idx < len(jobs) and idx < lookahead and len(members) < max_colocate:
            tentative = jobs[idx]
            idx += 1
            try:
                if tentative.ind_epst is None:
                    tentative.ind_epst = independent_epst(tentative, tree, backend)
            except SchedulingError:
                continue
            trial = members + [tentative]
            co = _co_epsts(trial, tree, backend)
            if co is None:
                continue
            if all(_acceptable(_violation(j.ind_epst, co[j.id]), epsilon) for j in trial):
                members = trial
        final_partition = partition_qubits(tree.clone(), [j.program for j in members], backend)
        record: dict[int, float | None] = {}
        for job in members:
            region = next(a.qubits for a in final_partition.assignments if a.program is job.program)
            job.co_epst = epst(job.program, region, backend)
            record[job.id] = _violation(job.ind_epst, job.co_epst)
            job.status = "batched" if len(members) > 1 else "independent"
        batches.append(Batch(jobs=tuple(members), partition=final_partition, decision_record=record))
        chosen = {id(j) for j in members}
        jobs = [j for j in jobs if id(j) not in chosen]
    return batches


def trf(batches) -> float:
    """Trial reduction factor: jobs executed per scheduling batch."""
    if not batches:
        raise ValueError("no batches")
    total = sum(len(b.jobs) for b in batches)
    return total / len(batches)
