"""Parse a circuit, inspect its size counts, and walk its dependency DAG.

The front layer is the set of CNOTs whose dependencies are all satisfied;
a front gate is critical when resolving it unlocks more gates. These two
queries drive the routers in demos 04.
"""
from qmultiprog import build_dag, critical_gates, front_layer, serialize_program
from qmultiprog.fixtures import load_benchmark

program = load_benchmark("toffoli_3")
print(f"{program.name}: {program.n_qubits} qubits, {program.n_cnot} CNOTs, "
      f"{program.gate_count} gates, CNOT density {program.cnot_density:.2f}")

dag = build_dag(program)
print(f"dependency edges: {len(dag.edges)} (at most two per gate)")

executed = set()
layer = 0
while True:
    front = front_layer(dag, executed)
    if not front:
        # drain any non-CNOT gates that are ready (they never block)
        ready = [g.id for g in program.gates
                 if g.id not in executed and dag.predecessors[g.id] <= executed]
        if not ready:
            break
        executed.update(ready)
        continue
    critical = critical_gates(dag, front)
    print(f"layer {layer}: front CNOTs {sorted(front)}, critical {sorted(critical)}")
    executed.update(front)
    layer += 1

print("\nround-trip through the serializer:")
print(serialize_program(program)[:160], "...")
