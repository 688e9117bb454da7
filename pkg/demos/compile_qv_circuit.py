"""Compile one random QV circuit in every mode and compare entangling cost."""

import sys

from mqcompile import CompileOptions, circuit_unitary, compile_circuit, generate_qv_circuit
from mqcompile.linalg import phase_distance

n = int(sys.argv[1]) if len(sys.argv) > 1 else 8
c = generate_qv_circuit(n, seed=0)
u = circuit_unitary(c) if n <= 10 else None

for mode in ("naive3L", "fused", "fused+optimized"):
    cc, rep = compile_circuit(c, CompileOptions(mode=mode))
    line = f"{mode:>16}: layers={cc.mq_count:3d} total_nuc={rep.total_nuc:8.3f} ratio={rep.ratio:.4f} time={rep.wall_time:.1f}s"
    if u is not None:
        line += f" distance={phase_distance(circuit_unitary(cc), u):.1e}"
    print(line)
