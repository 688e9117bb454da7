"""Compare fused MQ layers against sequential two-qubit gates under noise.

Finds the dephasing error rate at which each realization stops passing the
heavy-output test. A small circuit count keeps this to a few minutes.
"""

import sys

from mqcompile import generate_qv_circuit
from mqcompile.sim import TQ_MODE, QVHarness, dephasing_events, realize, sequential_tq_realization

n = int(sys.argv[1]) if len(sys.argv) > 1 else 4

c = generate_qv_circuit(n, 0)
mq, tq = dephasing_events(realize(c, "fused")), dephasing_events(sequential_tq_realization(c))
print(f"N={n}: dephasing events per circuit, MQ={mq} TQ={tq} ratio={mq / tq:.3f}")

for mode in ("fused", TQ_MODE):
    p, trail = QVHarness(n, mode, n_circuits=50, shots=200, seed=n).threshold("dephasing", p_hi=0.1)
    print(f"{mode:>13}: threshold p={p:.4f} after {len(trail)} bisection steps")
