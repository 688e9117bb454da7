"""Build the Toffoli gate from three multi-qubit ZZ layers and check it."""

from mqcompile import circuit_unitary, toffoli_matrix, toffoli_mq_circuit
from mqcompile.linalg import phase_distance
from mqcompile.mqlayer import nuclear_norm

c = toffoli_mq_circuit()
print(f"MQ layers: {c.mq_count}, ZZ couplings: {c.coupling_count()}")
for i, layer in enumerate(c.mq_layers):
    print(f"  layer {i}: {dict(layer.couplings)}  nuc={nuclear_norm(layer):.4f}")

# The product of all layers and dressings should equal Toffoli up to a global phase.
print(f"distance to Toffoli: {phase_distance(circuit_unitary(c), toffoli_matrix()):.2e}")
