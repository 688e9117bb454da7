"""Compilation of quantum-volume style circuits into multi-qubit ZZ layers."""

from .cartan import CartanFactors, DecompositionError, cartan_decompose, cartan_volume, l1_phases
from .circuit_ir import (
    CircuitIR,
    CompiledCircuit,
    FormatError,
    HaarSampler,
    SingleQubitLayer,
    SU4Layer,
    circuit_unitary,
    deserialize,
    generate_qv_circuit,
    load,
    save,
    serialize,
    toffoli_matrix,
    toffoli_mq_circuit,
)
from .lhdecomp import LHFactors, RHFactors, cv_sinusoid, lh_decompose, rh_decompose
from .linalg import phase_distance
from .mqlayer import MQLayer, fuse, nuclear_norm, participation, xx_to_zz
from .noise import NoiseModel, dephase_probabilities, depol_probabilities
from .optimizer import (
    CompileError,
    CompileOptions,
    OptimizerReport,
    cartan_baseline_nuc,
    compile_circuit,
    compile_fused,
    compile_naive,
    compile_optimized,
    optimize_block_ry,
)
from .pullback import LHBareFactors, LHRHFactors, split_lh, y_pullback
from .sim import (
    QVHarness,
    QVReport,
    apply_gate,
    heavy_output_probability,
    qv_pass,
    sequential_tq_realization,
    threshold_scan,
)

__version__ = "0.1.0"
