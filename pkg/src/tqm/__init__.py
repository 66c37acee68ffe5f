"""tqm: intensive states of affairs, multi-screen arrangements and transport.

The pieces fit together bottom-up: ``linalg`` supplies the dense complex
primitives, ``states`` the validated intensive valuations and power graphs,
``arrangements`` the screen/detector machinery with basis transport and the
two invariance checks, ``contextuality`` the binary-vs-intensive contrast,
and ``labfile``/``cli`` the file format and command surface.
"""

from .arrangements import (
    BasisChange,
    DetectorBasis,
    ExperimentalArrangement,
    Factorization,
    QuantumLab,
    build_arrangement,
    check_basis_invariance,
    check_factorization_invariance,
    coarse_grain,
    marginal_intensities,
    potentia,
    potentia_table,
    power_of_action,
    transform_arrangement,
)
from .contextuality import (
    BinaryValuation,
    ContextFamily,
    ExhaustionCertificate,
    contextuality_report,
    enumerate_binary_valuations,
    find_binary_valuation,
    intensive_valuation_table,
    ks18_family,
    validate_context_family,
)
from .errors import TqmError
from .linalg import (
    commutator_norm,
    is_projector,
    is_unitary,
    kron,
    nu_embed,
    partial_trace,
)
from .states import (
    GivTable,
    IntensiveStateOfAffairs,
    Power,
    PowerGraph,
    check_additivity,
    fit_isa,
    intensity,
    make_isa,
    mix,
    power_graph,
    pure_isa,
)

__version__ = "0.1.0"

__all__ = [
    "BasisChange",
    "BinaryValuation",
    "ContextFamily",
    "DetectorBasis",
    "ExhaustionCertificate",
    "ExperimentalArrangement",
    "Factorization",
    "GivTable",
    "IntensiveStateOfAffairs",
    "Power",
    "PowerGraph",
    "QuantumLab",
    "TqmError",
    "build_arrangement",
    "check_additivity",
    "check_basis_invariance",
    "check_factorization_invariance",
    "coarse_grain",
    "commutator_norm",
    "contextuality_report",
    "enumerate_binary_valuations",
    "find_binary_valuation",
    "fit_isa",
    "intensity",
    "intensive_valuation_table",
    "is_projector",
    "is_unitary",
    "kron",
    "ks18_family",
    "make_isa",
    "marginal_intensities",
    "mix",
    "nu_embed",
    "partial_trace",
    "potentia",
    "potentia_table",
    "power_graph",
    "power_of_action",
    "pure_isa",
    "transform_arrangement",
    "validate_context_family",
]
