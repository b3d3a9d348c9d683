"""Prescribed-diagonal constructions and majorization at finite resolution.

Operators are n x n hermitian matrices with the normalized trace
``tau = Tr / n``; the diagonal matrices play the role of the masa and
``pinch`` is the conditional expectation onto them.
"""
from .averaging import TwoBlockFrame, averaging_unitary, match_spectral_projections, transport_unitary
from .choquet import (
    AtomicMeasure,
    FiniteSpectrumSolution,
    SplitTarget,
    finite_spectrum_solve,
    measure_majorized,
    measure_split,
    spectral_measure,
)
from .core import DiagonalProjection, HermitianOperator, eigenvalues, pinch, spectral_decomposition, trace
from .errors import SchurHornError
from .majorization import KyFanCurve, Relation, SpectralScale, classify, ky_fan, slack, spectral_scale
from .oracle import InstanceSpec, check_partial_solution, classical_construct, generate_instance
from .solver import (
    PartialSolution,
    SolveConfig,
    SolveInfo,
    carpenter,
    eqm_refine,
    local_step,
    sh1part_step,
    sht2_step,
    solve_exact,
    solve_orbit,
)

__all__ = [
    "AtomicMeasure",
    "DiagonalProjection",
    "FiniteSpectrumSolution",
    "HermitianOperator",
    "InstanceSpec",
    "KyFanCurve",
    "PartialSolution",
    "Relation",
    "SchurHornError",
    "SolveConfig",
    "SolveInfo",
    "SpectralScale",
    "SplitTarget",
    "TwoBlockFrame",
    "averaging_unitary",
    "carpenter",
    "check_partial_solution",
    "classical_construct",
    "classify",
    "eigenvalues",
    "eqm_refine",
    "finite_spectrum_solve",
    "generate_instance",
    "ky_fan",
    "local_step",
    "match_spectral_projections",
    "measure_majorized",
    "measure_split",
    "pinch",
    "sh1part_step",
    "sht2_step",
    "slack",
    "solve_exact",
    "solve_orbit",
    "spectral_decomposition",
    "spectral_measure",
    "spectral_scale",
    "trace",
    "transport_unitary",
]
