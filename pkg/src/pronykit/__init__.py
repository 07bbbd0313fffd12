"""Spike-train moment solvers and piecewise-smooth Fourier reconstruction.

The package covers, in order of the data flow:

- core: spike-signal containers, the forward moment map and the confluent
  Vandermonde linear part;
- solvability: Hankel pencil, rank/minor classification, node-escape
  diagnostics;
- solve: global inversion with multiplicity detection;
- divided: the finite-difference basis that keeps inversion well-posed
  through node collisions;
- stability: explicit fixed-structure perturbation bounds and their Monte
  Carlo validation;
- fourier: jump recovery from truncated Fourier data at half and full
  accuracy order, plus the model synthesizer;
- bench / oracle / cli: experiment harness, closed-form cross-checks and
  the command-line front end.
"""

from .core import (
    MomentSequence,
    MultiplicityStructure,
    SpikeSignal,
    confluent_vandermonde,
    falling_factorial,
    moment_jacobian,
    multiplicity_structure,
    prony_mapping,
    solve_coefficient_system,
)
from .divided import (
    DDSolution,
    DividedDifferenceBasis,
    dd_basis,
    dd_moments,
    dd_to_standard,
    solve_prony_dd,
)
from .errors import (
    BranchAmbiguity,
    DegenerateInput,
    IllConditionedDDSystem,
    NoRootNearCircle,
    PronyFailure,
    PronykitError,
    ReconstructionError,
    ResidualTooLarge,
    RootFindingFailure,
    SingularSystem,
    Unsolvable,
)
from .fourier import (
    FourierData,
    JumpEstimate,
    PiecewiseModel,
    ReconstructionResult,
    SmoothPart,
    bernoulli_poly,
    decimated_polynomial,
    fullorder_single_jump,
    halforder_single_jump,
    localize_jump,
    phi_eval,
    phi_fourier,
    prony_order0_jumps,
    reconstruct,
    synthesize_fourier,
)
from .oracle import oracle_prony_small
from .solvability import (
    EscapeReport,
    HankelPencil,
    SolvabilityReport,
    build_hankel,
    classify,
    escape_diagnostic,
)
from .solve import (
    RationalSolution,
    polynomial_roots,
    rational_from_signal,
    solve_prony,
    stieltjes_taylor,
)
from .stability import (
    StabilityBounds,
    ValidationReport,
    restricted_jacobian,
    stability_bounds,
    validate_bounds,
)

__version__ = "0.1.0"
