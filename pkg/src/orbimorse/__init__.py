"""Morse chain complexes for orbifolds over the integers.

The package builds the two stabilizer-weighted chain complexes of an
orbifold Morse datum, computes exact integer homology through Smith normal
form, performs the critical-point stabilization transform, discovers Morse
data numerically on quotient surfaces in 3-space, and cross-checks quotient
homology against a simplicial model of the underlying space.
"""

from .chain_complex import FreeChainComplex, euler_characteristic, homology, verify_complex
from .exact_linalg import (
    HomologyGroup,
    IntegerMatrix,
    SmithDecomposition,
    homology_at,
    rank,
    smith_normal_form,
)
from .morse_datum import (
    CriticalPointRecord,
    FlowCount,
    MorseDatum,
    coinvariant_complex,
    invariant_complex,
    orbifold_euler,
    ratio_identity_check,
    underlying_euler,
    validate,
)
from .simplicial_oracle import (
    SimplicialComplex,
    compare_homology,
    simplicial_homology,
    suspension,
)
from .stabilization import (
    SphereMorseDatum,
    SphereOrbit,
    StabilizationResult,
    UnstableLocalData,
    builtin_sphere_datum,
    stabilize_point,
)

__version__ = "0.1.0"
