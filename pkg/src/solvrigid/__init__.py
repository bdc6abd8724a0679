"""Executable model geometry: block quasi-metrics, solvable model spaces,
similarity algebra, conformal structures, conjugation pipelines, and
almost-translation kernel algorithms."""

from .errors import (
    ConvergenceError,
    CoverageError,
    DimensionMismatch,
    DomainError,
    InfiniteIndexSuspected,
    InputError,
    NotInKernel,
    NotInUniformSubgroup,
    SolvRigidError,
)
from .spectral import BlockPoint, SpectralData, random_pairs, random_point
from .quasimetric import (
    ChainEnergyEstimate,
    ChainGrid,
    chain_energy,
    dilate,
    distance,
    enumerate_chain_cost,
    estimate_qsim_constants,
)
from .funcexpr import (
    AbsPow,
    BlockVar,
    Clamp,
    Const,
    FuncExpr,
    Lin,
    Osc,
    PMax,
    PMin,
    Precompose,
    Pwl,
    Scale,
    Sum,
    expr_from_json,
    probe_lipschitz,
)
from .nilpotent import (
    AlmostTranslation,
    ExactGenerator,
    ExactWord,
    OrbitCount,
    RootCertificate,
    approx_lth_root,
    default_probes,
    displacement_bound,
    epsilon_bound,
    orbit_growth,
    root_power_word,
    tau_project,
)
from .mapalg import (
    ASimMap,
    BlockMap,
    BoundaryPair,
    Classification,
    FirstBlockAffineMap,
    ReciprocityVerdict,
    RotationWitness,
    SimMap,
    affine_inverse,
    check_reciprocity,
    check_triangularity,
    classify,
    compose,
    conjugate_almost_by_sim,
    height_hom,
    invert,
    rotation_hom,
    rotation_rigidity_witness,
    stretch_hom,
)
from .solvgroup import (
    SolvPoint,
    SolvSpec,
    SuspendedMap,
    VerticalGeodesic,
    boundary_of_height_isometry,
    identity_point,
    inverse,
    level_distance,
    multiply,
    pair_to_point,
    pair_to_point_bisect,
    suspend_boundary_map,
)
from .conformal import (
    ConfField,
    act,
    circumcenter,
    conf_class,
    conformality_defect,
    ddist,
    dilatation,
    invariant_structure,
    kdist,
    measure_distortion_check,
)
from .tukia import (
    ConjugationReport,
    GroupSample,
    NormalizedSample,
    OneDConjugator,
    OneDGenerator,
    RadialReport,
    SupMeasure1D,
    conjugator_1d,
    normalize_stretch,
    radial_conjugator,
    reduced_words,
    sup_measure_1d,
    verify_conjugation,
)

__version__ = "0.1.0"
