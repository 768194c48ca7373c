use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid chart: {0}")]
    InvalidChart(&'static str),
    #[error("field has {got} samples but the chart holds {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields are sampled on different charts")]
    ChartMismatch,
    #[error("non-finite sample at grid index {index}")]
    NonFinite { index: usize },
    #[error("space form constant must be -1, 0 or 1, got {0}")]
    InvalidSpaceForm(i64),
    #[error("data sets live in different space forms")]
    SpaceFormMismatch,

    #[error("invalid grid loop: {0}")]
    InvalidLoop(&'static str),
    #[error("field nearly vanishes on the loop (min modulus {min_modulus:e} < floor {floor:e})")]
    ZeroOnLoop { min_modulus: f64, floor: f64 },
    #[error("loop too coarse: phase step {step:.3} rad at loop position {position}")]
    PhaseStepTooLarge { step: f64, position: usize },
    #[error("winding sum {turns:.3} is not within 0.25 of an integer")]
    NonIntegerWinding { turns: f64 },

    #[error("invalid path: {0}")]
    InvalidPath(&'static str),
    #[error("non-finite frame coefficients near grid index {index}")]
    NonFiniteCoefficients { index: usize },
    #[error("integrability check failed: residual {linf:e} exceeds threshold {threshold:e}")]
    IntegrabilityRejected { linf: f64, threshold: f64 },
    #[error("reconstruction failed: cross-path defect {defect:e} exceeds ceiling {ceiling:e}")]
    ReconstructionFailed { defect: f64, ceiling: f64 },
    #[error("cannot project the zero vector")]
    ZeroVector,
    #[error("lift leaves the quadric: |(F,F) - c| = {deviation:e}")]
    QuadricViolation { deviation: f64 },
    #[error("degenerate metric at grid index {index}")]
    DegenerateMetric { index: usize },

    #[error("evaluation mask is empty")]
    EmptyMask,
    #[error("data is not Bonnet-admissible: r18 = {linf:e} exceeds {threshold:e}")]
    NotAdmissible { linf: f64, threshold: f64 },
    #[error("psi vanishes at grid index {index}")]
    PsiVanishes { index: usize },
    #[error("Pfaff closure defect {defect:e} exceeds ceiling {ceiling:e}")]
    ClosureDefect { defect: f64, ceiling: f64 },
    #[error("field is not harmonic: flat laplacian {linf:e} exceeds {threshold:e}")]
    NotHarmonic { linf: f64, threshold: f64 },
    #[error("harmonic conjugate is multivalued: period {period:e}")]
    MultivaluedConjugate { period: f64 },
    #[error("field is not holomorphic: Cauchy-Riemann residual {linf:e} exceeds {threshold:e}")]
    NotHolomorphic { linf: f64, threshold: f64 },
    #[error("h_z vanishes at grid index {index}; w-coordinate is singular")]
    SingularCoordinate { index: usize },
    #[error("not a pair: the two cubic differentials coincide")]
    NotAPair,
    #[error("moduli differ: max ||psi1| - |psi2|| = {linf:e}")]
    ModulusMismatch { linf: f64 },
    #[error("branch unwrapping inconsistent around cell ({ix}, {iy})")]
    BranchHolonomy { ix: usize, iy: usize },
    #[error("field vanishes identically")]
    ZeroField,

    #[error("constant data violates the Gauss equation: residual {residual:e}")]
    ConstraintViolated { residual: f64 },
    #[error("no profile solution: {0}")]
    SignObstruction(&'static str),
    #[error("profile solution escaped |u| <= cap at x = {x}")]
    ProfileBlowUp { x: f64 },
}
