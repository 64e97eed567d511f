use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LabError {
    #[error("invalid algebra spec: {0}")]
    InvalidSpec(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("element has non-finite entries")]
    NonFinite,

    #[error("eigensolver did not converge on a {size}x{size} block after {sweeps} sweeps")]
    EigenNonConvergence { size: usize, sweeps: usize },

    #[error("resolvent point {z} lies within {distance:e} of spectral value {eigenvalue}")]
    Singular {
        z: Complex64,
        eigenvalue: Complex64,
        distance: f64,
    },

    #[error("resolvent residual {residual:e} exceeds solver tolerance {tolerance:e}")]
    ResolventResidual { residual: f64, tolerance: f64 },

    #[error("{target} is not a spectral value (nearest {nearest:?})")]
    TargetNotInSpectrum {
        target: Complex64,
        nearest: Option<Complex64>,
    },

    #[error("targets {0} and {1} refer to the same spectral value")]
    DuplicateTarget(Complex64, Complex64),

    #[error("contour radius {radius:e} around {center} is below the floor {floor:e}")]
    ContourCollapse {
        center: Complex64,
        radius: f64,
        floor: f64,
    },

    #[error("element is not idempotent: |p^2 - p| = {defect:e}")]
    NotIdempotent { defect: f64 },

    #[error("element is not maximal finite-rank: rank {rank}, {nonzero_points} distinct nonzero spectral values")]
    NotMaximal { rank: usize, nonzero_points: usize },

    #[error("zero element has no diagonalization")]
    ZeroElement,

    #[error("not traceless: block {block} has trace {trace}")]
    NotTraceless { block: usize, trace: Complex64 },

    #[error("degenerate projection: pairing {pairing} is numerically zero")]
    DegenerateProjection { pairing: Complex64 },

    #[error("a single matrix block admits no tracial functional outside C*Tr")]
    NoCounterexample,

    #[error("no probe near the identity landed in E(a) after {attempts} attempts")]
    ProbeOutsideGenericSet { attempts: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rank certification failed: spectral rank {spectral}, classical rank {classical}")]
    RankCertification { spectral: usize, classical: usize },

    #[error("multiplicity at {value} inconsistent: perturbation counts {perturbation:?}, projection rank {projection:?}")]
    MultiplicityInconsistency {
        value: Complex64,
        perturbation: Vec<usize>,
        projection: Option<usize>,
    },

    #[error("trace certification failed: spectral {spectral}, classical {classical}")]
    TraceCertification {
        spectral: Complex64,
        classical: Complex64,
    },

    #[error("{theorem} violated: {detail}")]
    TheoremViolation { theorem: String, detail: String },
}

impl LabError {
    /// Certification and theorem failures signal an implementation defect
    /// rather than bad input.
    pub fn is_certification_failure(&self) -> bool {
        matches!(
            self,
            LabError::RankCertification { .. }
                | LabError::MultiplicityInconsistency { .. }
                | LabError::TraceCertification { .. }
                | LabError::TheoremViolation { .. }
        )
    }

    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::InvalidSpec(_) => "invalid_spec",
            LabError::ShapeMismatch(_) => "shape_mismatch",
            LabError::NonFinite => "non_finite",
            LabError::EigenNonConvergence { .. } => "eigen_non_convergence",
            LabError::Singular { .. } => "singular",
            LabError::ResolventResidual { .. } => "resolvent_residual",
            LabError::TargetNotInSpectrum { .. } => "target_not_in_spectrum",
            LabError::DuplicateTarget(..) => "duplicate_target",
            LabError::ContourCollapse { .. } => "contour_collapse",
            LabError::NotIdempotent { .. } => "not_idempotent",
            LabError::NotMaximal { .. } => "not_maximal",
            LabError::ZeroElement => "zero_element",
            LabError::NotTraceless { .. } => "not_traceless",
            LabError::DegenerateProjection { .. } => "degenerate_projection",
            LabError::NoCounterexample => "no_counterexample",
            LabError::ProbeOutsideGenericSet { .. } => "probe_outside_generic_set",
            LabError::InvalidParameter(_) => "invalid_parameter",
            LabError::RankCertification { .. } => "rank_certification",
            LabError::MultiplicityInconsistency { .. } => "multiplicity_inconsistency",
            LabError::TraceCertification { .. } => "trace_certification",
            LabError::TheoremViolation { .. } => "theorem_violation",
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
