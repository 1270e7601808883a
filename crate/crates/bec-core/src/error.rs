use thiserror::Error;

/// Errors produced by model construction, eigensolvers, quadrature, and index assembly.
#[derive(Debug, Error)]
pub enum BecError {
    /// The symbol's band gap closes (or nearly closes) at a momentum point, so the
    /// band projector is undefined there.
    #[error("gapless point at k = ({k1:.6}, {k2:.6}): band separation {separation:.3e}")]
    GaplessPoint { k1: f64, k2: f64, separation: f64 },

    /// A grid or scan parameter is unusable.
    #[error("bad grid: {reason}")]
    BadGrid { reason: String },

    /// The requested operation does not apply to the given model or inputs.
    #[error("{operation} not applicable: {reason}")]
    NotApplicable {
        operation: &'static str,
        reason: String,
    },

    /// Adaptive quadrature exhausted its panel budget before reaching the tolerance.
    #[error(
        "quadrature did not reach tol = {tol:.2e}: error estimate {estimate:.3e} after {panels} panels"
    )]
    QuadratureDivergence {
        tol: f64,
        estimate: f64,
        panels: usize,
    },

    /// The equatorial image of the unit vector field passed too close to the poles,
    /// so its winding number is ill-defined.
    #[error("degenerate equator loop: in-plane norm {min_norm:.3e} at sample {index}")]
    DegenerateLoop { min_norm: f64, index: usize },

    /// The accumulated winding angle of an equator loop did not land near an
    /// integer multiple of 2π, so the sampled loop is unresolved.
    #[error("winding angle residual {residual:.3e} rad exceeds the rounding budget; increase n_samples")]
    WindingResidual { residual: f64 },

    /// An eigenvalue or eigenvector computation failed to converge.
    #[error("eigensolver failure (dim {dim}): {reason}")]
    EigensolverFailure { reason: String, dim: usize },

    /// The boundary-condition vector is numerically degenerate and cannot be
    /// normalized into a projection basis.
    #[error("ill-conditioned boundary condition: |v0| = {norm:.3e}")]
    IllConditionedBc { norm: f64 },

    /// A dispersion branch meets the Fermi line with nearly equal slope, so the
    /// crossing sign cannot be resolved at this scan resolution.
    #[error(
        "tangential crossing near k1 = {k1:.6}: slope difference {slope_gap:.3e} below 1e-6; refine the scan"
    )]
    TangentialCrossing { k1: f64, slope_gap: f64 },

    /// Closed-form merging-point expressions divide by Im z.
    #[error("merging point undefined for real z (z = {re:.6} + {im:.6}i)")]
    ImZZero { re: f64, im: f64 },

    /// The half-plane edge index is not defined on the boundary circle arc Im z = 0.
    #[error("half-plane index undefined for |Im z| < 1e-9 (z = {re:.6} + {im:.6}i)")]
    BoundaryCaseImZZero { re: f64, im: f64 },

    /// A closed-form reference state does not exist for the supplied profile.
    #[error("analytic state {label} invalid for this profile: {reason}")]
    InvalidForProfile { label: String, reason: String },

    /// A matrix expected to be Hermitian is not, beyond tolerance.
    #[error("matrix {name} not Hermitian: deviation {deviation:.3e}")]
    NotHermitian { name: String, deviation: f64 },

    /// The spin-1 operator identity failed to hold to tolerance.
    #[error(
        "operator identity residual {max:.3e} exceeds {tol:.1e} (n = {n}, base seed {seed})"
    )]
    IdentityResidual {
        max: f64,
        tol: f64,
        n: usize,
        seed: u64,
    },

    /// Configuration file or override could not be parsed or validated.
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    /// I/O failure while reading configs or writing reports.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// CSV emission failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// An error from a lower module, labeled with the pipeline stage that
    /// produced it.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<BecError>,
    },
}

impl BecError {
    /// Wraps the error with the pipeline stage it arose in.
    pub fn with_stage(self, stage: &'static str) -> BecError {
        BecError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with any stage labels unwrapped.
    pub fn root(&self) -> &BecError {
        match self {
            BecError::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, BecError>;
