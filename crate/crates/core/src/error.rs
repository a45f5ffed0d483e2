use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("distance field needs at least one source vertex")]
    EmptySourceSet,

    #[error("bundle is not flat: holonomy defect {defect:.3e} on simplex {simplex}")]
    FlatnessViolation { simplex: usize, defect: f64 },

    #[error("degree {degree} out of range for a {dim}-dimensional mesh")]
    DegreeOutOfRange { degree: usize, dim: usize },

    #[error("degenerate simplex {index} of dimension {dim} (volume {volume:.3e})")]
    DegenerateSimplex {
        dim: usize,
        index: usize,
        volume: f64,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("exponent q = {0} is below 1")]
    InvalidExponent(f64),

    #[error("operator is singular: {0}")]
    SingularOperator(String),

    #[error("not enough samples: {0}")]
    InsufficientSamples(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("ball of radius {radius} is too small (needs at least {min_radius})")]
    BallTooSmall { radius: f64, min_radius: f64 },

    #[error("right-hand side has a harmonic component of relative size {relative:.3e}")]
    NotOrthogonal { relative: f64 },

    #[error("form is not closed: |df|/|f| = {relative:.3e}")]
    NotClosed { relative: f64 },

    #[error("closed form is not exact: residual {residual:.3e}, harmonic obstruction {obstruction_norm:.3e}")]
    ObstructionNonExact {
        residual: f64,
        obstruction_norm: f64,
    },

    #[error("exponents are not admissible: {0}")]
    InadmissibleExponents(String),

    #[error("ensemble is degenerate: every sample has zero norm")]
    EnsembleDegenerate,

    #[error("grid interior is disconnected ({components} components)")]
    DisconnectedInterior { components: usize },

    #[error("dbar system is rank deficient (residual {residual:.3e})")]
    RankDeficient { residual: f64 },

    #[error("classical Hormander bound violated: |u|^2 = {u_norm_sq:.6e} > N_f = {n_f:.6e}")]
    BaselineViolated { u_norm_sq: f64, n_f: f64 },

    #[error("factorization failed: {0}")]
    Factorization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
