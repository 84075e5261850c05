use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsnnError {
    #[error("argument {value} outside [-1, 1]")]
    Domain { value: f64 },
    #[error("derivative order {0} is not supported (max 2)")]
    UnsupportedOrder(usize),
    #[error("quadrature order {0} is invalid (need N >= 2)")]
    InvalidOrder(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("singular homogenization system (determinant {det:e})")]
    SingularSystem { det: f64 },
    #[error("periodic boundary conditions cannot be homogenized by a polynomial shift")]
    PeriodicInput,
    #[error("degenerate basis determinant DET_{k} = {det:e}")]
    DegenerateDeterminant { k: usize, det: f64 },
    #[error("invalid boundary condition: {0}")]
    InvalidBoundary(String),
    #[error("basis family / boundary mismatch: {0}")]
    FamilyMismatch(String),
    #[error("index {index} out of range for family of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("radius {r} outside [{inner}, {outer}]")]
    RadiusOutOfRange { r: f64, inner: f64, outer: f64 },
    #[error("singular coordinate map: {0}")]
    Singular(String),
    #[error("unknown problem '{name}'; valid names: {valid}")]
    UnknownProblem { name: String, valid: String },
    #[error("problem requires a center value u0 but none was supplied")]
    MissingU0,
    #[error("non-finite {what} encountered at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },
    #[error("training diverged at iteration {iteration}: {what} is not finite")]
    Diverged {
        what: &'static str,
        iteration: usize,
        last_good: Box<crate::model::TensorModel>,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("correction radius h = {h} places stencil points outside the domain")]
    StencilOutsideDomain { h: f64 },
    #[error("residual is not linear in the model parameters (superposition defect {defect:e})")]
    Nonlinear { defect: f64 },
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config field '{field}': {message}")]
    Validation { field: String, message: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CsnnError>;
