use thiserror::Error;

/// Errors produced by mesh construction, space assembly, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate element: tet {0} has zero volume")]
    DegenerateElement(usize),
    #[error("duplicate element: tet {0} repeats an earlier tet")]
    DuplicateElement(usize),
    #[error("non-manifold: face {0:?} is shared by more than two tets")]
    NonManifold([usize; 3]),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported space: level {level}, degree {degree}")]
    UnsupportedSpace { level: usize, degree: usize },
    #[error("point outside element")]
    PointOutsideElement,
    #[error("singular geometric map")]
    SingularMap,
    #[error("matrix is not symmetric positive definite")]
    NotSpd,
    #[error("incompatible constraint")]
    IncompatibleConstraint,
    #[error("empty space: no degrees of freedom for level {level}, degree {degree}")]
    EmptySpace { level: usize, degree: usize },
    #[error("dimension cap exceeded: problem size {dim} > cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error(
        "kernel dimension mismatch: eigenvalue threshold found {eigen}, rank oracle found {rank}"
    )]
    KernelMismatch { eigen: usize, rank: usize },
    #[error("star compatibility violated at vertex {vertex}: residual {residual:.3e}")]
    StarCompatibility { vertex: usize, residual: f64 },
    #[error("degree overflow: degree {0} exceeds the supported maximum {1}")]
    DegreeOverflow(usize, usize),
    #[error("connectivity mismatch between meshes")]
    ConnectivityMismatch,
    #[error("oracle space does not nest the coarse space")]
    NotNested,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
