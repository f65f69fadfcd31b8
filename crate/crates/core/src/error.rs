use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("torus dimension {0} is not supported (use 1, 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("a box cover needs at least 3 splits per axis, got {0}")]
    TooFewSplits(usize),
    #[error("margin {margin} must lie in (0, {max})")]
    BadMargin { margin: f64, max: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CechError {
    #[error("input is not a cocycle: residual {residual:e} exceeds {tolerance:e}")]
    NotCocycle { residual: f64, tolerance: f64 },
    #[error("cochain degree {degree} exceeds the precomputed overlap depth")]
    DegreeTooHigh { degree: usize },
    #[error("a 0-cochain is not the coboundary of anything")]
    ZeroDegree,
    #[error("cochains live on different covers")]
    CoverMismatch,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GerbeError {
    #[error(transparent)]
    Cech(#[from] CechError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("the transition phases do not form a cocycle: defect {defect:e}")]
    NotCocycle { defect: f64 },
    #[error("the connective structure violates A_jk - A_ik + A_ij = dθ_ijk by {defect:e}")]
    BadConnection { defect: f64 },
    #[error("the curving violates B_j - B_i = dA_ij by {defect:e}")]
    BadCurving { defect: f64 },
    #[error("curvature is not consistent across overlaps: defect {defect:e}")]
    InconsistentCurvature { defect: f64 },
    #[error("gerbes live on different covers")]
    CoverMismatch,
    #[error("malformed dataset: {0}")]
    Dataset(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiftError {
    #[error(transparent)]
    Cech(#[from] CechError),
    #[error(transparent)]
    Gerbe(#[from] GerbeError),
    #[error("{what} has dimension {got}, expected {expected}")]
    DimensionMismatch { what: &'static str, got: usize, expected: usize },
    #[error("lifts cover different vector fields (defect {defect:e})")]
    DifferentVectorFields { defect: f64 },
    #[error("{what} violates its defining relation by {residual:e}")]
    InvariantViolated { what: &'static str, residual: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("trajectory from {start:?} left its chart box at t = {t}")]
    LeftChart { start: Vec<f64>, t: f64 },
    #[error("time {t} exceeds the flow horizon {eps}")]
    BeyondHorizon { t: f64, eps: f64 },
    #[error("step size must be positive, got {0}")]
    BadStep(f64),
    #[error("flow horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error("invalid flow domain: {0}")]
    BadDomain(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CourantError {
    #[error("the 2-form is not closed: |dB| reaches {defect:e}")]
    NotClosed { defect: f64 },
    #[error("local pairings disagree on overlaps by {defect:e}")]
    PatchDisagreement { defect: f64 },
    #[error("the 2-forms are not a curving for the connective structure: defect {defect:e}")]
    NotACurving { defect: f64 },
}
