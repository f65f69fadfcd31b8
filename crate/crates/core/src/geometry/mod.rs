//! Smooth geometry of covered tori: points, forms, vector fields, exterior
//! calculus, and the good cover with its partition of unity.

pub mod calculus;
pub mod cover;
pub mod field;
pub mod trig;

pub use calculus::{
    apply_vector, exterior_derivative, interior_product, lie_derivative, vector_bracket, wedge, DegreeWarning, Flagged,
};
pub use cover::{make_torus_cover, CoveredManifold, Partition, PartitionKind, Patch, Simplex};
pub use field::{basis, EvalCtx, KForm, Point, ScalarField, VectorField};
pub use trig::{random_scalar, random_vector_field, TrigForm, TrigPoly, TrigTerm};
