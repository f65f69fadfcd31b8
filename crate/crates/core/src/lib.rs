//! Infinitesimal symmetries of gerbes, computed on a Čech cover of a torus.
//!
//! The crate models a gerbe on `T^d` by its Čech data (transition phases,
//! connective structure, curving) over a box cover, and implements the
//! categories of lifts of vector fields together with their 2-term
//! L-infinity algebra structures, the exact Courant algebroid they map into,
//! and the finite flows they integrate to. Every identity is checked
//! numerically with forward-mode automatic differentiation.
//!
//! All iR-valued quantities (phases, connection forms, curvings, lift data)
//! are stored by their imaginary part, so `dlog g = i dθ` is stored as `dθ`.

// Tolerance checks are written `!(x <= tol)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cech;
pub mod circle_bundle;
pub mod conn_lifts;
pub mod courant;
pub mod error;
pub mod flows;
pub mod geometry;
pub mod gerbe;
pub mod jet;
pub mod lifts;
pub mod linf;
pub mod suite;

pub use error::{CechError, CourantError, FlowError, GeometryError, GerbeError, LiftError};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/cech.md")]
    mod cech {}
    #[doc = include_str!("../../../book/src/circle-bundles.md")]
    mod circle_bundles {}
    #[doc = include_str!("../../../book/src/gerbes.md")]
    mod gerbes {}
    #[doc = include_str!("../../../book/src/lifts.md")]
    mod lifts {}
    #[doc = include_str!("../../../book/src/connective-lifts.md")]
    mod connective_lifts {}
    #[doc = include_str!("../../../book/src/courant.md")]
    mod courant {}
    #[doc = include_str!("../../../book/src/flows.md")]
    mod flows {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
