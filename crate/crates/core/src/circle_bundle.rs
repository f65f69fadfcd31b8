//! Principal circle bundles in Čech form: the warm-up case for gerbes.
//!
//! A bundle is given by phases `θ_ij` with `g_ij = exp(iθ_ij)`, a connection
//! by 1-forms `A_i` with `A_j - A_i = dθ_ij`, and a lift of a vector field
//! `ξ` by functions `f_i` with `f_j - f_i = -ι_ξ dθ_ij`.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cech::{coboundary, contract, is_phase_cocycle, sup_over_overlaps, Cochain, CocycleReport, Phase, Sampling};
use crate::geometry::{CoveredManifold, KForm, TrigForm, TrigPoly, VectorField};

/// Transition phases of a circle bundle.
#[derive(Clone, Debug)]
pub struct BundleCechData {
    pub theta: Cochain<Phase>,
}

/// Local connection 1-forms `A_i`.
#[derive(Clone, Debug)]
pub struct BundleConnection {
    pub bundle: BundleCechData,
    pub a: Cochain<KForm>,
}

/// A lift `(ξ, {f_i})` of a vector field to the bundle.
#[derive(Clone, Debug)]
pub struct BundleLift {
    pub xi: VectorField,
    pub f: Cochain<KForm>,
}

/// Outcome of a pointwise identity check.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationReport {
    pub max_deviation: f64,
    pub n_points: usize,
}

impl BundleCechData {
    pub fn cover(&self) -> &Arc<CoveredManifold> {
        self.theta.cover()
    }

    /// `δθ ∈ 2πZ`, locally constant.
    pub fn cocycle_report(&self, tol: f64, sampling: Sampling) -> CocycleReport {
        is_phase_cocycle(&self.theta, tol, sampling)
    }
}

/// A topologically trivial bundle `θ = δh` for random phases `h_i`.
pub fn random_bundle(cover: &Arc<CoveredManifold>, seed: u64) -> BundleCechData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h: Cochain<Phase> =
        Cochain::from_fn(cover, 0, 0, |_| Phase(TrigPoly::random(cover.dim(), 3, 2, 1.0, &mut rng).to_field(cover.dim())));
    BundleCechData { theta: coboundary(&h) }
}

/// The degree-one bundle on `T^2`: `θ_ij = 2π (x_j - x_i) y_i` in lifted
/// patch coordinates, with connection `A_i = 2π x_i dy`.
pub fn twisted_bundle(cover: &Arc<CoveredManifold>) -> BundleConnection {
    assert_eq!(cover.dim(), 2, "the clutching preset lives on T^2");
    let theta = Cochain::from_fn(cover, 1, 0, |s| {
        let n = cover.local_coordinate(s[1], 0).sub(&cover.local_coordinate(s[0], 0));
        Phase(n.mul_fn(&cover.local_coordinate(s[0], 1)).scale(TAU))
    });
    let a = Cochain::from_fn(cover, 0, 1, |s| {
        let x = cover.local_coordinate(s[0], 0).scale(TAU);
        KForm::from_components(2, 1, vec![KForm::zero(2, 0), x])
    });
    BundleConnection { bundle: BundleCechData { theta }, a }
}

/// `dθ` as a 1-cochain of 1-forms.
pub fn dlog(theta: &Cochain<Phase>) -> Cochain<KForm> {
    theta.map(1, |_, p| p.0.d())
}

/// A connection solved by partition of unity, shifted by a global 1-form.
pub fn solve_connection(bundle: &BundleCechData, shift: Option<&KForm>) -> BundleConnection {
    let mut a = contract(&dlog(&bundle.theta), bundle.cover().partition());
    if let Some(beta) = shift {
        a = a.map(1, |_, v| v.add(beta));
    }
    BundleConnection { bundle: bundle.clone(), a }
}

/// A random connection on a random bundle.
pub fn random_connection(cover: &Arc<CoveredManifold>, seed: u64) -> BundleConnection {
    let bundle = random_bundle(cover, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x0b5e));
    let beta = TrigForm::random(cover.dim(), 1, 2, 2, 0.5, &mut rng).to_form(cover.dim());
    solve_connection(&bundle, Some(&beta))
}

impl BundleConnection {
    /// Largest violation of `A_j - A_i = dθ_ij`.
    pub fn invariant_residual(&self, sampling: Sampling) -> f64 {
        let da = coboundary(&self.a);
        let dt = dlog(&self.bundle.theta);
        da.max_deviation(&dt, sampling)
    }

    /// `K = dA_i` on each patch.
    pub fn curvature(&self) -> Cochain<KForm> {
        self.a.map(2, |_, a| a.d())
    }
}

impl BundleLift {
    /// Largest violation of `f_j - f_i = -ι_ξ dθ_ij`.
    pub fn invariant_residual(&self, bundle: &BundleCechData, sampling: Sampling) -> f64 {
        let df = coboundary(&self.f);
        let target = dlog(&bundle.theta).map(0, |_, w| w.interior(&self.xi).neg());
        df.max_deviation(&target, sampling)
    }
}

/// `f_i = -ι_ξ A_i`.
pub fn bundle_horizontal_lift(xi: &VectorField, conn: &BundleConnection) -> BundleLift {
    BundleLift { xi: xi.clone(), f: conn.a.map(0, |_, a| a.interior(xi).neg()) }
}

/// `([ξ, η], {ξ(f_i^η) - η(f_i^ξ)})`.
pub fn bundle_lift_bracket(l1: &BundleLift, l2: &BundleLift) -> BundleLift {
    let f = l1.f.map(0, |s, f1| {
        let f2 = l2.f.get(s).unwrap();
        l1.xi.apply(f2).sub(&l2.xi.apply(f1))
    });
    BundleLift { xi: l1.xi.bracket(&l2.xi), f }
}

/// Checks `f_{[ξ,η]^h} - f_{[ξ^h,η^h]} = ι_η ι_ξ K` patchwise.
pub fn bundle_curvature_defect(
    xi: &VectorField,
    eta: &VectorField,
    conn: &BundleConnection,
    sampling: Sampling,
) -> DeviationReport {
    bundle_curvature_defect_signed(xi, eta, conn, 1.0, sampling)
}

/// Same as [`bundle_curvature_defect`] with the curvature term scaled by `sign`.
pub fn bundle_curvature_defect_signed(
    xi: &VectorField,
    eta: &VectorField,
    conn: &BundleConnection,
    sign: f64,
    sampling: Sampling,
) -> DeviationReport {
    let hor = bundle_horizontal_lift(&xi.bracket(eta), conn);
    let br = bundle_lift_bracket(&bundle_horizontal_lift(xi, conn), &bundle_horizontal_lift(eta, conn));
    let rhs = conn.curvature().map(0, |_, k| k.interior(xi).interior(eta));
    let (max_deviation, _, n_points) = sup_over_overlaps(conn.a.cover(), 0, sampling, |s, ctx| {
        let lhs = hor.f.get(s).unwrap().values(ctx)[0] - br.f.get(s).unwrap().values(ctx)[0];
        (lhs - sign * rhs.get(s).unwrap().values(ctx)[0]).abs()
    });
    DeviationReport { max_deviation, n_points }
}
