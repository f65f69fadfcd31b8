//! Lifts of vector fields to a gerbe in Čech form.
//!
//! A lift of `ξ` is a 1-cochain `{f_ij}` with `δf = ι_ξ dθ`. Morphisms are
//! 0-cochains `{u_i}` with `f' - f = δu`. Lifts form a 2-term L∞-algebra with
//! `d{u} = (0, δu)`, the bracket `([ξ,η], ξ(f_η) - η(f_ξ))`, the action
//! `[x, u] = ξ(u_i)` and vanishing Jacobiator.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cech::{coboundary, solve_coboundary_with, sup_over_overlaps, Cochain, Sampling, SolveCheck};
use crate::error::LiftError;
use crate::gerbe::{ConnectiveStructureData, CurvingData, GerbeCechData, CHECK_SAMPLING};
use crate::geometry::{random_vector_field, CoveredManifold, KForm, PartitionKind, Point, TrigPoly, VectorField};
use crate::jet::Jet;
use crate::linf::{check_linfinity, Corruption, LInfinityReport, TwoTermLInfinity};

/// A lift `(ξ, {f_ij})`.
#[derive(Clone, Debug)]
pub struct Lift {
    pub xi: VectorField,
    pub f: Cochain<KForm>,
}

/// A morphism `u: source → target` with `f_target - f_source = δu`.
#[derive(Clone, Debug)]
pub struct LiftMorphism {
    pub u: Cochain<KForm>,
    pub source: Lift,
    pub target: Lift,
}

/// `ι_ξ dθ` as a 2-cochain of functions.
pub fn lift_target(xi: &VectorField, g: &GerbeCechData) -> Cochain<KForm> {
    g.dlog().map(0, |_, w| w.interior(xi))
}

impl Lift {
    pub fn cover(&self) -> &Arc<CoveredManifold> {
        self.f.cover()
    }

    /// Largest violation of `f_jk - f_ik + f_ij = ι_ξ dθ_ijk`.
    pub fn invariant_residual(&self, g: &GerbeCechData, sampling: Sampling) -> f64 {
        coboundary(&self.f).max_deviation(&lift_target(&self.xi, g), sampling)
    }
}

impl LiftMorphism {
    /// Largest violation of `f' - f = δu`.
    pub fn invariant_residual(&self, sampling: Sampling) -> f64 {
        let lhs = self.target.f.sub(&self.source.f);
        lhs.max_deviation(&coboundary(&self.u), sampling)
    }
}

fn check_dim(cover: &CoveredManifold, xi: &VectorField) -> Result<(), LiftError> {
    if xi.dim() != cover.dim() {
        return Err(LiftError::DimensionMismatch { what: "vector field", got: xi.dim(), expected: cover.dim() });
    }
    Ok(())
}

/// A lift of `ξ` solved with the standard partition of unity.
pub fn solve_lift(xi: &VectorField, g: &GerbeCechData) -> Result<Lift, LiftError> {
    solve_lift_with(xi, g, PartitionKind::Standard)
}

/// A lift of `ξ` solved with the given partition of unity.
pub fn solve_lift_with(xi: &VectorField, g: &GerbeCechData, kind: PartitionKind) -> Result<Lift, LiftError> {
    let cover = g.cover();
    check_dim(cover, xi)?;
    let f = solve_coboundary_with(&lift_target(xi, g), cover.partition_of(kind), SolveCheck::default())?;
    Ok(Lift { xi: xi.clone(), f })
}

/// Largest `|ξ - η|` over patch samples.
pub fn vector_field_distance(cover: &CoveredManifold, xi: &VectorField, eta: &VectorField, sampling: Sampling) -> f64 {
    let diff = xi.sub(eta);
    sup_over_overlaps(cover, 0, sampling, |_, ctx| diff.max_abs(ctx)).0
}

/// The morphism `ℓ → ℓ'`, normalized so that `u_0` vanishes at the center
/// of patch 0.
pub fn find_morphism(l: &Lift, l2: &Lift) -> Result<LiftMorphism, LiftError> {
    find_morphism_with(l, l2, PartitionKind::Standard)
}

/// [`find_morphism`] with a chosen partition of unity.
pub fn find_morphism_with(l: &Lift, l2: &Lift, kind: PartitionKind) -> Result<LiftMorphism, LiftError> {
    let cover = l.cover().clone();
    let defect = vector_field_distance(&cover, &l.xi, &l2.xi, CHECK_SAMPLING);
    if !(defect <= 1e-12) {
        return Err(LiftError::DifferentVectorFields { defect });
    }
    let raw = solve_coboundary_with(&l2.f.sub(&l.f), cover.partition_of(kind), SolveCheck::default())?;
    let base = Point::new(cover.patches()[0].center.clone());
    let c = raw.get(&[0]).unwrap().eval(&base)[0];
    let dim = cover.dim();
    let u = raw.map(0, |_, v| v.sub(&KForm::scalar_constant(dim, c)));
    Ok(LiftMorphism { u, source: l.clone(), target: l2.clone() })
}

/// `(ξ + η, f₁ + f₂)`.
pub fn lift_add(l1: &Lift, l2: &Lift) -> Lift {
    Lift { xi: l1.xi.add(&l2.xi), f: l1.f.add(&l2.f) }
}

/// `(λξ, λf)`.
pub fn lift_scale(lambda: f64, l: &Lift) -> Lift {
    Lift { xi: l.xi.scale(lambda), f: l.f.scale(lambda) }
}

/// `(0, 0)`.
pub fn zero_lift(cover: &Arc<CoveredManifold>) -> Lift {
    Lift { xi: VectorField::zero(cover.dim()), f: Cochain::zero(cover, 1, 0) }
}

/// `([ξ, η], ξ(f₂) - η(f₁))`.
pub fn lift_bracket(l1: &Lift, l2: &Lift) -> Lift {
    let f = l1.f.map(0, |s, f1| {
        let f2 = l2.f.get(s).unwrap();
        l1.xi.apply(f2).sub(&l2.xi.apply(f1))
    });
    Lift { xi: l1.xi.bracket(&l2.xi), f }
}

/// `[ℓ, u] = {ξ(u_i)}`.
pub fn lift_act(l: &Lift, u: &Cochain<KForm>) -> Cochain<KForm> {
    u.map(0, |_, ui| l.xi.apply(ui))
}

/// `f_ij = ι_ξ A_ij`.
pub fn horizontal_lift(xi: &VectorField, conn: &ConnectiveStructureData) -> Lift {
    Lift { xi: xi.clone(), f: conn.a.map(0, |_, a| a.interior(xi)) }
}

/// `φ₂(ξ, η) = {ι_ξ ι_η B_i}`, the morphism `[φξ, φη] → φ[ξ, η]`.
pub fn curving_phi2(xi: &VectorField, eta: &VectorField, b: &CurvingData) -> Cochain<KForm> {
    b.b.map(0, |_, bi| bi.interior(eta).interior(xi))
}

/// The morphism `u_i = ι_η ι_ξ B_i` from `[ξ,η]^h` to `[ξ^h, η^h]`,
/// validated on a fixed sample.
pub fn bracket_defect_morphism(
    xi: &VectorField,
    eta: &VectorField,
    b: &CurvingData,
) -> Result<LiftMorphism, LiftError> {
    let conn = &b.conn;
    let source = horizontal_lift(&xi.bracket(eta), conn);
    let target = lift_bracket(&horizontal_lift(xi, conn), &horizontal_lift(eta, conn));
    let u = b.b.map(0, |_, bi| bi.interior(xi).interior(eta));
    let m = LiftMorphism { u, source, target };
    let residual = m.invariant_residual(CHECK_SAMPLING);
    if !(residual <= 1e-8) {
        return Err(LiftError::InvariantViolated { what: "bracket-defect morphism", residual });
    }
    Ok(m)
}

/// Both evaluations of the curvature obstruction to splitting.
#[derive(Clone, Debug)]
pub struct SplittingObstruction {
    /// Defect of the full homomorphism condition for `(φ, φ₂)`.
    pub defect: Cochain<KForm>,
    /// The five-term combination as usually displayed.
    pub five_term: Cochain<KForm>,
    /// `ι_τ ι_η ι_ξ dB_i`.
    pub curvature: Cochain<KForm>,
    /// Largest `|defect - curvature|`.
    pub max_deviation: f64,
    /// Largest `|five_term - curvature|`, for reference.
    pub five_term_deviation: f64,
    pub n_points: usize,
}

/// Splitting obstruction for `φ = horizontal lift`, `φ₂ = ι_ξι_ηB_i`,
/// evaluated through lift operations and compared with `C(ξ, η, τ)`.
pub fn splitting_obstruction(
    xi: &VectorField,
    eta: &VectorField,
    tau: &VectorField,
    b: &CurvingData,
    sampling: Sampling,
) -> SplittingObstruction {
    let conn = &b.conn;
    let phi = |v: &VectorField| horizontal_lift(v, conn);
    let phi2 = |v: &VectorField, w: &VectorField| curving_phi2(v, w, b);
    // [φ₂(x,y), φ(z)] = -[φ(z), φ₂(x,y)]
    let a1 = lift_act(&phi(tau), &phi2(xi, eta)).scale(-1.0);
    let a2 = phi2(&xi.bracket(eta), tau);
    let a3 = lift_act(&phi(xi), &phi2(eta, tau));
    let a4 = lift_act(&phi(eta), &phi2(xi, tau)).scale(-1.0);
    let a5 = phi2(xi, &eta.bracket(tau));
    let a6 = phi2(&xi.bracket(tau), eta);
    let defect = Cochain::linear_combination(&[(1.0, &a1), (1.0, &a2), (-1.0, &a3), (-1.0, &a4), (-1.0, &a5), (-1.0, &a6)]);
    let five_term = Cochain::linear_combination(&[(1.0, &a1), (1.0, &a2), (-1.0, &a3), (-1.0, &a4), (-1.0, &a5)]);
    let curvature = b.b.map(0, |_, bi| bi.d().interior(xi).interior(eta).interior(tau));
    let cover = b.cover().clone();
    let (max_deviation, _, n_points) = sup_over_overlaps(&cover, 0, sampling, |s, ctx| {
        (defect.get(s).unwrap().values(ctx)[0] - curvature.get(s).unwrap().values(ctx)[0]).abs()
    });
    let (five_term_deviation, _, _) = sup_over_overlaps(&cover, 0, sampling, |s, ctx| {
        (five_term.get(s).unwrap().values(ctx)[0] - curvature.get(s).unwrap().values(ctx)[0]).abs()
    });
    SplittingObstruction { defect, five_term, curvature, max_deviation, five_term_deviation, n_points }
}

/// `Σ_a ξ^a ∂_a u`, evaluated straight from jets.
pub(crate) fn directional_derivative(xi: &VectorField, u: &KForm) -> KForm {
    let dim = u.dim();
    let (xi, u) = (xi.clone(), u.clone());
    KForm::from_fn(dim, 0, move |ctx, order| {
        let x = xi.jets(ctx, order);
        let uj = u.jets(ctx, order + 1);
        let mut acc = Jet::zero(dim, order);
        for a in 0..dim {
            acc.add_product(&x[a], &uj[0].differentiate(a));
        }
        vec![acc]
    })
}

/// Random patchwise functions, used as elements of `V1`.
pub fn random_zero_cochain(cover: &Arc<CoveredManifold>, rng: &mut ChaCha8Rng) -> Cochain<KForm> {
    let dim = cover.dim();
    Cochain::from_fn(cover, 0, 0, |_| TrigPoly::random(dim, 2, 2, 0.5, rng).to_field(dim))
}

/// The 2-term L∞-algebra of lifts of a gerbe.
pub struct LiftAlgebra {
    pub gerbe: GerbeCechData,
    pub sampling: Sampling,
    pub corruption: Option<Corruption>,
}

impl LiftAlgebra {
    pub fn new(gerbe: &GerbeCechData, sampling: Sampling) -> LiftAlgebra {
        LiftAlgebra { gerbe: gerbe.clone(), sampling, corruption: None }
    }

    fn cover(&self) -> &Arc<CoveredManifold> {
        self.gerbe.cover()
    }
}

impl TwoTermLInfinity for LiftAlgebra {
    type V0 = Lift;
    type V1 = Cochain<KForm>;

    fn random0(&self, rng: &mut ChaCha8Rng) -> Lift {
        let xi = random_vector_field(self.cover().dim(), 2, 2, 0.5, rng);
        let l = solve_lift(&xi, &self.gerbe).expect("gerbe data is a cocycle");
        let u = random_zero_cochain(self.cover(), rng);
        Lift { xi, f: l.f.add(&coboundary(&u)) }
    }

    fn random1(&self, rng: &mut ChaCha8Rng) -> Cochain<KForm> {
        random_zero_cochain(self.cover(), rng)
    }

    fn zero0(&self) -> Lift {
        zero_lift(self.cover())
    }

    fn zero1(&self) -> Cochain<KForm> {
        Cochain::zero(self.cover(), 0, 0)
    }

    fn combine0(&self, terms: &[(f64, &Lift)]) -> Lift {
        let xi = VectorField::linear_combination(terms.iter().map(|(c, l)| (*c, l.xi.clone())).collect());
        let fs: Vec<(f64, &Cochain<KForm>)> = terms.iter().map(|(c, l)| (*c, &l.f)).collect();
        Lift { xi, f: Cochain::linear_combination(&fs) }
    }

    fn combine1(&self, terms: &[(f64, &Cochain<KForm>)]) -> Cochain<KForm> {
        Cochain::linear_combination(terms)
    }

    fn d(&self, u: &Cochain<KForm>) -> Lift {
        Lift { xi: VectorField::zero(self.cover().dim()), f: coboundary(u) }
    }

    fn bracket(&self, x: &Lift, y: &Lift) -> Lift {
        if self.corruption == Some(Corruption::DropBracketTerm) {
            let f = x.f.map(0, |s, _| x.xi.apply(y.f.get(s).unwrap()));
            return Lift { xi: x.xi.bracket(&y.xi), f };
        }
        lift_bracket(x, y)
    }

    fn act(&self, x: &Lift, u: &Cochain<KForm>) -> Cochain<KForm> {
        lift_act(x, u)
    }

    fn jacobiator(&self, _x: &Lift, _y: &Lift, _z: &Lift) -> Cochain<KForm> {
        self.zero1()
    }

    fn norm0(&self, x: &Lift) -> (f64, usize) {
        let cover = self.cover();
        let (a, _, n) = sup_over_overlaps(cover, 0, self.sampling, |_, ctx| x.xi.max_abs(ctx));
        let (b, _, m) = sup_over_overlaps(cover, 1, self.sampling, |s, ctx| x.f.get(s).unwrap().max_abs(ctx));
        (a.max(b), n + m)
    }

    fn norm1(&self, u: &Cochain<KForm>) -> (f64, usize) {
        let (a, _, n) = sup_over_overlaps(self.cover(), 0, self.sampling, |s, ctx| u.get(s).unwrap().max_abs(ctx));
        (a, n)
    }

    fn closure_residual(&self, x: &Lift) -> f64 {
        x.invariant_residual(&self.gerbe, self.sampling)
    }

    fn mixed_oracle(&self, x: &Lift, u: &Cochain<KForm>) -> Option<Cochain<KForm>> {
        Some(u.map(0, |_, ui| directional_derivative(&x.xi, ui)))
    }
}

/// Checks the L∞ axioms of the lift algebra on `trials` random draws.
pub fn linfinity_check(g: &GerbeCechData, trials: usize, seed: u64) -> LInfinityReport {
    check_linfinity(&LiftAlgebra::new(g, Sampling::new(2, seed)), trials, seed, 1e-8)
}

/// A random lift of a random vector field; reproducible in `seed`.
pub fn random_lift(g: &GerbeCechData, seed: u64) -> Lift {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LiftAlgebra::new(g, Sampling::default()).random0(&mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gerbe::{random_gerbe, solve_chain, trivial_gerbe};
    use crate::geometry::make_torus_cover;

    fn setup() -> (GerbeCechData, CurvingData) {
        let cover = make_torus_cover(2, 4, 0.04).unwrap();
        let g = random_gerbe(&cover, 3);
        let (b, _) = solve_chain(&g).unwrap();
        (g, b)
    }

    #[test]
    fn solved_and_horizontal_lifts_satisfy_the_invariant() {
        let (g, b) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xi = random_vector_field(2, 2, 2, 0.5, &mut rng);
        let s = Sampling::new(3, 2);
        assert!(solve_lift(&xi, &g).unwrap().invariant_residual(&g, s) < 1e-8);
        assert!(horizontal_lift(&xi, &b.conn).invariant_residual(&g, s) < 1e-8);
    }

    #[test]
    fn zero_field_on_trivial_gerbe_gives_zero_lift() {
        let cover = make_torus_cover(2, 4, 0.04).unwrap();
        let g = trivial_gerbe(&cover);
        let l = solve_lift(&VectorField::zero(2), &g).unwrap();
        assert_eq!(l.f.sup_norm(Sampling::new(2, 1)), 0.0);
    }

    #[test]
    fn morphism_recovers_shift() {
        let (g, _) = setup();
        let l = random_lift(&g, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u0 = random_zero_cochain(g.cover(), &mut rng);
        let l2 = Lift { xi: l.xi.clone(), f: l.f.add(&coboundary(&u0)) };
        let m = find_morphism(&l, &l2).unwrap();
        let s = Sampling::new(3, 5);
        assert!(m.invariant_residual(s) < 1e-8);
        // u - u0 is a global constant
        let diff = m.u.sub(&u0);
        assert!(coboundary(&diff).sup_norm(s) < 1e-9);
    }

    #[test]
    fn mismatched_bases_are_rejected() {
        let (g, _) = setup();
        let l = random_lift(&g, 4);
        let l2 = random_lift(&g, 5);
        assert!(matches!(find_morphism(&l, &l2), Err(LiftError::DifferentVectorFields { .. })));
    }

    #[test]
    fn bracket_defect_morphism_holds() {
        let (_, b) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xi = random_vector_field(2, 2, 2, 0.5, &mut rng);
        let eta = random_vector_field(2, 2, 2, 0.5, &mut rng);
        let m = bracket_defect_morphism(&xi, &eta, &b).unwrap();
        assert!(m.invariant_residual(Sampling::new(3, 1)) < 1e-8);
    }

    #[test]
    fn lift_algebra_axioms_and_negative_control() {
        let (g, _) = setup();
        let r = linfinity_check(&g, 2, 1);
        assert!(r.pass, "{r:?}");
        let mut alg = LiftAlgebra::new(&g, Sampling::new(1, 1));
        alg.corruption = Some(Corruption::DropBracketTerm);
        let bad = check_linfinity(&alg, 1, 1, 1e-8);
        assert!(bad.homotopy_0 > 1e-3, "{bad:?}");
    }

    #[test]
    fn splitting_obstruction_matches_curvature_on_t3() {
        let cover = make_torus_cover(3, 3, 0.05).unwrap();
        let g = random_gerbe(&cover, 1);
        let (b, _) = solve_chain(&g).unwrap();
        let b = b.shift(&crate::geometry::TrigForm::random(3, 2, 2, 2, 0.3, &mut ChaCha8Rng::seed_from_u64(8)).to_form(3));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<VectorField> = (0..3).map(|_| random_vector_field(3, 2, 2, 0.5, &mut rng)).collect();
        let o = splitting_obstruction(&v[0], &v[1], &v[2], &b, Sampling::new(2, 1));
        assert!(o.max_deviation < 1e-7, "{}", o.max_deviation);
        assert!(o.five_term_deviation > 1e-3);
    }
}
