//! Connective lifts `(ξ, {f_ij}, {a_i})` of vector fields to a gerbe with
//! connective structure `{A_ij}`.
//!
//! Besides the lift relation, the 1-forms satisfy
//! `a_j - a_i = df_ij - £_ξ A_ij`. Morphisms are 0-cochains `u` with
//! `f' - f = δu` and `a'_i - a_i = du_i`. Over a fixed lift the `a_i` form a
//! torsor for global 1-forms.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cech::{coboundary, contract, sup_over_overlaps, Cochain, Sampling};
use crate::error::LiftError;
use crate::gerbe::{ConnectiveStructureData, CHECK_SAMPLING};
use crate::geometry::{random_vector_field, CoveredManifold, KForm, TrigForm, VectorField};
use crate::lifts::{directional_derivative, lift_act, lift_bracket, random_zero_cochain, solve_lift, Lift};
use crate::linf::{check_linfinity, Corruption, LInfinityReport, TwoTermLInfinity};

/// A connective lift `(ξ, {f_ij}, {a_i})`.
#[derive(Clone, Debug)]
pub struct ConnectiveLift {
    pub xi: VectorField,
    pub f: Cochain<KForm>,
    pub a: Cochain<KForm>,
}

/// A morphism `u` with `f' - f = δu` and `a' - a = du`.
#[derive(Clone, Debug)]
pub struct ConnectiveLiftMorphism {
    pub u: Cochain<KForm>,
    pub source: ConnectiveLift,
    pub target: ConnectiveLift,
}

/// `df_ij - £_ξ A_ij`, the cochain that `δa` must equal.
pub fn extension_cochain(xi: &VectorField, f: &Cochain<KForm>, conn: &ConnectiveStructureData) -> Cochain<KForm> {
    f.map(1, |s, fij| fij.d().sub(&conn.a.get(s).unwrap().lie(xi)))
}

impl ConnectiveLift {
    pub fn cover(&self) -> &Arc<CoveredManifold> {
        self.a.cover()
    }

    /// Largest violation of `a_j - a_i = df_ij - £_ξ A_ij`.
    pub fn form_residual(&self, conn: &ConnectiveStructureData, sampling: Sampling) -> f64 {
        coboundary(&self.a).max_deviation(&extension_cochain(&self.xi, &self.f, conn), sampling)
    }

    /// Largest violation of either defining relation.
    pub fn invariant_residual(&self, conn: &ConnectiveStructureData, sampling: Sampling) -> f64 {
        let l = forgetful(self).invariant_residual(&conn.gerbe, sampling);
        l.max(self.form_residual(conn, sampling))
    }
}

impl ConnectiveLiftMorphism {
    /// Largest violation of `f' - f = δu` or `a' - a = du`.
    pub fn invariant_residual(&self, sampling: Sampling) -> f64 {
        let rf = self.target.f.sub(&self.source.f).max_deviation(&coboundary(&self.u), sampling);
        let du = self.u.map(1, |_, u| u.d());
        let ra = self.target.a.sub(&self.source.a).max_deviation(&du, sampling);
        rf.max(ra)
    }

    /// `u` followed by `next`, which is `u + u'`.
    pub fn then(&self, next: &ConnectiveLiftMorphism) -> ConnectiveLiftMorphism {
        ConnectiveLiftMorphism { u: self.u.add(&next.u), source: self.source.clone(), target: next.target.clone() }
    }

    /// For an automorphism: largest `|u_i - u_j|` on overlaps and largest `|du_i|`.
    pub fn constancy_defect(&self, sampling: Sampling) -> (f64, f64) {
        let du = self.u.map(1, |_, u| u.d());
        (coboundary(&self.u).sup_norm(sampling), du.sup_norm(sampling))
    }
}

/// The morphism out of `c` given by `u`, together with its target.
pub fn apply_morphism(c: &ConnectiveLift, u: &Cochain<KForm>) -> ConnectiveLiftMorphism {
    let target = ConnectiveLift {
        xi: c.xi.clone(),
        f: c.f.add(&coboundary(u)),
        a: c.a.add(&u.map(1, |_, ui| ui.d())),
    };
    ConnectiveLiftMorphism { u: u.clone(), source: c.clone(), target }
}

/// Extends a lift by solving `δa = df - £_ξ A` with the partition of unity,
/// after checking that the right side is `δ`-closed to `1e-9`.
pub fn extend_to_connective(l: &Lift, conn: &ConnectiveStructureData) -> Result<ConnectiveLift, LiftError> {
    let beta = extension_cochain(&l.xi, &l.f, conn);
    let residual = coboundary(&beta).sup_norm(CHECK_SAMPLING);
    if !(residual <= 1e-9) {
        return Err(LiftError::InvariantViolated { what: "extension cochain df - £A", residual });
    }
    let a = contract(&beta, conn.cover().partition());
    Ok(ConnectiveLift { xi: l.xi.clone(), f: l.f.clone(), a })
}

/// `(ξ, f, {a_i + α})`.
pub fn torsor_action(c: &ConnectiveLift, alpha: &KForm) -> ConnectiveLift {
    ConnectiveLift { xi: c.xi.clone(), f: c.f.clone(), a: c.a.map(1, |_, a| a.add(alpha)) }
}

/// The global 1-form relating two connective lifts over the same lift.
#[derive(Clone, Debug)]
pub struct TorsorDifference {
    /// `Σ ρ_i (a'_i - a_i)`.
    pub alpha: KForm,
    /// Largest disagreement of `a'_i - a_i` and `a'_j - a_j` on overlaps.
    pub overlap_defect: f64,
    /// Largest `|a'_i - a_i - α|` on patches.
    pub uniqueness_defect: f64,
}

/// Finds `α` with `c' = torsor_action(c, α)`.
pub fn torsor_difference(c: &ConnectiveLift, c2: &ConnectiveLift, sampling: Sampling) -> Result<TorsorDifference, LiftError> {
    let cover = c.cover().clone();
    let dv = crate::lifts::vector_field_distance(&cover, &c.xi, &c2.xi, sampling);
    let df = c2.f.max_deviation(&c.f, sampling);
    if !(dv.max(df) <= 1e-12) {
        return Err(LiftError::DifferentVectorFields { defect: dv.max(df) });
    }
    let diff = c2.a.sub(&c.a);
    let overlap_defect = coboundary(&diff).sup_norm(sampling);
    let part = cover.partition();
    let alpha = KForm::linear_combination(diff.entries().iter().map(|(s, v)| (1.0, v.mul_fn(part.rho(s[0])))).collect());
    let (uniqueness_defect, _, _) = sup_over_overlaps(&cover, 0, sampling, |s, ctx| {
        let d = diff.get(s).unwrap().values(ctx);
        let a = alpha.values(ctx);
        d.iter().zip(&a).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    });
    Ok(TorsorDifference { alpha, overlap_defect, uniqueness_defect })
}

/// Drops the 1-forms.
pub fn forgetful(c: &ConnectiveLift) -> Lift {
    Lift { xi: c.xi.clone(), f: c.f.clone() }
}

/// `([ξ,η], ξ(f₂) - η(f₁), £_ξ a₂ - £_η a₁)`.
pub fn conn_bracket(c1: &ConnectiveLift, c2: &ConnectiveLift) -> ConnectiveLift {
    let l = lift_bracket(&forgetful(c1), &forgetful(c2));
    let a = c1.a.map(1, |s, a1| c2.a.get(s).unwrap().lie(&c1.xi).sub(&a1.lie(&c2.xi)));
    ConnectiveLift { xi: l.xi, f: l.f, a }
}

pub fn conn_add(c1: &ConnectiveLift, c2: &ConnectiveLift) -> ConnectiveLift {
    ConnectiveLift { xi: c1.xi.add(&c2.xi), f: c1.f.add(&c2.f), a: c1.a.add(&c2.a) }
}

pub fn conn_scale(lambda: f64, c: &ConnectiveLift) -> ConnectiveLift {
    ConnectiveLift { xi: c.xi.scale(lambda), f: c.f.scale(lambda), a: c.a.scale(lambda) }
}

pub fn zero_conn_lift(cover: &Arc<CoveredManifold>) -> ConnectiveLift {
    ConnectiveLift { xi: VectorField::zero(cover.dim()), f: Cochain::zero(cover, 1, 0), a: Cochain::zero(cover, 0, 1) }
}

/// The 2-term L∞-algebra of connective lifts.
pub struct ConnLiftAlgebra {
    pub conn: ConnectiveStructureData,
    pub sampling: Sampling,
    pub corruption: Option<Corruption>,
}

impl ConnLiftAlgebra {
    pub fn new(conn: &ConnectiveStructureData, sampling: Sampling) -> ConnLiftAlgebra {
        ConnLiftAlgebra { conn: conn.clone(), sampling, corruption: None }
    }

    fn cover(&self) -> &Arc<CoveredManifold> {
        self.conn.cover()
    }
}

/// A random connective lift: solved, extended, shifted by a random global
/// 1-form and moved along a random morphism.
pub fn random_conn_lift(conn: &ConnectiveStructureData, rng: &mut ChaCha8Rng) -> ConnectiveLift {
    let cover = conn.cover();
    let dim = cover.dim();
    let xi = random_vector_field(dim, 2, 2, 0.5, rng);
    let l = solve_lift(&xi, &conn.gerbe).expect("gerbe data is a cocycle");
    let c = extend_to_connective(&l, conn).expect("extension cochain is closed");
    let alpha = TrigForm::random(dim, 1, 2, 2, 0.3, rng).to_form(dim);
    let u = random_zero_cochain(cover, rng);
    apply_morphism(&torsor_action(&c, &alpha), &u).target
}

impl TwoTermLInfinity for ConnLiftAlgebra {
    type V0 = ConnectiveLift;
    type V1 = Cochain<KForm>;

    fn random0(&self, rng: &mut ChaCha8Rng) -> ConnectiveLift {
        random_conn_lift(&self.conn, rng)
    }

    fn random1(&self, rng: &mut ChaCha8Rng) -> Cochain<KForm> {
        random_zero_cochain(self.cover(), rng)
    }

    fn zero0(&self) -> ConnectiveLift {
        zero_conn_lift(self.cover())
    }

    fn zero1(&self) -> Cochain<KForm> {
        Cochain::zero(self.cover(), 0, 0)
    }

    fn combine0(&self, terms: &[(f64, &ConnectiveLift)]) -> ConnectiveLift {
        let xi = VectorField::linear_combination(terms.iter().map(|(c, l)| (*c, l.xi.clone())).collect());
        let fs: Vec<(f64, &Cochain<KForm>)> = terms.iter().map(|(c, l)| (*c, &l.f)).collect();
        let as_: Vec<(f64, &Cochain<KForm>)> = terms.iter().map(|(c, l)| (*c, &l.a)).collect();
        ConnectiveLift { xi, f: Cochain::linear_combination(&fs), a: Cochain::linear_combination(&as_) }
    }

    fn combine1(&self, terms: &[(f64, &Cochain<KForm>)]) -> Cochain<KForm> {
        Cochain::linear_combination(terms)
    }

    fn d(&self, u: &Cochain<KForm>) -> ConnectiveLift {
        let a = if self.corruption == Some(Corruption::DropDifferentialForm) {
            Cochain::zero(self.cover(), 0, 1)
        } else {
            u.map(1, |_, ui| ui.d())
        };
        ConnectiveLift { xi: VectorField::zero(self.cover().dim()), f: coboundary(u), a }
    }

    fn bracket(&self, x: &ConnectiveLift, y: &ConnectiveLift) -> ConnectiveLift {
        conn_bracket(x, y)
    }

    fn act(&self, x: &ConnectiveLift, u: &Cochain<KForm>) -> Cochain<KForm> {
        lift_act(&forgetful(x), u)
    }

    fn jacobiator(&self, _: &ConnectiveLift, _: &ConnectiveLift, _: &ConnectiveLift) -> Cochain<KForm> {
        self.zero1()
    }

    fn norm0(&self, x: &ConnectiveLift) -> (f64, usize) {
        let cover = self.cover();
        let (a, _, n) =
            sup_over_overlaps(cover, 0, self.sampling, |s, ctx| x.xi.max_abs(ctx).max(x.a.get(s).unwrap().max_abs(ctx)));
        let (b, _, m) = sup_over_overlaps(cover, 1, self.sampling, |s, ctx| x.f.get(s).unwrap().max_abs(ctx));
        (a.max(b), n + m)
    }

    fn norm1(&self, u: &Cochain<KForm>) -> (f64, usize) {
        let (a, _, n) = sup_over_overlaps(self.cover(), 0, self.sampling, |s, ctx| u.get(s).unwrap().max_abs(ctx));
        (a, n)
    }

    fn closure_residual(&self, x: &ConnectiveLift) -> f64 {
        x.invariant_residual(&self.conn, self.sampling)
    }

    fn mixed_oracle(&self, x: &ConnectiveLift, u: &Cochain<KForm>) -> Option<Cochain<KForm>> {
        Some(u.map(0, |_, ui| directional_derivative(&x.xi, ui)))
    }
}

/// Checks the L∞ axioms of the connective lift algebra.
pub fn conn_linfinity_check(conn: &ConnectiveStructureData, trials: usize, seed: u64) -> LInfinityReport {
    check_linfinity(&ConnLiftAlgebra::new(conn, Sampling::new(2, seed)), trials, seed, 1e-7)
}

/// A random connective lift; reproducible in `seed`.
pub fn random_conn_lift_seeded(conn: &ConnectiveStructureData, seed: u64) -> ConnectiveLift {
    random_conn_lift(conn, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gerbe::{random_gerbe, solve_connective_structure};
    use crate::geometry::make_torus_cover;

    fn conn() -> ConnectiveStructureData {
        let cover = make_torus_cover(2, 4, 0.04).unwrap();
        solve_connective_structure(&random_gerbe(&cover, 2)).unwrap()
    }

    #[test]
    fn extension_satisfies_both_relations() {
        let conn = conn();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xi = random_vector_field(2, 2, 2, 0.5, &mut rng);
        let l = solve_lift(&xi, &conn.gerbe).unwrap();
        let c = extend_to_connective(&l, &conn).unwrap();
        assert!(c.invariant_residual(&conn, Sampling::new(3, 1)) < 1e-8);
    }

    #[test]
    fn torsor_difference_recovers_shift() {
        let conn = conn();
        let c = random_conn_lift_seeded(&conn, 4);
        let alpha = TrigForm::random(2, 1, 2, 2, 0.3, &mut ChaCha8Rng::seed_from_u64(5)).to_form(2);
        let d = torsor_difference(&c, &torsor_action(&c, &alpha), Sampling::new(3, 2)).unwrap();
        assert!(d.overlap_defect < 1e-9);
        assert!(d.uniqueness_defect < 1e-9);
    }

    #[test]
    fn bracket_output_is_a_connective_lift() {
        let conn = conn();
        let c1 = random_conn_lift_seeded(&conn, 1);
        let c2 = random_conn_lift_seeded(&conn, 2);
        let r = conn_bracket(&c1, &c2).invariant_residual(&conn, Sampling::new(2, 3));
        assert!(r < 1e-7, "{r}");
    }

    #[test]
    fn automorphisms_are_locally_constant() {
        let conn = conn();
        let c = random_conn_lift_seeded(&conn, 3);
        let dim = 2;
        let k = Cochain::from_fn(c.cover(), 0, 0, |_| KForm::scalar_constant(dim, 1.5));
        let m = apply_morphism(&c, &k);
        let s = Sampling::new(2, 1);
        assert_eq!(m.constancy_defect(s), (0.0, 0.0));
        assert!(m.target.a.max_deviation(&c.a, s) == 0.0);
    }

    #[test]
    fn dropping_the_form_part_of_d_breaks_the_chain_map() {
        let conn = conn();
        let mut alg = ConnLiftAlgebra::new(&conn, Sampling::new(1, 1));
        alg.corruption = Some(Corruption::DropDifferentialForm);
        let r = check_linfinity(&alg, 1, 3, 1e-7);
        assert!(r.chain_map_0 > 1e-3, "{r:?}");
    }
}
