//! The Courant algebroid of a gerbe with connective structure.
//!
//! Sections are pairs `(ξ, {a_i})` with `a_j - a_i = -ι_ξ dA_ij`. The pairing
//! is `½(ι_ξ b_i + ι_η a_i)`, the bracket is
//! `([ξ,η], £_ξ b - £_η a - ½ d ι_ξ b + ½ d ι_η a)`, and the Jacobi defect of
//! the bracket is `d` of the Nijenhuis function.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cech::{coboundary, contract, sup_over_overlaps, Cochain, Sampling};
use crate::conn_lifts::{conn_bracket, ConnectiveLift};
use crate::error::CourantError;
use crate::gerbe::{ConnectiveStructureData, CurvingData, CHECK_SAMPLING};
use crate::geometry::{random_scalar, random_vector_field, CoveredManifold, KForm, TrigForm, VectorField};
use crate::lifts::{directional_derivative, lift_act};
use crate::linf::{check_linfinity, Corruption, LInfinityReport, TwoTermLInfinity};

/// A section `(ξ, {a_i})`.
#[derive(Clone, Debug)]
pub struct CourantSection {
    pub xi: VectorField,
    pub a: Cochain<KForm>,
}

impl CourantSection {
    pub fn cover(&self) -> &Arc<CoveredManifold> {
        self.a.cover()
    }

    /// Largest violation of `a_j - a_i = -ι_ξ dA_ij`.
    pub fn invariant_residual(&self, conn: &ConnectiveStructureData, sampling: Sampling) -> f64 {
        let target = conn.curvature_cochain().map(1, |_, da| da.interior(&self.xi).neg());
        coboundary(&self.a).max_deviation(&target, sampling)
    }

    pub fn add(&self, other: &CourantSection) -> CourantSection {
        CourantSection { xi: self.xi.add(&other.xi), a: self.a.add(&other.a) }
    }

    pub fn scale(&self, k: f64) -> CourantSection {
        CourantSection { xi: self.xi.scale(k), a: self.a.scale(k) }
    }

    pub fn linear_combination(terms: &[(f64, &CourantSection)]) -> CourantSection {
        let xi = VectorField::linear_combination(terms.iter().map(|(c, s)| (*c, s.xi.clone())).collect());
        let a: Vec<(f64, &Cochain<KForm>)> = terms.iter().map(|(c, s)| (*c, &s.a)).collect();
        CourantSection { xi, a: Cochain::linear_combination(&a) }
    }

    /// Largest `|ξ|` or `|a_i|` over patch samples.
    pub fn sup_norm(&self, sampling: Sampling) -> (f64, usize) {
        let (v, _, n) = sup_over_overlaps(self.cover(), 0, sampling, |s, ctx| {
            self.xi.max_abs(ctx).max(self.a.get(s).unwrap().max_abs(ctx))
        });
        (v, n)
    }
}

/// `(0, {α})`.
pub fn inject_one_form(cover: &Arc<CoveredManifold>, alpha: &KForm) -> CourantSection {
    CourantSection { xi: VectorField::zero(cover.dim()), a: Cochain::from_fn(cover, 0, 1, |_| alpha.clone()) }
}

/// The anchor `(ξ, a) ↦ ξ`.
pub fn project(s: &CourantSection) -> VectorField {
    s.xi.clone()
}

/// A section over `ξ` in the horizontal fibre: `a = Σ ρ_k (-ι_ξ dA_ki)`.
pub fn section_over(xi: &VectorField, conn: &ConnectiveStructureData) -> CourantSection {
    let h = conn.curvature_cochain().map(1, |_, da| da.interior(xi).neg());
    CourantSection { xi: xi.clone(), a: contract(&h, conn.cover().partition()) }
}

/// A random section: a random field, its solved fibre, plus a random 1-form.
pub fn random_section(conn: &ConnectiveStructureData, rng: &mut ChaCha8Rng) -> CourantSection {
    let dim = conn.cover().dim();
    let xi = random_vector_field(dim, 2, 2, 0.5, rng);
    let alpha = TrigForm::random(dim, 1, 2, 2, 0.3, rng).to_form(dim);
    section_over(&xi, conn).add(&inject_one_form(conn.cover(), &alpha))
}

/// The local pairings `½(ι_ξ b_i + ι_η a_i)`.
pub fn pairing_local(s1: &CourantSection, s2: &CourantSection) -> Cochain<KForm> {
    s1.a.map(0, |s, a| {
        let b = s2.a.get(s).unwrap();
        b.interior(&s1.xi).add(&a.interior(&s2.xi)).scale(0.5)
    })
}

/// Largest disagreement of the local pairings on overlaps.
pub fn pairing_patch_defect(s1: &CourantSection, s2: &CourantSection, sampling: Sampling) -> f64 {
    coboundary(&pairing_local(s1, s2)).sup_norm(sampling)
}

/// Glues a 0-cochain that agrees on overlaps into a global function.
pub fn glue(c: &Cochain<KForm>) -> KForm {
    let part = c.cover().partition();
    KForm::linear_combination(c.entries().iter().map(|(s, v)| (1.0, v.mul_fn(part.rho(s[0])))).collect())
}

/// The global pairing, after checking patch independence to `1e-9`.
pub fn pairing(s1: &CourantSection, s2: &CourantSection) -> Result<KForm, CourantError> {
    let defect = pairing_patch_defect(s1, s2, CHECK_SAMPLING);
    if !(defect <= 1e-9) {
        return Err(CourantError::PatchDisagreement { defect });
    }
    Ok(glue(&pairing_local(s1, s2)))
}

/// `([ξ,η], {£_ξ b_i - £_η a_i - ½ d ι_ξ b_i + ½ d ι_η a_i})`.
pub fn courant_bracket(s1: &CourantSection, s2: &CourantSection) -> CourantSection {
    let (xi, eta) = (&s1.xi, &s2.xi);
    let a = s1.a.map(1, |s, a| {
        let b = s2.a.get(s).unwrap();
        KForm::linear_combination(vec![
            (1.0, b.lie(xi)),
            (-1.0, a.lie(eta)),
            (-0.5, b.interior(xi).d()),
            (0.5, a.interior(eta).d()),
        ])
    });
    CourantSection { xi: xi.bracket(eta), a }
}

/// `⅓(⟨[s₁,s₂],s₃⟩ + ⟨[s₂,s₃],s₁⟩ + ⟨[s₃,s₁],s₂⟩)`, patchwise.
pub fn nijenhuis(s1: &CourantSection, s2: &CourantSection, s3: &CourantSection) -> Cochain<KForm> {
    let t1 = pairing_local(&courant_bracket(s1, s2), s3);
    let t2 = pairing_local(&courant_bracket(s2, s3), s1);
    let t3 = pairing_local(&courant_bracket(s3, s1), s2);
    Cochain::linear_combination(&[(1.0 / 3.0, &t1), (1.0 / 3.0, &t2), (1.0 / 3.0, &t3)])
}

/// The cyclic double bracket `[[s₁,s₂],s₃] + [[s₂,s₃],s₁] + [[s₃,s₁],s₂]`.
pub fn jacobiator_section(s1: &CourantSection, s2: &CourantSection, s3: &CourantSection) -> CourantSection {
    let t1 = courant_bracket(&courant_bracket(s1, s2), s3);
    let t2 = courant_bracket(&courant_bracket(s2, s3), s1);
    let t3 = courant_bracket(&courant_bracket(s3, s1), s2);
    CourantSection::linear_combination(&[(1.0, &t1), (1.0, &t2), (1.0, &t3)])
}

/// Outcome of comparing the Jacobi defect with `d Nij`.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiReport {
    /// Largest component of the vector part of the cyclic double bracket.
    pub vector_part: f64,
    /// Largest `|Jac_i - d Nij_i|`.
    pub form_deviation: f64,
    pub n_points: usize,
}

pub fn jacobi_defect(s1: &CourantSection, s2: &CourantSection, s3: &CourantSection, sampling: Sampling) -> JacobiReport {
    let jac = jacobiator_section(s1, s2, s3);
    let dn = nijenhuis(s1, s2, s3).map(1, |_, n| n.d());
    let (vector_part, form_deviation, n_points) = {
        let (v, _, n) = sup_over_overlaps(s1.cover(), 0, sampling, |_, ctx| jac.xi.max_abs(ctx));
        (v, jac.a.max_deviation(&dn, sampling), n)
    };
    JacobiReport { vector_part, form_deviation, n_points }
}

/// Largest `|dB|` over patch samples.
pub fn closedness_defect(cover: &CoveredManifold, b: &KForm, sampling: Sampling) -> f64 {
    let db = b.d();
    sup_over_overlaps(cover, 0, sampling, |_, ctx| db.max_abs(ctx)).0
}

/// `(ξ, {a_i + ι_ξ B})` for a closed global 2-form `B`.
pub fn bfield_transform(s: &CourantSection, b: &KForm) -> Result<CourantSection, CourantError> {
    let defect = closedness_defect(s.cover(), b, CHECK_SAMPLING);
    if !(defect <= 1e-9) {
        return Err(CourantError::NotClosed { defect });
    }
    let ixb = b.interior(&s.xi);
    Ok(CourantSection { xi: s.xi.clone(), a: s.a.map(1, |_, a| a.add(&ixb)) })
}

/// The splitting `ξ + α ↦ (ξ, {α - ι_ξ B_i})` defined by a curving.
pub fn curving_splitting(xi: &VectorField, alpha: &KForm, b: &CurvingData) -> Result<CourantSection, CourantError> {
    let defect = b.invariant_residual(CHECK_SAMPLING);
    if !(defect <= 1e-8) {
        return Err(CourantError::NotACurving { defect });
    }
    Ok(CourantSection { xi: xi.clone(), a: b.b.map(1, |_, bi| alpha.sub(&bi.interior(xi))) })
}

/// The standard pairing `½(ι_ξ β + ι_η α)` on `TM ⊕ T*M`.
pub fn standard_pairing(x: (&VectorField, &KForm), y: (&VectorField, &KForm)) -> KForm {
    y.1.interior(x.0).add(&x.1.interior(y.0)).scale(0.5)
}

/// The standard Courant bracket on `TM ⊕ T*M`.
pub fn standard_bracket(x: (&VectorField, &KForm), y: (&VectorField, &KForm)) -> (VectorField, KForm) {
    let (xi, alpha) = x;
    let (eta, beta) = y;
    let form = KForm::linear_combination(vec![
        (1.0, beta.lie(xi)),
        (-1.0, alpha.lie(eta)),
        (-0.5, beta.interior(xi).d()),
        (0.5, alpha.interior(eta).d()),
    ]);
    (xi.bracket(eta), form)
}

/// Residuals of the curving splitting: pairing preservation and the twist
/// `[s(x), s(y)] - s([x,y]) = (0, {ι_ξ ι_η C})`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplittingReport {
    pub pairing: f64,
    pub twist: f64,
    pub n_points: usize,
}

pub fn splitting_check(
    x: (&VectorField, &KForm),
    y: (&VectorField, &KForm),
    b: &CurvingData,
    sampling: Sampling,
) -> Result<SplittingReport, CourantError> {
    let sx = curving_splitting(x.0, x.1, b)?;
    let sy = curving_splitting(y.0, y.1, b)?;
    let std_pair = standard_pairing(x, y);
    let local = pairing_local(&sx, &sy);
    let (pairing, _, n_points) = sup_over_overlaps(b.cover(), 0, sampling, |s, ctx| {
        (local.get(s).unwrap().values(ctx)[0] - std_pair.values(ctx)[0]).abs()
    });
    let (bxi, bform) = standard_bracket(x, y);
    let lhs = courant_bracket(&sx, &sy);
    let sb = curving_splitting(&bxi, &bform, b)?;
    let c = b.b.map(3, |_, bi| bi.d());
    let rhs = c.map(1, |_, ci| ci.interior(y.0).interior(x.0));
    let (vx, _, _) = sup_over_overlaps(b.cover(), 0, sampling, |_, ctx| lhs.xi.sub(&sb.xi).max_abs(ctx));
    let twist = lhs.a.sub(&sb.a).max_deviation(&rhs, sampling).max(vx);
    Ok(SplittingReport { pairing, twist, n_points })
}

/// `φ(ξ, {a_i}) = (ξ, {ι_ξ A_ij}, {a_i})`.
pub fn phi(s: &CourantSection, conn: &ConnectiveStructureData) -> ConnectiveLift {
    ConnectiveLift { xi: s.xi.clone(), f: conn.a.map(0, |_, a| a.interior(&s.xi)), a: s.a.clone() }
}

/// `φ₂(s₁, s₂) = {-½ ι_ξ b_i + ½ ι_η a_i}`.
pub fn phi2(s1: &CourantSection, s2: &CourantSection) -> Cochain<KForm> {
    s1.a.map(0, |s, a| {
        let b = s2.a.get(s).unwrap();
        a.interior(&s2.xi).sub(&b.interior(&s1.xi)).scale(0.5)
    })
}

/// The 2-term L∞-algebra `L_E`: `V0` = sections, `V1` = global functions,
/// `d f = (0, {df})`, `[s, f] = ½ ξ(f)` and `J = -Nij`.
pub struct CourantAlgebra {
    pub conn: ConnectiveStructureData,
    pub sampling: Sampling,
    pub corruption: Option<Corruption>,
}

impl CourantAlgebra {
    pub fn new(conn: &ConnectiveStructureData, sampling: Sampling) -> CourantAlgebra {
        CourantAlgebra { conn: conn.clone(), sampling, corruption: None }
    }

    fn cover(&self) -> &Arc<CoveredManifold> {
        self.conn.cover()
    }
}

impl TwoTermLInfinity for CourantAlgebra {
    type V0 = CourantSection;
    type V1 = KForm;

    fn random0(&self, rng: &mut ChaCha8Rng) -> CourantSection {
        random_section(&self.conn, rng)
    }

    fn random1(&self, rng: &mut ChaCha8Rng) -> KForm {
        random_scalar(self.cover().dim(), 2, 2, 0.5, rng)
    }

    fn zero0(&self) -> CourantSection {
        inject_one_form(self.cover(), &KForm::zero(self.cover().dim(), 1))
    }

    fn zero1(&self) -> KForm {
        KForm::zero(self.cover().dim(), 0)
    }

    fn combine0(&self, terms: &[(f64, &CourantSection)]) -> CourantSection {
        CourantSection::linear_combination(terms)
    }

    fn combine1(&self, terms: &[(f64, &KForm)]) -> KForm {
        KForm::linear_combination(terms.iter().map(|(c, f)| (*c, (*f).clone())).collect())
    }

    fn d(&self, f: &KForm) -> CourantSection {
        inject_one_form(self.cover(), &f.d())
    }

    fn bracket(&self, x: &CourantSection, y: &CourantSection) -> CourantSection {
        courant_bracket(x, y)
    }

    fn act(&self, x: &CourantSection, f: &KForm) -> KForm {
        x.xi.apply(f).scale(0.5)
    }

    fn jacobiator(&self, x: &CourantSection, y: &CourantSection, z: &CourantSection) -> KForm {
        if self.corruption == Some(Corruption::ZeroJacobiator) {
            return self.zero1();
        }
        glue(&nijenhuis(x, y, z)).neg()
    }

    fn norm0(&self, x: &CourantSection) -> (f64, usize) {
        x.sup_norm(self.sampling)
    }

    fn norm1(&self, f: &KForm) -> (f64, usize) {
        let (v, _, n) = sup_over_overlaps(self.cover(), 0, self.sampling, |_, ctx| f.max_abs(ctx));
        (v, n)
    }

    fn closure_residual(&self, x: &CourantSection) -> f64 {
        x.invariant_residual(&self.conn, self.sampling)
    }

    fn mixed_oracle(&self, x: &CourantSection, f: &KForm) -> Option<KForm> {
        Some(directional_derivative(&x.xi, f).scale(0.5))
    }
}

/// Checks the L∞ axioms of `L_E` on `trials` random draws.
pub fn le_algebra_check(conn: &ConnectiveStructureData, trials: usize, seed: u64) -> LInfinityReport {
    check_linfinity(&CourantAlgebra::new(conn, Sampling::new(2, seed)), trials, seed, 1e-6)
}

/// Residuals of the two conditions making `(φ, φ₂)` an L∞-homomorphism.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhiReport {
    /// `dφ₂(x,y) - φ[x,y] + [φx, φy]`.
    pub condition_1: f64,
    /// Difference of the two sides of the cubic condition.
    pub condition_2: f64,
    /// Constraint residual of `φ(x)` as a connective lift.
    pub image: f64,
    pub n_points: usize,
}

/// Evaluates both homomorphism conditions on `x, y, z`.
pub fn phi_check(
    x: &CourantSection,
    y: &CourantSection,
    z: &CourantSection,
    conn: &ConnectiveStructureData,
    sampling: Sampling,
) -> PhiReport {
    let cover = conn.cover().clone();
    let ph = |s: &CourantSection| phi(s, conn);
    let d_u = |u: &Cochain<KForm>| ConnectiveLift {
        xi: VectorField::zero(cover.dim()),
        f: coboundary(u),
        a: u.map(1, |_, ui| ui.d()),
    };
    let diff_norm = |p: &ConnectiveLift, q: &ConnectiveLift| -> (f64, usize) {
        let (v, _, n) = sup_over_overlaps(&cover, 0, sampling, |_, ctx| p.xi.sub(&q.xi).max_abs(ctx));
        let fa = p.f.max_deviation(&q.f, sampling);
        let aa = p.a.max_deviation(&q.a, sampling);
        (v.max(fa).max(aa), n)
    };

    // (1) dφ₂(x,y) = φ[x,y] - [φx, φy]
    let lhs = d_u(&phi2(x, y));
    let pb = ph(&courant_bracket(x, y));
    let bp = conn_bracket(&ph(x), &ph(y));
    let rhs = ConnectiveLift { xi: pb.xi.sub(&bp.xi), f: pb.f.sub(&bp.f), a: pb.a.sub(&bp.a) };
    let (condition_1, n_points) = diff_norm(&lhs, &rhs);

    // (2) [φ₂(x,y),φz] + φ₂([x,y],z) + φJ(x,y,z)
    //       = [φx,φ₂(y,z)] + [φ₂(x,z),φy] + φ₂(x,[y,z]) + φ₂([x,z],y)
    let xy = courant_bracket(x, y);
    let xz = courant_bracket(x, z);
    let yz = courant_bracket(y, z);
    let act = |s: &CourantSection, u: &Cochain<KForm>| lift_act(&crate::conn_lifts::forgetful(&ph(s)), u);
    let jac = nijenhuis(x, y, z).scale(-1.0);
    let l1 = act(z, &phi2(x, y)).scale(-1.0);
    let l2 = phi2(&xy, z);
    let r1 = act(x, &phi2(y, z));
    let r2 = act(y, &phi2(x, z)).scale(-1.0);
    let r3 = phi2(x, &yz);
    let r4 = phi2(&xz, y);
    let res = Cochain::linear_combination(&[
        (1.0, &l1),
        (1.0, &l2),
        (1.0, &jac),
        (-1.0, &r1),
        (-1.0, &r2),
        (-1.0, &r3),
        (-1.0, &r4),
    ]);
    let condition_2 = res.sup_norm(sampling);
    let image = ph(x).invariant_residual(conn, sampling);
    PhiReport { condition_1, condition_2, image, n_points }
}

/// A random section; reproducible in `seed`.
pub fn random_section_seeded(conn: &ConnectiveStructureData, seed: u64) -> CourantSection {
    random_section(conn, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gerbe::{random_gerbe, solve_chain, trivial_gerbe, solve_connective_structure};
    use crate::geometry::{make_torus_cover, Point};

    fn data() -> CurvingData {
        let cover = make_torus_cover(2, 4, 0.04).unwrap();
        solve_chain(&random_gerbe(&cover, 1)).unwrap().0
    }

    #[test]
    fn pairing_of_coordinate_sections() {
        let cover = make_torus_cover(2, 4, 0.04).unwrap();
        let conn = solve_connective_structure(&trivial_gerbe(&cover)).unwrap();
        let dx = KForm::constant(2, 1, vec![1.0, 0.0]);
        let dy = KForm::constant(2, 1, vec![0.0, 1.0]);
        let s1 = CourantSection { xi: VectorField::coordinate(2, 0), a: inject_one_form(&cover, &dy).a };
        let s2 = CourantSection { xi: VectorField::coordinate(2, 1), a: inject_one_form(&cover, &dx).a };
        assert!(s1.invariant_residual(&conn, Sampling::new(1, 1)) == 0.0);
        let p = pairing(&s1, &s2).unwrap();
        assert!((p.eval(&Point::new(vec![0.3, 0.6]))[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bracket_output_is_a_section() {
        let b = data();
        let s1 = random_section_seeded(&b.conn, 1);
        let s2 = random_section_seeded(&b.conn, 2);
        assert!(courant_bracket(&s1, &s2).invariant_residual(&b.conn, Sampling::new(2, 1)) < 1e-7);
        assert!(pairing_patch_defect(&s1, &s2, Sampling::new(2, 1)) < 1e-9);
    }

    #[test]
    fn jacobi_defect_is_d_nijenhuis() {
        let b = data();
        let s: Vec<_> = (0..3).map(|i| random_section_seeded(&b.conn, 10 + i)).collect();
        let r = jacobi_defect(&s[0], &s[1], &s[2], Sampling::new(2, 1));
        assert!(r.vector_part < 1e-9 && r.form_deviation < 1e-6, "{r:?}");
    }

    #[test]
    fn curving_splitting_twist_is_curvature() {
        let cover = make_torus_cover(3, 3, 0.05).unwrap();
        let (b, _) = solve_chain(&random_gerbe(&cover, 1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let beta = TrigForm::random(3, 2, 2, 2, 0.3, &mut rng).to_form(3);
        let b = b.shift(&beta);
        let xi = random_vector_field(3, 2, 2, 0.5, &mut rng);
        let eta = random_vector_field(3, 2, 2, 0.5, &mut rng);
        let al = TrigForm::random(3, 1, 2, 2, 0.3, &mut rng).to_form(3);
        let be = TrigForm::random(3, 1, 2, 2, 0.3, &mut rng).to_form(3);
        let r = splitting_check((&xi, &al), (&eta, &be), &b, Sampling::new(1, 1)).unwrap();
        assert!(r.pairing < 1e-9 && r.twist < 1e-7, "{r:?}");
    }

    #[test]
    fn phi_is_an_linfinity_homomorphism() {
        let b = data();
        let s: Vec<_> = (0..3).map(|i| random_section_seeded(&b.conn, 20 + i)).collect();
        let r = phi_check(&s[0], &s[1], &s[2], &b.conn, Sampling::new(2, 1));
        assert!(r.condition_1 < 1e-7 && r.condition_2 < 1e-7 && r.image < 1e-8, "{r:?}");
    }

    #[test]
    fn le_axioms_and_negative_control() {
        let b = data();
        let r = le_algebra_check(&b.conn, 1, 1);
        assert!(r.pass, "{r:?}");
        let mut alg = CourantAlgebra::new(&b.conn, Sampling::new(1, 1));
        alg.corruption = Some(Corruption::ZeroJacobiator);
        let bad = check_linfinity(&alg, 1, 1, 1e-6);
        assert!(bad.homotopy_0 > 1e-3, "{bad:?}");
    }
}
