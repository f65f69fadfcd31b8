//! Gerbes in Čech form: transition phases `θ_ijk`, connective structures
//! `A_ij`, curvings `B_i` and the curvature 3-form.
//!
//! Gerbes are generated as coboundaries `θ = δh`. Presets also come with
//! closed-form connective data `A_ij = dh_ij + λ_j - λ_i` and curvings
//! `B_i = dλ_i + β`, all trigonometric polynomials, which serialize to a JSON
//! dataset without loss.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cech::{coboundary, is_phase_cocycle, sup_over_overlaps, Cochain, CocycleReport, Phase, Sampling};
use crate::error::GerbeError;
use crate::geometry::{make_torus_cover, CoveredManifold, KForm, TrigForm, TrigPoly};

/// Where a gerbe came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    /// `θ = δh` with `h` drawn from the given seed.
    Coboundary { seed: u64 },
    /// The trivial gerbe `θ = 0`.
    Trivial,
    /// Loaded from a dataset.
    Dataset { seed: u64 },
    /// Built by tensor product or dual.
    Combined,
}

/// Transition phases `θ_ijk` of a gerbe, `g_ijk = exp(iθ_ijk)`.
#[derive(Clone, Debug)]
pub struct GerbeCechData {
    pub theta: Cochain<Phase>,
    pub provenance: Provenance,
}

/// A connective structure `{A_ij}` with `δA = dθ`.
#[derive(Clone, Debug)]
pub struct ConnectiveStructureData {
    pub gerbe: GerbeCechData,
    pub a: Cochain<KForm>,
}

/// A curving `{B_i}` with `B_j - B_i = dA_ij`.
#[derive(Clone, Debug)]
pub struct CurvingData {
    pub conn: ConnectiveStructureData,
    pub b: Cochain<KForm>,
}

/// The curvature 3-form `C` with `C|U_i = dB_i`.
#[derive(Clone, Debug)]
pub struct CurvatureForm {
    /// The glued global form `Σ ρ_i dB_i`.
    pub c: KForm,
    /// The local representatives `dB_i`.
    pub local: Cochain<KForm>,
    /// Largest `|dB_i - dB_j|` seen on overlaps.
    pub consistency_defect: f64,
}

/// Sampling used by the built-in validation of solvers.
pub const CHECK_SAMPLING: Sampling = Sampling { per_overlap: 4, seed: 0xc0de };

impl GerbeCechData {
    pub fn cover(&self) -> &Arc<CoveredManifold> {
        self.theta.cover()
    }

    /// `δθ` is a locally constant element of `2πZ`.
    pub fn cocycle_report(&self, tol: f64, sampling: Sampling) -> CocycleReport {
        is_phase_cocycle(&self.theta, tol, sampling)
    }

    /// `dθ` as a 2-cochain of 1-forms (the real form of `dlog g`).
    pub fn dlog(&self) -> Cochain<KForm> {
        self.theta.map(1, |_, p| p.0.d())
    }

    pub fn tensor(&self, other: &GerbeCechData) -> Result<GerbeCechData, GerbeError> {
        if !Arc::ptr_eq(self.cover(), other.cover()) {
            return Err(GerbeError::CoverMismatch);
        }
        Ok(GerbeCechData { theta: self.theta.add(&other.theta), provenance: Provenance::Combined })
    }

    pub fn dual(&self) -> GerbeCechData {
        GerbeCechData { theta: self.theta.scale(-1.0), provenance: Provenance::Combined }
    }
}

fn random_h(cover: &Arc<CoveredManifold>, rng: &mut ChaCha8Rng) -> Vec<(Vec<usize>, TrigPoly)> {
    cover.overlaps(1).iter().map(|s| (s.clone(), TrigPoly::random(cover.dim(), 3, 2, 1.0, rng))).collect()
}

fn phase_cochain_from(cover: &Arc<CoveredManifold>, degree: usize, table: &[(Vec<usize>, TrigPoly)]) -> Cochain<Phase> {
    let mut it = table.iter();
    Cochain::from_fn(cover, degree, 0, |s| {
        let (k, p) = it.next().expect("table covers every overlap");
        assert_eq!(k, s);
        Phase(p.to_field(cover.dim()))
    })
}

/// A random coboundary gerbe `θ = δh`; reproducible in `seed`.
pub fn random_gerbe(cover: &Arc<CoveredManifold>, seed: u64) -> GerbeCechData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = phase_cochain_from(cover, 1, &random_h(cover, &mut rng));
    GerbeCechData { theta: coboundary(&h), provenance: Provenance::Coboundary { seed } }
}

/// The trivial gerbe `θ = 0`.
pub fn trivial_gerbe(cover: &Arc<CoveredManifold>) -> GerbeCechData {
    GerbeCechData { theta: Cochain::zero(cover, 2, 0), provenance: Provenance::Trivial }
}

/// Solves `δA = dθ` by partition of unity.
pub fn solve_connective_structure(g: &GerbeCechData) -> Result<ConnectiveStructureData, GerbeError> {
    let a = crate::cech::solve_coboundary(&g.dlog())?;
    Ok(ConnectiveStructureData { gerbe: g.clone(), a })
}

impl ConnectiveStructureData {
    pub fn cover(&self) -> &Arc<CoveredManifold> {
        self.a.cover()
    }

    /// Largest violation of `A_jk - A_ik + A_ij = dθ_ijk`.
    pub fn invariant_residual(&self, sampling: Sampling) -> f64 {
        coboundary(&self.a).max_deviation(&self.gerbe.dlog(), sampling)
    }

    /// `dA_ij` as a 1-cochain of 2-forms.
    pub fn curvature_cochain(&self) -> Cochain<KForm> {
        self.a.map(2, |_, a| a.d())
    }

    /// Adds `δλ` for a 0-cochain of 1-forms (gauge freedom).
    pub fn gauge(&self, lambda: &Cochain<KForm>) -> ConnectiveStructureData {
        ConnectiveStructureData { gerbe: self.gerbe.clone(), a: self.a.add(&coboundary(lambda)) }
    }

    pub fn tensor(&self, other: &ConnectiveStructureData) -> Result<ConnectiveStructureData, GerbeError> {
        Ok(ConnectiveStructureData { gerbe: self.gerbe.tensor(&other.gerbe)?, a: self.a.add(&other.a) })
    }

    pub fn dual(&self) -> ConnectiveStructureData {
        ConnectiveStructureData { gerbe: self.gerbe.dual(), a: self.a.scale(-1.0) }
    }
}

/// Solves `B_j - B_i = dA_ij` by partition of unity.
pub fn solve_curving(conn: &ConnectiveStructureData) -> Result<CurvingData, GerbeError> {
    let b = crate::cech::solve_coboundary(&conn.curvature_cochain())?;
    Ok(CurvingData { conn: conn.clone(), b })
}

impl CurvingData {
    pub fn cover(&self) -> &Arc<CoveredManifold> {
        self.b.cover()
    }

    /// Largest violation of `B_j - B_i = dA_ij`.
    pub fn invariant_residual(&self, sampling: Sampling) -> f64 {
        coboundary(&self.b).max_deviation(&self.conn.curvature_cochain(), sampling)
    }

    /// Adds a global 2-form to every `B_i`.
    pub fn shift(&self, beta: &KForm) -> CurvingData {
        CurvingData { conn: self.conn.clone(), b: self.b.map(2, |_, b| b.add(beta)) }
    }

    pub fn tensor(&self, other: &CurvingData) -> Result<CurvingData, GerbeError> {
        Ok(CurvingData { conn: self.conn.tensor(&other.conn)?, b: self.b.add(&other.b) })
    }

    pub fn dual(&self) -> CurvingData {
        CurvingData { conn: self.conn.dual(), b: self.b.scale(-1.0) }
    }

    /// Largest `|dB_i - dB_j|` over sampled pair overlaps.
    pub fn db_overlap_defect(&self, sampling: Sampling) -> f64 {
        let db = self.b.map(3, |_, b| b.d());
        coboundary(&db).sup_norm(sampling)
    }
}

/// The curvature `C` glued from `dB_i`, failing when the local pieces
/// disagree by more than `tol` on sampled overlaps.
pub fn curvature(b: &CurvingData, sampling: Sampling, tol: f64) -> Result<CurvatureForm, GerbeError> {
    let local = b.b.map(3, |_, b| b.d());
    let consistency_defect = coboundary(&local).sup_norm(sampling);
    if !(consistency_defect <= tol) {
        return Err(GerbeError::InconsistentCurvature { defect: consistency_defect });
    }
    let part = b.cover().partition();
    let terms: Vec<(f64, KForm)> =
        local.entries().iter().map(|(s, db)| (1.0, db.mul_fn(part.rho(s[0])))).collect();
    let c = KForm::linear_combination(terms);
    Ok(CurvatureForm { c, local, consistency_defect })
}

impl CurvatureForm {
    /// Largest `|C - dB_i|` on patches.
    pub fn restriction_residual(&self, sampling: Sampling) -> f64 {
        let cover = self.local.cover().clone();
        sup_over_overlaps(&cover, 0, sampling, |s, ctx| {
            let a = self.c.values(ctx);
            let b = self.local.get(s).unwrap().values(ctx);
            a.iter().zip(&b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
        })
        .0
    }

    /// Largest `|dC|` on patches.
    pub fn closedness_residual(&self, sampling: Sampling) -> f64 {
        let dc = self.c.d();
        sup_over_overlaps(self.local.cover(), 0, sampling, |_, ctx| dc.max_abs(ctx)).0
    }
}

/// Runs the whole chain `θ → A → B → C` with validation.
pub fn solve_chain(g: &GerbeCechData) -> Result<(CurvingData, CurvatureForm), GerbeError> {
    let conn = solve_connective_structure(g)?;
    let b = solve_curving(&conn)?;
    let c = curvature(&b, CHECK_SAMPLING, 1e-8)?;
    Ok((b, c))
}

/// One entry of a dataset table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexEntry<T> {
    pub simplex: Vec<usize>,
    pub value: T,
}

/// Cover parameters as stored in a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverSpec {
    pub dim: usize,
    pub splits: usize,
    pub margin: f64,
}

/// A serializable gerbe with connective structure and curving, all given
/// symbolically as trigonometric polynomial tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GerbeDataset {
    pub schema: u32,
    pub cover: CoverSpec,
    pub seed: u64,
    pub trivial: bool,
    pub theta: Vec<SimplexEntry<TrigPoly>>,
    pub a: Vec<SimplexEntry<TrigForm>>,
    pub b: Vec<SimplexEntry<TrigForm>>,
}

impl GerbeDataset {
    /// Draws `h_ij`, `λ_i`, `β` from `seed` and tabulates
    /// `θ = δh`, `A_ij = dh_ij + λ_j - λ_i`, `B_i = dλ_i + β`.
    pub fn generate(spec: CoverSpec, seed: u64, trivial: bool) -> Result<GerbeDataset, GerbeError> {
        let cover = make_torus_cover(spec.dim, spec.splits, spec.margin)?;
        let dim = spec.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h: Vec<(Vec<usize>, TrigPoly)> = if trivial {
            cover.overlaps(1).iter().map(|s| (s.clone(), TrigPoly::zero())).collect()
        } else {
            random_h(&cover, &mut rng)
        };
        let lambda: Vec<TrigForm> = (0..cover.n_patches())
            .map(|_| if trivial { TrigForm::zero(dim, 1) } else { TrigForm::random(dim, 1, 2, 2, 0.3, &mut rng) })
            .collect();
        let beta = if trivial { TrigForm::zero(dim, 2) } else { TrigForm::random(dim, 2, 2, 2, 0.3, &mut rng) };
        let hmap: std::collections::BTreeMap<Vec<usize>, TrigPoly> = h.iter().cloned().collect();
        let theta = cover
            .overlaps(2)
            .iter()
            .map(|s| {
                let (i, j, k) = (s[0], s[1], s[2]);
                let v = hmap[&vec![j, k]].sub(&hmap[&vec![i, k]]).add(&hmap[&vec![i, j]]);
                SimplexEntry { simplex: s.clone(), value: if trivial { TrigPoly::zero() } else { v } }
            })
            .collect();
        let a = h
            .iter()
            .map(|(s, hij)| {
                let v = TrigForm::from_scalar(hij.clone()).d(dim).add(&lambda[s[1]]).sub(&lambda[s[0]]);
                SimplexEntry { simplex: s.clone(), value: v }
            })
            .collect();
        let b = (0..cover.n_patches())
            .map(|i| SimplexEntry { simplex: vec![i], value: lambda[i].d(dim).add(&beta) })
            .collect();
        Ok(GerbeDataset { schema: 1, cover: spec, seed, trivial, theta, a, b })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn from_json(s: &str) -> Result<GerbeDataset, GerbeError> {
        let d: GerbeDataset = serde_json::from_str(s).map_err(|e| GerbeError::Dataset(e.to_string()))?;
        if d.schema != 1 {
            return Err(GerbeError::Dataset(format!("unsupported schema {}", d.schema)));
        }
        Ok(d)
    }

    /// Builds the curving data, checking that every overlap has an entry.
    pub fn load(&self) -> Result<CurvingData, GerbeError> {
        let cover = make_torus_cover(self.cover.dim, self.cover.splits, self.cover.margin)?;
        self.load_on(&cover)
    }

    /// Builds the curving data over an existing cover with the same parameters.
    pub fn load_on(&self, cover: &Arc<CoveredManifold>) -> Result<CurvingData, GerbeError> {
        let dim = cover.dim();
        let check = |what: &str, got: Vec<&Vec<usize>>, want: &[Vec<usize>]| -> Result<(), GerbeError> {
            if got.len() != want.len() || got.iter().zip(want).any(|(a, b)| *a != b) {
                return Err(GerbeError::Dataset(format!("{what} table does not match the cover's overlaps")));
            }
            Ok(())
        };
        check("theta", self.theta.iter().map(|e| &e.simplex).collect(), cover.overlaps(2))?;
        check("A", self.a.iter().map(|e| &e.simplex).collect(), cover.overlaps(1))?;
        check("B", self.b.iter().map(|e| &e.simplex).collect(), cover.overlaps(0))?;
        for e in &self.a {
            if e.value.degree != 1 || e.value.comps.len() != dim {
                return Err(GerbeError::Dataset("A entries must be 1-forms".into()));
            }
        }
        for e in &self.b {
            if e.value.degree != 2 || e.value.comps.len() != dim * (dim - 1) / 2 {
                return Err(GerbeError::Dataset("B entries must be 2-forms".into()));
            }
        }
        let mut ti = self.theta.iter();
        let theta = Cochain::from_fn(cover, 2, 0, |_| Phase(ti.next().unwrap().value.to_field(dim)));
        let mut ai = self.a.iter();
        let a = Cochain::from_fn(cover, 1, 1, |_| ai.next().unwrap().value.to_form(dim));
        let mut bi = self.b.iter();
        let b = Cochain::from_fn(cover, 0, 2, |_| bi.next().unwrap().value.to_form(dim));
        let gerbe = GerbeCechData { theta, provenance: Provenance::Dataset { seed: self.seed } };
        Ok(CurvingData { conn: ConnectiveStructureData { gerbe, a }, b })
    }

    /// Loads and validates every invariant, reporting the first violation.
    pub fn load_checked(&self, sampling: Sampling, tol: f64) -> Result<CurvingData, GerbeError> {
        let data = self.load()?;
        let r = data.conn.gerbe.cocycle_report(tol, sampling);
        if !r.holds {
            return Err(GerbeError::NotCocycle { defect: r.max_defect });
        }
        let ra = data.conn.invariant_residual(sampling);
        if !(ra <= tol) {
            return Err(GerbeError::BadConnection { defect: ra });
        }
        let rb = data.invariant_residual(sampling);
        if !(rb <= tol) {
            return Err(GerbeError::BadCurving { defect: rb });
        }
        Ok(data)
    }
}
