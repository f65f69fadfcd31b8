//! Čech cochains of a covered manifold with values in forms or phases.
//!
//! Only strictly increasing index tuples are stored. Any other ordering is
//! resolved through total antisymmetry, and repeated indices give zero.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::CechError;
use crate::geometry::cover::MAX_OVERLAP_DEGREE;
use crate::geometry::field::sort_with_sign;
use crate::geometry::{CoveredManifold, EvalCtx, KForm, Partition, Simplex};

/// Deterministic sampling of overlaps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sampling {
    pub per_overlap: usize,
    pub seed: u64,
}

impl Sampling {
    pub fn new(per_overlap: usize, seed: u64) -> Sampling {
        Sampling { per_overlap, seed }
    }
}

impl Default for Sampling {
    fn default() -> Sampling {
        Sampling { per_overlap: 20, seed: 1 }
    }
}

/// Supremum of `f` over sample points of every `(p+1)`-fold overlap.
/// Returns `(max, worst simplex, number of points)`.
pub fn sup_over_overlaps(
    cover: &CoveredManifold,
    p: usize,
    sampling: Sampling,
    mut f: impl FnMut(&Simplex, &EvalCtx) -> f64,
) -> (f64, Option<Simplex>, usize) {
    let mut best = 0.0f64;
    let mut worst = None;
    let mut n = 0;
    for (s, pts) in cover.samples(p, sampling.per_overlap, sampling.seed) {
        for pt in pts {
            let ctx = EvalCtx::new(&pt);
            let v = f(&s, &ctx);
            n += 1;
            if !(v <= best) {
                best = if v.is_nan() { f64::INFINITY } else { v };
                worst = Some(s.clone());
            }
        }
    }
    (best, worst, n)
}

/// Values a cochain can take: smooth forms or U(1) phases.
pub trait CochainValue: Clone + Send + Sync + 'static {
    fn zero(dim: usize, form_degree: usize) -> Self;
    fn linear_combination(terms: Vec<(f64, Self)>) -> Self;
    /// The underlying real form.
    fn form(&self) -> &KForm;
}

impl CochainValue for KForm {
    fn zero(dim: usize, form_degree: usize) -> KForm {
        KForm::zero(dim, form_degree)
    }

    fn linear_combination(terms: Vec<(f64, KForm)>) -> KForm {
        KForm::linear_combination(terms)
    }

    fn form(&self) -> &KForm {
        self
    }
}

/// A U(1)-valued function `g = exp(iθ)` represented by its real phase `θ`.
#[derive(Clone, Debug)]
pub struct Phase(pub KForm);

impl CochainValue for Phase {
    fn zero(dim: usize, _form_degree: usize) -> Phase {
        Phase(KForm::zero(dim, 0))
    }

    fn linear_combination(terms: Vec<(f64, Phase)>) -> Phase {
        Phase(KForm::linear_combination(terms.into_iter().map(|(k, p)| (k, p.0)).collect()))
    }

    fn form(&self) -> &KForm {
        &self.0
    }
}

/// A Čech `p`-cochain.
#[derive(Clone)]
pub struct Cochain<V> {
    cover: Arc<CoveredManifold>,
    degree: usize,
    form_degree: usize,
    entries: BTreeMap<Simplex, V>,
}

impl<V> std::fmt::Debug for Cochain<V> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Cochain(degree={}, form_degree={}, entries={})", self.degree, self.form_degree, self.entries.len())
    }
}

impl<V: CochainValue> Cochain<V> {
    /// Builds a cochain by evaluating `f` on every `(p+1)`-fold overlap.
    pub fn from_fn(
        cover: &Arc<CoveredManifold>,
        degree: usize,
        form_degree: usize,
        mut f: impl FnMut(&Simplex) -> V,
    ) -> Cochain<V> {
        assert!(degree <= MAX_OVERLAP_DEGREE, "cochain degree {degree} too high");
        let entries = cover.overlaps(degree).iter().map(|s| (s.clone(), f(s))).collect();
        Cochain { cover: cover.clone(), degree, form_degree, entries }
    }

    pub fn zero(cover: &Arc<CoveredManifold>, degree: usize, form_degree: usize) -> Cochain<V> {
        let z = V::zero(cover.dim(), form_degree);
        Cochain::from_fn(cover, degree, form_degree, |_| z.clone())
    }

    pub fn cover(&self) -> &Arc<CoveredManifold> {
        &self.cover
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn form_degree(&self) -> usize {
        self.form_degree
    }

    pub fn entries(&self) -> &BTreeMap<Simplex, V> {
        &self.entries
    }

    /// Entry on an increasing tuple.
    pub fn get(&self, s: &[usize]) -> Option<&V> {
        self.entries.get(s)
    }

    /// Entry on an arbitrary tuple: `(sign, value)`, or `None` when the tuple
    /// has a repeated index or names an empty overlap.
    pub fn signed(&self, idx: &[usize]) -> Option<(f64, &V)> {
        let (s, sorted) = sort_with_sign(idx)?;
        self.entries.get(&sorted).map(|v| (s, v))
    }

    fn same_shape(&self, other: &Cochain<V>) {
        assert!(Arc::ptr_eq(&self.cover, &other.cover), "cochains on different covers");
        assert_eq!((self.degree, self.form_degree), (other.degree, other.form_degree), "cochain shape mismatch");
    }

    pub fn linear_combination(terms: &[(f64, &Cochain<V>)]) -> Cochain<V> {
        let first = terms[0].1;
        for (_, t) in terms {
            first.same_shape(t);
        }
        let entries = first
            .entries
            .keys()
            .map(|s| (s.clone(), V::linear_combination(terms.iter().map(|(k, c)| (*k, c.entries[s].clone())).collect())))
            .collect();
        Cochain { cover: first.cover.clone(), degree: first.degree, form_degree: first.form_degree, entries }
    }

    pub fn add(&self, other: &Cochain<V>) -> Cochain<V> {
        Cochain::linear_combination(&[(1.0, self), (1.0, other)])
    }

    pub fn sub(&self, other: &Cochain<V>) -> Cochain<V> {
        Cochain::linear_combination(&[(1.0, self), (-1.0, other)])
    }

    pub fn scale(&self, k: f64) -> Cochain<V> {
        Cochain::linear_combination(&[(k, self)])
    }

    /// Applies `f` entrywise.
    pub fn map<W: CochainValue>(&self, form_degree: usize, mut f: impl FnMut(&Simplex, &V) -> W) -> Cochain<W> {
        let entries = self.entries.iter().map(|(s, v)| (s.clone(), f(s, v))).collect();
        Cochain { cover: self.cover.clone(), degree: self.degree, form_degree, entries }
    }

    /// Largest component magnitude over sampled overlap points.
    pub fn sup_norm(&self, sampling: Sampling) -> f64 {
        sup_over_overlaps(&self.cover, self.degree, sampling, |s, ctx| self.entries[s].form().max_abs(ctx)).0
    }

    /// Largest entrywise deviation from `other` over sampled points.
    pub fn max_deviation(&self, other: &Cochain<V>, sampling: Sampling) -> f64 {
        self.same_shape(other);
        sup_over_overlaps(&self.cover, self.degree, sampling, |s, ctx| {
            let a = self.entries[s].form().values(ctx);
            let b = other.entries[s].form().values(ctx);
            a.iter().zip(&b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
        })
        .0
    }
}

/// `(δc)_{i0..i(p+1)} = Σ_k (-1)^k c_{i0..î_k..i(p+1)}`.
pub fn coboundary<V: CochainValue>(c: &Cochain<V>) -> Cochain<V> {
    let p = c.degree;
    assert!(p < MAX_OVERLAP_DEGREE, "coboundary of degree {p} exceeds the overlap depth");
    Cochain::from_fn(&c.cover, p + 1, c.form_degree, |s| {
        let terms = (0..s.len())
            .map(|k| {
                let mut face = s.clone();
                face.remove(k);
                (if k % 2 == 0 { 1.0 } else { -1.0 }, c.entries[&face].clone())
            })
            .collect();
        V::linear_combination(terms)
    })
}

/// Applies `φ` entrywise, e.g. `dlog` from phases to 1-forms.
pub fn map_cochain<V: CochainValue, W: CochainValue>(
    c: &Cochain<V>,
    form_degree: usize,
    phi: impl FnMut(&V) -> W,
) -> Cochain<W> {
    let mut phi = phi;
    c.map(form_degree, |_, v| phi(v))
}

/// Outcome of a cocycle test.
#[derive(Clone, Debug, PartialEq)]
pub struct CocycleReport {
    pub max_defect: f64,
    pub worst: Option<Simplex>,
    pub n_points: usize,
    pub holds: bool,
}

/// Tests `δc = 0` on sampled overlap points.
pub fn is_cocycle(c: &Cochain<KForm>, tol: f64, sampling: Sampling) -> CocycleReport {
    let dc = coboundary(c);
    let (max_defect, worst, n_points) =
        sup_over_overlaps(&c.cover, c.degree + 1, sampling, |s, ctx| dc.entries[s].max_abs(ctx));
    CocycleReport { max_defect, worst, n_points, holds: max_defect <= tol }
}

/// Tests that `δθ` is a locally constant element of `2πZ`, i.e. that
/// `exp(iθ)` is a U(1) cocycle.
pub fn is_phase_cocycle(theta: &Cochain<Phase>, tol: f64, sampling: Sampling) -> CocycleReport {
    let dt = coboundary(theta);
    let tau = std::f64::consts::TAU;
    let (max_defect, worst, n_points) = sup_over_overlaps(&theta.cover, theta.degree + 1, sampling, |s, ctx| {
        let j = &dt.entries[s].0.jets(ctx, 1)[0];
        let v = j.value() / tau;
        let off = (v - v.round()).abs() * tau;
        (0..ctx.dim()).fold(off, |m, a| m.max(j.partial(a).abs()))
    });
    CocycleReport { max_defect, worst, n_points, holds: max_defect <= tol }
}

/// How [`solve_coboundary_with`] validates its input.
#[derive(Clone, Copy, Debug)]
pub struct SolveCheck {
    pub sampling: Sampling,
    /// Relative tolerance on `δh`, scaled by `1 + sup|h|`.
    pub rel_tol: f64,
}

impl Default for SolveCheck {
    fn default() -> SolveCheck {
        SolveCheck { sampling: Sampling::new(3, 0x5eed), rel_tol: 1e-7 }
    }
}

/// Partition-of-unity contraction `c_{i0..} = Σ_k ρ_k h_{k i0..}`, unchecked.
pub fn contract(h: &Cochain<KForm>, partition: &Partition) -> Cochain<KForm> {
    let p = h.degree;
    assert!(p >= 1, "cannot contract a 0-cochain");
    let cover = h.cover.clone();
    let dim = cover.dim();
    let fd = h.form_degree;
    let rho: Vec<KForm> = (0..partition.len()).map(|k| partition.rho(k).clone()).collect();
    Cochain::from_fn(&h.cover, p - 1, fd, |s| {
        // For every patch k meeting the overlap, the signed entry h_{k s}.
        let mut terms: Vec<(usize, f64, KForm)> = Vec::new();
        for k in 0..cover.n_patches() {
            let mut idx = vec![k];
            idx.extend_from_slice(s);
            if let Some((sign, v)) = h.signed(&idx) {
                terms.push((k, sign, v.clone()));
            }
        }
        let rho = rho.clone();
        let cover = cover.clone();
        let ncomp = crate::geometry::basis(dim, fd).len();
        KForm::from_fn(dim, fd, move |ctx, order| {
            let x = ctx.point().coords();
            let mut out = vec![crate::jet::Jet::zero(dim, order); ncomp];
            for (k, sign, v) in &terms {
                if !cover.patches()[*k].contains(x) {
                    continue;
                }
                let r = &rho[*k].jets(ctx, order)[0];
                for (o, j) in out.iter_mut().zip(v.jets(ctx, order).iter()) {
                    let t = r * j;
                    o.axpy(*sign, &t);
                }
            }
            out
        })
    })
}

/// Solves `δc = h` for a cocycle `h` with the standard partition of unity.
pub fn solve_coboundary(h: &Cochain<KForm>) -> Result<Cochain<KForm>, CechError> {
    solve_coboundary_with(h, h.cover.partition(), SolveCheck::default())
}

/// Solves `δc = h` with a chosen partition, after checking `δh = 0`.
pub fn solve_coboundary_with(
    h: &Cochain<KForm>,
    partition: &Partition,
    check: SolveCheck,
) -> Result<Cochain<KForm>, CechError> {
    if h.degree == 0 {
        return Err(CechError::ZeroDegree);
    }
    if h.degree < MAX_OVERLAP_DEGREE {
        let scale = h.sup_norm(check.sampling);
        let tol = check.rel_tol * (1.0 + scale);
        let r = is_cocycle(h, tol, check.sampling);
        if !r.holds {
            return Err(CechError::NotCocycle { residual: r.max_defect, tolerance: tol });
        }
    }
    Ok(contract(h, partition))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_torus_cover, TrigPoly};
    use rand::SeedableRng;

    fn random_0_cochain(cover: &Arc<CoveredManifold>, seed: u64) -> Cochain<KForm> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Cochain::from_fn(cover, 0, 0, |_| TrigPoly::random(cover.dim(), 2, 2, 1.0, &mut rng).to_field(cover.dim()))
    }

    #[test]
    fn antisymmetric_access() {
        let cover = make_torus_cover(2, 4, 0.04).unwrap();
        let u = random_0_cochain(&cover, 1);
        let du = coboundary(&u);
        let s = cover.overlaps(1)[0].clone();
        let (sg, _) = du.signed(&[s[1], s[0]]).unwrap();
        assert_eq!(sg, -1.0);
        assert!(du.signed(&[s[0], s[0]]).is_none());
    }

    #[test]
    fn delta_squared_is_zero() {
        let cover = make_torus_cover(2, 4, 0.04).unwrap();
        let u = random_0_cochain(&cover, 2);
        let r = is_cocycle(&coboundary(&u), 1e-12, Sampling::new(3, 4));
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn solve_recovers_coboundary() {
        let cover = make_torus_cover(2, 4, 0.04).unwrap();
        let u = random_0_cochain(&cover, 3);
        let h = coboundary(&u);
        let c = solve_coboundary(&h).unwrap();
        assert!(coboundary(&c).max_deviation(&h, Sampling::new(3, 9)) < 1e-12);
    }

    #[test]
    fn solve_rejects_non_cocycles() {
        let cover = make_torus_cover(2, 4, 0.04).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let h: Cochain<KForm> = Cochain::from_fn(&cover, 1, 0, |_| TrigPoly::random(2, 2, 2, 1.0, &mut rng).to_field(2));
        assert!(matches!(solve_coboundary(&h), Err(CechError::NotCocycle { .. })));
    }

    #[test]
    fn integer_phase_jumps_are_cocycles() {
        let cover = make_torus_cover(1, 3, 0.05).unwrap();
        // θ_ij = 2π x_i^loc restricted to overlaps; the loop jump is 2π.
        let theta: Cochain<Phase> = Cochain::from_fn(&cover, 1, 0, |s| {
            Phase(cover.local_coordinate(s[1], 0).sub(&cover.local_coordinate(s[0], 0)).scale(std::f64::consts::TAU))
        });
        let r = is_phase_cocycle(&theta, 1e-12, Sampling::new(5, 1));
        assert!(r.holds, "{r:?}");
    }
}
