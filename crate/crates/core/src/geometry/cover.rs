//! Good covers of `T^d` by boxes, with a smooth partition of unity.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::field::{wrap_diff, wrap_unit, EvalCtx, KForm, NodeRef, Point, ScalarField};
use crate::error::GeometryError;
use crate::jet::Jet;

/// An increasing tuple of patch indices naming a nonempty overlap.
pub type Simplex = Vec<usize>;

/// An open box `U_i`, an axis-aligned product of arcs.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub index: usize,
    pub grid: Vec<usize>,
    pub center: Vec<f64>,
    pub half_width: f64,
}

impl Patch {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.center.iter().zip(x).all(|(c, xi)| wrap_diff(xi - c).abs() < self.half_width)
    }
}

/// Which bump profile the partition of unity is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PartitionKind {
    /// `ρ_i = ψ_i / Σ ψ_j`.
    #[default]
    Standard,
    /// `ρ_i = ψ_i² / Σ ψ_j²`, an independent choice used to test
    /// partition-independence of constructions.
    Squared,
}

/// A partition of unity subordinate to a cover.
#[derive(Clone)]
pub struct Partition {
    pub kind: PartitionKind,
    rho: Vec<ScalarField>,
}

impl Partition {
    pub fn rho(&self, i: usize) -> &ScalarField {
        &self.rho[i]
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }
}

/// `T^d` with a fixed box cover, its overlaps, and partitions of unity.
pub struct CoveredManifold {
    dim: usize,
    splits: usize,
    margin: f64,
    patches: Vec<Patch>,
    /// `overlaps[p]` lists the nonempty `(p+1)`-fold intersections.
    overlaps: Vec<Vec<Simplex>>,
    standard: Partition,
    squared: Partition,
}

impl std::fmt::Debug for CoveredManifold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoveredManifold")
            .field("dim", &self.dim)
            .field("splits", &self.splits)
            .field("margin", &self.margin)
            .field("patches", &self.patches.len())
            .finish()
    }
}

/// Deepest overlap degree precomputed.
pub const MAX_OVERLAP_DEGREE: usize = 4;

/// Below this value of `1 - s²` the bump and all its derivatives are
/// smaller than `e^-500` and are treated as exactly zero.
const BUMP_FLOOR: f64 = 2e-3;

/// Builds the cover of `T^d` by `splits^d` boxes of width `1/splits + 2 margin`.
pub fn make_torus_cover(dim: usize, splits: usize, margin: f64) -> Result<Arc<CoveredManifold>, GeometryError> {
    if !(1..=3).contains(&dim) {
        return Err(GeometryError::UnsupportedDimension(dim));
    }
    if splits < 3 {
        return Err(GeometryError::TooFewSplits(splits));
    }
    let max_margin = 1.0 / (2.0 * splits as f64);
    if !(margin > 0.0 && margin < max_margin) {
        return Err(GeometryError::BadMargin { margin, max: max_margin });
    }
    let hw = 0.5 / splits as f64 + margin;
    let n = splits.pow(dim as u32);
    let patches: Vec<Patch> = (0..n)
        .map(|index| {
            let mut grid = Vec::with_capacity(dim);
            let mut r = index;
            for _ in 0..dim {
                grid.push(r % splits);
                r /= splits;
            }
            grid.reverse();
            let center = grid.iter().map(|&g| (g as f64 + 0.5) / splits as f64).collect();
            Patch { index, grid, center, half_width: hw }
        })
        .collect();
    let mut cover = CoveredManifold {
        dim,
        splits,
        margin,
        patches,
        overlaps: Vec::new(),
        standard: Partition { kind: PartitionKind::Standard, rho: Vec::new() },
        squared: Partition { kind: PartitionKind::Squared, rho: Vec::new() },
    };
    cover.overlaps = cover.enumerate_overlaps();
    let arc = Arc::new(cover);
    let standard = build_partition(&arc, PartitionKind::Standard);
    let squared = build_partition(&arc, PartitionKind::Squared);
    let mut cover = Arc::try_unwrap(arc).expect("cover not yet shared");
    cover.standard = standard;
    cover.squared = squared;
    Ok(Arc::new(cover))
}

impl CoveredManifold {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn splits(&self) -> usize {
        self.splits
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn n_patches(&self) -> usize {
        self.patches.len()
    }

    /// Nonempty overlaps of `p + 1` patches, `p <= MAX_OVERLAP_DEGREE`.
    pub fn overlaps(&self, p: usize) -> &[Simplex] {
        &self.overlaps[p]
    }

    pub fn is_overlap(&self, s: &[usize]) -> bool {
        !s.is_empty() && s.len() <= MAX_OVERLAP_DEGREE + 1 && self.overlaps[s.len() - 1].binary_search(&s.to_vec()).is_ok()
    }

    /// The standard partition of unity.
    pub fn partition(&self) -> &Partition {
        &self.standard
    }

    pub fn partition_of(&self, kind: PartitionKind) -> &Partition {
        match kind {
            PartitionKind::Standard => &self.standard,
            PartitionKind::Squared => &self.squared,
        }
    }

    /// Indices of the patches containing `x`.
    pub fn patches_containing(&self, x: &[f64]) -> Vec<usize> {
        self.patches.iter().filter(|p| p.contains(x)).map(|p| p.index).collect()
    }

    /// Per-axis intersection arc `(center, half_width)` of a set of patches.
    fn overlap_arcs(&self, s: &[usize]) -> Option<Vec<(f64, f64)>> {
        let hw = self.patches[0].half_width;
        (0..self.dim)
            .map(|a| {
                let set: BTreeSet<usize> = s.iter().map(|&i| self.patches[i].grid[a]).collect();
                let v: Vec<usize> = set.into_iter().collect();
                match v.len() {
                    1 => Some((self.patches[s[0]].center[a], hw)),
                    2 => {
                        let (g0, g1) = (v[0], v[1]);
                        let boundary = if g1 == g0 + 1 {
                            g1
                        } else if g0 == 0 && g1 == self.splits - 1 {
                            0
                        } else {
                            return None;
                        };
                        Some((boundary as f64 / self.splits as f64, self.margin))
                    }
                    _ => None,
                }
            })
            .collect()
    }

    fn enumerate_overlaps(&self) -> Vec<Vec<Simplex>> {
        let n = self.patches.len();
        let mut levels: Vec<Vec<Simplex>> = vec![(0..n).map(|i| vec![i]).collect()];
        for _ in 1..=MAX_OVERLAP_DEGREE {
            let prev = levels.last().unwrap();
            let mut next = Vec::new();
            for s in prev {
                for j in s.last().unwrap() + 1..n {
                    let mut t = s.clone();
                    t.push(j);
                    if self.overlap_arcs(&t).is_some() {
                        next.push(t);
                    }
                }
            }
            levels.push(next);
        }
        levels
    }

    /// `n` uniform points strictly inside the overlap `s`.
    pub fn sample_overlap(&self, s: &[usize], n: usize, rng: &mut impl Rng) -> Vec<Point> {
        let arcs = self.overlap_arcs(s).expect("sampling an empty overlap");
        (0..n)
            .map(|_| {
                Point::new(
                    arcs.iter()
                        .map(|&(c, hw)| {
                            let w = hw - 1e-6;
                            c + rng.gen_range(-w..w)
                        })
                        .collect(),
                )
            })
            .collect()
    }

    /// `n` uniform points of `T^d`.
    pub fn sample_global(&self, n: usize, rng: &mut impl Rng) -> Vec<Point> {
        (0..n).map(|_| Point::new((0..self.dim).map(|_| rng.gen::<f64>()).collect())).collect()
    }

    /// Points per overlap of degree `p`, deterministic in `seed`.
    pub fn samples(&self, p: usize, per_overlap: usize, seed: u64) -> Vec<(Simplex, Vec<Point>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(p as u64 + 1)));
        self.overlaps[p].iter().map(|s| (s.clone(), self.sample_overlap(s, per_overlap, &mut rng))).collect()
    }

    /// Local coordinate function of patch `i`, lifted to `R` around its center.
    pub fn local_coordinate(&self, i: usize, axis: usize) -> ScalarField {
        KForm::coordinate(self.dim, axis, self.patches[i].center[axis])
    }
}

/// Taylor series of `exp(-1/(1-s²))` at `s0`, in powers of `s - s0`.
fn bump_series(s0: f64, order: usize) -> Option<Vec<f64>> {
    if 1.0 - s0 * s0 < BUMP_FLOOR {
        return None;
    }
    let s = Jet::variable(1, order, 0, s0);
    let u = &Jet::constant(1, order, 1.0) - &(&s * &s);
    let e = u.recip().scale(-1.0).exp();
    Some(e.coeffs().to_vec())
}

fn bump_jet(patch: &Patch, x: &[f64], order: usize, power: i32) -> Option<Jet> {
    let dim = x.len();
    let mut acc: Option<Jet> = None;
    for (a, &xa) in x.iter().enumerate() {
        let s0 = wrap_diff(xa - patch.center[a]) / patch.half_width;
        let mut series = bump_series(s0, order)?;
        let mut f = 1.0;
        for c in series.iter_mut() {
            *c *= f;
            f /= patch.half_width;
        }
        let mut j = Jet::from_axis_series(dim, order, a, &series);
        if power == 2 {
            j = &j * &j;
        }
        acc = Some(match acc {
            None => j,
            Some(p) => &p * &j,
        });
    }
    acc
}

fn build_partition(cover: &Arc<CoveredManifold>, kind: PartitionKind) -> Partition {
    let power = if kind == PartitionKind::Squared { 2 } else { 1 };
    let patches = cover.patches.clone();
    let dim = cover.dim;
    let all = patches.clone();
    let recip_sum = NodeRef::new(1, move |ctx: &EvalCtx, order| {
        let x = ctx.point().coords();
        let mut s = Jet::zero(dim, order);
        for p in &all {
            if let Some(b) = bump_jet(p, x, order, power) {
                s += &b;
            }
        }
        vec![s.recip()]
    });
    let rho = patches
        .into_iter()
        .map(|p| {
            let inv = recip_sum.clone();
            KForm::from_fn(dim, 0, move |ctx, order| {
                let x = ctx.point().coords();
                match bump_jet(&p, x, order, power) {
                    None => vec![Jet::zero(dim, order)],
                    Some(b) => vec![&b * &inv.eval(ctx, order)[0]],
                }
            })
        })
        .collect();
    Partition { kind, rho }
}

/// Reduces a point of `R^d` into the torus.
pub fn canonical(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| wrap_unit(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_counts() {
        let c = make_torus_cover(2, 4, 0.04).unwrap();
        assert_eq!(c.n_patches(), 16);
        assert_eq!(c.overlaps(1).len(), 64);
        assert_eq!(c.overlaps(2).len(), 64);
        assert_eq!(c.overlaps(3).len(), 16);
        assert_eq!(c.overlaps(4).len(), 0);
        let c3 = make_torus_cover(3, 3, 0.04).unwrap();
        assert_eq!(c3.n_patches(), 27);
        assert_eq!(c3.overlaps(1).len(), 351);
    }

    #[test]
    fn rejects_degenerate_covers() {
        assert!(matches!(make_torus_cover(2, 2, 0.04), Err(GeometryError::TooFewSplits(2))));
        assert!(matches!(make_torus_cover(2, 4, 0.2), Err(GeometryError::BadMargin { .. })));
        assert!(matches!(make_torus_cover(2, 4, 0.0), Err(GeometryError::BadMargin { .. })));
    }

    #[test]
    fn samples_lie_in_every_patch_of_the_overlap() {
        let c = make_torus_cover(2, 4, 0.04).unwrap();
        for (s, pts) in c.samples(2, 10, 7) {
            for p in pts {
                for &i in &s {
                    assert!(c.patches()[i].contains(p.coords()));
                }
            }
        }
    }

    #[test]
    fn partition_sums_to_one_with_vanishing_derivatives() {
        let c = make_torus_cover(2, 4, 0.04).unwrap();
        for kind in [PartitionKind::Standard, PartitionKind::Squared] {
            let part = c.partition_of(kind);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for p in c.sample_global(20, &mut rng) {
                let ctx = EvalCtx::new(&p);
                let mut s = Jet::zero(2, 3);
                for i in 0..c.n_patches() {
                    s += &part.rho(i).jets(&ctx, 3)[0];
                }
                assert!((s.value() - 1.0).abs() < 1e-14);
                assert!(s.coeffs()[1..].iter().all(|v| v.abs() < 1e-9));
            }
        }
    }
}
