//! Generic checker for 2-term L∞-algebras `V1 --d--> V0`.
//!
//! An algebra supplies `d`, the bracket on `V0`, the action `[x, h]` of `V0`
//! on `V1` and the Jacobiator `J`. The remaining brackets are fixed by the
//! axioms: `[h, x] = -[x, h]` and `[h, k] = 0`. Elements are lazy fields, so
//! every identity is checked by sampling sup norms over the cover.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Deliberate defects used as negative controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Corruption {
    /// Drop the `-η(f_ξ)` term of the bracket's cochain part.
    DropBracketTerm,
    /// Replace a nonzero Jacobiator by zero.
    ZeroJacobiator,
    /// Drop the 1-form part `du_i` of the differential.
    DropDifferentialForm,
}

/// A 2-term L∞-algebra whose elements can be sampled.
pub trait TwoTermLInfinity {
    type V0: Clone;
    type V1: Clone;

    fn random0(&self, rng: &mut ChaCha8Rng) -> Self::V0;
    fn random1(&self, rng: &mut ChaCha8Rng) -> Self::V1;
    fn zero0(&self) -> Self::V0;
    fn zero1(&self) -> Self::V1;
    fn combine0(&self, terms: &[(f64, &Self::V0)]) -> Self::V0;
    fn combine1(&self, terms: &[(f64, &Self::V1)]) -> Self::V1;

    fn d(&self, h: &Self::V1) -> Self::V0;
    fn bracket(&self, x: &Self::V0, y: &Self::V0) -> Self::V0;
    /// `[x, h]` for `x ∈ V0`, `h ∈ V1`.
    fn act(&self, x: &Self::V0, h: &Self::V1) -> Self::V1;
    fn jacobiator(&self, x: &Self::V0, y: &Self::V0, z: &Self::V0) -> Self::V1;

    /// Sampled sup norm and number of points used.
    fn norm0(&self, x: &Self::V0) -> (f64, usize);
    fn norm1(&self, h: &Self::V1) -> (f64, usize);
    /// How far `x` is from satisfying the defining constraints of `V0`.
    fn closure_residual(&self, x: &Self::V0) -> f64;

    /// An independent formula for `[x, h]`, if the algebra has one.
    fn mixed_oracle(&self, _x: &Self::V0, _h: &Self::V1) -> Option<Self::V1> {
        None
    }
}

/// Largest deviation of each axiom over the sampled elements.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LInfinityReport {
    /// `[x, y] + [y, x]`.
    pub antisymmetry: f64,
    /// `d[x, h] - [x, dh]`, together with the constraint residual of `dh`.
    pub chain_map_0: f64,
    /// `[dh, k] - [h, dk]`.
    pub chain_map_1: f64,
    /// `[x, h]` against the algebra's own formula for it.
    pub mixed_rule: f64,
    /// `dJ(x,y,z) + [[x,y],z] - [[x,z],y] - [x,[y,z]]`.
    pub homotopy_0: f64,
    /// `J(x,y,dh) + [[x,y],h] - [[x,h],y] - [x,[y,h]]`.
    pub homotopy_1: f64,
    /// Difference of the two sides of the Jacobiator identity.
    pub jacobiator_identity: f64,
    /// Constraint residual of random elements and of brackets.
    pub closure: f64,
    pub tolerance: f64,
    pub n_points: usize,
    pub pass: bool,
}

impl LInfinityReport {
    /// All deviations with their names, in a fixed order.
    pub fn entries(&self) -> [(&'static str, f64); 8] {
        [
            ("antisymmetry", self.antisymmetry),
            ("chain_map_0", self.chain_map_0),
            ("chain_map_1", self.chain_map_1),
            ("mixed_rule", self.mixed_rule),
            ("homotopy_0", self.homotopy_0),
            ("homotopy_1", self.homotopy_1),
            ("jacobiator_identity", self.jacobiator_identity),
            ("closure", self.closure),
        ]
    }

    pub fn max_deviation(&self) -> f64 {
        self.entries().iter().fold(0.0, |m, (_, v)| if v.is_nan() { f64::INFINITY } else { m.max(*v) })
    }
}

fn upd(slot: &mut f64, v: f64) {
    *slot = if v.is_nan() { f64::INFINITY } else { slot.max(v) };
}

/// Checks every axiom on `trials` random draws of `x, y, z, w ∈ V0` and
/// `h, k ∈ V1`.
pub fn check_linfinity<L: TwoTermLInfinity>(alg: &L, trials: usize, seed: u64, tol: f64) -> LInfinityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = LInfinityReport { tolerance: tol, ..Default::default() };
    let mut points = 0usize;
    for _ in 0..trials {
        let x = alg.random0(&mut rng);
        let y = alg.random0(&mut rng);
        let z = alg.random0(&mut rng);
        let w = alg.random0(&mut rng);
        let h = alg.random1(&mut rng);
        let k = alg.random1(&mut rng);
        let (a, b) = report_trial(alg, [&x, &y, &z, &w], [&h, &k], &mut r);
        points += a + b;
    }
    r.n_points = points;
    r.pass = r.max_deviation() <= tol;
    r
}

/// Runs the axioms on the given elements, updating `r`.
pub fn report_trial<L: TwoTermLInfinity>(
    alg: &L,
    [x, y, z, w]: [&L::V0; 4],
    [h, k]: [&L::V1; 2],
    r: &mut LInfinityReport,
) -> (usize, usize) {
    let n0 = |v: &L::V0| alg.norm0(v);
    let n1 = |v: &L::V1| alg.norm1(v);

    for e in [x, y, z] {
        upd(&mut r.closure, alg.closure_residual(e));
    }
    let xy = alg.bracket(x, y);
    upd(&mut r.closure, alg.closure_residual(&xy));

    let yx = alg.bracket(y, x);
    let (v, p0) = n0(&alg.combine0(&[(1.0, &xy), (1.0, &yx)]));
    upd(&mut r.antisymmetry, v);

    let dh = alg.d(h);
    let xh = alg.act(x, h);
    let lhs = alg.d(&xh);
    let rhs = alg.bracket(x, &dh);
    upd(&mut r.chain_map_0, n0(&alg.combine0(&[(1.0, &lhs), (-1.0, &rhs)])).0);
    upd(&mut r.chain_map_0, alg.closure_residual(&dh));

    let dk = alg.d(k);
    let (v, p1) = n1(&alg.combine1(&[(1.0, &alg.act(&dh, k)), (1.0, &alg.act(&dk, h))]));
    upd(&mut r.chain_map_1, v);

    if let Some(o) = alg.mixed_oracle(x, h) {
        upd(&mut r.mixed_rule, n1(&alg.combine1(&[(1.0, &xh), (-1.0, &o)])).0);
    }

    // dJ(x,y,z) = -[[x,y],z] + [[x,z],y] + [x,[y,z]]
    let j = alg.jacobiator(x, y, z);
    let xz = alg.bracket(x, z);
    let yz = alg.bracket(y, z);
    let t1 = alg.bracket(&xy, z);
    let t2 = alg.bracket(&xz, y);
    let t3 = alg.bracket(x, &yz);
    let dj = alg.d(&j);
    let res = alg.combine0(&[(1.0, &dj), (1.0, &t1), (-1.0, &t2), (-1.0, &t3)]);
    upd(&mut r.homotopy_0, n0(&res).0);

    // J(x,y,dh) = -[[x,y],h] + [[x,h],y] + [x,[y,h]], with [[x,h],y] = -[y,[x,h]]
    let jd = alg.jacobiator(x, y, &dh);
    let s1 = alg.act(&xy, h);
    let s2 = alg.act(y, &xh);
    let s3 = alg.act(x, &alg.act(y, h));
    let res = alg.combine1(&[(1.0, &jd), (1.0, &s1), (1.0, &s2), (-1.0, &s3)]);
    upd(&mut r.homotopy_1, n1(&res).0);

    // [x,J(y,z,w)] + J(x,[y,z],w) + J(x,z,[y,w]) + [J(x,y,z),w] + [z,J(x,y,w)]
    //   = J(x,y,[z,w]) + J([x,y],z,w) + [y,J(x,z,w)] + J(y,[x,z],w) + J(y,z,[x,w])
    let yw = alg.bracket(y, w);
    let zw = alg.bracket(z, w);
    let xw = alg.bracket(x, w);
    let lhs = [
        alg.act(x, &alg.jacobiator(y, z, w)),
        alg.jacobiator(x, &yz, w),
        alg.jacobiator(x, z, &yw),
        alg.act(w, &j),
        alg.act(z, &alg.jacobiator(x, y, w)),
    ];
    let rhs = [
        alg.jacobiator(x, y, &zw),
        alg.jacobiator(&xy, z, w),
        alg.act(y, &alg.jacobiator(x, z, w)),
        alg.jacobiator(y, &xz, w),
        alg.jacobiator(y, z, &xw),
    ];
    // [J(x,y,z), w] = -[w, J(x,y,z)]
    let signs_l = [1.0, 1.0, 1.0, -1.0, 1.0];
    let mut terms: Vec<(f64, &L::V1)> = lhs.iter().zip(signs_l).map(|(t, s)| (s, t)).collect();
    terms.extend(rhs.iter().map(|t| (-1.0, t)));
    upd(&mut r.jacobiator_identity, n1(&alg.combine1(&terms)).0);

    (p0, p1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// so(3) with V1 = R acting trivially: a strict Lie 2-algebra.
    struct So3 {
        drop_term: bool,
    }

    fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    }

    impl TwoTermLInfinity for So3 {
        type V0 = [f64; 3];
        type V1 = f64;
        fn random0(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
            [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
        }
        fn random1(&self, rng: &mut ChaCha8Rng) -> f64 {
            rng.gen_range(-1.0..1.0)
        }
        fn zero0(&self) -> [f64; 3] {
            [0.0; 3]
        }
        fn zero1(&self) -> f64 {
            0.0
        }
        fn combine0(&self, terms: &[(f64, &[f64; 3])]) -> [f64; 3] {
            let mut o = [0.0; 3];
            for (c, v) in terms {
                for i in 0..3 {
                    o[i] += c * v[i];
                }
            }
            o
        }
        fn combine1(&self, terms: &[(f64, &f64)]) -> f64 {
            terms.iter().map(|(c, v)| c * **v).sum()
        }
        fn d(&self, _h: &f64) -> [f64; 3] {
            [0.0; 3]
        }
        fn bracket(&self, x: &[f64; 3], y: &[f64; 3]) -> [f64; 3] {
            let mut c = cross(x, y);
            if self.drop_term {
                c[0] = x[1] * y[2];
            }
            c
        }
        fn act(&self, _x: &[f64; 3], _h: &f64) -> f64 {
            0.0
        }
        fn jacobiator(&self, _: &[f64; 3], _: &[f64; 3], _: &[f64; 3]) -> f64 {
            0.0
        }
        fn norm0(&self, x: &[f64; 3]) -> (f64, usize) {
            (x.iter().fold(0.0, |m, v| m.max(v.abs())), 1)
        }
        fn norm1(&self, h: &f64) -> (f64, usize) {
            (h.abs(), 1)
        }
        fn closure_residual(&self, _x: &[f64; 3]) -> f64 {
            0.0
        }
    }

    #[test]
    fn cross_product_is_a_lie_algebra() {
        let r = check_linfinity(&So3 { drop_term: false }, 10, 1, 1e-12);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn broken_bracket_fails_jacobi() {
        let r = check_linfinity(&So3 { drop_term: true }, 10, 1, 1e-12);
        assert!(!r.pass);
        assert!(r.homotopy_0 > 1e-3);
    }
}
