//! Trigonometric polynomials on the torus, kept symbolically.
//!
//! These are the test fields of the crate: periodic, cheap to differentiate
//! exactly, and serializable without loss.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::field::{basis, KForm, ScalarField, VectorField};
use crate::jet::Jet;

/// `a cos(2π k·x) + b sin(2π k·x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: Vec<i32>,
    pub a: f64,
    pub b: f64,
}

/// A finite sum of [`TrigTerm`]s.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn zero() -> TrigPoly {
        TrigPoly { terms: Vec::new() }
    }

    pub fn constant(dim: usize, c: f64) -> TrigPoly {
        TrigPoly { terms: vec![TrigTerm { k: vec![0; dim], a: c, b: 0.0 }] }
    }

    /// A random polynomial with `nterms` frequencies in `[-max_freq, max_freq]^d`
    /// and coefficients uniform in `[-amp, amp]`.
    pub fn random(dim: usize, nterms: usize, max_freq: i32, amp: f64, rng: &mut impl Rng) -> TrigPoly {
        let terms = (0..nterms)
            .map(|_| TrigTerm {
                k: (0..dim).map(|_| rng.gen_range(-max_freq..=max_freq)).collect(),
                a: rng.gen_range(-amp..=amp),
                b: rng.gen_range(-amp..=amp),
            })
            .collect();
        TrigPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.a == 0.0 && (t.b == 0.0 || t.k.iter().all(|&k| k == 0)))
    }

    /// Exact partial derivative along `axis`.
    pub fn partial(&self, axis: usize) -> TrigPoly {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.k[axis] != 0)
            .map(|t| {
                let w = TAU * t.k[axis] as f64;
                TrigTerm { k: t.k.clone(), a: w * t.b, b: -w * t.a }
            })
            .collect();
        TrigPoly { terms }
    }

    pub fn scale(&self, s: f64) -> TrigPoly {
        TrigPoly { terms: self.terms.iter().map(|t| TrigTerm { k: t.k.clone(), a: s * t.a, b: s * t.b }).collect() }
    }

    /// Concatenates term lists.
    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        TrigPoly { terms }
    }

    pub fn sub(&self, other: &TrigPoly) -> TrigPoly {
        self.add(&other.scale(-1.0))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let ph = TAU * t.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum::<f64>();
                t.a * ph.cos() + t.b * ph.sin()
            })
            .sum()
    }

    /// Taylor jet at `x` using the closed form of the monomial coefficients.
    pub fn jet(&self, x: &[f64], order: usize) -> Jet {
        let dim = x.len();
        let mut out = Jet::zero(dim, order);
        let n = out.coeffs().len();
        let exps: Vec<Vec<u8>> = (0..n).map(|i| out.exponent(i).to_vec()).collect();
        let c = out.coeffs_mut();
        for t in &self.terms {
            let ph = TAU * t.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum::<f64>();
            let (s, co) = ph.sin_cos();
            // (a - i b) e^{iφ} i^p, real part, for p mod 4
            let re = [t.a * co + t.b * s, -(t.a * s - t.b * co), -(t.a * co + t.b * s), t.a * s - t.b * co];
            let pw: Vec<Vec<f64>> = t
                .k
                .iter()
                .map(|&k| {
                    let w = TAU * k as f64;
                    let mut v = vec![1.0; order + 1];
                    for p in 1..=order {
                        v[p] = v[p - 1] * w / p as f64;
                    }
                    v
                })
                .collect();
            for (ci, e) in c.iter_mut().zip(&exps) {
                let mut w = 1.0;
                let mut deg = 0;
                for a in 0..dim {
                    w *= pw[a][e[a] as usize];
                    deg += e[a] as usize;
                }
                if w != 0.0 {
                    *ci += re[deg % 4] * w;
                }
            }
        }
        out
    }

    pub fn to_field(&self, dim: usize) -> ScalarField {
        let me = self.clone();
        KForm::from_fn(dim, 0, move |ctx, order| vec![me.jet(ctx.point().coords(), order)])
    }
}

/// A form whose components are trigonometric polynomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigForm {
    pub degree: usize,
    pub comps: Vec<TrigPoly>,
}

impl TrigForm {
    pub fn zero(dim: usize, degree: usize) -> TrigForm {
        TrigForm { degree, comps: vec![TrigPoly::zero(); basis(dim, degree).len()] }
    }

    pub fn random(dim: usize, degree: usize, nterms: usize, max_freq: i32, amp: f64, rng: &mut impl Rng) -> TrigForm {
        let n = basis(dim, degree).len();
        TrigForm { degree, comps: (0..n).map(|_| TrigPoly::random(dim, nterms, max_freq, amp, rng)).collect() }
    }

    pub fn from_scalar(p: TrigPoly) -> TrigForm {
        TrigForm { degree: 0, comps: vec![p] }
    }

    /// Exact exterior derivative.
    pub fn d(&self, dim: usize) -> TrigForm {
        let inb = basis(dim, self.degree);
        let outb = basis(dim, self.degree + 1);
        let comps = outb
            .iter()
            .map(|idx| {
                let mut acc = TrigPoly::zero();
                for r in 0..idx.len() {
                    let mut rest = idx.clone();
                    let axis = rest.remove(r);
                    let pos = inb.iter().position(|b| *b == rest).unwrap();
                    let t = self.comps[pos].partial(axis);
                    acc = if r % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
                }
                acc
            })
            .collect();
        TrigForm { degree: self.degree + 1, comps }
    }

    pub fn add(&self, other: &TrigForm) -> TrigForm {
        assert_eq!(self.degree, other.degree);
        TrigForm { degree: self.degree, comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, other: &TrigForm) -> TrigForm {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> TrigForm {
        TrigForm { degree: self.degree, comps: self.comps.iter().map(|c| c.scale(s)).collect() }
    }

    pub fn to_form(&self, dim: usize) -> KForm {
        let me = self.clone();
        KForm::from_fn(dim, self.degree, move |ctx, order| {
            me.comps.iter().map(|c| c.jet(ctx.point().coords(), order)).collect()
        })
    }
}

/// A random trigonometric vector field.
pub fn random_vector_field(dim: usize, nterms: usize, max_freq: i32, amp: f64, rng: &mut impl Rng) -> VectorField {
    let comps: Vec<TrigPoly> = (0..dim).map(|_| TrigPoly::random(dim, nterms, max_freq, amp, rng)).collect();
    VectorField::from_fn(dim, move |ctx, order| comps.iter().map(|c| c.jet(ctx.point().coords(), order)).collect())
}

/// A random trigonometric function.
pub fn random_scalar(dim: usize, nterms: usize, max_freq: i32, amp: f64, rng: &mut impl Rng) -> ScalarField {
    TrigPoly::random(dim, nterms, max_freq, amp, rng).to_field(dim)
}
