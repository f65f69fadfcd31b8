//! Exterior calculus on forms and vector fields.
//!
//! Conventions: `(dx∧dy)(∂x, ∂y) = 1`, `ι_ξ ω = ω(ξ, ...)`, and the Lie
//! derivative is computed by Cartan's formula `£_ξ = d ι_ξ + ι_ξ d`.

use super::field::{basis, sort_with_sign, KForm, ScalarField, VectorField};
use crate::jet::Jet;

/// Non-fatal conditions raised by degree-changing operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DegreeWarning {
    /// The result degree exceeds the dimension, so the result is zero.
    AboveTopDegree { degree: usize, dim: usize },
    /// Contraction of a 0-form, which is zero by convention.
    BelowZeroDegree,
}

/// A result carrying an optional warning.
#[derive(Clone, Debug)]
pub struct Flagged<T> {
    pub value: T,
    pub warning: Option<DegreeWarning>,
}

impl<T> Flagged<T> {
    pub fn into_inner(self) -> T {
        self.value
    }
}

fn top_warning(degree: usize, dim: usize) -> Option<DegreeWarning> {
    (degree > dim).then_some(DegreeWarning::AboveTopDegree { degree, dim })
}

/// `dω`. For `k = d` the result is the zero `(d+1)`-form, flagged.
pub fn exterior_derivative(omega: &KForm) -> Flagged<KForm> {
    let dim = omega.dim();
    let k = omega.degree();
    let out_basis = basis(dim, k + 1);
    let in_basis = basis(dim, k);
    // For each output component, the (sign, axis, input component) terms.
    let plan: Vec<Vec<(f64, usize, usize)>> = out_basis
        .iter()
        .map(|idx| {
            (0..idx.len())
                .map(|r| {
                    let mut rest = idx.clone();
                    let axis = rest.remove(r);
                    let pos = in_basis.iter().position(|b| *b == rest).unwrap();
                    (if r % 2 == 0 { 1.0 } else { -1.0 }, axis, pos)
                })
                .collect()
        })
        .collect();
    let node = omega.node.clone();
    let value = KForm::from_fn(dim, k + 1, move |ctx, order| {
        let inner = node.eval(ctx, order + 1);
        plan.iter()
            .map(|terms| {
                let mut acc = Jet::zero(dim, order);
                for &(s, axis, pos) in terms {
                    acc.axpy(s, &inner[pos].differentiate(axis));
                }
                acc
            })
            .collect()
    });
    Flagged { value, warning: top_warning(k + 1, dim) }
}

/// `ι_ξ ω`. A 0-form contracts to the zero function, flagged.
pub fn interior_product(xi: &VectorField, omega: &KForm) -> Flagged<KForm> {
    let dim = omega.dim();
    assert_eq!(xi.dim(), dim);
    let k = omega.degree();
    if k == 0 {
        return Flagged { value: KForm::zero(dim, 0), warning: Some(DegreeWarning::BelowZeroDegree) };
    }
    let in_basis = basis(dim, k);
    let plan: Vec<Vec<(f64, usize, usize)>> = basis(dim, k - 1)
        .iter()
        .map(|idx| {
            (0..dim)
                .filter_map(|i| {
                    let mut full = vec![i];
                    full.extend_from_slice(idx);
                    let (s, sorted) = sort_with_sign(&full)?;
                    let pos = in_basis.iter().position(|b| *b == sorted).unwrap();
                    Some((s, i, pos))
                })
                .collect()
        })
        .collect();
    let xn = xi.node.clone();
    let wn = omega.node.clone();
    let value = KForm::from_fn(dim, k - 1, move |ctx, order| {
        let x = xn.eval(ctx, order);
        let w = wn.eval(ctx, order);
        plan.iter()
            .map(|terms| {
                let mut acc = Jet::zero(dim, order);
                for &(s, i, pos) in terms {
                    let t = &x[i] * &w[pos];
                    acc.axpy(s, &t);
                }
                acc
            })
            .collect()
    });
    Flagged { value, warning: None }
}

/// `£_ξ ω = d ι_ξ ω + ι_ξ dω`.
pub fn lie_derivative(xi: &VectorField, omega: &KForm) -> KForm {
    let b = interior_product(xi, &exterior_derivative(omega).value).value;
    if omega.degree() == 0 {
        b
    } else {
        exterior_derivative(&interior_product(xi, omega).value).value.add(&b)
    }
}

/// `ω ∧ σ`; degrees above the dimension give the zero form, flagged.
pub fn wedge(omega: &KForm, sigma: &KForm) -> Flagged<KForm> {
    let dim = omega.dim();
    assert_eq!(sigma.dim(), dim);
    let (j, k) = (omega.degree(), sigma.degree());
    let jb = basis(dim, j);
    let kb = basis(dim, k);
    let out = basis(dim, j + k);
    let mut plan: Vec<Vec<(f64, usize, usize)>> = vec![Vec::new(); out.len()];
    for (a, ia) in jb.iter().enumerate() {
        for (b, ib) in kb.iter().enumerate() {
            let mut full = ia.clone();
            full.extend_from_slice(ib);
            if let Some((s, sorted)) = sort_with_sign(&full) {
                let pos = out.iter().position(|o| *o == sorted).unwrap();
                plan[pos].push((s, a, b));
            }
        }
    }
    let on = omega.node.clone();
    let sn = sigma.node.clone();
    let value = KForm::from_fn(dim, j + k, move |ctx, order| {
        let w = on.eval(ctx, order);
        let s = sn.eval(ctx, order);
        plan.iter()
            .map(|terms| {
                let mut acc = Jet::zero(dim, order);
                for &(sg, a, b) in terms {
                    acc.axpy(sg, &(&w[a] * &s[b]));
                }
                acc
            })
            .collect()
    });
    Flagged { value, warning: top_warning(j + k, dim) }
}

/// `[ξ, η]^i = ξ^j ∂_j η^i - η^j ∂_j ξ^i`.
pub fn vector_bracket(xi: &VectorField, eta: &VectorField) -> VectorField {
    let dim = xi.dim();
    assert_eq!(eta.dim(), dim);
    let xn = xi.node.clone();
    let en = eta.node.clone();
    VectorField::from_fn(dim, move |ctx, order| {
        let x = xn.eval(ctx, order + 1);
        let e = en.eval(ctx, order + 1);
        (0..dim)
            .map(|i| {
                let mut acc = Jet::zero(dim, order);
                for j in 0..dim {
                    let xj = x[j].truncate(order);
                    let ej = e[j].truncate(order);
                    acc.add_product(&xj, &e[i].differentiate(j));
                    let t = &ej * &x[i].differentiate(j);
                    acc.axpy(-1.0, &t);
                }
                acc
            })
            .collect()
    })
}

/// `ξ(f) = ι_ξ df`.
pub fn apply_vector(xi: &VectorField, f: &ScalarField) -> ScalarField {
    interior_product(xi, &exterior_derivative(f).value).value
}

impl KForm {
    /// Exterior derivative, discarding the top-degree warning.
    pub fn d(&self) -> KForm {
        exterior_derivative(self).value
    }

    /// Interior product, discarding the degree-0 warning.
    pub fn interior(&self, xi: &VectorField) -> KForm {
        interior_product(xi, self).value
    }

    pub fn lie(&self, xi: &VectorField) -> KForm {
        lie_derivative(xi, self)
    }

    pub fn wedge(&self, other: &KForm) -> KForm {
        wedge(self, other).value
    }
}

impl VectorField {
    pub fn bracket(&self, other: &VectorField) -> VectorField {
        vector_bracket(self, other)
    }

    pub fn apply(&self, f: &ScalarField) -> ScalarField {
        apply_vector(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::field::{EvalCtx, Point};

    fn sinx(dim: usize, axis: usize) -> ScalarField {
        KForm::from_fn(dim, 0, move |ctx, order| vec![ctx.coords(order)[axis].scale(std::f64::consts::TAU).sin()])
    }

    #[test]
    fn d_of_function_is_gradient() {
        let f = sinx(2, 0).mul_fn(&sinx(2, 1));
        let p = Point::new(vec![0.1, 0.3]);
        let df = f.d().eval(&p);
        let tau = std::f64::consts::TAU;
        let (a, b) = (tau * 0.1, tau * 0.3);
        assert!((df[0] - tau * a.cos() * b.sin()).abs() < 1e-12);
        assert!((df[1] - tau * a.sin() * b.cos()).abs() < 1e-12);
    }

    #[test]
    fn d_squared_vanishes_in_three_dimensions() {
        let f = sinx(3, 0).mul_fn(&sinx(3, 1)).mul_fn(&sinx(3, 2));
        let p = Point::new(vec![0.2, 0.7, 0.45]);
        assert!(f.d().d().eval(&p).iter().all(|v| v.abs() < 1e-10));
        let ctx = EvalCtx::new(&p);
        let w2 = sinx(3, 0).mul_fn(&sinx(3, 2)).d().wedge(&sinx(3, 1).d());
        assert!(w2.d().max_abs(&ctx) < 1e-9);
    }

    #[test]
    fn top_degree_derivative_is_flagged() {
        let vol = KForm::constant(2, 2, vec![1.0]);
        let r = exterior_derivative(&vol);
        assert_eq!(r.warning, Some(DegreeWarning::AboveTopDegree { degree: 3, dim: 2 }));
        assert_eq!(r.value.n_components(), 0);
    }

    #[test]
    fn contraction_convention() {
        let vol = KForm::constant(2, 2, vec![1.0]);
        let p = Point::new(vec![0.0, 0.0]);
        assert_eq!(vol.interior(&VectorField::coordinate(2, 0)).eval(&p), vec![0.0, 1.0]);
        assert_eq!(vol.interior(&VectorField::coordinate(2, 1)).eval(&p), vec![-1.0, 0.0]);
    }

    #[test]
    fn contracting_a_function_is_flagged() {
        let r = interior_product(&VectorField::coordinate(2, 0), &sinx(2, 0));
        assert_eq!(r.warning, Some(DegreeWarning::BelowZeroDegree));
    }

    #[test]
    fn bracket_of_coordinate_fields() {
        // [∂x, sin(2πx) ∂y] = 2π cos(2πx) ∂y
        let xi = VectorField::coordinate(2, 0);
        let eta = VectorField::from_components(vec![KForm::zero(2, 0), sinx(2, 0)]);
        let b = xi.bracket(&eta).eval(&Point::new(vec![0.1, 0.5]));
        let tau = std::f64::consts::TAU;
        assert!(b[0].abs() < 1e-14);
        assert!((b[1] - tau * (tau * 0.1).cos()).abs() < 1e-12);
    }
}
