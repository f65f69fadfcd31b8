//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] of order `K` in `n` variables stores the Taylor coefficients
//! `c_m = ∂^m f(x0) / m!` for every multi-index `|m| <= K`. Arithmetic on jets
//! is exact polynomial arithmetic truncated at `K`, so every derivative up to
//! order `K` is carried without finite differences.
//!
//! Monomials are laid out in graded order and the layout does not depend on
//! `K`, so lowering the order is a prefix slice.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

/// Largest supported number of variables.
pub const MAX_VARS: usize = 4;
/// Largest supported truncation order.
pub const MAX_ORDER: usize = 9;

pub(crate) struct JetSpace {
    nvars: usize,
    exps: Vec<[u8; MAX_VARS]>,
    /// `len[k]` = number of monomials of degree `<= k`.
    len: Vec<usize>,
    /// `(a, b, c)` with `m_a + m_b = m_c`, sorted by `c`.
    mul_pairs: Vec<(u16, u16, u16)>,
    /// `mul_end[k]` = number of pairs whose product has degree `<= k`.
    mul_end: Vec<usize>,
    /// `raise[v][m]` = index of `m + e_v`, valid when `|m| < MAX_ORDER`.
    raise: Vec<Vec<u16>>,
    /// `axis[v][k]` = index of `k e_v`.
    axis: Vec<Vec<u16>>,
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

impl JetSpace {
    fn build(nvars: usize) -> JetSpace {
        let mut exps: Vec<[u8; MAX_VARS]> = Vec::new();
        let mut len = Vec::with_capacity(MAX_ORDER + 1);
        for deg in 0..=MAX_ORDER {
            let mut cur = [0u8; MAX_VARS];
            push_degree(nvars, 0, deg, &mut cur, &mut exps);
            len.push(exps.len());
        }
        let index_of = |e: &[u8; MAX_VARS]| -> usize {
            let d: usize = e.iter().map(|&x| x as usize).sum();
            let start = if d == 0 { 0 } else { len[d - 1] };
            start + exps[start..len[d]].iter().position(|x| x == e).expect("monomial")
        };
        let mut mul_pairs = Vec::new();
        for (a, ea) in exps.iter().enumerate() {
            let da: usize = ea.iter().map(|&x| x as usize).sum();
            for (b, eb) in exps.iter().enumerate() {
                let db: usize = eb.iter().map(|&x| x as usize).sum();
                if da + db > MAX_ORDER {
                    continue;
                }
                let mut ec = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    ec[v] = ea[v] + eb[v];
                }
                mul_pairs.push((a as u16, b as u16, index_of(&ec) as u16));
            }
        }
        mul_pairs.sort_by_key(|p| (p.2, p.0, p.1));
        let mul_end = (0..=MAX_ORDER)
            .map(|k| mul_pairs.partition_point(|p| (p.2 as usize) < len[k]))
            .collect();
        let mut raise = vec![vec![u16::MAX; exps.len()]; nvars];
        for (m, e) in exps.iter().enumerate() {
            let d: usize = e.iter().map(|&x| x as usize).sum();
            if d >= MAX_ORDER {
                continue;
            }
            for (v, row) in raise.iter_mut().enumerate() {
                let mut r = *e;
                r[v] += 1;
                row[m] = index_of(&r) as u16;
            }
        }
        let axis = (0..nvars)
            .map(|v| {
                (0..=MAX_ORDER)
                    .map(|k| {
                        let mut e = [0u8; MAX_VARS];
                        e[v] = k as u8;
                        index_of(&e) as u16
                    })
                    .collect()
            })
            .collect();
        JetSpace { nvars, exps, len, mul_pairs, mul_end, raise, axis }
    }

    fn size(&self, order: usize) -> usize {
        self.len[order]
    }
}

fn push_degree(nvars: usize, var: usize, rem: usize, cur: &mut [u8; MAX_VARS], out: &mut Vec<[u8; MAX_VARS]>) {
    if var + 1 == nvars {
        cur[var] = rem as u8;
        out.push(*cur);
        cur[var] = 0;
        return;
    }
    // Higher powers of earlier variables come first.
    for k in (0..=rem).rev() {
        cur[var] = k as u8;
        push_degree(nvars, var + 1, rem - k, cur, out);
    }
    cur[var] = 0;
}

fn space(nvars: usize) -> &'static JetSpace {
    static SPACES: OnceLock<Vec<JetSpace>> = OnceLock::new();
    assert!((1..=MAX_VARS).contains(&nvars), "jets support 1..={MAX_VARS} variables, got {nvars}");
    &SPACES.get_or_init(|| (1..=MAX_VARS).map(JetSpace::build).collect())[nvars - 1]
}

/// Number of monomials of degree `<= order` in `nvars` variables.
pub fn jet_len(nvars: usize, order: usize) -> usize {
    binom(nvars + order, order)
}

/// A truncated Taylor expansion around some base point.
#[derive(Clone)]
pub struct Jet {
    space: &'static JetSpace,
    order: usize,
    c: Vec<f64>,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.space.nvars)
            .field("order", &self.order)
            .field("coeffs", &self.c)
            .finish()
    }
}

impl Jet {
    /// The constant jet `v`.
    pub fn constant(nvars: usize, order: usize, v: f64) -> Jet {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let s = space(nvars);
        let mut c = vec![0.0; s.size(order)];
        c[0] = v;
        Jet { space: s, order, c }
    }

    /// The zero jet.
    pub fn zero(nvars: usize, order: usize) -> Jet {
        Jet::constant(nvars, order, 0.0)
    }

    /// The coordinate function `x_var` expanded around `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Jet {
        assert!(var < nvars);
        let mut j = Jet::constant(nvars, order, value);
        if order >= 1 {
            j.c[1 + var] = 1.0;
        }
        j
    }

    /// Builds a jet from raw Taylor coefficients in graded order.
    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<f64>) -> Jet {
        let s = space(nvars);
        assert_eq!(coeffs.len(), s.size(order), "coefficient count does not match order");
        Jet { space: s, order, c: coeffs }
    }

    /// Embeds a univariate series `Σ series[k] h_axis^k`.
    pub fn from_axis_series(nvars: usize, order: usize, axis: usize, series: &[f64]) -> Jet {
        let mut j = Jet::zero(nvars, order);
        let tab = &j.space.axis[axis];
        for (k, &v) in series.iter().enumerate().take(order + 1) {
            j.c[tab[k] as usize] = v;
        }
        j
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.c
    }

    /// Exponent vector of the monomial stored at `idx`.
    pub fn exponent(&self, idx: usize) -> &[u8] {
        &self.space.exps[idx][..self.space.nvars]
    }

    /// Value at the base point.
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// First partial derivative at the base point.
    pub fn partial(&self, var: usize) -> f64 {
        if self.order == 0 {
            panic!("first derivative requested from an order-0 jet");
        }
        self.c[1 + var]
    }

    /// Taylor coefficient of the monomial with the given exponents.
    pub fn coeff(&self, exps: &[usize]) -> f64 {
        let deg: usize = exps.iter().sum();
        if deg > self.order {
            return 0.0;
        }
        let mut e = [0u8; MAX_VARS];
        for (v, &k) in exps.iter().enumerate() {
            e[v] = k as u8;
        }
        let start = if deg == 0 { 0 } else { self.space.len[deg - 1] };
        let pos = self.space.exps[start..self.space.len[deg]].iter().position(|x| *x == e).unwrap();
        self.c[start + pos]
    }

    /// Mixed partial derivative `∂^exps f` at the base point.
    pub fn derivative_value(&self, exps: &[usize]) -> f64 {
        let fact: f64 = exps.iter().map(|&k| (1..=k).product::<usize>() as f64).product();
        self.coeff(exps) * fact
    }

    /// Lowers the truncation order.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order, "cannot raise jet order by truncation");
        Jet { space: self.space, order, c: self.c[..self.space.size(order)].to_vec() }
    }

    /// Raises the truncation order, filling the new coefficients with zero.
    pub fn pad(&self, order: usize) -> Jet {
        assert!(order >= self.order && order <= MAX_ORDER);
        let mut c = self.c.clone();
        c.resize(self.space.size(order), 0.0);
        Jet { space: self.space, order, c }
    }

    /// Partial derivative jet, one order lower.
    pub fn differentiate(&self, var: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let s = self.space;
        let n = s.size(self.order - 1);
        let raise = &s.raise[var];
        let c = (0..n)
            .map(|m| {
                let r = raise[m] as usize;
                (s.exps[m][var] as f64 + 1.0) * self.c[r]
            })
            .collect();
        Jet { space: s, order: self.order - 1, c }
    }

    fn common_order(&self, other: &Jet) -> usize {
        assert_eq!(self.space.nvars, other.space.nvars, "jets over different variable counts");
        self.order.min(other.order)
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet { space: self.space, order: self.order, c: self.c.iter().map(|x| x * k).collect() }
    }

    /// `self += k * other`, truncating `self` if `other` has lower order.
    pub fn axpy(&mut self, k: f64, other: &Jet) {
        let o = self.common_order(other);
        if o < self.order {
            *self = self.truncate(o);
        }
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += k * b;
        }
    }

    /// `self += a * b`.
    pub fn add_product(&mut self, a: &Jet, b: &Jet) {
        let o = self.common_order(a).min(a.common_order(b));
        if o < self.order {
            *self = self.truncate(o);
        }
        let s = self.space;
        for &(i, j, k) in &s.mul_pairs[..s.mul_end[o]] {
            self.c[k as usize] += a.c[i as usize] * b.c[j as usize];
        }
    }

    /// Composition `g(self)` where `taylor[k] = g^(k)(a) / k!` and `a = self.value()`.
    pub fn compose_univariate(&self, taylor: &[f64]) -> Jet {
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut out = Jet::constant(self.nvars(), self.order, taylor[0]);
        let mut pw = Jet::constant(self.nvars(), self.order, 1.0);
        for &t in taylor.iter().take(self.order + 1).skip(1) {
            pw = &pw * &h;
            out.axpy(t, &pw);
        }
        out
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cyc = [s, c, -s, -c];
        self.compose_univariate(&taylor_from_derivs(self.order, |k| cyc[k % 4]))
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cyc = [c, -s, -c, s];
        self.compose_univariate(&taylor_from_derivs(self.order, |k| cyc[k % 4]))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose_univariate(&taylor_from_derivs(self.order, |_| e))
    }

    /// `1 / self`.
    pub fn recip(&self) -> Jet {
        let a = self.value();
        // 1/(a+h) = Σ (-1)^k h^k / a^(k+1)
        let t: Vec<f64> = (0..=self.order).map(|k| (-1f64).powi(k as i32) / a.powi(k as i32 + 1)).collect();
        self.compose_univariate(&t)
    }

    /// Polynomial substitution: `self` is a jet in `n` variables about `y0`,
    /// `inner[i]` are jets (in any variable count) with `inner[i].value() == y0_i`
    /// up to the caller's responsibility. The result is `self ∘ inner`.
    pub fn compose(&self, inner: &[Jet]) -> Jet {
        assert_eq!(inner.len(), self.nvars(), "composition arity mismatch");
        let m = inner[0].nvars();
        let order = inner.iter().map(|j| j.order).min().unwrap().min(MAX_ORDER);
        let ord = order.min(self.order);
        // powers[v][p] = (inner_v - inner_v(0))^p
        let mut powers: Vec<Vec<Jet>> = Vec::with_capacity(inner.len());
        for j in inner {
            let mut h = j.truncate(order);
            h.c[0] = 0.0;
            let mut row = vec![Jet::constant(m, order, 1.0)];
            for p in 1..=ord {
                let next = &row[p - 1] * &h;
                row.push(next);
            }
            powers.push(row);
        }
        let mut out = Jet::zero(m, order);
        let s = self.space;
        for idx in 0..s.size(ord) {
            let coef = self.c[idx];
            if coef == 0.0 {
                continue;
            }
            let e = &s.exps[idx];
            let mut term: Option<Jet> = None;
            for v in 0..s.nvars {
                let p = e[v] as usize;
                if p == 0 {
                    continue;
                }
                term = Some(match term {
                    None => powers[v][p].clone(),
                    Some(t) => &t * &powers[v][p],
                });
            }
            match term {
                None => out.c[0] += coef,
                Some(t) => out.axpy(coef, &t),
            }
        }
        out
    }

    /// Restriction to the hyperplane where the variables `keep..` vanish
    /// (relative to the base point), as a jet in the first `keep` variables.
    pub fn restrict_leading(&self, keep: usize) -> Jet {
        let mut out = Jet::zero(keep, self.order);
        let s = self.space;
        let t = out.space;
        let mut j = 0;
        for (idx, e) in s.exps[..s.size(self.order)].iter().enumerate() {
            if e[keep..].iter().any(|&k| k != 0) {
                continue;
            }
            // Graded orders agree on the retained monomials.
            while t.exps[j][..keep] != e[..keep] {
                j += 1;
            }
            out.c[j] = self.c[idx];
        }
        out
    }

    /// Re-expresses a jet in `nvars >= self.nvars()` variables, mapping
    /// variable `v` to `map[v]`.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Jet {
        let inner: Vec<Jet> = map
            .iter()
            .map(|&v| Jet::variable(nvars, self.order, v, 0.0))
            .collect();
        let mut me = self.clone();
        let base = me.c[0];
        me.c[0] = 0.0;
        let mut out = me.compose(&inner);
        out.c[0] += base;
        out
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

fn taylor_from_derivs(order: usize, deriv: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut fact = 1.0;
    (0..=order)
        .map(|k| {
            if k > 0 {
                fact *= k as f64;
            }
            deriv(k) / fact
        })
        .collect()
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let o = self.common_order(rhs);
        let n = self.space.size(o);
        let c = self.c[..n].iter().zip(&rhs.c[..n]).map(|(a, b)| a + b).collect();
        Jet { space: self.space, order: o, c }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let o = self.common_order(rhs);
        let n = self.space.size(o);
        let c = self.c[..n].iter().zip(&rhs.c[..n]).map(|(a, b)| a - b).collect();
        Jet { space: self.space, order: o, c }
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let o = self.common_order(rhs);
        let mut out = Jet::zero(self.nvars(), o);
        let s = self.space;
        for &(i, j, k) in &s.mul_pairs[..s.mul_end[o]] {
            out.c[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        out
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! owned_ops {
    ($tr:ident, $f:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $f(self, rhs: Jet) -> Jet {
                (&self).$f(&rhs)
            }
        }
        impl<'a> $tr<&'a Jet> for Jet {
            type Output = Jet;
            fn $f(self, rhs: &Jet) -> Jet {
                (&self).$f(rhs)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        self.axpy(-1.0, rhs);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn layout_sizes_match_binomials() {
        for n in 1..=MAX_VARS {
            for k in 0..=MAX_ORDER {
                assert_eq!(space(n).size(k), jet_len(n, k));
            }
        }
    }

    #[test]
    fn product_rule_second_order() {
        // f = x^2 y at (2, 3)
        let x = Jet::variable(2, 3, 0, 2.0);
        let y = Jet::variable(2, 3, 1, 3.0);
        let f = &(&x * &x) * &y;
        assert!(close(f.value(), 12.0));
        assert!(close(f.derivative_value(&[1, 0]), 12.0));
        assert!(close(f.derivative_value(&[0, 1]), 4.0));
        assert!(close(f.derivative_value(&[2, 0]), 6.0));
        assert!(close(f.derivative_value(&[1, 1]), 4.0));
        assert!(close(f.derivative_value(&[2, 1]), 2.0));
        assert!(close(f.derivative_value(&[0, 2]), 0.0));
    }

    #[test]
    fn sin_exp_recip_against_closed_forms() {
        let a = 0.37;
        let x = Jet::variable(1, 5, 0, a);
        let s = x.sin();
        let e = (&x * &x).exp();
        let r = x.recip();
        for k in 0..=5 {
            let sk = [a.sin(), a.cos(), -a.sin(), -a.cos()][k % 4];
            assert!(close(s.derivative_value(&[k]), sk));
            let rk = (-1f64).powi(k as i32) * (1..=k).product::<usize>() as f64 / a.powi(k as i32 + 1);
            assert!(close(r.derivative_value(&[k]), rk));
        }
        // d²/dx² exp(x²) = (2 + 4x²) exp(x²)
        assert!(close(e.derivative_value(&[2]), (2.0 + 4.0 * a * a) * (a * a).exp()));
    }

    #[test]
    fn differentiate_lowers_order() {
        let x = Jet::variable(2, 4, 0, 0.5);
        let y = Jet::variable(2, 4, 1, -1.0);
        let f = (&x * &y).sin();
        let fx = f.differentiate(0);
        assert_eq!(fx.order(), 3);
        // ∂x sin(xy) = y cos(xy)
        assert!(close(fx.value(), -(-0.5f64).cos()));
        let fxy = fx.differentiate(1);
        // ∂y (y cos(xy)) = cos(xy) - xy sin(xy)
        assert!(close(fxy.value(), (-0.5f64).cos() + 0.5 * (-0.5f64).sin()));
    }

    #[test]
    fn restriction_and_embedding() {
        let x = Jet::variable(2, 3, 0, 0.2);
        let t = Jet::variable(2, 3, 1, 0.0);
        let f = (&x + &t).sin();
        let r = f.restrict_leading(1);
        let direct = Jet::variable(1, 3, 0, 0.2).sin();
        for (a, b) in r.coeffs().iter().zip(direct.coeffs()) {
            assert!(close(*a, *b));
        }
        let e = direct.embed(3, &[2]);
        assert!(close(e.coeff(&[0, 0, 2]), direct.coeff(&[2])));
        assert!(close(e.coeff(&[1, 0, 1]), 0.0));
    }

    #[test]
    fn compose_matches_direct_evaluation() {
        // g(u, v) = u v^2 about (1, 2); u = cos t, v = 2 + t about t = 0
        let u = Jet::variable(2, 4, 0, 1.0);
        let v = Jet::variable(2, 4, 1, 2.0);
        let g = &u * &(&v * &v);
        let t = Jet::variable(1, 4, 0, 0.0);
        let inner = [t.cos(), &t + &Jet::constant(1, 4, 2.0)];
        let direct = &inner[0] * &(&inner[1] * &inner[1]);
        let comp = g.compose(&inner);
        for k in 0..=4 {
            assert!(close(comp.coeff(&[k]), direct.coeff(&[k])));
        }
    }
}
