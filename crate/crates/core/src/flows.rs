//! Local flows and the correspondence between 1-parameter families of
//! symmetries and their infinitesimal generators.
//!
//! Functions on the simplicial domains `U^k = {(x, t_1..t_k)}` are
//! evaluators on jets, so time and space derivatives come from the same
//! code that computes values. Flows are integrated with classical RK4 on
//! jets; integrals along trajectories use composite 5-point Gauss-Legendre
//! quadrature on each step, with the state at the nodes taken from the
//! cubic Hermite interpolant of the RK4 solution.

use std::sync::Arc;

use rand::Rng;

use crate::error::FlowError;
use crate::geometry::{KForm, VectorField};
use crate::jet::Jet;

type Res<T> = Result<T, FlowError>;

/// A function on `U^0`.
pub type U0Fn = Arc<dyn Fn(&[Jet]) -> Res<Jet> + Send + Sync>;
/// A function on `U^1`.
pub type U1Fn = Arc<dyn Fn(&[Jet], &Jet) -> Res<Jet> + Send + Sync>;
/// A function on `U^2`.
pub type U2Fn = Arc<dyn Fn(&[Jet], &Jet, &Jet) -> Res<Jet> + Send + Sync>;
/// A 1-form on `U^0`, as its components.
pub type U0Form = Arc<dyn Fn(&[Jet]) -> Res<Vec<Jet>> + Send + Sync>;
/// A relative 1-form on `U^1`: covector components at `x` for each `t`.
pub type U1Form = Arc<dyn Fn(&[Jet], &Jet) -> Res<Vec<Jet>> + Send + Sync>;

/// Receives the interpolated state, node time and weight at each quadrature node.
type NodeVisitor<'a> = &'a mut dyn FnMut(&[Jet], &Jet, &Jet) -> Res<()>;
/// A vector-valued integrand of state and time.
pub type Integrand<'a> = &'a dyn Fn(&[Jet], &Jet) -> Res<Vec<Jet>>;

/// Half-width of the chart box around the domain center in which
/// trajectories must stay.
pub const CHART_HALF_WIDTH: f64 = 0.45;
pub const DEFAULT_EPS: f64 = 0.2;
pub const DEFAULT_STEP: f64 = 1e-3;

// 5-point Gauss-Legendre on [0, 1].
const GL_NODES: [f64; 5] = [
    0.046_910_077_030_668_004,
    0.230_765_344_947_158_45,
    0.5,
    0.769_234_655_052_841_6,
    0.953_089_922_969_332,
];
const GL_WEIGHTS: [f64; 5] = [
    0.118_463_442_528_094_54,
    0.239_314_335_249_683_23,
    0.284_444_444_444_444_45,
    0.239_314_335_249_683_23,
    0.118_463_442_528_094_54,
];

/// An axis-aligned box in lifted coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    pub center: Vec<f64>,
    pub half_width: f64,
}

impl BoxDomain {
    pub fn new(center: Vec<f64>, half_width: f64) -> BoxDomain {
        BoxDomain { center, half_width }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.center).all(|(a, c)| (a - c).abs() <= self.half_width)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.center.iter().map(|c| c + rng.gen_range(-self.half_width..self.half_width)).collect()
    }
}

/// The flow `φ_t` of a vector field on a box, for `|t| ≤ ε`.
#[derive(Clone, Debug)]
pub struct LocalFlow {
    pub xi: VectorField,
    pub domain: BoxDomain,
    pub eps: f64,
    pub h_step: f64,
}

/// Sets up the flow of `ξ` on `domain`.
pub fn integrate_flow(xi: &VectorField, domain: BoxDomain, eps: f64, h_step: f64) -> Res<LocalFlow> {
    if !(h_step > 0.0) {
        return Err(FlowError::BadStep(h_step));
    }
    if !(eps > 0.0) {
        return Err(FlowError::BadHorizon(eps));
    }
    if domain.dim() != xi.dim() {
        return Err(FlowError::BadDomain(format!("domain has dimension {}, field {}", domain.dim(), xi.dim())));
    }
    if !(domain.half_width > 0.0 && domain.half_width < CHART_HALF_WIDTH) {
        return Err(FlowError::BadDomain(format!("half-width {} must lie in (0, {CHART_HALF_WIDTH})", domain.half_width)));
    }
    Ok(LocalFlow { xi: xi.clone(), domain, eps, h_step })
}

fn consts(x: &[f64]) -> Vec<Jet> {
    x.iter().map(|&v| Jet::constant(1, 0, v)).collect()
}

fn values(x: &[Jet]) -> Vec<f64> {
    x.iter().map(Jet::value).collect()
}

fn lin(terms: &[(f64, &Jet)]) -> Jet {
    let mut acc = terms[0].1.scale(terms[0].0);
    for (k, j) in &terms[1..] {
        acc.axpy(*k, j);
    }
    acc
}

/// `y + c·dt·k`, componentwise.
fn step_state(y: &[Jet], dt: &Jet, c: f64, k: &[Jet]) -> Vec<Jet> {
    y.iter().zip(k).map(|(yi, ki)| lin(&[(1.0, yi), (c, &(dt * ki))])).collect()
}

/// Extra variables appended to the jets of a point.
struct Augmented {
    /// Number of leading variables carried over from the input.
    keep: usize,
    nvars_in: usize,
    order: usize,
    x: Vec<Jet>,
    extra: Vec<Jet>,
}

/// Re-expresses `x` (and `others`) in a space with `extra` new variables
/// at one order higher. Order-0 inputs are treated as plain numbers.
fn augment(x: &[Jet], others: &[&Jet], extra: usize) -> Augmented {
    let nvars_in = x[0].nvars();
    let order = x.iter().chain(others.iter().copied()).map(Jet::order).min().unwrap();
    let keep = if order == 0 { 0 } else { nvars_in };
    let n = keep + extra;
    let map: Vec<usize> = (0..keep).collect();
    let lift = |j: &Jet| -> Jet {
        if keep == 0 {
            Jet::constant(n, order + 1, j.value())
        } else {
            j.truncate(order).embed(n, &map).pad(order + 1)
        }
    };
    let xs: Vec<Jet> = x.iter().map(lift).collect();
    let extra_jets: Vec<Jet> = others.iter().map(|j| lift(j)).collect();
    Augmented { keep, nvars_in, order, x: xs, extra: extra_jets }
}

impl Augmented {
    fn n(&self) -> usize {
        self.x.first().map(Jet::nvars).unwrap_or(self.keep)
    }

    /// The new variable number `k` (counted from zero past the kept ones).
    fn var(&self, k: usize) -> Jet {
        Jet::variable(self.n(), self.order + 1, self.keep + k, 0.0)
    }

    /// Derivative along new variable `k`, restricted back to the input space.
    fn derivative(&self, j: &Jet, k: usize) -> Jet {
        let d = j.differentiate(self.keep + k);
        self.restrict(&d)
    }

    fn restrict(&self, j: &Jet) -> Jet {
        if self.keep == 0 {
            Jet::constant(self.nvars_in, 0, j.value())
        } else {
            j.restrict_leading(self.keep).truncate(self.order)
        }
    }
}

impl LocalFlow {
    pub fn dim(&self) -> usize {
        self.xi.dim()
    }

    fn check_horizon(&self, t: f64) -> Res<()> {
        if t.abs() > self.eps * (1.0 + 1e-12) {
            return Err(FlowError::BeyondHorizon { t, eps: self.eps });
        }
        Ok(())
    }

    fn check_chart(&self, y: &[Jet], start: &[Jet], t: f64) -> Res<()> {
        let inside = y.iter().zip(&self.domain.center).all(|(v, c)| (v.value() - c).abs() <= CHART_HALF_WIDTH);
        if !inside {
            return Err(FlowError::LeftChart { start: values(start), t });
        }
        Ok(())
    }

    fn steps(&self, t: f64) -> usize {
        ((t.abs() / self.h_step) - 1e-9).ceil().max(1.0) as usize
    }

    /// RK4 to time `t`. When `visit` is given it is called at every
    /// quadrature node with the interpolated state, the node time and the
    /// quadrature weight.
    fn run(
        &self,
        x: &[Jet],
        t: &Jet,
        mut visit: Option<NodeVisitor>,
    ) -> Res<Vec<Jet>> {
        self.check_horizon(t.value())?;
        let n = self.steps(t.value());
        let dt = t.scale(1.0 / n as f64);
        let mut y = x.to_vec();
        let mut fy = self.xi.eval_at_jets(&y);
        for m in 0..n {
            let now = dt.value() * m as f64;
            let k1 = &fy;
            let y2 = step_state(&y, &dt, 0.5, k1);
            self.check_chart(&y2, x, now)?;
            let k2 = self.xi.eval_at_jets(&y2);
            let y3 = step_state(&y, &dt, 0.5, &k2);
            self.check_chart(&y3, x, now)?;
            let k3 = self.xi.eval_at_jets(&y3);
            let y4 = step_state(&y, &dt, 1.0, &k3);
            self.check_chart(&y4, x, now)?;
            let k4 = self.xi.eval_at_jets(&y4);
            let ynew: Vec<Jet> = (0..y.len())
                .map(|i| {
                    let incr = lin(&[(1.0, &k1[i]), (2.0, &k2[i]), (2.0, &k3[i]), (1.0, &k4[i])]);
                    lin(&[(1.0, &y[i]), (1.0 / 6.0, &(&dt * &incr))])
                })
                .collect();
            self.check_chart(&ynew, x, now + dt.value())?;
            let fnew = self.xi.eval_at_jets(&ynew);
            if let Some(v) = visit.as_mut() {
                for (&th, &w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
                    let h00 = 2.0 * th * th * th - 3.0 * th * th + 1.0;
                    let h10 = th * th * th - 2.0 * th * th + th;
                    let h01 = -2.0 * th * th * th + 3.0 * th * th;
                    let h11 = th * th * th - th * th;
                    let yt: Vec<Jet> = (0..y.len())
                        .map(|i| {
                            let a = &dt * &fy[i];
                            let b = &dt * &fnew[i];
                            lin(&[(h00, &y[i]), (h10, &a), (h01, &ynew[i]), (h11, &b)])
                        })
                        .collect();
                    let s = dt.scale(m as f64 + th);
                    let weight = dt.scale(w);
                    v(&yt, &s, &weight)?;
                }
            }
            y = ynew;
            fy = fnew;
        }
        Ok(y)
    }

    /// `φ_t(x)` on jets.
    pub fn phi(&self, x: &[Jet], t: &Jet) -> Res<Vec<Jet>> {
        self.run(x, t, None)
    }

    /// `φ_t(x)` at a plain point.
    pub fn phi_point(&self, x: &[f64], t: f64) -> Res<Vec<f64>> {
        Ok(values(&self.phi(&consts(x), &Jet::constant(1, 0, t))?))
    }

    /// `∫_0^t g(φ_s(x), s) ds`, componentwise.
    pub fn integrate_along(
        &self,
        x: &[Jet],
        t: &Jet,
        g: Integrand,
    ) -> Res<Vec<Jet>> {
        let mut acc: Option<Vec<Jet>> = None;
        let mut visit = |y: &[Jet], s: &Jet, w: &Jet| -> Res<()> {
            let v = g(y, s)?;
            match acc.as_mut() {
                None => acc = Some(v.iter().map(|c| w * c).collect()),
                Some(a) => {
                    for (ai, vi) in a.iter_mut().zip(&v) {
                        ai.add_product(w, vi);
                    }
                }
            }
            Ok(())
        };
        self.run(x, t, Some(&mut visit))?;
        Ok(acc.expect("at least one quadrature step"))
    }

    /// `φ_t^* ω` at `x` for a covector field `ω` given at the image point:
    /// `Σ_j ω_j(φ_t x) ∂_i φ_t^j(x)`.
    pub fn pullback(&self, x: &[Jet], t: &Jet, omega: &dyn Fn(&[Jet]) -> Res<Vec<Jet>>) -> Res<Vec<Jet>> {
        let d = self.dim();
        let mut aug = augment(x, &[t], d);
        for i in 0..d {
            let z = aug.var(i);
            aug.x[i] = &aug.x[i] + &z;
        }
        let y = self.phi(&aug.x, &aug.extra[0])?;
        let yr: Vec<Jet> = y.iter().map(|j| aug.restrict(j)).collect();
        let w = omega(&yr)?;
        Ok((0..d)
            .map(|i| {
                let mut acc = w[0].scale(0.0);
                for (j, wj) in w.iter().enumerate() {
                    acc.add_product(wj, &aug.derivative(&y[j], i));
                }
                acc
            })
            .collect())
    }

    /// Largest `|φ_t(φ_t'(x)) - φ_{t+t'}(x)|` over the given samples.
    pub fn group_law_residual(&self, samples: &[(Vec<f64>, f64, f64)]) -> Res<f64> {
        let mut m = 0.0f64;
        for (x, t, t2) in samples {
            let a = self.phi_point(&self.phi_point(x, *t2)?, *t)?;
            let b = self.phi_point(x, t + t2)?;
            m = a.iter().zip(&b).fold(m, |m, (p, q)| m.max((p - q).abs()));
        }
        Ok(m)
    }

    /// Largest `|d/dt φ_t(x) - ξ(φ_t(x))|`.
    pub fn velocity_residual(&self, samples: &[(Vec<f64>, f64)]) -> Res<f64> {
        let mut m = 0.0f64;
        for (x, t) in samples {
            let xs: Vec<Jet> = x.iter().map(|&v| Jet::constant(1, 1, v)).collect();
            let y = self.phi(&xs, &Jet::variable(1, 1, 0, *t))?;
            let v = self.xi.eval(&crate::geometry::Point::new(values(&y)));
            for (yi, vi) in y.iter().zip(&v) {
                m = m.max((yi.partial(0) - vi).abs());
            }
        }
        Ok(m)
    }

    /// Random `(x, t_1, ..., t_k)` with `x ∈ V` and `Σ|t_i| ≤ 0.9 ε`.
    pub fn sample_u(&self, k: usize, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
        let x = self.domain.sample(rng);
        let budget = 0.9 * self.eps;
        let mut ts: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let total: f64 = ts.iter().map(|t| t.abs()).sum::<f64>().max(1.0);
        let scale = budget * rng.gen_range(0.0..1.0) / total;
        for t in &mut ts {
            *t *= scale;
        }
        (x, ts)
    }
}

/// A function on `U^1` representing `g = e^f` with `f(x, 0) = 0` and
/// `f(φ_t x, t') - f(x, t + t') + f(x, t) = 0`.
#[derive(Clone)]
pub struct FlowCocycle {
    pub f: U1Fn,
}

/// `f` on `U^2` with `f(x,t,0) = f(x,0,t) = 0` and `δf = 0`.
#[derive(Clone)]
pub struct TwoCochainLiftData {
    pub f: U2Fn,
}

/// A relative 1-form `A` with `A(·, 0) = 0` and
/// `φ_t^* A_{φ_t x}(t') - A_x(t + t') + A_x(t) = 0`.
#[derive(Clone)]
pub struct RelFormCocycle {
    pub a: U1Form,
}

/// Evaluates a `U^1` function at a plain point.
pub fn eval_u1(f: &U1Fn, x: &[f64], t: f64) -> Res<f64> {
    Ok(f(&consts(x), &Jet::constant(1, 0, t))?.value())
}

/// Evaluates a `U^2` function at a plain point.
pub fn eval_u2(f: &U2Fn, x: &[f64], t: f64, t2: f64) -> Res<f64> {
    Ok(f(&consts(x), &Jet::constant(1, 0, t), &Jet::constant(1, 0, t2))?.value())
}

/// Evaluates a `U^0` function at a plain point.
pub fn eval_u0(f: &U0Fn, x: &[f64]) -> Res<f64> {
    Ok(f(&consts(x))?.value())
}

/// Evaluates a 1-form on `U^0` at a plain point.
pub fn eval_form0(a: &U0Form, x: &[f64]) -> Res<Vec<f64>> {
    Ok(values(&a(&consts(x))?))
}

/// Evaluates a relative 1-form at a plain point.
pub fn eval_form1(a: &U1Form, x: &[f64], t: f64) -> Res<Vec<f64>> {
    Ok(values(&a(&consts(x), &Jet::constant(1, 0, t))?))
}

impl FlowCocycle {
    /// Largest `|δf|` and `|f(x, 0)|` over the samples `(x, t, t')`.
    pub fn cocycle_residual(&self, flow: &LocalFlow, samples: &[(Vec<f64>, f64, f64)]) -> Res<f64> {
        let mut m = 0.0f64;
        for (x, t, t2) in samples {
            let y = flow.phi_point(x, *t)?;
            let r = eval_u1(&self.f, &y, *t2)? - eval_u1(&self.f, x, t + t2)? + eval_u1(&self.f, x, *t)?;
            m = m.max(r.abs()).max(eval_u1(&self.f, x, 0.0)?.abs());
        }
        Ok(m)
    }
}

impl TwoCochainLiftData {
    /// Largest `|δf|` on `U^3` and `|f(x,t,0)|`, `|f(x,0,t)|` over the
    /// samples `(x, t1, t2, t3)`.
    pub fn cocycle_residual(&self, flow: &LocalFlow, samples: &[(Vec<f64>, f64, f64, f64)]) -> Res<f64> {
        let mut m = 0.0f64;
        let f = &self.f;
        for (x, t1, t2, t3) in samples {
            let y = flow.phi_point(x, *t1)?;
            let r = eval_u2(f, &y, *t2, *t3)? - eval_u2(f, x, t1 + t2, *t3)? + eval_u2(f, x, *t1, t2 + t3)?
                - eval_u2(f, x, *t1, *t2)?;
            m = m.max(r.abs()).max(eval_u2(f, x, *t1, 0.0)?.abs()).max(eval_u2(f, x, 0.0, *t1)?.abs());
        }
        Ok(m)
    }
}

impl RelFormCocycle {
    /// Largest violation of the cocycle relation and of `A(·, 0) = 0`.
    pub fn cocycle_residual(&self, flow: &LocalFlow, samples: &[(Vec<f64>, f64, f64)]) -> Res<f64> {
        let mut m = 0.0f64;
        for (x, t, t2) in samples {
            let a = self.a.clone();
            let tt = *t2;
            let pulled = flow.pullback(&consts(x), &Jet::constant(1, 0, *t), &move |y| {
                a(y, &Jet::constant(y[0].nvars(), y[0].order(), tt))
            })?;
            let b = eval_form1(&self.a, x, t + t2)?;
            let c = eval_form1(&self.a, x, *t)?;
            let z = eval_form1(&self.a, x, 0.0)?;
            for i in 0..x.len() {
                m = m.max((pulled[i].value() - b[i] + c[i]).abs()).max(z[i].abs());
            }
        }
        Ok(m)
    }
}

/// A scalar field as a function on `U^0`.
pub fn scalar_fn(f: &KForm) -> U0Fn {
    assert_eq!(f.degree(), 0);
    let f = f.clone();
    Arc::new(move |x: &[Jet]| Ok(f.eval_at_jets(x).remove(0)))
}

/// A 1-form as a form on `U^0`.
pub fn form_fn(w: &KForm) -> U0Form {
    assert_eq!(w.degree(), 1);
    let w = w.clone();
    Arc::new(move |x: &[Jet]| Ok(w.eval_at_jets(x)))
}

/// `h_0(x) = ∂f/∂t (x, 0)`.
pub fn differentiate_t(g: &FlowCocycle) -> U0Fn {
    let f = g.f.clone();
    Arc::new(move |x: &[Jet]| {
        let aug = augment(x, &[], 1);
        let t = aug.var(0);
        let v = f(&aug.x, &t)?;
        Ok(aug.derivative(&v, 0))
    })
}

/// `f(x, t) = ∫_0^t h_0(φ_s x) ds`.
pub fn integrate_t(h0: &U0Fn, flow: &LocalFlow) -> FlowCocycle {
    let h0 = h0.clone();
    let flow = flow.clone();
    FlowCocycle {
        f: Arc::new(move |x: &[Jet], t: &Jet| {
            let v = flow.integrate_along(x, t, &|y, _| Ok(vec![h0(y)?]))?;
            Ok(v.into_iter().next().unwrap())
        }),
    }
}

/// `α_x = ∂/∂s A_x(s)` at `s = 0`.
pub fn differentiate_form(a: &RelFormCocycle) -> U0Form {
    let a = a.a.clone();
    Arc::new(move |x: &[Jet]| {
        let aug = augment(x, &[], 1);
        let s = aug.var(0);
        let v = a(&aug.x, &s)?;
        Ok(v.iter().map(|c| aug.derivative(c, 0)).collect())
    })
}

/// `A_x(t) = ∫_0^t (φ_s^* α)_x ds`.
pub fn integrate_form(alpha: &U0Form, flow: &LocalFlow) -> RelFormCocycle {
    let alpha = alpha.clone();
    let flow = flow.clone();
    RelFormCocycle {
        a: Arc::new(move |x: &[Jet], t: &Jet| {
            let d = flow.dim();
            let mut aug = augment(x, &[t], d);
            for i in 0..d {
                let z = aug.var(i);
                aug.x[i] = &aug.x[i] + &z;
            }
            let tt = aug.extra[0].clone();
            let mut acc: Option<Vec<Jet>> = None;
            let mut visit = |y: &[Jet], _s: &Jet, w: &Jet| -> Res<()> {
                let yr: Vec<Jet> = y.iter().map(|j| aug.restrict(j)).collect();
                let al = alpha(&yr)?;
                let wr = aug.restrict(w);
                let comps: Vec<Jet> = (0..d)
                    .map(|i| {
                        let mut c = al[0].scale(0.0);
                        for (j, aj) in al.iter().enumerate() {
                            c.add_product(aj, &aug.derivative(&y[j], i));
                        }
                        &c * &wr
                    })
                    .collect();
                match acc.as_mut() {
                    None => acc = Some(comps),
                    Some(a) => {
                        for (ai, ci) in a.iter_mut().zip(&comps) {
                            *ai += ci;
                        }
                    }
                }
                Ok(())
            };
            flow.run(&aug.x, &tt, Some(&mut visit))?;
            Ok(acc.expect("at least one quadrature step"))
        }),
    }
}

/// `h(x, t) = -∫_0^t ∂_u f(x, s, u)|_{u=0} ds`, which satisfies `δh = f`.
pub fn trivialize_lift(data: &TwoCochainLiftData, flow: &LocalFlow) -> U1Fn {
    let f = data.f.clone();
    let h_step = flow.h_step;
    Arc::new(move |x: &[Jet], t: &Jet| {
        let aug = augment(x, &[t], 1);
        let u = aug.var(0);
        let tt = &aug.extra[0];
        let n = ((tt.value().abs() / h_step) - 1e-9).ceil().max(1.0) as usize;
        let dt = tt.scale(1.0 / n as f64);
        let mut acc = Jet::zero(aug.n(), aug.order + 1);
        for m in 0..n {
            for (&th, &w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
                let s = dt.scale(m as f64 + th);
                let v = f(&aug.x, &s, &u)?;
                acc.add_product(&dt.scale(w), &v);
            }
        }
        Ok(aug.derivative(&acc, 0).scale(-1.0))
    })
}

/// `f(x, t) = H(φ_t x) - H(x) + c t`.
pub fn synth_flow_cocycle(h: &KForm, c: f64, flow: &LocalFlow) -> FlowCocycle {
    let h = h.clone();
    let flow = flow.clone();
    FlowCocycle {
        f: Arc::new(move |x: &[Jet], t: &Jet| {
            let y = flow.phi(x, t)?;
            let a = h.eval_at_jets(&y).remove(0);
            let b = h.eval_at_jets(x).remove(0);
            Ok(lin(&[(1.0, &a), (-1.0, &b), (c, t)]))
        }),
    }
}

/// `f = δh_0` with `h_0(x, t) = t P(x) + t² Q(x)`.
pub fn synth_lift_data(p: &KForm, q: &KForm, flow: &LocalFlow) -> TwoCochainLiftData {
    let (p, q) = (p.clone(), q.clone());
    let flow = flow.clone();
    let h0 = move |x: &[Jet], t: &Jet| -> Jet {
        let pv = p.eval_at_jets(x).remove(0);
        let qv = q.eval_at_jets(x).remove(0);
        &(t * &pv) + &(&(t * t) * &qv)
    };
    TwoCochainLiftData {
        f: Arc::new(move |x: &[Jet], t: &Jet, t2: &Jet| {
            let y = flow.phi(x, t)?;
            let sum = t + t2;
            Ok(lin(&[(1.0, &h0(&y, t2)), (-1.0, &h0(x, &sum)), (1.0, &h0(x, t))]))
        }),
    }
}

/// `A_x(t) = d_x(H ∘ φ_t - H)`.
pub fn synth_relform(h: &KForm, flow: &LocalFlow) -> RelFormCocycle {
    let h = h.clone();
    let flow = flow.clone();
    RelFormCocycle {
        a: Arc::new(move |x: &[Jet], t: &Jet| {
            let d = flow.dim();
            let mut aug = augment(x, &[t], d);
            for i in 0..d {
                let z = aug.var(i);
                aug.x[i] = &aug.x[i] + &z;
            }
            let y = flow.phi(&aug.x, &aug.extra[0])?;
            let v = &h.eval_at_jets(&y)[0] - &h.eval_at_jets(&aug.x)[0];
            Ok((0..d).map(|i| aug.derivative(&v, i)).collect())
        }),
    }
}

/// A random slowly varying field on `T^dim` and its flow on a box around
/// the middle of the fundamental domain.
pub fn preset_flow(dim: usize, seed: u64) -> Res<LocalFlow> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let xi = crate::geometry::random_vector_field(dim, 2, 2, 0.3, &mut rng);
    integrate_flow(&xi, BoxDomain::new(vec![0.5; dim], 0.15), DEFAULT_EPS, DEFAULT_STEP)
}

/// Residuals of the flow correspondence checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlowReport {
    pub group_law: f64,
    pub velocity: f64,
    /// `D_T ∘ I_T` on functions.
    pub dt_it: f64,
    /// `I_T ∘ D_T` on synthesized cocycles.
    pub it_dt: f64,
    /// `Δ ∘ I` on 1-forms.
    pub delta_i: f64,
    /// `I ∘ Δ` on synthesized relative form cocycles.
    pub i_delta: f64,
    /// `δh - f` for the trivialization of synthesized lift data.
    pub trivialize: f64,
    /// Cocycle residuals of the outputs of `I_T` and `I`.
    pub cocycle: f64,
    /// `f = c t` maps to the constant `c` and back.
    pub automorphism: f64,
    pub n_points: usize,
}

/// Runs every flow check on `n` random sample points per identity.
pub fn flow_checks(flow: &LocalFlow, seed: u64, n: usize) -> Res<FlowReport> {
    use crate::geometry::{random_scalar, TrigForm};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dim = flow.dim();
    let mut r = FlowReport::default();
    let u2: Vec<(Vec<f64>, f64, f64)> = (0..n)
        .map(|_| {
            let (x, t) = flow.sample_u(2, &mut rng);
            (x, t[0], t[1])
        })
        .collect();
    let u1: Vec<(Vec<f64>, f64)> = u2.iter().map(|(x, t, t2)| (x.clone(), t + t2)).collect();
    r.group_law = flow.group_law_residual(&u2)?;
    r.velocity = flow.velocity_residual(&u1)?;

    let h0 = scalar_fn(&random_scalar(dim, 2, 2, 0.5, &mut rng));
    let it = integrate_t(&h0, flow);
    let back = differentiate_t(&it);
    for (x, _) in &u1 {
        r.dt_it = r.dt_it.max((eval_u0(&back, x)? - eval_u0(&h0, x)?).abs());
    }
    r.cocycle = r.cocycle.max(it.cocycle_residual(flow, &u2)?);

    let big_h = random_scalar(dim, 2, 2, 0.5, &mut rng);
    let c = rng.gen_range(-1.0..1.0);
    let g = synth_flow_cocycle(&big_h, c, flow);
    let again = integrate_t(&differentiate_t(&g), flow);
    for (x, t) in &u1 {
        r.it_dt = r.it_dt.max((eval_u1(&again.f, x, *t)? - eval_u1(&g.f, x, *t)?).abs());
    }

    let alpha = form_fn(&TrigForm::random(dim, 1, 2, 2, 0.5, &mut rng).to_form(dim));
    let ia = integrate_form(&alpha, flow);
    let da = differentiate_form(&ia);
    for (x, _) in &u1 {
        let p = eval_form0(&da, x)?;
        let q = eval_form0(&alpha, x)?;
        r.delta_i = p.iter().zip(&q).fold(r.delta_i, |m, (a, b)| m.max((a - b).abs()));
    }
    r.cocycle = r.cocycle.max(ia.cocycle_residual(flow, &u2)?);

    let rel = synth_relform(&random_scalar(dim, 2, 2, 0.5, &mut rng), flow);
    let rt = integrate_form(&differentiate_form(&rel), flow);
    for (x, t) in &u1 {
        let p = eval_form1(&rt.a, x, *t)?;
        let q = eval_form1(&rel.a, x, *t)?;
        r.i_delta = p.iter().zip(&q).fold(r.i_delta, |m, (a, b)| m.max((a - b).abs()));
    }

    let p = random_scalar(dim, 2, 2, 0.5, &mut rng);
    let q = random_scalar(dim, 2, 2, 0.5, &mut rng);
    let data = synth_lift_data(&p, &q, flow);
    let h = trivialize_lift(&data, flow);
    for (x, t, t2) in &u2 {
        let y = flow.phi_point(x, *t)?;
        let dh = eval_u1(&h, &y, *t2)? - eval_u1(&h, x, t + t2)? + eval_u1(&h, x, *t)?;
        r.trivialize = r.trivialize.max((dh - eval_u2(&data.f, x, *t, *t2)?).abs());
    }

    let c = rng.gen_range(-1.0..1.0);
    let lin_t = FlowCocycle { f: Arc::new(move |_x: &[Jet], t: &Jet| Ok(t.scale(c))) };
    let gen = differentiate_t(&lin_t);
    let round = integrate_t(&gen, flow);
    for (x, t) in &u1 {
        let dx = {
            let xs: Vec<Jet> = (0..dim).map(|i| Jet::variable(dim, 1, i, x[i])).collect();
            let v = gen(&xs)?;
            (0..dim).fold(0.0f64, |m, i| m.max(v.partial(i).abs()))
        };
        r.automorphism = r
            .automorphism
            .max((eval_u0(&gen, x)? - c).abs())
            .max(dx)
            .max((eval_u1(&round.f, x, *t)? - c * t).abs());
    }
    r.n_points = n;
    Ok(r)
}
