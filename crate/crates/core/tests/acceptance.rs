//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the pass/fail lines always show up in the output; exits nonzero if any
//! criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use gerbe_sym::cech::{coboundary, sup_over_overlaps, Cochain, Sampling};
use gerbe_sym::circle_bundle as bundle;
use gerbe_sym::conn_lifts as cl;
use gerbe_sym::courant as ca;
use gerbe_sym::flows;
use gerbe_sym::geometry::{make_torus_cover, random_vector_field, CoveredManifold, KForm, PartitionKind, TrigForm};
use gerbe_sym::gerbe::{self, CurvingData};
use gerbe_sym::lifts;
use gerbe_sym::linf::{check_linfinity, Corruption};
use gerbe_sym::suite::{run_suites, Suite, SuiteConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// Reference scale.
const DIM: usize = 2;
const SPLITS: usize = 4;
const MARGIN: f64 = 0.04;
const SAMPLES: usize = 200;
const SEED: u64 = 1;

// Pinned tolerances.
const TOL_CECH: f64 = 1e-8;
const CECH_BUDGET: Duration = Duration::from_secs(5);
const TOL_GERBE_CHAIN: f64 = 1e-8;
const TOL_DB_OVERLAP: f64 = 1e-9;
const TOL_SOLVE_LIFT: f64 = 1e-8;
const TOL_MORPHISM_CONSTANCY: f64 = 1e-9;
const TOL_LIFT_LINF: f64 = 1e-8;
const NEGATIVE_CONTROL_FLOOR: f64 = 1e-3;
const TOL_BRACKET_DEFECT: f64 = 1e-8;
const TOL_SPLITTING_OBSTRUCTION: f64 = 1e-7;
const TOL_EXTENSION: f64 = 1e-8;
const TOL_TORSOR: f64 = 1e-9;
const TOL_CONN_LINF: f64 = 1e-7;
const TOL_COURANT_INVARIANT: f64 = 1e-7;
const TOL_JACOBI: f64 = 1e-6;
const TOL_PAIRING_PATCH: f64 = 1e-9;
const TOL_BFIELD: f64 = 1e-7;
const TOL_SPLIT_PAIRING: f64 = 1e-9;
const TOL_TWIST: f64 = 1e-7;
const TOL_PHI: f64 = 1e-7;
const TOL_FLOW_EXACT: f64 = 1e-8;
const TOL_FLOW_IT_DT: f64 = 1e-6;
const TOL_FLOW_DELTA_I: f64 = 1e-6;
const TOL_FLOW_I_DELTA: f64 = 1e-5;
const FLOW_EPS: f64 = 0.2;
const FLOW_STEP: f64 = 1e-3;
const TOL_BUNDLE_DEFECT: f64 = 1e-9;
const VERIFY_BUDGET: Duration = Duration::from_secs(60);

type Criterion<'a> = Box<dyn Fn() -> Outcome + Send + Sync + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Collects `(label, value, tolerance, must_exceed)` checks.
#[derive(Default)]
struct Checks(Vec<(String, f64, f64, bool)>);

impl Checks {
    fn below(&mut self, label: &str, v: f64, tol: f64) {
        self.0.push((label.to_string(), v, tol, false));
    }

    fn above(&mut self, label: &str, v: f64, floor: f64) {
        self.0.push((label.to_string(), v, floor, true));
    }

    fn outcome(self) -> Outcome {
        let ok = |(_, v, t, up): &(String, f64, f64, bool)| if *up { *v > *t } else { *v <= *t };
        let pass = self.0.iter().all(ok);
        let detail = self
            .0
            .iter()
            .map(|c| format!("{} {:.2e} {} {:.0e}", c.0, c.1, if c.3 { ">" } else { "<=" }, c.2))
            .collect::<Vec<_>>()
            .join("; ");
        Outcome { pass, detail }
    }
}

fn cover() -> Arc<CoveredManifold> {
    make_torus_cover(DIM, SPLITS, MARGIN).unwrap()
}

fn chain(cover: &Arc<CoveredManifold>) -> CurvingData {
    gerbe::solve_chain(&gerbe::random_gerbe(cover, SEED)).unwrap().0
}

fn full() -> Sampling {
    Sampling::new(SAMPLES, SEED)
}

/// A per-draw share of the reference sample budget.
fn share(draws: usize) -> Sampling {
    Sampling::new(SAMPLES.div_ceil(draws), SEED)
}

fn timed_cech() -> (gerbe_sym::suite::Report, Duration) {
    let start = Instant::now();
    let cfg = SuiteConfig { suites: vec![Suite::Cech], ..SuiteConfig::default() };
    (run_suites(&cfg, None).unwrap(), start.elapsed())
}

fn criterion_1(timed: &(gerbe_sym::suite::Report, Duration)) -> Outcome {
    let cover = cover();
    let mut c = Checks::default();
    let (r, elapsed) = timed;
    c.below("δδ", r.record("cech.delta_squared").unwrap().max_deviation, TOL_CECH);
    c.below("solve", r.record("cech.solve_coboundary").unwrap().max_deviation, TOL_CECH);
    c.below("seconds", elapsed.as_secs_f64(), CECH_BUDGET.as_secs_f64());

    // Oracle: the alternating sum written out by hand on triple overlaps.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let c1: Cochain<KForm> = Cochain::from_fn(&cover, 1, 0, |_| TrigForm::random(DIM, 0, 3, 2, 1.0, &mut rng).to_form(DIM));
    let dc = coboundary(&c1);
    let (oracle, _, _) = sup_over_overlaps(&cover, 2, full(), |s, ctx| {
        let v = |a: usize, b: usize| c1.get(&[s[a], s[b]]).unwrap().values(ctx)[0];
        let by_hand = v(1, 2) - v(0, 2) + v(0, 1);
        (dc.get(s).unwrap().values(ctx)[0] - by_hand).abs()
    });
    c.below("oracle", oracle, 1e-12);
    c.outcome()
}

fn criterion_2() -> Outcome {
    let cover = cover();
    let g = gerbe::random_gerbe(&cover, SEED);
    let conn = gerbe::solve_connective_structure(&g).unwrap();
    let b = gerbe::solve_curving(&conn).unwrap();
    let curv = gerbe::curvature(&b, full(), TOL_DB_OVERLAP).unwrap();
    let mut c = Checks::default();
    c.below("θ cocycle", g.cocycle_report(TOL_GERBE_CHAIN, full()).max_defect, TOL_GERBE_CHAIN);
    c.below("δA = dθ", conn.invariant_residual(full()), TOL_GERBE_CHAIN);
    c.below("δB = dA", b.invariant_residual(full()), TOL_GERBE_CHAIN);
    c.below("dB overlap", b.db_overlap_defect(full()), TOL_DB_OVERLAP);
    c.below("C|U_i = dB_i", curv.restriction_residual(full()), TOL_GERBE_CHAIN);
    c.below("dC", curv.closedness_residual(full()), TOL_GERBE_CHAIN);
    c.outcome()
}

fn criterion_3() -> Outcome {
    let cover = cover();
    let g = gerbe::random_gerbe(&cover, SEED);
    let s = share(10);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let (mut solve, mut constancy) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let xi = random_vector_field(DIM, 2, 2, 0.5, &mut rng);
        let l = lifts::solve_lift_with(&xi, &g, PartitionKind::Standard).unwrap();
        let l2 = lifts::solve_lift_with(&xi, &g, PartitionKind::Squared).unwrap();
        solve = solve.max(l.invariant_residual(&g, s)).max(l2.invariant_residual(&g, s));
        let m = lifts::find_morphism(&l, &l2).unwrap();
        // u_j - u_i must reproduce f' - f on every overlap.
        let diff = l2.f.sub(&l.f);
        let du = coboundary(&m.u);
        let (v, _, _) = sup_over_overlaps(&cover, 1, s, |sx, ctx| {
            (diff.get(sx).unwrap().values(ctx)[0] - du.get(sx).unwrap().values(ctx)[0]).abs()
        });
        constancy = constancy.max(v);
    }
    let mut c = Checks::default();
    c.below("solve", solve, TOL_SOLVE_LIFT);
    c.below("morphism", constancy, TOL_MORPHISM_CONSTANCY);
    c.outcome()
}

fn criterion_4() -> Outcome {
    let g = gerbe::random_gerbe(&cover(), SEED);
    let r = lifts::linfinity_check(&g, 20, SEED);
    let mut c = Checks::default();
    for (name, v) in r.entries() {
        c.below(name, v, TOL_LIFT_LINF);
    }
    let mut broken = lifts::LiftAlgebra::new(&g, Sampling::new(2, SEED));
    broken.corruption = Some(Corruption::DropBracketTerm);
    let bad = check_linfinity(&broken, 3, SEED, TOL_LIFT_LINF);
    c.above("corrupted", bad.max_deviation(), NEGATIVE_CONTROL_FLOOR);
    c.outcome()
}

fn criterion_5() -> Outcome {
    let b = chain(&cover());
    let s = share(10);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let xi = random_vector_field(DIM, 2, 2, 0.5, &mut rng);
        let eta = random_vector_field(DIM, 2, 2, 0.5, &mut rng);
        worst = worst.max(lifts::bracket_defect_morphism(&xi, &eta, &b).unwrap().invariant_residual(s));
    }
    let mut c = Checks::default();
    c.below("morphism", worst, TOL_BRACKET_DEFECT);
    c.outcome()
}

fn criterion_6() -> Outcome {
    let cover = make_torus_cover(3, 3, MARGIN).unwrap();
    let g = gerbe::random_gerbe(&cover, SEED);
    let (b, curv) = gerbe::solve_chain(&g).unwrap();
    let s = Sampling::new(4, SEED);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let (mut worst, mut oracle, mut scale) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let xi = random_vector_field(3, 2, 2, 0.5, &mut rng);
        let eta = random_vector_field(3, 2, 2, 0.5, &mut rng);
        let tau = random_vector_field(3, 2, 2, 0.5, &mut rng);
        let r = lifts::splitting_obstruction(&xi, &eta, &tau, &b, s);
        worst = worst.max(r.max_deviation);
        // Oracle: the glued global curvature, contracted pointwise.
        let ctau = curv.c.interior(&xi).interior(&eta).interior(&tau);
        let (v, _, _) = sup_over_overlaps(&cover, 0, s, |sx, ctx| {
            scale = scale.max(ctau.values(ctx)[0].abs());
            (r.defect.get(sx).unwrap().values(ctx)[0] - ctau.values(ctx)[0]).abs()
        });
        oracle = oracle.max(v);
    }
    let mut c = Checks::default();
    c.below("vs dB_i", worst, TOL_SPLITTING_OBSTRUCTION);
    c.below("vs C", oracle, TOL_SPLITTING_OBSTRUCTION);
    c.above("|C(ξ,η,τ)|", scale, NEGATIVE_CONTROL_FLOOR);
    c.outcome()
}

fn criterion_7() -> Outcome {
    let conn = chain(&cover()).conn;
    let s = share(10);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let (mut ext, mut torsor) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let xi = random_vector_field(DIM, 2, 2, 0.5, &mut rng);
        let l = lifts::solve_lift(&xi, &conn.gerbe).unwrap();
        let e = cl::extend_to_connective(&l, &conn).unwrap();
        ext = ext.max(e.invariant_residual(&conn, s));
        let alpha = TrigForm::random(DIM, 1, 2, 2, 0.3, &mut rng).to_form(DIM);
        let d = cl::torsor_difference(&e, &cl::torsor_action(&e, &alpha), s).unwrap();
        let (back, _, _) = sup_over_overlaps(e.cover(), 0, s, |_, ctx| d.alpha.sub(&alpha).max_abs(ctx));
        torsor = torsor.max(d.uniqueness_defect).max(d.overlap_defect).max(back);
    }
    let r = cl::conn_linfinity_check(&conn, 20, SEED);
    let mut c = Checks::default();
    c.below("extension", ext, TOL_EXTENSION);
    c.below("torsor", torsor, TOL_TORSOR);
    c.below("L∞", r.max_deviation(), TOL_CONN_LINF);
    c.outcome()
}

fn sections(conn: &gerbe::ConnectiveStructureData, n: usize, seed: u64) -> Vec<ca::CourantSection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| ca::random_section(conn, &mut rng)).collect()
}

fn criterion_8() -> Outcome {
    let conn = chain(&cover()).conn;
    let s = share(20);
    let secs = sections(&conn, 22, SEED + 8);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 80);
    let (mut inv, mut jac, mut pair, mut bf) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..20 {
        let (x, y, z) = (&secs[k], &secs[k + 1], &secs[k + 2]);
        let br = ca::courant_bracket(x, y);
        inv = inv.max(br.invariant_residual(&conn, s));
        let j = ca::jacobi_defect(x, y, z, s);
        jac = jac.max(j.form_deviation).max(j.vector_part);
        pair = pair.max(ca::pairing_patch_defect(x, y, s));
        let bform = TrigForm::random(DIM, 1, 2, 2, 0.3, &mut rng).to_form(DIM).d();
        let lhs = ca::courant_bracket(&ca::bfield_transform(x, &bform).unwrap(), &ca::bfield_transform(y, &bform).unwrap());
        let rhs = ca::bfield_transform(&br, &bform).unwrap();
        bf = bf.max(ca::CourantSection::linear_combination(&[(1.0, &lhs), (-1.0, &rhs)]).sup_norm(s).0);
    }
    let mut c = Checks::default();
    c.below("bracket invariant", inv, TOL_COURANT_INVARIANT);
    c.below("Jac - dNij", jac, TOL_JACOBI);
    c.below("pairing patch", pair, TOL_PAIRING_PATCH);
    c.below("B-field", bf, TOL_BFIELD);
    c.outcome()
}

fn criterion_9() -> Outcome {
    let cover = cover();
    let g = gerbe::random_gerbe(&cover, SEED);
    let (b, curv) = gerbe::solve_chain(&g).unwrap();
    let s = share(10);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let (mut pairing, mut twist, mut oracle) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let x = (random_vector_field(DIM, 2, 2, 0.5, &mut rng), TrigForm::random(DIM, 1, 2, 2, 0.5, &mut rng).to_form(DIM));
        let y = (random_vector_field(DIM, 2, 2, 0.5, &mut rng), TrigForm::random(DIM, 1, 2, 2, 0.5, &mut rng).to_form(DIM));
        let r = ca::splitting_check((&x.0, &x.1), (&y.0, &y.1), &b, s).unwrap();
        pairing = pairing.max(r.pairing);
        twist = twist.max(r.twist);
        // Oracle: twist against the glued curvature form from the gerbe module.
        let sx = ca::curving_splitting(&x.0, &x.1, &b).unwrap();
        let sy = ca::curving_splitting(&y.0, &y.1, &b).unwrap();
        let (bxi, bform) = ca::standard_bracket((&x.0, &x.1), (&y.0, &y.1));
        let lhs = ca::courant_bracket(&sx, &sy);
        let sb = ca::curving_splitting(&bxi, &bform, &b).unwrap();
        let c3 = curv.c.interior(&y.0).interior(&x.0);
        let (v, _, _) = sup_over_overlaps(&cover, 0, s, |sx_, ctx| {
            let l = lhs.a.get(sx_).unwrap().values(ctx);
            let r = sb.a.get(sx_).unwrap().values(ctx);
            let cv = c3.values(ctx);
            (0..DIM).fold(0.0f64, |m, i| m.max((l[i] - r[i] - cv[i]).abs()))
        });
        oracle = oracle.max(v);
    }
    let mut c = Checks::default();
    c.below("pairing", pairing, TOL_SPLIT_PAIRING);
    c.below("twist", twist, TOL_TWIST);
    c.below("twist vs C", oracle, TOL_TWIST);
    c.outcome()
}

fn criterion_10() -> Outcome {
    let conn = chain(&cover()).conn;
    let s = share(20);
    let secs = sections(&conn, 22, SEED + 10);
    let (mut c1, mut c2) = (0.0f64, 0.0f64);
    for k in 0..20 {
        let r = ca::phi_check(&secs[k], &secs[k + 1], &secs[k + 2], &conn, s);
        c1 = c1.max(r.condition_1).max(r.image);
        c2 = c2.max(r.condition_2);
    }
    let mut c = Checks::default();
    c.below("condition 1", c1, TOL_PHI);
    c.below("condition 2", c2, TOL_PHI);
    c.outcome()
}

fn criterion_11() -> Outcome {
    let mut c = Checks::default();
    for dim in [1, 2] {
        let flow = flows::preset_flow(dim, SEED).unwrap();
        assert_eq!((flow.eps, flow.h_step), (FLOW_EPS, FLOW_STEP));
        let r = flows::flow_checks(&flow, SEED, 10).unwrap();
        c.below(&format!("T{dim} D∘I"), r.dt_it, TOL_FLOW_EXACT);
        c.below(&format!("T{dim} I∘D"), r.it_dt, TOL_FLOW_IT_DT);
        c.below(&format!("T{dim} Δ∘I"), r.delta_i, TOL_FLOW_DELTA_I);
        c.below(&format!("T{dim} I∘Δ"), r.i_delta, TOL_FLOW_I_DELTA);
    }
    c.outcome()
}

fn criterion_12() -> Outcome {
    let cover = cover();
    let s = share(20);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 12);
    let mut worst = 0.0f64;
    for k in 0..20u64 {
        let conn = if k % 4 == 0 { bundle::twisted_bundle(&cover) } else { bundle::random_connection(&cover, SEED + k) };
        let xi = random_vector_field(DIM, 2, 2, 0.5, &mut rng);
        let eta = random_vector_field(DIM, 2, 2, 0.5, &mut rng);
        worst = worst.max(bundle::bundle_curvature_defect(&xi, &eta, &conn, s).max_deviation);
    }
    let mut c = Checks::default();
    c.below("defect", worst, TOL_BUNDLE_DEFECT);
    c.outcome()
}

fn criterion_13(first: &(gerbe_sym::suite::Report, Duration)) -> Outcome {
    let second = run_suites(&SuiteConfig::default(), None).unwrap();
    let mut c = Checks::default();
    c.below("seconds", first.1.as_secs_f64(), VERIFY_BUDGET.as_secs_f64());
    c.below("failed identities", first.0.records.iter().filter(|r| !r.pass).count() as f64, 0.0);
    let same = first.0.without_timing().to_json() == second.without_timing().to_json();
    c.below("report differs", if same { 0.0 } else { 1.0 }, 0.0);
    c.outcome()
}

fn main() -> ExitCode {
    // Timed runs go first, alone, so they are effectively single-threaded.
    let cech = timed_cech();
    let start = Instant::now();
    let first = (run_suites(&SuiteConfig::default(), None).unwrap(), start.elapsed());
    let criteria: Vec<(&str, Criterion)> = vec![
        ("1 Čech foundation", Box::new(|| criterion_1(&cech))),
        ("2 gerbe chain", Box::new(criterion_2)),
        ("3 lift classification", Box::new(criterion_3)),
        ("4 lift L∞ algebra", Box::new(criterion_4)),
        ("5 bracket-defect morphism", Box::new(criterion_5)),
        ("6 splitting obstruction (T³)", Box::new(criterion_6)),
        ("7 connective lifts", Box::new(criterion_7)),
        ("8 Courant axioms", Box::new(criterion_8)),
        ("9 curving splitting", Box::new(criterion_9)),
        ("10 L∞ isomorphism Φ", Box::new(criterion_10)),
        ("11 flows", Box::new(criterion_11)),
        ("12 circle-bundle oracle", Box::new(criterion_12)),
        ("13 performance and determinism", Box::new(|| criterion_13(&first))),
    ];
    let outcomes: Vec<Outcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = criteria.iter().map(|(_, f)| scope.spawn(f)).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Outcome { pass: false, detail: "panicked".into() }))
            .collect()
    });
    let mut all = true;
    for ((name, _), o) in criteria.iter().zip(&outcomes) {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        all &= o.pass;
    }
    println!("{}/{} criteria pass", outcomes.iter().filter(|o| o.pass).count(), outcomes.len());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
