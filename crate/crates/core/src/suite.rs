//! Batch verification: named identity checks grouped into suites, a
//! serializable configuration and a versioned report.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cech::{coboundary, solve_coboundary, Cochain, Sampling};
use crate::circle_bundle as bundle;
use crate::conn_lifts as cl;
use crate::courant as ca;
use crate::error::{FlowError, GeometryError, GerbeError};
use crate::flows;
use crate::geometry::{make_torus_cover, random_vector_field, CoveredManifold, KForm, PartitionKind, TrigForm};
use crate::gerbe::{self, CurvingData, GerbeDataset};
use crate::lifts;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    T1,
    T2,
    T3,
}

impl Preset {
    pub fn dim(self) -> usize {
        match self {
            Preset::T1 => 1,
            Preset::T2 => 2,
            Preset::T3 => 3,
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Preset, ConfigError> {
        match s {
            "t1" => Ok(Preset::T1),
            "t2" => Ok(Preset::T2),
            "t3" => Ok(Preset::T3),
            _ => Err(ConfigError::Invalid(format!("unknown preset `{s}` (expected t1, t2 or t3)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Cech,
    Bundle,
    Gerbe,
    Lifts,
    ConnLifts,
    Courant,
    Flows,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Cech, Suite::Bundle, Suite::Gerbe, Suite::Lifts, Suite::ConnLifts, Suite::Courant, Suite::Flows];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Cech => "cech",
            Suite::Bundle => "bundle",
            Suite::Gerbe => "gerbe",
            Suite::Lifts => "lifts",
            Suite::ConnLifts => "conn_lifts",
            Suite::Courant => "courant",
            Suite::Flows => "flows",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Suite, ConfigError> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Gerbe(#[from] GerbeError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// What to verify, and how thoroughly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub preset: Preset,
    /// Patches per circle factor, at least 3.
    pub splits: usize,
    /// Overlap margin, in `(0, 1/(2 splits))`.
    pub margin: f64,
    pub seed: u64,
    /// Sample points per overlap for pointwise identities, 1..=10000.
    pub samples: usize,
    /// Sample points of `U^k` for each flow identity, 1..=1000.
    pub flow_points: usize,
    /// Per-identity tolerance overrides, keyed by record name.
    pub tolerances: BTreeMap<String, f64>,
    pub suites: Vec<Suite>,
}

impl Default for SuiteConfig {
    fn default() -> SuiteConfig {
        SuiteConfig {
            preset: Preset::T2,
            splits: 4,
            margin: 0.04,
            seed: 1,
            samples: 200,
            flow_points: 10,
            tolerances: BTreeMap::new(),
            suites: Suite::ALL.to_vec(),
        }
    }
}

impl SuiteConfig {
    pub fn from_json(s: &str) -> Result<SuiteConfig, ConfigError> {
        let c: SuiteConfig = serde_json::from_str(s).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(3..=8).contains(&self.splits) {
            return bad(format!("splits must be in 3..=8, got {}", self.splits));
        }
        let max_margin = 1.0 / (2.0 * self.splits as f64);
        if !(self.margin > 0.0 && self.margin < max_margin) {
            return bad(format!("margin must be in (0, {max_margin}), got {}", self.margin));
        }
        if !(1..=10_000).contains(&self.samples) {
            return bad(format!("samples must be in 1..=10000, got {}", self.samples));
        }
        if !(1..=1000).contains(&self.flow_points) {
            return bad(format!("flow_points must be in 1..=1000, got {}", self.flow_points));
        }
        if self.suites.is_empty() {
            return bad("no suite selected".into());
        }
        for (name, tol) in &self.tolerances {
            if default_tolerance(name).is_none() {
                return bad(format!("unknown identity `{name}` in tolerance overrides"));
            }
            if !(tol.is_finite() && *tol > 0.0) {
                return bad(format!("tolerance for `{name}` must be positive and finite, got {tol}"));
            }
        }
        Ok(())
    }

    pub fn sampling(&self) -> Sampling {
        Sampling::new(self.samples, self.seed)
    }

    fn tolerance(&self, name: &str) -> f64 {
        self.tolerances.get(name).copied().or_else(|| default_tolerance(name)).expect("known identity")
    }
}

/// Every identity the suites check: name, what is compared, default tolerance.
pub const IDENTITIES: &[(&str, &str, f64)] = &[
    ("cech.delta_squared", "δδc = 0", 1e-8),
    ("cech.solve_coboundary", "δ(solve h) = h", 1e-8),
    ("bundle.cocycle", "δθ ∈ 2πZ", 1e-8),
    ("bundle.connection", "A_j - A_i = dθ_ij", 1e-8),
    ("bundle.curvature_defect", "f_[ξ,η]^h - f_[ξ^h,η^h] = ι_η ι_ξ K", 1e-9),
    ("gerbe.cocycle", "δθ ∈ 2πZ", 1e-8),
    ("gerbe.connective", "δA = dθ", 1e-8),
    ("gerbe.curving", "B_j - B_i = dA_ij", 1e-8),
    ("gerbe.curvature_overlap", "dB_i = dB_j", 1e-9),
    ("lifts.solve", "δf = ι_ξ dθ", 1e-8),
    ("lifts.morphism", "f' - f = δu", 1e-9),
    ("lifts.linf", "2-term L∞ axioms for lifts", 1e-8),
    ("lifts.bracket_defect", "[ξ,η]^h → [ξ^h,η^h] via ι_η ι_ξ B", 1e-8),
    ("lifts.splitting_obstruction", "homomorphism defect = ι_τ ι_η ι_ξ C", 1e-7),
    ("conn_lifts.extension", "a_j - a_i = df - £_ξ A", 1e-8),
    ("conn_lifts.torsor", "a' - a = α", 1e-9),
    ("conn_lifts.linf", "2-term L∞ axioms for connective lifts", 1e-7),
    ("courant.bracket_invariant", "[s1,s2] is a section", 1e-7),
    ("courant.jacobi", "Jac = d Nij", 1e-6),
    ("courant.pairing_patch", "⟨s1,s2⟩ patch independent", 1e-9),
    ("courant.bfield", "[e^B s1, e^B s2] = e^B [s1,s2]", 1e-7),
    ("courant.splitting_pairing", "⟨s(x),s(y)⟩ = ⟨x,y⟩", 1e-9),
    ("courant.splitting_twist", "[s(x),s(y)] - s[x,y] = ι_ξ ι_η C", 1e-7),
    ("courant.le_linf", "2-term L∞ axioms for L_E", 1e-6),
    ("courant.phi_condition_1", "dφ₂ = φ[x,y] - [φx,φy]", 1e-7),
    ("courant.phi_condition_2", "cubic homomorphism condition", 1e-7),
    ("flows.group_law", "φ_t φ_t' = φ_(t+t')", 1e-7),
    ("flows.velocity", "d/dt φ_t = ξ(φ_t)", 1e-7),
    ("flows.dt_it", "D_T I_T = id", 1e-8),
    ("flows.it_dt", "I_T D_T = id", 1e-6),
    ("flows.delta_i", "Δ I = id", 1e-6),
    ("flows.i_delta", "I Δ = id", 1e-5),
    ("flows.trivialize", "δh = f", 1e-5),
    ("flows.cocycle", "outputs of I_T and I are cocycles", 1e-6),
    ("flows.automorphism", "ct ↔ c", 1e-7),
];

pub fn default_tolerance(name: &str) -> Option<f64> {
    IDENTITIES.iter().find(|e| e.0 == name).map(|e| e.2)
}

fn anchor(name: &str) -> &'static str {
    IDENTITIES.iter().find(|e| e.0 == name).map(|e| e.1).unwrap_or("")
}

/// Outcome of one identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    pub anchor: String,
    /// Unevaluable identities carry an infinite deviation, written as `null`.
    #[serde(deserialize_with = "deviation_or_infinite")]
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub n_points: usize,
    pub wall_time_ms: f64,
    /// Why the identity could not be evaluated, if it could not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn deviation_or_infinite<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub version: String,
    pub config: SuiteConfig,
    /// Set when the gerbe data came from a dataset file.
    pub dataset_seed: Option<u64>,
    pub records: Vec<Record>,
    pub pass: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn record(&self, name: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.name == name)
    }

    /// The report with timings zeroed, for comparing runs.
    pub fn without_timing(&self) -> Report {
        let mut r = self.clone();
        for rec in &mut r.records {
            rec.wall_time_ms = 0.0;
        }
        r
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.records {
            writeln!(
                f,
                "{:4} {:32} {:>10.3e} (tol {:.0e}, {} pts, {:.0} ms)",
                if r.pass { "ok" } else { "FAIL" },
                r.name,
                r.max_deviation,
                r.tolerance,
                r.n_points,
                r.wall_time_ms
            )?;
            if let Some(e) = &r.error {
                writeln!(f, "     {e}")?;
            }
        }
        write!(f, "{}", if self.pass { "all identities hold" } else { "some identities FAILED" })
    }
}

struct Recorder<'a> {
    config: &'a SuiteConfig,
    records: Vec<Record>,
}

impl Recorder<'_> {
    fn check(&mut self, name: &str, run: impl FnOnce() -> Result<(f64, usize), ConfigError>) -> Result<(), ConfigError> {
        let start = Instant::now();
        let (outcome, error) = match run() {
            Ok(v) => (v, None),
            Err(e) => ((f64::INFINITY, 0), Some(e.to_string())),
        };
        let (dev, n) = outcome;
        let dev = if dev.is_nan() { f64::INFINITY } else { dev };
        let tolerance = self.config.tolerance(name);
        self.records.push(Record {
            name: name.to_string(),
            anchor: anchor(name).to_string(),
            max_deviation: dev,
            tolerance,
            pass: dev <= tolerance,
            n_points: n,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            error,
        });
        Ok(())
    }
}

impl Recorder<'_> {
    /// Records every identity of `suite` as failed without evaluating it.
    fn skip(&mut self, suite: Suite, why: &str) {
        let prefix = format!("{}.", suite.name());
        for (name, anchor, _) in IDENTITIES.iter().filter(|e| e.0.starts_with(&prefix)) {
            self.records.push(Record {
                name: name.to_string(),
                anchor: anchor.to_string(),
                max_deviation: f64::INFINITY,
                tolerance: self.config.tolerance(name),
                pass: false,
                n_points: 0,
                wall_time_ms: 0.0,
                error: Some(format!("not evaluated: {why}")),
            });
        }
    }
}

/// Why the gerbe data cannot support the lift constructions, if it cannot.
fn input_defect(b: &CurvingData) -> Option<String> {
    let s = gerbe::CHECK_SAMPLING;
    let tol = 1e-8;
    let c = b.conn.gerbe.cocycle_report(tol, s);
    if !c.holds {
        return Some(format!("transition phases are not a cocycle (defect {:.3e})", c.max_defect));
    }
    let a = b.conn.invariant_residual(s);
    if !(a <= tol) {
        return Some(format!("connective structure violates δA = dθ (defect {a:.3e})"));
    }
    let r = b.invariant_residual(s);
    if !(r <= tol) {
        return Some(format!("curving violates B_j - B_i = dA_ij (defect {r:.3e})"));
    }
    None
}

fn rng_for(config: &SuiteConfig, suite: Suite, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(config.seed ^ ((suite as u64 + 1) << 40) ^ (salt << 20))
}

fn lift_err(e: crate::error::LiftError) -> ConfigError {
    ConfigError::Invalid(format!("lift construction failed: {e}"))
}

fn courant_err(e: crate::error::CourantError) -> ConfigError {
    ConfigError::Invalid(format!("Courant construction failed: {e}"))
}

/// Runs the configured suites. `data` replaces the randomly drawn gerbe
/// when given; its cover must match the configuration.
pub fn run_suites(config: &SuiteConfig, data: Option<&CurvingData>) -> Result<Report, ConfigError> {
    config.validate()?;
    let cover = match data {
        Some(d) => d.cover().clone(),
        None => make_torus_cover(config.preset.dim(), config.splits, config.margin)?,
    };
    let mut rec = Recorder { config, records: Vec::new() };
    let mut suites = config.suites.clone();
    suites.sort();
    suites.dedup();
    let mut chain: Option<CurvingData> = data.cloned();
    let mut curving = |cover: &Arc<CoveredManifold>| -> Result<CurvingData, ConfigError> {
        if let Some(c) = &chain {
            return Ok(c.clone());
        }
        let g = gerbe::random_gerbe(cover, config.seed);
        let (b, _) = gerbe::solve_chain(&g)?;
        chain = Some(b.clone());
        Ok(b)
    };
    for suite in suites {
        if matches!(suite, Suite::Lifts | Suite::ConnLifts | Suite::Courant) {
            if let Some(why) = input_defect(&curving(&cover)?) {
                rec.skip(suite, &why);
                continue;
            }
        }
        match suite {
            Suite::Cech => cech_suite(&mut rec, &cover)?,
            Suite::Bundle => bundle_suite(&mut rec, &cover)?,
            Suite::Gerbe => gerbe_suite(&mut rec, &curving(&cover)?)?,
            Suite::Lifts => lifts_suite(&mut rec, &curving(&cover)?)?,
            Suite::ConnLifts => conn_lifts_suite(&mut rec, &curving(&cover)?)?,
            Suite::Courant => courant_suite(&mut rec, &curving(&cover)?)?,
            Suite::Flows => flows_suite(&mut rec, cover.dim())?,
        }
    }
    let pass = rec.records.iter().all(|r| r.pass);
    Ok(Report {
        schema: REPORT_SCHEMA,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        dataset_seed: data.map(|d| match d.conn.gerbe.provenance {
            gerbe::Provenance::Dataset { seed } => seed,
            _ => config.seed,
        }),
        records: rec.records,
        pass,
    })
}

/// Number of random cochains for the Čech identities.
pub const CECH_DRAWS: usize = 50;

fn random_cochain(cover: &Arc<CoveredManifold>, p: usize, fd: usize, rng: &mut ChaCha8Rng) -> Cochain<KForm> {
    let dim = cover.dim();
    Cochain::from_fn(cover, p, fd, |_| TrigForm::random(dim, fd, 2, 2, 0.5, rng).to_form(dim))
}

fn cech_suite(rec: &mut Recorder, cover: &Arc<CoveredManifold>) -> Result<(), ConfigError> {
    let config = rec.config;
    // Spread the draws over the sample budget so the segment stays cheap.
    let per = Sampling::new(config.samples.div_ceil(CECH_DRAWS).max(2), config.seed);
    let dim = cover.dim();
    let mut rng = rng_for(config, Suite::Cech, 0);
    let draws: Vec<(usize, usize)> = (0..CECH_DRAWS).map(|k| (k % 2, (k / 2) % (dim.min(2) + 1))).collect();
    let cochains: Vec<Cochain<KForm>> = draws.iter().map(|&(p, fd)| random_cochain(cover, p, fd, &mut rng)).collect();
    rec.check("cech.delta_squared", || {
        let mut m = 0.0f64;
        let mut n = 0;
        for c in &cochains {
            let dd = coboundary(&coboundary(c));
            let (v, _, k) = crate::cech::sup_over_overlaps(cover, c.degree() + 2, per, |s, ctx| dd.get(s).unwrap().max_abs(ctx));
            m = m.max(v);
            n += k;
        }
        Ok((m, n))
    })?;
    rec.check("cech.solve_coboundary", || {
        let mut m = 0.0f64;
        let mut n = 0;
        for c in &cochains {
            let h = coboundary(c);
            let sol = solve_coboundary(&h).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            m = m.max(coboundary(&sol).max_deviation(&h, per));
            n += per.per_overlap;
        }
        Ok((m, n))
    })
}

/// Random `(ξ, η, connection)` draws for the circle-bundle oracle.
pub const BUNDLE_DRAWS: usize = 20;

fn bundle_suite(rec: &mut Recorder, cover: &Arc<CoveredManifold>) -> Result<(), ConfigError> {
    let config = rec.config;
    let s = config.sampling();
    let b = bundle::random_bundle(cover, config.seed);
    rec.check("bundle.cocycle", || {
        let r = b.cocycle_report(f64::INFINITY, s);
        Ok((r.max_defect, r.n_points))
    })?;
    rec.check("bundle.connection", || {
        let c = bundle::solve_connection(&b, None);
        Ok((c.invariant_residual(s), s.per_overlap))
    })?;
    let light = Sampling::new(config.samples.div_ceil(BUNDLE_DRAWS).max(2), config.seed);
    rec.check("bundle.curvature_defect", || {
        let mut rng = rng_for(config, Suite::Bundle, 1);
        let dim = cover.dim();
        let (mut m, mut n) = (0.0f64, 0);
        for k in 0..BUNDLE_DRAWS {
            let conn = if k % 4 == 0 { bundle::twisted_bundle(cover) } else { bundle::random_connection(cover, rng.gen()) };
            let xi = random_vector_field(dim, 2, 2, 0.5, &mut rng);
            let eta = random_vector_field(dim, 2, 2, 0.5, &mut rng);
            let r = bundle::bundle_curvature_defect(&xi, &eta, &conn, light);
            m = m.max(r.max_deviation);
            n += r.n_points;
        }
        Ok((m, n))
    })
}

fn gerbe_suite(rec: &mut Recorder, b: &CurvingData) -> Result<(), ConfigError> {
    let s = rec.config.sampling();
    rec.check("gerbe.cocycle", || {
        let r = b.conn.gerbe.cocycle_report(f64::INFINITY, s);
        Ok((r.max_defect, r.n_points))
    })?;
    rec.check("gerbe.connective", || Ok((b.conn.invariant_residual(s), s.per_overlap)))?;
    rec.check("gerbe.curving", || Ok((b.invariant_residual(s), s.per_overlap)))?;
    rec.check("gerbe.curvature_overlap", || Ok((b.db_overlap_defect(s), s.per_overlap)))
}

/// Random vector fields per lift identity.
pub const LIFT_DRAWS: usize = 10;
/// Random draws for the L∞ checks.
pub const LINF_TRIALS: usize = 20;

fn light_sampling(config: &SuiteConfig, draws: usize) -> Sampling {
    Sampling::new(config.samples.div_ceil(draws).max(2), config.seed)
}

fn lifts_suite(rec: &mut Recorder, b: &CurvingData) -> Result<(), ConfigError> {
    let config = rec.config;
    let g = &b.conn.gerbe;
    let dim = g.cover().dim();
    let light = light_sampling(config, LIFT_DRAWS);
    let mut rng = rng_for(config, Suite::Lifts, 0);
    let fields: Vec<_> = (0..LIFT_DRAWS).map(|_| random_vector_field(dim, 2, 2, 0.5, &mut rng)).collect();
    rec.check("lifts.solve", || {
        let mut m = 0.0f64;
        for xi in &fields {
            m = m.max(lifts::solve_lift(xi, g).map_err(lift_err)?.invariant_residual(g, light));
        }
        Ok((m, LIFT_DRAWS * light.per_overlap))
    })?;
    rec.check("lifts.morphism", || {
        let mut m = 0.0f64;
        for xi in &fields {
            let l = lifts::solve_lift_with(xi, g, PartitionKind::Standard).map_err(lift_err)?;
            let l2 = lifts::solve_lift_with(xi, g, PartitionKind::Squared).map_err(lift_err)?;
            m = m.max(lifts::find_morphism(&l, &l2).map_err(lift_err)?.invariant_residual(light));
        }
        Ok((m, LIFT_DRAWS * light.per_overlap))
    })?;
    rec.check("lifts.linf", || {
        let r = lifts::linfinity_check(g, LINF_TRIALS, config.seed);
        Ok((r.max_deviation(), r.n_points))
    })?;
    rec.check("lifts.bracket_defect", || {
        let mut m = 0.0f64;
        for w in fields.windows(2) {
            let mor = lifts::bracket_defect_morphism(&w[0], &w[1], b).map_err(lift_err)?;
            m = m.max(mor.invariant_residual(light));
        }
        Ok((m, (LIFT_DRAWS - 1) * light.per_overlap))
    })?;
    rec.check("lifts.splitting_obstruction", || {
        let mut m = 0.0f64;
        let mut n = 0;
        for k in 0..LIFT_DRAWS {
            let (x, y, z) = (&fields[k], &fields[(k + 1) % LIFT_DRAWS], &fields[(k + 3) % LIFT_DRAWS]);
            let r = lifts::splitting_obstruction(x, y, z, b, light);
            m = m.max(r.max_deviation);
            n += r.n_points;
        }
        Ok((m, n))
    })
}

fn conn_lifts_suite(rec: &mut Recorder, b: &CurvingData) -> Result<(), ConfigError> {
    let config = rec.config;
    let conn = &b.conn;
    let dim = conn.cover().dim();
    let light = light_sampling(config, LIFT_DRAWS);
    let mut rng = rng_for(config, Suite::ConnLifts, 0);
    let mut extended = Vec::new();
    rec.check("conn_lifts.extension", || {
        let mut m = 0.0f64;
        for _ in 0..LIFT_DRAWS {
            let xi = random_vector_field(dim, 2, 2, 0.5, &mut rng);
            let l = lifts::solve_lift(&xi, &conn.gerbe).map_err(lift_err)?;
            let c = cl::extend_to_connective(&l, conn).map_err(lift_err)?;
            m = m.max(c.invariant_residual(conn, light));
            extended.push(c);
        }
        Ok((m, LIFT_DRAWS * light.per_overlap))
    })?;
    rec.check("conn_lifts.torsor", || {
        let mut m = 0.0f64;
        for c in &extended {
            let alpha = TrigForm::random(dim, 1, 2, 2, 0.3, &mut rng).to_form(dim);
            let c2 = cl::torsor_action(c, &alpha);
            let d = cl::torsor_difference(c, &c2, light).map_err(lift_err)?;
            let (back, _, _) = crate::cech::sup_over_overlaps(c.cover(), 0, light, |_, ctx| d.alpha.sub(&alpha).max_abs(ctx));
            m = m.max(d.overlap_defect).max(d.uniqueness_defect).max(back);
        }
        Ok((m, LIFT_DRAWS * light.per_overlap))
    })?;
    rec.check("conn_lifts.linf", || {
        let r = cl::conn_linfinity_check(conn, LINF_TRIALS, config.seed);
        Ok((r.max_deviation(), r.n_points))
    })
}

/// Random draws for the Courant identities.
pub const COURANT_DRAWS: usize = 20;
/// Random draws for the L_E check.
pub const LE_TRIALS: usize = 10;

fn section_diff(a: &ca::CourantSection, b: &ca::CourantSection, s: Sampling) -> f64 {
    a.linear_combination_with(b, -1.0).sup_norm(s).0
}

trait SectionExt {
    fn linear_combination_with(&self, other: &ca::CourantSection, k: f64) -> ca::CourantSection;
}

impl SectionExt for ca::CourantSection {
    fn linear_combination_with(&self, other: &ca::CourantSection, k: f64) -> ca::CourantSection {
        ca::CourantSection::linear_combination(&[(1.0, self), (k, other)])
    }
}

fn courant_suite(rec: &mut Recorder, b: &CurvingData) -> Result<(), ConfigError> {
    let config = rec.config;
    let conn = &b.conn;
    let dim = conn.cover().dim();
    let light = light_sampling(config, COURANT_DRAWS);
    let mut rng = rng_for(config, Suite::Courant, 0);
    let sections: Vec<ca::CourantSection> = (0..COURANT_DRAWS + 2).map(|_| ca::random_section(conn, &mut rng)).collect();
    let triple = |k: usize| (&sections[k], &sections[k + 1], &sections[k + 2]);
    rec.check("courant.bracket_invariant", || {
        let mut m = 0.0f64;
        for k in 0..COURANT_DRAWS {
            let (x, y, _) = triple(k);
            m = m.max(ca::courant_bracket(x, y).invariant_residual(conn, light));
        }
        Ok((m, COURANT_DRAWS * light.per_overlap))
    })?;
    rec.check("courant.jacobi", || {
        let (mut m, mut n) = (0.0f64, 0);
        for k in 0..COURANT_DRAWS {
            let (x, y, z) = triple(k);
            let r = ca::jacobi_defect(x, y, z, light);
            m = m.max(r.form_deviation).max(r.vector_part);
            n += r.n_points;
        }
        Ok((m, n))
    })?;
    rec.check("courant.pairing_patch", || {
        let mut m = 0.0f64;
        for k in 0..COURANT_DRAWS {
            let (x, y, _) = triple(k);
            m = m.max(ca::pairing_patch_defect(x, y, light));
        }
        Ok((m, COURANT_DRAWS * light.per_overlap))
    })?;
    rec.check("courant.bfield", || {
        let mut m = 0.0f64;
        for k in 0..COURANT_DRAWS / 2 {
            let beta = TrigForm::random(dim, 1, 2, 2, 0.3, &mut rng).to_form(dim);
            let bf = beta.d();
            let (x, y, _) = triple(k);
            let ex = ca::bfield_transform(x, &bf).map_err(courant_err)?;
            let ey = ca::bfield_transform(y, &bf).map_err(courant_err)?;
            let lhs = ca::courant_bracket(&ex, &ey);
            let rhs = ca::bfield_transform(&ca::courant_bracket(x, y), &bf).map_err(courant_err)?;
            m = m.max(section_diff(&lhs, &rhs, light));
        }
        Ok((m, COURANT_DRAWS / 2 * light.per_overlap))
    })?;
    let mut twist = (0.0f64, 0usize);
    rec.check("courant.splitting_pairing", || {
        let (mut pairing, mut n) = (0.0f64, 0);
        for _ in 0..LIFT_DRAWS {
            let x = (random_vector_field(dim, 2, 2, 0.5, &mut rng), TrigForm::random(dim, 1, 2, 2, 0.5, &mut rng).to_form(dim));
            let y = (random_vector_field(dim, 2, 2, 0.5, &mut rng), TrigForm::random(dim, 1, 2, 2, 0.5, &mut rng).to_form(dim));
            let r = ca::splitting_check((&x.0, &x.1), (&y.0, &y.1), b, light).map_err(courant_err)?;
            pairing = pairing.max(r.pairing);
            twist.0 = twist.0.max(r.twist);
            n += r.n_points;
        }
        twist.1 = n;
        Ok((pairing, n))
    })?;
    rec.check("courant.splitting_twist", || Ok(twist))?;
    rec.check("courant.le_linf", || {
        let r = ca::le_algebra_check(conn, LE_TRIALS, config.seed);
        Ok((r.max_deviation(), r.n_points))
    })?;
    let mut second = (0.0f64, 0usize);
    rec.check("courant.phi_condition_1", || {
        let (mut first, mut n) = (0.0f64, 0);
        for k in 0..COURANT_DRAWS {
            let (x, y, z) = triple(k);
            let r = ca::phi_check(x, y, z, conn, light);
            first = first.max(r.condition_1).max(r.image);
            second.0 = second.0.max(r.condition_2);
            n += r.n_points;
        }
        second.1 = n;
        Ok((first, n))
    })?;
    rec.check("courant.phi_condition_2", || Ok(second))
}

fn flows_suite(rec: &mut Recorder, dim: usize) -> Result<(), ConfigError> {
    let config = rec.config;
    let flow = flows::preset_flow(dim, config.seed)?;
    let start = Instant::now();
    let r = flows::flow_checks(&flow, config.seed, config.flow_points)?;
    let per = start.elapsed().as_secs_f64() * 1e3 / 9.0;
    let n = r.n_points;
    for (name, v) in [
        ("flows.group_law", r.group_law),
        ("flows.velocity", r.velocity),
        ("flows.dt_it", r.dt_it),
        ("flows.it_dt", r.it_dt),
        ("flows.delta_i", r.delta_i),
        ("flows.i_delta", r.i_delta),
        ("flows.trivialize", r.trivialize),
        ("flows.cocycle", r.cocycle),
        ("flows.automorphism", r.automorphism),
    ] {
        rec.check(name, || Ok((v, n)))?;
        rec.records.last_mut().unwrap().wall_time_ms = per;
    }
    Ok(())
}

/// Loads a dataset and runs the suites on its gerbe data. The dataset's
/// cover parameters replace those of the configuration.
pub fn verify_dataset(config: &SuiteConfig, dataset: &GerbeDataset) -> Result<Report, ConfigError> {
    let mut config = config.clone();
    config.splits = dataset.cover.splits;
    config.margin = dataset.cover.margin;
    config.preset = match dataset.cover.dim {
        1 => Preset::T1,
        2 => Preset::T2,
        3 => Preset::T3,
        d => return Err(ConfigError::Invalid(format!("dataset dimension {d} is not supported"))),
    };
    let data = dataset.load()?;
    run_suites(&config, Some(&data))
}
