//! Named verification suites. Each produces a [`SuiteReport`] listing its checks
//! with the measured values; reports are deterministic for fixed options.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::catalog::parse_generator_in;
use crate::cplane::{CanonicalDomain, Point};
use crate::curves::{build_proof_domain, envelope_curve, monotone_envelope, Polyline, ProofDomain};
use crate::error::{Error, Result};
use crate::flow::{integrate, ClosedForm, ClosedFormFlow, IntegratorConfig};
use crate::generators::{
    halfplane_bound_profile, GeneratorSpec, HalfPlaneEntry, HalfPlaneGrid,
};
use crate::hmeasure::{
    case_seed, lavrentiev_experiment, rho_grid, subordination_check, BoundarySubset, JordanDomain,
    LavrentievCase, SubordinationResult,
};
use crate::rates::{
    geometric_range, geometric_t_seq, nonuniform_witness, rate_report, sharpness_curve, sup_deviation,
    sup_deviation_with, verify_sqrt_theorem, SupSamplerConfig,
};

type P = Point<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Suite {
    #[serde(rename = "thm1.1")]
    Thm11,
    #[serde(rename = "thm4.7")]
    Thm47,
    #[serde(rename = "thm5.1")]
    Thm51,
    #[serde(rename = "ex4.8")]
    Ex48,
    #[serde(rename = "ex5.4")]
    Ex54,
    #[serde(rename = "lavrentiev")]
    Lavrentiev,
    #[serde(rename = "envelope")]
    Envelope,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Thm11, Suite::Thm47, Suite::Thm51, Suite::Ex48, Suite::Ex54, Suite::Lavrentiev, Suite::Envelope];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Thm11 => "thm1.1",
            Suite::Thm47 => "thm4.7",
            Suite::Thm51 => "thm5.1",
            Suite::Ex48 => "ex4.8",
            Suite::Ex54 => "ex5.4",
            Suite::Lavrentiev => "lavrentiev",
            Suite::Envelope => "envelope",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownId(format!("suite '{s}'")))
    }
}

/// Overrides for suite defaults. `None` keeps the suite's own choice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOptions {
    pub generator: Option<String>,
    pub ts: Option<Vec<f64>>,
    pub window: Option<f64>,
    pub k_max: Option<u32>,
    pub count: Option<usize>,
    pub walks: Option<usize>,
    pub seed: u64,
    pub a: f64,
    pub rel_tol: Option<f64>,
    /// Directory against which relative `file=` paths in generator ids resolve.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            generator: None,
            ts: None,
            window: None,
            k_max: None,
            count: None,
            walks: None,
            seed: 0,
            a: 1.0,
            rel_tol: None,
            base_dir: None,
        }
    }
}

impl SuiteOptions {
    fn integrator(&self) -> Result<IntegratorConfig<f64>> {
        match self.rel_tol {
            Some(r) => {
                let d = IntegratorConfig::default();
                IntegratorConfig::new(r, d.abs_tol, d.max_steps, d.boundary_guard)
            }
            None => Ok(IntegratorConfig::default()),
        }
    }

    fn generator_or(&self, default: &str) -> Result<(String, GeneratorSpec<f64>)> {
        let id = self.generator.clone().unwrap_or_else(|| default.to_string());
        let g = parse_generator_in(&id, self.base_dir.as_deref())?;
        Ok((id, g))
    }

    fn ts_or(&self, default: Vec<f64>) -> Vec<f64> {
        self.ts.clone().unwrap_or(default)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: Value,
}

fn check(name: &str, pass: bool, measured: Value) -> Check {
    Check { name: name.to_string(), pass, measured }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub options: SuiteOptions,
    pub checks: Vec<Check>,
    pub data: Value,
}

impl SuiteReport {
    fn new(suite: Suite, options: &SuiteOptions, checks: Vec<Check>, data: Value) -> Self {
        SuiteReport {
            suite: suite.name().to_string(),
            pass: checks.iter().all(|c| c.pass),
            options: options.clone(),
            checks,
            data,
        }
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Pretty JSON of the report body (no timestamp).
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `{"header": {...}, "report": {...}}` with the caller's header fields kept apart from the payload.
    pub fn to_json_with_header(&self, header: Value) -> Result<String> {
        Ok(serde_json::to_string_pretty(&json!({ "header": header, "report": self }))?)
    }
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<SuiteReport> {
    match suite {
        Suite::Thm11 => thm11(opts),
        Suite::Thm47 => thm47(opts),
        Suite::Thm51 => thm51(opts),
        Suite::Ex48 => ex48(opts),
        Suite::Ex54 => ex54(opts),
        Suite::Lavrentiev => lavrentiev(opts),
        Suite::Envelope => envelope(opts),
    }
}

pub const SHARPNESS_ID: &str = "bp:tau=1,p=recip";

fn disc_sampler(opts: &SuiteOptions) -> Result<SupSamplerConfig<f64>> {
    SupSamplerConfig::disc(opts.k_max.unwrap_or(24), opts.count.unwrap_or(64))
}

fn thm11(opts: &SuiteOptions) -> Result<SuiteReport> {
    let (id, g) = opts.generator_or(SHARPNESS_ID)?;
    if !g.is_disc() {
        return Err(Error::Precondition(format!("thm1.1 needs a disc generator, got {id}")));
    }
    let ts = opts.ts_or(geometric_t_seq(6, 18));
    let r = verify_sqrt_theorem(&g, &ts, &disc_sampler(opts)?, &opts.integrator()?)?;
    let checks = vec![
        check(
            "sup <= 1.1 C sqrt(t) on every row",
            r.bound_holds,
            json!({ "c": r.report.fit.c, "worst_ratio": r.worst_ratio }),
        ),
        check("fitted alpha >= 0.45", r.alpha_ok, json!({ "alpha": r.report.fit.alpha, "rms": r.report.fit.rms })),
    ];
    Ok(SuiteReport::new(Suite::Thm11, opts, checks, json!({ "generator": id, "rate": r.report })))
}

fn thm47(opts: &SuiteOptions) -> Result<SuiteReport> {
    let (id, g) = opts.generator_or("hp:dirichlet:c0=1,a2=1")?;
    let GeneratorSpec::HalfPlane { entry: HalfPlaneEntry::Dirichlet { series } } = &g else {
        return Err(Error::Precondition(format!("thm4.7 needs a Dirichlet-series generator, got {id}")));
    };
    let grid = HalfPlaneGrid::new(geometric_t_seq(0, 10), 8, opts.window.unwrap_or(1e4), opts.count.unwrap_or(401))?;
    let class_g = crate::generators::check_class_g_generator(series, &grid)?;
    let m = series.sup_bound(0.0);
    let window = opts.window.unwrap_or(1e4);
    let sampler = SupSamplerConfig::half_plane(opts.k_max.unwrap_or(20), opts.count.unwrap_or(401), window)?;
    let ts = opts.ts_or((0..10).map(|j| 1e-2 * 0.5f64.powi(j)).collect());
    let report = rate_report(&g, &ts, &sampler, &opts.integrator()?)?;
    let worst = report.rows.iter().fold(0.0f64, |w, r| w.max(r.sup / r.t));
    let bound_ok = !m.is_finite() || worst <= 1.05 * m;
    let decreasing = report.rows.windows(2).all(|w| w[1].sup <= w[0].sup);
    let checks = vec![
        check(
            "Re H >= 0 on the sample",
            class_g.maps_into_closed_half_plane,
            json!({ "points": class_g.points_checked, "violations": class_g.violations.len() }),
        ),
        check(
            "sup <= 1.05 M t with M = |c0| + sum |a_n|",
            bound_ok,
            json!({ "m": if m.is_finite() { json!(m) } else { json!("unbounded") }, "max_sup_over_t": worst }),
        ),
        check(
            "sup decreases with t",
            decreasing,
            json!(report.rows.iter().map(|r| [r.t, r.sup]).collect::<Vec<_>>()),
        ),
    ];
    Ok(SuiteReport::new(Suite::Thm47, opts, checks, json!({ "generator": id, "window": window, "rate": report })))
}

fn thm51(opts: &SuiteOptions) -> Result<SuiteReport> {
    let (id, g) = opts.generator_or("hp:cayley:p=recip")?;
    if g.is_disc() {
        return Err(Error::Precondition(format!("thm5.1 needs a half-plane generator, got {id}")));
    }
    let profile = halfplane_bound_profile(&g, &HalfPlaneGrid::standard())?;
    let window = opts.window.unwrap_or(10.0);
    let sampler = SupSamplerConfig::half_plane(opts.k_max.unwrap_or(24), opts.count.unwrap_or(201), window)?;
    let ts = opts.ts_or(geometric_range(1e-6, 1e-2, 9)?);
    let report = rate_report(&g, &ts, &sampler, &opts.integrator()?)?;
    let a_hat = report.rows.iter().fold(0.0f64, |m, r| m.max(r.sup / r.t.sqrt()));
    let checks = vec![
        check(
            "sup |H| <= K/eps on the profile",
            profile.bounded && profile.k_hat.is_finite(),
            json!({ "k_hat": profile.k_hat, "bounded": profile.bounded, "window": profile.window }),
        ),
        check("log-log slope >= 0.45", report.fit.alpha >= 0.45, json!({ "alpha": report.fit.alpha, "c": report.fit.c })),
    ];
    let data = json!({
        "generator": id,
        "profile": profile,
        "rate": report,
        "a_hat": a_hat,
        "largest_t_tested": ts.iter().cloned().fold(0.0, f64::max),
    });
    Ok(SuiteReport::new(Suite::Thm51, opts, checks, data))
}

fn ex48(opts: &SuiteOptions) -> Result<SuiteReport> {
    let integ = opts.integrator()?;
    let t = opts.ts.as_ref().and_then(|v| v.first().copied()).unwrap_or(0.1);
    let rows = nonuniform_witness(&[t], &[100.0, 1e3, 1e4], &integ)?;
    let agree = rows.iter().all(|r| (r.closed - r.numeric).abs() <= 1e-8 * r.closed.max(1.0));
    let at = |r: f64| rows.iter().find(|w| w.r == r).map(|w| w.closed).unwrap_or(f64::NAN);
    let (d100, d1e4) = (at(100.0), at(1e4));
    let expect = |r: f64| t * r.sqrt();
    let phi1 = ClosedForm::SqrtFlow.eval(P::new(1.0, 0.0), 1.0)?;
    let cfg = SupSamplerConfig::half_plane(opts.k_max.unwrap_or(8), opts.count.unwrap_or(101), opts.window.unwrap_or(1e4))?;
    let sup = sup_deviation_with(&ClosedFormFlow(ClosedForm::SqrtFlow), t, &cfg)?;
    let mut scaling = Vec::new();
    for &tt in &[1e-3f64, 1e-2, 1e-1] {
        for &r in &[1e4f64, 1e6, 1e8] {
            let s = sup_deviation_with(&ClosedFormFlow(ClosedForm::SqrtFlow), tt, &SupSamplerConfig::half_plane(4, 33, r)?)?;
            scaling.push((tt, r, s.sup / (tt * r.sqrt())));
        }
    }
    let scaling_ok = scaling.iter().all(|&(_, _, q)| (q - 1.0).abs() <= 0.05);
    let checks = vec![
        check("Phi_1(1) = 2.25", phi1 == P::new(2.25, 0.0), json!([phi1.re, phi1.im])),
        check("closed form and integration agree", agree, json!(rows)),
        check("deviation at R=100 within 1% of t sqrt(R)", (d100 / expect(100.0) - 1.0).abs() <= 0.01, json!(d100)),
        check("deviation at R=1e4 within 1% of t sqrt(R)", (d1e4 / expect(1e4) - 1.0).abs() <= 0.01, json!(d1e4)),
        check("windowed sup attained on the window rim", sup.window_edge, json!({ "sup": sup.sup, "argmax": [sup.argmax.re, sup.argmax.im] })),
        check("sup scales like t sqrt(R) within 5%", scaling_ok, json!(scaling)),
    ];
    Ok(SuiteReport::new(Suite::Ex48, opts, checks, json!({ "t": t })))
}

fn ex54(opts: &SuiteOptions) -> Result<SuiteReport> {
    let integ = opts.integrator()?;
    let g = GeneratorSpec::sharpness_example();
    let lb_ts: Vec<f64> = (3..=8).map(|k| 0.25f64.powi(k)).collect();
    let rows = sharpness_curve(&lb_ts, 64, &integ)?;
    let lb_ok = rows.iter().all(|r| r.lower_bound >= r.sqrt_t);
    let eq_ok = rows.iter().all(|r| (r.at_point - r.sqrt_t).abs() <= 1e-12);
    let cmp_ok = rows.iter().all(|r| r.flow_margin >= -1e-6);
    let sampler = disc_sampler(opts)?;
    let measured: Vec<(f64, f64)> = lb_ts
        .iter()
        .map(|&t| sup_deviation(&g, t, &sampler, &integ).map(|s| (t, s.sup)))
        .collect::<Result<_>>()?;
    let measured_ok = measured.iter().all(|&(t, s)| s >= t.sqrt());
    let ts = opts.ts_or(geometric_t_seq(6, 18));
    let rate = rate_report(&g, &ts, &sampler, &integ)?;
    let alpha = rate.fit.alpha;
    let checks = vec![
        check("alpha in [0.45, 0.55]", (0.45..=0.55).contains(&alpha), json!({ "alpha": alpha, "c": rate.fit.c })),
        check("sup >= sqrt(t)", lb_ok, json!(rows.iter().map(|r| [r.t, r.lower_bound, r.sqrt_t]).collect::<Vec<_>>())),
        check("equality at x = sqrt(t)/2 - 1", eq_ok, json!(rows.iter().map(|r| r.at_point - r.sqrt_t).collect::<Vec<_>>())),
        check("Phi_t(x) >= y_x(t) - 1e-6", cmp_ok, json!(rows.iter().map(|r| r.flow_margin).collect::<Vec<_>>())),
        check("measured lattice sup >= sqrt(t)", measured_ok, json!(measured)),
    ];
    Ok(SuiteReport::new(Suite::Ex54, opts, checks, json!({ "generator": SHARPNESS_ID, "rate": rate })))
}

/// A random componentwise non-decreasing polyline from `(x0, y_start)` with `m` steps.
fn random_monotone(rng: &mut ChaCha8Rng, x0: f64, width: f64, y_start: f64, height: f64, m: usize) -> Vec<P> {
    let dx: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    let dy: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 0.05).collect();
    let (sx, sy) = (dx.iter().sum::<f64>(), dy.iter().sum::<f64>());
    let mut p = P::new(x0, y_start);
    let mut out = vec![p];
    for i in 0..m {
        p = P::new(p.re + width * dx[i] / sx, p.im + height * dy[i] / sy);
        out.push(p);
    }
    out
}

/// Envelope of a square-root flow trajectory mapped affinely into `[x0, x0 + width] x [y0 - 0.1a, y0 + 1.1a]`.
fn flow_envelope(start_im: f64, corner: P, a: f64, width: f64) -> Result<Polyline<f64>> {
    let traj = integrate(&GeneratorSpec::half_plane_sqrt(), P::new(0.05, start_im), 2.0, &IntegratorConfig::default())?;
    let env = envelope_curve(&traj)?;
    let (s, e) = (env.start(), env.end());
    let mapped = env
        .vertices()
        .iter()
        .map(|z| {
            P::new(
                corner.re + (z.re - s.re) / (e.re - s.re) * width,
                corner.im - 0.1 * a + (z.im - s.im) / (e.im - s.im) * 1.2 * a,
            )
        })
        .collect();
    Polyline::dedup(mapped)
}

/// `count` proof domains in squares of side `a`: half from square-root flow envelopes,
/// half from random monotone curves, all confined to the left 40% of the square.
pub fn proof_domain_family(a: f64, count: usize, seed: u64) -> Result<Vec<ProofDomain<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let corner = P::new(rng.gen_range(-2.0..2.0) * a, rng.gen_range(-2.0..2.0) * a);
            let width = rng.gen_range(0.05..0.4) * a;
            let x0 = corner.re + rng.gen_range(0.0..(0.4 * a - width));
            let env = if i % 2 == 0 {
                let e = flow_envelope(rng.gen_range(0.2..3.0), corner, a, width)?;
                Polyline::new(e.vertices().iter().map(|z| z + P::new(x0 - corner.re, 0.0)).collect())?
            } else {
                let m = rng.gen_range(8..80);
                Polyline::dedup(random_monotone(&mut rng, x0, width, corner.im - 0.05 * a, 1.1 * a, m))?
            };
            build_proof_domain(&CanonicalDomain::square(corner, a)?, &env)
        })
        .collect()
}

/// Subsets of length `r a` for every `r` in the grid: centred at the boundary point
/// nearest to `w`, and centred on the envelope.
fn lavrentiev_subsets(d: &ProofDomain<f64>, w: P) -> Result<Vec<BoundarySubset<f64>>> {
    let dom = &d.domain;
    let near = dom.nearest(w);
    let s_near = dom.arclength_position(near.segment, near.t);
    let env_arc = d.envelope.arcs();
    let first = env_arc[0];
    let last = env_arc[env_arc.len() - 1];
    let env_start = dom.arclength_position(first.segment, first.t0);
    let env_end = dom.arclength_position(last.segment, last.t1);
    let s_env = 0.5 * (env_start + env_end);
    let mut out = vec![BoundarySubset::whole(dom)];
    for r in rho_grid() {
        let len = r * d.side;
        out.push(BoundarySubset::from_arclength(dom, s_near - len / 2.0, len)?);
        out.push(BoundarySubset::from_arclength(dom, s_env - len / 2.0, len)?);
    }
    Ok(out)
}

pub fn lavrentiev_cases(a: f64, count: usize, seed: u64) -> Result<Vec<LavrentievCase<f64>>> {
    proof_domain_family(a, count, seed)?
        .into_iter()
        .map(|d| {
            let w = d.corner + P::new(0.7 * a, 0.5 * a);
            let subsets = lavrentiev_subsets(&d, w)?;
            Ok(LavrentievCase { domain: d.domain, point: w, subsets })
        })
        .collect()
}

/// One nested-domain instance for the subordination comparison.
#[derive(Debug, Clone)]
pub struct SubordinationCase {
    pub name: String,
    pub inner: JordanDomain<f64>,
    pub outer: JordanDomain<f64>,
    pub point: P,
    pub gamma: BoundarySubset<f64>,
}

/// Ten nested instances inside the unit square seen from its centre.
pub fn subordination_family(seed: u64) -> Result<Vec<SubordinationCase>> {
    let outer = JordanDomain::square(P::new(0.0, 0.0), 1.0)?;
    let w = P::new(0.5, 0.5);
    // square segments: 0 bottom, 1 right, 2 top, 3 left
    let left = BoundarySubset::segments(&outer, [3]);
    let mut cases = vec![SubordinationCase {
        name: "identical".into(),
        inner: outer.clone(),
        outer: outer.clone(),
        point: w,
        gamma: left.clone(),
    }];
    for c in [0.1, 0.2, 0.25, 0.3, 0.45] {
        cases.push(SubordinationCase {
            name: format!("vertical cut at {c}"),
            inner: JordanDomain::rectangle(P::new(c, 0.0), 1.0 - c, 1.0)?,
            outer: outer.clone(),
            point: w,
            gamma: left.clone(),
        });
    }
    for (i, d) in proof_domain_family(1.0, 2, seed)?.into_iter().enumerate() {
        let shift = P::new(0.0, 0.0) - d.corner;
        let inner = JordanDomain::new(d.domain.vertices().iter().map(|z| z + shift).collect())?;
        cases.push(SubordinationCase { name: format!("envelope cut {i}"), inner, outer: outer.clone(), point: w, gamma: left.clone() });
    }
    cases.push(SubordinationCase {
        name: "disc inside square".into(),
        inner: JordanDomain::regular_polygon(w, 0.3, 128)?,
        outer: outer.clone(),
        point: w,
        gamma: left.clone(),
    });
    let corner_gamma = left.union(&BoundarySubset::from_arclength(&outer, 0.0, 0.25)?);
    cases.push(SubordinationCase {
        name: "cut at 0.25, left edge and bottom corner".into(),
        inner: JordanDomain::rectangle(P::new(0.25, 0.0), 0.75, 1.0)?,
        outer,
        point: w,
        gamma: corner_gamma,
    });
    Ok(cases)
}

pub fn run_subordination(cases: &[SubordinationCase], n: usize, seed: u64) -> Result<Vec<SubordinationResult>> {
    cases
        .iter()
        .enumerate()
        .map(|(i, c)| subordination_check(&c.inner, &c.outer, c.point, &c.gamma, None, n, case_seed(seed, i)))
        .collect()
}

pub const LAVRENTIEV_FAMILY_SIZE: usize = 20;

fn lavrentiev(opts: &SuiteOptions) -> Result<SuiteReport> {
    let a = opts.a;
    let n = opts.walks.unwrap_or(100_000);
    let cases = lavrentiev_cases(a, LAVRENTIEV_FAMILY_SIZE, opts.seed)?;
    let report = lavrentiev_experiment(a, &cases, n, opts.seed)?;
    let small: Vec<_> = report.rows.iter().filter(|r| r.ratio <= 0.02 + 1e-9).collect();
    let small_ok = small.iter().all(|r| r.below);
    let whole_ok = report.rows.iter().filter(|r| r.ratio > 3.0).all(|r| r.omega == 1.0);
    let rho_ok = report.rho_hat.is_some_and(|r| r >= 0.02);

    let sub_cases = subordination_family(opts.seed)?;
    let sub = run_subordination(&sub_cases, n, opts.seed)?;
    let mid = sub_cases.iter().position(|c| c.name == "vertical cut at 0.25").map(|i| sub[i].clone());
    let mid_ok = mid.as_ref().is_some_and(|m| m.inner.value + 3.0 * m.inner.stderr >= 0.25);
    let sub_rows: Vec<Value> = sub_cases
        .iter()
        .zip(&sub)
        .map(|(c, r)| json!({ "name": c.name, "result": r }))
        .collect();
    let checks = vec![
        check(
            "omega + 3 stderr < 1/8 whenever l(A) <= 0.02a",
            small_ok,
            json!({ "rows": small.len(), "max_omega": small.iter().map(|r| r.omega).fold(0.0, f64::max) }),
        ),
        check("rho_hat >= 0.02", rho_ok, json!(report.rho_hat)),
        check("whole boundary has measure 1", whole_ok, json!(null)),
        check("subordination on nested domains", sub.iter().all(|r| r.pass), json!(sub.iter().filter(|r| r.pass).count())),
        check("mid-cut omega >= 1/4", mid_ok, json!(mid.map(|m| m.inner))),
    ];
    let data = json!({ "lavrentiev": report, "subordination": sub_rows });
    Ok(SuiteReport::new(Suite::Lavrentiev, opts, checks, data))
}

/// Max pairwise difference quotient `|f_i - f_j| / |x_i - x_j|`.
pub fn lipschitz_constant(s: &[(f64, f64)]) -> f64 {
    let mut k = 0.0f64;
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let dx = (s[j].0 - s[i].0).abs();
            if dx > 0.0 {
                k = k.max((s[j].1 - s[i].1).abs() / dx);
            }
        }
    }
    k
}

/// The O(n^2) suffix-minimum oracle.
pub fn brute_envelope(f: &[(f64, f64)]) -> Vec<(f64, f64)> {
    (0..f.len())
        .map(|i| (f[i].0, f[i..].iter().map(|p| p.1).fold(f64::INFINITY, f64::min)))
        .collect()
}

pub const ENVELOPE_TRIALS: usize = 1000;

fn envelope(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut oracle_mismatch = 0;
    for _ in 0..ENVELOPE_TRIALS {
        let n = rng.gen_range(2..200);
        let mut x = 0.0;
        let f: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                x += rng.gen_range(0.0..1.0);
                (x, rng.gen_range(-10.0..10.0))
            })
            .collect();
        if monotone_envelope(&f)? != brute_envelope(&f) {
            oracle_mismatch += 1;
        }
    }
    let mut lipschitz_violations = 0;
    let mut worst_ratio = 0.0f64;
    for _ in 0..ENVELOPE_TRIALS {
        let k = rng.gen_range(0.1..10.0);
        let n = rng.gen_range(2..60);
        let mut x = 0.0;
        let mut y = rng.gen_range(-1.0..1.0);
        let f: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                if i > 0 {
                    let dx = rng.gen_range(0.01..1.0);
                    x += dx;
                    y += k * dx * rng.gen_range(-1.0..1.0);
                }
                (x, y)
            })
            .collect();
        let kin = lipschitz_constant(&f);
        let kout = lipschitz_constant(&monotone_envelope(&f)?);
        worst_ratio = worst_ratio.max(kout / kin.max(f64::MIN_POSITIVE));
        if kout > kin * (1.0 + 1e-12) {
            lipschitz_violations += 1;
        }
    }
    let mut domains = proof_domain_family(opts.a, 100, opts.seed)?;
    let sides: Vec<f64> = domains.iter().map(|d| d.side).collect();
    for (i, corner) in [(0usize, P::new(0.0, 0.0)), (1, P::new(3.0, -1.0))] {
        let side = opts.a * (1.0 + i as f64);
        let left = Polyline::new(vec![corner - P::new(0.0, 0.5), corner + P::new(0.0, side + 0.5)])?;
        domains.push(build_proof_domain(&CanonicalDomain::square(corner, side)?, &left)?);
    }
    let _ = sides;
    let worst_len = domains
        .iter()
        .map(|d| d.domain.perimeter() / (4.0 * d.side))
        .fold(0.0f64, f64::max);
    let checks = vec![
        check("envelope equals suffix-min oracle", oracle_mismatch == 0, json!({ "trials": ENVELOPE_TRIALS, "mismatches": oracle_mismatch })),
        check(
            "Lipschitz constant carries over",
            lipschitz_violations == 0,
            json!({ "trials": ENVELOPE_TRIALS, "violations": lipschitz_violations, "worst_ratio": worst_ratio }),
        ),
        check(
            "proof-domain boundary length <= 4 side",
            worst_len <= 1.0 + 1e-12,
            json!({ "instances": domains.len(), "max_length_over_4a": worst_len }),
        ),
    ];
    Ok(SuiteReport::new(Suite::Envelope, opts, checks, json!(null)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::parse(s.name()).unwrap(), s);
        }
        assert!(matches!(Suite::parse("thm9"), Err(Error::UnknownId(_))));
    }

    #[test]
    fn family_respects_preconditions() {
        let cases = lavrentiev_cases(1.0, 6, 3).unwrap();
        for c in &cases {
            assert!(c.domain.perimeter() <= 4.0 + 1e-12);
            assert!(c.domain.distance_to_boundary(c.point) >= 0.25);
        }
    }

    #[test]
    fn envelope_suite_passes_and_is_deterministic() {
        let opts = SuiteOptions { seed: 5, ..Default::default() };
        let a = run_suite(Suite::Envelope, &opts).unwrap();
        assert!(a.pass, "{:?}", a.failing());
        let b = run_suite(Suite::Envelope, &opts).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn ex48_suite_passes() {
        let r = run_suite(Suite::Ex48, &SuiteOptions::default()).unwrap();
        assert!(r.pass, "{}", r.to_json().unwrap());
    }

    #[test]
    fn wrong_generator_kind_is_rejected() {
        let opts = SuiteOptions { generator: Some("hp:sqrt".into()), ..Default::default() };
        assert!(matches!(run_suite(Suite::Thm11, &opts), Err(Error::Precondition(_))));
        assert!(matches!(run_suite(Suite::Thm47, &opts), Err(Error::Precondition(_))));
        let opts = SuiteOptions { generator: Some("nope".into()), ..Default::default() };
        assert!(matches!(run_suite(Suite::Thm11, &opts), Err(Error::UnknownId(_))));
    }
}
