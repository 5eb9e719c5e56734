//! Sup-deviation estimates `sup |Phi_t(z) - z|` on sample lattices, power-law
//! fits, and the closed-form comparisons around the square-root rate.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::cplane::{fmt_point, CanonicalDomain, Point};
use crate::error::{Error, Result};
use crate::flow::{advance, ClosedForm, FlowMap, IntegratorConfig, NumericFlow};
use crate::generators::GeneratorSpec;
use crate::io::fmt17;
use crate::scalar::Scalar;

/// Sample lattice for sup estimates.
///
/// Disc: the centre plus radii `1 - 2^-k`, `k = 1..=k_max`, at `count` angles.
/// Half-plane `Re > offset`: real parts `offset + re_top * 2^-k`, `k = 0..=k_max`,
/// times `count` equispaced imaginary parts over `[-window, window]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupSamplerConfig<T> {
    pub domain: CanonicalDomain<T>,
    pub k_max: u32,
    pub count: usize,
    pub window: Option<T>,
    pub re_top: T,
}

impl<T: Scalar> SupSamplerConfig<T> {
    pub fn disc(k_max: u32, angular: usize) -> Result<Self> {
        let cfg = SupSamplerConfig { domain: CanonicalDomain::UnitDisc, k_max, count: angular, window: None, re_top: T::one() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn half_plane(k_max: u32, im_count: usize, window: T) -> Result<Self> {
        let cfg = SupSamplerConfig {
            domain: CanonicalDomain::RightHalfPlane { offset: T::zero() },
            k_max,
            count: im_count,
            window: Some(window),
            re_top: T::one(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_re_top(mut self, re_top: T) -> Result<Self> {
        self.re_top = re_top;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            return Err(Error::InvalidParameter("k_max must be >= 1".into()));
        }
        if self.count < 8 {
            return Err(Error::InvalidParameter(format!("lattice counts must be >= 8, got {}", self.count)));
        }
        match self.domain {
            CanonicalDomain::UnitDisc => Ok(()),
            CanonicalDomain::RightHalfPlane { .. } => match self.window {
                Some(r) if r > T::zero() && self.re_top > T::zero() => Ok(()),
                _ => Err(Error::InvalidParameter("half-plane lattice needs window R > 0 and re_top > 0".into())),
            },
            other => Err(Error::InvalidParameter(format!("no sup lattice for {other}"))),
        }
    }

    pub fn points(&self) -> Vec<Point<T>> {
        match (self.domain, self.window) {
            (CanonicalDomain::RightHalfPlane { offset }, Some(r)) => {
                let n = self.count;
                let ims: Vec<T> = (0..n)
                    .map(|j| r * (T::lit(2.0) * T::from_usize_lossy(j) / T::from_usize_lossy(n - 1) - T::one()))
                    .collect();
                let mut out = Vec::with_capacity((self.k_max as usize + 1) * n);
                for k in 0..=self.k_max {
                    let re = offset + self.re_top * T::lit(0.5f64.powi(k as i32));
                    out.extend(ims.iter().map(|&y| Point::new(re, y)));
                }
                out
            }
            _ => crate::generators::DiscGrid { k_max: self.k_max, angular: self.count }.points(),
        }
    }

    /// Whether `z` lies on the outer rim of a half-plane window.
    fn on_window_edge(&self, z: Point<T>) -> bool {
        match (self.domain, self.window) {
            (CanonicalDomain::RightHalfPlane { offset }, Some(r)) => {
                z.im.abs() >= r || z.re >= offset + self.re_top
            }
            _ => false,
        }
    }
}

/// A lattice sup, its maximiser, and whether the maximiser sits on the window rim
/// (a sign the true sup over the unbounded domain is larger, possibly infinite).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupEstimate<T> {
    pub t: T,
    pub sup: T,
    pub argmax: Point<T>,
    pub window_edge: bool,
}

/// `max |Phi_t(z) - z|` over the lattice, for any flow. The result is a lower bound for the true sup.
pub fn sup_deviation_with<T: Scalar, F: FlowMap<T> + Sync + ?Sized>(
    flow: &F,
    t: T,
    cfg: &SupSamplerConfig<T>,
) -> Result<SupEstimate<T>> {
    if !(t > T::zero()) {
        return Err(Error::InvalidParameter(format!("sup deviation needs t > 0, got {t}")));
    }
    cfg.validate()?;
    let pts = cfg.points();
    let devs: Vec<Result<T>> = pts
        .par_iter()
        .map(|&z| {
            flow.apply(z, t).map(|w| (w - z).norm()).map_err(|e| Error::AtPoint {
                point: fmt_point(z),
                source: Box::new(e),
            })
        })
        .collect();
    let mut best = (T::neg_infinity(), pts[0]);
    for (d, &z) in devs.into_iter().zip(&pts) {
        let d = d?;
        if d > best.0 {
            best = (d, z);
        }
    }
    Ok(SupEstimate { t, sup: best.0, argmax: best.1, window_edge: cfg.on_window_edge(best.1) })
}

/// [`sup_deviation_with`] for the numerically integrated flow of `g`.
pub fn sup_deviation<T: Scalar>(
    g: &GeneratorSpec<T>,
    t: T,
    cfg: &SupSamplerConfig<T>,
    integ: &IntegratorConfig<T>,
) -> Result<SupEstimate<T>> {
    if g.is_disc() != matches!(cfg.domain, CanonicalDomain::UnitDisc) {
        return Err(Error::InvalidParameter(format!("lattice on {} does not match generator {g}", cfg.domain)));
    }
    sup_deviation_with(&NumericFlow { spec: g, cfg: *integ }, t, cfg)
}

/// `sup ~ c t^alpha`, fitted by least squares in log–log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit<T> {
    pub c: T,
    pub alpha: T,
    /// Root-mean-square residual of `ln sup`.
    pub rms: T,
}

pub const MIN_FIT_ROWS: usize = 5;

pub fn rate_fit<T: Scalar>(rows: &[(T, T)]) -> Result<PowerFit<T>> {
    if rows.len() < MIN_FIT_ROWS {
        return Err(Error::Precondition(format!("fit needs {MIN_FIT_ROWS} rows, got {}", rows.len())));
    }
    if let Some(r) = rows.iter().find(|r| !(r.0 > T::zero() && r.1 > T::zero() && r.1.is_finite())) {
        return Err(Error::Degenerate(format!("row (t = {}, sup = {}) cannot be fitted", r.0, r.1)));
    }
    let n = T::from_usize_lossy(rows.len());
    let xs: Vec<T> = rows.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<T> = rows.iter().map(|r| r.1.ln()).collect();
    let mx = xs.iter().fold(T::zero(), |a, &x| a + x) / n;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(&ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
    }
    if sxx == T::zero() {
        return Err(Error::Degenerate("all t values coincide".into()));
    }
    let alpha = sxy / sxx;
    let lnc = my - alpha * mx;
    let ss = xs
        .iter()
        .zip(&ys)
        .fold(T::zero(), |a, (&x, &y)| a + (y - lnc - alpha * x).powi(2));
    Ok(PowerFit { c: lnc.exp(), alpha, rms: (ss / n).sqrt() })
}

/// `t = 2^-j` for `j = j_min..=j_max`, decreasing.
pub fn geometric_t_seq<T: Scalar>(j_min: i32, j_max: i32) -> Vec<T> {
    (j_min..=j_max).map(|j| T::lit(0.5f64.powi(j))).collect()
}

/// `steps` values from `t_max` down to `t_min`, geometrically spaced.
pub fn geometric_range<T: Scalar>(t_min: T, t_max: T, steps: usize) -> Result<Vec<T>> {
    if !(t_min > T::zero() && t_max > t_min) || steps < 2 {
        return Err(Error::InvalidParameter("need 0 < t_min < t_max and at least 2 steps".into()));
    }
    let ratio = (t_min / t_max).powf(T::one() / T::from_usize_lossy(steps - 1));
    Ok((0..steps)
        .map(|j| if j + 1 == steps { t_min } else { t_max * ratio.powi(j as i32) })
        .collect())
}

/// Default `t = 2^-4 .. 2^-20`.
pub fn default_t_seq<T: Scalar>() -> Vec<T> {
    geometric_t_seq(4, 20)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport<T> {
    pub generator: String,
    pub sampler: SupSamplerConfig<T>,
    pub rows: Vec<SupEstimate<T>>,
    pub fit: PowerFit<T>,
    /// Some row attained its max on the window rim.
    pub window_edge: bool,
}

impl<T: Scalar> RateReport<T> {
    pub fn pairs(&self) -> Vec<(T, T)> {
        self.rows.iter().map(|r| (r.t, r.sup)).collect()
    }

    /// `(ln t, ln sup)` pairs.
    pub fn plot_data(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .map(|r| (r.t.to_f64_lossy().ln(), r.sup.to_f64_lossy().ln()))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,sup,argmax_re,argmax_im,window_edge")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt17(r.t.to_f64_lossy()),
                fmt17(r.sup.to_f64_lossy()),
                fmt17(r.argmax.re.to_f64_lossy()),
                fmt17(r.argmax.im.to_f64_lossy()),
                r.window_edge
            )?;
        }
        Ok(())
    }

    pub fn write_plot_data<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "log_t,log_sup")?;
        for (x, y) in self.plot_data() {
            writeln!(w, "{},{}", fmt17(x), fmt17(y))?;
        }
        Ok(())
    }
}

fn check_decreasing<T: Scalar>(ts: &[T]) -> Result<()> {
    if ts.iter().any(|t| !(*t > T::zero())) || ts.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("t sequence must be positive and strictly decreasing".into()));
    }
    Ok(())
}

/// Sup rows over `ts` (strictly decreasing) and their power-law fit, for any flow.
pub fn rate_report_with<T: Scalar, F: FlowMap<T> + Sync + ?Sized>(
    flow: &F,
    generator: &str,
    ts: &[T],
    cfg: &SupSamplerConfig<T>,
) -> Result<RateReport<T>> {
    check_decreasing(ts)?;
    let rows = ts
        .iter()
        .map(|&t| sup_deviation_with(flow, t, cfg))
        .collect::<Result<Vec<_>>>()?;
    let fit = rate_fit(&rows.iter().map(|r| (r.t, r.sup)).collect::<Vec<_>>())?;
    let window_edge = rows.iter().any(|r| r.window_edge);
    Ok(RateReport { generator: generator.to_string(), sampler: *cfg, rows, fit, window_edge })
}

pub fn rate_report<T: Scalar>(
    g: &GeneratorSpec<T>,
    ts: &[T],
    cfg: &SupSamplerConfig<T>,
    integ: &IntegratorConfig<T>,
) -> Result<RateReport<T>> {
    if g.is_disc() != matches!(cfg.domain, CanonicalDomain::UnitDisc) {
        return Err(Error::InvalidParameter(format!("lattice on {} does not match generator {g}", cfg.domain)));
    }
    rate_report_with(&NumericFlow { spec: g, cfg: *integ }, &g.to_string(), ts, cfg)
}

/// Time at which the sharpness semigroup carries `-1/2` to `0`: `2/3 - ln(3/2)`.
pub fn sharpness_t0() -> f64 {
    2.0 / 3.0 - 1.5f64.ln()
}

/// `y_x(t) = sqrt(2t + (1 + x)^2) - 1`, the comparison solution below the sharpness flow.
pub fn sharpness_comparison<T: Scalar>(x: T, t: T) -> T {
    (T::lit(2.0) * t + (T::one() + x).powi(2)).sqrt() - T::one()
}

/// The grid point `x = sqrt(t)/2 - 1` where `y_x(t) - x = sqrt(t)` exactly.
pub fn sharpness_point<T: Scalar>(t: T) -> T {
    t.sqrt() / T::lit(2.0) - T::one()
}

/// `n` equispaced points of `(-1, -1/2)`, [`sharpness_point`], and four points between
/// it and `-1` at distances `sqrt(t) 2^-k / 2` from `-1`; sorted.
pub fn sharpness_grid<T: Scalar>(t: T, n: usize) -> Vec<T> {
    let mut xs: Vec<T> = (1..=n)
        .map(|j| -T::one() + T::lit(0.5) * T::from_usize_lossy(j) / T::from_usize_lossy(n + 1))
        .collect();
    xs.push(sharpness_point(t));
    xs.extend((1..=4).map(|k| -T::one() + t.sqrt() / T::lit(2.0) * T::lit(0.5f64.powi(k))));
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    xs
}

/// `max_x (y_x(t) - x)` over a grid of `(-1, -1/2)` that contains `sqrt(t)/2 - 1`.
pub fn sharpness_lower_bound<T: Scalar>(t: T, xs: &[T]) -> Result<T> {
    if !(t > T::zero() && t.to_f64_lossy() < sharpness_t0()) {
        return Err(Error::Precondition(format!("need 0 < t < {}, got {t}", sharpness_t0())));
    }
    let star = sharpness_point(t);
    let tol = T::lit(1e-15);
    if !xs.iter().any(|&x| (x - star).abs() <= tol) {
        return Err(Error::Precondition("grid must contain sqrt(t)/2 - 1".into()));
    }
    if let Some(x) = xs.iter().find(|&&x| !(x > -T::one() && x < T::lit(-0.5))) {
        return Err(Error::Precondition(format!("grid point {x} outside (-1, -1/2)")));
    }
    Ok(xs.iter().fold(T::neg_infinity(), |m, &x| m.max(sharpness_comparison(x, t) - x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpnessRow<T> {
    pub t: T,
    pub lower_bound: T,
    pub sqrt_t: T,
    /// `y_x(t) - x` at `x = sqrt(t)/2 - 1`.
    pub at_point: T,
    /// `min_x (Phi_t(x) - y_x(t))` over the grid.
    pub flow_margin: T,
}

/// Lower-bound and flow-comparison rows for the sharpness generator.
pub fn sharpness_curve<T: Scalar>(ts: &[T], n: usize, integ: &IntegratorConfig<T>) -> Result<Vec<SharpnessRow<T>>> {
    let g = GeneratorSpec::sharpness_example();
    ts.iter()
        .map(|&t| {
            let xs = sharpness_grid(t, n);
            let lower_bound = sharpness_lower_bound(t, &xs)?;
            let star = sharpness_point(t);
            let margins: Vec<Result<T>> = xs
                .par_iter()
                .map(|&x| Ok(advance(&g, Point::new(x, T::zero()), t, integ)?.re - sharpness_comparison(x, t)))
                .collect();
            let flow_margin = margins
                .into_iter()
                .try_fold(T::infinity(), |m, r| r.map(|v| m.min(v)))?;
            Ok(SharpnessRow {
                t,
                lower_bound,
                sqrt_t: t.sqrt(),
                at_point: sharpness_comparison(star, t) - star,
                flow_margin,
            })
        })
        .collect()
}

/// `max (Re Phi_t(z) - Re z)` over `points` for a half-plane generator.
pub fn real_part_deviation<T: Scalar>(
    g: &GeneratorSpec<T>,
    t: T,
    points: &[Point<T>],
    integ: &IntegratorConfig<T>,
) -> Result<T> {
    if g.is_disc() {
        return Err(Error::Precondition("real-part deviation needs a half-plane generator".into()));
    }
    let devs: Vec<Result<T>> = points
        .par_iter()
        .map(|&z| {
            advance(g, z, t, integ)
                .map(|w| w.re - z.re)
                .map_err(|e| Error::AtPoint { point: fmt_point(z), source: Box::new(e) })
        })
        .collect();
    devs.into_iter().try_fold(T::zero(), |m, r| r.map(|v| m.max(v)))
}

/// Distance off the imaginary axis at which the square-root witness points are placed.
pub const WITNESS_OFFSET: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessRow<T> {
    pub t: T,
    pub r: T,
    pub closed: T,
    pub numeric: T,
}

/// `|Phi_t(z) - z|` at `z = WITNESS_OFFSET + iR` for the square-root flow, by closed form and by integration.
pub fn nonuniform_witness<T: Scalar>(ts: &[T], rs: &[T], integ: &IntegratorConfig<T>) -> Result<Vec<WitnessRow<T>>> {
    let g = GeneratorSpec::half_plane_sqrt();
    let cf = ClosedForm::<T>::SqrtFlow;
    let mut rows = Vec::with_capacity(ts.len() * rs.len());
    for &t in ts {
        for &r in rs {
            let z = Point::new(T::lit(WITNESS_OFFSET), r);
            let (closed, numeric) = if t == T::zero() {
                (T::zero(), T::zero())
            } else {
                ((cf.eval(z, t)? - z).norm(), (advance(&g, z, t, integ)? - z).norm())
            };
            rows.push(WitnessRow { t, r, closed, numeric });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqrtTheoremReport<T> {
    pub report: RateReport<T>,
    /// `max sup / (c sqrt t)` over the rows, with `c` the fitted constant.
    pub worst_ratio: T,
    pub bound_holds: bool,
    pub alpha_ok: bool,
    pub pass: bool,
}

/// Slack on the fitted constant in the square-root bound.
pub const SQRT_BOUND_SLACK: f64 = 1.1;
pub const MIN_ALPHA: f64 = 0.45;

/// Passes iff every row satisfies `sup <= 1.1 c sqrt(t)` and the fitted exponent is at least 0.45.
pub fn verify_sqrt_theorem_with<T: Scalar, F: FlowMap<T> + Sync + ?Sized>(
    flow: &F,
    generator: &str,
    ts: &[T],
    cfg: &SupSamplerConfig<T>,
) -> Result<SqrtTheoremReport<T>> {
    if !matches!(cfg.domain, CanonicalDomain::UnitDisc) {
        return Err(Error::Precondition("square-root theorem concerns disc semigroups".into()));
    }
    let report = rate_report_with(flow, generator, ts, cfg)?;
    let c = report.fit.c;
    let worst_ratio = report
        .rows
        .iter()
        .fold(T::zero(), |m, r| m.max(r.sup / (c * r.t.sqrt())));
    let bound_holds = worst_ratio <= T::lit(SQRT_BOUND_SLACK);
    let alpha_ok = report.fit.alpha >= T::lit(MIN_ALPHA);
    Ok(SqrtTheoremReport { report, worst_ratio, bound_holds, alpha_ok, pass: bound_holds && alpha_ok })
}

pub fn verify_sqrt_theorem<T: Scalar>(
    g: &GeneratorSpec<T>,
    ts: &[T],
    cfg: &SupSamplerConfig<T>,
    integ: &IntegratorConfig<T>,
) -> Result<SqrtTheoremReport<T>> {
    if !g.is_disc() {
        return Err(Error::Precondition("square-root theorem concerns disc generators".into()));
    }
    verify_sqrt_theorem_with(&NumericFlow { spec: g, cfg: *integ }, &g.to_string(), ts, cfg)
}
