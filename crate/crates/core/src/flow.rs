//! Semigroup flows `d/dt Phi_t(z) = H(Phi_t(z))`, `Phi_0(z) = z`.
//!
//! The integrator is the Dormand–Prince 5(4) pair with step rejection. Steps
//! are clamped so that the predicted displacement stays below
//! `boundary_guard` times the distance to the boundary, and a step whose
//! stages leave the domain is rejected and retried shorter; when no admissible
//! step remains the integration fails instead of clipping the trajectory.

use std::io::Write;

use serde::Serialize;

use crate::cplane::{fmt_point, principal_sqrt, ExtendedPoint, Point};
use crate::error::{Error, Result};
use crate::generators::{GeneratorSpec, HalfPlaneEntry, HerglotzSpec};
use crate::io::fmt17;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Cap on attempted steps (accepted and rejected).
    pub max_steps: usize,
    /// Largest fraction of the distance to the boundary a single step may cover.
    pub boundary_guard: T,
}

impl<T: Scalar> IntegratorConfig<T> {
    pub fn new(rel_tol: T, abs_tol: T, max_steps: usize, boundary_guard: T) -> Result<Self> {
        if !(rel_tol > T::zero() && abs_tol > T::zero()) {
            return Err(Error::InvalidParameter("tolerances must be > 0".into()));
        }
        if max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be >= 1".into()));
        }
        if !(boundary_guard > T::zero() && boundary_guard <= T::one()) {
            return Err(Error::InvalidParameter("boundary_guard must lie in (0, 1]".into()));
        }
        Ok(IntegratorConfig { rel_tol, abs_tol, max_steps, boundary_guard })
    }

    pub fn with_rel_tol(mut self, rel_tol: T) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

impl<T: Scalar> Default for IntegratorConfig<T> {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: T::lit(1e-10),
            abs_tol: T::lit(1e-12),
            max_steps: 200_000,
            boundary_guard: T::lit(0.5),
        }
    }
}

/// One accepted sample `(t, Phi_t(z), H(Phi_t(z)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample<T> {
    pub t: T,
    pub z: Point<T>,
    pub velocity: Point<T>,
}

/// A sampled flow curve `t -> Phi_t(z)` with cubic Hermite dense output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<T> {
    pub samples: Vec<TrajectorySample<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start(&self) -> Point<T> {
        self.samples[0].z
    }

    pub fn end(&self) -> Point<T> {
        self.samples[self.samples.len() - 1].z
    }

    pub fn t_end(&self) -> T {
        self.samples[self.samples.len() - 1].t
    }

    /// Dense output at `t` within the sampled span.
    pub fn interpolate(&self, t: T) -> Option<Point<T>> {
        let s = &self.samples;
        if s.is_empty() || t < s[0].t || t > s[s.len() - 1].t {
            return None;
        }
        let i = s.partition_point(|x| x.t <= t);
        if i == 0 {
            return Some(s[0].z);
        }
        if i == s.len() {
            return Some(s[s.len() - 1].z);
        }
        let (a, b) = (&s[i - 1], &s[i]);
        let h = b.t - a.t;
        let u = (t - a.t) / h;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * u * u * u - three * u * u + T::one();
        let h10 = u * u * u - two * u * u + u;
        let h01 = three * u * u - two * u * u * u;
        let h11 = u * u * u - u * u;
        Some(a.z * h00 + a.velocity * (h10 * h) + b.z * h01 + b.velocity * (h11 * h))
    }

    /// `n >= 2` points equispaced in `t` over the sampled span.
    pub fn resample(&self, n: usize) -> Vec<(T, Point<T>)> {
        let t0 = self.samples[0].t;
        let t1 = self.t_end();
        (0..n)
            .map(|j| {
                let t = if j + 1 == n {
                    t1
                } else {
                    t0 + (t1 - t0) * T::from_usize_lossy(j) / T::from_usize_lossy(n - 1)
                };
                (t, self.interpolate(t).unwrap_or_else(|| self.end()))
            })
            .collect()
    }

    /// CSV rows `t,re,im` preceded by a `#` header naming the generator and tolerances.
    pub fn write_csv<W: Write>(&self, mut w: W, generator_id: &str, cfg: &IntegratorConfig<T>) -> Result<()> {
        writeln!(
            w,
            "# generator={generator_id} rel_tol={} abs_tol={} max_steps={} boundary_guard={} deterministic=true (no random seed)",
            fmt17(cfg.rel_tol.to_f64_lossy()),
            fmt17(cfg.abs_tol.to_f64_lossy()),
            cfg.max_steps,
            fmt17(cfg.boundary_guard.to_f64_lossy()),
        )?;
        writeln!(w, "t,re,im")?;
        for s in &self.samples {
            writeln!(
                w,
                "{},{},{}",
                fmt17(s.t.to_f64_lossy()),
                fmt17(s.z.re.to_f64_lossy()),
                fmt17(s.z.im.to_f64_lossy())
            )?;
        }
        Ok(())
    }
}

/// Something that can evaluate `Phi_t(z)`.
pub trait FlowMap<T: Scalar> {
    fn apply(&self, z: Point<T>, t: T) -> Result<Point<T>>;
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Rhs<'a, T> {
    spec: &'a GeneratorSpec<T>,
    tracks_branch: bool,
}

impl<T: Scalar> Rhs<'_, T> {
    fn eval(&self, z: Point<T>, reference: Point<T>) -> Result<Point<T>> {
        let r = if self.tracks_branch { Some(reference) } else { None };
        self.spec.eval_unchecked(z, r)
    }
}

/// Integrates the flow of `spec` from `z` over `[0, t_end]`, keeping every accepted step.
pub fn integrate<T: Scalar>(
    spec: &GeneratorSpec<T>,
    z: Point<T>,
    t_end: T,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    if !(t_end >= T::zero()) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!("flow time must be finite and >= 0, got {t_end}")));
    }
    let domain = spec.domain();
    if !domain.contains(z) {
        return Err(Error::OutsideDomain { domain: domain.name(), point: fmt_point(z) });
    }
    let rhs = Rhs {
        spec,
        tracks_branch: matches!(spec, GeneratorSpec::HalfPlane { entry: HalfPlaneEntry::Sqrt }),
    };
    let seed_ref = if rhs.tracks_branch { principal_sqrt(z)? } else { Point::new(T::zero(), T::zero()) };
    let mut k1 = rhs.eval(z, seed_ref)?;
    let mut samples = vec![TrajectorySample { t: T::zero(), z, velocity: k1 }];
    if t_end == T::zero() || (k1.re == T::zero() && k1.im == T::zero()) {
        if t_end > T::zero() {
            samples.push(TrajectorySample { t: t_end, z, velocity: k1 });
        }
        return Ok(Trajectory { samples });
    }

    let lit = T::lit;
    let mut t = T::zero();
    let mut y = z;
    let mut h = {
        let scale = cfg.abs_tol + cfg.rel_tol * y.norm();
        let guess = lit(0.1) * scale.powf(lit(0.2)) * (T::one() + y.norm()) / k1.norm();
        guess.min(t_end)
    };
    let mut attempts = 0usize;
    let mut last_exit: Option<Point<T>> = None;

    while t < t_end {
        attempts += 1;
        if attempts > cfg.max_steps {
            return Err(Error::StepLimit { max_steps: cfg.max_steps, t: t.to_f64_lossy() });
        }
        let dist = domain.signed_distance(y);
        let speed = k1.norm();
        if speed > T::zero() && dist.is_finite() {
            h = h.min(cfg.boundary_guard * dist / speed);
        }
        let last = h >= t_end - t;
        if last {
            h = t_end - t;
        }
        if !(t + h > t) {
            return Err(match last_exit {
                Some(p) => Error::ExitedDomain { point: fmt_point(p), t: t.to_f64_lossy() },
                None => Error::StepUnderflow { point: fmt_point(y), t: t.to_f64_lossy() },
            });
        }

        let mut k = [k1; 7];
        let mut left: Option<Point<T>> = None;
        for s in 1..7 {
            let mut acc = Point::new(T::zero(), T::zero());
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    acc = acc + *kj * lit(a);
                }
            }
            let ys = y + acc * h;
            if !domain.contains(ys) {
                left = Some(ys);
                break;
            }
            k[s] = match rhs.eval(ys, k1) {
                Ok(v) if v.re.is_finite() && v.im.is_finite() => v,
                _ => {
                    left = Some(ys);
                    break;
                }
            };
        }
        if let Some(p) = left {
            last_exit = Some(p);
            h = h * lit(0.25);
            continue;
        }
        // stage 7 is evaluated at the fifth-order solution
        let mut acc = Point::new(T::zero(), T::zero());
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = A[6][j];
            if a != 0.0 {
                acc = acc + *kj * lit(a);
            }
        }
        let y_new = y + acc * h;
        let mut err = Point::new(T::zero(), T::zero());
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                err = err + *kj * lit(E[j]);
            }
        }
        let scale = cfg.abs_tol + cfg.rel_tol * y.norm().max(y_new.norm());
        let err_norm = (err * h).norm() / scale;
        if !err_norm.is_finite() || err_norm > T::one() {
            let fac = if err_norm.is_finite() {
                (lit(0.9) * err_norm.powf(lit(-0.2))).max(lit(0.2))
            } else {
                lit(0.2)
            };
            h = h * fac;
            continue;
        }
        last_exit = None;
        let fac = if err_norm == T::zero() {
            lit(5.0)
        } else {
            (lit(0.9) * err_norm.powf(lit(-0.2))).clamp(lit(0.2), lit(5.0))
        };
        t = if last { t_end } else { t + h };
        y = y_new;
        k1 = k[6];
        samples.push(TrajectorySample { t, z: y, velocity: k1 });
        h = h * fac;
    }
    Ok(Trajectory { samples })
}

/// Numerical `Phi_t(z)`.
pub fn advance<T: Scalar>(spec: &GeneratorSpec<T>, z: Point<T>, t: T, cfg: &IntegratorConfig<T>) -> Result<Point<T>> {
    integrate(spec, z, t, cfg).map(|tr| tr.end())
}

/// A generator paired with integrator settings.
#[derive(Debug, Clone)]
pub struct NumericFlow<'a, T> {
    pub spec: &'a GeneratorSpec<T>,
    pub cfg: IntegratorConfig<T>,
}

impl<T: Scalar> FlowMap<T> for NumericFlow<'_, T> {
    fn apply(&self, z: Point<T>, t: T) -> Result<Point<T>> {
        advance(self.spec, z, t, &self.cfg)
    }
}

/// Semigroups whose flows are known in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedForm<T> {
    /// `e^{-t} z` on the disc, generated by `-z`.
    ExpContraction,
    /// `z + c t` on the half-plane, generated by the constant `c`.
    Translation { c: Point<T> },
    /// `(t/2 + sqrt z)^2` on the half-plane, generated by `sqrt z`.
    SqrtFlow,
    /// `1 - (1 - z) / (1 + t (1 - z))` on the disc, generated by `(1 - z)^2`.
    ParabolicDisc,
}

impl<T: Scalar> ClosedForm<T> {
    pub const IDS: [&'static str; 4] = ["exp_contraction", "translation", "sqrt_flow", "parabolic_disc"];

    /// Parses `exp_contraction`, `translation` (with `c = 1`), `translation:<c>`, `sqrt_flow`, `parabolic_disc`.
    pub fn parse(id: &str) -> Result<Self> {
        match id {
            "exp_contraction" => Ok(ClosedForm::ExpContraction),
            "translation" => Ok(ClosedForm::Translation { c: Point::new(T::one(), T::zero()) }),
            "sqrt_flow" => Ok(ClosedForm::SqrtFlow),
            "parabolic_disc" => Ok(ClosedForm::ParabolicDisc),
            other => match other.strip_prefix("translation:") {
                Some(c) => Ok(ClosedForm::Translation { c: crate::catalog::parse_complex(c)? }),
                None => Err(Error::UnknownId(format!("closed form '{other}'"))),
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClosedForm::ExpContraction => "exp_contraction",
            ClosedForm::Translation { .. } => "translation",
            ClosedForm::SqrtFlow => "sqrt_flow",
            ClosedForm::ParabolicDisc => "parabolic_disc",
        }
    }

    /// The generator whose flow this is.
    pub fn generator(&self) -> GeneratorSpec<T> {
        let zero = Point::new(T::zero(), T::zero());
        let one = Point::new(T::one(), T::zero());
        match *self {
            ClosedForm::ExpContraction => GeneratorSpec::BerksonPorta {
                tau: zero,
                p: HerglotzSpec::Constant { value: one },
            },
            ClosedForm::Translation { c } => GeneratorSpec::HalfPlane { entry: HalfPlaneEntry::Constant { value: c } },
            ClosedForm::SqrtFlow => GeneratorSpec::half_plane_sqrt(),
            ClosedForm::ParabolicDisc => GeneratorSpec::BerksonPorta {
                tau: one,
                p: HerglotzSpec::Constant { value: one },
            },
        }
    }

    pub fn eval(&self, z: Point<T>, t: T) -> Result<Point<T>> {
        if !(t >= T::zero()) {
            return Err(Error::InvalidParameter(format!("closed form needs t >= 0, got {t}")));
        }
        let domain = self.generator().domain();
        if !domain.contains(z) {
            return Err(Error::OutsideDomain { domain: domain.name(), point: fmt_point(z) });
        }
        let one = Point::new(T::one(), T::zero());
        Ok(match *self {
            ClosedForm::ExpContraction => z * (-t).exp(),
            ClosedForm::Translation { c } => z + c * t,
            ClosedForm::SqrtFlow => {
                let r = principal_sqrt(z)? + Point::new(t / T::lit(2.0), T::zero());
                r * r
            }
            ClosedForm::ParabolicDisc => {
                let w = one - z;
                one - w / (one + w * t)
            }
        })
    }
}

/// Closed-form flow evaluation.
pub fn closed_form<T: Scalar>(id: &ClosedForm<T>, z: Point<T>, t: T) -> Result<Point<T>> {
    id.eval(z, t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormFlow<T>(pub ClosedForm<T>);

impl<T: Scalar> FlowMap<T> for ClosedFormFlow<T> {
    fn apply(&self, z: Point<T>, t: T) -> Result<Point<T>> {
        self.0.eval(z, t)
    }
}

/// `|Phi_{s+t}(z) - Phi_t(Phi_s(z))|` computed numerically.
pub fn semigroup_defect<T: Scalar>(
    spec: &GeneratorSpec<T>,
    z: Point<T>,
    s: T,
    t: T,
    cfg: &IntegratorConfig<T>,
) -> Result<T> {
    if !(s >= T::zero() && t >= T::zero()) {
        return Err(Error::InvalidParameter("semigroup defect needs s, t >= 0".into()));
    }
    let direct = advance(spec, z, s + t, cfg)?;
    let composed = advance(spec, advance(spec, z, s, cfg)?, t, cfg)?;
    Ok((direct - composed).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DenjoyWolffConfig<T> {
    pub horizon: T,
    /// `|Phi_T(z)|` beyond this classifies the limit as infinity.
    pub divergence_radius: T,
    /// Converged when `|Phi_T - Phi_{T/2}| <= convergence_tol (1 + |Phi_T|)`.
    pub convergence_tol: T,
}

impl<T: Scalar> Default for DenjoyWolffConfig<T> {
    fn default() -> Self {
        DenjoyWolffConfig {
            horizon: T::lit(1e4),
            divergence_radius: T::lit(1e3),
            convergence_tol: T::lit(1e-3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DenjoyWolffEstimate<T> {
    Converged { point: ExtendedPoint<T> },
    /// Neither converged nor diverged by the horizon.
    Inconclusive { last: Point<T> },
}

impl<T: Scalar> DenjoyWolffEstimate<T> {
    pub fn point(&self) -> Option<ExtendedPoint<T>> {
        match *self {
            DenjoyWolffEstimate::Converged { point } => Some(point),
            DenjoyWolffEstimate::Inconclusive { .. } => None,
        }
    }
}

/// Estimates the Denjoy–Wolff point as the limit of `Phi_t(z)` at the horizon.
pub fn denjoy_wolff_estimate<T: Scalar>(
    spec: &GeneratorSpec<T>,
    z: Point<T>,
    dw: &DenjoyWolffConfig<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<DenjoyWolffEstimate<T>> {
    if !(dw.horizon > T::zero()) {
        return Err(Error::InvalidParameter("horizon must be > 0".into()));
    }
    let traj = match integrate(spec, z, dw.horizon, cfg) {
        Ok(tr) => tr,
        Err(Error::StepLimit { .. }) => {
            return Ok(DenjoyWolffEstimate::Inconclusive { last: z });
        }
        Err(e) => return Err(e),
    };
    let end = traj.end();
    if end.norm() > dw.divergence_radius {
        return Ok(DenjoyWolffEstimate::Converged { point: ExtendedPoint::Infinity });
    }
    let mid = traj.interpolate(dw.horizon / T::lit(2.0)).unwrap_or(end);
    if (end - mid).norm() <= dw.convergence_tol * (T::one() + end.norm()) {
        Ok(DenjoyWolffEstimate::Converged { point: ExtendedPoint::Finite(end) })
    } else {
        Ok(DenjoyWolffEstimate::Inconclusive { last: end })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::DirichletSeriesSpec;

    type P = Point<f64>;

    fn p(re: f64, im: f64) -> P {
        P::new(re, im)
    }

    fn cfg() -> IntegratorConfig<f64> {
        IntegratorConfig::default()
    }

    #[test]
    fn advance_examples() {
        let exp = ClosedForm::ExpContraction.generator();
        let v = advance(&exp, p(0.5, 0.0), std::f64::consts::LN_2, &cfg()).unwrap();
        assert!((v - p(0.25, 0.0)).norm() < 1e-10);

        let tr = GeneratorSpec::half_plane_constant(p(1.0, 0.0)).unwrap();
        let v = advance(&tr, p(1.0, 2.0), 0.5, &cfg()).unwrap();
        assert!((v - p(1.5, 2.0)).norm() < 1e-14);

        let sq = GeneratorSpec::half_plane_sqrt();
        let v = advance(&sq, p(1.0, 0.0), 1.0, &cfg()).unwrap();
        assert!((v - p(2.25, 0.0)).norm() < 1e-9, "{v}");
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(ClosedForm::SqrtFlow.eval(p(0.0, 1.0) + p(1e-300, 0.0), 0.0).unwrap().im, 1.0);
        let v = ClosedForm::<f64>::ParabolicDisc.eval(p(0.0, 0.0), 1.0).unwrap();
        assert!((v - p(0.5, 0.0)).norm() < 1e-15);
        let v = ClosedForm::<f64>::ExpContraction.eval(p(0.0, 0.6), std::f64::consts::LN_2).unwrap();
        assert!((v - p(0.0, 0.3)).norm() < 1e-15);
        assert!(matches!(ClosedForm::<f64>::parse("nope"), Err(Error::UnknownId(_))));
        assert_eq!(
            ClosedForm::<f64>::parse("translation:2+1i").unwrap(),
            ClosedForm::Translation { c: p(2.0, 1.0) }
        );
        assert!(ClosedForm::<f64>::ExpContraction.eval(p(2.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn parabolic_closed_form_solves_its_ode() {
        // w = 1 - z satisfies w' = -w^2; central difference of the closed form
        let cf = ClosedForm::<f64>::ParabolicDisc;
        let g = cf.generator();
        for &z in &[p(0.0, 0.0), p(-0.7, 0.2), p(0.5, -0.5)] {
            for &t in &[0.1, 1.0, 3.0] {
                let h = 1e-5;
                let d = (cf.eval(z, t + h).unwrap() - cf.eval(z, t - h).unwrap()) / (2.0 * h);
                let want = g.eval(cf.eval(z, t).unwrap()).unwrap();
                assert!((d - want).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let sq = GeneratorSpec::half_plane_sqrt();
        assert_eq!(advance(&sq, p(0.3, -2.0), 0.0, &cfg()).unwrap(), p(0.3, -2.0));
        assert!(advance(&sq, p(-0.3, -2.0), 0.0, &cfg()).is_err());
        assert!(advance(&sq, p(0.3, -2.0), -1.0, &cfg()).is_err());
    }

    #[test]
    fn step_limit_is_reported() {
        let tight = IntegratorConfig::new(1e-12, 1e-14, 5, 0.5).unwrap();
        let sq = GeneratorSpec::half_plane_sqrt();
        assert!(matches!(
            advance(&sq, p(1.0, 0.0), 100.0, &tight),
            Err(Error::StepLimit { .. })
        ));
        assert!(IntegratorConfig::new(0.0, 1e-12, 10, 0.5).is_err());
        assert!(IntegratorConfig::new(1e-8, 1e-12, 0, 0.5).is_err());
        assert!(IntegratorConfig::new(1e-8, 1e-12, 10, 1.5).is_err());
    }

    #[test]
    fn near_boundary_start_stays_inside() {
        // |H| ~ 4/(1+z) near -1 for the sharpness generator
        let g = GeneratorSpec::<f64>::sharpness_example();
        for k in [10, 20, 30, 40] {
            let x = -1.0 + 0.5f64.powi(k);
            let tr = integrate(&g, p(x, 0.0), 1e-3, &cfg()).unwrap();
            assert!(tr.samples.iter().all(|s| s.z.norm() < 1.0));
            assert!(tr.end().re > x);
        }
    }

    #[test]
    fn semigroup_defect_examples() {
        let exp = ClosedForm::ExpContraction.generator();
        let d = semigroup_defect(&exp, p(0.5, 0.0), 0.3, 0.3, &cfg()).unwrap();
        assert!(d <= 1e-8);
        let sq = GeneratorSpec::half_plane_sqrt();
        assert!(semigroup_defect(&sq, p(1.0, 0.0), 0.5, 0.5, &cfg()).unwrap() <= 1e-8);
        for g in [exp, sq, ClosedForm::ParabolicDisc.generator()] {
            let d = semigroup_defect(&g, p(0.3, 0.1), 0.0, 0.7, &cfg()).unwrap();
            assert!(d <= cfg().abs_tol, "{g}: {d}");
        }
    }

    #[test]
    fn denjoy_wolff_examples() {
        let dw = DenjoyWolffConfig::default();
        let exp = ClosedForm::ExpContraction.generator();
        let e = denjoy_wolff_estimate(&exp, p(0.5, 0.3), &dw, &cfg()).unwrap();
        assert!(e.point().unwrap().finite().unwrap().norm() < 1e-6);

        let sq = GeneratorSpec::half_plane_sqrt();
        let e = denjoy_wolff_estimate(&sq, p(1.0, 0.0), &dw, &cfg()).unwrap();
        assert_eq!(e.point(), Some(ExtendedPoint::Infinity));

        let tr = GeneratorSpec::half_plane_constant(p(1.0, 0.0)).unwrap();
        let e = denjoy_wolff_estimate(&tr, p(1.0, 0.0), &dw, &cfg()).unwrap();
        assert_eq!(e.point(), Some(ExtendedPoint::Infinity));

        // purely imaginary translation never settles: neither limit nor escape within the radius
        let rot = GeneratorSpec::half_plane_constant(p(0.0, 1e-2)).unwrap();
        let e = denjoy_wolff_estimate(&rot, p(1.0, 0.0), &dw, &cfg()).unwrap();
        assert!(matches!(e, DenjoyWolffEstimate::Inconclusive { .. }));
    }

    #[test]
    fn denjoy_wolff_matches_tau() {
        let dw = DenjoyWolffConfig::default();
        let taus = [p(0.0, 0.0), p(0.3, -0.4), p(1.0, 0.0), p(0.0, -1.0), p(-0.6, 0.8)];
        let ps = [
            HerglotzSpec::constant(p(1.0, 0.0)).unwrap(),
            HerglotzSpec::constant(p(1.0, 1.0)).unwrap(),
            HerglotzSpec::ReciprocalOnePlusZ,
        ];
        for &tau in &taus {
            for herg in &ps {
                let g = GeneratorSpec::berkson_porta(tau, herg.clone()).unwrap();
                let e = denjoy_wolff_estimate(&g, p(0.1, 0.2), &dw, &cfg()).unwrap();
                let got = e.point().and_then(|x| x.finite()).unwrap_or_else(|| panic!("{g}: {e:?}"));
                assert!((got - tau).norm() < 1e-2, "{g}: {got}");
            }
        }
    }

    #[test]
    fn trajectory_dense_output() {
        let cf = ClosedForm::SqrtFlow;
        let g = cf.generator();
        let tr = integrate(&g, p(1.0, 0.5), 1.0, &cfg()).unwrap();
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
        for j in 0..=50 {
            let t = j as f64 / 50.0;
            let z = tr.interpolate(t).unwrap();
            let want = cf.eval(p(1.0, 0.5), t).unwrap();
            assert!((z - want).norm() < 1e-6 * (1.0 + want.norm()), "t {t}");
        }
        assert!(tr.interpolate(1.5).is_none());
        let rs = tr.resample(64);
        assert_eq!(rs.len(), 64);
        assert_eq!(rs[63].0, 1.0);
    }

    #[test]
    fn trajectory_csv_header() {
        let g = GeneratorSpec::half_plane_sqrt();
        let tr = integrate(&g, p(1.0, 0.0), 1.0, &cfg()).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, "hp:sqrt", &cfg()).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert!(lines.next().unwrap().starts_with("# generator=hp:sqrt rel_tol="));
        assert_eq!(lines.next().unwrap(), "t,re,im");
        let last: Vec<f64> = s.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert!((last[1] - 2.25).abs() < 1e-9);
    }

    #[test]
    fn dirichlet_flow_moves_right() {
        let d = DirichletSeriesSpec::from_terms(p(1.0, 0.0), &[(2, p(1.0, 0.0))]);
        let g = GeneratorSpec::dirichlet(d);
        let tr = integrate(&g, p(0.01, 3.0), 2.0, &cfg()).unwrap();
        assert!(tr.samples.windows(2).all(|w| w[1].z.re >= w[0].z.re - 1e-12));
    }

    #[test]
    fn f32_flow() {
        let g = ClosedForm::<f32>::ExpContraction.generator();
        let c = IntegratorConfig::new(1e-5f32, 1e-6, 10_000, 0.5).unwrap();
        let v = advance(&g, Point::new(0.5f32, 0.0), std::f32::consts::LN_2, &c).unwrap();
        assert!((v - Point::new(0.25f32, 0.0)).norm() < 1e-4);
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(64))]

        #[test]
        fn semigroup_law_on_the_disc(r in 0.0..0.95f64, th in 0.0..6.28f64, s in 0.0..1.0f64, t in 0.0..1.0f64) {
            let g = GeneratorSpec::berkson_porta(p(0.0, 0.0), HerglotzSpec::moebius_cayley(1.0).unwrap()).unwrap();
            let d = semigroup_defect(&g, P::from_polar(r, th), s, t, &cfg()).unwrap();
            proptest::prop_assert!(d <= 1e-8, "defect {}", d);
        }

        #[test]
        fn half_plane_flows_move_right(re in 1e-3..5.0f64, im in -5.0..5.0f64, t in 0.0..2.0f64) {
            for g in [GeneratorSpec::half_plane_sqrt(), GeneratorSpec::dirichlet(DirichletSeriesSpec::from_terms(p(1.0, 0.0), &[(2, p(1.0, 0.0))]))] {
                let traj = integrate(&g, p(re, im), t, &cfg()).unwrap();
                proptest::prop_assert!(traj.samples.windows(2).all(|w| w[1].z.re >= w[0].z.re - 1e-12));
            }
        }

        #[test]
        fn elliptic_flow_contracts(r in 0.0..0.95f64, th in 0.0..6.28f64, t in 0.0..3.0f64) {
            let g = GeneratorSpec::berkson_porta(p(0.0, 0.0), HerglotzSpec::reciprocal_one_plus_z()).unwrap();
            let z = P::from_polar(r, th);
            proptest::prop_assert!(advance(&g, z, t, &cfg()).unwrap().norm() <= z.norm() + 1e-10);
        }

        #[test]
        fn closed_forms_agree_with_integration(re in 1e-2..3.0f64, im in -3.0..3.0f64, t in 0.0..2.0f64) {
            let z = p(re, im);
            let cf = ClosedForm::SqrtFlow;
            let err = (advance(&cf.generator(), z, t, &cfg()).unwrap() - cf.eval(z, t).unwrap()).norm();
            proptest::prop_assert!(err <= 1e-8 * cf.eval(z, t).unwrap().norm().max(1.0));
        }
    }
}
