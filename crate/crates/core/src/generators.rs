//! Infinitesimal generators on the unit disc and the right half-plane.
//!
//! Disc generators are given through their Berkson–Porta data: a point `tau`
//! of the closed disc and a Herglotz function `p` (holomorphic on the disc with
//! non-negative real part), assembled as `H(z) = (z - tau)(conj(tau) z - 1) p(z)`.
//! Half-plane generators come from a small catalog (constants, `sqrt`,
//! truncated Dirichlet series) or from pulling a Herglotz function back to the
//! half-plane through `exp(-w)` or the inverse Cayley map.

use std::fmt;

use serde::Serialize;

use crate::cplane::{fmt_point, inverse_cayley, principal_sqrt, CanonicalDomain, Point};
use crate::error::{Error, Result};
use crate::flow::FlowMap;
use crate::sampling;
use crate::scalar::Scalar;

/// Positivity slack for `Re p >= 0` checks on sample grids.
pub const POSITIVITY_TOL: f64 = 1e-10;

fn c<T: Scalar>(re: f64, im: f64) -> Point<T> {
    Point::new(T::lit(re), T::lit(im))
}

/// Writes a complex number the way generator identifiers spell it: `1`, `-0.5i`, `2+3i`.
pub fn format_complex<T: Scalar>(z: Point<T>) -> String {
    let zero = T::zero();
    match (z.re == zero, z.im == zero) {
        (_, true) => format!("{}", z.re),
        (true, false) => format!("{}i", z.im),
        (false, false) => {
            if z.im < zero {
                format!("{}{}i", z.re, z.im)
            } else {
                format!("{}+{}i", z.re, z.im)
            }
        }
    }
}

/// Closed-form Herglotz functions registered under a string identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UserHerglotzKind {
    /// `k (1 + e^{-i theta} z) / (1 - e^{-i theta} z)`; params `[k, theta]`, `k > 0`.
    RotatedCayley,
    /// `a + b z`; params `[a_re, a_im, b_re, b_im]` with `a_re >= |b|`.
    Affine,
    /// `k ((1 + z) / (1 - z))^beta`; params `[k, beta]`, `k > 0`, `0 <= beta <= 1`.
    CayleyPower,
}

impl UserHerglotzKind {
    pub fn parse(id: &str) -> Result<Self> {
        match id {
            "rotated_cayley" => Ok(Self::RotatedCayley),
            "affine" => Ok(Self::Affine),
            "cayley_power" => Ok(Self::CayleyPower),
            other => Err(Error::UnknownId(format!("herglotz user entry '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::RotatedCayley => "rotated_cayley",
            Self::Affine => "affine",
            Self::CayleyPower => "cayley_power",
        }
    }

    fn arity(self) -> usize {
        match self {
            Self::RotatedCayley | Self::CayleyPower => 2,
            Self::Affine => 4,
        }
    }
}

/// A Herglotz function `p: D -> closure(C+)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HerglotzSpec<T> {
    Constant { value: Point<T> },
    /// `k (1 + z) / (1 - z)`.
    MoebiusCayley { scale: T },
    /// `1 / (1 + z)`.
    ReciprocalOnePlusZ,
    UserTable { kind: UserHerglotzKind, params: Vec<T> },
}

impl<T: Scalar> HerglotzSpec<T> {
    pub fn constant(value: Point<T>) -> Result<Self> {
        if !(value.re >= -T::lit(POSITIVITY_TOL)) || !value.im.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "constant Herglotz function needs Re >= 0, got {}",
                fmt_point(value)
            )));
        }
        Ok(HerglotzSpec::Constant { value })
    }

    pub fn moebius_cayley(scale: T) -> Result<Self> {
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!("Cayley scale must be > 0, got {scale}")));
        }
        Ok(HerglotzSpec::MoebiusCayley { scale })
    }

    pub fn reciprocal_one_plus_z() -> Self {
        HerglotzSpec::ReciprocalOnePlusZ
    }

    /// Builds a user-table entry and checks positivity on a 10^4-point disc sample.
    pub fn user(id: &str, params: &[T]) -> Result<Self> {
        let kind = UserHerglotzKind::parse(id)?;
        if params.len() != kind.arity() {
            return Err(Error::InvalidParameter(format!(
                "{} takes {} parameters, got {}",
                kind.name(),
                kind.arity(),
                params.len()
            )));
        }
        let ok = match kind {
            UserHerglotzKind::RotatedCayley => params[0] > T::zero(),
            UserHerglotzKind::Affine => {
                params[0] >= Point::new(params[2], params[3]).norm()
            }
            UserHerglotzKind::CayleyPower => {
                params[0] > T::zero() && params[1] >= T::zero() && params[1] <= T::one()
            }
        };
        if !ok || params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "parameters {params:?} do not give Re p >= 0 for {}",
                kind.name()
            )));
        }
        let spec = HerglotzSpec::UserTable { kind, params: params.to_vec() };
        spec.check_positivity(10_000)?;
        Ok(spec)
    }

    /// Evaluates `p(z)` for `|z| < 1`.
    pub fn eval(&self, z: Point<T>) -> Point<T> {
        let one = c::<T>(1.0, 0.0);
        match self {
            HerglotzSpec::Constant { value } => *value,
            HerglotzSpec::MoebiusCayley { scale } => (one + z) / (one - z) * *scale,
            HerglotzSpec::ReciprocalOnePlusZ => one / (one + z),
            HerglotzSpec::UserTable { kind, params } => match kind {
                UserHerglotzKind::RotatedCayley => {
                    let u = z * Point::from_polar(T::one(), -params[1]);
                    (one + u) / (one - u) * params[0]
                }
                UserHerglotzKind::Affine => {
                    Point::new(params[0], params[1]) + Point::new(params[2], params[3]) * z
                }
                UserHerglotzKind::CayleyPower => {
                    let m = (one + z) / (one - z);
                    if m.norm() == T::zero() {
                        return Point::new(T::zero(), T::zero());
                    }
                    // m lies in the right half-plane, so the principal power keeps |arg| <= beta pi/2
                    m.powf(params[1]) * params[0]
                }
            },
        }
    }

    /// Fails if `Re p < -POSITIVITY_TOL` anywhere on an `n`-point disc sample.
    pub fn check_positivity(&self, n: usize) -> Result<()> {
        for z in sampling::disc_points::<T>(n, 1e-9) {
            let v = self.eval(z);
            if !(v.re >= -T::lit(POSITIVITY_TOL)) {
                return Err(Error::InvalidParameter(format!(
                    "Re p = {} < 0 at {}",
                    v.re,
                    fmt_point(z)
                )));
            }
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Display for HerglotzSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HerglotzSpec::Constant { value } => write!(f, "const:{}", format_complex(*value)),
            HerglotzSpec::MoebiusCayley { scale } => write!(f, "cayley:{scale}"),
            HerglotzSpec::ReciprocalOnePlusZ => f.write_str("recip"),
            HerglotzSpec::UserTable { kind, params } => {
                write!(f, "user:{}", kind.name())?;
                for (i, p) in params.iter().enumerate() {
                    write!(f, "{}{p}", if i == 0 { ":" } else { ";" })?;
                }
                Ok(())
            }
        }
    }
}

/// Declared decay of the coefficients beyond the stored truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailDecay<T> {
    /// The series is exactly the stored finite sum.
    Exact,
    /// `|a_n| <= bound * n^(-exponent)` for every `n > N`.
    PowerLaw { bound: T, exponent: T },
}

/// A truncated Dirichlet series `c0 + sum_{n=1}^N a_n n^(-s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletSeriesSpec<T> {
    /// `coefficients[n - 1]` is `a_n`.
    pub coefficients: Vec<Point<T>>,
    pub constant: Point<T>,
    /// Evaluation is refused for `Re s <= abscissa`.
    pub abscissa: T,
    pub tail: TailDecay<T>,
}

/// Value of a truncated Dirichlet series together with a bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirichletValue<T> {
    pub value: Point<T>,
    pub tail_bound: T,
}

impl<T: Scalar> DirichletSeriesSpec<T> {
    /// A finite series (no tail), convergent everywhere.
    pub fn finite(constant: Point<T>, coefficients: Vec<Point<T>>) -> Self {
        DirichletSeriesSpec {
            coefficients,
            constant,
            abscissa: T::neg_infinity(),
            tail: TailDecay::Exact,
        }
    }

    /// Builds a series from sparse `(n, a_n)` terms; `n = 0` is folded into the constant.
    pub fn from_terms(constant: Point<T>, terms: &[(usize, Point<T>)]) -> Self {
        let n_max = terms.iter().map(|&(n, _)| n).max().unwrap_or(0);
        let mut coefficients = vec![Point::new(T::zero(), T::zero()); n_max];
        let mut constant = constant;
        for &(n, a) in terms {
            if n == 0 {
                constant = constant + a;
            } else {
                coefficients[n - 1] = coefficients[n - 1] + a;
            }
        }
        Self::finite(constant, coefficients)
    }

    pub fn with_tail(mut self, tail: TailDecay<T>, abscissa: T) -> Self {
        self.tail = tail;
        self.abscissa = abscissa;
        self
    }

    /// Truncation length `N` (at least one stored term slot).
    pub fn len(&self) -> usize {
        self.coefficients.len().max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Upper bound for `sum_{n > N} |a_n| n^(-sigma)`.
    pub fn tail_bound(&self, sigma: T) -> T {
        match self.tail {
            TailDecay::Exact => T::zero(),
            TailDecay::PowerLaw { bound, exponent } => {
                let q = exponent + sigma;
                if q <= T::one() {
                    return T::infinity();
                }
                // sum_{n>N} n^-q <= int_N^inf x^-q dx
                let n = T::from_usize_lossy(self.len());
                bound * n.powf(T::one() - q) / (q - T::one())
            }
        }
    }

    pub fn eval(&self, s: Point<T>) -> Result<DirichletValue<T>> {
        if !(s.re > self.abscissa) {
            return Err(Error::Divergence {
                re: s.re.to_f64_lossy(),
                abscissa: self.abscissa.to_f64_lossy(),
            });
        }
        let mut value = self.constant;
        for (i, a) in self.coefficients.iter().enumerate() {
            if a.re == T::zero() && a.im == T::zero() {
                continue;
            }
            let ln_n = T::from_usize_lossy(i + 1).ln();
            value = value + *a * (-s * ln_n).exp();
        }
        Ok(DirichletValue { value, tail_bound: self.tail_bound(s.re) })
    }

    /// Analytic bound `|c0| + sum |a_n| n^(-eps) + tail(eps)` for `sup |H|` on `Re s > eps`.
    pub fn sup_bound(&self, eps: T) -> T {
        let mut acc = self.constant.norm();
        for (i, a) in self.coefficients.iter().enumerate() {
            acc = acc + a.norm() * T::from_usize_lossy(i + 1).powf(-eps);
        }
        acc + self.tail_bound(eps)
    }
}

impl<T: Scalar> fmt::Display for DirichletSeriesSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c0={}", format_complex(self.constant))?;
        for (i, a) in self.coefficients.iter().enumerate() {
            if a.re != T::zero() || a.im != T::zero() {
                write!(f, ",a{}={}", i + 1, format_complex(*a))?;
            }
        }
        Ok(())
    }
}

/// Evaluates a Dirichlet series: `c0 + sum a_n n^(-s)` and the declared tail bound.
pub fn dirichlet_eval<T: Scalar>(d: &DirichletSeriesSpec<T>, s: Point<T>) -> Result<DirichletValue<T>> {
    d.eval(s)
}

/// Half-plane catalog entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HalfPlaneEntry<T> {
    Constant { value: Point<T> },
    Sqrt,
    Dirichlet { series: DirichletSeriesSpec<T> },
}

/// An infinitesimal generator together with the domain it lives on.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec<T> {
    /// `H(z) = (z - tau)(conj(tau) z - 1) p(z)` on the disc.
    BerksonPorta { tau: Point<T>, p: HerglotzSpec<T> },
    HalfPlane { entry: HalfPlaneEntry<T> },
    /// `w -> p(exp(-w))` on the half-plane; conjugate of the disc flow of `-z p(z)` by `-log`.
    PullbackViaLog { p: HerglotzSpec<T> },
    /// `w -> 2 p((w - 1)/(w + 1))` on the half-plane; conjugate of the disc flow of
    /// `(z - 1)^2 p(z)` by the Cayley map.
    PullbackViaCayley { p: HerglotzSpec<T> },
}

impl<T: Scalar> GeneratorSpec<T> {
    pub fn berkson_porta(tau: Point<T>, p: HerglotzSpec<T>) -> Result<Self> {
        if !(tau.norm() <= T::one() + T::lit(1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "Denjoy-Wolff point must satisfy |tau| <= 1, got {}",
                fmt_point(tau)
            )));
        }
        Ok(GeneratorSpec::BerksonPorta { tau, p })
    }

    pub fn half_plane_constant(value: Point<T>) -> Result<Self> {
        if !(value.re >= -T::lit(POSITIVITY_TOL)) || !value.im.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "half-plane constant generator needs Re >= 0, got {}",
                fmt_point(value)
            )));
        }
        Ok(GeneratorSpec::HalfPlane { entry: HalfPlaneEntry::Constant { value } })
    }

    pub fn half_plane_sqrt() -> Self {
        GeneratorSpec::HalfPlane { entry: HalfPlaneEntry::Sqrt }
    }

    pub fn dirichlet(series: DirichletSeriesSpec<T>) -> Self {
        GeneratorSpec::HalfPlane { entry: HalfPlaneEntry::Dirichlet { series } }
    }

    /// The generator `(1 - z)^2 / (1 + z)` whose semigroup shows the square-root rate is sharp.
    pub fn sharpness_example() -> Self {
        GeneratorSpec::BerksonPorta {
            tau: c(1.0, 0.0),
            p: HerglotzSpec::ReciprocalOnePlusZ,
        }
    }

    pub fn domain(&self) -> CanonicalDomain<T> {
        match self {
            GeneratorSpec::BerksonPorta { .. } => CanonicalDomain::UnitDisc,
            _ => CanonicalDomain::RightHalfPlane { offset: T::zero() },
        }
    }

    pub fn is_disc(&self) -> bool {
        matches!(self, GeneratorSpec::BerksonPorta { .. })
    }

    /// Denjoy–Wolff point when it is read off the generator data.
    pub fn denjoy_wolff_point(&self) -> Option<crate::cplane::ExtendedPoint<T>> {
        use crate::cplane::ExtendedPoint;
        match self {
            GeneratorSpec::BerksonPorta { tau, .. } => Some(ExtendedPoint::Finite(*tau)),
            GeneratorSpec::HalfPlane { .. }
            | GeneratorSpec::PullbackViaLog { .. }
            | GeneratorSpec::PullbackViaCayley { .. } => Some(ExtendedPoint::Infinity),
        }
    }

    /// `H(z)`; fails outside the open domain.
    pub fn eval(&self, z: Point<T>) -> Result<Point<T>> {
        let domain = self.domain();
        if !domain.contains(z) {
            return Err(Error::OutsideDomain { domain: domain.name(), point: fmt_point(z) });
        }
        self.eval_unchecked(z, None)
    }

    /// `H(z)` without the domain test. `sqrt_reference`, when given, selects the
    /// square-root branch closest to it instead of the principal one.
    pub(crate) fn eval_unchecked(&self, z: Point<T>, sqrt_reference: Option<Point<T>>) -> Result<Point<T>> {
        let one = c::<T>(1.0, 0.0);
        match self {
            GeneratorSpec::BerksonPorta { tau, p } => {
                Ok((z - *tau) * (tau.conj() * z - one) * p.eval(z))
            }
            GeneratorSpec::HalfPlane { entry } => match entry {
                HalfPlaneEntry::Constant { value } => Ok(*value),
                HalfPlaneEntry::Sqrt => match sqrt_reference {
                    Some(r) => Ok(crate::cplane::continued_sqrt(z, r)),
                    None => principal_sqrt(z),
                },
                HalfPlaneEntry::Dirichlet { series } => series.eval(z).map(|v| v.value),
            },
            GeneratorSpec::PullbackViaLog { p } => Ok(p.eval((-z).exp())),
            GeneratorSpec::PullbackViaCayley { p } => {
                let u = inverse_cayley(z)?;
                Ok(p.eval(u) * T::lit(2.0))
            }
        }
    }

    /// Fails if `Re H < -POSITIVITY_TOL` on an `n`-point half-plane sample.
    pub fn check_half_plane_positivity(&self, n: usize) -> Result<()> {
        if self.is_disc() {
            return Err(Error::Precondition("positivity check applies to half-plane generators".into()));
        }
        for w in sampling::half_plane_points::<T>(n, 1e-6, 1e3, 1e3) {
            let v = self.eval(w)?;
            if !(v.re >= -T::lit(POSITIVITY_TOL)) {
                return Err(Error::InvalidParameter(format!(
                    "Re H = {} < 0 at {}",
                    v.re,
                    fmt_point(w)
                )));
            }
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Display for GeneratorSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::BerksonPorta { tau, p } => {
                write!(f, "bp:tau={},p={p}", format_complex(*tau))
            }
            GeneratorSpec::HalfPlane { entry } => match entry {
                HalfPlaneEntry::Constant { value } => write!(f, "hp:const:{}", format_complex(*value)),
                HalfPlaneEntry::Sqrt => f.write_str("hp:sqrt"),
                HalfPlaneEntry::Dirichlet { series } => write!(f, "hp:dirichlet:{series}"),
            },
            GeneratorSpec::PullbackViaLog { p } => write!(f, "hp:log:p={p}"),
            GeneratorSpec::PullbackViaCayley { p } => write!(f, "hp:cayley:p={p}"),
        }
    }
}

/// `H(z)` for any catalog generator.
pub fn eval_generator<T: Scalar>(g: &GeneratorSpec<T>, z: Point<T>) -> Result<Point<T>> {
    g.eval(z)
}

/// Sample grid over the right half-plane used for sup estimates on `Re s > eps`.
///
/// For each `eps` the points are `eps * 2^k + i y` with `k = 0..re_rungs` and
/// `y` running over `im_count` equispaced values of `[-window, window]`. Any
/// sup over it is a windowed lower estimate of the sup over the whole half-plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfPlaneGrid<T> {
    pub eps: Vec<T>,
    pub re_rungs: usize,
    pub window: T,
    pub im_count: usize,
}

impl<T: Scalar> HalfPlaneGrid<T> {
    pub fn new(eps: Vec<T>, re_rungs: usize, window: T, im_count: usize) -> Result<Self> {
        if eps.is_empty() || eps.iter().any(|e| !(*e > T::zero())) {
            return Err(Error::InvalidParameter("every eps must be > 0".into()));
        }
        if re_rungs == 0 || im_count < 2 || !(window > T::zero()) {
            return Err(Error::InvalidParameter(
                "grid needs re_rungs >= 1, im_count >= 2 and window > 0".into(),
            ));
        }
        Ok(HalfPlaneGrid { eps, re_rungs, window, im_count })
    }

    /// `eps = 2^0 .. 2^-10`, eight real rungs, window 100 with 401 imaginary samples.
    pub fn standard() -> Self {
        let eps = (0..=10).map(|j| T::lit(0.5f64.powi(j))).collect();
        HalfPlaneGrid { eps, re_rungs: 8, window: T::lit(100.0), im_count: 401 }
    }

    fn im_values(&self) -> Vec<T> {
        let n = self.im_count;
        (0..n)
            .map(|j| {
                let u = T::from_usize_lossy(j) / T::from_usize_lossy(n - 1);
                self.window * (T::lit(2.0) * u - T::one())
            })
            .collect()
    }

    /// Points of the grid belonging to `Re s >= eps`.
    pub fn points_for(&self, eps: T) -> Vec<Point<T>> {
        let ims = self.im_values();
        let mut out = Vec::with_capacity(self.re_rungs * ims.len());
        for k in 0..self.re_rungs {
            let re = eps * T::lit(2f64.powi(k as i32));
            out.extend(ims.iter().map(|&y| Point::new(re, y)));
        }
        out
    }

    /// Nested refinement: twice the window at the same spacing, one more real rung.
    pub fn widened(&self) -> Self {
        HalfPlaneGrid {
            eps: self.eps.clone(),
            re_rungs: self.re_rungs + 1,
            window: self.window * T::lit(2.0),
            im_count: 2 * (self.im_count - 1) + 1,
        }
    }
}

/// One `eps` row of a sup profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupRow<T> {
    pub eps: T,
    pub sup: T,
    pub argmax: Point<T>,
}

fn sup_on<T: Scalar>(g: &GeneratorSpec<T>, pts: &[Point<T>]) -> Result<(T, Point<T>)> {
    let mut best = (T::neg_infinity(), Point::new(T::zero(), T::zero()));
    for &z in pts {
        let m = g.eval(z)?.norm();
        if m > best.0 || m.is_nan() {
            best = (m, z);
        }
    }
    Ok(best)
}

/// Outcome of the class-G generator test for a Dirichlet series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassGReport<T> {
    /// Grid points where `Re H < -POSITIVITY_TOL`, with the value found there.
    pub violations: Vec<(Point<T>, Point<T>)>,
    pub points_checked: usize,
    pub sup_profile: Vec<SupRow<T>>,
    /// Analytic `sup |H|` bound per `eps`, including the declared tail.
    pub analytic_bounds: Vec<T>,
    pub maps_into_closed_half_plane: bool,
    pub bounded_on_each_half_plane: bool,
    pub pass: bool,
}

/// Checks on a grid that a Dirichlet series maps `C+` into its closure and is
/// bounded on each `Re s > eps`.
pub fn check_class_g_generator<T: Scalar>(
    d: &DirichletSeriesSpec<T>,
    grid: &HalfPlaneGrid<T>,
) -> Result<ClassGReport<T>> {
    let min_eps = grid.eps.iter().cloned().fold(T::infinity(), T::min);
    if !(d.abscissa < min_eps) {
        return Err(Error::Precondition(format!(
            "series abscissa {} exceeds the smallest grid eps",
            d.abscissa
        )));
    }
    let g = GeneratorSpec::dirichlet(d.clone());
    let tol = T::lit(POSITIVITY_TOL);
    let mut violations = Vec::new();
    let mut points_checked = 0;
    let mut sup_profile = Vec::with_capacity(grid.eps.len());
    let mut analytic_bounds = Vec::with_capacity(grid.eps.len());
    for &eps in &grid.eps {
        let pts = grid.points_for(eps);
        for &z in &pts {
            let v = d.eval(z)?.value;
            points_checked += 1;
            if !(v.re >= -tol) {
                violations.push((z, v));
            }
        }
        let (sup, argmax) = sup_on(&g, &pts)?;
        sup_profile.push(SupRow { eps, sup, argmax });
        analytic_bounds.push(d.sup_bound(eps));
    }
    let maps_into_closed_half_plane = violations.is_empty();
    let bounded_on_each_half_plane = sup_profile.iter().all(|r| r.sup.is_finite())
        && analytic_bounds.iter().all(|b| b.is_finite());
    Ok(ClassGReport {
        violations,
        points_checked,
        sup_profile,
        analytic_bounds,
        maps_into_closed_half_plane,
        bounded_on_each_half_plane,
        pass: maps_into_closed_half_plane && bounded_on_each_half_plane,
    })
}

/// Radial/angular lattice over the disc: radii `1 - 2^-k`, `k = 1..=k_max`,
/// plus the centre, at `angular` equispaced angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DiscGrid {
    pub k_max: u32,
    pub angular: usize,
}

impl DiscGrid {
    pub fn points<T: Scalar>(&self) -> Vec<Point<T>> {
        let mut out = vec![Point::new(T::zero(), T::zero())];
        for k in 1..=self.k_max {
            let r = 1.0 - 0.5f64.powi(k as i32);
            for j in 0..self.angular {
                let th = std::f64::consts::TAU * j as f64 / self.angular as f64;
                out.push(Point::new(T::lit(r * th.cos()), T::lit(r * th.sin())));
            }
        }
        out
    }
}

/// Grid estimate of the Herglotz growth constant `max (1 - |z|^2) |p(z)|`.
pub fn herglotz_growth_constant<T: Scalar>(p: &HerglotzSpec<T>, grid: &DiscGrid) -> Result<T> {
    if 0.5f64.powi(grid.k_max as i32) > 1e-4 || grid.angular < 8 {
        return Err(Error::Precondition(
            "growth-constant grid must reach radius 1 - 1e-4 with at least 8 angles".into(),
        ));
    }
    let mut m = T::zero();
    for z in grid.points::<T>() {
        let v = (T::one() - z.norm_sqr()) * p.eval(z).norm();
        if v.is_finite() && v > m {
            m = v;
        }
    }
    Ok(m)
}

/// Windowed `sup |H|` per `eps` and the smallest `K` with `sup <= K / eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundProfile<T> {
    pub rows: Vec<SupRow<T>>,
    pub k_hat: T,
    /// False when enlarging the window raises some sup by more than 1%: the
    /// generator is then not bounded on that half-plane and `k_hat` means nothing.
    pub bounded: bool,
    pub window: T,
}

/// Relative growth of a windowed sup under window doubling that marks it unbounded.
pub const WINDOW_GROWTH_FLAG: f64 = 0.01;

pub fn halfplane_bound_profile<T: Scalar>(g: &GeneratorSpec<T>, grid: &HalfPlaneGrid<T>) -> Result<BoundProfile<T>> {
    if g.is_disc() {
        return Err(Error::Precondition("bound profile needs a half-plane generator".into()));
    }
    let wide = grid.widened();
    let mut rows = Vec::with_capacity(grid.eps.len());
    let mut bounded = true;
    let mut k_hat = T::zero();
    for &eps in &grid.eps {
        let (sup, argmax) = sup_on(g, &grid.points_for(eps))?;
        let (sup_wide, _) = sup_on(g, &wide.points_for(eps))?;
        if !(sup_wide <= sup * T::lit(1.0 + WINDOW_GROWTH_FLAG)) {
            bounded = false;
        }
        k_hat = k_hat.max(eps * sup);
        rows.push(SupRow { eps, sup, argmax });
    }
    Ok(BoundProfile { rows, k_hat, bounded, window: grid.window })
}

/// `(Phi_t(z) - z) / t`, which tends to `H(z)` as `t -> 0+`.
pub fn difference_quotient_generator<T: Scalar, F: FlowMap<T> + ?Sized>(
    flow: &F,
    z: Point<T>,
    t: T,
) -> Result<Point<T>> {
    if !(t > T::zero()) {
        return Err(Error::InvalidParameter(format!("difference quotient needs t > 0, got {t}")));
    }
    Ok((flow.apply(z, t)? - z) / t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{ClosedForm, ClosedFormFlow};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    type P = Point<f64>;

    fn p(re: f64, im: f64) -> P {
        P::new(re, im)
    }

    #[test]
    fn berkson_porta_examples() {
        let g = GeneratorSpec::berkson_porta(p(0.0, 0.0), HerglotzSpec::constant(p(1.0, 0.0)).unwrap()).unwrap();
        assert_abs_diff_eq!((g.eval(p(0.5, 0.0)).unwrap() - p(-0.5, 0.0)).norm(), 0.0, epsilon = 1e-15);
        let ex = GeneratorSpec::<f64>::sharpness_example();
        assert_eq!(ex.eval(p(0.0, 0.0)).unwrap(), p(1.0, 0.0));
        // (1 - z)^2 / (1 + z) at z = 0.5
        assert_abs_diff_eq!((ex.eval(p(0.5, 0.0)).unwrap() - p(0.25 / 1.5, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(GeneratorSpec::<f64>::half_plane_sqrt().eval(p(4.0, 0.0)).unwrap(), p(2.0, 0.0));
    }

    #[test]
    fn domain_violations() {
        let ex = GeneratorSpec::<f64>::sharpness_example();
        assert!(matches!(ex.eval(p(1.0, 0.0)), Err(Error::OutsideDomain { .. })));
        let s = GeneratorSpec::<f64>::half_plane_sqrt();
        assert!(matches!(s.eval(p(-1.0, 0.0)), Err(Error::OutsideDomain { .. })));
        assert!(matches!(
            s.eval_unchecked(p(-1.0, 0.0), None),
            Err(Error::BranchCut(_))
        ));
        assert!(GeneratorSpec::berkson_porta(p(1.1, 0.0), HerglotzSpec::ReciprocalOnePlusZ).is_err());
        assert!(GeneratorSpec::berkson_porta(p(0.0, 1.0), HerglotzSpec::ReciprocalOnePlusZ).is_ok());
        assert!(GeneratorSpec::<f64>::half_plane_constant(p(-0.5, 1.0)).is_err());
    }

    #[test]
    fn berkson_porta_factor_recovers_p() {
        let taus = [p(0.0, 0.0), p(0.3, -0.4), p(1.0, 0.0), p(0.0, -1.0)];
        let ps = [
            HerglotzSpec::constant(p(1.0, 2.0)).unwrap(),
            HerglotzSpec::moebius_cayley(0.7).unwrap(),
            HerglotzSpec::ReciprocalOnePlusZ,
            HerglotzSpec::user("rotated_cayley", &[1.5, 2.0]).unwrap(),
            HerglotzSpec::user("affine", &[1.0, 3.0, 0.6, -0.8]).unwrap(),
            HerglotzSpec::user("cayley_power", &[2.0, 0.5]).unwrap(),
        ];
        let pts = sampling::disc_points::<f64>(10_000, 1e-6);
        for &tau in &taus {
            for herg in &ps {
                let g = GeneratorSpec::berkson_porta(tau, herg.clone()).unwrap();
                for &z in &pts {
                    let den = (z - tau) * (tau.conj() * z - 1.0);
                    if den.norm() <= 1e-8 {
                        continue;
                    }
                    let want = herg.eval(z);
                    let got = g.eval(z).unwrap() / den;
                    assert!(
                        (got - want).norm() <= 1e-12 * (1.0 + want.norm()),
                        "tau {tau}, p {herg}, z {z}"
                    );
                }
            }
        }
    }

    #[test]
    fn catalog_herglotz_positivity() {
        for herg in [
            HerglotzSpec::constant(p(0.0, -3.0)).unwrap(),
            HerglotzSpec::moebius_cayley(2.0).unwrap(),
            HerglotzSpec::ReciprocalOnePlusZ,
        ] {
            herg.check_positivity(10_000).unwrap();
        }
        assert!(HerglotzSpec::<f64>::user("affine", &[0.5, 0.0, 1.0, 0.0]).is_err());
        assert!(HerglotzSpec::<f64>::user("cayley_power", &[1.0, 1.5]).is_err());
        assert!(matches!(HerglotzSpec::<f64>::user("nope", &[]), Err(Error::UnknownId(_))));
        assert!(HerglotzSpec::<f64>::user("affine", &[1.0]).is_err());
    }

    #[test]
    fn half_plane_catalog_positivity() {
        let d = DirichletSeriesSpec::from_terms(p(1.0, 0.0), &[(2, p(1.0, 0.0))]);
        for g in [
            GeneratorSpec::half_plane_constant(p(0.0, 1.0)).unwrap(),
            GeneratorSpec::half_plane_constant(p(2.0, -1.0)).unwrap(),
            GeneratorSpec::half_plane_sqrt(),
            GeneratorSpec::dirichlet(d),
            GeneratorSpec::PullbackViaLog { p: HerglotzSpec::ReciprocalOnePlusZ },
            GeneratorSpec::PullbackViaCayley { p: HerglotzSpec::ReciprocalOnePlusZ },
            GeneratorSpec::PullbackViaCayley { p: HerglotzSpec::moebius_cayley(1.0).unwrap() },
        ] {
            g.check_half_plane_positivity(10_000).unwrap();
        }
    }

    #[test]
    fn cayley_pullback_of_reciprocal_is_one_plus_inverse() {
        let g = GeneratorSpec::PullbackViaCayley { p: HerglotzSpec::ReciprocalOnePlusZ };
        for w in sampling::half_plane_points::<f64>(500, 1e-3, 1e2, 1e2) {
            let want = P::new(1.0, 0.0) + P::new(1.0, 0.0) / w;
            assert!((g.eval(w).unwrap() - want).norm() <= 1e-12 * want.norm());
        }
    }

    #[test]
    fn dirichlet_examples() {
        let d = DirichletSeriesSpec::from_terms(p(1.0, 0.0), &[(2, p(1.0, 0.0))]);
        let v = dirichlet_eval(&d, p(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v.value.re, 1.5, epsilon = 1e-15);
        assert_eq!(v.tail_bound, 0.0);
        for j in 0..=200 {
            let t = -50.0 + 0.5 * j as f64;
            let v = d.eval(p(0.0, t)).unwrap().value;
            // |2^{-it}| = 1
            assert_abs_diff_eq!((v - 1.0).norm(), 1.0, epsilon = 1e-12);
            assert!(v.re >= -1e-12);
        }
        let empty = DirichletSeriesSpec::<f64>::finite(p(0.0, 0.0), vec![]);
        assert_eq!(empty.eval(p(3.0, -2.0)).unwrap().value, p(0.0, 0.0));
    }

    #[test]
    fn dirichlet_abscissa_and_tail() {
        // zeta-like coefficients a_n = 1 truncated at N = 100, declared |a_n| <= 1
        let d = DirichletSeriesSpec::finite(p(0.0, 0.0), vec![p(1.0, 0.0); 100])
            .with_tail(TailDecay::PowerLaw { bound: 1.0, exponent: 0.0 }, 1.0);
        assert!(matches!(d.eval(p(1.0, 0.0)), Err(Error::Divergence { .. })));
        let v = d.eval(p(2.0, 0.0)).unwrap();
        // int_100^inf x^-2 = 0.01
        assert_abs_diff_eq!(v.tail_bound, 0.01, epsilon = 1e-15);
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((zeta2 - v.value.re).abs() <= v.tail_bound);
        assert!(d.tail_bound(0.5).is_infinite());
    }

    fn small_grid() -> HalfPlaneGrid<f64> {
        HalfPlaneGrid::new(vec![1.0, 0.5, 0.25, 0.1, 0.01], 6, 50.0, 201).unwrap()
    }

    #[test]
    fn class_g_examples() {
        let good = DirichletSeriesSpec::from_terms(p(1.0, 0.0), &[(2, p(1.0, 0.0))]);
        let r = check_class_g_generator(&good, &small_grid()).unwrap();
        assert!(r.pass, "{:?}", r.violations.first());

        let neg = DirichletSeriesSpec::finite(p(-1.0, 0.0), vec![]);
        let r = check_class_g_generator(&neg, &small_grid()).unwrap();
        assert!(!r.pass);
        assert_eq!(r.violations.len(), r.points_checked);

        // 2^{-s}: sup on Re s > eps is 2^{-eps}, attained on the real axis
        let pure = DirichletSeriesSpec::from_terms(p(0.0, 0.0), &[(2, p(1.0, 0.0))]);
        let r = check_class_g_generator(&pure, &small_grid()).unwrap();
        for row in &r.sup_profile {
            assert_abs_diff_eq!(row.sup, 2f64.powf(-row.eps), epsilon = 1e-12);
        }
        assert!(r.bounded_on_each_half_plane);
        // Re 2^{-s} = 2^{-x} cos(y ln 2) changes sign, so positivity fails on the grid
        assert!(!r.maps_into_closed_half_plane);
    }

    #[test]
    fn growth_constant_examples() {
        let grid = DiscGrid { k_max: 16, angular: 64 };
        let one = herglotz_growth_constant(&HerglotzSpec::constant(p(1.0, 0.0)).unwrap(), &grid).unwrap();
        assert_abs_diff_eq!(one, 1.0, epsilon = 1e-15);
        let rec = herglotz_growth_constant(&HerglotzSpec::<f64>::ReciprocalOnePlusZ, &grid).unwrap();
        assert!((1.9..=2.0).contains(&rec), "{rec}");
        let cay = herglotz_growth_constant(&HerglotzSpec::moebius_cayley(1.0).unwrap(), &grid).unwrap();
        assert!((3.8..=4.0).contains(&cay), "{cay}");
        assert!(herglotz_growth_constant(&HerglotzSpec::<f64>::ReciprocalOnePlusZ, &DiscGrid { k_max: 10, angular: 64 }).is_err());
    }

    #[test]
    fn growth_constant_monotone_under_refinement() {
        let specs = [
            HerglotzSpec::ReciprocalOnePlusZ,
            HerglotzSpec::moebius_cayley(1.0).unwrap(),
            HerglotzSpec::user("rotated_cayley", &[1.0, 1.0]).unwrap(),
            HerglotzSpec::user("cayley_power", &[1.0, 0.3]).unwrap(),
        ];
        for s in &specs {
            let mut last = 0.0;
            for (k, a) in [(14, 8), (15, 16), (16, 32), (18, 64), (20, 128)] {
                let m = herglotz_growth_constant(s, &DiscGrid { k_max: k, angular: a }).unwrap();
                assert!(m >= last, "{s}: {m} < {last}");
                last = m;
            }
        }
    }

    #[test]
    fn bound_profile_examples() {
        let grid = small_grid();
        let cst = GeneratorSpec::half_plane_constant(p(3.0, 4.0)).unwrap();
        let prof = halfplane_bound_profile(&cst, &grid).unwrap();
        assert!(prof.rows.iter().all(|r| (r.sup - 5.0).abs() < 1e-15));
        assert!(prof.bounded);

        let m_hat = herglotz_growth_constant(&HerglotzSpec::<f64>::ReciprocalOnePlusZ, &DiscGrid { k_max: 20, angular: 64 }).unwrap();
        for g in [
            GeneratorSpec::PullbackViaLog { p: HerglotzSpec::ReciprocalOnePlusZ },
            GeneratorSpec::PullbackViaCayley { p: HerglotzSpec::ReciprocalOnePlusZ },
        ] {
            let prof = halfplane_bound_profile(&g, &grid).unwrap();
            assert!(prof.bounded, "{g}");
            for r in &prof.rows {
                assert!(r.sup <= 2.0 * m_hat / r.eps, "{g}: eps {} sup {}", r.eps, r.sup);
            }
        }

        let sq = GeneratorSpec::half_plane_sqrt();
        let prof = halfplane_bound_profile(&sq, &grid).unwrap();
        assert!(!prof.bounded);
        assert_eq!(prof.rows[0].argmax.im.abs(), 50.0);
    }

    #[test]
    fn difference_quotient_examples() {
        let exp = ClosedFormFlow(ClosedForm::ExpContraction);
        let q = difference_quotient_generator(&exp, p(0.5, 0.0), 1e-6).unwrap();
        assert!((q - p(-0.5, 0.0)).norm() <= 1e-6);

        let tr = ClosedFormFlow(ClosedForm::Translation { c: p(1.0, 1.0) });
        for &(z, t) in &[(p(1.0, 2.0), 0.5), (p(3.0, -1.0), 0.25), (p(2.0, 0.0), 1.0)] {
            assert_eq!(difference_quotient_generator(&tr, z, t).unwrap(), p(1.0, 1.0));
        }

        let sq = ClosedFormFlow(ClosedForm::SqrtFlow);
        let q = difference_quotient_generator(&sq, p(1.0, 0.0), 1e-6).unwrap();
        assert!((q - p(1.0, 0.0)).norm() <= 1e-5);
        assert!(difference_quotient_generator(&sq, p(1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn difference_quotient_is_first_order() {
        let cases = [
            (ClosedForm::ExpContraction, GeneratorSpec::berkson_porta(p(0.0, 0.0), HerglotzSpec::constant(p(1.0, 0.0)).unwrap()).unwrap(), vec![p(0.5, 0.0), p(-0.3, 0.6), p(0.9, 0.1)]),
            (ClosedForm::SqrtFlow, GeneratorSpec::half_plane_sqrt(), vec![p(1.0, 0.0), p(0.2, 3.0), p(5.0, -2.0)]),
            (ClosedForm::ParabolicDisc, GeneratorSpec::berkson_porta(p(1.0, 0.0), HerglotzSpec::constant(p(1.0, 0.0)).unwrap()).unwrap(), vec![p(0.0, 0.0), p(-0.5, 0.5), p(0.7, -0.2)]),
        ];
        for (cf, g, zs) in &cases {
            let flow = ClosedFormFlow(*cf);
            for &z in zs {
                let h = g.eval(z).unwrap();
                let mut last = f64::INFINITY;
                for j in 2..12 {
                    let t = 0.5f64.powi(j);
                    let err = (difference_quotient_generator(&flow, z, t).unwrap() - h).norm();
                    assert!(err < last, "{cf:?} at {z}: t {t}, err {err} >= {last}");
                    last = err;
                }
            }
        }
    }

    #[test]
    fn ids_display() {
        let g = GeneratorSpec::berkson_porta(p(0.0, 0.0), HerglotzSpec::constant(p(1.0, 0.0)).unwrap()).unwrap();
        assert_eq!(g.to_string(), "bp:tau=0,p=const:1");
        assert_eq!(GeneratorSpec::<f64>::half_plane_sqrt().to_string(), "hp:sqrt");
        assert_eq!(GeneratorSpec::half_plane_constant(p(1.0, -2.0)).unwrap().to_string(), "hp:const:1-2i");
        let d = DirichletSeriesSpec::from_terms(p(1.0, 0.0), &[(2, p(1.0, 0.0))]);
        assert_eq!(GeneratorSpec::dirichlet(d).to_string(), "hp:dirichlet:c0=1,a2=1");
        assert_eq!(GeneratorSpec::<f64>::sharpness_example().to_string(), "bp:tau=1,p=recip");
    }

    proptest! {
        #[test]
        fn herglotz_user_entries_have_nonnegative_real_part(
            k in 0.01f64..10.0, theta in -3.2f64..3.2, beta in 0.0f64..=1.0,
            r in 0.0f64..0.999, phi in -3.2f64..3.2,
        ) {
            let z = P::from_polar(r, phi);
            let a = HerglotzSpec::user("rotated_cayley", &[k, theta]).unwrap();
            let b = HerglotzSpec::user("cayley_power", &[k, beta]).unwrap();
            prop_assert!(a.eval(z).re >= -1e-10);
            prop_assert!(b.eval(z).re >= -1e-10);
        }
    }
}
