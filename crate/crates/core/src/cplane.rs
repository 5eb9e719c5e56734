//! Complex-plane kernel: canonical domains, the Cayley transform between the
//! unit disc and the right half-plane, and square roots.

use std::fmt;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point of the complex plane.
pub type Point<T> = Complex<T>;

/// Tolerance used when deciding whether a mapped point still lies inside its domain.
pub const BOUNDARY_TOL: f64 = 1e-12;

pub(crate) fn fmt_point<T: Scalar>(z: Point<T>) -> String {
    format!("({:e}, {:e})", z.re, z.im)
}

/// A point of the Riemann sphere: either finite or the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ExtendedPoint<T> {
    Finite(Point<T>),
    Infinity,
}

impl<T: Scalar> ExtendedPoint<T> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedPoint::Infinity)
    }

    pub fn finite(&self) -> Option<Point<T>> {
        match *self {
            ExtendedPoint::Finite(z) => Some(z),
            ExtendedPoint::Infinity => None,
        }
    }
}

/// The open domains the toolkit works on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CanonicalDomain<T> {
    UnitDisc,
    /// `{ Re z > offset }`.
    RightHalfPlane { offset: T },
    /// Open axis-parallel square with lower-left corner `corner`.
    Square { corner: Point<T>, side: T },
    /// The disc `D(lambda, 1 - lambda)`, internally tangent to the unit circle at 1.
    Horodisc { lambda: T },
}

impl<T: Scalar> CanonicalDomain<T> {
    pub fn unit_disc() -> Self {
        CanonicalDomain::UnitDisc
    }

    pub fn right_half_plane(offset: T) -> Result<Self> {
        if !(offset >= T::zero()) || !offset.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "half-plane offset must be finite and >= 0, got {offset}"
            )));
        }
        Ok(CanonicalDomain::RightHalfPlane { offset })
    }

    pub fn square(corner: Point<T>, side: T) -> Result<Self> {
        if !(side > T::zero()) || !side.is_finite() || !corner.re.is_finite() || !corner.im.is_finite()
        {
            return Err(Error::InvalidParameter(format!(
                "square needs a finite corner and side > 0, got side {side}"
            )));
        }
        Ok(CanonicalDomain::Square { corner, side })
    }

    pub fn horodisc(lambda: T) -> Result<Self> {
        if !(lambda > T::zero() && lambda < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "horodisc parameter must lie in (0, 1), got {lambda}"
            )));
        }
        Ok(CanonicalDomain::Horodisc { lambda })
    }

    /// True iff `z` lies in the open domain.
    pub fn contains(&self, z: Point<T>) -> bool {
        self.signed_distance(z) > T::zero()
    }

    /// Distance from `z` to the boundary, positive inside and negative outside.
    pub fn signed_distance(&self, z: Point<T>) -> T {
        match *self {
            CanonicalDomain::UnitDisc => T::one() - z.norm(),
            CanonicalDomain::RightHalfPlane { offset } => z.re - offset,
            CanonicalDomain::Square { corner, side } => {
                let dx = (z.re - corner.re).min(corner.re + side - z.re);
                let dy = (z.im - corner.im).min(corner.im + side - z.im);
                dx.min(dy)
            }
            CanonicalDomain::Horodisc { lambda } => {
                (T::one() - lambda) - (z - Point::new(lambda, T::zero())).norm()
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            CanonicalDomain::UnitDisc => "unit disc".to_string(),
            CanonicalDomain::RightHalfPlane { offset } => format!("half-plane Re > {offset}"),
            CanonicalDomain::Square { corner, side } => {
                format!("square at {} with side {side}", fmt_point(*corner))
            }
            CanonicalDomain::Horodisc { lambda } => format!("horodisc lambda = {lambda}"),
        }
    }
}

impl<T: Scalar> fmt::Display for CanonicalDomain<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Cayley transform `(1 + z) / (1 - z)` from the unit disc onto the right half-plane.
pub fn cayley<T: Scalar>(z: Point<T>) -> Result<Point<T>> {
    if !(z.norm() < T::one() - T::lit(BOUNDARY_TOL)) {
        return Err(Error::OutsideDomain {
            domain: "unit disc".into(),
            point: fmt_point(z),
        });
    }
    let one = Point::new(T::one(), T::zero());
    Ok((one + z) / (one - z))
}

/// Inverse Cayley transform `(w - 1) / (w + 1)` from the right half-plane onto the disc.
pub fn inverse_cayley<T: Scalar>(w: Point<T>) -> Result<Point<T>> {
    if !(w.re > T::zero()) || !w.im.is_finite() {
        return Err(Error::OutsideDomain {
            domain: "right half-plane".into(),
            point: fmt_point(w),
        });
    }
    let one = Point::new(T::one(), T::zero());
    Ok((w - one) / (w + one))
}

/// Principal square root, with the cut along the negative real axis.
pub fn principal_sqrt<T: Scalar>(z: Point<T>) -> Result<Point<T>> {
    if z.im == T::zero() && z.re < T::zero() {
        return Err(Error::BranchCut(fmt_point(z)));
    }
    if z.re.is_nan() || z.im.is_nan() {
        return Err(Error::InvalidParameter("square root of NaN".into()));
    }
    Ok(z.sqrt())
}

/// Square root of `z` continued from `reference`: of the two roots, the one
/// closest to `reference`.
pub fn continued_sqrt<T: Scalar>(z: Point<T>, reference: Point<T>) -> Point<T> {
    let r = z.sqrt();
    if (r - reference).norm_sqr() <= (-r - reference).norm_sqr() {
        r
    } else {
        -r
    }
}
