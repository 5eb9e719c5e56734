//! Polylines, the monotone envelope of a curve's imaginary part, and the
//! right-hand domain cut out of a square by such an envelope.

use std::io::{Read, Write};

use serde::Serialize;

use crate::cplane::{fmt_point, CanonicalDomain, Point};
use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::hmeasure::{BoundaryArc, BoundarySubset, JordanDomain};
use crate::io;
use crate::scalar::Scalar;

/// Trajectories shorter than this are resampled before taking the envelope.
pub const MIN_ENVELOPE_SAMPLES: usize = 64;

/// An open polygonal curve with at least two vertices and no repeated consecutive vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline<T> {
    vertices: Vec<Point<T>>,
}

impl<T: Scalar> Polyline<T> {
    pub fn new(vertices: Vec<Point<T>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Degenerate(format!("polyline needs two vertices, got {}", vertices.len())));
        }
        if let Some(w) = vertices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Degenerate(format!("repeated vertex {}", fmt_point(w[0]))));
        }
        if vertices.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Degenerate("non-finite vertex".into()));
        }
        Ok(Polyline { vertices })
    }

    /// Like [`Polyline::new`] after dropping consecutive duplicates.
    pub fn dedup(mut vertices: Vec<Point<T>>) -> Result<Self> {
        vertices.dedup();
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn start(&self) -> Point<T> {
        self.vertices[0]
    }

    pub fn end(&self) -> Point<T> {
        self.vertices[self.vertices.len() - 1]
    }

    pub fn length(&self) -> T {
        polyline_length(self)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        io::write_points_csv(w, &self.vertices)
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        Self::new(io::read_points_csv(r)?)
    }
}

pub fn polyline_length<T: Scalar>(p: &Polyline<T>) -> T {
    p.vertices.windows(2).fold(T::zero(), |acc, w| acc + (w[1] - w[0]).norm())
}

/// Suffix minimum `g(x_i) = min_{j >= i} f(x_j)` in one reverse pass.
pub fn monotone_envelope<T: Scalar>(samples: &[(T, T)]) -> Result<Vec<(T, T)>> {
    if samples.len() < 2 {
        return Err(Error::Precondition(format!("envelope needs two samples, got {}", samples.len())));
    }
    if let Some(i) = samples.windows(2).position(|w| !(w[1].0 >= w[0].0)) {
        return Err(Error::Precondition(format!("samples not sorted by x at index {}", i + 1)));
    }
    let mut out = samples.to_vec();
    let mut running = T::infinity();
    for s in out.iter_mut().rev() {
        running = running.min(s.1);
        s.1 = running;
    }
    Ok(out)
}

/// The trajectory with its imaginary part replaced by the monotone envelope (over time).
pub fn envelope_curve<T: Scalar>(traj: &Trajectory<T>) -> Result<Polyline<T>> {
    if traj.len() < 2 || traj.start() == traj.end() {
        return Err(Error::Degenerate("trajectory has a single point".into()));
    }
    let samples: Vec<(T, Point<T>)> = if traj.len() < MIN_ENVELOPE_SAMPLES {
        traj.resample(MIN_ENVELOPE_SAMPLES)
    } else {
        traj.samples.iter().map(|s| (s.t, s.z)).collect()
    };
    let f: Vec<(T, T)> = samples.iter().map(|&(t, z)| (t, z.im)).collect();
    let g = monotone_envelope(&f)?;
    Polyline::dedup(samples.iter().zip(&g).map(|(&(_, z), &(_, y))| Point::new(z.re, y)).collect())
}

/// The region of a square to the right of a monotone envelope curve.
#[derive(Debug, Clone)]
pub struct ProofDomain<T> {
    pub domain: JordanDomain<T>,
    /// The boundary portion traced by the (clipped) envelope.
    pub envelope: BoundarySubset<T>,
    pub corner: Point<T>,
    pub side: T,
}

impl<T: Scalar> ProofDomain<T> {
    pub fn center(&self) -> Point<T> {
        self.corner + Point::new(self.side, self.side) / T::lit(2.0)
    }
}

fn clip_to_band<T: Scalar>(v: &[Point<T>], y0: T, y1: T) -> Result<Vec<Point<T>>> {
    let first = v[0];
    let last = v[v.len() - 1];
    if first.im > y0 || last.im < y1 {
        return Err(Error::Precondition(format!(
            "envelope must run from Im <= {y0} to Im >= {y1}, got {} to {}",
            first.im, last.im
        )));
    }
    let lerp = |a: Point<T>, b: Point<T>, y: T| {
        if b.im == a.im {
            a
        } else {
            a + (b - a) * ((y - a.im) / (b.im - a.im))
        }
    };
    let mut out = Vec::with_capacity(v.len());
    for w in v.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b.im <= y0 || a.im > y1 {
            continue;
        }
        if out.is_empty() {
            out.push(if a.im < y0 { lerp(a, b, y0) } else { a });
        }
        if b.im >= y1 {
            out.push(if b.im > y1 { lerp(a, b, y1) } else { b });
            break;
        }
        out.push(b);
    }
    // crossing points sit exactly on the band edges
    if let Some(p) = out.first_mut() {
        p.im = y0;
    }
    if let Some(p) = out.last_mut() {
        p.im = y1;
    }
    out.dedup();
    Ok(out)
}

/// Builds the domain bounded by the envelope (clipped to the square's height) and the
/// part of the square's boundary to its right.
pub fn build_proof_domain<T: Scalar>(square: &CanonicalDomain<T>, envelope: &Polyline<T>) -> Result<ProofDomain<T>> {
    let CanonicalDomain::Square { corner, side } = *square else {
        return Err(Error::InvalidParameter(format!("proof domain needs a square, got {square}")));
    };
    let v = envelope.vertices();
    let tol = side * T::lit(1e-12);
    for w in v.windows(2) {
        if w[1].im < w[0].im || w[1].re < w[0].re - tol {
            return Err(Error::Precondition(format!("envelope is not monotone at {}", fmt_point(w[1]))));
        }
    }
    let (y0, y1) = (corner.im, corner.im + side);
    let clipped = clip_to_band(v, y0, y1)?;
    if clipped.len() < 2 {
        return Err(Error::Degenerate("envelope collapses inside the square".into()));
    }
    let right = corner.re + side;
    if let Some(p) = clipped.iter().find(|p| p.re < corner.re - tol || p.re >= right) {
        return Err(Error::Precondition(format!("envelope exits the square at {}", fmt_point(*p))));
    }
    let p0 = clipped[0];
    let pend = clipped[clipped.len() - 1];
    let mut boundary = vec![p0, Point::new(right, y0), Point::new(right, y1)];
    boundary.extend(clipped.iter().rev().copied());
    boundary.pop();
    let domain = JordanDomain::new(boundary)?;
    let n = domain.len();
    let arcs = (3..n)
        .map(|k| {
            let (segment, t0, t1) = domain.input_interval(k, T::zero(), T::one());
            BoundaryArc { segment, t0, t1 }
        })
        .collect();
    let envelope = BoundarySubset::new(&domain, arcs)?;
    debug_assert!(domain.vertices().contains(&pend));
    Ok(ProofDomain { domain, envelope, corner, side })
}
