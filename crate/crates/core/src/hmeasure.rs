//! Harmonic measure on polygonal Jordan domains by walk-on-spheres.

use std::f64::consts::TAU;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cplane::{fmt_point, Point};
use crate::error::{Error, Result};
use crate::io::{fmt17, DomainDocument};
use crate::scalar::Scalar;

/// Walks stop once they are within `STOP_TOL_FACTOR * diameter` of the boundary.
pub const STOP_TOL_FACTOR: f64 = 1e-6;
/// Fewest walks accepted by [`harmonic_measure`].
pub const MIN_WALKS: usize = 1000;
const MAX_WALK_STEPS: usize = 1_000_000;
const BRUTE_FORCE_SEGMENTS: usize = 32;

/// Nearest boundary point: segment index and parameter along it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestHit<T> {
    pub distance: T,
    pub segment: usize,
    pub t: T,
}

#[derive(Debug, Clone)]
struct SegmentGrid {
    origin: (f64, f64),
    h: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl SegmentGrid {
    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x - self.origin.0) / self.h).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((y - self.origin.1) / self.h).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    fn clamp_to_box(&self, x: f64, y: f64) -> (f64, f64) {
        let x1 = self.origin.0 + self.h * self.nx as f64;
        let y1 = self.origin.1 + self.h * self.ny as f64;
        (x.clamp(self.origin.0, x1), y.clamp(self.origin.1, y1))
    }
}

/// A simple closed polygon, stored counter-clockwise.
#[derive(Debug, Clone)]
pub struct JordanDomain<T> {
    vertices: Vec<Point<T>>,
    lengths: Vec<T>,
    cumulative: Vec<T>,
    perimeter: T,
    lower: Point<T>,
    upper: Point<T>,
    reversed: bool,
    grid: Option<SegmentGrid>,
}

fn cross<T: Scalar>(a: Point<T>, b: Point<T>) -> T {
    a.re * b.im - a.im * b.re
}

fn dot<T: Scalar>(a: Point<T>, b: Point<T>) -> T {
    a.re * b.re + a.im * b.im
}

fn orient<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>) -> T {
    cross(b - a, c - a)
}

fn on_segment<T: Scalar>(a: Point<T>, b: Point<T>, p: Point<T>) -> bool {
    p.re >= a.re.min(b.re) && p.re <= a.re.max(b.re) && p.im >= a.im.min(b.im) && p.im <= a.im.max(b.im)
}

fn segments_intersect<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>, d: Point<T>) -> bool {
    let zero = T::zero();
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > zero && d2 < zero) || (d1 < zero && d2 > zero)) && ((d3 > zero && d4 < zero) || (d3 < zero && d4 > zero)) {
        return true;
    }
    (d1 == zero && on_segment(c, d, a))
        || (d2 == zero && on_segment(c, d, b))
        || (d3 == zero && on_segment(a, b, c))
        || (d4 == zero && on_segment(a, b, d))
}

fn nearest_on_segment<T: Scalar>(a: Point<T>, b: Point<T>, p: Point<T>) -> (T, T) {
    let ab = b - a;
    let t = (dot(p - a, ab) / ab.norm_sqr()).max(T::zero()).min(T::one());
    ((p - (a + ab * t)).norm(), t)
}

impl<T: Scalar> JordanDomain<T> {
    /// Builds a domain from polygon vertices in either orientation. A repeated closing vertex is dropped.
    pub fn new(vertices: Vec<Point<T>>) -> Result<Self> {
        let mut v = vertices;
        if v.len() > 1 && v.first() == v.last() {
            v.pop();
        }
        if v.len() < 3 {
            return Err(Error::Degenerate(format!("polygon needs at least 3 vertices, got {}", v.len())));
        }
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Degenerate("non-finite vertex".into()));
        }
        let n = v.len();
        for k in 0..n {
            if v[k] == v[(k + 1) % n] {
                return Err(Error::Degenerate(format!("repeated vertex {}", fmt_point(v[k]))));
            }
        }
        let twice_area = (0..n).fold(T::zero(), |acc, k| acc + cross(v[k], v[(k + 1) % n]));
        if twice_area == T::zero() {
            return Err(Error::Degenerate("polygon has zero area".into()));
        }
        let reversed = twice_area < T::zero();
        if reversed {
            v.reverse();
        }
        check_simple(&v)?;

        let lengths: Vec<T> = (0..n).map(|k| (v[(k + 1) % n] - v[k]).norm()).collect();
        let mut cumulative = Vec::with_capacity(n + 1);
        let mut acc = T::zero();
        cumulative.push(acc);
        for &l in &lengths {
            acc = acc + l;
            cumulative.push(acc);
        }
        let lower = v.iter().fold(v[0], |m, z| Point::new(m.re.min(z.re), m.im.min(z.im)));
        let upper = v.iter().fold(v[0], |m, z| Point::new(m.re.max(z.re), m.im.max(z.im)));
        let mut d = JordanDomain { vertices: v, lengths, cumulative, perimeter: acc, lower, upper, reversed, grid: None };
        if n > BRUTE_FORCE_SEGMENTS {
            d.grid = Some(d.build_grid());
        }
        Ok(d)
    }

    /// Axis-aligned square with lower-left `corner`.
    pub fn square(corner: Point<T>, side: T) -> Result<Self> {
        Self::rectangle(corner, side, side)
    }

    pub fn rectangle(corner: Point<T>, width: T, height: T) -> Result<Self> {
        if !(width > T::zero() && height > T::zero()) {
            return Err(Error::InvalidParameter("rectangle sides must be positive".into()));
        }
        Self::new(vec![
            corner,
            corner + Point::new(width, T::zero()),
            corner + Point::new(width, height),
            corner + Point::new(T::zero(), height),
        ])
    }

    /// Regular `n`-gon inscribed in the circle of radius `r` about `center`, first vertex at angle 0.
    pub fn regular_polygon(center: Point<T>, r: T, n: usize) -> Result<Self> {
        if n < 3 || !(r > T::zero()) {
            return Err(Error::InvalidParameter("regular polygon needs n >= 3 and r > 0".into()));
        }
        let step = T::lit(TAU) / T::from_usize_lossy(n);
        Self::new((0..n).map(|k| center + Point::from_polar(r, step * T::from_usize_lossy(k))).collect())
    }

    fn build_grid(&self) -> SegmentGrid {
        let n = self.vertices.len();
        let (x0, y0) = (self.lower.re.to_f64_lossy(), self.lower.im.to_f64_lossy());
        let (w, hgt) = (self.upper.re.to_f64_lossy() - x0, self.upper.im.to_f64_lossy() - y0);
        let side = w.max(hgt);
        let m = ((2.0 * (n as f64).sqrt()).ceil() as usize).clamp(4, 256);
        let h = side / m as f64 * (1.0 + 1e-9);
        let nx = ((w / h).ceil() as usize).max(1);
        let ny = ((hgt / h).ceil() as usize).max(1);
        let mut grid = SegmentGrid { origin: (x0, y0), h, nx, ny, cells: vec![Vec::new(); nx * ny] };
        for k in 0..n {
            let (a, b) = self.segment(k);
            let (i0, j0) = grid.cell_of(a.re.to_f64_lossy().min(b.re.to_f64_lossy()), a.im.to_f64_lossy().min(b.im.to_f64_lossy()));
            let (i1, j1) = grid.cell_of(a.re.to_f64_lossy().max(b.re.to_f64_lossy()), a.im.to_f64_lossy().max(b.im.to_f64_lossy()));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    grid.cells[j * nx + i].push(k as u32);
                }
            }
        }
        grid
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertices in counter-clockwise order.
    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    /// Endpoints of segment `k`.
    pub fn segment(&self, k: usize) -> (Point<T>, Point<T>) {
        (self.vertices[k], self.vertices[(k + 1) % self.vertices.len()])
    }

    pub fn segment_length(&self, k: usize) -> T {
        self.lengths[k]
    }

    pub fn point_at(&self, k: usize, t: T) -> Point<T> {
        let (a, b) = self.segment(k);
        a + (b - a) * t
    }

    /// Arclength from vertex 0 to the point `(k, t)`.
    pub fn arclength_position(&self, k: usize, t: T) -> T {
        self.cumulative[k] + self.lengths[k] * t
    }

    pub fn perimeter(&self) -> T {
        self.perimeter
    }

    /// Diagonal of the bounding box.
    pub fn diameter(&self) -> T {
        (self.upper - self.lower).norm()
    }

    /// Whether the input vertices were clockwise (and have been reversed).
    pub fn was_reversed(&self) -> bool {
        self.reversed
    }

    /// Maps an interval given against the input vertex order onto the stored orientation.
    pub fn input_interval(&self, segment: usize, t0: T, t1: T) -> (usize, T, T) {
        if !self.reversed {
            return (segment, t0, t1);
        }
        let n = self.len();
        ((2 * n - 2 - segment) % n, T::one() - t1, T::one() - t0)
    }

    pub fn nearest(&self, p: Point<T>) -> NearestHit<T> {
        match &self.grid {
            Some(g) => self.nearest_grid(g, p),
            None => self.nearest_brute(p),
        }
    }

    fn nearest_brute(&self, p: Point<T>) -> NearestHit<T> {
        let mut best = NearestHit { distance: T::infinity(), segment: 0, t: T::zero() };
        for k in 0..self.len() {
            self.consider(k, p, &mut best);
        }
        best
    }

    #[inline]
    fn consider(&self, k: usize, p: Point<T>, best: &mut NearestHit<T>) {
        let (a, b) = self.segment(k);
        let (d, t) = nearest_on_segment(a, b, p);
        if d < best.distance || (d == best.distance && k < best.segment) {
            *best = NearestHit { distance: d, segment: k, t };
        }
    }

    fn nearest_grid(&self, g: &SegmentGrid, p: Point<T>) -> NearestHit<T> {
        let (qx, qy) = g.clamp_to_box(p.re.to_f64_lossy(), p.im.to_f64_lossy());
        let (ci, cj) = g.cell_of(qx, qy);
        let mut best = NearestHit { distance: T::infinity(), segment: 0, t: T::zero() };
        let max_r = g.nx.max(g.ny);
        for r in 0..=max_r {
            if (2 * r + 1) * (2 * r + 1) > 4 * self.len() {
                return self.nearest_brute(p);
            }
            let (i0, i1) = (ci as isize - r as isize, ci as isize + r as isize);
            let (j0, j1) = (cj as isize - r as isize, cj as isize + r as isize);
            for j in j0..=j1 {
                if j < 0 || j >= g.ny as isize {
                    continue;
                }
                let ring_row = j == j0 || j == j1;
                let mut i = i0;
                while i <= i1 {
                    if i >= 0 && i < g.nx as isize {
                        for &k in &g.cells[j as usize * g.nx + i as usize] {
                            self.consider(k as usize, p, &mut best);
                        }
                    }
                    i += if ring_row || i == i1 { 1 } else { i1 - i0 };
                }
            }
            if best.distance.to_f64_lossy() <= r as f64 * g.h {
                break;
            }
        }
        best
    }

    pub fn distance_to_boundary(&self, p: Point<T>) -> T {
        self.nearest(p).distance
    }

    /// Closed-polygon membership by crossing number (boundary points may go either way).
    pub fn winding_inside(&self, p: Point<T>) -> bool {
        let mut inside = false;
        for k in 0..self.len() {
            let (a, b) = self.segment(k);
            if (a.im > p.im) != (b.im > p.im) {
                let x = a.re + (p.im - a.im) / (b.im - a.im) * (b.re - a.re);
                if p.re < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Strict interior membership.
    pub fn contains(&self, p: Point<T>) -> bool {
        self.winding_inside(p) && self.distance_to_boundary(p) > T::zero()
    }

    /// Default walk-on-spheres stop tolerance.
    pub fn stop_tol(&self) -> T {
        self.diameter() * T::lit(STOP_TOL_FACTOR)
    }

    /// Loads a domain, its named subsets and optional base point from a JSON document.
    pub fn from_document(doc: &DomainDocument) -> Result<LoadedDomain<T>> {
        let domain = Self::new(doc.vertices.iter().map(|&(x, y)| Point::new(T::lit(x), T::lit(y))).collect())?;
        let mut subsets = Vec::with_capacity(doc.subsets.len());
        for s in &doc.subsets {
            let arcs = s
                .intervals
                .iter()
                .map(|&(k, t0, t1)| {
                    if k >= domain.len() {
                        return Err(Error::InvalidParameter(format!("subset '{}': segment {k} out of range", s.name)));
                    }
                    let (k, t0, t1) = domain.input_interval(k, T::lit(t0), T::lit(t1));
                    Ok(BoundaryArc { segment: k, t0, t1 })
                })
                .collect::<Result<Vec<_>>>()?;
            subsets.push((s.name.clone(), BoundarySubset::new(&domain, arcs)?));
        }
        let point = doc.point.map(|(x, y)| Point::new(T::lit(x), T::lit(y)));
        Ok(LoadedDomain { domain, subsets, point })
    }
}

/// Result of [`JordanDomain::from_document`].
#[derive(Debug, Clone)]
pub struct LoadedDomain<T> {
    pub domain: JordanDomain<T>,
    pub subsets: Vec<(String, BoundarySubset<T>)>,
    pub point: Option<Point<T>>,
}

fn check_simple<T: Scalar>(v: &[Point<T>]) -> Result<()> {
    let n = v.len();
    let seg = |k: usize| (v[k], v[(k + 1) % n]);
    for i in 0..n {
        let (a, b) = seg(i);
        // consecutive segments share a vertex; they may not fold back over each other
        let (_, c) = seg((i + 1) % n);
        if orient(a, b, c) == T::zero() && dot(b - a, c - b) < T::zero() {
            return Err(Error::Degenerate(format!("boundary folds back at vertex {}", (i + 1) % n)));
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = seg(j);
            if segments_intersect(a, b, c, d) {
                return Err(Error::Degenerate(format!("boundary segments {i} and {j} intersect")));
            }
        }
    }
    Ok(())
}

/// A closed sub-interval `[t0, t1]` of boundary segment `segment`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryArc<T> {
    pub segment: usize,
    pub t0: T,
    pub t1: T,
}

/// A finite union of boundary sub-arcs, kept sorted and disjoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySubset<T> {
    arcs: Vec<BoundaryArc<T>>,
}

impl<T: Scalar> BoundarySubset<T> {
    pub fn new(domain: &JordanDomain<T>, arcs: Vec<BoundaryArc<T>>) -> Result<Self> {
        for a in &arcs {
            if a.segment >= domain.len() {
                return Err(Error::InvalidParameter(format!("segment {} out of range", a.segment)));
            }
            if !(a.t0 >= T::zero() && a.t1 <= T::one() && a.t0 <= a.t1) {
                return Err(Error::InvalidParameter(format!(
                    "interval [{}, {}] on segment {} not within [0, 1]",
                    a.t0, a.t1, a.segment
                )));
            }
        }
        Ok(Self::normalized(arcs))
    }

    fn normalized(mut arcs: Vec<BoundaryArc<T>>) -> Self {
        arcs.retain(|a| a.t1 > a.t0);
        arcs.sort_by(|a, b| a.segment.cmp(&b.segment).then(a.t0.partial_cmp(&b.t0).unwrap()));
        let mut out: Vec<BoundaryArc<T>> = Vec::with_capacity(arcs.len());
        for a in arcs {
            match out.last_mut() {
                Some(last) if last.segment == a.segment && a.t0 <= last.t1 => last.t1 = last.t1.max(a.t1),
                _ => out.push(a),
            }
        }
        BoundarySubset { arcs: out }
    }

    pub fn empty() -> Self {
        BoundarySubset { arcs: Vec::new() }
    }

    pub fn whole(domain: &JordanDomain<T>) -> Self {
        Self::segments(domain, 0..domain.len())
    }

    pub fn segments(domain: &JordanDomain<T>, ks: impl IntoIterator<Item = usize>) -> Self {
        Self::normalized(
            ks.into_iter()
                .filter(|&k| k < domain.len())
                .map(|k| BoundaryArc { segment: k, t0: T::zero(), t1: T::one() })
                .collect(),
        )
    }

    /// Boundary piece of arclength `length` starting at arclength position `start`, counter-clockwise, wrapping.
    pub fn from_arclength(domain: &JordanDomain<T>, start: T, length: T) -> Result<Self> {
        let p = domain.perimeter();
        if !(length >= T::zero()) || !start.is_finite() {
            return Err(Error::InvalidParameter("arclength interval needs finite start and length >= 0".into()));
        }
        if length >= p {
            return Ok(Self::whole(domain));
        }
        let s0 = start - (start / p).floor() * p;
        let s1 = s0 + length;
        let mut arcs = Vec::new();
        let mut push_range = |lo: T, hi: T| {
            for k in 0..domain.len() {
                let (c0, c1) = (domain.cumulative[k], domain.cumulative[k + 1]);
                let (a, b) = (lo.max(c0), hi.min(c1));
                if b > a {
                    let l = domain.lengths[k];
                    arcs.push(BoundaryArc {
                        segment: k,
                        t0: ((a - c0) / l).max(T::zero()),
                        t1: ((b - c0) / l).min(T::one()),
                    });
                }
            }
        };
        if s1 <= p {
            push_range(s0, s1);
        } else {
            push_range(s0, p);
            push_range(T::zero(), s1 - p);
        }
        Ok(Self::normalized(arcs))
    }

    /// Arc between the rays from `center` at angles `theta1 <= theta2`, counter-clockwise.
    /// The domain must be star-shaped with respect to `center`.
    pub fn angular_arc(domain: &JordanDomain<T>, center: Point<T>, theta1: T, theta2: T) -> Result<Self> {
        if !(theta2 >= theta1) {
            return Err(Error::InvalidParameter("angular arc needs theta1 <= theta2".into()));
        }
        if theta2 - theta1 >= T::lit(TAU) {
            return Ok(Self::whole(domain));
        }
        let s1 = ray_hit(domain, center, theta1)?;
        let s2 = ray_hit(domain, center, theta2)?;
        let p = domain.perimeter();
        let mut len = s2 - s1;
        if len < T::zero() {
            len = len + p;
        }
        Self::from_arclength(domain, s1, len)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::normalized(self.arcs.iter().chain(other.arcs.iter()).copied().collect())
    }

    pub fn arcs(&self) -> &[BoundaryArc<T>] {
        &self.arcs
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// Total length of the subset.
    pub fn measure(&self, domain: &JordanDomain<T>) -> T {
        self.arcs
            .iter()
            .fold(T::zero(), |acc, a| acc + (a.t1 - a.t0) * domain.segment_length(a.segment))
    }

    pub fn contains(&self, segment: usize, t: T) -> bool {
        let start = self.arcs.partition_point(|a| a.segment < segment);
        self.arcs[start..]
            .iter()
            .take_while(|a| a.segment == segment)
            .any(|a| t >= a.t0 && t <= a.t1)
    }
}

/// Arclength position where the ray from `center` at angle `theta` first meets the boundary.
fn ray_hit<T: Scalar>(domain: &JordanDomain<T>, center: Point<T>, theta: T) -> Result<T> {
    let u = Point::from_polar(T::one(), theta);
    let mut best: Option<(T, T)> = None;
    for k in 0..domain.len() {
        let (a, b) = domain.segment(k);
        let e = b - a;
        let den = cross(u, e);
        if den == T::zero() {
            continue;
        }
        let w = a - center;
        let s = cross(w, e) / den;
        let t = cross(w, u) / den;
        if s > T::zero() && t >= T::zero() && t <= T::one() && best.is_none_or(|(bs, _)| s < bs) {
            best = Some((s, domain.arclength_position(k, t)));
        }
    }
    best.map(|(_, pos)| pos)
        .ok_or_else(|| Error::Degenerate(format!("ray at angle {theta} misses the boundary")))
}

/// Monte Carlo estimate of a harmonic measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HMEstimate {
    pub value: f64,
    pub stderr: f64,
    pub walks: usize,
    pub stop_tol: f64,
    pub seed: u64,
}

impl HMEstimate {
    fn from_count(hits: usize, walks: usize, stop_tol: f64, seed: u64) -> Self {
        let p = hits as f64 / walks as f64;
        HMEstimate { value: p, stderr: (p * (1.0 - p) / walks as f64).sqrt(), walks, stop_tol, seed }
    }
}

/// Rows `name,ell_A,omega,stderr,N,seed` for named subsets of known length.
pub fn write_estimates_csv<W: Write>(mut w: W, rows: &[(String, f64, HMEstimate)]) -> Result<()> {
    writeln!(w, "name,ell_A,omega,stderr,N,seed")?;
    for (name, ell, e) in rows {
        let name = if name.contains([',', '"']) { format!("\"{}\"", name.replace('"', "\"\"")) } else { name.clone() };
        writeln!(w, "{name},{},{},{},{},{}", fmt17(*ell), fmt17(e.value), fmt17(e.stderr), e.walks, e.seed)?;
    }
    Ok(())
}

/// Exit points of a batch of walks, reusable across boundary subsets.
#[derive(Debug, Clone)]
pub struct ExitSample<T> {
    pub exits: Vec<(usize, T)>,
    pub stop_tol: T,
    pub seed: u64,
}

impl<T: Scalar> ExitSample<T> {
    pub fn estimate(&self, subset: &BoundarySubset<T>) -> HMEstimate {
        let hits = self.exits.iter().filter(|&&(k, t)| subset.contains(k, t)).count();
        HMEstimate::from_count(hits, self.exits.len(), self.stop_tol.to_f64_lossy(), self.seed)
    }
}

fn walk<T: Scalar>(domain: &JordanDomain<T>, start: Point<T>, stop_tol: T, seed: u64, index: u64) -> (usize, T) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut x = start;
    for _ in 0..MAX_WALK_STEPS {
        let hit = domain.nearest(x);
        if hit.distance <= stop_tol {
            return (hit.segment, hit.t);
        }
        let phi: f64 = rng.gen::<f64>() * TAU;
        x = x + Point::from_polar(hit.distance, T::lit(phi));
    }
    let hit = domain.nearest(x);
    (hit.segment, hit.t)
}

/// Runs `n` walks from `w`; walk `i` draws from stream `i` of a ChaCha generator keyed by `seed`.
pub fn sample_exits<T: Scalar>(domain: &JordanDomain<T>, w: Point<T>, n: usize, seed: u64) -> Result<ExitSample<T>> {
    if !domain.contains(w) {
        return Err(Error::OutsideDomain { domain: "jordan polygon".into(), point: fmt_point(w) });
    }
    let stop_tol = domain.stop_tol();
    let exits = (0..n as u64)
        .into_par_iter()
        .map(|i| walk(domain, w, stop_tol, seed, i))
        .collect();
    Ok(ExitSample { exits, stop_tol, seed })
}

pub fn harmonic_measure<T: Scalar>(
    domain: &JordanDomain<T>,
    w: Point<T>,
    subset: &BoundarySubset<T>,
    n: usize,
    seed: u64,
) -> Result<HMEstimate> {
    if n < MIN_WALKS {
        return Err(Error::Precondition(format!("need at least {MIN_WALKS} walks, got {n}")));
    }
    Ok(sample_exits(domain, w, n, seed)?.estimate(subset))
}

/// Exact harmonic measure, seen from the center, of the circle arc between two angles.
pub fn disc_arc_oracle(theta1: f64, theta2: f64) -> f64 {
    (theta2 - theta1) / TAU
}

/// One domain of a Lavrentiev family: the base point and the subsets to test.
#[derive(Debug, Clone)]
pub struct LavrentievCase<T> {
    pub domain: JordanDomain<T>,
    pub point: Point<T>,
    pub subsets: Vec<BoundarySubset<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LavrentievRow {
    pub case: usize,
    pub ell: f64,
    pub ratio: f64,
    pub omega: f64,
    pub stderr: f64,
    pub walks: usize,
    pub seed: u64,
    /// `omega + 3 stderr < 1/8`.
    pub below: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LavrentievReport {
    pub a: f64,
    pub rows: Vec<LavrentievRow>,
    /// Largest grid ratio `l(A)/a` at which every row up to that ratio is below 1/8.
    pub rho_hat: Option<f64>,
}

impl LavrentievReport {
    /// Rows `case,ell_A,ratio,omega,stderr,N,seed,below`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "case,ell_A,ratio,omega,stderr,N,seed,below")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.case,
                fmt17(r.ell),
                fmt17(r.ratio),
                fmt17(r.omega),
                fmt17(r.stderr),
                r.walks,
                r.seed,
                r.below
            )?;
        }
        Ok(())
    }
}

pub const LAVRENTIEV_THRESHOLD: f64 = 0.125;

/// `{0.01, 0.02, ..., 0.5}`.
pub fn rho_grid() -> Vec<f64> {
    (1..=50).map(|k| k as f64 / 100.0).collect()
}

/// Seed for case `i` of a family keyed by `seed`.
pub fn case_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn lavrentiev_experiment<T: Scalar>(
    a: T,
    cases: &[LavrentievCase<T>],
    n: usize,
    seed: u64,
) -> Result<LavrentievReport> {
    if !(a > T::zero()) {
        return Err(Error::InvalidParameter("scale a must be positive".into()));
    }
    if n < MIN_WALKS {
        return Err(Error::Precondition(format!("need at least {MIN_WALKS} walks, got {n}")));
    }
    let af = a.to_f64_lossy();
    let quarter = a / T::lit(4.0);
    for (i, c) in cases.iter().enumerate() {
        let per = c.domain.perimeter();
        if per > a * T::lit(4.0 * (1.0 + 1e-12)) {
            return Err(Error::Precondition(format!("case {i}: boundary length {per} exceeds 4a = {}", af * 4.0)));
        }
        if !c.domain.contains(c.point) || c.domain.distance_to_boundary(c.point) < quarter {
            return Err(Error::Precondition(format!("case {i}: D(w, a/4) is not inside the domain")));
        }
    }
    let mut rows = Vec::new();
    for (i, c) in cases.iter().enumerate() {
        let s = case_seed(seed, i);
        let exits = sample_exits(&c.domain, c.point, n, s)?;
        for subset in &c.subsets {
            let est = exits.estimate(subset);
            let ell = subset.measure(&c.domain).to_f64_lossy();
            rows.push(LavrentievRow {
                case: i,
                ell,
                ratio: ell / af,
                omega: est.value,
                stderr: est.stderr,
                walks: n,
                seed: s,
                below: est.value + 3.0 * est.stderr < LAVRENTIEV_THRESHOLD,
            });
        }
    }
    let rho_hat = rho_hat(&rows);
    Ok(LavrentievReport { a: af, rows, rho_hat })
}

fn rho_hat(rows: &[LavrentievRow]) -> Option<f64> {
    const TOL: f64 = 1e-9;
    let mut best = None;
    for r in rho_grid() {
        if !rows.iter().any(|row| (row.ratio - r).abs() <= TOL) {
            continue;
        }
        if rows.iter().filter(|row| row.ratio <= r + TOL).all(|row| row.below) {
            best = Some(r);
        } else {
            break;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubordinationResult {
    pub inner: HMEstimate,
    pub outer: HMEstimate,
    pub inner_length: f64,
    pub outer_length: f64,
    pub pass: bool,
}

/// Pieces per segment used to decide which parts of the inner boundary lie on the outer boundary.
const SUBORDINATION_PIECES: usize = 64;

/// The part of `inner`'s boundary off `outer`'s boundary, plus the part lying on `gamma`.
pub fn subordinate_set<T: Scalar>(
    inner: &JordanDomain<T>,
    outer: &JordanDomain<T>,
    gamma: &BoundarySubset<T>,
) -> BoundarySubset<T> {
    let tol = outer.diameter() * T::lit(1e-9);
    let step = T::one() / T::from_usize_lossy(SUBORDINATION_PIECES);
    let mut arcs = Vec::new();
    for k in 0..inner.len() {
        for j in 0..SUBORDINATION_PIECES {
            let t0 = step * T::from_usize_lossy(j);
            let mid = inner.point_at(k, t0 + step / T::lit(2.0));
            let hit = outer.nearest(mid);
            if hit.distance > tol || gamma.contains(hit.segment, hit.t) {
                arcs.push(BoundaryArc { segment: k, t0, t1: (t0 + step).min(T::one()) });
            }
        }
    }
    BoundarySubset::normalized(arcs)
}

/// Compares `omega_inner(w, inner_set)` with `omega_outer(w, gamma)`.
/// `inner_set` defaults to [`subordinate_set`].
pub fn subordination_check<T: Scalar>(
    inner: &JordanDomain<T>,
    outer: &JordanDomain<T>,
    w: Point<T>,
    gamma: &BoundarySubset<T>,
    inner_set: Option<&BoundarySubset<T>>,
    n: usize,
    seed: u64,
) -> Result<SubordinationResult> {
    if n < MIN_WALKS {
        return Err(Error::Precondition(format!("need at least {MIN_WALKS} walks, got {n}")));
    }
    let tol = outer.diameter() * T::lit(1e-9);
    let inside_outer = |p: Point<T>| outer.winding_inside(p) || outer.distance_to_boundary(p) <= tol;
    let step = T::one() / T::from_usize_lossy(SUBORDINATION_PIECES);
    for k in 0..inner.len() {
        for j in 0..=SUBORDINATION_PIECES {
            let p = inner.point_at(k, step * T::from_usize_lossy(j));
            if !inside_outer(p) {
                return Err(Error::Precondition(format!("inner domain leaves the outer one at {}", fmt_point(p))));
            }
        }
    }
    if !inner.contains(w) {
        return Err(Error::OutsideDomain { domain: "inner polygon".into(), point: fmt_point(w) });
    }
    let auto;
    let set = match inner_set {
        Some(s) => s,
        None => {
            auto = subordinate_set(inner, outer, gamma);
            &auto
        }
    };
    let ei = harmonic_measure(inner, w, set, n, seed)?;
    let eo = harmonic_measure(outer, w, gamma, n, seed)?;
    Ok(SubordinationResult {
        inner: ei,
        outer: eo,
        inner_length: set.measure(inner).to_f64_lossy(),
        outer_length: gamma.measure(outer).to_f64_lossy(),
        pass: ei.value + 3.0 * ei.stderr >= eo.value - 3.0 * eo.stderr,
    })
}
