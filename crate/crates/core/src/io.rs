//! Readers and writers for the CSV and JSON payloads.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::catalog::parse_complex;
use crate::cplane::Point;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Formats a double with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn parse_pair<T: Scalar>(field: &str) -> Result<Point<T>> {
    match field.split_once(',') {
        Some((re, im)) => {
            let re: f64 = re.trim().parse().map_err(|_| Error::Parse(format!("bad real part '{re}'")))?;
            let im: f64 = im.trim().parse().map_err(|_| Error::Parse(format!("bad imaginary part '{im}'")))?;
            Ok(Point::new(T::lit(re), T::lit(im)))
        }
        None => parse_complex(field),
    }
}

/// Reads `(n, a_n)` rows. Accepted row shapes: `n,"re,im"`, `n,<complex literal>`, `n,re,im`.
/// A leading header row (first field not an integer) is skipped.
pub fn read_dirichlet_csv<T: Scalar, R: Read>(r: R) -> Result<Vec<(usize, Point<T>)>> {
    let mut out = Vec::new();
    for (line, rec) in csv_reader(r).records().enumerate() {
        let rec = rec?;
        if rec.is_empty() || (rec.len() == 1 && rec[0].is_empty()) {
            continue;
        }
        let n: usize = match rec[0].parse() {
            Ok(n) => n,
            Err(_) if line == 0 => continue,
            Err(_) => return Err(Error::Parse(format!("row {}: bad index '{}'", line + 1, &rec[0]))),
        };
        let a = match rec.len() {
            2 => parse_pair(&rec[1])?,
            3 => parse_pair(&format!("{},{}", &rec[1], &rec[2]))?,
            k => return Err(Error::Parse(format!("row {}: expected 2 or 3 fields, got {k}", line + 1))),
        };
        out.push((n, a));
    }
    Ok(out)
}

/// Writes points as `re,im` rows with a header.
pub fn write_points_csv<T: Scalar, W: Write>(mut w: W, points: &[Point<T>]) -> Result<()> {
    writeln!(w, "re,im")?;
    for p in points {
        writeln!(w, "{},{}", fmt17(p.re.to_f64_lossy()), fmt17(p.im.to_f64_lossy()))?;
    }
    Ok(())
}

/// Reads `re,im` rows; a header row is skipped.
pub fn read_points_csv<T: Scalar, R: Read>(r: R) -> Result<Vec<Point<T>>> {
    let mut out = Vec::new();
    for (line, rec) in csv_reader(r).records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Parse(format!("row {}: expected re,im", line + 1)));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(re), Ok(im)) => out.push(Point::new(T::lit(re), T::lit(im))),
            _ if line == 0 => continue,
            _ => return Err(Error::Parse(format!("row {}: bad number", line + 1))),
        }
    }
    Ok(out)
}

/// A named boundary subset given as `(segment, t0, t1)` intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetDocument {
    pub name: String,
    pub intervals: Vec<(usize, f64, f64)>,
}

/// JSON description of a polygonal domain and boundary subsets.
///
/// ```json
/// {"vertices": [[0,0],[1,0],[1,1],[0,1]],
///  "subsets": [{"name": "bottom", "intervals": [[0, 0.0, 1.0]]}],
///  "point": [0.5, 0.5]}
/// ```
///
/// Segment `k` joins `vertices[k]` to `vertices[k + 1]` (cyclically), in the order given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDocument {
    pub vertices: Vec<(f64, f64)>,
    #[serde(default)]
    pub subsets: Vec<SubsetDocument>,
    #[serde(default)]
    pub point: Option<(f64, f64)>,
}

impl DomainDocument {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
