//! String identifiers for generators, as accepted on the command line.
//!
//! ```text
//! bp:tau=<c>,p=<herglotz>        disc generator (z - tau)(conj(tau) z - 1) p(z)
//! hp:const:<c>                   constant half-plane generator
//! hp:sqrt                        sqrt(w)
//! hp:dirichlet:<items>           c0=<c>, a<n>=<c>, file=<csv>, sigma0=<x>, tail=<bound>;<exponent>
//! hp:log:p=<herglotz>            w -> p(exp(-w))
//! hp:cayley:p=<herglotz>         w -> 2 p((w - 1)/(w + 1))
//! cf:<closed form>               generator of a closed-form flow
//!
//! herglotz: const:<c> | cayley:<k> | recip | user:<name>:<p1>;<p2>;...
//! ```
//!
//! Complex literals: `1`, `-0.5`, `2i`, `-i`, `1+2i`, `3e-2-1e-1i`.

use std::path::Path;

use crate::cplane::Point;
use crate::error::{Error, Result};
use crate::flow::ClosedForm;
use crate::generators::{DirichletSeriesSpec, GeneratorSpec, HerglotzSpec, TailDecay};
use crate::io;
use crate::scalar::Scalar;

fn parse_real<T: Scalar>(s: &str) -> Result<T> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: '{s}'")))?;
    Ok(T::lit(v))
}

/// Parses a complex literal such as `1+2i`, `-0.5i` or `3`.
pub fn parse_complex<T: Scalar>(s: &str) -> Result<Point<T>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty complex literal".into()));
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Point::new(parse_real(s)?, T::zero()));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (parse_real(&body[..k])?, &body[k..]),
        None => (T::zero(), body),
    };
    let im = match im {
        "" | "+" => T::one(),
        "-" => -T::one(),
        x => parse_real(x)?,
    };
    Ok(Point::new(re, im))
}

/// Parses a Herglotz function identifier.
pub fn parse_herglotz<T: Scalar>(s: &str) -> Result<HerglotzSpec<T>> {
    let s = s.trim();
    if s == "recip" {
        return Ok(HerglotzSpec::ReciprocalOnePlusZ);
    }
    if let Some(c) = s.strip_prefix("const:") {
        return HerglotzSpec::constant(parse_complex(c)?);
    }
    if let Some(k) = s.strip_prefix("cayley:") {
        return HerglotzSpec::moebius_cayley(parse_real(k)?);
    }
    if let Some(rest) = s.strip_prefix("user:") {
        let (name, params) = rest.split_once(':').unwrap_or((rest, ""));
        let params = params
            .split(';')
            .filter(|x| !x.trim().is_empty())
            .map(parse_real)
            .collect::<Result<Vec<T>>>()?;
        return HerglotzSpec::user(name, &params);
    }
    Err(Error::UnknownId(format!("herglotz function '{s}'")))
}

fn parse_dirichlet<T: Scalar>(items: &str, base_dir: Option<&Path>) -> Result<DirichletSeriesSpec<T>> {
    let mut constant = Point::new(T::zero(), T::zero());
    let mut terms: Vec<(usize, Point<T>)> = Vec::new();
    let mut abscissa: Option<T> = None;
    let mut tail: Option<TailDecay<T>> = None;
    for item in items.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value in '{item}'")))?;
        match key {
            "c0" => constant = constant + parse_complex::<T>(value)?,
            "file" => {
                let path = match base_dir {
                    Some(d) if Path::new(value).is_relative() => d.join(value),
                    _ => Path::new(value).to_path_buf(),
                };
                let file = std::fs::File::open(&path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                terms.extend(io::read_dirichlet_csv::<T, _>(file)?);
            }
            "sigma0" => abscissa = Some(parse_real(value)?),
            "tail" => {
                let (b, e) = value
                    .split_once(';')
                    .ok_or_else(|| Error::Parse("tail expects <bound>;<exponent>".into()))?;
                tail = Some(TailDecay::PowerLaw { bound: parse_real(b)?, exponent: parse_real(e)? });
            }
            k if k.starts_with('a') => {
                let n: usize = k[1..]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coefficient index in '{k}'")))?;
                if n == 0 {
                    return Err(Error::Parse("coefficients start at a1; use c0 for the constant".into()));
                }
                terms.push((n, parse_complex(value)?));
            }
            other => return Err(Error::UnknownId(format!("dirichlet option '{other}'"))),
        }
    }
    let mut series = DirichletSeriesSpec::from_terms(constant, &terms);
    if let Some(t) = tail {
        // without a declared abscissa, the tail bound itself marks where the bound is finite
        let sigma0 = abscissa.unwrap_or_else(|| match t {
            TailDecay::PowerLaw { exponent, .. } => T::one() - exponent,
            TailDecay::Exact => T::neg_infinity(),
        });
        series = series.with_tail(t, sigma0);
    } else if let Some(a) = abscissa {
        series.abscissa = a;
    }
    Ok(series)
}

/// Parses a generator identifier. Relative `file=` paths resolve against `base_dir`.
pub fn parse_generator_in<T: Scalar>(id: &str, base_dir: Option<&Path>) -> Result<GeneratorSpec<T>> {
    let id = id.trim();
    if let Some(rest) = id.strip_prefix("bp:") {
        let (mut tau, mut p) = (None, None);
        for item in rest.split(',') {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in '{item}'")))?;
            match k.trim() {
                "tau" => tau = Some(parse_complex::<T>(v)?),
                "p" => p = Some(parse_herglotz::<T>(v)?),
                other => return Err(Error::UnknownId(format!("berkson-porta option '{other}'"))),
            }
        }
        let tau = tau.unwrap_or_else(|| Point::new(T::zero(), T::zero()));
        let p = p.ok_or_else(|| Error::Parse("berkson-porta id needs p=<herglotz>".into()))?;
        return GeneratorSpec::berkson_porta(tau, p);
    }
    if let Some(rest) = id.strip_prefix("hp:") {
        if rest == "sqrt" {
            return Ok(GeneratorSpec::half_plane_sqrt());
        }
        if let Some(c) = rest.strip_prefix("const:") {
            return GeneratorSpec::half_plane_constant(parse_complex(c)?);
        }
        if let Some(items) = rest.strip_prefix("dirichlet:") {
            return Ok(GeneratorSpec::dirichlet(parse_dirichlet(items, base_dir)?));
        }
        if let Some(p) = rest.strip_prefix("log:p=") {
            return Ok(GeneratorSpec::PullbackViaLog { p: parse_herglotz(p)? });
        }
        if let Some(p) = rest.strip_prefix("cayley:p=") {
            return Ok(GeneratorSpec::PullbackViaCayley { p: parse_herglotz(p)? });
        }
    }
    if let Some(cf) = id.strip_prefix("cf:") {
        return Ok(ClosedForm::<T>::parse(cf)?.generator());
    }
    Err(Error::UnknownId(format!("generator '{id}'")))
}

pub fn parse_generator<T: Scalar>(id: &str) -> Result<GeneratorSpec<T>> {
    parse_generator_in(id, None)
}

/// A documented catalog entry.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub domain: &'static str,
    pub description: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry { id: "bp:tau=0,p=const:1", domain: "disc", description: "H(z) = -z, flow e^{-t} z" },
        CatalogEntry { id: "bp:tau=1,p=const:1", domain: "disc", description: "H(z) = (1 - z)^2, parabolic" },
        CatalogEntry { id: "bp:tau=1,p=recip", domain: "disc", description: "H(z) = (1 - z)^2/(1 + z), square-root rate is attained" },
        CatalogEntry { id: "bp:tau=0,p=cayley:1", domain: "disc", description: "H(z) = -z(1 + z)/(1 - z), elliptic, unbounded near 1" },
        CatalogEntry { id: "bp:tau=<c>,p=user:rotated_cayley:<k>;<theta>", domain: "disc", description: "user table entry" },
        CatalogEntry { id: "hp:const:<c>", domain: "half-plane", description: "translation z + c t, Re c >= 0" },
        CatalogEntry { id: "hp:sqrt", domain: "half-plane", description: "H(w) = sqrt(w), flow (t/2 + sqrt w)^2, not uniform" },
        CatalogEntry { id: "hp:dirichlet:c0=1,a2=1", domain: "half-plane", description: "H(s) = 1 + 2^{-s}, a class-G generator" },
        CatalogEntry { id: "hp:dirichlet:file=<csv>", domain: "half-plane", description: "coefficients from CSV rows n,\"re,im\"" },
        CatalogEntry { id: "hp:log:p=recip", domain: "half-plane", description: "p(exp(-w)), bounded by 2M/Re w" },
        CatalogEntry { id: "hp:cayley:p=recip", domain: "half-plane", description: "2p((w-1)/(w+1)) = 1 + 1/w" },
        CatalogEntry { id: "cf:exp_contraction|translation|sqrt_flow|parabolic_disc", domain: "either", description: "generators of the closed-form flows" },
    ]
}
