mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use semiflow::catalog::{catalog, parse_complex, parse_generator};
use semiflow::flow::{integrate, IntegratorConfig};
use semiflow::hmeasure::{sample_exits, write_estimates_csv, BoundarySubset, JordanDomain};
use semiflow::io::DomainDocument;
use semiflow::rates::{default_t_seq, geometric_range, rate_report, SupSamplerConfig};
use semiflow::suites::{run_suite, Suite, SuiteOptions};
use semiflow::{ComplexPoint, Error};

use config::Config;

const EXIT_SUITE_FAILED: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_UNKNOWN_ID: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "semiflow", version, about = "Holomorphic semigroup flows, convergence rates and harmonic measure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the generator catalog.
    Catalog,
    /// Integrate one trajectory and write it as CSV.
    Flow(Opts),
    /// Sup-deviation rows and a power-law fit, as JSON.
    Rate(Opts),
    /// Walk-on-spheres harmonic measure of boundary subsets, as JSON.
    Harmonic(Opts),
    /// Run a named verification suite, as JSON.
    Verify {
        /// thm1.1, thm4.7, thm5.1, ex4.8, ex5.4, lavrentiev or envelope
        suite: String,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args, Debug, Default, Clone)]
struct Opts {
    /// Key = value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generator id (see `semiflow catalog`).
    #[arg(long)]
    gen: Option<String>,
    /// Start point, e.g. 0.5, 1+2i, -0.3i.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long = "t-min")]
    t_min: Option<f64>,
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    #[arg(long = "t-steps")]
    t_steps: Option<usize>,
    /// Imaginary window bound for half-plane samplers.
    #[arg(long = "window-R")]
    window_r: Option<f64>,
    /// Number of random walks.
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write (log t, log sup) pairs to this CSV file.
    #[arg(long = "emit-plot-data")]
    emit_plot_data: Option<PathBuf>,
    /// Square side for the proof-domain family.
    #[arg(long)]
    a: Option<f64>,
    /// Depth of the radial / real-part ladder.
    #[arg(long = "k-max")]
    k_max: Option<u32>,
    /// Angular / imaginary sample count.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long = "rel-tol")]
    rel_tol: Option<f64>,
    /// Polygonal domain as JSON (vertices, subsets, point).
    #[arg(long)]
    domain: Option<PathBuf>,
    /// Built-in domain: `square` or `disc`.
    #[arg(long)]
    shape: Option<String>,
    /// Also write per-subset estimates as CSV to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Interior point for harmonic measure.
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnknownId(_) => EXIT_UNKNOWN_ID,
        Error::Parse(_) | Error::InvalidParameter(_) | Error::OutsideDomain { .. } | Error::Precondition(_) | Error::Io(_) => {
            EXIT_USAGE
        }
        Error::AtPoint { source, .. } => match exit_code(source) {
            EXIT_UNKNOWN_ID => EXIT_UNKNOWN_ID,
            _ => EXIT_NUMERICAL,
        },
        _ => EXIT_NUMERICAL,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: exit_code(&e), message: e.to_string() }
    }
}

fn fill<T: FromStr>(slot: &mut Option<T>, cfg: &mut Config, key: &str) -> Result<(), Failure> {
    if let Some(v) = cfg.take(key) {
        let parsed = v.parse().map_err(|_| Failure::usage(format!("config: bad value '{v}' for {key}")))?;
        if slot.is_none() {
            *slot = Some(parsed);
        }
    }
    Ok(())
}

impl Opts {
    fn merge_config(mut self, command: &str) -> Result<Self, Failure> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let mut cfg = Config::load(&path, command).map_err(Failure::usage)?;
        fill(&mut self.gen, &mut cfg, "gen")?;
        fill(&mut self.z, &mut cfg, "z")?;
        fill(&mut self.t, &mut cfg, "t")?;
        fill(&mut self.t_min, &mut cfg, "t-min")?;
        fill(&mut self.t_max, &mut cfg, "t-max")?;
        fill(&mut self.t_steps, &mut cfg, "t-steps")?;
        fill(&mut self.window_r, &mut cfg, "window-R")?;
        fill(&mut self.n, &mut cfg, "N")?;
        fill(&mut self.seed, &mut cfg, "seed")?;
        fill(&mut self.out, &mut cfg, "out")?;
        fill(&mut self.emit_plot_data, &mut cfg, "emit-plot-data")?;
        fill(&mut self.a, &mut cfg, "a")?;
        fill(&mut self.k_max, &mut cfg, "k-max")?;
        fill(&mut self.count, &mut cfg, "count")?;
        fill(&mut self.rel_tol, &mut cfg, "rel-tol")?;
        fill(&mut self.domain, &mut cfg, "domain")?;
        fill(&mut self.shape, &mut cfg, "shape")?;
        fill(&mut self.point, &mut cfg, "point")?;
        fill(&mut self.csv, &mut cfg, "csv")?;
        let left = cfg.leftover();
        if !left.is_empty() {
            return Err(Failure::usage(format!("config: unknown keys {left:?}")));
        }
        Ok(self)
    }

    fn integrator(&self) -> Result<IntegratorConfig<f64>, Failure> {
        let d = IntegratorConfig::default();
        Ok(IntegratorConfig::new(self.rel_tol.unwrap_or(d.rel_tol), d.abs_tol, d.max_steps, d.boundary_guard)?)
    }

    fn require_gen(&self) -> Result<&str, Failure> {
        self.gen.as_deref().ok_or_else(|| Failure::usage("--gen is required"))
    }

    /// `--t` alone, `--t-min/--t-max/--t-steps`, or the default sequence; returned decreasing.
    fn t_sequence(&self) -> Result<Option<Vec<f64>>, Failure> {
        match (self.t_min, self.t_max, self.t) {
            (Some(lo), Some(hi), _) => Ok(Some(geometric_range(lo, hi, self.t_steps.unwrap_or(9))?)),
            (None, None, Some(t)) => Ok(Some(vec![t])),
            (None, None, None) => Ok(None),
            _ => Err(Failure::usage("--t-min and --t-max go together")),
        }
    }
}

fn writer(out: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::usage(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn header(command: &str) -> Value {
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    json!({ "tool": "semiflow", "version": env!("CARGO_PKG_VERSION"), "command": command, "timestamp": timestamp })
}

fn emit_json(out: Option<&PathBuf>, command: &str, body: Result<Value, &Failure>) -> Result<(), Failure> {
    let doc = match body {
        Ok(report) => json!({ "header": header(command), "report": report }),
        Err(f) => json!({ "header": header(command), "error": { "code": f.code, "message": f.message } }),
    };
    let mut w = writer(out)?;
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::usage(e.to_string()))?;
    writeln!(w, "{text}").and_then(|_| w.flush()).map_err(|e| Failure::usage(e.to_string()))
}

fn cmd_catalog() -> Result<u8, Failure> {
    let mut out = io::stdout().lock();
    for e in catalog() {
        match writeln!(out, "{:<48} {:<11} {}", e.id, e.domain, e.description) {
            Err(err) if err.kind() == io::ErrorKind::BrokenPipe => break,
            r => r.map_err(|err| Failure::usage(err.to_string()))?,
        }
    }
    Ok(0)
}

fn cmd_flow(opts: &Opts) -> Result<u8, Failure> {
    let id = opts.require_gen()?;
    let g = parse_generator(id)?;
    let z: ComplexPoint = parse_complex(opts.z.as_deref().ok_or_else(|| Failure::usage("--z is required"))?)?;
    let t = opts.t.ok_or_else(|| Failure::usage("--t is required"))?;
    let cfg = opts.integrator()?;
    let traj = integrate(&g, z, t, &cfg)?;
    let mut w = writer(opts.out.as_ref())?;
    traj.write_csv(&mut w, id, &cfg)?;
    w.flush().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(0)
}

fn rate_body(opts: &Opts) -> Result<Value, Failure> {
    let id = opts.require_gen()?;
    let g = parse_generator(id)?;
    let ts = opts.t_sequence()?.unwrap_or_else(default_t_seq);
    let k_max = opts.k_max.unwrap_or(20);
    let sampler = if g.is_disc() {
        SupSamplerConfig::disc(k_max, opts.count.unwrap_or(64))?
    } else {
        SupSamplerConfig::half_plane(k_max, opts.count.unwrap_or(201), opts.window_r.unwrap_or(100.0))?
    };
    let report = rate_report(&g, &ts, &sampler, &opts.integrator()?)?;
    if let Some(path) = &opts.emit_plot_data {
        let f = File::create(path).map_err(|e| Failure::usage(format!("cannot create {}: {e}", path.display())))?;
        report.write_plot_data(BufWriter::new(f))?;
    }
    serde_json::to_value(&report).map_err(|e| Failure::usage(e.to_string()))
}

type Shape = (JordanDomain<f64>, Vec<(String, BoundarySubset<f64>)>, ComplexPoint);

fn builtin_shape(name: &str) -> Result<Shape, Failure> {
    match name {
        "square" => {
            let d = JordanDomain::square(ComplexPoint::new(0.0, 0.0), 1.0)?;
            let subsets = ["bottom", "right", "top", "left"]
                .iter()
                .enumerate()
                .map(|(k, n)| (n.to_string(), BoundarySubset::segments(&d, [k])))
                .collect();
            Ok((d, subsets, ComplexPoint::new(0.5, 0.5)))
        }
        "disc" => {
            let c = ComplexPoint::new(0.0, 0.0);
            let d = JordanDomain::regular_polygon(c, 1.0, 1024)?;
            let q = std::f64::consts::FRAC_PI_2;
            let subsets = (0..4)
                .map(|k| {
                    let th = q * k as f64;
                    Ok((format!("quadrant {}", k + 1), BoundarySubset::angular_arc(&d, c, th, th + q)?))
                })
                .collect::<Result<_, Error>>()?;
            Ok((d, subsets, c))
        }
        other => Err(Failure::usage(format!("unknown shape '{other}' (square, disc)"))),
    }
}

fn harmonic_body(opts: &Opts) -> Result<Value, Failure> {
    let (domain, subsets, default_point) = match (&opts.domain, &opts.shape) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
            let loaded = JordanDomain::from_document(&DomainDocument::from_json(&text)?)?;
            (loaded.domain, loaded.subsets, loaded.point)
        }
        (None, Some(shape)) => {
            let (d, s, p) = builtin_shape(shape)?;
            (d, s, Some(p))
        }
        _ => return Err(Failure::usage("exactly one of --domain and --shape is required")),
    };
    let point = match &opts.point {
        Some(p) => parse_complex(p)?,
        None => default_point.ok_or_else(|| Failure::usage("--point is required when the domain file has none"))?,
    };
    let n = opts.n.unwrap_or(100_000);
    let seed = opts.seed.unwrap_or(0);
    let exits = sample_exits(&domain, point, n, seed)?;
    let estimates: Vec<(String, f64, _)> =
        subsets.iter().map(|(name, s)| (name.clone(), s.measure(&domain), exits.estimate(s))).collect();
    if let Some(path) = &opts.csv {
        let f = File::create(path).map_err(|e| Failure::usage(format!("cannot create {}: {e}", path.display())))?;
        write_estimates_csv(BufWriter::new(f), &estimates)?;
    }
    let rows: Vec<Value> = estimates
        .iter()
        .map(|(name, ell, e)| json!({ "name": name, "length": ell, "estimate": e }))
        .collect();
    Ok(json!({
        "vertices": domain.len(),
        "perimeter": domain.perimeter(),
        "point": [point.re, point.im],
        "walks": n,
        "seed": seed,
        "stop_tol": exits.stop_tol,
        "subsets": rows,
    }))
}

fn suite_options(opts: &Opts) -> Result<SuiteOptions, Failure> {
    Ok(SuiteOptions {
        generator: opts.gen.clone(),
        ts: opts.t_sequence()?,
        window: opts.window_r,
        k_max: opts.k_max,
        count: opts.count,
        walks: opts.n,
        seed: opts.seed.unwrap_or(0),
        a: opts.a.unwrap_or(1.0),
        rel_tol: opts.rel_tol,
        base_dir: None,
    })
}

fn cmd_verify(suite: &str, opts: &Opts) -> Result<u8, Failure> {
    let run = || -> Result<_, Failure> {
        let suite = Suite::parse(suite)?;
        Ok(run_suite(suite, &suite_options(opts)?)?)
    };
    match run() {
        Ok(report) => {
            let body = serde_json::to_value(&report).map_err(|e| Failure::usage(e.to_string()))?;
            emit_json(opts.out.as_ref(), "verify", Ok(body))?;
            if report.pass {
                Ok(0)
            } else {
                eprintln!("suite {} failed: {}", report.suite, report.failing().join("; "));
                Ok(EXIT_SUITE_FAILED)
            }
        }
        Err(f) => {
            emit_json(opts.out.as_ref(), "verify", Err(&f))?;
            Err(f)
        }
    }
}

fn json_command(command: &str, opts: &Opts, body: fn(&Opts) -> Result<Value, Failure>) -> Result<u8, Failure> {
    match body(opts) {
        Ok(v) => emit_json(opts.out.as_ref(), command, Ok(v)).map(|_| 0),
        Err(f) => {
            emit_json(opts.out.as_ref(), command, Err(&f))?;
            Err(f)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("SEMIFLOW_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n >= 1)
            .ok_or_else(|| Failure::usage(format!("SEMIFLOW_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    configure_threads()?;
    match cli.command {
        Command::Catalog => cmd_catalog(),
        Command::Flow(o) => cmd_flow(&o.merge_config("flow")?),
        Command::Rate(o) => {
            let o = o.merge_config("rate")?;
            json_command("rate", &o, rate_body)
        }
        Command::Harmonic(o) => {
            let o = o.merge_config("harmonic")?;
            json_command("harmonic", &o, harmonic_body)
        }
        Command::Verify { suite, opts } => cmd_verify(&suite, &opts.merge_config("verify")?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
