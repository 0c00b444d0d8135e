//! The `gwboot` command line.
//!
//! Every run is described by a [`Request`]; its serialized form is the
//! `inputs`/`tolerances`/`seed` part of the manifest embedded in the output,
//! which is what `gwboot replay` re-executes.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use gwboot::bounds::{alpha_grid, asymptotic_ratio, bound_alpha, sharpness_sweep};
use gwboot::critical::{critical_probability, recursion_iterate, recursion_limit};
use gwboot::offspring::make_corpus;
use gwboot::simulator::{estimate_y_d, SimConfig};
use gwboot::{DistSpec, Error, SeedSpec};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub mod output;

use output::{num, Body, Format};

pub const DEFAULT_OPT_TOL: f64 = 1e-10;
pub const DEFAULT_RECURSION_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;
/// Slack allowed in `bound ≤ p_c` by `verify`.
pub const VERIFY_SLACK: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "gwboot", version, about = "Bootstrap percolation on Galton-Watson trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Critical probability p_c = 1 - 1/max G.
    Pc {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long = "r")]
        r: u64,
        #[arg(long, default_value_t = DEFAULT_OPT_TOL)]
        tol: f64,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Moment lower bound with all constants.
    Bound {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long = "r")]
        r: u64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Checks bound ≤ p_c over a corpus and the α grid; exit 1 on any failure.
    Verify {
        #[arg(long = "r")]
        r: u64,
        #[arg(long, default_value = "default")]
        corpus: String,
        #[arg(long, default_value_t = DEFAULT_OPT_TOL)]
        tol: f64,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Iterates the density-evolution recursion at fixed p.
    Recursion {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long = "r")]
        r: u64,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long, default_value_t = DEFAULT_RECURSION_TOL)]
        tol: f64,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Monte Carlo estimate of y_depth with its exact value.
    Simulate {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long = "r")]
        r: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        reps: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// p_c, lower bound and moment of the extremal distribution over b.
    Sharpness {
        #[arg(long = "r")]
        r: u64,
        #[arg(long)]
        alpha: f64,
        #[arg(long = "b-list")]
        b_list: String,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// p_c(T_b, r) over its large-b asymptotic form.
    Ratio {
        #[arg(long = "r")]
        r: u64,
        #[arg(long = "b-list")]
        b_list: String,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Re-executes the manifest embedded in an output document.
    Replay {
        file: PathBuf,
        /// Exit 1 unless the numeric content matches the file.
        #[arg(long)]
        check: bool,
    },
}

/// A fully resolved computation: distribution specs are inlined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Request {
    Pc {
        dist: DistSpec,
        r: u64,
        tol: f64,
    },
    Bound {
        dist: DistSpec,
        r: u64,
        alpha: f64,
    },
    Verify {
        r: u64,
        corpus: String,
        tol: f64,
    },
    Recursion {
        dist: DistSpec,
        r: u64,
        p: f64,
        max_iter: usize,
        tol: f64,
    },
    Simulate {
        dist: DistSpec,
        r: u64,
        p: f64,
        depth: usize,
        reps: u64,
        seed: SeedSpec,
    },
    Sharpness {
        r: u64,
        alpha: f64,
        b_list: Vec<f64>,
    },
    Ratio {
        r: u64,
        b_list: Vec<u64>,
    },
}

const TOLERANCE_KEYS: [&str; 2] = ["tol", "max_iter"];

/// Failure of a CLI run, carrying its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub reason: String,
}

impl Failure {
    fn usage(reason: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "validation",
            reason: reason.into(),
        }
    }

    /// One JSON line: `{"error":"<kind>","reason":"…"}`.
    pub fn line(&self) -> String {
        serde_json::to_string(&json!({"error": self.kind, "reason": self.reason})).expect("plain JSON")
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Capability(_) => 3,
            Error::Diagnostic(_) => 1,
            _ => 2,
        };
        Self {
            code,
            kind: e.kind(),
            reason: e.to_string(),
        }
    }
}

/// Result of [`run`]: the document for stdout, a diagnostic for stderr and
/// the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn read_spec(path: &Path) -> Result<DistSpec, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    json5::from_str(&text).map_err(|e| Failure::usage(format!("bad distribution spec {}: {e}", path.display())))
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Failure::usage(format!("bad list entry {x:?} in {s:?}")))
        })
        .collect()
}

fn timestamp() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<i64>().ok());
    let t = match secs.and_then(|s| chrono::DateTime::from_timestamp(s, 0)) {
        Some(t) => t,
        None => chrono::Utc::now(),
    };
    t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Manifest for `req`: tolerances and the seed are lifted out of the inputs.
pub fn manifest(req: &Request) -> Value {
    let Value::Object(mut inputs) = serde_json::to_value(req).expect("requests serialize") else {
        unreachable!("a tagged enum serializes to an object")
    };
    let command = inputs.remove("command").expect("tagged");
    let mut tolerances = Map::new();
    for k in TOLERANCE_KEYS {
        if let Some(v) = inputs.remove(k) {
            tolerances.insert(k.into(), v);
        }
    }
    let seed = inputs.remove("seed").unwrap_or(Value::Null);
    json!({
        "command": command,
        "inputs": inputs,
        "tolerances": tolerances,
        "seed": seed,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "timestamp": timestamp(),
    })
}

/// Inverse of [`manifest`].
pub fn request_from_manifest(m: &Value) -> Result<Request, Failure> {
    let bad = |what: &str| Failure::usage(format!("manifest has no {what}"));
    let mut obj = m
        .get("inputs")
        .and_then(Value::as_object)
        .cloned()
        .ok_or_else(|| bad("inputs"))?;
    obj.insert(
        "command".into(),
        m.get("command").cloned().ok_or_else(|| bad("command"))?,
    );
    if let Some(t) = m.get("tolerances").and_then(Value::as_object) {
        obj.extend(t.clone());
    }
    if let Some(s) = m.get("seed").filter(|s| !s.is_null()) {
        obj.insert("seed".into(), s.clone());
    }
    serde_json::from_value(Value::Object(obj)).map_err(|e| Failure::usage(format!("bad manifest: {e}")))
}

fn record(pairs: Vec<(&str, Value)>) -> Body {
    Body::Record(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

/// Runs a request. The second element is false when a verification failed.
pub fn execute(req: &Request) -> Result<(Body, bool), Failure> {
    match req {
        Request::Pc { dist, r, tol } => {
            let prof = critical_probability(&dist.build()?, *r, *tol)?;
            Ok((
                record(vec![
                    ("M", num(prof.m)),
                    ("x_star", num(prof.x_star)),
                    ("p_c", num(prof.p_c)),
                    ("tol", num(prof.tol)),
                    ("degenerate", json!(prof.degenerate)),
                    ("y_aux", prof.y_aux.map_or(Value::Null, num)),
                ]),
                true,
            ))
        }
        Request::Bound { dist, r, alpha } => {
            let rep = bound_alpha(*r, *alpha, &dist.build()?)?;
            let pl = rep.pipeline;
            let opt = |f: fn(&gwboot::bounds::Pipeline) -> f64| pl.as_ref().map_or(Value::Null, |p| num(f(p)));
            Ok((
                record(vec![
                    ("r", json!(rep.r)),
                    ("alpha", num(rep.alpha)),
                    ("alpha_used", num(rep.alpha_used)),
                    ("t", pl.map_or(Value::Null, |p| json!(p.t))),
                    ("eps", opt(|p| p.eps)),
                    ("c1", opt(|p| p.c1)),
                    ("c2", opt(|p| p.c2)),
                    ("c1_prime", opt(|p| p.c1_prime)),
                    ("c2_prime", opt(|p| p.c2_prime)),
                    ("c_r_alpha", num(rep.c_r_alpha)),
                    ("moment_value", num(rep.moment_value)),
                    ("bound", num(rep.bound)),
                    ("t0", rep.t0.map_or(Value::Null, num)),
                ]),
                true,
            ))
        }
        Request::Verify { r, corpus, tol } => {
            if corpus != "default" {
                return Err(Failure::usage(format!(
                    "unknown corpus {corpus:?}; only \"default\" exists"
                )));
            }
            let mut rows = Vec::new();
            let mut all_ok = true;
            for member in make_corpus(*r)? {
                let p_c = critical_probability(&member.dist, *r, *tol)?.p_c;
                for alpha in alpha_grid(*r) {
                    let bound = bound_alpha(*r, alpha, &member.dist)?.bound;
                    let ok = bound <= p_c + VERIFY_SLACK;
                    all_ok &= ok;
                    rows.push(vec![json!(member.name), num(alpha), num(bound), num(p_c), json!(ok)]);
                }
            }
            let body = Body::Table {
                columns: vec!["distribution", "alpha", "bound", "p_c", "ok"],
                rows,
                extra: Map::new(),
            };
            Ok((body, all_ok))
        }
        Request::Recursion {
            dist,
            r,
            p,
            max_iter,
            tol,
        } => {
            let t = recursion_limit(&dist.build()?, *r, *p, *max_iter, *tol)?;
            const HEAD: usize = 16;
            let head: Vec<Value> = t.iterates.iter().take(HEAD).map(|&y| num(y)).collect();
            Ok((
                record(vec![
                    ("p", num(t.p)),
                    ("y0", num(t.iterates[0])),
                    ("limit", num(t.limit)),
                    ("classified", json!(t.classified.as_str())),
                    ("verdict", json!(t.verdict.as_str())),
                    ("converged", json!(t.converged)),
                    ("iterations", json!(t.iterates.len() - 1)),
                    ("iterates_head", Value::Array(head)),
                ]),
                true,
            ))
        }
        Request::Simulate {
            dist,
            r,
            p,
            depth,
            reps,
            seed,
        } => {
            let d = dist.build()?;
            let est = estimate_y_d(&d, &SimConfig::new(*r, *p, *depth, *reps, *seed))?;
            let exact = recursion_iterate(&d, *r, *p, *depth)?;
            Ok((
                record(vec![
                    ("mean", num(est.mean)),
                    ("stderr", num(est.stderr)),
                    ("n", json!(est.n)),
                    ("master_seed", json!(est.seed.master_seed)),
                    ("stream_index", json!(est.seed.stream_index)),
                    ("y_exact", num(exact)),
                    ("z_score", num((est.mean - exact) / est.stderr)),
                ]),
                true,
            ))
        }
        Request::Sharpness { r, alpha, b_list } => {
            let sweep = sharpness_sweep(*r, b_list, *alpha)?;
            let rows = sweep
                .rows
                .iter()
                .map(|row| {
                    vec![
                        num(row.b),
                        json!(row.k1),
                        num(row.p_c),
                        num(row.bound),
                        num(row.moment_root),
                        json!(row.bound <= row.p_c),
                    ]
                })
                .collect();
            let fit = json!({
                "slope_ln_pc": num(sweep.slope_ln_pc),
                "slope_ln_moment_root": num(sweep.slope_ln_moment_root),
                "target_rate": num(-1.0 / (*r as f64 - 1.0)),
            });
            let body = Body::Table {
                columns: vec!["b", "k1", "p_c", "bound", "moment_root", "bound_ok"],
                rows,
                extra: Map::from_iter([("fit".to_string(), fit)]),
            };
            Ok((body, true))
        }
        Request::Ratio { r, b_list } => {
            let mut rows = Vec::new();
            for &b in b_list {
                rows.push(vec![json!(b), num(asymptotic_ratio(*r, b)?)]);
            }
            Ok((
                Body::Table {
                    columns: vec!["b", "ratio"],
                    rows,
                    extra: Map::new(),
                },
                true,
            ))
        }
    }
}

fn resolve(cmd: Command) -> Result<(Request, Option<Format>), Failure> {
    Ok(match cmd {
        Command::Pc { dist, r, tol, format } => (
            Request::Pc {
                dist: read_spec(&dist)?,
                r,
                tol,
            },
            format,
        ),
        Command::Bound { dist, r, alpha, format } => (
            Request::Bound {
                dist: read_spec(&dist)?,
                r,
                alpha,
            },
            format,
        ),
        Command::Verify { r, corpus, tol, format } => (Request::Verify { r, corpus, tol }, format),
        Command::Recursion {
            dist,
            r,
            p,
            max_iter,
            tol,
            format,
        } => (
            Request::Recursion {
                dist: read_spec(&dist)?,
                r,
                p,
                max_iter,
                tol,
            },
            format,
        ),
        Command::Simulate {
            dist,
            r,
            p,
            depth,
            reps,
            seed,
            stream,
            format,
        } => (
            Request::Simulate {
                dist: read_spec(&dist)?,
                r,
                p,
                depth,
                reps,
                seed: SeedSpec::new(seed, stream),
            },
            format,
        ),
        Command::Sharpness {
            r,
            alpha,
            b_list,
            format,
        } => (
            Request::Sharpness {
                r,
                alpha,
                b_list: parse_list(&b_list)?,
            },
            format,
        ),
        Command::Ratio { r, b_list, format } => (
            Request::Ratio {
                r,
                b_list: parse_list(&b_list)?,
            },
            format,
        ),
        Command::Replay { .. } => unreachable!("handled by the caller"),
    })
}

fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match std::env::var("GWBOOT_THREADS") {
        Ok(s) => {
            let n: usize = s
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Failure::usage(format!("GWBOOT_THREADS must be a positive integer, got {s:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::usage(format!("cannot build a pool of {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

fn run_request(req: &Request, format: Option<Format>) -> Result<(String, bool), Failure> {
    let (body, ok) = with_thread_cap(|| execute(req))??;
    let format = format.unwrap_or_else(|| body.default_format());
    Ok((output::render(&manifest(req), &body, format), ok))
}

fn replay(file: &Path, check: bool) -> Result<(String, bool), Failure> {
    let text =
        std::fs::read_to_string(file).map_err(|e| Failure::usage(format!("cannot read {}: {e}", file.display())))?;
    let old = output::parse(&text).map_err(Failure::usage)?;
    let req = request_from_manifest(&old.manifest)?;
    let (new_text, ok) = run_request(&req, Some(old.format))?;
    if !check {
        return Ok((new_text, ok));
    }
    let new = output::parse(&new_text).map_err(Failure::usage)?;
    Ok((new_text, ok && new.content == old.content))
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let result = match cli.command {
        Command::Replay { file, check } => replay(&file, check),
        cmd => resolve(cmd).and_then(|(req, format)| run_request(&req, format)),
    };
    match result {
        Ok((stdout, true)) => Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        },
        Ok((stdout, false)) => Outcome {
            code: 1,
            stdout,
            stderr: Failure {
                code: 1,
                kind: "verification",
                reason: "at least one check failed".into(),
            }
            .line()
                + "\n",
        },
        Err(f) => Outcome {
            code: f.code,
            stdout: String::new(),
            stderr: f.line() + "\n",
        },
    }
}
