//! `f2kit` — generate, analyze, and run the pipelines from the command
//! line, emitting machine-readable reports.
//!
//! Exit codes: 0 = success with every asserted bound holding; 2 = a
//! mathematical bound check failed (the report is still emitted with
//! `holds: false` — a finding, not a crash); 1 = usage or I/O errors.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{ArgAction, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use f2kit::generators::{generate, GenKind, GenSpec, Generated};
use f2kit::gowers::{gowers_norm_exact, gowers_norm_sampled_workers, GowersResult};
use f2kit::pfr::{pfr_decompose_with, QuadraticForm};
use f2kit::u3::u3_inverse_pipeline;
use f2kit::verify::{self, VerifyLevel};
use f2kit::{fourier, gf2, io as fio};

#[derive(Parser)]
#[command(
    name = "f2kit",
    version,
    about = "Additive combinatorics over F_2^n: sets, spectra, uniformity norms, and decomposition pipelines"
)]
struct Cli {
    /// Worker threads for parallel loops (part of the report; sampled-mode
    /// merging depends on it).
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Write output here: reports for analysis commands, the artifact for
    /// `gen` (whose report always goes to stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Emit JSON (default). `--json false` prints a terse text rendering.
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set,
          num_args = 0..=1, default_missing_value = "true")]
    json: bool,

    /// Include wall-clock timing in the report. Off by default so that
    /// reports stay byte-identical across re-runs.
    #[arg(long, global = true, default_value_t = false)]
    timing: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a planted instance (`.fn` or `.set`) plus a `.meta.json`
    /// sidecar carrying the plant.
    Gen {
        /// noisy_polynomial | structured_hom | small_doubling_set |
        /// random_function | quadratic_phase
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        m: u32,
        /// Polynomial degree (noisy_polynomial).
        #[arg(long, default_value_t = 2)]
        degree: u32,
        /// Bit-flip noise rate in [0, 1/2) (noisy_polynomial).
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        /// Error-image bound K (structured_hom).
        #[arg(long, default_value_t = 2)]
        image_bound: u64,
        /// Coset count r (small_doubling_set).
        #[arg(long, default_value_t = 1)]
        cosets: u32,
        /// Subspace dimension v (small_doubling_set).
        #[arg(long, default_value_t = 0)]
        subspace_dim: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Doubling, span, and reference bounds of a `.set` file.
    Setstats {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// The difference set of a `.fn` file.
    Delta {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Top Walsh coefficients of a Boolean `.fn` file.
    Spectrum {
        #[arg(long = "in")]
        input: PathBuf,
        /// How many coefficients to keep.
        #[arg(long, default_value_t = 16)]
        top: usize,
    },
    /// Gowers U^d norm of a Boolean `.fn` file.
    Norms {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        d: u32,
        /// Exact integer evaluation (the default when --samples is absent).
        #[arg(long, default_value_t = false)]
        exact: bool,
        /// Monte-Carlo sample count.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The full decomposition pipeline on a `.fn` file.
    PfrPipeline {
        #[arg(long = "in")]
        input: PathBuf,
        /// Externally supplied quadratic (JSON), lifting the exhaustive
        /// search limit.
        #[arg(long)]
        quad: Option<PathBuf>,
    },
    /// The instrumented inverse-U^3 pipeline on a Boolean `.fn` file.
    U3Pipeline {
        #[arg(long = "in")]
        input: PathBuf,
        /// U^2 threshold for a direction to count as good.
        #[arg(long, default_value_t = 0.5)]
        tau: f64,
    },
    /// Run the module invariant suite.
    Verify {
        #[arg(long, default_value = "quick")]
        level: String,
    },
}

#[derive(Serialize)]
struct Inputs {
    flags: BTreeMap<String, String>,
    files: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Report<R: Serialize> {
    command: String,
    version: String,
    inputs: Inputs,
    results: R,
    worker_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_ms: Option<u128>,
}

fn file_sha256(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn emit<R: Serialize>(cli_out: &Option<PathBuf>, json: bool, report: &Report<R>) -> anyhow::Result<()> {
    let text = if json {
        let mut s = serde_json::to_string_pretty(report)?;
        s.push('\n');
        s
    } else {
        render_text(report)?
    };
    match cli_out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn render_text<R: Serialize>(report: &Report<R>) -> anyhow::Result<String> {
    let value = serde_json::to_value(report)?;
    let mut out = String::new();
    flatten("", &value, &mut out);
    Ok(out)
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut String) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, out);
            }
        }
        other => {
            out.push_str(prefix);
            out.push_str(" = ");
            out.push_str(&other.to_string());
            out.push('\n');
        }
    }
}

/// Everything a finished command hands back to `main`.
struct Outcome {
    bounds_failed: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap would exit with its own code 2; keep 2 reserved for
            // bound failures.
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.max(1))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(Outcome { bounds_failed }) => {
            if bounds_failed {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let start = Instant::now();
    match &cli.cmd {
        Cmd::Gen {
            kind,
            n,
            m,
            degree,
            rho,
            image_bound,
            cosets,
            subspace_dim,
            seed,
        } => {
            let spec = GenSpec {
                kind: kind.parse::<GenKind>()?,
                n: *n,
                m: *m,
                degree: *degree,
                rho: *rho,
                image_bound: *image_bound,
                coset_count: *cosets,
                subspace_dim: *subspace_dim,
                seed: *seed,
            };
            let out_path = cli
                .out
                .clone()
                .ok_or_else(|| anyhow!("gen needs --out <path> for the artifact"))?;
            let generated = generate(&spec)?;
            let meta_path = PathBuf::from(format!("{}.meta.json", out_path.display()));
            let meta_value = match &generated {
                Generated::Function { table, meta } => {
                    let mut buf = Vec::new();
                    fio::write_fn(table, &mut buf)?;
                    fs::write(&out_path, &buf)?;
                    serde_json::to_value(meta)?
                }
                Generated::Set { set, meta } => {
                    let mut buf = Vec::new();
                    fio::write_set(set, &mut buf)?;
                    fs::write(&out_path, &buf)?;
                    serde_json::to_value(meta)?
                }
            };
            let mut meta_text = serde_json::to_string_pretty(&meta_value)?;
            meta_text.push('\n');
            fs::write(&meta_path, meta_text)?;

            let mut flags = flags_of(&[
                ("kind", kind.clone()),
                ("n", n.to_string()),
                ("m", m.to_string()),
                ("degree", degree.to_string()),
                ("rho", rho.to_string()),
                ("image_bound", image_bound.to_string()),
                ("cosets", cosets.to_string()),
                ("subspace_dim", subspace_dim.to_string()),
                ("seed", seed.to_string()),
            ]);
            flags.insert("out".into(), out_path.display().to_string());
            let mut files = BTreeMap::new();
            files.insert(out_path.display().to_string(), file_sha256(&out_path)?);
            let report = Report {
                command: "gen".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                inputs: Inputs {
                    flags,
                    files,
                },
                results: serde_json::json!({
                    "artifact": out_path.display().to_string(),
                    "meta": meta_path.display().to_string(),
                    "plant": meta_value,
                }),
                worker_count: cli.workers,
                timing_ms: cli.timing.then(|| start.elapsed().as_millis()),
            };
            // The artifact went to --out; the report goes to stdout.
            emit(&None, cli.json, &report)?;
            Ok(Outcome {
                bounds_failed: false,
            })
        }

        Cmd::Setstats { input } => {
            let set = fio::read_set(fs::File::open(input)?)?;
            let stats = gf2::set_stats(&set)?;
            let results = serde_json::json!({
                "size": stats.size,
                "sumset_size": stats.sumset_size,
                "doubling": stats.doubling.to_string(),
                "doubling_float": stats.doubling.to_f64(),
                "span_size": stats.span_size,
                "ruzsa_bound": stats.ruzsa_bound.as_ref().map(|b| b.to_string()),
                "ruzsa_bound_log2": stats.ruzsa_bound_log2,
                "greentao_exponent": stats.greentao_exponent.to_string(),
            });
            finish(cli, start, "setstats", input, None, results, false)
        }

        Cmd::Delta { input } => {
            let f = fio::read_fn(fs::File::open(input)?)?;
            let d = gf2::difference_set(&f);
            let results = serde_json::json!({
                "codom_dim": d.codom_dim,
                "size": d.size(),
                "values": d.values.iter().map(|v| format!("{v:x}")).collect::<Vec<_>>(),
                "contains_zero": d.contains(0),
            });
            finish(cli, start, "delta", input, None, results, false)
        }

        Cmd::Spectrum { input, top } => {
            let f = fio::read_fn(fs::File::open(input)?)?;
            let spec = fourier::wht_spectrum(&f)?;
            let mut entries: Vec<(u32, i32)> = spec
                .raw_values()
                .iter()
                .enumerate()
                .map(|(a, &w)| (a as u32, w))
                .collect();
            entries.sort_by_key(|&(a, w)| (std::cmp::Reverse(w.unsigned_abs()), a));
            entries.truncate(*top);
            let scale = 1.0 / (1u64 << f.dom_dim()) as f64;
            let top_list: Vec<serde_json::Value> = entries
                .iter()
                .map(|&(a, w)| {
                    serde_json::json!({
                        "alpha": format!("{a:x}"),
                        "coeff": w as f64 * scale,
                    })
                })
                .collect();
            let results = serde_json::json!({
                "dim": f.dom_dim(),
                "top": top_list,
            });
            finish(cli, start, "spectrum", input, None, results, false)
        }

        Cmd::Norms {
            input,
            d,
            exact,
            samples,
            seed,
        } => {
            if *exact && samples.is_some() {
                return Err(anyhow!("--exact and --samples are mutually exclusive"));
            }
            let f = fio::read_fn(fs::File::open(input)?)?;
            let result: GowersResult = match samples {
                Some(count) => gowers_norm_sampled_workers(&f, *d, *count, *seed, cli.workers)?,
                None => gowers_norm_exact(&f, *d)?,
            };
            let results = serde_json::to_value(&result)?;
            finish(cli, start, "norms", input, None, results, false)
        }

        Cmd::PfrPipeline { input, quad } => {
            let f = fio::read_fn(fs::File::open(input)?)?;
            let supplied = match quad {
                Some(path) => Some(read_quadratic(path)?),
                None => None,
            };
            let report = pfr_decompose_with(&f, supplied)?;
            let failed = !report.all_bounds_hold();
            let results = serde_json::to_value(&report)?;
            finish(cli, start, "pfr-pipeline", input, quad.as_deref(), results, failed)
        }

        Cmd::U3Pipeline { input, tau } => {
            let f = fio::read_fn(fs::File::open(input)?)?;
            let outcome = u3_inverse_pipeline(&f, *tau)?;
            let results = serde_json::to_value(&outcome.report)?;
            finish(cli, start, "u3-pipeline", input, None, results, false)
        }

        Cmd::Verify { level } => {
            let level: VerifyLevel = level.parse()?;
            let checks = verify::run(level);
            let failed = checks.iter().filter(|c| !c.holds).count();
            let results = serde_json::json!({
                "level": level,
                "total": checks.len(),
                "failed": failed,
                "checks": checks,
            });
            let flags = flags_of(&[(
                "level",
                serde_json::to_value(level)?.as_str().unwrap_or("quick").to_string(),
            )]);
            let report = Report {
                command: "verify".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                inputs: Inputs {
                    flags,
                    files: BTreeMap::new(),
                },
                results,
                worker_count: cli.workers,
                timing_ms: cli.timing.then(|| start.elapsed().as_millis()),
            };
            emit(&cli.out, cli.json, &report)?;
            Ok(Outcome {
                bounds_failed: failed > 0,
            })
        }
    }
}

fn flags_of(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// Shared tail for the analysis commands: envelope, hashes, emit.
fn finish(
    cli: &Cli,
    start: Instant,
    command: &str,
    input: &Path,
    extra_file: Option<&Path>,
    results: serde_json::Value,
    bounds_failed: bool,
) -> anyhow::Result<Outcome> {
    let mut flags = BTreeMap::new();
    flags.insert("in".to_string(), input.display().to_string());
    collect_cmd_flags(&cli.cmd, &mut flags);
    let mut files = BTreeMap::new();
    files.insert(input.display().to_string(), file_sha256(input)?);
    if let Some(path) = extra_file {
        flags.insert("quad".into(), path.display().to_string());
        files.insert(path.display().to_string(), file_sha256(path)?);
    }
    let report = Report {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        inputs: Inputs { flags, files },
        results,
        worker_count: cli.workers,
        timing_ms: cli.timing.then(|| start.elapsed().as_millis()),
    };
    emit(&cli.out, cli.json, &report)?;
    Ok(Outcome { bounds_failed })
}

fn collect_cmd_flags(cmd: &Cmd, flags: &mut BTreeMap<String, String>) {
    match cmd {
        Cmd::Spectrum { top, .. } => {
            flags.insert("top".into(), top.to_string());
        }
        Cmd::Norms {
            d,
            exact,
            samples,
            seed,
            ..
        } => {
            flags.insert("d".into(), d.to_string());
            match samples {
                Some(s) => {
                    flags.insert("samples".into(), s.to_string());
                    flags.insert("seed".into(), seed.to_string());
                }
                None => {
                    let _ = exact;
                    flags.insert("exact".into(), "true".into());
                }
            }
        }
        Cmd::U3Pipeline { tau, .. } => {
            flags.insert("tau".into(), tau.to_string());
        }
        _ => {}
    }
}

#[derive(Deserialize)]
struct QuadJson {
    dim: u32,
    quad: Vec<String>,
    lin: String,
    #[serde(rename = "const")]
    const_bit: u8,
}

fn read_quadratic(path: &Path) -> anyhow::Result<QuadraticForm> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let qj: QuadJson = serde_json::from_str(&text)?;
    let rows: Vec<u32> = qj
        .quad
        .iter()
        .map(|r| u32::from_str_radix(r, 16))
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow!("bad hex row in quadratic: {e}"))?;
    let lin = u32::from_str_radix(&qj.lin, 16).map_err(|e| anyhow!("bad hex lin: {e}"))?;
    Ok(QuadraticForm::new(qj.dim, rows, lin, qj.const_bit == 1)?)
}
