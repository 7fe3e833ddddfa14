//! `ncollapse` command line.
//!
//! Exit status: 0 success, 1 validation error, 2 I/O error, 3 a `--verify`
//! check that did not hold.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use ncollapse_core::bounds::{self, GaussianClassModel, Prop1Inputs, Prop2Inputs, ReluBoundInputs};
use ncollapse_core::embeddings::partition_by_class;
use ncollapse_core::fewshot::{EpisodeConfig, Head, LambdaExponent};
use ncollapse_core::metrics::{ccnv, cdnv_matrix, geometry};
use ncollapse_core::synth::{gaussian_mixture, MixtureSpec};

use crate::format::{load_embeddings, save_embeddings, Format, FormatError};
use crate::parallel;
use crate::report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Io(String),
}

impl From<ncollapse_core::Error> for CliError {
    fn from(e: ncollapse_core::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ncollapse", version, about = "Neural-collapse metrics, few-shot evaluation and bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// CDNV matrix, CCNV and class-mean geometry of an embedding file.
    Analyze {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Few-shot episode evaluation of a ridge or nearest-class-mean head.
    Fewshot(FewshotArgs),
    /// Evaluate a closed-form bound, optionally checking it by simulation.
    Bounds(Box<BoundsArgs>),
    /// Write a synthetic Gaussian-mixture embedding file from a JSON spec.
    Synth {
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Defaults to CSV for `.csv` outputs and binary otherwise.
        #[arg(long, value_enum)]
        format: Option<FileFormat>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FileFormat {
    Csv,
    Binary,
}

impl From<FileFormat> for Format {
    fn from(f: FileFormat) -> Self {
        match f {
            FileFormat::Csv => Format::Csv,
            FileFormat::Binary => Format::Binary,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HeadKind {
    Ridge,
    Ncm,
}

#[derive(Debug, Args)]
struct FewshotArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    n_shot: usize,
    #[arg(long, default_value_t = 100)]
    n_query: usize,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    #[arg(long, value_enum, default_value_t = HeadKind::Ridge)]
    head: HeadKind,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Exponent `e` in `lambda = alpha * n^e`; 0.5 or -0.5.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    lambda_exponent: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// lemma1, prop1, prop2, prop3-eps1, prop3-eps2, prop4, prop5-general,
    /// prop5-gaussian, prop5-relaxed, lemma2
    name: String,
    /// Check the bound by Monte Carlo (prop5-* and lemma2).
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 20_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,

    // lemma1
    #[arg(long)]
    emp_var: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    pop_mean_norm: Option<f64>,
    // prop1
    #[arg(long)]
    empirical_cdnv: Option<f64>,
    #[arg(long)]
    eps1_i: Option<f64>,
    #[arg(long)]
    eps1_j: Option<f64>,
    #[arg(long)]
    eps2_i: Option<f64>,
    #[arg(long)]
    eps2_j: Option<f64>,
    #[arg(long)]
    mean_norm_i: Option<f64>,
    #[arg(long)]
    mean_norm_j: Option<f64>,
    #[arg(long)]
    pop_mean_dist: Option<f64>,
    #[arg(long)]
    emp_mean_dist: Option<f64>,
    // prop2
    #[arg(long)]
    avg_source_cdnv: Option<f64>,
    #[arg(long)]
    delta_fstar: Option<f64>,
    #[arg(long)]
    sup_var: Option<f64>,
    #[arg(long)]
    sup_feat_norm: Option<f64>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    rademacher: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    // prop3 / prop4
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    m_c: Option<usize>,
    #[arg(long)]
    sup_x_norm: Option<f64>,
    #[arg(long)]
    spectral_complexity: Option<f64>,
    #[arg(long)]
    m_bound: Option<f64>,
    // prop5 / lemma2
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n_c: Option<usize>,
    #[arg(long)]
    avg_cdnv: Option<f64>,
    #[arg(long)]
    spherical_p: Option<usize>,
    #[arg(long)]
    v_max: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
}

fn need<T: Copy>(v: Option<T>, flag: &str, bound: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Invalid(format!("bound `{bound}` requires --{flag}")))
}

/// Parses `argv` (including the program name), runs the command and returns
/// the exit status. Diagnostics go to stderr.
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = match parallel::threads_from_env() {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_INVALID;
        }
    };
    match parallel::with_threads(threads, || execute(cli.command)) {
        Ok(code) => code,
        Err(CliError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
        Err(CliError::Io(msg)) => {
            eprintln!("I/O error: {msg}");
            EXIT_IO
        }
    }
}

fn emit(doc: &Value, output: Option<&Path>) -> Result<(), CliError> {
    let text = report::render(doc);
    match output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Analyze { input, output } => {
            let set = load_embeddings(&input, None)?;
            let partition = partition_by_class(&set);
            let doc = json!({
                "command": "analyze",
                "input": input.display().to_string(),
                "rows": set.len(),
                "dim": set.dim(),
                "cdnv": report::cdnv_json(&cdnv_matrix(&partition)?),
                "geometry": report::geometry_json(&geometry(&partition)?),
                "ccnv": report::num(ccnv(&partition)?),
            });
            emit(&doc, output.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Fewshot(args) => fewshot(args),
        Command::Bounds(args) => bounds_command(*args),
        Command::Synth { spec, output, format } => {
            let text = fs::read_to_string(&spec).map_err(|e| CliError::Io(format!("{}: {e}", spec.display())))?;
            let doc: SpecDoc =
                serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", spec.display())))?;
            let set = gaussian_mixture(&doc.into())?;
            let format = format.map(Format::from).unwrap_or_else(|| Format::from_extension(&output));
            save_embeddings(&set, &output, format)?;
            Ok(EXIT_OK)
        }
    }
}

/// JSON mirror of [`MixtureSpec`].
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    p: usize,
    class_means: Vec<Vec<f64>>,
    total_variances: Vec<f64>,
    samples_per_class: usize,
    #[serde(default)]
    seed: u64,
}

impl From<SpecDoc> for MixtureSpec {
    fn from(d: SpecDoc) -> Self {
        MixtureSpec {
            p: d.p,
            class_means: d.class_means,
            total_variances: d.total_variances,
            samples_per_class: d.samples_per_class,
            seed: d.seed,
        }
    }
}

fn fewshot(args: FewshotArgs) -> Result<i32, CliError> {
    let cfg = EpisodeConfig {
        k: args.k,
        n_shot: args.n_shot,
        n_query: args.n_query,
        episodes: args.episodes,
        seed: args.seed,
    };
    cfg.validate()?;
    let head = match args.head {
        HeadKind::Ncm => Head::Ncm,
        HeadKind::Ridge => {
            if !args.alpha.is_finite() || args.alpha <= 0.0 {
                return Err(CliError::Invalid("--alpha must be positive".into()));
            }
            Head::Ridge {
                alpha: args.alpha,
                exponent: LambdaExponent::from_value(args.lambda_exponent)?,
            }
        }
    };
    let set = load_embeddings(&args.input, None)?;
    let partition = partition_by_class(&set);
    let r = parallel::evaluate(&partition, &cfg, &head)?;
    let mut doc = report::accuracy_json(&r);
    doc["command"] = json!("fewshot");
    doc["input"] = json!(args.input.display().to_string());
    emit(&doc, args.output.as_deref())?;
    Ok(EXIT_OK)
}

fn bounds_command(a: BoundsArgs) -> Result<i32, CliError> {
    let name = a.name.as_str();
    if a.verify {
        return verify_command(&a);
    }
    let (params, value): (Vec<(&str, f64)>, f64) = match name {
        "lemma1" => {
            let (v, e1, e2, m) = (
                need(a.emp_var, "emp-var", name)?,
                need(a.eps1, "eps1", name)?,
                need(a.eps2, "eps2", name)?,
                need(a.pop_mean_norm, "pop-mean-norm", name)?,
            );
            (
                vec![("emp_var", v), ("eps1", e1), ("eps2", e2), ("pop_mean_norm", m)],
                bounds::lemma1_variance_bound(v, e1, e2, m)?,
            )
        }
        "prop1" => {
            let inp = Prop1Inputs {
                empirical_cdnv: need(a.empirical_cdnv, "empirical-cdnv", name)?,
                eps1_i: need(a.eps1_i, "eps1-i", name)?,
                eps1_j: need(a.eps1_j, "eps1-j", name)?,
                eps2_i: need(a.eps2_i, "eps2-i", name)?,
                eps2_j: need(a.eps2_j, "eps2-j", name)?,
                mean_norm_i: need(a.mean_norm_i, "mean-norm-i", name)?,
                mean_norm_j: need(a.mean_norm_j, "mean-norm-j", name)?,
                pop_mean_dist: need(a.pop_mean_dist, "pop-mean-dist", name)?,
                emp_mean_dist: need(a.emp_mean_dist, "emp-mean-dist", name)?,
            };
            (
                vec![
                    ("empirical_cdnv", inp.empirical_cdnv),
                    ("eps1_i", inp.eps1_i),
                    ("eps1_j", inp.eps1_j),
                    ("eps2_i", inp.eps2_i),
                    ("eps2_j", inp.eps2_j),
                    ("mean_norm_i", inp.mean_norm_i),
                    ("mean_norm_j", inp.mean_norm_j),
                    ("pop_mean_dist", inp.pop_mean_dist),
                    ("emp_mean_dist", inp.emp_mean_dist),
                ],
                bounds::prop1_bound(&inp)?,
            )
        }
        "prop2" => {
            let inp = Prop2Inputs {
                avg_source_cdnv: need(a.avg_source_cdnv, "avg-source-cdnv", name)?,
                delta_fstar: need(a.delta_fstar, "delta-fstar", name)?,
                sup_var: need(a.sup_var, "sup-var", name)?,
                sup_feat_norm: need(a.sup_feat_norm, "sup-feat-norm", name)?,
                l: need(a.l, "l", name)?,
                rademacher: need(a.rademacher, "rademacher", name)?,
                delta: need(a.delta, "delta", name)?,
            };
            (
                vec![
                    ("avg_source_cdnv", inp.avg_source_cdnv),
                    ("delta_fstar", inp.delta_fstar),
                    ("sup_var", inp.sup_var),
                    ("sup_feat_norm", inp.sup_feat_norm),
                    ("l", inp.l as f64),
                    ("rademacher", inp.rademacher),
                    ("delta", inp.delta),
                ],
                bounds::prop2_bound(&inp)?,
            )
        }
        "prop3-eps1" | "prop3-eps2" | "prop4" => {
            let inp = ReluBoundInputs {
                p: need(a.p, "p", name)?,
                q: need(a.q, "q", name)?,
                l: need(a.l, "l", name)?,
                m_c: if name == "prop4" { a.m_c.unwrap_or(1) } else { need(a.m_c, "m-c", name)? },
                sup_x_norm: need(a.sup_x_norm, "sup-x-norm", name)?,
                spectral_complexity: if name == "prop4" {
                    a.spectral_complexity.unwrap_or(0.0)
                } else {
                    need(a.spectral_complexity, "spectral-complexity", name)?
                },
                m_bound: if name == "prop3-eps1" { a.m_bound.unwrap_or(1.0) } else { need(a.m_bound, "m-bound", name)? },
                delta: if name == "prop4" { a.delta.unwrap_or(0.5) } else { need(a.delta, "delta", name)? },
            };
            let mut params = vec![("p", inp.p as f64), ("q", inp.q as f64), ("l", inp.l as f64), ("sup_x_norm", inp.sup_x_norm)];
            let value = match name {
                "prop3-eps1" => {
                    params.extend([("m_c", inp.m_c as f64), ("spectral_complexity", inp.spectral_complexity), ("delta", inp.delta)]);
                    bounds::prop3_eps1(&inp)?
                }
                "prop3-eps2" => {
                    params.extend([
                        ("m_c", inp.m_c as f64),
                        ("spectral_complexity", inp.spectral_complexity),
                        ("m_bound", inp.m_bound),
                        ("delta", inp.delta),
                    ]);
                    bounds::prop3_eps2(&inp)?
                }
                _ => {
                    params.push(("m_bound", inp.m_bound));
                    bounds::prop4_rademacher_bound(&inp)?
                }
            };
            (params, value)
        }
        "prop5-general" => {
            let (k, n_c, avg) = (need(a.k, "k", name)?, need(a.n_c, "n-c", name)?, need(a.avg_cdnv, "avg-cdnv", name)?);
            let mut params = vec![("k", k as f64), ("n_c", n_c as f64), ("avg_cdnv", avg)];
            if let Some(p) = a.spherical_p {
                params.push(("spherical_p", p as f64));
            }
            (params, bounds::prop5_general_bound(k, n_c, avg, a.spherical_p)?)
        }
        "prop5-gaussian" => {
            let (k, p, v) = (need(a.k, "k", name)?, need(a.p, "p", name)?, need(a.v_max, "v-max", name)?);
            (
                vec![("k", k as f64), ("p", p as f64), ("v_max", v)],
                bounds::prop5_gaussian_bound(k, p, v)?,
            )
        }
        "prop5-relaxed" => {
            let (k, p, n_c, v, g) = (
                need(a.k, "k", name)?,
                need(a.p, "p", name)?,
                need(a.n_c, "n-c", name)?,
                need(a.v_max, "v-max", name)?,
                need(a.gamma, "gamma", name)?,
            );
            (
                vec![("k", k as f64), ("p", p as f64), ("n_c", n_c as f64), ("v_max", v), ("gamma", g)],
                bounds::prop5_relaxed_bound(k, p, n_c, v, g)?,
            )
        }
        "lemma2" => {
            let (n, p) = (need(a.n, "n", name)?, need(a.p, "p", name)?);
            (vec![("n", n as f64), ("p", p as f64)], bounds::lemma2_lower_bound(n, p)?)
        }
        other => return Err(CliError::Invalid(format!("unknown bound `{other}`"))),
    };
    emit(&report::bound_value_json(name, &params, value), a.output.as_deref())?;
    Ok(EXIT_OK)
}

/// Monte Carlo checks: nearest-mean error on an ETF Gaussian model for the
/// `prop5-*` names, minimal uniform-point distance for `lemma2`.
fn verify_command(a: &BoundsArgs) -> Result<i32, CliError> {
    let name = a.name.as_str();
    let r = match name {
        "prop5-general" | "prop5-gaussian" | "prop5-relaxed" => {
            let k = need(a.k, "k", name)?;
            let p = need(a.p, "p", name)?;
            let n_c = need(a.n_c, "n-c", name)?;
            let v = need(a.v_max, "v-max", name)?;
            let model = GaussianClassModel::etf(k, p, v)?;
            parallel::verify_prop5(&model, n_c, a.trials, a.seed)?
        }
        "lemma2" => parallel::verify_lemma2(need(a.n, "n", name)?, need(a.p, "p", name)?, a.trials, a.seed)?,
        other => {
            return Err(CliError::Invalid(format!(
                "--verify is available for prop5-general, prop5-gaussian, prop5-relaxed and lemma2, not `{other}`"
            )))
        }
    };
    let mut doc = report::bound_check_json(&r);
    doc["requested"] = json!(name);
    emit(&doc, a.output.as_deref())?;
    Ok(if r.satisfied { EXIT_OK } else { EXIT_VERIFY_FAILED })
}
