//! `p300fsc` command-line front end.
//!
//! Output files default to the directory named by `P300FSC_OUT_DIR` when
//! `--out` is not given. Exit codes: 0 success, 2 usage error, 3 validation
//! failure, 4 numeric non-convergence.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::channel::{ChannelSpec, Noise};
use crate::codebook::{export_codebook, gen_cbp, gen_mbc, gen_min_dist, gen_rcp, import_codebook, Codebook, GridLayout};
use crate::gbaa::{gbaa_optimize, GbaaConfig};
use crate::rate::{constrained_rate, fixed_point_a, noiseless_rate, rll_capacity_perron};
use crate::sim::{mbc_source, run_experiment, sweep, BookSpec, MbcSource, SimConfig, SweepSpec};
use crate::source::MarkovSource;
use crate::{rng, selftest, Error, Result};

pub const OUT_DIR_ENV: &str = "P300FSC_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "p300fsc", version, about = "Information rates and codebooks for the refractory P300 speller channel")]
pub struct Cli {
    /// Random seed; drawn from the OS and reported when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path (file outputs) or directory-relative file name.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct NoiseArgs {
    /// AWGN noise variance.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Binary symmetric crossover probability.
    #[arg(long)]
    pub eps: Option<f64>,
}

impl NoiseArgs {
    fn noise(&self) -> Noise {
        match (self.sigma2, self.eps) {
            (Some(variance), _) => Noise::Awgn { variance },
            (_, Some(crossover)) => Noise::BinarySymmetric { crossover },
            _ => Noise::Noiseless,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Mbc,
    Rcp,
    Cbp,
    Mindist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MbcMode {
    Maxent,
    Gbaa,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal noiseless rate, a* and the Perron cross-check.
    Rate {
        #[arg(long = "L")]
        l: usize,
        /// Also evaluate H_b(a)/(1 + L a) at this a.
        #[arg(long)]
        a: Option<f64>,
    },
    /// Optimize a Markov source with GBAA; writes the source and its trace.
    Optimize {
        #[arg(long = "L")]
        l: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Source order (defaults to max(L, 1)).
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, default_value_t = 60)]
        iters: usize,
        #[arg(long, default_value_t = 100_000)]
        len: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Generate a codebook CSV.
    Genbook {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long = "N", default_value_t = 60)]
        n: usize,
        /// Number of characters (mbc and mindist; rcp/cbp use the 6x6 grid).
        #[arg(long = "W", default_value_t = 36)]
        w: usize,
        /// Refractory length the MBC is built for.
        #[arg(long = "L", default_value_t = 1)]
        l: usize,
        /// MBC source file; defaults to the noiseless optimum for L.
        #[arg(long)]
        source: Option<PathBuf>,
        /// Optimize the MBC source with GBAA for this AWGN variance.
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long, default_value_t = 1)]
        gap: usize,
        #[arg(long, default_value_t = 10)]
        weight: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 20_000)]
        gbaa_len: usize,
        #[arg(long, default_value_t = 30)]
        gbaa_iters: usize,
    },
    /// Monte Carlo spelling accuracy of a codebook.
    Simulate {
        /// Codebook CSV; defaults to `codebook.csv` in the output directory.
        #[arg(long)]
        book: Option<PathBuf>,
        #[arg(long = "L", default_value_t = 1)]
        l: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        /// Include the confusion matrix in JSON output.
        #[arg(long)]
        confusion: bool,
    },
    /// Accuracy over a sigma^2 x L x codebook grid (tidy CSV).
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        sigma2: Vec<f64>,
        #[arg(long = "L", value_delimiter = ',', default_value = "1")]
        l: Vec<usize>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "mbc,rcp,cbp,mindist")]
        kinds: Vec<Kind>,
        #[arg(long = "N", default_value_t = 60)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        #[arg(long, default_value_t = 1)]
        gap: usize,
        #[arg(long, default_value_t = 10)]
        weight: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, value_enum, default_value = "maxent")]
        mbc_source: MbcMode,
        #[arg(long, default_value_t = 20_000)]
        gbaa_len: usize,
        #[arg(long, default_value_t = 30)]
        gbaa_iters: usize,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

struct Ctx<'a> {
    seed: u64,
    out: Option<PathBuf>,
    format: Option<Format>,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Ctx<'_> {
    /// Where a file output goes: `--out`, else `$P300FSC_OUT_DIR/<default>`.
    fn target(&self, default_name: &str) -> Option<PathBuf> {
        if let Some(out) = &self.out {
            return Some(out.clone());
        }
        std::env::var_os(OUT_DIR_ENV).map(|dir| PathBuf::from(dir).join(default_name))
    }

    fn emit(&mut self, text: &str) -> Result<()> {
        self.stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))
    }

    fn note(&mut self, text: &str) {
        let _ = writeln!(self.stderr, "{text}");
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn csv_record(fields: &[(&str, String)]) -> String {
    let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
    let values: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
    format!("{}\n{}\n", header.join(","), values.join(","))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let seed = cli.seed.unwrap_or_else(rng::random_seed);
    let _ = writeln!(stderr, "seed={seed}");
    let mut ctx = Ctx {
        seed,
        out: cli.out,
        format: cli.format,
        stdout,
        stderr,
    };
    match dispatch(cli.command, &mut ctx) {
        Ok(code) => code,
        Err(e) => {
            ctx.note(&format!("error: {e}"));
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, ctx: &mut Ctx<'_>) -> Result<i32> {
    match command {
        Command::Rate { l, a } => cmd_rate(ctx, l, a),
        Command::Optimize {
            l,
            noise,
            order,
            iters,
            len,
            tol,
        } => {
            let cfg = GbaaConfig {
                order: order.unwrap_or(l.max(1)),
                sample_len: len,
                max_iters: iters,
                rate_tol: tol,
                seed: ctx.seed,
            };
            cmd_optimize(ctx, ChannelSpec::new(l, noise.noise())?, cfg)
        }
        Command::Genbook {
            kind,
            n,
            w,
            l,
            source,
            sigma2,
            gap,
            weight,
            trials,
            gbaa_len,
            gbaa_iters,
        } => {
            let seed = ctx.seed;
            let book = match kind {
                Kind::Mbc => {
                    let src = match (source, sigma2) {
                        (Some(path), _) => MarkovSource::load(&path)?,
                        (None, Some(s2)) => mbc_source(
                            MbcSource::Gbaa {
                                sample_len: gbaa_len,
                                max_iters: gbaa_iters,
                            },
                            &ChannelSpec::awgn(l, s2)?,
                            rng::derive_seed(seed, 1),
                        )?,
                        (None, None) => mbc_source(MbcSource::Maxentropic, &ChannelSpec::noiseless(l), seed)?,
                    };
                    gen_mbc(&src, w, n, seed)?
                }
                Kind::Rcp => gen_rcp(GridLayout::default(), n, seed)?,
                Kind::Cbp => gen_cbp(n, gap, seed)?,
                Kind::Mindist => gen_min_dist(w, n, weight, trials, seed)?,
            };
            cmd_genbook(ctx, &book)
        }
        Command::Simulate {
            book,
            l,
            noise,
            runs,
            confusion,
        } => {
            let path = book
                .or_else(|| std::env::var_os(OUT_DIR_ENV).map(|d| PathBuf::from(d).join("codebook.csv")))
                .ok_or_else(|| Error::InvalidParameter("no --book given and P300FSC_OUT_DIR unset".into()))?;
            let book = import_codebook(&path)?;
            for (i, j) in book.duplicate_pairs() {
                ctx.note(&format!("warning: {}: rows {i} and {j} are identical", path.display()));
            }
            let cfg = SimConfig {
                runs,
                confusion,
                ..SimConfig::new(book, ChannelSpec::new(l, noise.noise())?, ctx.seed)
            };
            cmd_simulate(ctx, &cfg)
        }
        Command::Sweep {
            sigma2,
            l,
            kinds,
            n,
            runs,
            gap,
            weight,
            trials,
            mbc_source,
            gbaa_len,
            gbaa_iters,
        } => {
            let books = kinds
                .into_iter()
                .map(|k| match k {
                    Kind::Mbc => BookSpec::Mbc,
                    Kind::Rcp => BookSpec::Rcp,
                    Kind::Cbp => BookSpec::Cbp { min_gap: gap },
                    Kind::Mindist => BookSpec::MinDist { weight, trials },
                })
                .collect();
            let spec = SweepSpec {
                sigma2,
                refractory: l,
                books,
                len: n,
                runs,
                seed: ctx.seed,
                mbc: match mbc_source {
                    MbcMode::Maxent => MbcSource::Maxentropic,
                    MbcMode::Gbaa => MbcSource::Gbaa {
                        sample_len: gbaa_len,
                        max_iters: gbaa_iters,
                    },
                },
            };
            cmd_sweep(ctx, &spec)
        }
        Command::Selftest => cmd_selftest(ctx),
    }
}

#[derive(Serialize)]
struct RateOutput {
    #[serde(rename = "L")]
    l: usize,
    a_star: f64,
    rate: f64,
    perron_rate: f64,
    abs_diff: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_at_a: Option<f64>,
}

fn cmd_rate(ctx: &mut Ctx<'_>, l: usize, a: Option<f64>) -> Result<i32> {
    if let Some(a) = a {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidParameter(format!("a = {a} outside [0, 1]")));
        }
    }
    let closed = noiseless_rate(l);
    let perron = rll_capacity_perron(l)?;
    let out = RateOutput {
        l,
        a_star: fixed_point_a(l),
        rate: closed.rate,
        perron_rate: perron.rate,
        abs_diff: (closed.rate - perron.rate).abs(),
        a,
        rate_at_a: a.map(|a| constrained_rate(l, a)),
    };
    let text = match ctx.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&out),
        Format::Csv => {
            let mut f = vec![
                ("L", l.to_string()),
                ("a_star", out.a_star.to_string()),
                ("rate", out.rate.to_string()),
                ("perron_rate", out.perron_rate.to_string()),
                ("abs_diff", out.abs_diff.to_string()),
            ];
            if let (Some(a), Some(r)) = (out.a, out.rate_at_a) {
                f.push(("a", a.to_string()));
                f.push(("rate_at_a", r.to_string()));
            }
            csv_record(&f)
        }
    };
    ctx.emit(&text)?;
    Ok(0)
}

#[derive(Serialize)]
struct OptimizeOutput {
    #[serde(rename = "L")]
    l: usize,
    noise: Noise,
    order: usize,
    rate: f64,
    std_err: f64,
    iterations: usize,
    best_iter: usize,
    p_one: Vec<f64>,
    source_path: String,
    trace_path: String,
    seed: u64,
}

fn cmd_optimize(ctx: &mut Ctx<'_>, channel: ChannelSpec, cfg: GbaaConfig) -> Result<i32> {
    let outcome = gbaa_optimize(&channel, &cfg)?;
    let source_path = ctx
        .target(&format!("source_L{}.txt", channel.refractory_len))
        .unwrap_or_else(|| PathBuf::from(format!("source_L{}.txt", channel.refractory_len)));
    let trace_path = source_path.with_extension("trace.csv");
    outcome.source.save(&source_path)?;

    let mut trace = String::from("iter,rate,std_err,best_rate\n");
    let mut best = f64::NEG_INFINITY;
    for (i, t) in outcome.trace.iter().enumerate() {
        best = best.max(t.rate);
        trace.push_str(&format!("{},{},{},{}\n", i + 1, t.rate, t.std_err, best));
    }
    write_file(&trace_path, &trace)?;

    let out = OptimizeOutput {
        l: channel.refractory_len,
        noise: channel.noise,
        order: cfg.order,
        rate: outcome.rate.rate,
        std_err: outcome.rate.std_err,
        iterations: outcome.trace.len(),
        best_iter: outcome.best_iter + 1,
        p_one: outcome.source.probabilities().to_vec(),
        source_path: source_path.display().to_string(),
        trace_path: trace_path.display().to_string(),
        seed: cfg.seed,
    };
    let text = match ctx.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&out),
        Format::Csv => csv_record(&[
            ("L", out.l.to_string()),
            ("noise", out.noise.to_string()),
            ("order", out.order.to_string()),
            ("rate", out.rate.to_string()),
            ("std_err", out.std_err.to_string()),
            ("iterations", out.iterations.to_string()),
            ("best_iter", out.best_iter.to_string()),
            ("seed", out.seed.to_string()),
        ]),
    };
    ctx.emit(&text)?;
    Ok(0)
}

fn cmd_genbook(ctx: &mut Ctx<'_>, book: &Codebook) -> Result<i32> {
    match ctx.target("codebook.csv") {
        Some(path) => {
            export_codebook(book, &path)?;
            ctx.note(&format!("wrote {}", path.display()));
        }
        None => ctx.emit(&book.to_csv())?,
    }
    Ok(0)
}

fn cmd_simulate(ctx: &mut Ctx<'_>, cfg: &SimConfig) -> Result<i32> {
    let rep = run_experiment(cfg)?;
    let text = match ctx.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&rep),
        Format::Csv => csv_record(&[
            ("sigma2", cfg.channel.sigma2().to_string()),
            ("L", cfg.channel.refractory_len.to_string()),
            ("codebook", rep.codebook.clone()),
            ("N", rep.len.to_string()),
            ("runs", rep.runs.to_string()),
            ("accuracy", rep.accuracy.to_string()),
            ("ci_lo", rep.wilson_ci95.0.to_string()),
            ("ci_hi", rep.wilson_ci95.1.to_string()),
            ("seed", rep.seed.to_string()),
        ]),
    };
    ctx.emit(&text)?;
    Ok(0)
}

fn cmd_sweep(ctx: &mut Ctx<'_>, spec: &SweepSpec) -> Result<i32> {
    let table = sweep(spec)?;
    for (point, err) in &table.failures {
        ctx.note(&format!("error at {point}: {err}"));
    }
    let text = match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => table.to_csv(),
        Format::Json => to_json(&table.rows),
    };
    match ctx.target("sweep.csv") {
        Some(path) => {
            write_file(&path, &text)?;
            ctx.note(&format!("wrote {}", path.display()));
        }
        None => ctx.emit(&text)?,
    }
    Ok(if table.failures.is_empty() { 0 } else { 3 })
}

fn cmd_selftest(ctx: &mut Ctx<'_>) -> Result<i32> {
    let checks = selftest::run(&selftest::Hooks::default());
    let mut text = String::new();
    for c in &checks {
        text.push_str(&format!(
            "{:<4} {:<40} {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    ctx.emit(&text)?;
    Ok(if checks.iter().all(|c| c.passed) { 0 } else { 3 })
}
