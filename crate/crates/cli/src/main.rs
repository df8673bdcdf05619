use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use liespec::harness::{self, emit_report, Family, SweepConfig, SUITES};
use liespec::spectrum::lambda1_with;
use liespec::{berger_metric, diameter, milnor_metric, DiameterParams, Metric, ReportFormat, SpectrumOptions};

/// Spectral gap and diameter of left-invariant metrics on SU(2).
#[derive(Parser, Debug)]
#[command(name = "liespec", version)]
struct Cli {
    /// Worker threads for parallel sections (defaults to all cores).
    #[arg(long, env = "LIESPEC_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smallest positive Laplace eigenvalue.
    Lambda1 {
        #[command(flatten)]
        metric: MetricArgs,
        /// Restrict to representations that descend to SO(3).
        #[arg(long)]
        so3: bool,
        #[arg(long, default_value_t = 4096)]
        max_n_cap: usize,
    },
    /// Diameter estimate by geodesic shooting.
    Diameter {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        shooting: ShootingArgs,
    },
    /// Sweep the Berger family and report lambda1 * diam^2.
    Sweep {
        #[arg(long, default_value_t = 0.01)]
        beta_min: f64,
        #[arg(long, default_value_t = 100.0)]
        beta_max: f64,
        #[arg(long, default_value_t = 25)]
        steps: usize,
        /// Logarithmic grid spacing.
        #[arg(long)]
        log: bool,
        /// Sweep `milnor(sqrt(beta), a2, a3)` instead of `berger(1, beta)`.
        #[arg(long, value_name = "A2,A3", value_parser = parse_pair)]
        milnor: Option<(f64, f64)>,
        /// Also evaluate the diameter at the large-fibre plateau scales.
        #[arg(long)]
        plateau: bool,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
        #[command(flatten)]
        shooting: ShootingArgs,
    },
    /// Run verification suites; exits nonzero if any fails.
    Check {
        #[arg(long, value_delimiter = ',', default_values_t = SUITES.map(String::from))]
        suite: Vec<String>,
        #[command(flatten)]
        shooting: ShootingArgs,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct MetricArgs {
    /// Milnor parameters: gram diag(a1^2, a2^2, a3^2).
    #[arg(long, value_name = "A1,A2,A3", value_parser = parse_triple)]
    metric: Option<(f64, f64, f64)>,
    /// Berger metric with horizontal scale alpha and fibre scale beta.
    #[arg(long, value_name = "ALPHA,BETA", value_parser = parse_pair)]
    berger: Option<(f64, f64)>,
    /// `{"gram": [[..],[..],[..]]}`, inline or as a file path.
    #[arg(long, value_name = "JSON|PATH")]
    metric_json: Option<String>,
}

impl MetricArgs {
    fn build(&self) -> Result<Metric> {
        if let Some((a1, a2, a3)) = self.metric {
            return Ok(milnor_metric(a1, a2, a3)?);
        }
        if let Some((alpha, beta)) = self.berger {
            return Ok(berger_metric(alpha, beta)?);
        }
        if let Some(src) = &self.metric_json {
            let text = if src.trim_start().starts_with('{') {
                src.clone()
            } else {
                fs::read_to_string(src).with_context(|| format!("reading {src}"))?
            };
            return Ok(Metric::from_json(&text)?);
        }
        bail!("no metric given")
    }
}

#[derive(Args, Debug)]
struct ShootingArgs {
    /// Minimum number of initial geodesic directions.
    #[arg(long, default_value_t = 2000)]
    dirs: usize,
    /// Number of probe points on the group.
    #[arg(long, default_value_t = 20000)]
    probes: usize,
    /// Arc-length integration step.
    #[arg(long)]
    step: Option<f64>,
    /// Longest geodesic shot.
    #[arg(long)]
    max_length: Option<f64>,
    /// Chordal match radius; grown automatically when omitted.
    #[arg(long)]
    match_radius: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ShootingArgs {
    fn params(&self) -> DiameterParams {
        DiameterParams {
            n_directions: self.dirs,
            n_probes: self.probes,
            arc_step: self.step,
            max_length: self.max_length,
            match_radius: self.match_radius,
            seed: self.seed,
        }
    }
}

fn parse_floats<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got `{s}`"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("`{p}` is not a number"))?;
    }
    Ok(out)
}

fn parse_triple(s: &str) -> std::result::Result<(f64, f64, f64), String> {
    parse_floats::<3>(s).map(|[a, b, c]| (a, b, c))
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    parse_floats::<2>(s).map(|[a, b]| (a, b))
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().context("configuring worker threads")?;
    }
    match cli.command {
        Command::Lambda1 { metric, so3, max_n_cap } => {
            let g = metric.build()?;
            let res = lambda1_with(&g, &SpectrumOptions { so3, max_n_cap })?;
            let out = json!({
                "lambda1": res.lambda1,
                "witness_n": res.witness_n,
                "truncation_n": res.truncation_n,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(true)
        }
        Command::Diameter { metric, shooting } => {
            let g = metric.build()?;
            let est = diameter(&g, &shooting.params())?;
            println!("{}", serde_json::to_string_pretty(&est)?);
            Ok(true)
        }
        Command::Sweep { beta_min, beta_max, steps, log, milnor, plateau, out, format, shooting } => {
            let format: ReportFormat = format.parse()?;
            let config = SweepConfig {
                beta_min,
                beta_max,
                steps,
                log_spacing: log,
                family: milnor.map_or(Family::Berger, |(a2, a3)| Family::Milnor { a2, a3 }),
                diameter: shooting.params(),
                plateau,
            };
            let report = harness::sweep_berger(&config)?;
            let text = emit_report(&report, format);
            match &out {
                Some(path) => fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            eprintln!("sup lambda1*diam^2 = {:.6}, inf = {:.6}", report.sup_product, report.inf_product);
            for p in &report.plateau {
                eprintln!("plateau b = {}: diameter {:.6}", p.fibre_scale, p.diameter);
            }
            for (name, ok) in &report.outcomes {
                eprintln!("{name}: {}", if *ok { "ok" } else { "FAILED" });
            }
            Ok(true)
        }
        Command::Check { suite, shooting } => {
            let params = shooting.params();
            let mut all = true;
            for name in &suite {
                let outcome = harness::run_suite(name.trim(), &params)?;
                println!("{} {}: {}", if outcome.passed { "PASS" } else { "FAIL" }, outcome.suite, outcome.detail);
                all &= outcome.passed;
            }
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
