use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use d1lc_cli::gen::{generate, GenSpec};
use d1lc_cli::io::{InstanceFile, ReportFile, SweepRow, SWEEP_HEADER};
use d1lc_core::driver::{color, DerandPolicy, RunConfig};
use d1lc_core::instance::Instance;

#[derive(Parser)]
#[command(name = "d1lc", about = "deterministic (degree+1)-list coloring pipeline")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArgs {
    /// Seed for generation and sampled derandomization.
    #[arg(long, env = "D1LC_SEED", default_value_t = 0)]
    seed: u64,
    /// Palette-floor constant C.
    #[arg(long = "constant-C", env = "D1LC_CONSTANT_C", default_value_t = 16)]
    constant_c: usize,
    /// Base-case threshold κ (collect when m ≤ κ·n).
    #[arg(long = "collect-kappa", env = "D1LC_COLLECT_KAPPA", default_value_t = 4.0)]
    collect_kappa: f64,
    /// Seed selection: `exact` or `sample:N`.
    #[arg(long, env = "D1LC_DERAND", default_value = "exact")]
    derand: String,
    /// Bucket descent iterations.
    #[arg(long, env = "D1LC_ITERATIONS", default_value_t = 20)]
    iterations: u32,
    /// Fail (exit 1) if the charged rounds exceed this budget.
    #[arg(long, env = "D1LC_BUDGET")]
    budget: Option<u64>,
}

impl ConfigArgs {
    fn run_config(&self) -> anyhow::Result<RunConfig> {
        let derand = match self.derand.as_str() {
            "exact" => DerandPolicy::Exact,
            other => match other.strip_prefix("sample:").map(str::parse) {
                Some(Ok(samples)) => DerandPolicy::Sampled(samples),
                _ => bail!("--derand takes `exact` or `sample:N`, got {other:?}"),
            },
        };
        Ok(RunConfig {
            palette_floor: self.constant_c,
            base_kappa: self.collect_kappa,
            descent_iterations: self.iterations,
            derand,
            rng_seed: self.seed,
            ..RunConfig::default()
        })
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance file.
    Gen {
        /// Generator spec, e.g. `gnp,n=64,p=0.1,palette=shared:128`.
        #[arg(long, env = "D1LC_GEN")]
        gen: String,
        #[arg(long, env = "D1LC_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "D1LC_OUT")]
        out: PathBuf,
    },
    /// Color an instance and write the report.
    Run {
        /// Instance file (alternative to --gen).
        #[arg(long, env = "D1LC_INPUT")]
        input: Option<PathBuf>,
        /// Generate the input on the fly from a spec.
        #[arg(long, env = "D1LC_GEN")]
        gen: Option<String>,
        #[command(flatten)]
        config: ConfigArgs,
        /// Report file (stdout if omitted).
        #[arg(long, env = "D1LC_OUT")]
        out: Option<PathBuf>,
    },
    /// Check a coloring file against an instance.
    Verify {
        #[arg(long, env = "D1LC_INPUT")]
        input: PathBuf,
        /// A `run` report file (its coloring array is checked).
        #[arg(long, env = "D1LC_COLORING")]
        coloring: PathBuf,
    },
    /// Run a size grid at matched density and emit CSV.
    Sweep {
        /// Comma-separated sizes, e.g. 64,128,256,512.
        #[arg(long = "n", env = "D1LC_N")]
        sizes: String,
        /// Matched G(n, avg/n) density.
        #[arg(long, env = "D1LC_AVG_DEGREE", default_value_t = 8.0)]
        avg_degree: f64,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, env = "D1LC_OUT")]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch() -> anyhow::Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Gen { gen, seed, out } => {
            let inst = generate(&GenSpec::parse(&gen, seed)?)?;
            inst.write(&out)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run { input, gen, config, out } => {
            let file = load_instance(input.as_deref(), gen.as_deref(), config.seed)?;
            let instance = file.to_instance().map_err(|e| anyhow::anyhow!("bad instance: {e}"))?;
            let cfg = config.run_config()?;
            let run = color(&instance, &cfg).map_err(|e| anyhow::anyhow!("run failed: {e}"))?;
            let coloring: Vec<Option<u32>> =
                (0..file.n as u32).map(|v| run.instance.color_of(v)).collect();
            let ok = run.report.verification.ok;
            let rounds = run.report.total_rounds;
            let report = ReportFile { coloring, report: Some(run.report) };
            let text = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => println!("{text}"),
            }
            if !ok {
                eprintln!("verification failed");
                return Ok(ExitCode::from(1));
            }
            if let Some(budget) = config.budget {
                if rounds > budget {
                    eprintln!("round budget exceeded: {rounds} > {budget}");
                    return Ok(ExitCode::from(1));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { input, coloring } => {
            let instance = InstanceFile::read(&input)?
                .to_instance()
                .map_err(|e| anyhow::anyhow!("bad instance: {e}"))?;
            let colors = ReportFile::read_coloring(&coloring)?;
            match check_coloring(&instance, &colors) {
                Ok(()) => {
                    println!("ok");
                    Ok(ExitCode::SUCCESS)
                }
                Err(why) => {
                    eprintln!("invalid coloring: {why}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Cmd::Sweep { sizes, avg_degree, config, out } => {
            let cfg = config.run_config()?;
            let mut lines = vec![SWEEP_HEADER.to_string()];
            for part in sizes.split(',') {
                let n: usize = part.trim().parse().with_context(|| format!("size {part:?}"))?;
                let spec =
                    GenSpec::parse(&format!("gnp,n={n},p={}", avg_degree / n as f64), config.seed)?;
                let file = generate(&spec)?;
                let m = file.edges.len();
                let instance =
                    file.to_instance().map_err(|e| anyhow::anyhow!("bad instance: {e}"))?;
                let run =
                    color(&instance, &cfg).map_err(|e| anyhow::anyhow!("n={n} failed: {e}"))?;
                anyhow::ensure!(run.report.verification.ok, "n={n}: verification failed");
                let row = SweepRow {
                    n,
                    m,
                    rounds: run.report.total_rounds,
                    f_edges: run.report.levels.iter().map(|l| l.failed_edges).sum(),
                    gbad_edges: run.report.levels.iter().map(|l| l.gbad_edges).sum(),
                    depth: run.report.depth,
                };
                lines.push(row.csv());
            }
            let text = lines.join("\n") + "\n";
            match out {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_instance(
    input: Option<&std::path::Path>,
    gen: Option<&str>,
    seed: u64,
) -> anyhow::Result<InstanceFile> {
    match (input, gen) {
        (Some(path), None) => InstanceFile::read(path),
        (None, Some(spec)) => Ok(generate(&GenSpec::parse(spec, seed)?)?),
        _ => bail!("provide exactly one of --input or --gen"),
    }
}

/// Full proper-coloring check with a named first violation.
fn check_coloring(instance: &Instance, colors: &[Option<u32>]) -> Result<(), String> {
    if colors.len() != instance.n() {
        return Err(format!("{} colors for {} nodes", colors.len(), instance.n()));
    }
    let mut check = instance.clone();
    let assignments: Vec<(u32, u32)> = colors
        .iter()
        .enumerate()
        .filter_map(|(v, c)| c.map(|c| (v as u32, c)))
        .collect();
    check.apply_colors(&assignments).map_err(|e| e.to_string())?;
    let report = check.verify();
    match report.violations.first() {
        None => Ok(()),
        Some(v) => Err(format!("{v:?}")),
    }
}
