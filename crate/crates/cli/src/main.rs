//! Command-line driver for seeded planning experiments.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use cbmcts::env::as_refs;
use cbmcts::harness::{
    emit_report, load_grid, load_report, report, sweep_grid, BuiltEnvironment, EnvironmentSpec,
    ExperimentSpec, Format, Report, SummaryRow,
};
use cbmcts::oracle::{brute_force_optimal_joint, DEFAULT_ENUMERATION_CAP};
use cbmcts::Environment;

/// Environment variable naming the default output directory.
const OUT_DIR_VAR: &str = "CBMCTS_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "cbmcts",
    version,
    about = "Decentralized multi-agent MCTS experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec and write CSV and JSON reports.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a spec once per combination of a parameter grid.
    Sweep {
        spec: PathBuf,
        grid: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Print the exact optimal joint plan of a small environment.
    Oracle {
        env_spec: PathBuf,
        /// Largest joint space to enumerate.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP as u64)]
        cap: u64,
    },
    /// Convert a CSV or JSON report, recomputing the summary.
    Report {
        records: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunOpts {
    /// Number of trials (seeds base_seed, base_seed+1, ...); overrides the spec.
    #[arg(long)]
    seeds: Option<usize>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output directory; falls back to the spec, then $CBMCTS_OUT_DIR, then ./results.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { spec, opts } => run(&spec, &opts),
        Command::Sweep { spec, grid, opts } => sweep(&spec, &grid, &opts),
        Command::Oracle { env_spec, cap } => oracle(&env_spec, cap),
        Command::Report {
            records,
            format,
            out,
        } => convert(&records, &format, out.as_deref()),
    }
}

fn load_spec(path: &Path, opts: &RunOpts) -> Result<ExperimentSpec> {
    let mut spec =
        ExperimentSpec::load(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(n) = opts.seeds {
        if n == 0 {
            bail!("--seeds must be at least 1");
        }
        spec.set_trial_count(n);
    }
    Ok(spec)
}

fn output_dir(spec: &ExperimentSpec, opts: &RunOpts) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| spec.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn write_both(report: &Report, dir: &Path, stem: &str) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (format, ext) in [(Format::Csv, "csv"), (Format::Json, "json")] {
        let path = dir.join(format!("{stem}.{ext}"));
        emit_report(report, format, &path)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn print_finals(summary: &[SummaryRow]) {
    let mut last: Vec<&SummaryRow> = Vec::new();
    for row in summary {
        match last.iter_mut().find(|r| r.algorithm == row.algorithm) {
            Some(r) if r.iteration < row.iteration => *r = row,
            Some(_) => {}
            None => last.push(row),
        }
    }
    println!(
        "{:<24} {:>9} {:>6} {:>22} {:>8} {:>8}",
        "algorithm", "iteration", "trials", "joint score (95% CI)", "regret", "pr2"
    );
    for r in last {
        let regret = r
            .simple_regret
            .map_or("-".to_string(), |s| format!("{:.4}", s.mean));
        println!(
            "{:<24} {:>9} {:>6} {:>8.4} [{:.4},{:.4}] {:>8} {:>8.3}",
            r.algorithm,
            r.iteration,
            r.trials,
            r.joint_score.mean,
            r.joint_score.lower,
            r.joint_score.upper,
            regret,
            r.pr2.mean
        );
    }
}

fn run(path: &Path, opts: &RunOpts) -> Result<()> {
    let spec = load_spec(path, opts)?;
    let report = cbmcts::harness::run_experiment(&spec, opts.jobs)?;
    write_both(&report, &output_dir(&spec, opts), &spec.env_id)?;
    print_finals(&report.summary);
    Ok(())
}

fn sweep(path: &Path, grid_path: &Path, opts: &RunOpts) -> Result<()> {
    let spec = load_spec(path, opts)?;
    let grid = load_grid(grid_path).with_context(|| format!("reading {}", grid_path.display()))?;
    let result = sweep_grid(&spec, &grid, opts.jobs)?;
    let dir = output_dir(&spec, opts);
    let stem = format!("{}-sweep", spec.env_id);
    write_both(&result.flattened(), &dir, &stem)?;
    let ranking = dir.join(format!("{stem}-ranking.json"));
    std::fs::write(&ranking, serde_json::to_string_pretty(&result.ranking)?)?;
    println!("wrote {}", ranking.display());
    for r in result.ranking.iter().take(10) {
        let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!(
            "{:>3}. {:<16} {:.4}  {}",
            r.rank,
            r.algorithm,
            r.score,
            params.join(" ")
        );
    }
    Ok(())
}

fn oracle(path: &Path, cap: u64) -> Result<()> {
    let spec =
        EnvironmentSpec::load(path).with_context(|| format!("reading {}", path.display()))?;
    let out = std::io::stdout();
    let mut out = out.lock();
    match BuiltEnvironment::build(&spec)? {
        BuiltEnvironment::Dchain(env) => print_optimum(&env, cap, &mut out),
        BuiltEnvironment::FrozenLake(maps) => print_optimum(&maps[0], cap, &mut out),
        BuiltEnvironment::Coverage(graphs) => print_optimum(&graphs[0], cap, &mut out),
    }
}

fn print_optimum<E: Environment>(env: &E, cap: u64, out: &mut impl Write) -> Result<()> {
    let opt = brute_force_optimal_joint(env, cap as u128)?;
    writeln!(
        out,
        "mu* = {} (raw {}, bound {})",
        opt.value,
        opt.raw_value,
        env.utility_bound()
    )?;
    for seq in &opt.witness {
        let actions: Vec<String> = seq.actions.iter().map(u32::to_string).collect();
        writeln!(out, "agent {}: [{}]", seq.agent, actions.join(", "))?;
    }
    debug_assert!((env.utility(&as_refs(&opt.witness)) - opt.raw_value).abs() < 1e-12);
    Ok(())
}

fn convert(path: &Path, format: &str, out: Option<&Path>) -> Result<()> {
    let format: Format = format.parse()?;
    let loaded = load_report(path).with_context(|| format!("reading {}", path.display()))?;
    match out {
        Some(p) => emit_report(&loaded, format, p)?,
        None => {
            if loaded.records.is_empty() {
                bail!("no records in {}", path.display());
            }
            let stdout = std::io::stdout();
            match format {
                Format::Csv => report::write_csv(&loaded.records, stdout.lock())?,
                Format::Json => {
                    report::write_json(&loaded, stdout.lock())?;
                    println!();
                }
            }
        }
    }
    Ok(())
}
