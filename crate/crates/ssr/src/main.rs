//! `ssr` command line: run a seeded experiment from a JSON config, or render
//! an existing CSV to SVG.
//!
//! Exit codes: 0 success, 2 config error, 3 degenerate-run abort.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ssr::harness::{
    emit_plot, run_experiment, ConfigError, ExperimentConfig, ExperimentKind, HarnessError,
    PlotKind,
};

#[derive(Parser)]
#[command(name = "ssr", about = "Seeded shift-robustness experiment runner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment JSON config.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's seed count.
    #[arg(long)]
    seeds: Option<usize>,
    /// Also render the CSV to an SVG next to it.
    #[arg(long)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Same- vs shifted-domain unlabeled data sweep over ε.
    Enhance(RunArgs),
    /// Sparse support recovery pipeline vs dense semi-supervised fit.
    Sparsity(RunArgs),
    /// Standard/robust error gap at small n, bridged by shifted data.
    Gap(RunArgs),
    /// Irrelevant (orthogonal-shift) unlabeled data.
    Irrelevant(RunArgs),
    /// Distance-measure bounds vs exact d_ν on random instances.
    Measures(RunArgs),
    /// Render an experiment CSV to a deterministic SVG.
    Plot {
        /// Input CSV produced by an experiment run.
        #[arg(long)]
        csv: PathBuf,
        /// Chart kind: line_by_epsilon or line_by_n.
        #[arg(long)]
        kind: String,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_threads() {
    if let Ok(v) = std::env::var("SSR_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                // Ignore the error if a global pool already exists.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn default_plot_kind(kind: ExperimentKind) -> Option<PlotKind> {
    match kind {
        ExperimentKind::Enhance | ExperimentKind::Sparsity => Some(PlotKind::LineByEpsilon),
        ExperimentKind::Gap => Some(PlotKind::LineByN),
        ExperimentKind::Irrelevant | ExperimentKind::Measures => None,
    }
}

fn run(kind: ExperimentKind, args: &RunArgs) -> ExitCode {
    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cfg.experiment != kind {
        eprintln!(
            "error: config declares experiment '{}' but the '{}' subcommand was invoked",
            cfg.experiment.tag(),
            kind.tag()
        );
        return ExitCode::from(2);
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seeds) = args.seeds {
        cfg.n_seeds = seeds;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }

    let record = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(HarnessError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e @ HarnessError::Degenerate(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
        Err(HarnessError::Io(e)) => {
            eprintln!("error: i/o failure: {e}");
            return ExitCode::FAILURE;
        }
    };

    let csv_path = cfg.output_dir.join(format!("{}.csv", kind.tag()));
    if let Err(e) = record.write_csv(&csv_path) {
        eprintln!("error: cannot write {}: {e}", csv_path.display());
        return ExitCode::FAILURE;
    }
    println!(
        "wrote {} ({} rows, {:.2}s, config_digest={})",
        csv_path.display(),
        record.rows.len(),
        record.wall_time,
        record.config_digest
    );

    if args.plot {
        let Some(plot_kind) = default_plot_kind(kind) else {
            eprintln!("error: the '{}' experiment has no default chart", kind.tag());
            return ExitCode::from(2);
        };
        let svg_path = cfg.output_dir.join(format!("{}.svg", kind.tag()));
        if let Err(e) = emit_plot(&record.to_csv_string(), plot_kind, &svg_path) {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
        println!("wrote {}", svg_path.display());
    }
    ExitCode::SUCCESS
}

fn plot_cmd(csv: &PathBuf, kind: &str, out: &PathBuf) -> ExitCode {
    let kind = match PlotKind::from_name(kind) {
        Ok(k) => k,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let text = match std::fs::read_to_string(csv) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}", ConfigError::Io(csv.clone(), e));
            return ExitCode::from(2);
        }
    };
    match emit_plot(&text, kind, out) {
        Ok(()) => {
            println!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match &cli.command {
        Command::Enhance(a) => run(ExperimentKind::Enhance, a),
        Command::Sparsity(a) => run(ExperimentKind::Sparsity, a),
        Command::Gap(a) => run(ExperimentKind::Gap, a),
        Command::Irrelevant(a) => run(ExperimentKind::Irrelevant, a),
        Command::Measures(a) => run(ExperimentKind::Measures, a),
        Command::Plot { csv, kind, out } => plot_cmd(csv, kind, out),
    }
}
