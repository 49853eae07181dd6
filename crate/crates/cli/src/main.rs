use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hjsing_cli::{fixture_listing, load_config, model_listing, run_scenario, Task, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "hjsing", version, about = "Run Hamilton-Jacobi scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fundamental solution A_t(x, y) and its minimizer.
    Fundamental(RunArgs),
    /// Convexity or semiconcavity probe of A_t(x, .).
    Probe(RunArgs),
    /// Lax-Oleinik sup- or inf-convolution of a field.
    Supconv(RunArgs),
    /// Superdifferential estimate and singular/critical flags at a point.
    Classify(RunArgs),
    /// Singular arc from a seed point.
    Trace(RunArgs),
    /// Critical value and weak KAM solution on the torus.
    Weakkam(RunArgs),
    /// Singular arc plus inclusion certificate and energy monitor.
    Certify(RunArgs),
    /// Print the model registry.
    ListModels,
    /// Print the fixture registry.
    ListFixtures,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `options.seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the parallel solvers.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(task: Task, args: RunArgs) -> ExitCode {
    if let Some(k) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    }
    let result = load_config(&args.config).and_then(|(mut cfg, raw)| {
        if let Some(seed) = args.seed {
            cfg.options.seed = Some(seed);
        }
        let out = args
            .out
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        run_scenario(&cfg, task, &raw, &out)
    });
    match result {
        Ok(report) => {
            println!(
                "{} {} -> {}",
                task,
                report.report["status"].as_str().unwrap_or("?"),
                report.out_dir.display()
            );
            if let Some(msg) = report.report["error"]["message"].as_str() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args) = match cli.command {
        Command::ListModels => {
            print!("{}", model_listing());
            return ExitCode::SUCCESS;
        }
        Command::ListFixtures => {
            print!("{}", fixture_listing());
            return ExitCode::SUCCESS;
        }
        Command::Fundamental(a) => (Task::Fundamental, a),
        Command::Probe(a) => (Task::Probe, a),
        Command::Supconv(a) => (Task::Supconv, a),
        Command::Classify(a) => (Task::Classify, a),
        Command::Trace(a) => (Task::Trace, a),
        Command::Weakkam(a) => (Task::Weakkam, a),
        Command::Certify(a) => (Task::Certify, a),
    };
    run(task, args)
}
