use std::path::PathBuf;
use std::process::ExitCode;

use adaptive_observer::harness::{compare_estimators, presets, run_experiment, RunConfig};
use adaptive_observer::{Error, Variant};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(version, about = "Run adaptive-observer experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments and write a CSV and summary per run. Several configs
    /// run in parallel, one thread each.
    Run {
        #[arg(required = true)]
        configs: Vec<String>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run the covariance-reset and forgetting variants side by side.
    Compare {
        config: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Built-in presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Check a config and report every problem found.
    Validate { config: String },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
}

/// Configs are JSON file paths or `preset:<name>`.
#[derive(Args)]
struct RunOpts {
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Forgetting factor when `--variant forgetting` is given.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    CovarianceReset,
    Forgetting,
    Ordinary,
}

fn load(spec: &str, args: &RunOpts) -> Result<RunConfig, Error> {
    let mut cfg = presets::load(spec)?;
    if let Some(h) = args.horizon {
        cfg = cfg.with_horizon(h);
    }
    if let Some(v) = args.variant {
        cfg = cfg.with_variant(match v {
            VariantArg::CovarianceReset => Variant::CovarianceReset,
            VariantArg::Forgetting => Variant::Forgetting { lambda: args.lambda },
            VariantArg::Ordinary => Variant::Ordinary,
        });
    }
    Ok(cfg)
}

fn stem(cfg: &RunConfig) -> String {
    cfg.output.as_ref().and_then(|o| o.stem.clone()).unwrap_or_else(|| cfg.name.clone())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { configs, opts } => {
            let cfgs = configs.iter().map(|c| load(c, &opts)).collect::<Result<Vec<_>, _>>()?;
            let results: Vec<Result<String, Error>> = std::thread::scope(|scope| {
                let handles: Vec<_> = cfgs
                    .iter()
                    .map(|cfg| {
                        let out_dir = &opts.out_dir;
                        scope.spawn(move || {
                            let log = run_experiment(cfg)?;
                            let (csv, summary) = log.write_files(out_dir, &stem(cfg))?;
                            Ok(format!("{}wrote {} and {}\n", log.summary_text(), csv.display(), summary.display()))
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
            });
            for report in results {
                print!("{}", report?);
            }
        }
        Command::Compare { config, opts: args } => {
            let cfg = load(&config, &args)?;
            let cmp = compare_estimators(&cfg)?;
            let base = stem(&cfg);
            cmp.reset.write_files(&args.out_dir, &format!("{base}.reset"))?;
            cmp.forgetting.write_files(&args.out_dir, &format!("{base}.forgetting"))?;
            let table = cmp.table();
            std::fs::write(args.out_dir.join(format!("{base}.comparison.txt")), &table)?;
            print!("{table}");
        }
        Command::Presets {
            action: PresetAction::List,
        } => {
            for name in presets::list() {
                let cfg = presets::get(name)?;
                println!("{name:<22} {}", cfg.description);
            }
        }
        Command::Validate { config } => {
            let cfg = presets::load(&config)?;
            let exp = cfg.validate()?;
            let dims = exp.dims();
            println!(
                "ok: {} (q={}, m={}, r={}, n={}, d={}, horizon={})",
                exp.name,
                dims.q(),
                dims.m(),
                dims.r(),
                dims.n(),
                dims.d(),
                exp.horizon
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config(issues)) => {
            for issue in issues {
                eprintln!("config error: {issue}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
