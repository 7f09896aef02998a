use anyhow::Result;
use clap::Parser;
use locverify::config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

/// Experiment harness for the delay-based location-verification stack.
///
/// Runs one named experiment per invocation and writes CSV/JSON artifacts
/// plus a manifest into the output directory. Values in the config file
/// override the command-line flags.
#[derive(Parser, Debug)]
#[command(name = "locverify", version, about)]
struct Cli {
    /// Experiment name (see `--list`).
    experiment: Option<String>,

    /// JSON config; its experiment/seed/out_dir entries take precedence.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Seed for the run (mandatory for reproducibility; default 42).
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory; falls back to $LOCVERIFY_OUT, then ./out.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Wireless delay model for the wireless experiments
    /// (overridden by the config's wireless_model).
    #[arg(long, value_parser = ["carvalho", "raptis", "both"])]
    wireless_model: Option<String>,

    /// Run the built-in reference-value assertions and exit (code 3 on
    /// failure).
    #[arg(long)]
    check: bool,

    /// List the available experiments.
    #[arg(long)]
    list: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if cli.list {
        for name in locverify::EXPERIMENTS {
            println!("{name}");
        }
        return Ok(ExitCode::SUCCESS);
    }
    if cli.check {
        let report = locverify::checks::run_checks();
        println!(
            "checks: {} passed, {} failed",
            report.passed,
            report.failed.len()
        );
        return Ok(if report.failed.is_empty() {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(3)
        });
    }

    // Flags first, then the config file on top: the config wins.
    let mut config = match (&cli.config, &cli.experiment) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => ExperimentConfig::new(name, cli.seed.unwrap_or(42)),
        (None, None) => {
            anyhow::bail!("an experiment name or --config is required (try --list)")
        }
    };
    if cli.config.is_some() {
        if let Some(name) = &cli.experiment {
            if *name != config.experiment {
                anyhow::bail!(
                    "experiment argument {:?} conflicts with config experiment {:?}",
                    name,
                    config.experiment
                );
            }
        }
    } else if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(model) = &cli.wireless_model {
        let uses_model = matches!(
            config.experiment.as_str(),
            "wireless-cdf" | "wireless-iters" | "cpv-wireless"
        );
        if uses_model {
            let params = config.params.take();
            let mut map = match params {
                serde_json::Value::Object(m) => m,
                serde_json::Value::Null => serde_json::Map::new(),
                other => {
                    anyhow::bail!("params must be an object, got {other}")
                }
            };
            // The config file wins over the flag.
            map.entry("wireless_model".to_string())
                .or_insert_with(|| serde_json::Value::String(model.clone()));
            config.params = serde_json::Value::Object(map);
        }
    }

    let out_dir = config
        .out_dir
        .clone()
        .or(cli.out)
        .or_else(|| std::env::var_os("LOCVERIFY_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let outcome = locverify::run(&config, &out_dir)?;
    println!(
        "{}: wrote {} files to {}",
        config.experiment,
        outcome.files.len(),
        out_dir.display()
    );
    for f in &outcome.files {
        println!("  {}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}
