//! Thin command-line front end; all logic lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ssbsim::cli;
use ssbsim::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "ssbsim", disable_version_flag = true)]
#[command(about = "mmWave initial-access simulator with learned SSB codebooks")]
struct Cli {
    /// Print build and file-format versions.
    #[arg(long, global = true)]
    version: bool,
    /// Worker threads (1 = deterministic reference mode; default: cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override one config key: section.key=value (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> ssbsim::Result<ExperimentConfig> {
        let mut overrides = self.set.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("scenario.seed={seed}"));
        }
        ExperimentConfig::from_path(&self.config, &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the beam pool and a sample scenario with content hashes.
    Gen {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the expert sweeps on a scenario; dump associations,
    /// observations, and the gain cache.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Exported pool file (rebuilt from the config when omitted).
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Scenario file (generated from the config when omitted).
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Train the codebook policy.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Exported pool file (rebuilt from the config when omitted).
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Checkpoint directory (created if needed).
        #[arg(long, default_value = "checkpoint")]
        checkpoint: PathBuf,
        /// Resume from an existing checkpoint directory.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Greedy-decode codebooks for one scenario from a checkpoint.
    Select {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Exported pool file (rebuilt from the config when omitted).
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, default_value = "checkpoint")]
        checkpoint: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "deployment.txt")]
        out: PathBuf,
    },
    /// Evaluate methods on held-out instances and write the report.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Exported pool file (rebuilt from the config when omitted).
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Checkpoint directory (required when evaluating `neural`).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
        /// Methods, comma-separated or `all` (overrides the config).
        #[arg(long)]
        methods: Option<String>,
        /// Number of held-out instances (overrides the config).
        #[arg(long)]
        instances: Option<usize>,
        /// Inter-site distance in metres (overrides the config).
        #[arg(long)]
        isd: Option<f64>,
    },
    /// Rebuild summary and figures from a per-instance CSV.
    Report {
        /// `per_instance.csv` from a previous eval run.
        #[arg(long)]
        per_instance: PathBuf,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Write a config file with every default spelled out.
    InitConfig {
        #[arg(long, default_value = "ssbsim.toml")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> ssbsim::Result<String> {
    match cli.command {
        None => Ok(cli::version_string() + "\n"),
        Some(Command::Gen { cfg, out }) => cli::cmd_gen(&cfg.load()?, &out),
        Some(Command::Sweep {
            cfg,
            pool,
            scenario,
            out,
        }) => cli::cmd_sweep(&cfg.load()?, pool.as_deref(), scenario.as_deref(), &out),
        Some(Command::Train {
            cfg,
            pool,
            checkpoint,
            resume,
        }) => cli::cmd_train(&cfg.load()?, pool.as_deref(), &checkpoint, resume.as_deref()),
        Some(Command::Select {
            cfg,
            pool,
            checkpoint,
            scenario,
            out,
        }) => cli::cmd_select(&cfg.load()?, pool.as_deref(), &checkpoint, scenario.as_deref(), &out),
        Some(Command::Eval {
            cfg,
            pool,
            checkpoint,
            out,
            methods,
            instances,
            isd,
        }) => {
            let mut experiment = cfg.load()?;
            if let Some(m) = methods {
                experiment.eval.methods = m;
            }
            if let Some(n) = instances {
                experiment.eval.num_instances = n;
            }
            if let Some(d) = isd {
                experiment.layout.isd = d;
            }
            cli::cmd_eval(&experiment, pool.as_deref(), checkpoint.as_deref(), &out)
        }
        Some(Command::Report { per_instance, out }) => cli::cmd_report(&per_instance, &out),
        Some(Command::InitConfig { out }) => cli::write_default_config(&out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.version {
        println!("{}", cli::version_string());
        return ExitCode::SUCCESS;
    }
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("ssbsim: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ssbsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
