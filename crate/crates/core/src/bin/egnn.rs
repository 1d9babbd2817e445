use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use egnn_core::experiment::{self, ExperimentConfig, SweepPlan};
use egnn_core::features::WindowSpec;
use egnn_core::io::{FeatureTable, Manifest};
use egnn_core::network::UpdateRule;
use egnn_core::synth::BoxStreamConfig;
use egnn_core::{Error, HyperParams};

/// Evolving granular classifier for EEG feature streams.
#[derive(Parser)]
#[command(name = "egnn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Window recordings listed in a manifest and write the feature CSV.
    Extract(ExtractArgs),
    /// Rank features by class correlation minus redundancy.
    Rank(RankArgs),
    /// Prequential run over a feature CSV.
    Run(RunArgs),
    /// Leave-k-out or per-channel sweep over hyper-parameter grids.
    Sweep(SweepArgs),
    /// Plot-ready curves and confusion matrix from a run directory.
    Report(ReportArgs),
    /// Synthetic four-box stream as a feature CSV.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    window: f64,
    /// Comma-separated channel list; defaults to the manifest's channels.
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<String>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    features: PathBuf,
    /// Redundancy penalty.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    ClassAware,
    Listing,
}

impl From<RuleArg> for UpdateRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::ClassAware => UpdateRule::ClassAware,
            RuleArg::Listing => UpdateRule::Listing,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<String>>,
    #[arg(long)]
    ranking: Option<PathBuf>,
    #[arg(long)]
    n_features: Option<usize>,
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long)]
    hr: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_enum)]
    update_rule: Option<RuleArg>,
    /// Feed raw values instead of online min-max normalized ones.
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// One or more feature CSVs; per-channel mode runs every channel of each.
    #[arg(long, num_args = 1.., required = true)]
    features: Vec<PathBuf>,
    /// Ranking JSON giving the removal order; feature order otherwise.
    #[arg(long)]
    ranking: Option<PathBuf>,
    #[arg(long)]
    per_channel: bool,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    min_size: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.6")]
    rho0: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    hr: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    eta: Vec<f64>,
    #[arg(long, value_enum, default_value = "class-aware")]
    update_rule: RuleArg,
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory written by `run`.
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 4000)]
    instances: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// `STEP:OFFSET`, e.g. `2001:0.3`.
    #[arg(long)]
    drift: Option<String>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn run_config(args: RunArgs) -> egnn_core::Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => Some(ExperimentConfig::load(path)?),
        None => None,
    };
    let features = args
        .features
        .or_else(|| config.as_ref().map(|c| c.features.clone()))
        .ok_or_else(|| usage("--features is required"))?;
    let seed = args
        .seed
        .or_else(|| config.as_ref().map(|c| c.seed))
        .ok_or_else(|| usage("--seed is required"))?;
    let output_dir = args
        .out
        .or_else(|| config.as_ref().map(|c| c.output_dir.clone()))
        .ok_or_else(|| usage("--out is required"))?;
    let mut c = config.take().unwrap_or(ExperimentConfig {
        features: features.clone(),
        channels: None,
        ranking: None,
        n_features: None,
        hyper_params: HyperParams::default(),
        seed,
        normalize: true,
        output_dir: output_dir.clone(),
    });
    c.features = features;
    c.seed = seed;
    c.output_dir = output_dir;
    if args.channels.is_some() {
        c.channels = args.channels;
    }
    if args.ranking.is_some() {
        c.ranking = args.ranking;
    }
    if args.n_features.is_some() {
        c.n_features = args.n_features;
    }
    let hp = &mut c.hyper_params;
    if let Some(v) = args.rho0 {
        hp.rho0 = v;
    }
    if let Some(v) = args.hr {
        hp.hr = v;
    }
    if let Some(v) = args.eta {
        hp.eta = v;
    }
    if let Some(v) = args.update_rule {
        hp.update_rule = v.into();
    }
    if args.no_normalize {
        c.normalize = false;
    }
    hp.validate()?;
    Ok(c)
}

fn execute(command: Command) -> egnn_core::Result<()> {
    match command {
        Command::Extract(a) => {
            let manifest = Manifest::load(&a.manifest)?;
            let table = experiment::extract(&manifest, WindowSpec { length_seconds: a.window }, a.channels.as_deref())?;
            table.save(&a.out)?;
            eprintln!("{} windows x {} features -> {}", table.rows.len(), table.names.len(), a.out.display());
        }
        Command::Rank(a) => {
            let table = FeatureTable::load(&a.features)?;
            let ranking = experiment::rank(&table, a.lambda)?;
            experiment::write_ranking(&a.out, &ranking)?;
        }
        Command::Run(a) => {
            let config = run_config(a)?;
            let output = experiment::run(&config)?;
            experiment::write_run(&config.output_dir, &output)?;
            let r = &output.report;
            println!(
                "instances {}  acc {:.4}  c_avg {:.2}  granules {}  rho {:.4}  ii {:.4}",
                r.instances, r.final_accuracy, r.c_avg, r.final_granules, r.final_rho, r.final_ii.unwrap_or(f64::NAN)
            );
        }
        Command::Sweep(a) => {
            let rule: UpdateRule = a.update_rule.into();
            let mut hyper_sets = Vec::new();
            for &rho0 in &a.rho0 {
                for &hr in &a.hr {
                    for &eta in &a.eta {
                        let hp = HyperParams {
                            rho0,
                            hr,
                            eta,
                            update_rule: rule,
                            ..HyperParams::default()
                        };
                        hp.validate()?;
                        hyper_sets.push(hp);
                    }
                }
            }
            let plan = SweepPlan {
                hyper_sets,
                seed: a.seed,
                normalize: !a.no_normalize,
            };
            let rows = if a.per_channel {
                let sources = a
                    .features
                    .iter()
                    .map(|p| {
                        let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                        Ok((name, FeatureTable::load(p)?))
                    })
                    .collect::<egnn_core::Result<Vec<_>>>()?;
                experiment::sweep_per_channel(&sources, &plan)?
            } else {
                if a.features.len() != 1 {
                    return Err(usage("leave-k-out sweeps take exactly one --features file"));
                }
                let table = FeatureTable::load(&a.features[0])?;
                let order = match &a.ranking {
                    Some(p) => {
                        let ranking = experiment::load_ranking(p)?;
                        ranking
                            .features
                            .iter()
                            .map(|f| {
                                table
                                    .names
                                    .iter()
                                    .position(|n| *n == f.meta.name)
                                    .ok_or_else(|| Error::Invalid(format!("ranked feature {} not in table", f.meta.name)))
                            })
                            .collect::<egnn_core::Result<Vec<_>>>()?
                    }
                    None => (0..table.names.len()).collect(),
                };
                experiment::sweep_leave_k_out(&table, &order, a.k, a.min_size, &plan)?
            };
            experiment::write_sweep(&a.out, &rows)?;
            print!("{}", experiment::sweep_csv(&rows));
        }
        Command::Report(a) => {
            for p in experiment::report(&a.run, &a.out, a.svg)? {
                println!("{}", p.display());
            }
        }
        Command::Synth(a) => {
            let mut cfg = BoxStreamConfig::four_squares(a.instances, a.noise, a.seed);
            if let Some(spec) = &a.drift {
                let (step, offset) = spec
                    .split_once(':')
                    .and_then(|(s, o)| Some((s.parse().ok()?, o.parse().ok()?)))
                    .ok_or_else(|| usage(format!("--drift expects STEP:OFFSET, got {spec}")))?;
                cfg = cfg.with_drift(step, offset);
            }
            experiment::synth_table(&cfg)?.save(&a.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 1 })
        }
    }
}
