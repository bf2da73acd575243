//! Command-line pipelines over the opinion-dynamics library: generate
//! systems, simulate trajectories, rescale them, recover resistances,
//! validate model predictions and run noise-robustness sweeps.
//!
//! Every command reads one run configuration (TOML file plus per-flag
//! overrides), writes its artifacts to the configured paths, and ends with
//! a machine-parsable `key=value` summary line on standard output. Prose
//! and warnings go to standard error.
//!
//! Exit codes: 0 success, 1 validation failure (a model prediction or
//! estimate-range check failed), 2 input error, 3 numerical failure.

mod commands;

use clap::{Parser, Subcommand, ValueEnum};
use degroot::io::{
    self, DistKey, EstimationMode, GenKind, GenerateSection, RunConfig, WeightsKey,
};

#[derive(Parser, Debug)]
#[command(
    name = "degroot",
    version,
    about = "Opinion dynamics on influence networks and scale-free recovery of resistance to influence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a network, resistance profile and initial opinions, plus a
    /// run manifest.
    Generate,
    /// Run the dynamics from files on disk and write the trajectory.
    Simulate,
    /// Recover resistances from a network and a trajectory.
    Estimate,
    /// Check hull containment and consensus preservation of a trajectory.
    Validate,
    /// Apply an affine rescale to a trajectory.
    Rescale,
    /// Noise-robustness study over a sigma-by-length grid.
    Sweep,
    /// Print the documented default configuration.
    ConfigReference,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Static,
    Varying,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Complete,
    Ring,
    Star,
    RandomSparse,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WeightsArg {
    Uniform,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DistArg {
    Uniform,
    Gaussian,
    Constant,
}

/// Per-flag overrides mirroring every run-config field.
#[derive(Parser, Debug)]
struct Overrides {
    /// Run configuration file; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<String>,

    /// Run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Degeneracy threshold, relative to the per-column opinion range.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Estimator mode.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,

    /// Network topology to generate.
    #[arg(long = "gen-kind", global = true, value_enum)]
    gen_kind: Option<KindArg>,
    /// Node count of the generated system.
    #[arg(long = "gen-n", global = true)]
    gen_n: Option<usize>,
    /// Issue dimensions of the generated initial opinions.
    #[arg(long = "gen-m", global = true)]
    gen_m: Option<usize>,
    /// Edge probability for random-sparse generation.
    #[arg(long, global = true)]
    density: Option<f64>,
    /// Weight scheme of generated rows.
    #[arg(long = "gen-weights", global = true, value_enum)]
    gen_weights: Option<WeightsArg>,
    /// Lower resistance bound for generation.
    #[arg(long, global = true)]
    resistance_low: Option<f64>,
    /// Upper resistance bound for generation.
    #[arg(long, global = true)]
    resistance_high: Option<f64>,
    /// Initial-opinion distribution.
    #[arg(long = "opinions-dist", global = true, value_enum)]
    opinions_dist: Option<DistArg>,
    /// Uniform opinion lower bound.
    #[arg(long, global = true, allow_negative_numbers = true)]
    opinions_low: Option<f64>,
    /// Uniform opinion upper bound.
    #[arg(long, global = true, allow_negative_numbers = true)]
    opinions_high: Option<f64>,
    /// Gaussian opinion mean.
    #[arg(long, global = true, allow_negative_numbers = true)]
    opinions_mean: Option<f64>,
    /// Gaussian opinion scale.
    #[arg(long, global = true)]
    opinions_sigma: Option<f64>,
    /// Constant (consensus) opinion value.
    #[arg(long, global = true, allow_negative_numbers = true)]
    opinions_value: Option<f64>,

    /// Fixed simulation horizon in steps; clears a configured tolerance.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Convergence tolerance; clears a configured horizon.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Step cap for convergence mode.
    #[arg(long, global = true)]
    max_steps: Option<usize>,

    /// Rescale factor (must be positive).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Rescale offset.
    #[arg(long, global = true, allow_negative_numbers = true)]
    beta: Option<f64>,

    /// Slack on the convex-hull bounds in validation.
    #[arg(long, global = true)]
    hull_tol: Option<f64>,
    /// Consensus detection and preservation tolerance in validation.
    #[arg(long, global = true)]
    consensus_tol: Option<f64>,

    /// Sweep noise scales (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    /// Sweep trajectory lengths in steps (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    lengths: Option<Vec<usize>>,
    /// Independent systems per sweep cell.
    #[arg(long, global = true)]
    sweep_seeds: Option<u64>,

    /// Network file path.
    #[arg(long, global = true)]
    network: Option<String>,
    /// Resistance file path.
    #[arg(long, global = true)]
    resistance: Option<String>,
    /// Initial-opinion file path.
    #[arg(long, global = true)]
    opinions: Option<String>,
    /// Trajectory file path.
    #[arg(long, global = true)]
    trajectory: Option<String>,
    /// Rescaled-trajectory output path.
    #[arg(long, global = true)]
    rescaled: Option<String>,
    /// Estimation report output path.
    #[arg(long, global = true)]
    report: Option<String>,
    /// Sweep table output path.
    #[arg(long = "sweep-out", global = true)]
    sweep_out: Option<String>,
    /// Manifest output path.
    #[arg(long, global = true)]
    manifest: Option<String>,
}

impl Overrides {
    fn wants_generate_section(&self) -> bool {
        self.gen_kind.is_some()
            || self.gen_n.is_some()
            || self.gen_m.is_some()
            || self.density.is_some()
            || self.gen_weights.is_some()
            || self.resistance_low.is_some()
            || self.resistance_high.is_some()
            || self.opinions_dist.is_some()
            || self.opinions_low.is_some()
            || self.opinions_high.is_some()
            || self.opinions_mean.is_some()
            || self.opinions_sigma.is_some()
            || self.opinions_value.is_some()
    }

    fn apply(&self, config: &mut RunConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(epsilon) = self.epsilon {
            config.epsilon = epsilon;
        }
        if let Some(mode) = self.mode {
            config.mode = match mode {
                ModeArg::Static => EstimationMode::Static,
                ModeArg::Varying => EstimationMode::Varying,
            };
        }

        if self.wants_generate_section() {
            let g = config.generate.get_or_insert_with(GenerateSection::default);
            if let Some(kind) = self.gen_kind {
                g.kind = match kind {
                    KindArg::Complete => GenKind::Complete,
                    KindArg::Ring => GenKind::Ring,
                    KindArg::Star => GenKind::Star,
                    KindArg::RandomSparse => GenKind::RandomSparse,
                };
            }
            if let Some(n) = self.gen_n {
                g.n = n;
            }
            if let Some(m) = self.gen_m {
                g.m = m;
            }
            if let Some(density) = self.density {
                g.density = Some(density);
            }
            if let Some(weights) = self.gen_weights {
                g.weights = match weights {
                    WeightsArg::Uniform => WeightsKey::Uniform,
                    WeightsArg::Random => WeightsKey::Random,
                };
            }
            if let Some(low) = self.resistance_low {
                g.resistance_low = low;
            }
            if let Some(high) = self.resistance_high {
                g.resistance_high = high;
            }
            if let Some(dist) = self.opinions_dist {
                g.opinions.distribution = match dist {
                    DistArg::Uniform => DistKey::Uniform,
                    DistArg::Gaussian => DistKey::Gaussian,
                    DistArg::Constant => DistKey::Constant,
                };
            }
            if let Some(low) = self.opinions_low {
                g.opinions.low = low;
            }
            if let Some(high) = self.opinions_high {
                g.opinions.high = high;
            }
            if let Some(mean) = self.opinions_mean {
                g.opinions.mean = mean;
            }
            if let Some(sigma) = self.opinions_sigma {
                g.opinions.sigma = sigma;
            }
            if let Some(value) = self.opinions_value {
                g.opinions.value = value;
            }
        }

        if let Some(steps) = self.steps {
            config.simulate.steps = Some(steps);
            config.simulate.tol = None;
        }
        if let Some(tol) = self.tol {
            config.simulate.tol = Some(tol);
            config.simulate.steps = None;
        }
        if let Some(max_steps) = self.max_steps {
            config.simulate.max_steps = max_steps;
        }

        if let Some(alpha) = self.alpha {
            config.rescale.alpha = alpha;
        }
        if let Some(beta) = self.beta {
            config.rescale.beta = beta;
        }
        if let Some(hull_tol) = self.hull_tol {
            config.validate.hull_tol = hull_tol;
        }
        if let Some(consensus_tol) = self.consensus_tol {
            config.validate.consensus_tol = consensus_tol;
        }
        if let Some(sigmas) = &self.sigmas {
            config.sweep.sigmas = sigmas.clone();
        }
        if let Some(lengths) = &self.lengths {
            config.sweep.lengths = lengths.clone();
        }
        if let Some(seeds) = self.sweep_seeds {
            config.sweep.seeds = seeds;
        }

        if let Some(path) = &self.network {
            config.paths.network = path.clone();
        }
        if let Some(path) = &self.resistance {
            config.paths.resistance = path.clone();
        }
        if let Some(path) = &self.opinions {
            config.paths.opinions = path.clone();
        }
        if let Some(path) = &self.trajectory {
            config.paths.trajectory = path.clone();
        }
        if let Some(path) = &self.rescaled {
            config.paths.rescaled = path.clone();
        }
        if let Some(path) = &self.report {
            config.paths.report = path.clone();
        }
        if let Some(path) = &self.sweep_out {
            config.paths.sweep = path.clone();
        }
        if let Some(path) = &self.manifest {
            config.paths.manifest = path.clone();
        }
    }
}

/// Process exit status. Codes are mutually exclusive; the most severe
/// failure of a command decides.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    /// Everything ran and every check passed.
    Success,
    /// A model prediction or estimate-range check failed.
    ValidationFailure,
    /// Bad flags, config, or input files.
    InputError,
    /// The numerics did not converge within their cap.
    NumericalFailure,
}

impl ExitStatus {
    fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::ValidationFailure => 1,
            ExitStatus::InputError => 2,
            ExitStatus::NumericalFailure => 3,
        }
    }
}

fn status_for(err: &degroot::Error) -> ExitStatus {
    match err {
        degroot::Error::Reducible | degroot::Error::NonConvergence { .. } => {
            ExitStatus::NumericalFailure
        }
        _ => ExitStatus::InputError,
    }
}

fn load_config(overrides: &Overrides) -> degroot::Result<RunConfig> {
    let mut config = match &overrides.config {
        Some(path) => io::read_config(path)?,
        None => RunConfig::default(),
    };
    overrides.apply(&mut config);
    config.validate()?;
    Ok(config)
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    if matches!(cli.command, Command::ConfigReference) {
        print!("{}", io::config_reference());
        std::process::exit(ExitStatus::Success.code());
    }

    let config = match load_config(&cli.overrides) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(status_for(&err).code());
        }
    };

    let outcome = match cli.command {
        Command::Generate => commands::generate(&config),
        Command::Simulate => commands::simulate(&config),
        Command::Estimate => commands::estimate(&config),
        Command::Validate => commands::validate(&config),
        Command::Rescale => commands::rescale(&config),
        Command::Sweep => commands::sweep(&config),
        Command::ConfigReference => unreachable!("handled above"),
    };

    match outcome {
        Ok(status) => std::process::exit(status.code()),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(status_for(&err).code());
        }
    }
}
