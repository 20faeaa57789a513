use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sphadc::cli::{self, CliError, ExperimentConfig, SchemeKind, Split};
use sphadc::nn::ModelKind;
use sphadc::schemes::OptimizerConfig;

/// FA estimation from six-direction diffusion MRI with fully-connected and
/// spherical networks on synthetic tensor phantoms.
///
/// Commands taking `--config` accept any config key as a trailing
/// `--key value` override. `SPHADC_THREADS` sets the worker count.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Design an N-direction scheme.
    GenScheme {
        #[arg(long, value_parser = parse::<SchemeKind>)]
        kind: SchemeKind,
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate one phantom split.
    GenData {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "train", value_parser = parse::<Split>)]
        split: Split,
        #[arg(long)]
        out: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Direct tensor-fit FA for every voxel.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on a dataset file.
    Train {
        #[arg(long, value_parser = parse_kind)]
        model: ModelKind,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// FA predictions of a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Binned RMSE and tile map of a prediction file.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out_prefix: PathBuf,
        #[arg(long, default_value_t = 0.6)]
        fa_threshold: f64,
    },
    /// Output change of a saved model under random rotations.
    EquivTest {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 100)]
        rotations: usize,
        #[arg(long, default_value_t = 50)]
        inputs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scheme file used to regenerate FCN inputs.
        #[arg(long)]
        scheme: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on one scheme, test on another.
    Exp1 {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Train on orientation-restricted data, test on all orientations.
    Exp2 {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
}

fn parse<T: std::str::FromStr<Err = CliError>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    match s {
        "fcn" => Ok(ModelKind::Fcn),
        "scnn" => Ok(ModelKind::Scnn),
        _ => Err(format!("expected fcn or scnn, got {s:?}")),
    }
}

fn config(base: ExperimentConfig, path: &Option<PathBuf>, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let cfg = match path {
        Some(p) => ExperimentConfig::from_file(p, base)?,
        None => base,
    };
    cfg.with_overrides(overrides)
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    let progress = |m: &str| eprintln!("sphadc: {m}");
    match cmd {
        Cmd::GenScheme { kind, n, seed, restarts, iters, out } => {
            let opt = OptimizerConfig { restarts, iters, ..OptimizerConfig::default() };
            cli::gen_scheme(kind, n, seed, &opt, &out)?;
        }
        Cmd::GenData { config: c, split, out, overrides } => {
            let n = cli::gen_data(&config(ExperimentConfig::experiment1(), &c, &overrides)?, split, &out)?;
            progress(&format!("wrote {n} voxels to {}", out.display()));
        }
        Cmd::Fit { data, scheme, out } => {
            cli::fit_dataset(&data, &scheme, &out)?;
        }
        Cmd::Train { model, data, scheme, config: c, out, overrides } => {
            let cfg = config(ExperimentConfig::experiment1(), &c, &overrides)?;
            let trace = cli::train_on_dataset(model, &data, &scheme, &cfg, &out)?;
            progress(&format!("final training mse {:e}", trace.last().copied().unwrap_or(f64::NAN)));
        }
        Cmd::Predict { model, data, scheme, out } => {
            cli::predict(&model, &data, &scheme, &out)?;
        }
        Cmd::Eval { pred, data, out_prefix, fa_threshold } => {
            for p in cli::eval_predictions(&pred, &data, &out_prefix, fa_threshold)? {
                progress(&format!("wrote {}", p.display()));
            }
        }
        Cmd::EquivTest { model, rotations, inputs, seed, scheme, out } => {
            let r = cli::equiv_test(&model, rotations, inputs, seed, scheme.as_deref(), &out)?;
            println!("max |Δ| {:e}, mean |Δ| {:e} over {} evaluations", r.max, r.mean, r.evaluations);
        }
        Cmd::Exp1 { config: c, overrides } => {
            let r = cli::run_experiment1(&config(ExperimentConfig::experiment1(), &c, &overrides)?, &progress)?;
            progress(&format!("manifest {}", r.manifest.display()));
        }
        Cmd::Exp2 { config: c, overrides } => {
            let r = cli::run_experiment2(&config(ExperimentConfig::experiment2(), &c, &overrides)?, &progress)?;
            progress(&format!("manifest {}", r.manifest.display()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(e) = cli::configure_threads().and_then(|_| run(args.cmd)) {
        eprintln!("sphadc: error: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
