//! Pipeline orchestration behind the `sphadc` binary: configuration,
//! run manifests, the two experiments and the single-step commands.

mod commands;
mod config;
mod experiments;
mod manifest;

use thiserror::Error;

use crate::datagen::DatagenError;
use crate::eval::EvalError;
use crate::nn::NnError;
use crate::schemes::SchemeError;
use crate::tensor::TensorError;

pub use commands::{equiv_test, eval_predictions, fit_dataset, gen_data, gen_scheme, predict, train_on_dataset, SchemeKind};
pub use config::{ExperimentConfig, Split, TEST_SEED_OFFSET};
pub use experiments::{
    dtfit_predictions, evaluate, resolve_schemes, run_experiment1, run_experiment2, Exp1Report, Exp2Report, ModelEval,
};
pub use manifest::{sha256_hex, verify_manifest, RunOutputs, MANIFEST_NAME};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("output {0} failed validation")]
    Validation(String),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sizes the global rayon pool from `SPHADC_THREADS` when it is set.
/// Results do not depend on the thread count.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SPHADC_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| CliError::Config(format!("SPHADC_THREADS={v:?} is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}
