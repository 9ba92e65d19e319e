//! Accuracy evaluation, configuration sweeps and reports.

mod report;
mod sweep;

use std::sync::OnceLock;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{Arithmetic, FxConfig};
use crate::model_io::{
    plan_from_profile, profile_activations, quantize_model, ActivationProfile, Dataset, ModelError, ModelManifest,
    RealModel,
};

pub use report::{plot_data, report, Series, SeriesPoint};
pub use sweep::{sweep, write_csv, write_eval_csv, CellOutcome, SweepGrid, CSV_HEADER};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "FIXSIM_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("limit must be at least 1")]
    ZeroLimit,
    #[error("limit {limit} exceeds the {available} available images")]
    LimitTooLarge { limit: usize, available: usize },
    #[error("{THREADS_ENV}: {0}")]
    Threads(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Accuracy of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub arithmetic: Arithmetic,
    pub images: usize,
    pub correct: usize,
    /// Top-1 accuracy as a fraction.
    pub accuracy: f64,
    pub overflow_events: u64,
    /// Wall time of the evaluation, when timing was requested.
    pub wall_ms: Option<u64>,
}

/// A model, its test set and calibration samples, plus a worker pool.
///
/// Activation statistics for Norm calibration are computed on first use and
/// shared by every calibrated configuration afterwards.
pub struct Experiment {
    model: ModelManifest,
    real: RealModel,
    test: Dataset,
    calibration: Dataset,
    profile: OnceLock<ActivationProfile>,
    pool: rayon::ThreadPool,
    timing: bool,
}

/// Worker count from [`THREADS_ENV`], if set.
pub fn threads_from_env() -> Result<Option<usize>, HarnessError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(HarnessError::Threads(format!("expected a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

impl Experiment {
    /// `calibration` supplies the Norm calibration images; `None` uses the
    /// head of the test set.
    pub fn new(model: ModelManifest, test: Dataset, calibration: Option<Dataset>) -> Result<Self, HarnessError> {
        let real = RealModel::new(&model)?;
        let calibration = calibration.unwrap_or_else(|| test.head(crate::model_io::CALIBRATION_IMAGES));
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads_from_env()? {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| HarnessError::Threads(e.to_string()))?;
        Ok(Self { model, real, test, calibration, profile: OnceLock::new(), pool, timing: false })
    }

    /// Record wall time in results (off by default so output is reproducible).
    pub fn with_timing(mut self, on: bool) -> Self {
        self.timing = on;
        self
    }

    pub fn model(&self) -> &ModelManifest {
        &self.model
    }

    pub fn test_set(&self) -> &Dataset {
        &self.test
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn profile(&self) -> Result<&ActivationProfile, HarnessError> {
        if let Some(p) = self.profile.get() {
            return Ok(p);
        }
        let p = profile_activations(&self.model, &self.calibration)?;
        Ok(self.profile.get_or_init(|| p))
    }

    /// Evaluate the first `limit` test images (all of them when `None`).
    pub fn run_eval(&self, arithmetic: &Arithmetic, limit: Option<usize>) -> Result<EvalResult, HarnessError> {
        let n = limit.unwrap_or(self.test.len());
        if n == 0 {
            return Err(HarnessError::ZeroLimit);
        }
        if n > self.test.len() {
            return Err(HarnessError::LimitTooLarge { limit: n, available: self.test.len() });
        }
        let start = Instant::now();
        let (correct, overflow_events) = match arithmetic {
            Arithmetic::Real => self.pool.install(|| {
                (0..n)
                    .into_par_iter()
                    .map(|i| -> Result<(usize, u64), ModelError> {
                        let out = self.real.infer(self.test.image(i))?;
                        Ok(((out.class == self.test.label(i) as usize) as usize, 0u64))
                    })
                    .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))
            })?,
            Arithmetic::Fixed(cfg) => self.run_fixed(cfg, n)?,
        };
        let wall_ms = self.timing.then(|| start.elapsed().as_millis() as u64);
        Ok(EvalResult {
            arithmetic: *arithmetic,
            images: n,
            correct,
            accuracy: correct as f64 / n as f64,
            overflow_events,
            wall_ms,
        })
    }

    fn run_fixed(&self, cfg: &FxConfig, n: usize) -> Result<(usize, u64), HarnessError> {
        let plan = if cfg.is_norm() && cfg.norm_policy == crate::engine::NormShiftPolicy::Calibrated {
            Some(plan_from_profile(self.profile()?, cfg.format.int_bits(), cfg.position))
        } else {
            None
        };
        let fixed = quantize_model(&self.model, cfg, plan.as_ref())?;
        let r: Result<(usize, u64), ModelError> = self.pool.install(|| {
            (0..n)
                .into_par_iter()
                .map(|i| -> Result<(usize, u64), ModelError> {
                    let out = fixed.infer(self.test.image(i), i as u64)?;
                    Ok(((out.class == self.test.label(i) as usize) as usize, out.overflow_events))
                })
                .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))
        });
        Ok(r?)
    }
}
