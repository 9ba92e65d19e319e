use std::io::Write;

use super::{EvalResult, Experiment, HarnessError};
use crate::engine::{Arithmetic, FxConfig, MacPosition, NormShiftPolicy, DEFAULT_NORM_OVERFLOW_BITS};
use crate::fxcore::{AdjustMethod, FxFormat, RoundingMethod, DEFAULT_GUARD_BITS};

pub const CSV_HEADER: [&str; 11] = [
    "n_bits",
    "int_bits",
    "rounding",
    "adjust",
    "position",
    "norm_shift_policy",
    "seed",
    "images",
    "accuracy",
    "overflow_events",
    "wall_ms",
];

/// The cross product of formats, rounding methods, adjust methods and
/// positions to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub formats: Vec<FxFormat>,
    pub roundings: Vec<RoundingMethod>,
    pub adjusts: Vec<AdjustMethod>,
    pub positions: Vec<MacPosition>,
    pub norm_policy: NormShiftPolicy,
    pub norm_overflow_bits: u32,
    pub seed: u64,
    /// Test images per cell; `None` uses the whole test set.
    pub limit: Option<usize>,
}

impl Default for SweepGrid {
    /// Widths 4, 6, 8, 10 and 16 split evenly between integer and fraction
    /// bits, every rounding method, NBC, BC and calibrated Norm, both
    /// positions: 120 cells.
    fn default() -> Self {
        Self {
            formats: [4, 6, 8, 10, 16].iter().map(|&n| FxFormat::half_split(n).expect("valid width")).collect(),
            roundings: RoundingMethod::ALL.to_vec(),
            adjusts: vec![AdjustMethod::Nbc, AdjustMethod::Bc, AdjustMethod::Norm { shift: 0 }],
            positions: MacPosition::ALL.to_vec(),
            norm_policy: NormShiftPolicy::Calibrated,
            norm_overflow_bits: DEFAULT_NORM_OVERFLOW_BITS,
            seed: 0,
            limit: None,
        }
    }
}

impl SweepGrid {
    pub fn configs(&self) -> Result<Vec<FxConfig>, HarnessError> {
        if self.formats.is_empty() || self.roundings.is_empty() || self.adjusts.is_empty() || self.positions.is_empty() {
            return Err(HarnessError::Grid("every dimension needs at least one value".into()));
        }
        let mut out = Vec::new();
        for &format in &self.formats {
            for &rounding in &self.roundings {
                for &adjust in &self.adjusts {
                    for &position in &self.positions {
                        let cfg = FxConfig {
                            format,
                            rounding,
                            adjust,
                            position,
                            norm_policy: self.norm_policy,
                            norm_overflow_bits: self.norm_overflow_bits,
                            guard_bits: DEFAULT_GUARD_BITS,
                            seed: self.seed,
                        };
                        cfg.validate().map_err(|e| HarnessError::Grid(e.to_string()))?;
                        out.push(cfg);
                    }
                }
            }
        }
        out.sort_by_key(sort_key);
        Ok(out)
    }
}

fn sort_key(c: &FxConfig) -> (u32, u32, &'static str, &'static str, &'static str, String, u64) {
    (
        c.format.total_bits(),
        c.format.int_bits(),
        c.rounding.label(),
        c.adjust_label(),
        c.position.label(),
        c.norm_policy_label(),
        c.seed,
    )
}

/// One grid cell and its result, or the error that stopped it.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub config: FxConfig,
    pub result: Result<EvalResult, String>,
}

/// Evaluate every cell in order, one at a time; images within a cell run in
/// parallel. A failing cell is recorded and the sweep goes on. `progress` is
/// called after each cell.
pub fn sweep(
    exp: &Experiment,
    grid: &SweepGrid,
    mut progress: impl FnMut(usize, usize, &CellOutcome),
) -> Result<Vec<CellOutcome>, HarnessError> {
    let configs = grid.configs()?;
    let total = configs.len();
    let mut out = Vec::with_capacity(total);
    for (i, config) in configs.into_iter().enumerate() {
        let result = exp.run_eval(&Arithmetic::Fixed(config), grid.limit).map_err(|e| e.to_string());
        let cell = CellOutcome { config, result };
        progress(i + 1, total, &cell);
        out.push(cell);
    }
    Ok(out)
}

fn config_columns(arithmetic: &Arithmetic) -> Vec<String> {
    match arithmetic {
        Arithmetic::Real => vec![String::new(), String::new(), "real".into(), String::new(), String::new(), String::new(), String::new()],
        Arithmetic::Fixed(c) => vec![
            c.format.total_bits().to_string(),
            c.format.int_bits().to_string(),
            c.rounding.label().to_string(),
            c.adjust_label().to_string(),
            c.position.label().to_string(),
            c.norm_policy_label(),
            c.seed.to_string(),
        ],
    }
}

fn result_columns(r: &EvalResult) -> [String; 4] {
    [
        r.images.to_string(),
        format!("{:.6}", r.accuracy),
        r.overflow_events.to_string(),
        r.wall_ms.map(|v| v.to_string()).unwrap_or_default(),
    ]
}

/// Write cells as CSV. Failed cells keep their configuration columns and
/// leave the result columns empty.
pub fn write_csv<W: Write>(cells: &[CellOutcome], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for cell in cells {
        let mut row = config_columns(&Arithmetic::Fixed(cell.config));
        match &cell.result {
            Ok(r) => row.extend(result_columns(r)),
            Err(_) => row.extend(std::iter::repeat(String::new()).take(4)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Write single evaluations, real or fixed, in the sweep CSV layout. Real
/// rows leave the format columns empty and put `real` in the rounding column.
pub fn write_eval_csv<W: Write>(results: &[EvalResult], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in results {
        let mut row = config_columns(&r.arithmetic);
        row.extend(result_columns(r));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
