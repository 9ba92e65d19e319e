//! Published area, power and frequency figures for multipliers with each
//! rounding method, and for a DianNao-style accelerator at each adjustment
//! position. Pure lookup: there is no model for configurations not listed.
//!
//! Single 8-bit multiplier figures are in µm², µW and MHz (ASIC) or LUT and
//! flip-flop counts (FPGA). Accelerator figures are in thousands of µm², mW
//! and MHz.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::MacPosition;
use crate::fxcore::RoundingMethod;

/// The CSV resource shipped with the crate, identical to [`records`].
pub const HWCOST_CSV: &str = include_str!("../data/hwcost.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scope {
    #[serde(rename = "single_mult_8bit")]
    SingleMult8bit,
    #[serde(rename = "diannao_16bit")]
    Diannao16bit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Asic,
    Fpga,
}

impl Scope {
    pub fn label(self) -> &'static str {
        match self {
            Scope::SingleMult8bit => "single_mult_8bit",
            Scope::Diannao16bit => "diannao_16bit",
        }
    }
}

impl Platform {
    pub fn label(self) -> &'static str {
        match self {
            Platform::Asic => "asic",
            Platform::Fpga => "fpga",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scope {
    type Err = HwCostError;
    fn from_str(s: &str) -> Result<Self, HwCostError> {
        match s.to_ascii_lowercase().as_str() {
            "single_mult_8bit" | "single" => Ok(Scope::SingleMult8bit),
            "diannao_16bit" | "diannao" => Ok(Scope::Diannao16bit),
            _ => Err(HwCostError::Parse(format!("unknown scope `{s}`"))),
        }
    }
}

impl FromStr for Platform {
    type Err = HwCostError;
    fn from_str(s: &str) -> Result<Self, HwCostError> {
        match s.to_ascii_lowercase().as_str() {
            "asic" => Ok(Platform::Asic),
            "fpga" => Ok(Platform::Fpga),
            _ => Err(HwCostError::Parse(format!("unknown platform `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub scope: Scope,
    pub platform: Platform,
    pub rounding: RoundingMethod,
    /// Adjustment position; accelerator rows only.
    pub position: Option<MacPosition>,
    pub area: Option<f64>,
    pub power: Option<f64>,
    pub freq_mhz: Option<f64>,
    pub lut: Option<u32>,
    pub ff: Option<u32>,
}

impl CostRecord {
    pub fn key(&self) -> String {
        let mut k = format!("{}/{}/{}", self.scope, self.platform, self.rounding);
        if let Some(p) = self.position {
            k.push('/');
            k.push_str(p.label());
        }
        k
    }

    /// Area figure used for ratios: silicon area on ASIC, LUT count on FPGA.
    pub fn area_metric(&self) -> Option<f64> {
        match self.platform {
            Platform::Asic => self.area,
            Platform::Fpga => self.lut.map(f64::from),
        }
    }

    pub fn area_unit(&self) -> &'static str {
        match (self.scope, self.platform) {
            (_, Platform::Fpga) => "LUT",
            (Scope::SingleMult8bit, Platform::Asic) => "um^2",
            (Scope::Diannao16bit, Platform::Asic) => "k um^2",
        }
    }

    pub fn power_unit(&self) -> &'static str {
        match self.scope {
            Scope::SingleMult8bit => "uW",
            Scope::Diannao16bit => "mW",
        }
    }
}

#[derive(Debug, Error)]
pub enum HwCostError {
    #[error("no cost record for {key}; valid keys: {}", valid.join(", "))]
    NotFound { key: String, valid: Vec<String> },
    #[error("{0}")]
    Parse(String),
}

const fn asic(rounding: RoundingMethod, area: f64, power: f64, freq: f64) -> CostRecord {
    CostRecord {
        scope: Scope::SingleMult8bit,
        platform: Platform::Asic,
        rounding,
        position: None,
        area: Some(area),
        power: Some(power),
        freq_mhz: Some(freq),
        lut: None,
        ff: None,
    }
}

const fn fpga(rounding: RoundingMethod, lut: u32, ff: u32) -> CostRecord {
    CostRecord {
        scope: Scope::SingleMult8bit,
        platform: Platform::Fpga,
        rounding,
        position: None,
        area: None,
        power: None,
        freq_mhz: None,
        lut: Some(lut),
        ff: Some(ff),
    }
}

const fn diannao(rounding: RoundingMethod, position: MacPosition, area: f64, power: f64) -> CostRecord {
    CostRecord {
        scope: Scope::Diannao16bit,
        platform: Platform::Asic,
        rounding,
        position: Some(position),
        area: Some(area),
        power: Some(power),
        freq_mhz: Some(250.0),
        lut: None,
        ff: None,
    }
}

use MacPosition::{Rmac, Rmult};
use RoundingMethod::{RoundToNearest as Rn, Rom, Stochastic as Sr, Truncate as Trunc};

static RECORDS: [CostRecord; 16] = [
    asic(Trunc, 437.03, 9.02, 869.56),
    asic(Sr, 601.42, 13.05, 819.67),
    asic(Rn, 576.15, 13.08, 833.33),
    asic(Rom, 440.49, 9.53, 869.56),
    fpga(Trunc, 70, 8),
    fpga(Sr, 82, 16),
    fpga(Rn, 78, 8),
    fpga(Rom, 71, 8),
    diannao(Trunc, Rmult, 482.88, 106.41),
    diannao(Sr, Rmult, 533.86, 119.78),
    diannao(Rn, Rmult, 498.70, 111.17),
    diannao(Rom, Rmult, 483.333, 106.49),
    diannao(Trunc, Rmac, 530.83, 123.15),
    diannao(Sr, Rmac, 533.891, 123.45),
    diannao(Rn, Rmac, 532.71, 123.00),
    diannao(Rom, Rmac, 530.81, 122.36),
];

/// Every published row.
pub fn records() -> &'static [CostRecord] {
    &RECORDS
}

/// The row for a key. `position` is required for the accelerator scope and
/// must be `None` for the single multiplier.
pub fn lookup(
    scope: Scope,
    platform: Platform,
    rounding: RoundingMethod,
    position: Option<MacPosition>,
) -> Result<&'static CostRecord, HwCostError> {
    RECORDS
        .iter()
        .find(|r| r.scope == scope && r.platform == platform && r.rounding == rounding && r.position == position)
        .ok_or_else(|| {
            let mut key = format!("{scope}/{platform}/{rounding}");
            if let Some(p) = position {
                key.push('/');
                key.push_str(p.label());
            }
            HwCostError::NotFound { key, valid: RECORDS.iter().map(CostRecord::key).collect() }
        })
}

/// Ratios of `a` over `b`. Power is absent on FPGA rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub area_ratio: f64,
    pub power_ratio: Option<f64>,
}

pub fn compare(
    a: RoundingMethod,
    b: RoundingMethod,
    scope: Scope,
    platform: Platform,
    position: Option<MacPosition>,
) -> Result<Comparison, HwCostError> {
    let ra = lookup(scope, platform, a, position)?;
    let rb = lookup(scope, platform, b, position)?;
    let area = |r: &CostRecord| r.area_metric().expect("every row has an area figure");
    Ok(Comparison {
        area_ratio: area(ra) / area(rb),
        power_ratio: ra.power.zip(rb.power).map(|(x, y)| x / y),
    })
}

/// Parse records from CSV text in the layout of [`HWCOST_CSV`].
pub fn parse_csv(text: &str) -> Result<Vec<CostRecord>, HwCostError> {
    let err = |e: &dyn fmt::Display| HwCostError::Parse(e.to_string());
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| err(&e))?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let opt_f = |i: usize| -> Result<Option<f64>, HwCostError> {
            let s = field(i);
            if s.is_empty() { Ok(None) } else { s.parse().map(Some).map_err(|e| err(&e)) }
        };
        let opt_u = |i: usize| -> Result<Option<u32>, HwCostError> {
            let s = field(i);
            if s.is_empty() { Ok(None) } else { s.parse().map(Some).map_err(|e| err(&e)) }
        };
        let position = match field(3) {
            "" => None,
            p => Some(p.parse::<MacPosition>().map_err(|e| err(&e))?),
        };
        out.push(CostRecord {
            scope: field(0).parse()?,
            platform: field(1).parse()?,
            rounding: field(2).parse().map_err(|e| err(&e))?,
            position,
            area: opt_f(4)?,
            power: opt_f(5)?,
            freq_mhz: opt_f(6)?,
            lut: opt_u(7)?,
            ff: opt_u(8)?,
        });
    }
    Ok(out)
}
