use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use super::CellOutcome;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub n_bits: u32,
    pub int_bits: u32,
    pub accuracy: Option<f64>,
}

/// Accuracy against width for one (adjust, rounding, position) triple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub adjust: String,
    pub rounding: String,
    pub position: String,
    pub points: Vec<SeriesPoint>,
}

/// Group cells into series ordered by adjust, rounding and position, with
/// points ordered by width.
pub fn plot_data(cells: &[CellOutcome]) -> Vec<Series> {
    let mut groups: BTreeMap<(&str, &str, &str), Vec<SeriesPoint>> = BTreeMap::new();
    for cell in cells {
        let c = &cell.config;
        groups.entry((c.adjust_label(), c.rounding.label(), c.position.label())).or_default().push(SeriesPoint {
            n_bits: c.format.total_bits(),
            int_bits: c.format.int_bits(),
            accuracy: cell.result.as_ref().ok().map(|r| r.accuracy),
        });
    }
    groups
        .into_iter()
        .map(|((adjust, rounding, position), mut points)| {
            points.sort_by_key(|p| (p.n_bits, p.int_bits));
            Series { adjust: adjust.into(), rounding: rounding.into(), position: position.into(), points }
        })
        .collect()
}

/// A plain-text table: one row per series, one column per width, accuracy
/// in percent. Failed cells show `err`.
pub fn report(cells: &[CellOutcome]) -> String {
    let series = plot_data(cells);
    let mut widths: Vec<(u32, u32)> = series.iter().flat_map(|s| s.points.iter().map(|p| (p.n_bits, p.int_bits))).collect();
    widths.sort_unstable();
    widths.dedup();
    let mut out = String::new();
    let _ = write!(out, "{:<6} {:<6} {:<6}", "adjust", "round", "pos");
    for (n, i) in &widths {
        let _ = write!(out, " {:>8}", format!("{n}({i})"));
    }
    out.push('\n');
    for s in &series {
        let _ = write!(out, "{:<6} {:<6} {:<6}", s.adjust, s.rounding, s.position);
        for w in &widths {
            let cell = match s.points.iter().find(|p| (p.n_bits, p.int_bits) == *w) {
                Some(SeriesPoint { accuracy: Some(a), .. }) => format!("{:.2}", a * 100.0),
                Some(_) => "err".to_string(),
                None => "-".to_string(),
            };
            let _ = write!(out, " {cell:>8}");
        }
        out.push('\n');
    }
    out
}
