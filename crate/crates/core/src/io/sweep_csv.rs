//! Threshold-sweep CSVs: one file per case type plus one for the balanced
//! accuracy, with header `tau,<method1>,<method2>,...` and method columns in
//! alphabetical order for diff-stable output.

use crate::error::{Error, Result};
use crate::metrics::SweepPoint;

/// Which sweep column a file carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepColumn {
    AmbiguousPositive,
    PositiveOnly,
    AmbiguousOnly,
    Bla,
}

impl SweepColumn {
    pub const ALL: [SweepColumn; 4] = [
        SweepColumn::AmbiguousPositive,
        SweepColumn::PositiveOnly,
        SweepColumn::AmbiguousOnly,
        SweepColumn::Bla,
    ];

    /// File stem the column is written under.
    pub fn stem(&self) -> &'static str {
        match self {
            SweepColumn::AmbiguousPositive => "sweep_ap",
            SweepColumn::PositiveOnly => "sweep_po",
            SweepColumn::AmbiguousOnly => "sweep_ao",
            SweepColumn::Bla => "sweep_bla",
        }
    }

    fn value(&self, p: &SweepPoint) -> f64 {
        match self {
            SweepColumn::AmbiguousPositive => p.ap.smoothed,
            SweepColumn::PositiveOnly => p.po.smoothed,
            SweepColumn::AmbiguousOnly => p.ao.smoothed,
            SweepColumn::Bla => p.bla,
        }
    }
}

/// Renders one sweep CSV. `sweeps` pairs method names with their sweep
/// points; all sweeps must share the same threshold grid. Columns come out
/// in alphabetical method order regardless of input order.
pub fn write_sweep_csv(sweeps: &[(String, Vec<SweepPoint>)], column: SweepColumn) -> Result<String> {
    if sweeps.is_empty() {
        return Err(Error::InvalidParam("no sweeps to render".into()));
    }
    let mut ordered: Vec<&(String, Vec<SweepPoint>)> = sweeps.iter().collect();
    ordered.sort_by(|a, b| a.0.cmp(&b.0));
    let grid_len = ordered[0].1.len();
    for (name, points) in &ordered {
        if points.len() != grid_len {
            return Err(Error::InvalidParam(format!(
                "sweep for {name} has {} points, expected {grid_len}",
                points.len()
            )));
        }
    }
    let mut out = String::from("tau");
    for (name, _) in &ordered {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..grid_len {
        let tau = ordered[0].1[i].tau;
        for (name, points) in &ordered {
            if points[i].tau != tau {
                return Err(Error::InvalidParam(format!(
                    "sweep for {name} disagrees on the grid at index {i}"
                )));
            }
        }
        out.push_str(&format!("{tau}"));
        for (_, points) in &ordered {
            out.push_str(&format!(",{}", column.value(&points[i])));
        }
        out.push('\n');
    }
    Ok(out)
}
