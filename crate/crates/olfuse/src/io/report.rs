//! Tabular report rows with a fixed, golden-tested column set.

use crate::cost::Design;

/// Column names, in emission order. `h` and `st` hold the per-conv-level
/// tile side and tile stride joined with `;`. `end_savings` is empty on
/// rows produced without simulation.
pub const CSV_HEADER: &str =
    "network,mode,design,q,alpha,h,st,cycles,duration_us,ops,gops,oi_ops_per_byte,end_savings";

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub network: String,
    /// Which traffic model priced the row: `fused` or `layerwise`.
    pub mode: String,
    pub design: Design,
    pub q: usize,
    pub alpha: usize,
    pub h: Vec<usize>,
    pub st: Vec<usize>,
    pub cycles: u64,
    pub duration_us: f64,
    pub ops: u64,
    pub gops: f64,
    pub oi_ops_per_byte: f64,
    pub end_savings: Option<f64>,
}

fn join(values: &[usize]) -> String {
    values.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

impl ReportRow {
    /// One CSV line, no trailing newline. Floats print in shortest
    /// round-trip decimal, so no precision is lost to formatting.
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.network,
            self.mode,
            self.design,
            self.q,
            self.alpha,
            join(&self.h),
            join(&self.st),
            self.cycles,
            self.duration_us,
            self.ops,
            self.gops,
            self.oi_ops_per_byte,
            self.end_savings.map(|v| v.to_string()).unwrap_or_default(),
        )
    }
}

/// Header plus one line per row, each newline-terminated.
pub fn write_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}
