use std::path::Path;

use super::MetricsRow;
use crate::error::Result;
use crate::io::write_atomic;

pub const TABLE_COLUMNS: [&str; 7] = [
    "Algorithm",
    "Avg path gain",
    "Path length (m)",
    "Runtime (s)",
    "Success rate (%)",
    "Expanded states",
    "Speedup vs DP-WA*",
];

fn cells(row: &MetricsRow) -> [Option<String>; 7] {
    let f = |v: Option<f64>| v.map(|x| format!("{x:.2}"));
    [
        Some(row.algorithm.label().to_owned()),
        f(row.avg_path_gain),
        f(row.path_length_m),
        f(Some(row.runtime_s)),
        f(Some(row.success_rate_percent)),
        f(row.expanded_states),
        f(row.speedup_vs_reference),
    ]
}

/// Markdown table; missing values print as `-`.
pub fn format_markdown(rows: &[MetricsRow]) -> String {
    let mut out = format!("| {} |\n", TABLE_COLUMNS.join(" | "));
    out.push_str(&format!("|{}\n", "---|".repeat(TABLE_COLUMNS.len())));
    for row in rows {
        let line: Vec<String> = cells(row).into_iter().map(|c| c.unwrap_or_else(|| "-".into())).collect();
        out.push_str(&format!("| {} |\n", line.join(" | ")));
    }
    out
}

/// CSV with a header line; missing values are empty fields.
pub fn format_csv(rows: &[MetricsRow]) -> String {
    let mut out = TABLE_COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = cells(row).into_iter().map(Option::unwrap_or_default).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Writes `<stem>.md` and `<stem>.csv` into `dir`.
pub fn emit_table(rows: &[MetricsRow], dir: &Path, stem: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| crate::error::Error::io(dir, e))?;
    write_atomic(&dir.join(format!("{stem}.md")), format_markdown(rows).as_bytes())?;
    write_atomic(&dir.join(format!("{stem}.csv")), format_csv(rows).as_bytes())
}
