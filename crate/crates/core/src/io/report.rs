use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::CategoryTable;
use crate::error::Result;
use crate::metrics::MetricsReport;

/// `category.metric=value` lines, one per metric, categories in id order.
pub fn format_report(report: &MetricsReport, table: &CategoryTable) -> Result<String> {
    let mut out = String::new();
    for c in &report.categories {
        let name = table.name(c.category)?;
        let reals = [
            ("hota", c.hota),
            ("mota", c.mota),
            ("motp", c.motp),
            ("amota", c.amota),
            ("samota", c.samota),
            ("amotp", c.amotp),
            ("mt", c.mt),
            ("ml", c.ml),
        ];
        for (k, v) in reals {
            let _ = writeln!(out, "{name}.{k}={v}");
        }
        let counts = [
            ("tp", c.tp),
            ("fp", c.fp),
            ("fn", c.fn_count),
            ("ids", c.ids),
            ("num_gt", c.num_gt),
        ];
        for (k, v) in counts {
            let _ = writeln!(out, "{name}.{k}={v}");
        }
    }
    Ok(out)
}

/// Column-aligned summary, percentages with two decimals.
pub fn format_table(report: &MetricsReport, table: &CategoryTable) -> Result<String> {
    let header = ["category", "HOTA", "MOTA", "MOTP", "AMOTA", "sAMOTA", "MT", "ML", "FP", "FN", "IDS"];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    let pct = |v: f64| format!("{:.2}", v * 100.0);
    for c in &report.categories {
        rows.push(vec![
            table.name(c.category)?.to_string(),
            pct(c.hota),
            pct(c.mota),
            pct(c.motp),
            pct(c.amota),
            pct(c.samota),
            pct(c.mt),
            pct(c.ml),
            c.fp.to_string(),
            c.fn_count.to_string(),
            c.ids.to_string(),
        ]);
    }
    Ok(align_rows(&rows))
}

pub fn align_rows(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|j| rows.iter().filter_map(|r| r.get(j)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                if j == 0 {
                    format!("{cell:<w$}", w = widths[j])
                } else {
                    format!("{cell:>w$}", w = widths[j])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn write_report(path: &Path, report: &MetricsReport, table: &CategoryTable) -> Result<()> {
    fs::write(path, format_report(report, table)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::CategoryId;
    use crate::metrics::CategoryMetrics;

    fn report() -> MetricsReport {
        MetricsReport {
            categories: vec![CategoryMetrics {
                category: CategoryId(1),
                hota: 0.5,
                mota: 0.25,
                motp: 0.75,
                samota: 0.0,
                amota: 0.0,
                amotp: 0.0,
                mt: 1.0,
                ml: 0.0,
                tp: 3,
                fp: 1,
                fn_count: 2,
                ids: 0,
                num_gt: 5,
            }],
            ..Default::default()
        }
    }

    #[test]
    fn key_value_lines() {
        let text = format_report(&report(), &CategoryTable::kitti()).unwrap();
        assert!(text.contains("Pedestrian.hota=0.5\n"));
        assert!(text.contains("Pedestrian.fn=2\n"));
        assert_eq!(text.lines().count(), 13);
    }

    #[test]
    fn table_is_aligned() {
        let text = format_table(&report(), &CategoryTable::kitti()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].len(), lines[1].len());
        assert!(lines[1].contains("50.00"));
    }
}
