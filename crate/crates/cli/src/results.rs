//! Results CSV (`instance_id,n_runs,n_success,p_hat,ci_lo,ci_hi`) and the
//! two-column `instance_id,p` form accepted for externally measured data.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use svmc_core::analysis::SuccessEstimate;

use crate::meta::Metadata;

pub const RESULTS_HEADER: &str = "instance_id,n_runs,n_success,p_hat,ci_lo,ci_hi";
pub const EXTERNAL_HEADER: &str = "instance_id,p";

pub fn format_results(meta: &Metadata, rows: &[SuccessEstimate]) -> String {
    let mut out = meta.to_comment_block();
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.instance_id, r.n_runs, r.n_success, r.p_hat, r.ci_lo, r.ci_hi
        );
    }
    out
}

/// One success probability per instance, from either CSV form.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityRow {
    pub instance_id: String,
    pub p: f64,
}

pub fn parse_probabilities(text: &str, origin: &Path) -> Result<Vec<ProbabilityRow>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let Some((_, header)) = lines.next() else {
        bail!("{}: empty file", origin.display());
    };
    let header = header.trim();
    let (columns, p_col) = match header {
        RESULTS_HEADER => (6, 3),
        EXTERNAL_HEADER => (2, 1),
        _ => bail!(
            "{}: unrecognized header '{header}' (expected '{RESULTS_HEADER}' or '{EXTERNAL_HEADER}')",
            origin.display()
        ),
    };
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let cols: Vec<&str> = line.trim().split(',').collect();
        if cols.len() != columns {
            bail!(
                "{}:{}: expected {columns} columns, got {}",
                origin.display(),
                idx + 1,
                cols.len()
            );
        }
        let p: f64 = cols[p_col]
            .parse()
            .with_context(|| format!("{}:{}: bad probability", origin.display(), idx + 1))?;
        if !(0.0..=1.0).contains(&p) {
            bail!(
                "{}:{}: probability {p} outside [0, 1]",
                origin.display(),
                idx + 1
            );
        }
        if columns == 6 {
            for c in &cols[1..3] {
                c.parse::<u64>()
                    .with_context(|| format!("{}:{}: bad count", origin.display(), idx + 1))?;
            }
        }
        rows.push(ProbabilityRow {
            instance_id: cols[0].to_string(),
            p,
        });
    }
    Ok(rows)
}

pub fn read_probabilities(path: &Path) -> Result<Vec<ProbabilityRow>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_probabilities(&text, path)
}
