//! Sweep results as CSV: `algorithm,eta,trials,failures,failure_prob`, `eta`
//! with 4 decimals, `failure_prob` with 6, LF line endings.

use std::io::Write;

use super::{SweepResult, SweepRow};
use crate::error::{Error, Result};

pub const HEADER: &str = "algorithm,eta,trials,failures,failure_prob";

pub fn emit_csv(res: &SweepResult, out: &mut impl Write) -> Result<()> {
    writeln!(out, "{HEADER}")?;
    for row in &res.rows {
        writeln!(out, "{},{:.4},{},{},{:.6}", row.algorithm, row.eta, row.trials, row.failures, row.failure_prob)?;
    }
    Ok(())
}

pub fn to_csv_string(res: &SweepResult) -> String {
    let mut buf = Vec::new();
    emit_csv(res, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// Inverse of [`emit_csv`]. `failure_prob` is recomputed from the counts and
/// checked against the printed value.
pub fn parse_csv(text: &str) -> Result<SweepResult> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => return Err(Error::Parse { line: 1, message: format!("expected header {HEADER:?}") }),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let bad = |message: String| Error::Parse { line: lineno, message };
        let fields: Vec<&str> = line.split(',').collect();
        let [alg, eta, trials, failures, prob] = fields[..] else {
            return Err(bad(format!("expected 5 fields, got {}", fields.len())));
        };
        let algorithm = alg.parse().map_err(|e: Error| bad(e.to_string()))?;
        let eta: f64 = eta.parse().map_err(|e| bad(format!("eta: {e}")))?;
        let trials: usize = trials.parse().map_err(|e| bad(format!("trials: {e}")))?;
        let failures: usize = failures.parse().map_err(|e| bad(format!("failures: {e}")))?;
        let printed: f64 = prob.parse().map_err(|e| bad(format!("failure_prob: {e}")))?;
        if trials == 0 || failures > trials {
            return Err(bad(format!("{failures} failures out of {trials} trials")));
        }
        let failure_prob = failures as f64 / trials as f64;
        if (failure_prob - printed).abs() > 1e-6 {
            return Err(bad(format!("failure_prob {printed} disagrees with {failures}/{trials}")));
        }
        rows.push(SweepRow { algorithm, eta, trials, failures, failure_prob });
    }
    Ok(SweepResult { rows })
}
