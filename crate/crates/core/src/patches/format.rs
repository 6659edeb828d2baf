//! Plain-text patch files.
//!
//! ```text
//! r n k
//! c_11 c_12 … c_1r
//! …
//! c_k1 c_k2 … c_kr
//! ```
//!
//! The header gives patch size, input dimension and patch count; each
//! following line lists the 0-based column selected by each row of one
//! patch. Blank lines and lines starting with `#` are ignored. Parsed
//! structures are always [`Origin::Custom`](super::Origin::Custom).

use std::fmt::Write as _;

use super::{PatchStructure, SelectionMatrix};
use crate::error::{Error, Result};

pub fn to_text(ps: &PatchStructure) -> String {
    let mut out = format!("{} {} {}\n", ps.r(), ps.n(), ps.k());
    for patch in ps.patches() {
        let line: Vec<String> = patch.columns().iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

fn parse_numbers(line: &str, lineno: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|e| Error::Parse { line: lineno, message: format!("bad integer {tok:?}: {e}") })
        })
        .collect()
}

pub fn from_text(text: &str) -> Result<PatchStructure> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
    let header = parse_numbers(header, hline)?;
    let [r, n, k] = header[..] else {
        return Err(Error::Parse { line: hline, message: "header must be `r n k`".into() });
    };

    let mut patches = Vec::with_capacity(k);
    for (lineno, line) in lines {
        let cols = parse_numbers(line, lineno)?;
        if cols.len() != r {
            return Err(Error::Parse { line: lineno, message: format!("expected {r} columns, got {}", cols.len()) });
        }
        let patch = SelectionMatrix::new(n, cols).map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        patches.push(patch);
    }
    if patches.len() != k {
        return Err(Error::Parse {
            line: hline,
            message: format!("header declares {k} patches, found {}", patches.len()),
        });
    }
    PatchStructure::custom(patches)
}
