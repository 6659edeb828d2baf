//! Exhaustive checks of the stride Gram facts over a range of geometries.
//! Each suite reports how many cases it ran and describes every failure.

use crate::numerics::{extreme_eigenvalues, kronecker, kronecker_sym, sym_eigenvalues};
use crate::patches::{
    build_1d, build_2d, check_inverse, closed_form_gram_1d, closed_form_inverse_1d, gershgorin_bounds, gram,
    lambda_max_bound_1d, PatchStructure,
};

pub const TOL: f64 = 1e-9;
pub const INVERSE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyRange {
    /// Largest 1D input length.
    pub max_n: usize,
    /// Largest 1D filter size.
    pub max_r: usize,
    /// Largest side length for 2D layouts.
    pub max_side: usize,
}

impl Default for VerifyRange {
    fn default() -> Self {
        VerifyRange { max_n: 24, max_r: 10, max_side: 8 }
    }
}

/// Every `(n, r, d)` with `2 ≤ r ≤ max_r`, `1 ≤ d ≤ r`, `2r − 1 ≤ n ≤ max_n`.
pub fn cases_1d(range: VerifyRange) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for r in 2..=range.max_r {
        for d in 1..=r {
            for n in (2 * r - 1)..=range.max_n {
                out.push((n, r, d));
            }
        }
    }
    out
}

fn suite(
    name: &'static str,
    cases: &[(usize, usize, usize)],
    check: impl Fn(usize, usize, usize) -> Option<String>,
) -> SuiteReport {
    let failures =
        cases.iter().filter_map(|&(n, r, d)| check(n, r, d).map(|m| format!("(n={n}, r={r}, d={d}): {m}"))).collect();
    SuiteReport { name, cases: cases.len(), failures }
}

pub fn closed_form_gram(range: VerifyRange) -> SuiteReport {
    suite("closed-form Gram", &cases_1d(range), |n, r, d| {
        let built = gram(&build_1d(n, r, d).ok()?);
        match closed_form_gram_1d(n, r, d) {
            Ok(closed) if closed == built => None,
            Ok(_) => Some("Gram matrix differs from closed form".into()),
            Err(e) => Some(e.to_string()),
        }
    })
}

/// `λ_min ≥ 1/2`, and `≥ 1` once `2d ≥ r`.
pub fn lambda_min_bound(range: VerifyRange) -> SuiteReport {
    suite("lambda_min lower bound", &cases_1d(range), |n, r, d| {
        let (lo, _) = extreme_eigenvalues(&gram(&build_1d(n, r, d).ok()?));
        let floor = if 2 * d >= r { 1.0 } else { 0.5 };
        (lo < floor - TOL).then(|| format!("lambda_min = {lo} below {floor}"))
    })
}

pub fn lambda_max_bound(range: VerifyRange) -> SuiteReport {
    suite("lambda_max upper bound", &cases_1d(range), |n, r, d| {
        let (_, hi) = extreme_eigenvalues(&gram(&build_1d(n, r, d).ok()?));
        match lambda_max_bound_1d(n, r, d) {
            Ok(bound) if hi <= bound + TOL => None,
            Ok(bound) => Some(format!("lambda_max = {hi} above {bound}")),
            Err(e) => Some(e.to_string()),
        }
    })
}

/// The banded inverse for `d < r/2`: `P·P⁻¹ = I` and `λ_max(P⁻¹) ≤ 2`.
pub fn banded_inverse(range: VerifyRange) -> SuiteReport {
    let cases: Vec<_> = cases_1d(range).into_iter().filter(|&(_, r, d)| 2 * d < r).collect();
    suite("closed-form inverse", &cases, |n, r, d| {
        let p = gram(&build_1d(n, r, d).ok()?);
        let check = closed_form_inverse_1d(n, r, d).and_then(|inv| check_inverse(&p, &inv));
        match check {
            Ok(c) if c.max_identity_residual <= INVERSE_TOL && c.inverse_lambda_max <= 2.0 + TOL => None,
            Ok(c) => {
                Some(format!("residual {} / lambda_max(inverse) {}", c.max_identity_residual, c.inverse_lambda_max))
            }
            Err(e) => Some(e.to_string()),
        }
    })
}

/// Every `(n, r, d)` with `1 ≤ d ≤ r ≤ n ≤ max_side`.
fn axis_cases(max_side: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for n in 1..=max_side {
        for r in 1..=n {
            for d in 1..=r {
                out.push((n, r, d));
            }
        }
    }
    out
}

fn in_regime(n: usize, r: usize, d: usize) -> bool {
    n + 1 >= 2 * r && d <= r
}

/// 2D layouts: each patch is the Kronecker product of its 1D factors, the
/// Gram matrix factors the same way, and when both axes are in the 1D
/// closed-form regime `λ_min ≥ 1/4` and `λ_max` is at most the product of the
/// 1D bounds.
pub fn two_d(range: VerifyRange) -> SuiteReport {
    let axes = axis_cases(range.max_side);
    let mut cases = 0;
    let mut failures = Vec::new();
    for &(n1, r1, d1) in &axes {
        let a = build_1d(n1, r1, d1).expect("axis case is valid");
        for &(n2, r2, d2) in &axes {
            cases += 1;
            let b = build_1d(n2, r2, d2).expect("axis case is valid");
            let label = format!("({n1},{n2},{r1},{r2},{d1},{d2})");
            let q = match build_2d(n1, n2, r1, r2, d1, d2) {
                Ok(q) => q,
                Err(e) => {
                    failures.push(format!("{label}: {e}"));
                    continue;
                }
            };
            if let Some(msg) = kronecker_mismatch(&q, &a, &b) {
                failures.push(format!("{label}: {msg}"));
            }
            let gq = gram(&q);
            if gq != kronecker_sym(&gram(&a), &gram(&b)) {
                failures.push(format!("{label}: Gram matrix is not the Kronecker product"));
            }
            if in_regime(n1, r1, d1) && in_regime(n2, r2, d2) {
                let (lo, hi) = extreme_eigenvalues(&gq);
                if lo < 0.25 - TOL {
                    failures.push(format!("{label}: lambda_min = {lo} below 0.25"));
                }
                let bound = lambda_max_bound_1d(n1, r1, d1).unwrap_or(f64::NAN)
                    * lambda_max_bound_1d(n2, r2, d2).unwrap_or(f64::NAN);
                if !(hi <= bound + TOL) {
                    failures.push(format!("{label}: lambda_max = {hi} above {bound}"));
                }
            }
        }
    }
    SuiteReport { name: "2D Kronecker structure", cases, failures }
}

fn kronecker_mismatch(q: &PatchStructure, a: &PatchStructure, b: &PatchStructure) -> Option<String> {
    if q.k() != a.k() * b.k() {
        return Some(format!("{} patches, expected {}", q.k(), a.k() * b.k()));
    }
    for i in 0..a.k() {
        for j in 0..b.k() {
            let expected = kronecker(&a.patches()[i].to_dense(), &b.patches()[j].to_dense());
            if q.patches()[i * b.k() + j].to_dense() != expected {
                return Some(format!("patch ({i},{j}) differs from the Kronecker product"));
            }
        }
    }
    None
}

/// Checks that hold for any patch structure: `P` is PSD and its spectrum
/// lies inside the Gershgorin interval.
pub fn arbitrary_structure(ps: &PatchStructure) -> SuiteReport {
    let p = gram(ps);
    let (glo, ghi) = gershgorin_bounds(&p);
    let values = sym_eigenvalues(&p);
    let mut failures = Vec::new();
    let (lo, hi) = (values[0], values[values.len() - 1]);
    if lo < -TOL {
        failures.push(format!("lambda_min = {lo} is negative"));
    }
    if lo < glo - TOL || hi > ghi + TOL {
        failures.push(format!("spectrum [{lo}, {hi}] escapes Gershgorin interval [{glo}, {ghi}]"));
    }
    SuiteReport { name: "patch file Gram", cases: 1, failures }
}

pub fn all_suites(range: VerifyRange) -> Vec<SuiteReport> {
    vec![closed_form_gram(range), lambda_min_bound(range), lambda_max_bound(range), banded_inverse(range), two_d(range)]
}
