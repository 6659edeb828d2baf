//! Spectral facts about stride Gram matrices: the closed-form 1D Gram matrix,
//! the Gershgorin-based `λ_max` bound, the banded closed-form inverse, and the
//! [`analyze`] report that gathers them.

use super::{gram, sigma_gram, Origin, PatchStructure};
use crate::error::{Error, Result};
use crate::numerics::{extreme_eigenvalues, Matrix, SymMatrix};

fn stride_k(n: usize, r: usize, d: usize) -> usize {
    (n - r) / d + 1
}

fn check_regime(n: usize, r: usize, d: usize) -> Result<()> {
    if r < 1 || d < 1 {
        return Err(Error::OutOfRegime(format!("need r >= 1 and d >= 1, got r = {r}, d = {d}")));
    }
    if n < 2 * r - 1 {
        return Err(Error::OutOfRegime(format!("need n >= 2r - 1, got n = {n}, r = {r}")));
    }
    if r < d {
        return Err(Error::OutOfRegime(format!("need r >= d, got r = {r}, d = {d}")));
    }
    Ok(())
}

/// Closed-form stride Gram matrix: entry `(i, j)` is `k − a` when
/// `|i − j| = a·d`, and 0 otherwise. Valid for `n ≥ 2r − 1`, `r ≥ d`.
pub fn closed_form_gram_1d(n: usize, r: usize, d: usize) -> Result<SymMatrix> {
    check_regime(n, r, d)?;
    let k = stride_k(n, r, d) as i64;
    Ok(SymMatrix::from_fn(r, |i, j| {
        let gap = j - i;
        if gap % d == 0 {
            (k - (gap / d) as i64) as f64
        } else {
            0.0
        }
    }))
}

/// Upper bound `k(p+1) − (p−p₂)(p₂+1)` on `λ_max` of the stride Gram matrix,
/// with `p = ⌊(r−1)/d⌋` and `p₂ = ⌊p/2⌋`. This is the largest Gershgorin
/// row sum the band structure allows.
pub fn lambda_max_bound_1d(n: usize, r: usize, d: usize) -> Result<f64> {
    check_regime(n, r, d)?;
    let k = stride_k(n, r, d) as i64;
    let p = ((r - 1) / d) as i64;
    let p2 = p / 2;
    Ok((k * (p + 1) - (p - p2) * (p2 + 1)) as f64)
}

/// Gershgorin interval `[min(mᵢᵢ − Rᵢ), max(mᵢᵢ + Rᵢ)]` containing every
/// eigenvalue of a symmetric matrix, where `Rᵢ` is the off-diagonal absolute
/// row sum.
pub fn gershgorin_bounds(m: &SymMatrix) -> (f64, f64) {
    let n = m.dim();
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for i in 0..n {
        let radius: f64 = (0..n).filter(|&j| j != i).map(|j| m.get(i, j).abs()).sum();
        lower = lower.min(m.get(i, i) - radius);
        upper = upper.max(m.get(i, i) + radius);
    }
    (lower, upper)
}

/// Band coefficients of the closed-form inverse.
///
/// Write `r = p·d + q` with `1 ≤ q ≤ d`. Indices split into `d` residue
/// classes mod `d`; the first `q` classes have `p + 1` members ("long"), the
/// rest have `p` ("short"). Each class is an independent Toeplitz block
/// `k − |a − b|`, whose inverse is tridiagonal with `−1/2` off the diagonal,
/// `1` on the interior diagonal, `alpha` at the two ends and `beta` in the
/// two corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseCoefficients {
    /// End-of-band diagonal entry of long classes.
    pub alpha0: f64,
    /// End-of-band diagonal entry of short classes.
    pub alpha1: f64,
    /// Corner entry of long classes.
    pub beta: f64,
    /// Corner entry of short classes (the single off-diagonal entry when a
    /// short class has two members).
    pub phi: f64,
}

impl InverseCoefficients {
    /// Coefficients for `n ≥ 2r − 1`, `d < r/2`.
    pub fn new(n: usize, r: usize, d: usize) -> Result<Self> {
        check_regime(n, r, d)?;
        if 2 * d >= r {
            return Err(Error::OutOfRegime(format!("closed-form inverse needs d < r/2, got r = {r}, d = {d}")));
        }
        let k = stride_k(n, r, d) as f64;
        let p = ((r - 1) / d) as f64;
        if 3 * d < r {
            // long classes have p + 1 >= 4 members, short ones p >= 3
            let beta = 0.5 / (2.0 * k - p);
            let phi = 0.5 / (2.0 * k - p + 1.0);
            Ok(InverseCoefficients { alpha0: beta + 0.5, alpha1: phi + 0.5, beta, phi })
        } else {
            // p = 2: long classes have 3 members, short ones 2
            let beta = 0.5 / (2.0 * k - 2.0);
            Ok(InverseCoefficients {
                alpha0: beta + 0.5,
                alpha1: k / (2.0 * k - 1.0),
                beta,
                phi: -(k - 1.0) / (2.0 * k - 1.0),
            })
        }
    }
}

/// Closed-form inverse of the stride Gram matrix for `n ≥ 2r − 1`, `d < r/2`.
pub fn closed_form_inverse_1d(n: usize, r: usize, d: usize) -> Result<Matrix> {
    let coef = InverseCoefficients::new(n, r, d)?;
    let q = r - ((r - 1) / d) * d;
    let mut inv = Matrix::zeros(r, r);
    for class in 0..d {
        let members: Vec<usize> = (class..r).step_by(d).collect();
        let m = members.len();
        let (alpha, corner) = if class < q { (coef.alpha0, coef.beta) } else { (coef.alpha1, coef.phi) };
        let (first, last) = (members[0], members[m - 1]);
        if m == 2 {
            inv.set(first, first, alpha);
            inv.set(last, last, alpha);
            inv.set(first, last, corner);
            inv.set(last, first, corner);
            continue;
        }
        for (idx, &i) in members.iter().enumerate() {
            let diag = if idx == 0 || idx == m - 1 { alpha } else { 1.0 };
            inv.set(i, i, diag);
            if idx + 1 < m {
                let j = members[idx + 1];
                inv.set(i, j, -0.5);
                inv.set(j, i, -0.5);
            }
        }
        inv.set(first, last, corner);
        inv.set(last, first, corner);
    }
    Ok(inv)
}

/// Result of checking the closed-form inverse against the Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseCheck {
    /// `max |P·P⁻¹ − I|`.
    pub max_identity_residual: f64,
    pub inverse_lambda_max: f64,
}

/// Spectral summary of a patch structure.
#[derive(Debug, Clone)]
pub struct GramReport {
    pub p_matrix: SymMatrix,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub gershgorin_lower: f64,
    pub gershgorin_upper: f64,
    /// `λ_min(P_Σ)` when a covariance was supplied.
    pub p_sigma_lambda_min: Option<f64>,
    /// Only for 1D stride structures inside the closed-form regime.
    pub lambda_max_bound: Option<f64>,
    /// Only for 1D stride structures with `d < r/2`.
    pub inverse_check: Option<InverseCheck>,
}

/// Builds a [`GramReport`]. Closed-form checks run only for 1D stride
/// structures in their regime; everything else just gets the spectrum.
pub fn analyze(ps: &PatchStructure, sigma: Option<&SymMatrix>) -> Result<GramReport> {
    let p = gram(ps);
    let p_sigma_lambda_min = match sigma {
        Some(s) => Some(extreme_eigenvalues(&sigma_gram(ps, s)?).0),
        None => None,
    };
    let (lambda_min, lambda_max) = extreme_eigenvalues(&p);
    let (gershgorin_lower, gershgorin_upper) = gershgorin_bounds(&p);

    let (mut lambda_max_bound, mut inverse_check) = (None, None);
    if let Origin::Stride1D { n, r, d } = ps.origin() {
        lambda_max_bound = lambda_max_bound_1d(n, r, d).ok();
        if let Ok(inv) = closed_form_inverse_1d(n, r, d) {
            inverse_check = Some(check_inverse(&p, &inv)?);
        }
    }

    Ok(GramReport {
        p_matrix: p,
        lambda_min,
        lambda_max,
        gershgorin_lower,
        gershgorin_upper,
        p_sigma_lambda_min,
        lambda_max_bound,
        inverse_check,
    })
}

/// Multiplies `p` by a candidate inverse and measures the result.
pub fn check_inverse(p: &SymMatrix, inv: &Matrix) -> Result<InverseCheck> {
    let product = p.as_matrix().matmul(inv)?;
    let max_identity_residual = product.max_abs_diff(&Matrix::identity(p.dim()));
    let inv_sym = SymMatrix::symmetrize(inv)?;
    Ok(InverseCheck { max_identity_residual, inverse_lambda_max: extreme_eigenvalues(&inv_sym).1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patches::{build_1d, build_2d, PatchStructure, SelectionMatrix};

    #[test]
    fn closed_form_matches_examples() {
        assert_eq!(closed_form_gram_1d(8, 4, 1).unwrap(), gram(&build_1d(8, 4, 1).unwrap()));
        let expected = SymMatrix::from_rows(&[
            [3.0, 0.0, 2.0, 0.0],
            [0.0, 3.0, 0.0, 2.0],
            [2.0, 0.0, 3.0, 0.0],
            [0.0, 2.0, 0.0, 3.0],
        ])
        .unwrap();
        assert_eq!(closed_form_gram_1d(9, 4, 2).unwrap(), expected);
        assert_eq!(gram(&build_1d(9, 4, 2).unwrap()), expected);
    }

    #[test]
    fn closed_form_regime_boundary() {
        assert!(closed_form_gram_1d(7, 4, 4).is_ok());
        assert!(matches!(closed_form_gram_1d(6, 4, 4), Err(Error::OutOfRegime(_))));
        assert!(matches!(closed_form_gram_1d(12, 4, 5), Err(Error::OutOfRegime(_))));
    }

    #[test]
    fn lambda_max_bound_examples() {
        assert_eq!(lambda_max_bound_1d(8, 4, 1).unwrap(), 16.0);
        assert_eq!(lambda_max_bound_1d(9, 4, 2).unwrap(), 5.0);
        // r = d: p = 0, bound = k, which the diagonal Gram matrix k·I attains
        let bound = lambda_max_bound_1d(12, 4, 4).unwrap();
        assert_eq!(bound, 3.0);
        let (_, hi) = extreme_eigenvalues(&gram(&build_1d(12, 4, 4).unwrap()));
        assert!(hi <= bound + 1e-12);
    }

    #[test]
    fn gershgorin_examples() {
        assert_eq!(gershgorin_bounds(&SymMatrix::identity(3)), (1.0, 1.0));
        let m = SymMatrix::from_rows(&[[5.0, 4.0], [4.0, 5.0]]).unwrap();
        assert_eq!(gershgorin_bounds(&m), (1.0, 9.0));
        // row through the middle of the band: 4 + 5 + 4 + 3
        let (_, upper) = gershgorin_bounds(&gram(&build_1d(8, 4, 1).unwrap()));
        assert_eq!(upper, 16.0);
    }

    #[test]
    fn inverse_d1_corner() {
        let inv = closed_form_inverse_1d(8, 4, 1).unwrap();
        let beta = 0.5 / 7.0;
        assert!((inv.get(0, 3) - beta).abs() < 1e-15);
        assert!((inv.get(0, 0) - (0.5 + beta)).abs() < 1e-15);
        assert!((inv.get(0, 0) - 0.571_428_571_428_571_4).abs() < 1e-12);
        assert_eq!(inv.get(1, 1), 1.0);
        assert_eq!(inv.get(0, 1), -0.5);
        let check = check_inverse(&gram(&build_1d(8, 4, 1).unwrap()), &inv).unwrap();
        assert!(check.max_identity_residual <= 1e-12);
    }

    #[test]
    fn inverse_mixed_class_sizes() {
        // r = 7, d = 2: one class of 4 members, one of 3.
        let inv = closed_form_inverse_1d(13, 7, 2).unwrap();
        assert!((inv.get(0, 6) - 0.1).abs() < 1e-15);
        assert!((inv.get(1, 5) - 1.0 / 12.0).abs() < 1e-15);
        assert!((inv.get(1, 1) - (0.5 + 1.0 / 12.0)).abs() < 1e-15);
        let check = check_inverse(&gram(&build_1d(13, 7, 2).unwrap()), &inv).unwrap();
        assert!(check.max_identity_residual <= 1e-8);
        assert!(check.inverse_lambda_max <= 2.0 + 1e-9);
    }

    #[test]
    fn inverse_three_member_regime() {
        // r/3 <= d < r/2 with both class sizes present: r = 8, d = 3.
        let p = gram(&build_1d(17, 8, 3).unwrap());
        let inv = closed_form_inverse_1d(17, 8, 3).unwrap();
        let check = check_inverse(&p, &inv).unwrap();
        assert!(check.max_identity_residual <= 1e-12, "{check:?}");
    }

    #[test]
    fn inverse_out_of_regime() {
        assert!(matches!(closed_form_inverse_1d(8, 4, 2), Err(Error::OutOfRegime(_))));
        assert!(matches!(closed_form_inverse_1d(8, 4, 4), Err(Error::OutOfRegime(_))));
        assert!(matches!(closed_form_inverse_1d(6, 4, 1), Err(Error::OutOfRegime(_))));
    }

    #[test]
    fn analyze_reports() {
        let rep = analyze(&build_1d(8, 4, 1).unwrap(), Some(&SymMatrix::identity(8))).unwrap();
        assert!(rep.lambda_min >= 0.5 && rep.lambda_max <= 16.0);
        assert_eq!(rep.lambda_max_bound, Some(16.0));
        assert!(rep.inverse_check.unwrap().max_identity_residual < 1e-10);
        assert!((rep.p_sigma_lambda_min.unwrap() - rep.lambda_min).abs() < 1e-12);

        let rep = analyze(&build_2d(5, 5, 3, 3, 1, 1).unwrap(), None).unwrap();
        assert!(rep.lambda_min >= 0.25);
        assert!(rep.lambda_max_bound.is_none());

        let single = PatchStructure::custom(vec![SelectionMatrix::new(6, vec![2, 0, 5]).unwrap()]).unwrap();
        let rep = analyze(&single, None).unwrap();
        assert_eq!((rep.lambda_min, rep.lambda_max), (1.0, 1.0));
        assert!(rep.inverse_check.is_none());

        // d >= r/2: bound present, no closed-form inverse
        let rep = analyze(&build_1d(9, 4, 2).unwrap(), None).unwrap();
        assert_eq!(rep.lambda_max_bound, Some(5.0));
        assert!(rep.inverse_check.is_none());
    }
}
