//! Patch structures: the selection matrices `P_1 … P_k` that cut an input of
//! dimension `n` into `k` patches of size `r`.
//!
//! A [`SelectionMatrix`] is stored sparsely as the column picked by each row.
//! Builders for the 1D and 2D patch-and-stride layouts live here, together with
//! Gram assembly (`P = Σᵢⱼ PᵢPⱼᵀ`, `P_Σ = Σᵢⱼ PᵢΣPⱼᵀ`). Spectral certificates
//! for the stride layouts are in [`spectral`], the plain-text file format is in
//! [`format`].

pub mod format;
pub mod spectral;

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, SymMatrix};

pub use spectral::{
    analyze, check_inverse, closed_form_gram_1d, closed_form_inverse_1d, gershgorin_bounds, lambda_max_bound_1d,
    GramReport, InverseCheck,
};

/// An `r × n` 0/1 matrix with exactly one 1 per row and at most one per
/// column, stored as the column index selected by each row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SelectionMatrix {
    n: usize,
    row_to_col: Vec<usize>,
}

impl SelectionMatrix {
    pub fn new(n: usize, row_to_col: Vec<usize>) -> Result<Self> {
        if row_to_col.is_empty() {
            return Err(Error::InvalidGeometry("patch selects no columns".into()));
        }
        let mut seen = HashSet::with_capacity(row_to_col.len());
        for &c in &row_to_col {
            if c >= n {
                return Err(Error::InvalidGeometry(format!("column {c} out of range for n = {n}")));
            }
            if !seen.insert(c) {
                return Err(Error::InvalidGeometry(format!("column {c} selected twice")));
            }
        }
        Ok(SelectionMatrix { n, row_to_col })
    }

    /// Patch size (number of rows).
    pub fn r(&self) -> usize {
        self.row_to_col.len()
    }

    /// Input dimension (number of columns).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> &[usize] {
        &self.row_to_col
    }

    /// `P x`: gathers the selected coordinates.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.row_to_col.iter().map(|&c| x[c]).collect()
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.r(), self.n);
        for (row, &col) in self.row_to_col.iter().enumerate() {
            m.set(row, col, 1.0);
        }
        m
    }

    fn overlaps(&self, other: &SelectionMatrix) -> bool {
        let mine: HashSet<usize> = self.row_to_col.iter().copied().collect();
        other.row_to_col.iter().any(|c| mine.contains(c))
    }
}

/// How a [`PatchStructure`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Custom,
    Stride1D { n: usize, r: usize, d: usize },
    Stride2D { n1: usize, n2: usize, r1: usize, r2: usize, d1: usize, d2: usize },
}

/// Ordered list of patches sharing the same `r` and `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchStructure {
    patches: Vec<SelectionMatrix>,
    origin: Origin,
    // Row-major k × r table of column indices, for the hot loops in the model.
    flat: Vec<usize>,
}

impl PatchStructure {
    /// A structure with [`Origin::Custom`].
    pub fn custom(patches: Vec<SelectionMatrix>) -> Result<Self> {
        Self::with_origin(patches, Origin::Custom)
    }

    fn with_origin(patches: Vec<SelectionMatrix>, origin: Origin) -> Result<Self> {
        let first =
            patches.first().ok_or_else(|| Error::InvalidGeometry("patch structure needs at least one patch".into()))?;
        let (r, n) = (first.r(), first.n());
        for p in &patches {
            if p.r() != r || p.n() != n {
                return Err(Error::InvalidGeometry(format!("mixed patch shapes: {}x{} vs {}x{}", p.r(), p.n(), r, n)));
            }
        }
        let flat = patches.iter().flat_map(|p| p.columns().iter().copied()).collect();
        Ok(PatchStructure { patches, origin, flat })
    }

    /// Number of patches `k`.
    pub fn k(&self) -> usize {
        self.patches.len()
    }

    pub fn r(&self) -> usize {
        self.patches[0].r()
    }

    pub fn n(&self) -> usize {
        self.patches[0].n()
    }

    pub fn patches(&self) -> &[SelectionMatrix] {
        &self.patches
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    /// Column indices of patch `i`.
    #[inline]
    pub fn patch_columns(&self, i: usize) -> &[usize] {
        let r = self.r();
        &self.flat[i * r..(i + 1) * r]
    }

    /// `Σᵢ Pᵢ x`.
    pub fn summed_patches(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.r()];
        for i in 0..self.k() {
            for (o, &c) in out.iter_mut().zip(self.patch_columns(i)) {
                *o += x[c];
            }
        }
        out
    }

    /// `S = Σᵢ Pᵢ` as an integer `r × n` count table (row-major).
    fn summed_selection_counts(&self) -> Vec<i64> {
        let (r, n) = (self.r(), self.n());
        let mut s = vec![0i64; r * n];
        for i in 0..self.k() {
            for (row, &col) in self.patch_columns(i).iter().enumerate() {
                s[row * n + col] += 1;
            }
        }
        s
    }
}

fn stride_count(n: usize, r: usize, d: usize) -> usize {
    (n - r) / d + 1
}

fn check_1d(n: usize, r: usize, d: usize) -> Result<()> {
    if r < 1 || r > n {
        return Err(Error::InvalidGeometry(format!("patch size r = {r} must satisfy 1 <= r <= n = {n}")));
    }
    if d < 1 {
        return Err(Error::InvalidGeometry("stride d must be at least 1".into()));
    }
    Ok(())
}

/// 1D patch-and-stride layout: `k = ⌊(n−r)/d⌋ + 1` patches, patch `i`
/// (0-based) covering columns `i·d … i·d + r − 1`.
pub fn build_1d(n: usize, r: usize, d: usize) -> Result<PatchStructure> {
    check_1d(n, r, d)?;
    let patches = (0..stride_count(n, r, d))
        .map(|i| SelectionMatrix::new(n, (i * d..i * d + r).collect()))
        .collect::<Result<Vec<_>>>()?;
    PatchStructure::with_origin(patches, Origin::Stride1D { n, r, d })
}

/// 2D patch-and-stride layout over an `n1 × n2` image vectorized row-wise.
///
/// Patches are enumerated row-major over `(i, j)` with `i < k1`, `j < k2`;
/// within a patch, entries are enumerated row-major as well, so entry
/// `a = p·r2 + q` of patch `(i, j)` selects pixel `(i·d1 + p, j·d2 + q)`,
/// i.e. column `(i·d1 + p)·n2 + j·d2 + q`. This makes patch `(i, j)` equal
/// to `P¹ᵢ ⊗ P²ⱼ`.
pub fn build_2d(n1: usize, n2: usize, r1: usize, r2: usize, d1: usize, d2: usize) -> Result<PatchStructure> {
    check_1d(n1, r1, d1)?;
    check_1d(n2, r2, d2)?;
    let (k1, k2) = (stride_count(n1, r1, d1), stride_count(n2, r2, d2));
    let mut patches = Vec::with_capacity(k1 * k2);
    for i in 0..k1 {
        for j in 0..k2 {
            let cols = (0..r1).flat_map(|p| (0..r2).map(move |q| (i * d1 + p) * n2 + j * d2 + q)).collect();
            patches.push(SelectionMatrix::new(n1 * n2, cols)?);
        }
    }
    PatchStructure::with_origin(patches, Origin::Stride2D { n1, n2, r1, r2, d1, d2 })
}

/// `P = Σᵢⱼ PᵢPⱼᵀ = S Sᵀ` with `S = Σᵢ Pᵢ`, assembled in integer arithmetic.
pub fn gram(ps: &PatchStructure) -> SymMatrix {
    let (r, n) = (ps.r(), ps.n());
    let s = ps.summed_selection_counts();
    SymMatrix::from_fn(r, |a, b| {
        let v: i64 = (0..n).map(|c| s[a * n + c] * s[b * n + c]).sum();
        v as f64
    })
}

/// `P_Σ = Σᵢⱼ PᵢΣPⱼᵀ = S Σ Sᵀ`.
pub fn sigma_gram(ps: &PatchStructure, sigma: &SymMatrix) -> Result<SymMatrix> {
    let (r, n) = (ps.r(), ps.n());
    if sigma.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: sigma.dim() });
    }
    let s = ps.summed_selection_counts();
    // T = S Σ  (r × n)
    let mut t = vec![0.0; r * n];
    for a in 0..r {
        for c in 0..n {
            let count = s[a * n + c];
            if count == 0 {
                continue;
            }
            for j in 0..n {
                t[a * n + j] += count as f64 * sigma.get(c, j);
            }
        }
    }
    Ok(SymMatrix::from_fn(r, |a, b| (0..n).map(|c| t[a * n + c] * s[b * n + c] as f64).sum()))
}

/// Smallest (0-based) index of a patch whose columns meet no other patch's
/// columns.
pub fn find_disjoint_patch(ps: &PatchStructure) -> Option<usize> {
    let patches = ps.patches();
    (0..patches.len()).find(|&i| patches.iter().enumerate().all(|(j, other)| j == i || !patches[i].overlaps(other)))
}
