//! Sparse assembly and matrix-vector products for superoperators.

use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64;

/// Coordinate-format accumulator. Entries at the same position are summed
/// on `build`, so operator terms can be pushed independently.
pub struct TripletBuffer {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl TripletBuffer {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: Complex64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if val != Complex64::ZERO {
            self.entries.push((row, col, val));
        }
    }

    pub fn build(mut self) -> SparseColMat<usize, Complex64> {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut merged: Vec<Triplet<usize, usize, Complex64>> =
            Vec::with_capacity(self.entries.len());
        for (r, c, v) in self.entries {
            match merged.last_mut() {
                Some(t) if t.row == r && t.col == c => t.val += v,
                _ => merged.push(Triplet::new(r, c, v)),
            }
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &merged)
            .expect("triplets are deduplicated and in range")
    }
}

/// `y = A x` by CSC column traversal.
pub fn spmv(a: &SparseColMat<usize, Complex64>, x: &[Complex64], y: &mut [Complex64]) {
    assert_eq!(x.len(), a.ncols());
    assert_eq!(y.len(), a.nrows());
    y.fill(Complex64::ZERO);
    let a = a.as_ref();
    for col in 0..a.ncols() {
        let xc = x[col];
        if xc == Complex64::ZERO {
            continue;
        }
        let rows = a.row_idx_of_col_raw(col);
        let vals = a.val_of_col(col);
        for (&r, &v) in rows.iter().zip(vals.iter()) {
            y[r] += v * xc;
        }
    }
}

/// Maximum absolute column sum (the induced 1-norm).
pub fn norm_one(a: &SparseColMat<usize, Complex64>) -> f64 {
    let a = a.as_ref();
    let mut worst = 0.0f64;
    for col in 0..a.ncols() {
        let s: f64 = a.val_of_col(col).iter().map(|v| v.norm()).sum();
        worst = worst.max(s);
    }
    worst
}
