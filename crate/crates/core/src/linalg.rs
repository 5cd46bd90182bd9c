//! Small dense helpers shared by the simulation hot loop.

use nalgebra::{DMatrix, DVector};

/// Row-major `n × p` matrix holding one row per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Stacked {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Stacked {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Builds from a flat row-major buffer. Panics if the length does not match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length does not match {rows}x{cols}");
        Self { rows, cols, data }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self { rows: rows.len(), cols, data }
    }

    /// Every row equal to `row`.
    pub fn repeat_row(rows: usize, row: &[f64]) -> Self {
        let mut data = Vec::with_capacity(rows * row.len());
        for _ in 0..rows {
            data.extend_from_slice(row);
        }
        Self { rows, cols: row.len(), data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    /// Average of the rows, `(1/n) Σ_i x_i`.
    pub fn mean_row(&self) -> Vec<f64> {
        let mut out = self.column_sums();
        let inv = 1.0 / self.rows as f64;
        out.iter_mut().for_each(|v| *v *= inv);
        out
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(i)) {
                *o += v;
            }
        }
        out
    }

    pub fn max_row_norm(&self) -> f64 {
        (0..self.rows).map(|i| norm_sq(self.row(i)).sqrt()).fold(0.0, f64::max)
    }

    /// True when every entry is finite and bounded by `limit` in magnitude.
    pub fn is_bounded(&self, limit: f64) -> bool {
        self.data.iter().all(|v| v.is_finite() && v.abs() <= limit)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Stacked) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// `out = m · x` for a row-major square block of side `x.len()`.
#[inline]
pub fn matvec_into(m: &[f64], x: &[f64], out: &mut [f64]) {
    let p = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o = dot(&m[r * p..(r + 1) * p], x);
    }
}

/// Symmetric eigen-decomposition with eigenvalues sorted ascending.
pub(crate) fn sorted_symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
    );
    (values, vectors)
}

pub(crate) fn largest_eigenvalue(m: DMatrix<f64>) -> f64 {
    m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Moore-Penrose solve `m⁺ rhs` for a symmetric PSD matrix, discarding
/// eigenvalues below `rel_tol · λ_max`.
pub(crate) fn psd_pinv_solve(m: &DMatrix<f64>, rhs: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let (values, vectors) = sorted_symmetric_eigen(m.clone());
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let mut out = DVector::zeros(rhs.len());
    for (k, &lam) in values.iter().enumerate() {
        if lam > rel_tol * top && lam > 0.0 {
            let v = vectors.column(k);
            out += v * (v.dot(rhs) / lam);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_column_sums() {
        let x = Stacked::from_rows(&[[1.0, 2.0], [3.0, -2.0]]);
        assert_eq!(x.column_sums(), vec![4.0, 0.0]);
        assert_eq!(x.mean_row(), vec![2.0, 0.0]);
        assert_eq!(x.get(1, 0), 3.0);
    }

    #[test]
    fn dmatrix_round_trip() {
        let x = Stacked::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        assert_eq!(Stacked::from_dmatrix(&x.to_dmatrix()), x);
    }

    #[test]
    fn bounded_check_rejects_nan_and_huge() {
        let mut x = Stacked::zeros(2, 2);
        assert!(x.is_bounded(1e150));
        x.row_mut(1)[0] = 1e151;
        assert!(!x.is_bounded(1e150));
        x.row_mut(1)[0] = f64::NAN;
        assert!(!x.is_finite());
    }

    #[test]
    fn pinv_solve_on_singular_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let rhs = DVector::from_vec(vec![2.0, 2.0]);
        let x = psd_pinv_solve(&m, &rhs, 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
