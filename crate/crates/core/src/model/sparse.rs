/// Row-major sorted triplet storage.
///
/// Duplicate `(row, col)` entries are summed and explicit zeros dropped at
/// construction, so two matrices with the same nonzeros compare equal.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    triplets: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self::from_triplets(n_rows, n_cols, Vec::new())
    }

    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        for &(i, j, _) in &triplets {
            assert!(i < n_rows && j < n_cols, "triplet ({i}, {j}) outside {n_rows}x{n_cols}");
        }
        triplets.sort_by(|p, q| (p.0, p.1).cmp(&(q.0, q.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for t in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == t.0 && last.1 == t.1 => last.2 += t.2,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        let mut row_ptr = vec![0; n_rows + 1];
        for &(i, _, _) in &merged {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n_rows,
            n_cols,
            triplets: merged,
            row_ptr,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn row(&self, i: usize) -> &[(usize, usize, f64)] {
        &self.triplets[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .binary_search_by(|t| t.1.cmp(&j))
            .map(|k| self.row(i)[k].2)
            .unwrap_or(0.0)
    }

    /// `M v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        for &(i, j, a) in &self.triplets {
            out[i] += a * v[j];
        }
        out
    }

    /// `Mᵀ w`.
    pub fn tmul_vec(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        for &(i, j, a) in &self.triplets {
            out[j] += a * w[i];
        }
        out
    }

    /// `Mᵀ w` restricted to the listed rows, with `w` indexed like `rows`.
    pub fn tmul_rows(&self, rows: &[usize], w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        for (k, &i) in rows.iter().enumerate() {
            for &(_, j, a) in self.row(i) {
                out[j] += a * w[k];
            }
        }
        out
    }
}
