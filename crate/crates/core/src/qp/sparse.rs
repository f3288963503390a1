/// Coordinate-format sparse matrix. After [`CooMatrix::canonicalize`] the
/// entries are sorted column-major with duplicates summed and zeros dropped.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CooMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn from_triplets(rows: usize, cols: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut m = Self {
            rows,
            cols,
            entries,
        };
        debug_assert!(m.entries.iter().all(|&(r, c, _)| r < rows && c < cols));
        m.canonicalize();
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        assert!(
            row < self.rows && col < self.cols,
            "entry ({row}, {col}) out of bounds"
        );
        self.entries.push((row, col, value));
    }

    /// Appends an empty row and returns its index.
    pub fn add_row(&mut self) -> usize {
        self.rows += 1;
        self.rows - 1
    }

    /// Adds `w * x[k] * x[l]` to a symmetric quadratic form stored in full.
    pub fn add_quadratic(&mut self, k: usize, l: usize, w: f64) {
        if k == l {
            self.push(k, k, w);
        } else {
            self.push(k, l, 0.5 * w);
            self.push(l, k, 0.5 * w);
        }
    }

    pub fn canonicalize(&mut self) {
        self.entries.sort_by_key(|&(r, c, _)| (c, r));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(self.entries.len());
        for &(r, c, v) in &self.entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        self.entries = merged;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn transpose_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut x = vec![0.0; self.cols];
        for &(r, c, v) in &self.entries {
            x[c] += v * y[r];
        }
        x
    }

    /// `x' M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(r, c, v)| v * x[r] * x[c]).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let mut t: Vec<_> = self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
        t.sort_by_key(|&(r, c, _)| (c, r));
        let mut own = self.entries.clone();
        own.sort_by_key(|&(r, c, _)| (c, r));
        own.len() == t.len()
            && own
                .iter()
                .zip(&t)
                .all(|(a, b)| a.0 == b.0 && a.1 == b.1 && (a.2 - b.2).abs() <= tol)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for &(r, c, v) in &self.entries {
            d[r][c] += v;
        }
        d
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .map(|&(r, c, v)| (r, c, v * factor))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_merges_and_sorts() {
        let m = CooMatrix::from_triplets(
            2,
            2,
            vec![(1, 1, 1.0), (0, 0, 2.0), (1, 1, 3.0), (0, 1, 0.0)],
        );
        assert_eq!(m.entries(), &[(0, 0, 2.0), (1, 1, 4.0)]);
    }

    #[test]
    fn products() {
        let m = CooMatrix::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, -1.0)]);
        assert_eq!(m.mul_vec(&[1.0, 2.0, 3.0]), vec![7.0, -2.0]);
        assert_eq!(m.transpose_mul_vec(&[1.0, 1.0]), vec![1.0, -1.0, 2.0]);
    }

    #[test]
    fn quadratic_helper_is_symmetric() {
        let mut q = CooMatrix::new(2, 2);
        q.add_quadratic(0, 1, 3.0);
        q.add_quadratic(1, 1, -1.0);
        q.canonicalize();
        assert!(q.is_symmetric(0.0));
        assert_eq!(q.quadratic_form(&[2.0, 5.0]), 3.0 * 10.0 - 25.0);
    }
}
