use crate::scalar::Scalar;

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

/// Row-by-row builder; rows must be pushed in order with sorted columns.
#[derive(Debug)]
pub struct SparseBuilder<T> {
    inner: SparseMatrix<T>,
}

impl<T: Scalar> SparseBuilder<T> {
    pub fn push_row(&mut self, row: impl IntoIterator<Item = (usize, T)>) {
        for (j, v) in row {
            debug_assert!(j < self.inner.ncols);
            self.inner.cols.push(j);
            self.inner.vals.push(v);
        }
        self.inner.row_ptr.push(self.inner.cols.len());
    }

    pub fn build(self) -> SparseMatrix<T> {
        assert_eq!(self.inner.row_ptr.len(), self.inner.nrows + 1, "missing rows");
        self.inner
    }
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn builder(nrows: usize, ncols: usize) -> SparseBuilder<T> {
        SparseBuilder {
            inner: SparseMatrix {
                nrows,
                ncols,
                row_ptr: vec![0],
                cols: Vec::new(),
                vals: Vec::new(),
            },
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).fold(T::zero(), |acc, (j, v)| acc + v * x[j]))
            .collect()
    }

    pub fn scaled(&self, factor: T) -> Self {
        let mut m = self.clone();
        for v in &mut m.vals {
            *v = *v * factor;
        }
        m
    }

    /// Lower and upper bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        self.triplets().fold((0, 0), |(kl, ku), (i, j, _)| {
            if i > j {
                (kl.max(i - j), ku)
            } else {
                (kl, ku.max(j - i))
            }
        })
    }

    pub fn is_symmetric(&self, rel_tol: T) -> bool {
        self.nrows == self.ncols
            && self.triplets().all(|(i, j, v)| {
                let w = self.get(j, i);
                (v - w).abs() <= rel_tol * v.abs().max(w.abs())
            })
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }
}
