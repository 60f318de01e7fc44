//! Compressed sparse row storage built from triplets.

use crate::exec::Execution;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

pub type Triplet = (usize, usize, f64);

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), values: Vec::new() }
    }

    /// Sums duplicate entries. Duplicates are added in input order, so the
    /// result does not depend on the execution policy.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<Triplet>, exec: Execution) -> Self {
        exec.sort_by_key(&mut triplets, |t| (t.0, t.1));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            debug_assert!(i < nrows && j < ncols);
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix { nrows, ncols, indptr, indices, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Entrywise sum; the pattern is the union of both patterns.
    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        indptr.push(0);
        let mut indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        for i in 0..self.nrows {
            let (mut a, ea) = (self.indptr[i], self.indptr[i + 1]);
            let (mut b, eb) = (other.indptr[i], other.indptr[i + 1]);
            while a < ea || b < eb {
                let ja = if a < ea { self.indices[a] } else { usize::MAX };
                let jb = if b < eb { other.indices[b] } else { usize::MAX };
                if ja == jb {
                    indices.push(ja);
                    values.push(self.values[a] + other.values[b]);
                    a += 1;
                    b += 1;
                } else if ja < jb {
                    indices.push(ja);
                    values.push(self.values[a]);
                    a += 1;
                } else {
                    indices.push(jb);
                    values.push(other.values[b]);
                    b += 1;
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, indptr, indices, values }
    }

    /// Sums a list of matrices by pairwise reduction in a fixed order.
    pub fn sum_all(mut parts: Vec<CsrMatrix>, nrows: usize, ncols: usize, exec: Execution) -> CsrMatrix {
        while parts.len() > 1 {
            let pairs: Vec<(CsrMatrix, Option<CsrMatrix>)> = {
                let mut out = Vec::with_capacity(parts.len().div_ceil(2));
                let mut it = parts.into_iter();
                while let Some(a) = it.next() {
                    out.push((a, it.next()));
                }
                out
            };
            parts = exec.map_slice(&pairs, |(a, b)| match b {
                Some(b) => a.add(b),
                None => a.clone(),
            });
        }
        parts.pop().unwrap_or_else(|| CsrMatrix::zeros(nrows, ncols))
    }

    pub fn mul_vec(&self, x: &[f64], exec: Execution) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        exec.map(self.nrows, |i| self.row(i).map(|(j, v)| v * x[j]).sum())
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                triplets.push((j, i, v));
            }
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, triplets, Execution::Sequential)
    }

    /// `max |A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - t.get(i, j)).abs());
            }
            for (j, v) in t.row(i) {
                worst = worst.max((v - self.get(i, j)).abs());
            }
        }
        worst
    }

    /// `max |A_ij − B_ij|` over the union of patterns.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        let mut neg = other.clone();
        neg.values.iter_mut().for_each(|v| *v = -*v);
        self.add(&neg).max_abs()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 0, 2.0), (1, 2, 0.5), (0, 1, -1.0)], Execution::Parallel);
        assert_eq!(m.to_dense(), vec![vec![2.0, -1.0, 0.0], vec![0.0, 0.0, 1.5]]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 2.0], Execution::Sequential), vec![1.0, 3.0]);
    }

    proptest! {
        #[test]
        fn add_matches_dense(
            a in proptest::collection::vec((0..6usize, 0..5usize, -1.0..1.0f64), 0..30),
            b in proptest::collection::vec((0..6usize, 0..5usize, -1.0..1.0f64), 0..30),
        ) {
            let ma = CsrMatrix::from_triplets(6, 5, a, Execution::Sequential);
            let mb = CsrMatrix::from_triplets(6, 5, b, Execution::Parallel);
            let sum = CsrMatrix::sum_all(vec![ma.clone(), mb.clone(), ma.clone()], 6, 5, Execution::Parallel).to_dense();
            let (da, db) = (ma.to_dense(), mb.to_dense());
            for i in 0..6 {
                for j in 0..5 {
                    prop_assert!((sum[i][j] - (2.0 * da[i][j] + db[i][j])).abs() < 1e-14);
                }
            }
            prop_assert_eq!(ma.transpose().transpose(), ma);
        }
    }
}
