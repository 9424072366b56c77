//! Compressed sparse rows and an envelope Cholesky factorization under
//! reverse Cuthill-McKee ordering.

use crate::error::{Error, Result};

/// Square sparse matrix in CSR form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n} x {n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|k| v[k]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, a)| a * x[j]).sum()
            })
            .collect()
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Largest absolute row sum, an upper bound on the spectral norm of a
    /// symmetric matrix.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).1.iter().map(|a| a.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `A + s * diag(d)`.
    pub fn add_diagonal(&self, d: &[f64], s: f64) -> Self {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz() + self.n);
        for i in 0..self.n {
            let (c, v) = self.row(i);
            t.extend(c.iter().zip(v).map(|(&j, &a)| (i, j, a)));
            t.push((i, i, s * d[i]));
        }
        Self::from_triplets(self.n, t)
    }

    /// Principal submatrix on the (sorted) index list `keep`.
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut t = Vec::new();
        for (new_i, &i) in keep.iter().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                if map[j] != usize::MAX {
                    t.push((new_i, map[j], a));
                }
            }
        }
        Self::from_triplets(keep.len(), t)
    }
}

/// Reverse Cuthill-McKee ordering of the matrix graph; returns `new -> old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let neighbors = |i: usize| a.row(i).0.iter().copied().filter(move |&j| j != i);
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);

    // Breadth-first levels from `s` over unplaced vertices; returns the last level.
    let bfs_last_level = |s: usize, placed: &[bool]| -> (usize, Vec<usize>) {
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut level = vec![s];
        let mut depth = 0;
        loop {
            let mut next = Vec::new();
            for &u in &level {
                for v in neighbors(u) {
                    if !seen[v] && !placed[v] {
                        seen[v] = true;
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                return (depth, level);
            }
            level = next;
            depth += 1;
        }
    };

    while order.len() < n {
        let mut start = (0..n).filter(|&i| !placed[i]).min_by_key(|&i| (degree[i], i)).expect("unplaced vertex exists");
        // pseudo-peripheral start vertex
        let (mut ecc, mut last) = bfs_last_level(start, &placed);
        loop {
            let cand = *last.iter().min_by_key(|&&i| (degree[i], i)).unwrap();
            let (e, l) = bfs_last_level(cand, &placed);
            if e > ecc {
                start = cand;
                ecc = e;
                last = l;
            } else {
                break;
            }
        }
        placed[start] = true;
        let mut head = order.len();
        order.push(start);
        while head < order.len() {
            let u = order[head];
            head += 1;
            let mut nb: Vec<usize> = neighbors(u).filter(|&v| !placed[v]).collect();
            nb.sort_unstable_by_key(|&v| (degree[v], v));
            for v in nb {
                placed[v] = true;
                order.push(v);
            }
        }
    }
    order.reverse();
    order
}

/// Cholesky factor `P A P^T = L L^T` stored row-wise over the envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors a symmetric positive definite matrix.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new_i, &old_i) in perm.iter().enumerate() {
            for &old_j in a.row(old_i).0 {
                let new_j = inv[old_j];
                if new_j < first[new_i] {
                    first[new_i] = new_j;
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for (new_i, &old_i) in perm.iter().enumerate() {
            let (c, v) = a.row(old_i);
            for (&old_j, &val) in c.iter().zip(v) {
                let new_j = inv[old_j];
                if new_j <= new_i {
                    data[start[new_i] + new_j - first[new_i]] = val;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let (done, rest) = data.split_at_mut(start[i]);
            let row_i = &mut rest[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let row_j = &done[start[j]..start[j + 1]];
                let k0 = fi.max(fj);
                let dot: f64 = row_i[k0 - fi..j - fi].iter().zip(&row_j[k0 - fj..j - fj]).map(|(x, y)| x * y).sum();
                row_i[j - fi] = (row_i[j - fi] - dot) / row_j[j - fj];
            }
            let sq: f64 = row_i[..i - fi].iter().map(|x| x * x).sum();
            let d = row_i[i - fi] - sq;
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: perm[i], value: d });
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(Self { perm, first, start, data })
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&x[fi..i]).map(|(l, y)| l * y).sum();
            x[i] = (x[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            x[i] /= row[i - fi];
            let xi = x[i];
            for (k, l) in (fi..i).zip(&row[..i - fi]) {
                x[k] -= l * xi;
            }
        }
        let mut out = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            t.push((i, (i + 1) % n, -1.0));
            t.push(((i + 1) % n, i, -1.0));
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 1, 1.0), (0, 1, 2.5), (1, 1, 4.0)]);
        assert_eq!(m.get(0, 1), 3.5);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn rcm_is_a_permutation() {
        let m = laplacian_1d(50, 0.1);
        let mut p = reverse_cuthill_mckee(&m);
        p.sort_unstable();
        assert_eq!(p, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn cyclic_band_stays_narrow() {
        let m = laplacian_1d(200, 0.1);
        let chol = EnvelopeCholesky::factor(&m).unwrap();
        assert!(chol.envelope_size() < 200 * 4, "{}", chol.envelope_size());
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let m = laplacian_1d(10, -0.5);
        assert!(matches!(EnvelopeCholesky::factor(&m), Err(Error::NotPositiveDefinite { .. })));
    }

    proptest! {
        #[test]
        fn solve_inverts_matvec(
            x in prop::collection::vec(-10.0f64..10.0, 30),
            shift in 0.01f64..3.0,
        ) {
            let m = laplacian_1d(30, shift);
            let b = m.mul_vec(&x);
            let y = EnvelopeCholesky::factor(&m).unwrap().solve(&b);
            for (a, c) in x.iter().zip(&y) {
                prop_assert!((a - c).abs() < 1e-8 * (1.0 + 1.0 / shift));
            }
        }
    }
}
