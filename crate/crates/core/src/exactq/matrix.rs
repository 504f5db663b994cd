use std::fmt;
use std::ops::{Index, IndexMut};

use super::Q;
use crate::error::{Error, Result};

/// Dense row-major matrix of exact rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

/// Reduced row echelon form together with its pivot columns.
#[derive(Clone, Debug)]
pub struct Rref {
    pub matrix: QMatrix,
    pub pivots: Vec<usize>,
}

/// Output of [`decompose`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub rank: usize,
    pub kernel: QMatrix,
    pub image: QMatrix,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> QMatrix {
        QMatrix {
            rows,
            cols,
            data: vec![Q::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> QMatrix {
        let mut m = QMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn scalar(n: usize, c: Q) -> QMatrix {
        let mut m = QMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c.clone();
        }
        m
    }

    /// Panics if the rows have unequal length.
    pub fn from_rows(rows: Vec<Vec<Q>>) -> QMatrix {
        let cols = rows.first().map_or(0, Vec::len);
        Self::from_rows_with_cols(rows, cols)
    }

    pub fn from_rows_with_cols(rows: Vec<Vec<Q>>, cols: usize) -> QMatrix {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend(r);
        }
        QMatrix { rows: n, cols, data }
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> QMatrix {
        let cols = rows.first().map_or(0, Vec::len);
        Self::from_rows_with_cols(
            rows.iter().map(|r| r.iter().map(|&x| Q::from_int(x)).collect()).collect(),
            cols,
        )
    }

    /// Builds a `rows × cols.len()` matrix whose columns are the given vectors.
    pub fn from_cols(rows: usize, cols: &[Vec<Q>]) -> QMatrix {
        let mut m = QMatrix::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows, "column length mismatch");
            for (i, x) in c.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        m
    }

    pub fn from_i64_cols(rows: usize, cols: &[Vec<i64>]) -> QMatrix {
        let cols: Vec<Vec<Q>> = cols
            .iter()
            .map(|c| c.iter().map(|&x| Q::from_int(x)).collect())
            .collect();
        QMatrix::from_cols(rows, &cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Q::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Q] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Q> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn col_vectors(&self) -> Vec<Vec<Q>> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn transpose(&self) -> QMatrix {
        let mut t = QMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = QMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let orow = other.row(k);
                let base = i * other.cols;
                for (j, b) in orow.iter().enumerate() {
                    if !b.is_zero() {
                        let prod = a * b;
                        out.data[base + j] += &prod;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in product");
        (0..self.rows)
            .map(|i| {
                let mut acc = Q::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc += &(a * b);
                    }
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, other: &QMatrix) -> QMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &QMatrix) -> QMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: &Q) -> QMatrix {
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    pub fn neg(&self) -> QMatrix {
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| -a).collect(),
        }
    }

    /// Multiplies by `(-1)^k`.
    pub fn signed(&self, k: i64) -> QMatrix {
        if k.rem_euclid(2) == 0 {
            self.clone()
        } else {
            self.neg()
        }
    }

    pub fn hstack(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.rows, other.rows, "row mismatch in hstack");
        let mut out = QMatrix::zeros(self.rows, self.cols + other.cols);
        out.set_block(0, 0, self);
        out.set_block(0, self.cols, other);
        out
    }

    pub fn vstack(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, other.cols, "column mismatch in vstack");
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        QMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &QMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols, "block out of range");
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)].clone();
            }
        }
    }

    /// Adds `block` into `self` at `(r0, c0)`.
    pub fn add_block(&mut self, r0: usize, c0: usize, block: &QMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols, "block out of range");
        for i in 0..block.rows {
            for j in 0..block.cols {
                let b = &block[(i, j)];
                if !b.is_zero() {
                    self[(r0 + i, c0 + j)] += b;
                }
            }
        }
    }

    pub fn block(&self, r0: usize, nr: usize, c0: usize, nc: usize) -> QMatrix {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "block out of range");
        let mut out = QMatrix::zeros(nr, nc);
        for i in 0..nr {
            for j in 0..nc {
                out[(i, j)] = self[(r0 + i, c0 + j)].clone();
            }
        }
        out
    }

    pub fn select_cols(&self, idx: &[usize]) -> QMatrix {
        let mut out = QMatrix::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (k, &j) in idx.iter().enumerate() {
                out[(i, k)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn select_rows(&self, idx: &[usize]) -> QMatrix {
        let mut out = QMatrix::zeros(idx.len(), self.cols);
        for (k, &i) in idx.iter().enumerate() {
            for j in 0..self.cols {
                out[(k, j)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn rref(&self) -> Rref {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m[(r, c)].recip();
            if !inv.is_one() {
                for j in c..self.cols {
                    if !m[(r, j)].is_zero() {
                        m[(r, j)] = &m[(r, j)] * &inv;
                    }
                }
            }
            let pivot_row: Vec<(usize, Q)> = (c..self.cols)
                .filter(|&j| !m[(r, j)].is_zero())
                .map(|j| (j, m[(r, j)].clone()))
                .collect();
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let f = m[(i, c)].clone();
                if f.is_zero() {
                    continue;
                }
                for (j, v) in &pivot_row {
                    let t = &f * v;
                    m[(i, *j)] -= &t;
                }
            }
            pivots.push(c);
            r += 1;
        }
        Rref { matrix: m, pivots }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Rank by forward elimination only.
    pub fn rank(&self) -> usize {
        if self.is_empty() {
            return 0;
        }
        let mut m = self.clone();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m[(r, c)].recip();
            let pivot_row: Vec<(usize, Q)> = (c + 1..self.cols)
                .filter(|&j| !m[(r, j)].is_zero())
                .map(|j| (j, &m[(r, j)] * &inv))
                .collect();
            for i in r + 1..self.rows {
                let f = m[(i, c)].clone();
                if f.is_zero() {
                    continue;
                }
                m[(i, c)] = Q::zero();
                for (j, v) in &pivot_row {
                    let t = &f * v;
                    m[(i, *j)] -= &t;
                }
            }
            r += 1;
        }
        r
    }

    pub fn kernel(&self) -> QMatrix {
        let Rref { matrix, pivots } = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut k = QMatrix::zeros(self.cols, free.len());
        for (t, &f) in free.iter().enumerate() {
            k[(f, t)] = Q::one();
            for (i, &p) in pivots.iter().enumerate() {
                k[(p, t)] = -&matrix[(i, f)];
            }
        }
        k
    }

    pub fn determinant(&self) -> Q {
        assert!(self.is_square(), "determinant of non-square matrix");
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Q::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else {
                return Q::zero();
            };
            if p != c {
                m.swap_rows(c, p);
                det = -det;
            }
            let piv = m[(c, c)].clone();
            det *= &piv;
            let inv = piv.recip();
            for i in c + 1..n {
                let f = &m[(i, c)] * &inv;
                if f.is_zero() {
                    continue;
                }
                for j in c..n {
                    let t = &f * &m[(c, j)];
                    m[(i, j)] -= &t;
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<QMatrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        if n == 0 {
            return Some(QMatrix::zeros(0, 0));
        }
        let aug = self.hstack(&QMatrix::identity(n));
        let Rref { matrix, pivots } = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        Some(matrix.block(0, n, n, n))
    }

    /// Some `X` with `self · X = b`, or `None` if the system is inconsistent.
    pub fn solve(&self, b: &QMatrix) -> Option<QMatrix> {
        assert_eq!(self.rows, b.rows, "row mismatch in solve");
        let aug = self.hstack(b);
        let Rref { matrix, pivots } = aug.rref();
        if pivots.iter().any(|&p| p >= self.cols) {
            return None;
        }
        let mut x = QMatrix::zeros(self.cols, b.cols);
        for (i, &p) in pivots.iter().enumerate() {
            for j in 0..b.cols {
                x[(p, j)] = matrix[(i, self.cols + j)].clone();
            }
        }
        Some(x)
    }
}

impl Index<(usize, usize)> for QMatrix {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for (j, x) in self.row(i).iter().enumerate() {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{x}")?;
            }
        }
        write!(f, "]")
    }
}

/// Rank, kernel basis and column-space basis of `m`.
///
/// The kernel is read off the reduced echelon form (one vector per free
/// column); the image basis is the set of original pivot columns.
pub fn decompose(m: &QMatrix) -> Decomposition {
    let Rref { matrix, pivots } = m.rref();
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    let mut kernel = QMatrix::zeros(m.cols, free.len());
    for (t, &f) in free.iter().enumerate() {
        kernel[(f, t)] = Q::one();
        for (i, &p) in pivots.iter().enumerate() {
            kernel[(p, t)] = -&matrix[(i, f)];
        }
    }
    Decomposition {
        rank: pivots.len(),
        kernel,
        image: m.select_cols(&pivots),
    }
}

/// Columns completing `sub` to a basis of `Q^ambient_dim`, chosen greedily
/// among the standard unit vectors in increasing index order.
pub fn extend_basis(sub: &QMatrix, ambient_dim: usize) -> Result<QMatrix> {
    if sub.rows() != ambient_dim {
        return Err(Error::InvalidInput(format!(
            "basis vectors have length {}, expected {ambient_dim}",
            sub.rows()
        )));
    }
    let aug = sub.hstack(&QMatrix::identity(ambient_dim));
    let pivots = aug.rref().pivots;
    let k = sub.cols();
    if pivots.iter().take_while(|&&p| p < k).count() < k {
        return Err(Error::DependentColumns);
    }
    let units: Vec<usize> = pivots.into_iter().filter(|&p| p >= k).map(|p| p - k).collect();
    let mut out = QMatrix::zeros(ambient_dim, units.len());
    for (t, &u) in units.iter().enumerate() {
        out[(u, t)] = Q::one();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[Vec<i64>]) -> QMatrix {
        QMatrix::from_i64_rows(rows)
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&QMatrix::identity(2));
        assert_eq!(d.rank, 2);
        assert_eq!(d.kernel.cols(), 0);

        let d = decompose(&QMatrix::zeros(2, 2));
        assert_eq!(d.rank, 0);
        assert_eq!(d.kernel, QMatrix::identity(2));
        assert_eq!(d.image.cols(), 0);

        let d = decompose(&m(&[vec![1, 2], vec![2, 4]]));
        assert_eq!(d.rank, 1);
        assert_eq!(d.kernel, QMatrix::from_i64_cols(2, &[vec![-2, 1]]));
        assert_eq!(d.image, QMatrix::from_i64_cols(2, &[vec![1, 2]]));

        let d = decompose(&QMatrix::zeros(0, 3));
        assert_eq!((d.rank, d.kernel.cols()), (0, 3));
    }

    #[test]
    fn extend_basis_examples() {
        let e = extend_basis(&QMatrix::from_i64_cols(2, &[vec![1, 0]]), 2).unwrap();
        assert_eq!(e, QMatrix::from_i64_cols(2, &[vec![0, 1]]));
        let e = extend_basis(&QMatrix::from_i64_cols(2, &[vec![1, 1]]), 2).unwrap();
        assert_eq!(e, QMatrix::from_i64_cols(2, &[vec![1, 0]]));
        let e = extend_basis(&QMatrix::identity(3), 3).unwrap();
        assert_eq!(e.cols(), 0);
        let dep = QMatrix::from_i64_cols(2, &[vec![1, 1], vec![2, 2]]);
        assert!(matches!(extend_basis(&dep, 2), Err(Error::DependentColumns)));
    }

    #[test]
    fn inverse_and_solve() {
        let a = m(&[vec![2, 1], vec![1, 1]]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), QMatrix::identity(2));
        assert_eq!(a.determinant(), Q::one());
        assert!(m(&[vec![1, 2], vec![2, 4]]).inverse().is_none());
        let b = QMatrix::from_i64_cols(2, &[vec![3, 2]]);
        assert_eq!(a.mul(&a.solve(&b).unwrap()), b);
        let sing = m(&[vec![1, 2], vec![2, 4]]);
        assert!(sing.solve(&QMatrix::from_i64_cols(2, &[vec![1, 0]])).is_none());
    }

    fn small_matrix() -> impl Strategy<Value = QMatrix> {
        (0usize..6, 0usize..6).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-3i64..4, r * c).prop_map(move |v| {
                let rows: Vec<Vec<i64>> = v.chunks(c.max(1)).map(|ch| ch.to_vec()).collect();
                if c == 0 {
                    QMatrix::zeros(r, 0)
                } else {
                    QMatrix::from_i64_rows(&rows)
                }
            })
        })
    }

    proptest! {
        #[test]
        fn kernel_is_annihilated(a in small_matrix()) {
            let d = decompose(&a);
            prop_assert_eq!(d.rank + d.kernel.cols(), a.cols());
            prop_assert!(a.mul(&d.kernel).is_zero());
            prop_assert_eq!(d.kernel.rank(), d.kernel.cols());
            prop_assert_eq!(d.image.rank(), d.rank);
            prop_assert_eq!(a.rank(), d.rank);
            prop_assert_eq!(a.transpose().rank(), d.rank);
            prop_assert_eq!(decompose(&a.clone()), d);
        }

        #[test]
        fn extension_completes_basis(a in small_matrix()) {
            let img = decompose(&a).image;
            let ext = extend_basis(&img, a.rows()).unwrap();
            let full = img.hstack(&ext);
            prop_assert_eq!(full.cols(), a.rows());
            prop_assert_eq!(full.rank(), a.rows());
        }
    }
}
