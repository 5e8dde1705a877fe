//! Dense exact linear algebra over any [`Scalar`] field.
//!
//! Row-major storage, Gaussian elimination with exact division, deterministic
//! lowest-index pivoting throughout.

use crate::error::{Error, Result};
use crate::scalars::Scalar;

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: std::fmt::Debug> std::fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                write!(f, "{:?} ", self.data[r * self.cols + c])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::invalid("matrix needs at least one row"));
        }
        let c = rows[0].len();
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged rows"));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn zero_like(rows: usize, cols: usize, sample: &T) -> Self {
        Matrix::from_fn(rows, cols, |_, _| sample.zero_like())
    }

    pub fn identity_like(n: usize, sample: &T) -> Self {
        Matrix::from_fn(n, n, |r, c| {
            if r == c {
                sample.one_like()
            } else {
                sample.zero_like()
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn sample(&self) -> &T {
        &self.data[0]
    }

    pub fn col(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.at(r, c).clone()).collect()
    }

    pub fn row(&self, r: usize) -> Vec<T> {
        self.data[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    pub fn set_col(&mut self, c: usize, v: &[T]) {
        for r in 0..self.rows {
            self.set(r, c, v[r].clone());
        }
    }

    pub fn from_cols(cols: Vec<Vec<T>>) -> Result<Self> {
        let c = cols.len();
        if c == 0 {
            return Err(Error::invalid("matrix needs at least one column"));
        }
        let r = cols[0].len();
        if cols.iter().any(|col| col.len() != r) {
            return Err(Error::invalid("ragged columns"));
        }
        Ok(Matrix::from_fn(r, c, |i, j| cols[j][i].clone()))
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.at(c, r).clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_fn(self.rows, self.cols, |r, c| self.at(r, c).add(other.at(r, c)))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_fn(self.rows, self.cols, |r, c| self.at(r, c).sub(other.at(r, c)))
    }

    pub fn neg(&self) -> Self {
        Matrix::from_fn(self.rows, self.cols, |r, c| self.at(r, c).neg())
    }

    pub fn scale(&self, s: &T) -> Self {
        Matrix::from_fn(self.rows, self.cols, |r, c| self.at(r, c).mul(s))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matrix product");
        let zero = self.sample().zero_like();
        Matrix::from_fn(self.rows, other.cols, |r, c| {
            let mut acc = zero.clone();
            for k in 0..self.cols {
                let t = self.at(r, k).mul(other.at(k, c));
                acc = acc.add(&t);
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        let zero = self.sample().zero_like();
        (0..self.rows)
            .map(|r| {
                let mut acc = zero.clone();
                for k in 0..self.cols {
                    acc = acc.add(&self.at(r, k).mul(&v[k]));
                }
                acc
            })
            .collect()
    }

    pub fn pow(&self, mut e: u64) -> Self {
        assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Matrix::identity_like(self.rows, self.sample());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|r| {
                (0..self.cols).all(|c| {
                    if r == c {
                        self.at(r, c).sub(&self.at(r, c).one_like()).is_zero()
                    } else {
                        self.at(r, c).is_zero()
                    }
                })
            })
    }

    /// Reduced row echelon form; returns (rref, pivot columns).
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0usize;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(pr) = (row..m.rows).find(|&r| !m.at(r, col).is_zero()) else {
                continue;
            };
            if pr != row {
                for c in 0..m.cols {
                    m.data.swap(pr * m.cols + c, row * m.cols + c);
                }
            }
            let inv = m.at(row, col).inv().unwrap();
            for c in col..m.cols {
                let v = m.at(row, c).mul(&inv);
                m.set(row, c, v);
            }
            for r in 0..m.rows {
                if r != row && !m.at(r, col).is_zero() {
                    let factor = m.at(r, col).clone();
                    for c in col..m.cols {
                        let v = m.at(r, c).sub(&factor.mul(m.at(row, c)));
                        m.set(r, c, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel, one column vector per free variable, with
    /// free variables set to one in ascending column order.
    pub fn kernel_basis(&self) -> Vec<Vec<T>> {
        let (rref, pivots) = self.rref();
        let one = self.sample().one_like();
        let zero = self.sample().zero_like();
        let mut basis = Vec::new();
        let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![zero.clone(); self.cols];
            v[free] = one.clone();
            for (prow, &pcol) in pivots.iter().enumerate() {
                v[pcol] = rref.at(prow, free).neg();
            }
            basis.push(v);
        }
        basis
    }

    /// Solves `self * x = b`; `None` if inconsistent. Free variables are set
    /// to zero (minimum-support canonical solution).
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        assert_eq!(self.rows, b.len());
        let aug = Matrix::from_fn(self.rows, self.cols + 1, |r, c| {
            if c < self.cols {
                self.at(r, c).clone()
            } else {
                b[r].clone()
            }
        });
        let (rref, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let zero = self.sample().zero_like();
        let mut x = vec![zero; self.cols];
        for (prow, &pcol) in pivots.iter().enumerate() {
            x[pcol] = rref.at(prow, self.cols).clone();
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Self> {
        assert!(self.is_square());
        let n = self.rows;
        let aug = Matrix::from_fn(n, 2 * n, |r, c| {
            if c < n {
                self.at(r, c).clone()
            } else if c - n == r {
                self.sample().one_like()
            } else {
                self.sample().zero_like()
            }
        });
        let (rref, pivots) = aug.rref();
        if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| i != p) {
            return None;
        }
        Some(Matrix::from_fn(n, n, |r, c| rref.at(r, c + n).clone()))
    }

    pub fn det(&self) -> T {
        assert!(self.is_square());
        let n = self.rows;
        let mut m = self.clone();
        let mut det = self.sample().one_like();
        for col in 0..n {
            let Some(pr) = (col..n).find(|&r| !m.at(r, col).is_zero()) else {
                return self.sample().zero_like();
            };
            if pr != col {
                for c in 0..n {
                    m.data.swap(pr * n + c, col * n + c);
                }
                det = det.neg();
            }
            det = det.mul(m.at(col, col));
            let inv = m.at(col, col).inv().unwrap();
            for r in (col + 1)..n {
                if m.at(r, col).is_zero() {
                    continue;
                }
                let factor = m.at(r, col).mul(&inv);
                for c in col..n {
                    let v = m.at(r, c).sub(&factor.mul(m.at(col, c)));
                    m.set(r, c, v);
                }
            }
        }
        det
    }

    pub fn trace(&self) -> T {
        assert!(self.is_square());
        let mut acc = self.sample().zero_like();
        for i in 0..self.rows {
            acc = acc.add(self.at(i, i));
        }
        acc
    }

    /// Monic characteristic polynomial coefficients, constant term first, by
    /// the Faddeev–LeVerrier recurrence (exact in characteristic zero).
    pub fn char_poly(&self) -> Vec<T> {
        assert!(self.is_square());
        let n = self.rows;
        let one = self.sample().one_like();
        let mut coeffs = vec![self.sample().zero_like(); n + 1];
        coeffs[n] = one.clone();
        let mut m = Matrix::identity_like(n, self.sample());
        let mut c = one;
        for k in 1..=n {
            if k > 1 {
                // M_k = A * M_{k-1} + c_{k-1} I
                m = self.mul(&m);
                for i in 0..n {
                    let v = m.at(i, i).add(&c);
                    m.set(i, i, v);
                }
            } else {
                m = Matrix::identity_like(n, self.sample());
            }
            let am = self.mul(&m);
            let k_scalar = self.sample().from_int_like(k as i64);
            c = am.trace().neg().mul(&k_scalar.inv().unwrap());
            coeffs[n - k] = c.clone();
        }
        coeffs
    }

    pub fn is_nilpotent(&self) -> bool {
        assert!(self.is_square());
        self.pow(self.rows as u64).is_zero()
    }

    /// Horizontal concatenation.
    pub fn hcat(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        Matrix::from_fn(self.rows, self.cols + other.cols, |r, c| {
            if c < self.cols {
                self.at(r, c).clone()
            } else {
                other.at(r, c - self.cols).clone()
            }
        })
    }

    /// Vertical concatenation.
    pub fn vcat(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        Matrix::from_fn(self.rows + other.rows, self.cols, |r, c| {
            if r < self.rows {
                self.at(r, c).clone()
            } else {
                other.at(r - self.rows, c).clone()
            }
        })
    }

    /// Evaluates the polynomial with the given coefficients (constant first)
    /// at this matrix.
    pub fn poly_eval(&self, coeffs: &[T]) -> Self {
        assert!(self.is_square());
        let n = self.rows;
        let mut acc = Matrix::zero_like(n, n, self.sample());
        for c in coeffs.iter().rev() {
            acc = self.mul(&acc);
            for i in 0..n {
                let v = acc.at(i, i).add(c);
                acc.set(i, i, v);
            }
        }
        acc
    }

    /// Monic minimal polynomial coefficients, constant term first: the first
    /// linear dependency among the successive powers of the matrix.
    pub fn min_poly(&self) -> Vec<T> {
        assert!(self.is_square());
        let mut powers: Vec<Vec<T>> = Vec::new();
        let mut cur = Matrix::identity_like(self.rows, self.sample());
        loop {
            let v = cur.vectorize();
            if !powers.is_empty() {
                let m = Matrix::from_cols(powers.clone()).unwrap();
                if let Some(x) = m.solve(&v) {
                    let mut coeffs: Vec<T> = x.iter().map(|c| c.neg()).collect();
                    coeffs.push(self.sample().one_like());
                    return coeffs;
                }
            }
            powers.push(v);
            cur = cur.mul(self);
        }
    }

    /// Block-diagonal join.
    pub fn block_diag(blocks: &[Self]) -> Self {
        assert!(!blocks.is_empty());
        let sample = blocks[0].sample();
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Matrix::zero_like(rows, cols, sample);
        let (mut ro, mut co) = (0usize, 0usize);
        for b in blocks {
            for r in 0..b.rows {
                for c in 0..b.cols {
                    out.set(ro + r, co + c, b.at(r, c).clone());
                }
            }
            ro += b.rows;
            co += b.cols;
        }
        out
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Matrix::from_fn(rows.len(), cols.len(), |r, c| {
            self.at(rows[r], cols[c]).clone()
        })
    }

    /// Kronecker product `self (x) other`.
    pub fn kronecker(&self, other: &Self) -> Self {
        Matrix::from_fn(
            self.rows * other.rows,
            self.cols * other.cols,
            |r, c| {
                let (r1, r2) = (r / other.rows, r % other.rows);
                let (c1, c2) = (c / other.cols, c % other.cols);
                self.at(r1, c1).mul(other.at(r2, c2))
            },
        )
    }

    /// Column-stacking vectorisation: vec(M) lists columns one after another.
    pub fn vectorize(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self.at(r, c).clone());
            }
        }
        out
    }

    pub fn from_vectorized(rows: usize, cols: usize, v: &[T]) -> Self {
        assert_eq!(rows * cols, v.len());
        Matrix::from_fn(rows, cols, |r, c| v[c * rows + r].clone())
    }
}

/// Do the given column vectors span a subspace containing `v`?
pub fn in_span<T: Scalar>(basis: &[Vec<T>], v: &[T]) -> bool {
    if basis.is_empty() {
        return v.iter().all(|x| x.is_zero());
    }
    let m = Matrix::from_cols(basis.to_vec()).expect("nonempty basis");
    m.solve(v).is_some()
}

/// Dimension of the span of the given column vectors.
pub fn span_rank<T: Scalar>(vectors: &[Vec<T>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    Matrix::from_cols(vectors.to_vec()).unwrap().rank()
}

/// Selects a maximal independent subset of `candidates` modulo the span of
/// `context`, in order; returns indices into `candidates`.
pub fn extend_basis<T: Scalar>(context: &[Vec<T>], candidates: &[Vec<T>]) -> Vec<usize> {
    let mut picked: Vec<Vec<T>> = context.to_vec();
    let mut idx = Vec::new();
    let base_rank = span_rank(&picked);
    let mut rank = base_rank;
    for (i, cand) in candidates.iter().enumerate() {
        picked.push(cand.clone());
        let new_rank = span_rank(&picked);
        if new_rank > rank {
            rank = new_rank;
            idx.push(i);
        } else {
            picked.pop();
        }
    }
    idx
}
