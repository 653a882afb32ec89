//! Exact linear algebra over prime fields F_q.
//!
//! Everything here is integer arithmetic reduced mod q: no floating point,
//! no numerical tolerance. Matrices are dense and row-major; the sizes this
//! crate works with are tiny (a few thousand entries at most), so there is
//! no sparse path.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A prime field F_q. Construction verifies primality by trial division.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeField {
    q: u64,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self> {
        // Keep q < 2^31 so products of two reduced elements fit in u64.
        if !(2..=(1 << 31)).contains(&q) {
            return Err(Error::ModulusOutOfRange(q));
        }
        if !is_prime(q) {
            return Err(Error::CompositeModulus(q));
        }
        Ok(PrimeField { q })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn elem(&self, value: u64) -> FieldElem {
        FieldElem {
            value: value % self.q,
            field: *self,
        }
    }

    pub fn zero(&self) -> FieldElem {
        self.elem(0)
    }

    pub fn one(&self) -> FieldElem {
        self.elem(1)
    }

    pub(crate) fn add_raw(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.q
    }

    pub(crate) fn sub_raw(&self, a: u64, b: u64) -> u64 {
        (a + self.q - b) % self.q
    }

    pub(crate) fn mul_raw(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.q
    }

    pub(crate) fn neg_raw(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    /// Returns `None` for zero.
    pub(crate) fn inv_raw(&self, a: u64) -> Option<u64> {
        if a == 0 {
            return None;
        }
        let (mut r0, mut r1) = (self.q as i64, (a % self.q) as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        debug_assert_eq!(r0, 1, "q prime, so any nonzero element is invertible");
        Some(t0.rem_euclid(self.q as i64) as u64)
    }

    /// A uniformly random element.
    pub fn random_elem<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElem {
        self.elem(rng.random_range(0..self.q))
    }
}

/// An element of a prime field, always reduced to `[0, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElem {
    value: u64,
    field: PrimeField,
}

impl FieldElem {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn inv(&self) -> Option<FieldElem> {
        self.field.inv_raw(self.value).map(|v| self.field.elem(v))
    }
}

macro_rules! elem_binop {
    ($trait:ident, $method:ident, $raw:ident) => {
        impl std::ops::$trait for FieldElem {
            type Output = FieldElem;
            fn $method(self, rhs: FieldElem) -> FieldElem {
                assert_eq!(self.field, rhs.field, "elements from different fields");
                FieldElem {
                    value: self.field.$raw(self.value, rhs.value),
                    field: self.field,
                }
            }
        }
    };
}

elem_binop!(Add, add, add_raw);
elem_binop!(Sub, sub, sub_raw);
elem_binop!(Mul, mul, mul_raw);

impl std::ops::Neg for FieldElem {
    type Output = FieldElem;
    fn neg(self) -> FieldElem {
        FieldElem {
            value: self.field.neg_raw(self.value),
            field: self.field,
        }
    }
}

/// A vector over F_q. Entries stay reduced mod q.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldVector {
    field: PrimeField,
    entries: Vec<u64>,
}

impl FieldVector {
    pub fn new(field: PrimeField, entries: Vec<u64>) -> Self {
        let q = field.q();
        FieldVector {
            field,
            entries: entries.into_iter().map(|v| v % q).collect(),
        }
    }

    pub fn zeros(field: PrimeField, dim: usize) -> Self {
        FieldVector {
            field,
            entries: vec![0; dim],
        }
    }

    /// Canonical basis vector e_i (0-indexed).
    pub fn basis(field: PrimeField, dim: usize, i: usize) -> Self {
        assert!(i < dim);
        let mut entries = vec![0; dim];
        entries[i] = 1;
        FieldVector { field, entries }
    }

    pub fn random<R: Rng + ?Sized>(field: PrimeField, dim: usize, rng: &mut R) -> Self {
        let q = field.q();
        FieldVector {
            field,
            entries: (0..dim).map(|_| rng.random_range(0..q)).collect(),
        }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> u64 {
        self.entries[i]
    }

    pub fn elem(&self, i: usize) -> FieldElem {
        self.field.elem(self.entries[i])
    }

    pub fn set(&mut self, i: usize, value: u64) {
        self.entries[i] = value % self.field.q();
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0)
    }

    /// Number of nonzero coordinates.
    pub fn weight(&self) -> usize {
        self.entries.iter().filter(|&&v| v != 0).count()
    }

    pub fn dot(&self, other: &FieldVector) -> Result<FieldElem> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "dot of vectors with dims {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        assert_eq!(self.field, other.field, "vectors from different fields");
        let f = self.field;
        let mut acc = 0u64;
        for (&a, &b) in self.entries.iter().zip(&other.entries) {
            acc = f.add_raw(acc, f.mul_raw(a, b));
        }
        Ok(f.elem(acc))
    }

    /// Restriction to the given coordinate indices, in order.
    pub fn select(&self, indices: &[usize]) -> FieldVector {
        FieldVector {
            field: self.field,
            entries: indices.iter().map(|&i| self.entries[i]).collect(),
        }
    }
}

/// A dense matrix over F_q, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl FieldMatrix {
    pub fn new(field: PrimeField, rows: usize, cols: usize, data: Vec<u64>) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        assert_eq!(data.len(), rows * cols);
        let q = field.q();
        FieldMatrix {
            field,
            rows,
            cols,
            data: data.into_iter().map(|v| v % q).collect(),
        }
    }

    pub fn from_rows(field: PrimeField, rows: &[Vec<u64>]) -> Self {
        assert!(!rows.is_empty());
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols));
        Self::new(field, rows.len(), cols, rows.concat())
    }

    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1);
        FieldMatrix {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Matrix with entries drawn i.i.d. uniform on `[0, q)`, filled row-major.
    pub fn random<R: Rng + ?Sized>(
        field: PrimeField,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> Self {
        assert!(rows >= 1 && cols >= 1);
        let q = field.q();
        FieldMatrix {
            field,
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.random_range(0..q)).collect(),
        }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: u64) {
        self.data[r * self.cols + c] = value % self.field.q();
    }

    pub fn row(&self, r: usize) -> FieldVector {
        FieldVector {
            field: self.field,
            entries: self.data[r * self.cols..(r + 1) * self.cols].to_vec(),
        }
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut data = vec![0; self.rows * self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                data[c * self.rows + r] = self.at(r, c);
            }
        }
        FieldMatrix {
            field: self.field,
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// New matrix keeping only the given columns, in order.
    pub fn select_cols(&self, indices: &[usize]) -> FieldMatrix {
        assert!(!indices.is_empty());
        let mut data = Vec::with_capacity(self.rows * indices.len());
        for r in 0..self.rows {
            for &c in indices {
                data.push(self.at(r, c));
            }
        }
        FieldMatrix {
            field: self.field,
            rows: self.rows,
            cols: indices.len(),
            data,
        }
    }

    /// The matrix with `v` appended as an extra row.
    pub fn stack_row(&self, v: &FieldVector) -> Result<FieldMatrix> {
        if v.dim() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "stacking a row of dim {} onto a matrix with {} columns",
                v.dim(),
                self.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(v.entries());
        Ok(FieldMatrix {
            field: self.field,
            rows: self.rows + 1,
            cols: self.cols,
            data,
        })
    }

    pub fn mul_vec(&self, v: &FieldVector) -> Result<FieldVector> {
        if v.dim() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix with {} columns times vector of dim {}",
                self.cols,
                v.dim()
            )));
        }
        let f = self.field;
        let entries = (0..self.rows)
            .map(|r| {
                let mut acc = 0u64;
                for c in 0..self.cols {
                    acc = f.add_raw(acc, f.mul_raw(self.at(r, c), v.get(c)));
                }
                acc
            })
            .collect();
        Ok(FieldVector {
            field: f,
            entries,
        })
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn scale_row(&mut self, r: usize, factor: u64) {
        let f = self.field;
        for c in 0..self.cols {
            let idx = r * self.cols + c;
            self.data[idx] = f.mul_raw(self.data[idx], factor);
        }
    }

    /// row[dst] -= factor * row[src]
    fn row_sub_scaled(&mut self, dst: usize, src: usize, factor: u64) {
        let f = self.field;
        for c in 0..self.cols {
            let s = f.mul_raw(self.data[src * self.cols + c], factor);
            let idx = dst * self.cols + c;
            self.data[idx] = f.sub_raw(self.data[idx], s);
        }
    }

    /// Reduced row echelon form, computed by Gaussian elimination with
    /// modular inverses. Entries never leave `[0, q)`.
    pub fn rref(&self) -> Echelon {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| m.at(i, c) != 0) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m
                .field
                .inv_raw(m.at(r, c))
                .expect("pivot is nonzero by choice");
            m.scale_row(r, inv);
            for i in 0..m.rows {
                if i != r {
                    let factor = m.at(i, c);
                    if factor != 0 {
                        m.row_sub_scaled(i, r, factor);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        debug_assert!(m.data.iter().all(|&v| v < m.field.q()));
        Echelon { mat: m, pivots }
    }

    /// Rank over F_q.
    pub fn rank(&self) -> usize {
        self.rref().pivots.len()
    }

    /// A basis of the right null space `{v : M v = 0}`, of size
    /// `cols - rank`.
    pub fn null_space_basis(&self) -> Vec<FieldVector> {
        let ech = self.rref();
        let pivot_set: std::collections::HashSet<usize> = ech.pivots.iter().copied().collect();
        let f = self.field;
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = FieldVector::zeros(f, self.cols);
            v.set(free, 1);
            for (i, &p) in ech.pivots.iter().enumerate() {
                v.set(p, f.neg_raw(ech.mat.at(i, free)));
            }
            basis.push(v);
        }
        basis
    }

    /// One solution of `M v = y`, or `None` if the system is inconsistent.
    /// Free coordinates are set to zero; the full solution set is this
    /// vector plus the null space.
    pub fn solve_particular(&self, y: &FieldVector) -> Option<FieldVector> {
        assert_eq!(
            y.dim(),
            self.rows,
            "right-hand side must match the row count"
        );
        let mut aug = FieldMatrix::zeros(self.field, self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.at(r, c));
            }
            aug.set(r, self.cols, y.get(r));
        }
        let ech = aug.rref();
        if ech.pivots.contains(&self.cols) {
            return None;
        }
        let mut v = FieldVector::zeros(self.field, self.cols);
        for (i, &p) in ech.pivots.iter().enumerate() {
            v.set(p, ech.mat.at(i, self.cols));
        }
        Some(v)
    }

    /// Whether `v` lies in the row span: rank([M; v]) == rank(M).
    pub fn in_row_span(&self, v: &FieldVector) -> Result<bool> {
        let stacked = self.stack_row(v)?;
        Ok(stacked.rank() == self.rank())
    }
}

/// Result of Gaussian elimination: the reduced matrix plus pivot columns.
pub struct Echelon {
    pub mat: FieldMatrix,
    pub pivots: Vec<usize>,
}

/// Visit every `rows x cols` matrix over `field`, in odometer order.
/// Intended for brute-force oracles at tiny sizes.
pub fn enumerate_matrices<F: FnMut(&FieldMatrix)>(
    field: PrimeField,
    rows: usize,
    cols: usize,
    mut f: F,
) {
    let q = field.q();
    let cells = rows * cols;
    let total = (q as u128).pow(cells as u32);
    assert!(total <= 1 << 40, "enumeration too large");
    let mut data = vec![0u64; cells];
    let mut m = FieldMatrix::new(field, rows, cols, data.clone());
    let mut count: u128 = 0;
    loop {
        m.data.copy_from_slice(&data);
        f(&m);
        count += 1;
        if count == total {
            break;
        }
        // increment base-q odometer
        for cell in data.iter_mut() {
            *cell += 1;
            if *cell == q {
                *cell = 0;
            } else {
                break;
            }
        }
    }
}

/// Visit every vector of the given dimension over `field`.
pub fn enumerate_vectors<F: FnMut(&FieldVector)>(field: PrimeField, dim: usize, mut f: F) {
    enumerate_matrices(field, 1, dim, |m| f(&m.row(0)));
}
