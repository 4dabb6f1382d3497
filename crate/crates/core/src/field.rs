//! Prime-field arithmetic and dense linear algebra over 𝔽_p.
//!
//! Every symbol of the code lives in a [`PrimeField`]. Elements are plain
//! reduced residues; the field context carries the modulus and performs all
//! arithmetic. The modulus is bounded by 2¹⁶ so that symbols serialize into
//! two bytes.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported modulus (exclusive).
pub const MODULUS_LIMIT: u64 = 1 << 16;

/// A residue in `[0, p)` for the field it was created by.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn value(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Trial-division primality test; moduli are at most 16 bits.
pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p < 4 {
        return true;
    }
    if p.is_multiple_of(2) {
        return false;
    }
    let mut q = 3;
    while q * q <= p {
        if p.is_multiple_of(q) {
            return false;
        }
        q += 2;
    }
    true
}

/// Smallest prime `>= lower`, if one exists below [`MODULUS_LIMIT`].
pub fn smallest_prime_at_least(lower: u64) -> Option<u32> {
    (lower.max(2)..MODULUS_LIMIT)
        .find(|&q| is_prime(q))
        .map(|q| q as u32)
}

/// The field 𝔽_p. Immutable and `Copy`, so it can be shared freely.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u32,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if !(2..MODULUS_LIMIT).contains(&p) {
            return Err(Error::ModulusOutOfRange(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(PrimeField { p: p as u32 })
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.p
    }

    /// Wraps an already-reduced value. Unreduced input is rejected, never
    /// silently normalized.
    pub fn element(&self, value: u64) -> Result<FieldElement> {
        if value >= self.p as u64 {
            return Err(Error::Unreduced {
                value,
                modulus: self.p,
            });
        }
        Ok(FieldElement(value as u32))
    }

    /// Explicit embedding of an integer into the field (`value mod p`).
    #[inline]
    pub fn reduce(&self, value: u64) -> FieldElement {
        FieldElement((value % self.p as u64) as u32)
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let s = a.0 + b.0;
        FieldElement(if s >= self.p { s - self.p } else { s })
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(if a.0 >= b.0 {
            a.0 - b.0
        } else {
            a.0 + self.p - b.0
        })
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if a.0 == 0 {
            a
        } else {
            FieldElement(self.p - a.0)
        }
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(((a.0 as u64 * b.0 as u64) % self.p as u64) as u32)
    }

    /// `acc + a·b`
    #[inline]
    pub fn mul_add(&self, acc: FieldElement, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(((acc.0 as u64 + a.0 as u64 * b.0 as u64) % self.p as u64) as u32)
    }

    pub fn pow(&self, base: FieldElement, mut exp: u64) -> FieldElement {
        let mut acc = FieldElement::ONE;
        let mut sq = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, sq);
            }
            sq = self.mul(sq, sq);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(a, self.p as u64 - 2))
    }

    pub fn dot(&self, a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
        let p = self.p as u64;
        // Products are below 2^32; reduce before the accumulator can overflow.
        let mut acc = 0u64;
        for (x, y) in a.iter().zip(b) {
            acc += x.0 as u64 * y.0 as u64;
            if acc >= 1 << 63 {
                acc %= p;
            }
        }
        FieldElement((acc % p) as u32)
    }
}

/// Dense row-major matrix of field elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![FieldElement::ZERO; rows * cols],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Matrix::zeros(size, size);
        for i in 0..size {
            m.set(i, i, FieldElement::ONE);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<FieldElement>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let nrows = rows.len();
        Ok(Matrix {
            rows: nrows,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
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
    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn mul_vec(&self, field: &PrimeField, x: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|r| field.dot(self.row(r), x)).collect())
    }

    pub fn mul(&self, field: &PrimeField, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let v = field.mul_add(out.get(r, c), a, other.get(k, c));
                    out.set(r, c, v);
                }
            }
        }
        Ok(out)
    }

    /// Submatrix formed by the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                out.set(r, j, self.get(r, c));
            }
        }
        out
    }
}

/// Vandermonde matrix with entry `(t, j) = points[j]^t` for `t < rows`.
pub fn vandermonde(field: &PrimeField, points: &[FieldElement], rows: usize) -> Result<Matrix> {
    if rows == 0 {
        return Err(Error::Dimension("vandermonde matrix needs at least one row".into()));
    }
    for (i, a) in points.iter().enumerate() {
        if points[..i].contains(a) {
            return Err(Error::DuplicatePoints);
        }
    }
    let mut m = Matrix::zeros(rows, points.len());
    for (j, &x) in points.iter().enumerate() {
        let mut acc = FieldElement::ONE;
        for t in 0..rows {
            m.set(t, j, acc);
            acc = field.mul(acc, x);
        }
    }
    Ok(m)
}

/// Gauss-Jordan factorization of an `m × n` matrix with `m >= n` and full
/// column rank.
///
/// Stores the row transform `T` with `T·A = [I_n; 0]`, so a right-hand side
/// `y` is solved by computing `T·y`: the first `n` entries are the solution
/// and the remaining `m − n` must vanish for the system to be consistent.
/// Pivoting takes the first nonzero entry at or below the diagonal.
#[derive(Clone, Debug)]
pub struct Elimination {
    field: PrimeField,
    cols: usize,
    transform: Matrix,
}

impl Elimination {
    pub fn new(field: &PrimeField, a: &Matrix) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if m < n {
            return Err(Error::Dimension(format!(
                "underdetermined system: {m} equations, {n} unknowns"
            )));
        }
        let mut work = a.clone();
        let mut transform = Matrix::identity(m);
        for col in 0..n {
            let pivot = (col..m)
                .find(|&r| !work.get(r, col).is_zero())
                .ok_or(Error::Singular)?;
            work.swap_rows(col, pivot);
            transform.swap_rows(col, pivot);
            let scale = field.inv(work.get(col, col))?;
            for c in 0..n {
                work.set(col, c, field.mul(work.get(col, c), scale));
            }
            for c in 0..m {
                transform.set(col, c, field.mul(transform.get(col, c), scale));
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let factor = work.get(r, col);
                if factor.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = field.sub(work.get(r, c), field.mul(factor, work.get(col, c)));
                    work.set(r, c, v);
                }
                for c in 0..m {
                    let v = field.sub(
                        transform.get(r, c),
                        field.mul(factor, transform.get(col, c)),
                    );
                    transform.set(r, c, v);
                }
            }
        }
        Ok(Elimination {
            field: *field,
            cols: n,
            transform,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.cols
    }

    pub fn equations(&self) -> usize {
        self.transform.rows()
    }

    pub fn solve(&self, y: &[FieldElement]) -> Result<Vec<FieldElement>> {
        let mut z = self.transform.mul_vec(&self.field, y)?;
        if z[self.cols..].iter().any(|v| !v.is_zero()) {
            return Err(Error::Inconsistent);
        }
        z.truncate(self.cols);
        Ok(z)
    }
}

/// Solves the square system `A·x = y`; a singular `A` is an error.
pub fn solve_square(
    field: &PrimeField,
    a: &Matrix,
    y: &[FieldElement],
) -> Result<Vec<FieldElement>> {
    if a.rows() != a.cols() || a.rows() == 0 {
        return Err(Error::Dimension(format!(
            "expected a non-empty square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if y.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "right-hand side has length {}, expected {}",
            y.len(),
            a.rows()
        )));
    }
    Elimination::new(field, a)?.solve(y)
}

pub fn inverse(field: &PrimeField, a: &Matrix) -> Result<Matrix> {
    if a.rows() != a.cols() {
        return Err(Error::Dimension("inverse of a non-square matrix".into()));
    }
    Ok(Elimination::new(field, a)?.transform)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn els(field: &PrimeField, v: &[u64]) -> Vec<FieldElement> {
        v.iter().map(|&x| field.element(x).unwrap()).collect()
    }

    #[test]
    fn small_arithmetic() {
        let f5 = f(5);
        let e = |v| f5.element(v).unwrap();
        assert_eq!(f5.mul(e(3), e(4)), e(2));
        assert_eq!(f5.inv(e(2)).unwrap(), e(3));
        let f7 = f(7);
        assert_eq!(f7.add(f7.element(6).unwrap(), FieldElement::ONE).value(), 0);
    }

    #[test]
    fn rejects_bad_moduli_and_values() {
        assert_eq!(PrimeField::new(12), Err(Error::NotPrime(12)));
        assert_eq!(PrimeField::new(1), Err(Error::ModulusOutOfRange(1)));
        assert_eq!(PrimeField::new(65537), Err(Error::ModulusOutOfRange(65537)));
        assert!(PrimeField::new(65521).is_ok());
        assert!(matches!(f(5).element(5), Err(Error::Unreduced { .. })));
        assert_eq!(f(5).inv(FieldElement::ZERO), Err(Error::ZeroInverse));
    }

    #[test]
    fn smallest_primes() {
        assert_eq!(smallest_prime_at_least(0), Some(2));
        assert_eq!(smallest_prime_at_least(5), Some(5));
        assert_eq!(smallest_prime_at_least(8), Some(11));
        assert_eq!(smallest_prime_at_least(256), Some(257));
        assert_eq!(smallest_prime_at_least(65522), None);
    }

    #[test]
    fn field_axioms_exhaustive_small_primes() {
        for p in [2u64, 3, 5, 7, 11, 13] {
            let fp = f(p);
            let all: Vec<_> = (0..p).map(|v| fp.element(v).unwrap()).collect();
            for &a in &all {
                if !a.is_zero() {
                    assert_eq!(fp.mul(a, fp.inv(a).unwrap()), FieldElement::ONE);
                }
                assert_eq!(fp.add(a, fp.neg(a)), FieldElement::ZERO);
                for &b in &all {
                    assert_eq!(fp.add(a, b), fp.add(b, a));
                    assert_eq!(fp.mul(a, b), fp.mul(b, a));
                    assert_eq!(fp.sub(fp.add(a, b), b), a);
                    for &c in &all {
                        assert_eq!(fp.add(fp.add(a, b), c), fp.add(a, fp.add(b, c)));
                        assert_eq!(fp.mul(fp.mul(a, b), c), fp.mul(a, fp.mul(b, c)));
                        assert_eq!(
                            fp.mul(a, fp.add(b, c)),
                            fp.add(fp.mul(a, b), fp.mul(a, c))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn solve_examples() {
        let f5 = f(5);
        let a = Matrix::from_rows(vec![els(&f5, &[1, 1]), els(&f5, &[1, 2])]).unwrap();
        assert_eq!(
            solve_square(&f5, &a, &els(&f5, &[0, 1])).unwrap(),
            els(&f5, &[4, 1])
        );
        let y = els(&f5, &[3, 1, 4]);
        assert_eq!(solve_square(&f5, &Matrix::identity(3), &y).unwrap(), y);
    }

    #[test]
    fn singular_is_an_error() {
        let f5 = f(5);
        let a = Matrix::from_rows(vec![els(&f5, &[1, 2]), els(&f5, &[2, 4])]).unwrap();
        assert_eq!(
            solve_square(&f5, &a, &els(&f5, &[0, 0])),
            Err(Error::Singular)
        );
    }

    #[test]
    fn overdetermined_consistency() {
        let f7 = f(7);
        // x = 2, y = 3 plus a third consistent equation x + y = 5.
        let a = Matrix::from_rows(vec![els(&f7, &[1, 0]), els(&f7, &[0, 1]), els(&f7, &[1, 1])])
            .unwrap();
        let e = Elimination::new(&f7, &a).unwrap();
        assert_eq!(e.solve(&els(&f7, &[2, 3, 5])).unwrap(), els(&f7, &[2, 3]));
        assert_eq!(e.solve(&els(&f7, &[2, 3, 6])), Err(Error::Inconsistent));
    }

    #[test]
    fn random_invertible_8x8_over_f11() {
        let f11 = f(11);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut solved = 0;
        while solved < 20 {
            let rows: Vec<Vec<_>> = (0..8)
                .map(|_| (0..8).map(|_| f11.reduce(rng.gen_range(0..11))).collect())
                .collect();
            let a = Matrix::from_rows(rows).unwrap();
            let y: Vec<_> = (0..8).map(|_| f11.reduce(rng.gen_range(0..11))).collect();
            match solve_square(&f11, &a, &y) {
                Ok(x) => {
                    assert_eq!(a.mul_vec(&f11, &x).unwrap(), y);
                    let inv = inverse(&f11, &a).unwrap();
                    assert_eq!(inv.mul(&f11, &a).unwrap(), Matrix::identity(8));
                    solved += 1;
                }
                Err(Error::Singular) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn vandermonde_examples() {
        let f5 = f(5);
        let v = vandermonde(&f5, &els(&f5, &[3]), 1).unwrap();
        assert_eq!(v, Matrix::from_rows(vec![els(&f5, &[1])]).unwrap());
        let v = vandermonde(&f5, &els(&f5, &[1, 2, 3]), 2).unwrap();
        assert_eq!(
            v,
            Matrix::from_rows(vec![els(&f5, &[1, 1, 1]), els(&f5, &[1, 2, 3])]).unwrap()
        );
        assert_eq!(
            vandermonde(&f5, &els(&f5, &[1, 2, 1]), 2),
            Err(Error::DuplicatePoints)
        );
    }

    fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
        if r == 0 {
            return vec![vec![]];
        }
        if n < r {
            return vec![];
        }
        let mut out = subsets(n - 1, r);
        for mut s in subsets(n - 1, r - 1) {
            s.push(n - 1);
            out.push(s);
        }
        out
    }

    #[test]
    fn vandermonde_square_submatrices_invertible() {
        for p in [5u64, 7, 11, 13] {
            let fp = f(p);
            let points: Vec<_> = (0..p).map(|v| fp.element(v).unwrap()).collect();
            for r in 1..=4usize {
                let rows = vandermonde(&fp, &points, r).unwrap();
                for cols in subsets(p as usize, r) {
                    let sub = rows.select_columns(&cols);
                    assert!(Elimination::new(&fp, &sub).is_ok(), "p={p} cols={cols:?}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn solve_then_multiply_reproduces_rhs(
            seed in any::<u64>(),
            size in 1usize..7,
        ) {
            let fp = f(13);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<_>> = (0..size)
                .map(|_| (0..size).map(|_| fp.reduce(rng.gen_range(0..13))).collect())
                .collect();
            let a = Matrix::from_rows(rows).unwrap();
            let y: Vec<_> = (0..size).map(|_| fp.reduce(rng.gen_range(0..13))).collect();
            if let Ok(x) = solve_square(&fp, &a, &y) {
                prop_assert_eq!(a.mul_vec(&fp, &x).unwrap(), y);
            }
        }
    }
}
