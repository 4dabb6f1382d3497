//! The s-ary index algebra over ℤⁿ_s.
//!
//! Index vectors are handled in two forms: [`SaryVector`] stores explicit
//! little-endian digits (digit `i` has weight `sⁱ`), while the hot paths use
//! the integer value `a = Σ aᵢ·sⁱ` together with an [`IndexSpace`] that knows
//! the digit weights. All index sets are returned in ascending integer order.

use std::fmt;

use crate::error::{Error, Result};

/// `δ(x)`: 1 when `x == 0`, otherwise 0.
#[inline]
pub fn delta(x: usize) -> u8 {
    u8::from(x == 0)
}

/// The shape of ℤⁿ_s: `n` digits, each in `[0, s)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSpace {
    n: usize,
    s: usize,
    weights: Vec<usize>,
    size: usize,
}

impl IndexSpace {
    pub fn new(n: usize, s: usize) -> Result<Self> {
        if n == 0 || s < 2 {
            return Err(Error::InvalidArgument(format!(
                "index space needs n >= 1 and s >= 2, got n={n}, s={s}"
            )));
        }
        let mut weights = Vec::with_capacity(n + 1);
        let mut w = 1usize;
        weights.push(w);
        for _ in 0..n {
            w = w
                .checked_mul(s)
                .ok_or_else(|| Error::InvalidArgument(format!("{s}^{n} overflows")))?;
            weights.push(w);
        }
        let size = weights.pop().unwrap_or(1);
        Ok(IndexSpace { n, s, weights, size })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// `sⁿ`.
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `sⁱ`.
    #[inline]
    pub fn weight(&self, i: usize) -> usize {
        self.weights[i]
    }

    #[inline]
    pub fn digit(&self, a: usize, i: usize) -> usize {
        (a / self.weights[i]) % self.s
    }

    /// Integer form of `𝒂(i, v)`. Arguments are trusted; see
    /// [`SaryVector::substitute`] for the checked variant.
    #[inline]
    pub fn substitute(&self, a: usize, i: usize, v: usize) -> usize {
        let w = self.weights[i];
        a - self.digit(a, i) * w + v * w
    }

    pub fn vector(&self, a: usize) -> Result<SaryVector> {
        SaryVector::from_index(a, self.n, self.s)
    }

    /// Position of `a ∈ V_i` within the ascending listing of `V_i`.
    #[inline]
    pub fn position_in_v_set(&self, a: usize, i: usize) -> usize {
        debug_assert_eq!(self.digit(a, i), 0);
        let w = self.weights[i];
        a % w + (a / (w * self.s)) * w
    }

    fn check_coordinate(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::OutOfRange(format!(
                "coordinate {i} not in [0, {})",
                self.n
            )));
        }
        Ok(())
    }

    /// `V_i = {𝒂 : aᵢ = 0}`, size `s^{n−1}`.
    pub fn v_set(&self, i: usize) -> Result<Vec<usize>> {
        self.check_coordinate(i)?;
        let w = self.weights[i];
        let block = w * self.s;
        let mut out = Vec::with_capacity(self.size / self.s);
        for hi in (0..self.size).step_by(block) {
            out.extend(hi..hi + w);
        }
        Ok(out)
    }

    /// `⋃_{i∈E} V_i`, size `s^{n−|E|}(s^{|E|} − (s−1)^{|E|})`.
    pub fn union_v_sets(&self, coords: &[usize]) -> Result<Vec<usize>> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument(
                "union of V-sets over an empty coordinate set".into(),
            ));
        }
        for &i in coords {
            self.check_coordinate(i)?;
        }
        Ok((0..self.size)
            .filter(|&a| coords.iter().any(|&i| self.digit(a, i) == 0))
            .collect())
    }

    /// Closed form for `|⋃_{i∈E} V_i|` with `|E| = m` distinct coordinates.
    pub fn union_size(&self, m: usize) -> usize {
        let s = self.s;
        s.pow((self.n - m) as u32) * (s.pow(m as u32) - (s - 1).pow(m as u32))
    }
}

/// An explicit element of ℤⁿ_s.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SaryVector {
    digits: Vec<usize>,
    s: usize,
}

impl SaryVector {
    pub fn from_digits(digits: Vec<usize>, s: usize) -> Result<Self> {
        if digits.is_empty() || s < 2 {
            return Err(Error::InvalidArgument(
                "s-ary vector needs at least one digit and s >= 2".into(),
            ));
        }
        if let Some(&d) = digits.iter().find(|&&d| d >= s) {
            return Err(Error::OutOfRange(format!("digit {d} not in [0, {s})")));
        }
        Ok(SaryVector { digits, s })
    }

    pub fn from_index(a: usize, n: usize, s: usize) -> Result<Self> {
        let space_size = s
            .checked_pow(n as u32)
            .ok_or_else(|| Error::InvalidArgument(format!("{s}^{n} overflows")))?;
        if a >= space_size {
            return Err(Error::OutOfRange(format!("index {a} not in [0, {space_size})")));
        }
        let mut digits = Vec::with_capacity(n);
        let mut rest = a;
        for _ in 0..n {
            digits.push(rest % s);
            rest /= s;
        }
        SaryVector::from_digits(digits, s)
    }

    pub fn digits(&self) -> &[usize] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn to_index(&self) -> usize {
        self.digits.iter().rev().fold(0, |acc, &d| acc * self.s + d)
    }

    /// `𝒂(i, v)`: this vector with digit `i` replaced by `v`.
    pub fn substitute(&self, i: usize, v: usize) -> Result<Self> {
        if i >= self.digits.len() {
            return Err(Error::OutOfRange(format!(
                "coordinate {i} not in [0, {})",
                self.digits.len()
            )));
        }
        if v >= self.s {
            return Err(Error::OutOfRange(format!("digit {v} not in [0, {})", self.s)));
        }
        let mut digits = self.digits.clone();
        digits[i] = v;
        Ok(SaryVector { digits, s: self.s })
    }
}

impl fmt::Display for SaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

/// A plane `b ∈ [1, planes]`, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaneIndex(usize);

impl PlaneIndex {
    pub fn new(b: usize, planes: usize) -> Result<Self> {
        if b == 0 || b > planes {
            return Err(Error::OutOfRange(format!("plane {b} not in [1, {planes}]")));
        }
        Ok(PlaneIndex(b))
    }

    pub fn get(self) -> usize {
        self.0
    }
}
