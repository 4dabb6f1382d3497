//! The parity-check array code: parameters, systematic encoding and MDS
//! erasure decoding.
//!
//! Node `i` stores `N = (d−k+h)·sⁿ` symbols `c_{i,b,𝒂}` for planes
//! `b ∈ [1, d−k+h]` and `𝒂 ∈ ℤⁿ_s`. A codeword satisfies the following
//! for every `t ∈ [0, r)` at every position `(b, 𝒂)`:
//!
//! ```text
//! Σ_i λ_iᵗ c_{i,b,𝒂} + Σ_i δ(a_i) Σ_{e=1}^{s−1} μ_eᵗ c_{i,b,𝒂(i,e)} = 0.
//! ```
//!
//! The checks never mix planes, and they only couple `𝒂` with `𝒂(i,e)`.
//! Decoding a set `E` of erased columns therefore splits into independent
//! blocks: per plane and per assignment of the digits outside `E`, the
//! unknowns `c_{j,b,𝒂}` (`j ∈ E`, `𝒂` ranging over the `E`-digits) form a
//! closed system of `r·s^{|E|}` equations in `|E|·s^{|E|}` unknowns whose
//! coefficient matrix is the same for every block. It is factored once.

use crate::error::{Error, Result};
use crate::field::{smallest_prime_at_least, Elimination, FieldElement, Matrix, PrimeField};
use crate::indexing::IndexSpace;

/// Unvalidated parameters as supplied by a caller or a config file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParamSpec {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub h: usize,
    /// Field modulus; defaults to the smallest prime `>= n+s−1`.
    pub modulus: Option<u64>,
    /// `λ_0..λ_{n−1}`; defaults to `λ_i = i`.
    pub lambdas: Option<Vec<u64>>,
    /// `μ_1..μ_{s−1}`; defaults to `μ_e = n−1+e`.
    pub mus: Option<Vec<u64>>,
}

impl ParamSpec {
    pub fn new(n: usize, k: usize, d: usize, h: usize) -> Self {
        ParamSpec {
            n,
            k,
            d,
            h,
            ..Default::default()
        }
    }

    pub fn with_modulus(mut self, p: u64) -> Self {
        self.modulus = Some(p);
        self
    }

    pub fn validate(&self) -> Result<CodeParams> {
        validate_params(self)
    }
}

/// Validated code parameters with precomputed power tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeParams {
    n: usize,
    k: usize,
    d: usize,
    h: usize,
    r: usize,
    s: usize,
    planes: usize,
    sub_packetization: usize,
    space: IndexSpace,
    field: PrimeField,
    lambdas: Vec<FieldElement>,
    mus: Vec<FieldElement>,
    /// `lambda_pow[i][t] = λ_iᵗ`
    lambda_pow: Vec<Vec<FieldElement>>,
    /// `mu_pow[e−1][t] = μ_eᵗ`
    mu_pow: Vec<Vec<FieldElement>>,
}

fn invalid(msg: String) -> Error {
    Error::InvalidParams(msg)
}

/// Checks `k < d ≤ n−1` and `1 ≤ h ≤ n−d`. The field must also hold
/// `n+s−1` distinct evaluation points.
pub fn validate_params(spec: &ParamSpec) -> Result<CodeParams> {
    let ParamSpec { n, k, d, h, .. } = *spec;
    if k == 0 {
        return Err(invalid("k >= 1 required".into()));
    }
    if k >= n {
        return Err(invalid(format!("k < n required (k={k}, n={n})")));
    }
    if d <= k {
        return Err(invalid(format!("k < d required (k={k}, d={d})")));
    }
    if d > n - 1 {
        return Err(invalid(format!("d <= n-1 required (d={d}, n={n})")));
    }
    if h == 0 || h > n - d {
        return Err(invalid(format!(
            "1 <= h <= n-d required (h={h}, n-d={})",
            n - d
        )));
    }
    let r = n - k;
    let s = d - k + 1;
    let planes = d - k + h;
    let space = IndexSpace::new(n, s).map_err(|e| invalid(e.to_string()))?;
    let sub_packetization = planes
        .checked_mul(space.len())
        .ok_or_else(|| invalid("sub-packetization overflows".into()))?;
    let points_needed = (n + s - 1) as u64;

    let modulus = match spec.modulus {
        Some(p) => p,
        None => smallest_prime_at_least(points_needed)
            .ok_or_else(|| invalid(format!("no supported prime >= {points_needed}")))?
            .into(),
    };
    let field = PrimeField::new(modulus).map_err(|e| invalid(e.to_string()))?;
    if modulus < points_needed {
        return Err(invalid(format!(
            "field size {modulus} below n+s-1 = {points_needed}"
        )));
    }

    let lambdas_raw: Vec<u64> = match &spec.lambdas {
        Some(l) => l.clone(),
        None => (0..n as u64).collect(),
    };
    let mus_raw: Vec<u64> = match &spec.mus {
        Some(m) => m.clone(),
        None => (1..s as u64).map(|e| n as u64 - 1 + e).collect(),
    };
    if lambdas_raw.len() != n {
        return Err(invalid(format!(
            "{} lambdas supplied, n = {n} required",
            lambdas_raw.len()
        )));
    }
    if mus_raw.len() != s - 1 {
        return Err(invalid(format!(
            "{} mus supplied, s-1 = {} required",
            mus_raw.len(),
            s - 1
        )));
    }
    let to_elements = |raw: &[u64]| -> Result<Vec<FieldElement>> {
        raw.iter()
            .map(|&v| field.element(v).map_err(|e| invalid(e.to_string())))
            .collect()
    };
    let lambdas = to_elements(&lambdas_raw)?;
    let mus = to_elements(&mus_raw)?;
    let mut all: Vec<_> = lambdas.iter().chain(&mus).copied().collect();
    all.sort();
    if all.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("evaluation points are not pairwise distinct".into()));
    }

    let powers = |x: FieldElement| -> Vec<FieldElement> {
        let mut acc = FieldElement::ONE;
        (0..r)
            .map(|_| {
                let cur = acc;
                acc = field.mul(acc, x);
                cur
            })
            .collect()
    };
    let lambda_pow = lambdas.iter().map(|&x| powers(x)).collect();
    let mu_pow = mus.iter().map(|&x| powers(x)).collect();

    Ok(CodeParams {
        n,
        k,
        d,
        h,
        r,
        s,
        planes,
        sub_packetization,
        space,
        field,
        lambdas,
        mus,
        lambda_pow,
        mu_pow,
    })
}

impl CodeParams {
    /// Parameters with the default field and evaluation points.
    pub fn new(n: usize, k: usize, d: usize, h: usize) -> Result<Self> {
        ParamSpec::new(n, k, d, h).validate()
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn h(&self) -> usize {
        self.h
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn s(&self) -> usize {
        self.s
    }
    /// Number of planes, `d−k+h`.
    pub fn planes(&self) -> usize {
        self.planes
    }
    /// `N`, the symbols stored per node.
    pub fn sub_packetization(&self) -> usize {
        self.sub_packetization
    }
    /// `sⁿ`, the symbols per plane.
    pub fn plane_len(&self) -> usize {
        self.space.len()
    }
    /// `kN`, the information symbols per codeword.
    pub fn message_len(&self) -> usize {
        self.k * self.sub_packetization
    }
    pub fn space(&self) -> &IndexSpace {
        &self.space
    }
    pub fn field(&self) -> &PrimeField {
        &self.field
    }
    pub fn lambdas(&self) -> &[FieldElement] {
        &self.lambdas
    }
    pub fn mus(&self) -> &[FieldElement] {
        &self.mus
    }
    /// `λ_iᵗ`
    #[inline]
    pub fn lambda_pow(&self, i: usize, t: usize) -> FieldElement {
        self.lambda_pow[i][t]
    }
    /// `μ_eᵗ` for `e ∈ [1, s−1]`
    #[inline]
    pub fn mu_pow(&self, e: usize, t: usize) -> FieldElement {
        self.mu_pow[e - 1][t]
    }

    /// Flat offset of `(b, 𝒂)` within a node column; `b` is 1-based.
    #[inline]
    pub fn symbol_offset(&self, b: usize, a: usize) -> usize {
        (b - 1) * self.space.len() + a
    }

    /// Inverse of [`CodeParams::symbol_offset`].
    #[inline]
    pub fn split_offset(&self, offset: usize) -> (usize, usize) {
        (offset / self.space.len() + 1, offset % self.space.len())
    }

    /// Original raw form, e.g. for persisting.
    pub fn spec(&self) -> ParamSpec {
        ParamSpec {
            n: self.n,
            k: self.k,
            d: self.d,
            h: self.h,
            modulus: Some(self.field.modulus().into()),
            lambdas: Some(self.lambdas.iter().map(|x| x.value().into()).collect()),
            mus: Some(self.mus.iter().map(|x| x.value().into()).collect()),
        }
    }
}

/// One node's column of `N` symbols, laid out plane-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeVector {
    pub node: usize,
    pub symbols: Vec<FieldElement>,
}

impl NodeVector {
    pub fn new(node: usize, symbols: Vec<FieldElement>) -> Self {
        NodeVector { node, symbols }
    }

    pub fn zeros(node: usize, params: &CodeParams) -> Self {
        NodeVector::new(node, vec![FieldElement::ZERO; params.sub_packetization()])
    }

    #[inline]
    pub fn get(&self, params: &CodeParams, b: usize, a: usize) -> FieldElement {
        self.symbols[params.symbol_offset(b, a)]
    }
}

/// An information word of `kN` symbols, ordered by systematic node, then
/// plane, then index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    symbols: Vec<FieldElement>,
}

impl Message {
    pub fn new(params: &CodeParams, symbols: Vec<FieldElement>) -> Result<Self> {
        if symbols.len() != params.message_len() {
            return Err(Error::Dimension(format!(
                "message has {} symbols, kN = {} required",
                symbols.len(),
                params.message_len()
            )));
        }
        Ok(Message { symbols })
    }

    pub fn symbols(&self) -> &[FieldElement] {
        &self.symbols
    }

    pub fn into_symbols(self) -> Vec<FieldElement> {
        self.symbols
    }
}

/// Evaluates one parity check on raw columns (indexed by node).
pub fn parity_residual_of(
    params: &CodeParams,
    columns: &[&[FieldElement]],
    t: usize,
    b: usize,
    a: usize,
) -> FieldElement {
    let f = params.field();
    let sp = params.space();
    let mut acc = FieldElement::ZERO;
    for (i, col) in columns.iter().enumerate() {
        acc = f.mul_add(acc, params.lambda_pow(i, t), col[params.symbol_offset(b, a)]);
        if sp.digit(a, i) == 0 {
            let w = sp.weight(i);
            for e in 1..params.s() {
                let off = params.symbol_offset(b, a + e * w);
                acc = f.mul_add(acc, params.mu_pow(e, t), col[off]);
            }
        }
    }
    acc
}

fn first_violation(params: &CodeParams, columns: &[&[FieldElement]]) -> Option<Error> {
    for b in 1..=params.planes() {
        for a in 0..params.plane_len() {
            for t in 0..params.r() {
                let v = parity_residual_of(params, columns, t, b, a);
                if !v.is_zero() {
                    return Some(Error::InconsistentCodeword {
                        t,
                        plane: b,
                        index: a,
                        value: v.value(),
                    });
                }
            }
        }
    }
    None
}

/// `n` node columns satisfying every parity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codeword {
    params: CodeParams,
    columns: Vec<NodeVector>,
}

impl Codeword {
    /// Builds a codeword from all `n` columns, rejecting any parity violation.
    pub fn from_columns(params: &CodeParams, columns: Vec<NodeVector>) -> Result<Self> {
        if columns.len() != params.n() {
            return Err(Error::Dimension(format!(
                "{} columns, n = {} required",
                columns.len(),
                params.n()
            )));
        }
        for (i, c) in columns.iter().enumerate() {
            if c.node != i {
                return Err(Error::InvalidArgument(format!(
                    "column {i} is labelled as node {}",
                    c.node
                )));
            }
            if c.symbols.len() != params.sub_packetization() {
                return Err(Error::Dimension(format!(
                    "node {i} has {} symbols, N = {} required",
                    c.symbols.len(),
                    params.sub_packetization()
                )));
            }
        }
        let cw = Codeword {
            params: params.clone(),
            columns,
        };
        cw.check()?;
        Ok(cw)
    }

    pub fn zero(params: &CodeParams) -> Self {
        Codeword {
            params: params.clone(),
            columns: (0..params.n()).map(|i| NodeVector::zeros(i, params)).collect(),
        }
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn columns(&self) -> &[NodeVector] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &NodeVector {
        &self.columns[i]
    }

    pub fn into_columns(self) -> Vec<NodeVector> {
        self.columns
    }

    /// `c_{i,b,𝒂}`
    pub fn symbol(&self, i: usize, b: usize, a: usize) -> FieldElement {
        self.columns[i].get(&self.params, b, a)
    }

    /// Left-hand side of the parity check `(t, b, 𝒂)`.
    pub fn parity_residual(&self, t: usize, b: usize, a: usize) -> FieldElement {
        let cols: Vec<&[FieldElement]> =
            self.columns.iter().map(|c| c.symbols.as_slice()).collect();
        parity_residual_of(&self.params, &cols, t, b, a)
    }

    /// Sweeps all `r·(d−k+h)·sⁿ` checks.
    pub fn check(&self) -> Result<()> {
        let cols: Vec<&[FieldElement]> =
            self.columns.iter().map(|c| c.symbols.as_slice()).collect();
        match first_violation(&self.params, &cols) {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Unchecked construction for tests that need a corrupted word.
    #[doc(hidden)]
    pub fn from_columns_unchecked(params: &CodeParams, columns: Vec<NodeVector>) -> Self {
        Codeword {
            params: params.clone(),
            columns,
        }
    }

    /// Systematic part: nodes `[0, k)` concatenated.
    pub fn message(&self) -> Message {
        let symbols = self.columns[..self.params.k()]
            .iter()
            .flat_map(|c| c.symbols.iter().copied())
            .collect();
        Message { symbols }
    }
}

/// Factored block system for a fixed set of erased columns.
///
/// One solver serves every codeword with the same erasure pattern, which is
/// what striped file encoding relies on.
#[derive(Clone, Debug)]
pub struct ErasureSolver {
    params: CodeParams,
    erased: Vec<usize>,
    known: Vec<usize>,
    /// `inner_offsets[ι]`: integer offset contributed by the `E`-digits of ι.
    inner_offsets: Vec<usize>,
    /// All `𝒂` whose `E`-digits are zero, ascending.
    outer_bases: Vec<usize>,
    elimination: Option<Elimination>,
}

impl ErasureSolver {
    pub fn new(params: &CodeParams, erased: &[usize]) -> Result<Self> {
        let n = params.n();
        let mut erased = erased.to_vec();
        erased.sort_unstable();
        for w in erased.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateNode(w[0]));
            }
        }
        if let Some(&bad) = erased.iter().find(|&&i| i >= n) {
            return Err(Error::OutOfRange(format!("node {bad} not in [0, {n})")));
        }
        if erased.len() > params.r() {
            return Err(Error::TooManyErasures {
                missing: erased.len(),
                max: params.r(),
            });
        }
        let known = (0..n).filter(|i| !erased.contains(i)).collect();
        let sp = params.space();
        let s = params.s();
        let m = erased.len();
        let inner = s.pow(m as u32);
        let inner_offsets: Vec<usize> = (0..inner)
            .map(|iota| {
                let mut rest = iota;
                let mut off = 0;
                for &j in &erased {
                    off += (rest % s) * sp.weight(j);
                    rest /= s;
                }
                off
            })
            .collect();
        let outer_bases = (0..sp.len())
            .filter(|&a| erased.iter().all(|&j| sp.digit(a, j) == 0))
            .collect();

        let elimination = if m == 0 {
            None
        } else {
            let f = params.field();
            let r = params.r();
            let mut a = Matrix::zeros(r * inner, m * inner);
            let inner_pow: Vec<usize> = (0..m).map(|q| s.pow(q as u32)).collect();
            for t in 0..r {
                for iota in 0..inner {
                    let row = t * inner + iota;
                    for (q, &j) in erased.iter().enumerate() {
                        let col = q * inner + iota;
                        a.set(row, col, f.add(a.get(row, col), params.lambda_pow(j, t)));
                        if (iota / inner_pow[q]).is_multiple_of(s) {
                            for e in 1..s {
                                let col = q * inner + iota + e * inner_pow[q];
                                a.set(row, col, f.add(a.get(row, col), params.mu_pow(e, t)));
                            }
                        }
                    }
                }
            }
            Some(Elimination::new(f, &a)?)
        };

        Ok(ErasureSolver {
            params: params.clone(),
            erased,
            known,
            inner_offsets,
            outer_bases,
            elimination,
        })
    }

    pub fn erased(&self) -> &[usize] {
        &self.erased
    }

    /// Fills the erased entries of `columns` (indexed by node, each of
    /// length `N`) from the known ones. Errors with
    /// [`Error::Inconsistent`] when the known columns admit no codeword.
    pub fn solve(&self, columns: &mut [Vec<FieldElement>]) -> Result<()> {
        let params = &self.params;
        let n = params.n();
        if columns.len() != n || columns.iter().any(|c| c.len() != params.sub_packetization()) {
            return Err(Error::Dimension(format!(
                "expected {n} columns of {} symbols",
                params.sub_packetization()
            )));
        }
        let Some(elim) = &self.elimination else {
            return Ok(());
        };
        let f = params.field();
        let sp = params.space();
        let s = params.s();
        let r = params.r();
        let inner = self.inner_offsets.len();
        let mut rhs = vec![FieldElement::ZERO; r * inner];
        for b in 1..=params.planes() {
            for &base in &self.outer_bases {
                for (iota, &off) in self.inner_offsets.iter().enumerate() {
                    let a = base + off;
                    for t in 0..r {
                        let mut acc = FieldElement::ZERO;
                        for &i in &self.known {
                            let col = &columns[i];
                            acc = f.mul_add(acc, params.lambda_pow(i, t), col[params.symbol_offset(b, a)]);
                            if sp.digit(a, i) == 0 {
                                let w = sp.weight(i);
                                for e in 1..s {
                                    acc = f.mul_add(
                                        acc,
                                        params.mu_pow(e, t),
                                        col[params.symbol_offset(b, a + e * w)],
                                    );
                                }
                            }
                        }
                        rhs[t * inner + iota] = f.neg(acc);
                    }
                }
                let x = elim.solve(&rhs)?;
                for (q, &j) in self.erased.iter().enumerate() {
                    for (iota, &off) in self.inner_offsets.iter().enumerate() {
                        columns[j][params.symbol_offset(b, base + off)] = x[q * inner + iota];
                    }
                }
            }
        }
        Ok(())
    }
}

/// Systematic encoder: nodes `[0, k)` carry the message verbatim.
#[derive(Clone, Debug)]
pub struct Encoder {
    solver: ErasureSolver,
}

impl Encoder {
    pub fn new(params: &CodeParams) -> Result<Self> {
        let parity: Vec<usize> = (params.k()..params.n()).collect();
        Ok(Encoder {
            solver: ErasureSolver::new(params, &parity)?,
        })
    }

    pub fn params(&self) -> &CodeParams {
        &self.solver.params
    }

    pub fn encode(&self, msg: &Message) -> Result<Codeword> {
        let params = &self.solver.params;
        let big_n = params.sub_packetization();
        let mut columns: Vec<Vec<FieldElement>> = msg
            .symbols()
            .chunks(big_n)
            .map(<[FieldElement]>::to_vec)
            .collect();
        columns.resize(params.n(), vec![FieldElement::ZERO; big_n]);
        self.solver.solve(&mut columns)?;
        let columns = columns
            .into_iter()
            .enumerate()
            .map(|(i, symbols)| NodeVector::new(i, symbols))
            .collect();
        let cw = Codeword::from_columns_unchecked(params, columns);
        debug_assert!(cw.check().is_ok());
        Ok(cw)
    }
}

pub fn encode(msg: &Message, params: &CodeParams) -> Result<Codeword> {
    Encoder::new(params)?.encode(msg)
}

fn check_column(params: &CodeParams, c: &NodeVector) -> Result<()> {
    if c.node >= params.n() {
        return Err(Error::OutOfRange(format!(
            "node {} not in [0, {})",
            c.node,
            params.n()
        )));
    }
    if c.symbols.len() != params.sub_packetization() {
        return Err(Error::Dimension(format!(
            "node {} has {} symbols, N = {} required",
            c.node,
            c.symbols.len(),
            params.sub_packetization()
        )));
    }
    Ok(())
}

fn decode_known(params: &CodeParams, known: Vec<Option<Vec<FieldElement>>>) -> Result<Codeword> {
    let erased: Vec<usize> = (0..params.n()).filter(|&i| known[i].is_none()).collect();
    let solver = ErasureSolver::new(params, &erased)?;
    let big_n = params.sub_packetization();
    let mut columns: Vec<Vec<FieldElement>> = known
        .into_iter()
        .map(|c| c.unwrap_or_else(|| vec![FieldElement::ZERO; big_n]))
        .collect();
    solver.solve(&mut columns)?;
    let columns = columns
        .into_iter()
        .enumerate()
        .map(|(i, symbols)| NodeVector::new(i, symbols))
        .collect();
    let cw = Codeword::from_columns_unchecked(params, columns);
    cw.check()?;
    Ok(cw)
}

/// Recovers the unique codeword through the supplied columns.
///
/// At least `k` distinct columns are required. Exactly `k` always determine
/// a codeword; with more, superfluous columns are cross-checked and an
/// inconsistency is reported as an error.
pub fn reconstruct(params: &CodeParams, available: &[NodeVector]) -> Result<Codeword> {
    if available.len() < params.k() {
        return Err(Error::NotEnoughColumns {
            got: available.len(),
            need: params.k(),
        });
    }
    let mut known: Vec<Option<Vec<FieldElement>>> = vec![None; params.n()];
    for c in available {
        check_column(params, c)?;
        if known[c.node].is_some() {
            return Err(Error::DuplicateNode(c.node));
        }
        known[c.node] = Some(c.symbols.clone());
    }
    decode_known(params, known)
}

/// Fills up to `r` missing columns. `columns[i]` must be `None` or node `i`.
pub fn erase_decode(params: &CodeParams, columns: &[Option<NodeVector>]) -> Result<Codeword> {
    if columns.len() != params.n() {
        return Err(Error::Dimension(format!(
            "{} column slots, n = {} required",
            columns.len(),
            params.n()
        )));
    }
    let missing = columns.iter().filter(|c| c.is_none()).count();
    if missing > params.r() {
        return Err(Error::TooManyErasures {
            missing,
            max: params.r(),
        });
    }
    let mut known = Vec::with_capacity(params.n());
    for (i, c) in columns.iter().enumerate() {
        match c {
            Some(c) => {
                check_column(params, c)?;
                if c.node != i {
                    return Err(Error::InvalidArgument(format!(
                        "slot {i} holds node {}",
                        c.node
                    )));
                }
                known.push(Some(c.symbols.clone()));
            }
            None => known.push(None),
        }
    }
    decode_known(params, known)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_message(params: &CodeParams, rng: &mut ChaCha8Rng) -> Message {
        let p = params.field().modulus();
        let symbols = (0..params.message_len())
            .map(|_| params.field().reduce(rng.gen_range(0..p) as u64))
            .collect();
        Message::new(params, symbols).unwrap()
    }

    #[test]
    fn params_n4_k1_d2_h2() {
        let p = ParamSpec::new(4, 1, 2, 2).with_modulus(5).validate().unwrap();
        assert_eq!(p.s(), 2);
        assert_eq!(p.r(), 3);
        assert_eq!(p.planes(), 3);
        assert_eq!(p.sub_packetization(), 48);
        // Default prime is the smallest one >= n+s-1 = 5.
        assert_eq!(CodeParams::new(4, 1, 2, 2).unwrap().field().modulus(), 5);
    }

    #[test]
    fn larger_params_sizes() {
        let p = CodeParams::new(10, 6, 8, 2).unwrap();
        assert_eq!(p.s(), 3);
        assert_eq!(p.sub_packetization(), 4 * 3usize.pow(10));
        assert_eq!(p.field().modulus(), 13);
    }

    #[test]
    fn parameter_violations_are_named() {
        let err = |spec: ParamSpec| spec.validate().unwrap_err().to_string();
        assert!(err(ParamSpec::new(4, 1, 4, 2)).contains("d <= n-1"));
        assert!(err(ParamSpec::new(4, 2, 2, 1)).contains("k < d"));
        assert!(err(ParamSpec::new(5, 2, 3, 3)).contains("h <= n-d"));
        assert!(err(ParamSpec::new(5, 2, 3, 0)).contains("h <= n-d"));
        assert!(err(ParamSpec::new(4, 0, 2, 1)).contains("k >= 1"));
        assert!(err(ParamSpec::new(4, 1, 2, 2).with_modulus(6)).contains("not prime"));
        assert!(err(ParamSpec::new(4, 1, 2, 2).with_modulus(3)).contains("below n+s-1"));
        let mut dup = ParamSpec::new(4, 1, 2, 2);
        dup.lambdas = Some(vec![0, 1, 2, 3]);
        dup.mus = Some(vec![2]);
        assert!(err(dup).contains("distinct"));
        let mut unreduced = ParamSpec::new(4, 1, 2, 2).with_modulus(5);
        unreduced.mus = Some(vec![9]);
        assert!(err(unreduced).contains("not reduced"));
    }

    #[test]
    fn zero_message_encodes_to_zero() {
        let p = CodeParams::new(4, 1, 2, 2).unwrap();
        let msg = Message::new(&p, vec![FieldElement::ZERO; 48]).unwrap();
        assert_eq!(encode(&msg, &p).unwrap(), Codeword::zero(&p));
    }

    #[test]
    fn encoded_words_pass_every_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = CodeParams::new(4, 1, 2, 2).unwrap();
        let enc = Encoder::new(&p).unwrap();
        for _ in 0..10 {
            let msg = random_message(&p, &mut rng);
            let cw = enc.encode(&msg).unwrap();
            let mut checked = 0;
            for t in 0..3 {
                for b in 1..=3 {
                    for a in 0..16 {
                        assert!(cw.parity_residual(t, b, a).is_zero());
                        checked += 1;
                    }
                }
            }
            assert_eq!(checked, 144);
            assert_eq!(cw.message(), msg);
        }
    }

    #[test]
    fn single_perturbation_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = CodeParams::new(5, 2, 3, 2).unwrap();
        let cw = encode(&random_message(&p, &mut rng), &p).unwrap();
        for _ in 0..20 {
            let mut cols = cw.clone().into_columns();
            let node = rng.gen_range(0..p.n());
            let off = rng.gen_range(0..p.sub_packetization());
            let f = p.field();
            cols[node].symbols[off] = f.add(cols[node].symbols[off], FieldElement::ONE);
            let bad = Codeword::from_columns_unchecked(&p, cols.clone());
            let (b, a) = p.split_offset(off);
            assert!((0..p.r()).any(|t| !bad.parity_residual(t, b, a).is_zero()));
            assert!(matches!(
                Codeword::from_columns(&p, cols),
                Err(Error::InconsistentCodeword { .. })
            ));
        }
    }

    #[test]
    fn reconstruct_from_every_k_subset_n5() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = CodeParams::new(5, 2, 3, 2).unwrap();
        for _ in 0..3 {
            let cw = encode(&random_message(&p, &mut rng), &p).unwrap();
            for x in 0..5 {
                for y in x + 1..5 {
                    let got = reconstruct(&p, &[cw.column(x).clone(), cw.column(y).clone()])
                        .unwrap();
                    assert_eq!(got, cw);
                }
            }
        }
    }

    #[test]
    fn reconstruct_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = CodeParams::new(5, 2, 3, 2).unwrap();
        let cw = encode(&random_message(&p, &mut rng), &p).unwrap();
        assert_eq!(
            reconstruct(&p, &[cw.column(0).clone()]),
            Err(Error::NotEnoughColumns { got: 1, need: 2 })
        );
        assert_eq!(
            reconstruct(&p, &[cw.column(3).clone(), cw.column(3).clone()]),
            Err(Error::DuplicateNode(3))
        );
        let mut bad = cw.column(4).clone();
        bad.symbols[7] = p.field().add(bad.symbols[7], FieldElement::ONE);
        let err = reconstruct(&p, &[cw.column(0).clone(), cw.column(1).clone(), bad]);
        assert!(err.is_err());
    }

    #[test]
    fn erase_decode_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = CodeParams::new(4, 1, 2, 2).unwrap();
        let cw = encode(&random_message(&p, &mut rng), &p).unwrap();
        let full: Vec<_> = cw.columns().iter().cloned().map(Some).collect();
        assert_eq!(erase_decode(&p, &full).unwrap(), cw);
        let mut one = full.clone();
        one[2] = None;
        assert_eq!(erase_decode(&p, &one).unwrap().column(2), cw.column(2));
        let mut three = full.clone();
        three[0] = None;
        three[1] = None;
        three[3] = None;
        assert_eq!(erase_decode(&p, &three).unwrap(), cw);
        let mut four = three.clone();
        four[2] = None;
        assert_eq!(
            erase_decode(&p, &four),
            Err(Error::TooManyErasures { missing: 4, max: 3 })
        );
    }

    #[test]
    fn inconsistent_full_word_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = CodeParams::new(4, 1, 2, 2).unwrap();
        let cw = encode(&random_message(&p, &mut rng), &p).unwrap();
        let mut cols: Vec<_> = cw.columns().iter().cloned().map(Some).collect();
        let c = cols[1].as_mut().unwrap();
        c.symbols[0] = p.field().add(c.symbols[0], FieldElement::ONE);
        assert!(erase_decode(&p, &cols).is_err());
    }

    #[test]
    fn plane_decoupling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = CodeParams::new(5, 2, 3, 2).unwrap();
        let cw = encode(&random_message(&p, &mut rng), &p).unwrap();
        // Zeroing one plane of every column still satisfies the checks.
        let mut cols = cw.clone().into_columns();
        for c in &mut cols {
            for a in 0..p.plane_len() {
                c.symbols[p.symbol_offset(2, a)] = FieldElement::ZERO;
            }
        }
        let zeroed = Codeword::from_columns(&p, cols).unwrap();
        // Decoding an erasure restores plane 2 contents only from plane 2.
        let mut slots: Vec<_> = zeroed.columns().iter().cloned().map(Some).collect();
        slots[4] = None;
        let back = erase_decode(&p, &slots).unwrap();
        for b in [1, 3] {
            for a in 0..p.plane_len() {
                assert_eq!(back.symbol(4, b, a), cw.symbol(4, b, a));
            }
        }
        for a in 0..p.plane_len() {
            assert!(back.symbol(4, 2, a).is_zero());
        }
    }
}
