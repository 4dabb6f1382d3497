//! Bandwidth and disk-access accounting.
//!
//! Closed forms are evaluated in exact rational arithmetic. Decimal strings
//! are produced only by [`render_decimal`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive};

use crate::code::CodeParams;
use crate::error::{Error, Result};
use crate::repair::{Phase, RepairJob, RepairTranscript};

/// Indices `(b, 𝒂)` read from disk at each helper, de-duplicated.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AccessLog {
    per_helper: BTreeMap<usize, BTreeSet<(usize, usize)>>,
}

impl AccessLog {
    pub fn record(&mut self, helper: usize, plane: usize, index: usize) {
        self.per_helper
            .entry(helper)
            .or_default()
            .insert((plane, index));
    }

    pub fn helpers(&self) -> impl Iterator<Item = usize> + '_ {
        self.per_helper.keys().copied()
    }

    /// Empty when the helper never read anything.
    pub fn accessed(&self, helper: usize) -> BTreeSet<(usize, usize)> {
        self.per_helper.get(&helper).cloned().unwrap_or_default()
    }

    pub fn count(&self, helper: usize) -> usize {
        self.per_helper.get(&helper).map_or(0, BTreeSet::len)
    }

    /// `γ_A`.
    pub fn total(&self) -> usize {
        self.per_helper.values().map(BTreeSet::len).sum()
    }
}

/// The indices helper `u` must read: planes `d−k+1..d−k+h` in full and
/// planes `1..d−k` over `⋃_j V_{i_j}`.
pub fn access_set(u: usize, job: &RepairJob) -> Result<BTreeSet<(usize, usize)>> {
    if !job.helpers().contains(&u) {
        return Err(Error::InvalidJob(format!("node {u} is not a helper")));
    }
    let params = job.params();
    let dk = params.d() - params.k();
    let union = params.space().union_v_sets(job.failed())?;
    let mut out = BTreeSet::new();
    for b in 1..=dk {
        out.extend(union.iter().map(|&a| (b, a)));
    }
    for b in dk + 1..=params.planes() {
        out.extend((0..params.plane_len()).map(|a| (b, a)));
    }
    Ok(out)
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn check_ratio_args(dk: u64, h: u64) -> Result<()> {
    if dk == 0 || h == 0 {
        return Err(Error::InvalidArgument(format!(
            "d-k and h must be positive, got ({dk}, {h})"
        )));
    }
    Ok(())
}

/// `G(d−k,h) = 1 − (d−k)/(d−k+h) · (1 − 1/(d−k+1))^h`.
pub fn g_ratio(dk: u64, h: u64) -> Result<BigRational> {
    check_ratio_args(dk, h)?;
    let shrink = ratio(dk, dk + 1);
    let mut power = BigRational::one();
    for _ in 0..h {
        power *= &shrink;
    }
    Ok(BigRational::one() - ratio(dk, dk + h) * power)
}

/// `h/(d−k+h) · (2 − 1/(d−k+1))`, the large-`d−k` limit of `G`.
pub fn upper_envelope(dk: u64, h: u64) -> Result<BigRational> {
    check_ratio_args(dk, h)?;
    Ok(ratio(h, dk + h) * (BigRational::from_integer(2.into()) - ratio(1, dk + 1)))
}

/// `h/(d−k+h)`, the access fraction of an optimal-access scheme.
pub fn optimal_ratio(dk: u64, h: u64) -> Result<BigRational> {
    check_ratio_args(dk, h)?;
    Ok(ratio(h, dk + h))
}

/// Cut-set lower bounds, in symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    /// `dN/(d−k+1)`
    pub single: BigRational,
    /// `dhN/(d−k+h)`
    pub centralized: BigRational,
    /// `h(d+h−1)N/(d−k+h)`
    pub cooperative: BigRational,
    /// `dhN/(d−k+h)` on `γ_A`
    pub access: BigRational,
}

impl Bounds {
    pub fn new(params: &CodeParams) -> Self {
        let (d, h, dk) = (
            params.d() as u64,
            params.h() as u64,
            (params.d() - params.k()) as u64,
        );
        let n = params.sub_packetization() as u64;
        Bounds {
            single: ratio(d * n, dk + 1),
            centralized: ratio(d * h * n, dk + h),
            cooperative: ratio(h * (d + h - 1) * n, dk + h),
            access: ratio(d * h * n, dk + h),
        }
    }
}

/// Bandwidth and access figures for one repair of one stripe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairMetrics {
    pub beta1: u64,
    pub beta2: u64,
    pub gamma: u64,
    pub gamma_access: u64,
    pub per_helper_access: BTreeMap<usize, u64>,
}

impl RepairMetrics {
    /// Values predicted by the closed forms.
    pub fn closed_form(job: &RepairJob) -> Result<Self> {
        let params = job.params();
        let (d, h) = (params.d() as u64, params.h() as u64);
        let beta = job.symbols_per_edge() as u64;
        let g = g_ratio((params.d() - params.k()) as u64, h)?;
        let per = g * BigRational::from_integer(params.sub_packetization().into());
        if !per.is_integer() {
            return Err(Error::InvalidArgument(format!(
                "N·G is not an integer: {per}"
            )));
        }
        let per = per.to_integer().to_u64().unwrap_or(u64::MAX);
        Ok(RepairMetrics {
            beta1: beta,
            beta2: beta,
            gamma: h * (d * beta + (h - 1) * beta),
            gamma_access: d * per,
            per_helper_access: job.helpers().iter().map(|&u| (u, per)).collect(),
        })
    }

    /// Values counted from a transcript and access log. All edges of a
    /// phase must carry the same number of symbols.
    pub fn measured(transcript: &RepairTranscript, access: &AccessLog) -> Result<Self> {
        let edges = transcript.edge_counts();
        let uniform = |phase: Phase| -> Result<u64> {
            let counts: BTreeSet<usize> = edges
                .iter()
                .filter(|((p, _, _), _)| *p == phase)
                .map(|(_, &c)| c)
                .collect();
            match counts.len() {
                0 => Ok(0),
                1 => Ok(counts.into_iter().next().unwrap_or(0) as u64),
                _ => Err(Error::Protocol(format!(
                    "{phase} edges carry unequal symbol counts {counts:?}"
                ))),
            }
        };
        Ok(RepairMetrics {
            beta1: uniform(Phase::Download)?,
            beta2: uniform(Phase::Cooperative)?,
            gamma: transcript.total_symbols() as u64,
            gamma_access: access.total() as u64,
            per_helper_access: access
                .helpers()
                .map(|u| (u, access.count(u) as u64))
                .collect(),
        })
    }

    /// `OPTIMAL` when `γ` meets the cooperative bound, `LOW-ACCESS` when
    /// `γ_A` is below twice the access bound.
    pub fn verdict(&self, bounds: &Bounds) -> Vec<&'static str> {
        let mut out = Vec::new();
        if BigRational::from_integer(self.gamma.into()) == bounds.cooperative {
            out.push("OPTIMAL");
        }
        let two = BigRational::from_integer(2.into());
        if BigRational::from_integer(self.gamma_access.into()) < two * &bounds.access {
            out.push("LOW-ACCESS");
        }
        out
    }
}

/// Exact value when it terminates within five decimals, otherwise `≈`
/// followed by the value rounded half-up to four decimals.
pub fn render_decimal(x: &BigRational) -> String {
    let scaled = x * BigRational::from_integer(BigInt::from(100_000));
    if scaled.is_integer() {
        return fixed_point(&scaled.to_integer(), 5);
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mag = x.abs() * BigRational::from_integer(BigInt::from(10_000));
    let mut rounded = (mag + half).floor().to_integer();
    if x.is_negative() {
        rounded = -rounded;
    }
    format!("≈{}", fixed_point(&rounded, 4))
}

/// `digits / 10^places` with trailing zeros (and a bare point) removed.
fn fixed_point(v: &BigInt, places: usize) -> String {
    let neg = v.is_negative();
    let mut s = v.abs().to_string();
    if s.len() <= places {
        s = format!("{}{s}", "0".repeat(places + 1 - s.len()));
    }
    let (int, frac) = s.split_at(s.len() - places);
    let frac = frac.trim_end_matches('0');
    let sign = if neg { "-" } else { "" };
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// The ten `(d−k, h)` pairs of the reference access comparison.
pub const REFERENCE_ROWS: [(u64, u64); 10] = [
    (1, 2),
    (2, 2),
    (3, 2),
    (4, 2),
    (5, 2),
    (1, 3),
    (2, 3),
    (3, 3),
    (4, 3),
    (5, 3),
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComparisonRow {
    pub d_minus_k: u64,
    pub h: u64,
    pub g: BigRational,
    pub envelope: BigRational,
    pub optimal: BigRational,
}

pub fn comparison_table(rows: &[(u64, u64)]) -> Result<Vec<ComparisonRow>> {
    rows.iter()
        .map(|&(dk, h)| {
            Ok(ComparisonRow {
                d_minus_k: dk,
                h,
                g: g_ratio(dk, h)?,
                envelope: upper_envelope(dk, h)?,
                optimal: optimal_ratio(dk, h)?,
            })
        })
        .collect()
}

pub fn render_table_text(rows: &[ComparisonRow]) -> String {
    let header = ["(d-k,h)", "G(d-k,h)", "h/(d-k+h)(2-1/(d-k+1))", "h/(d-k+h)"];
    let body: Vec<[String; 4]> = rows
        .iter()
        .map(|r| {
            [
                format!("({},{})", r.d_minus_k, r.h),
                render_decimal(&r.g),
                render_decimal(&r.envelope),
                render_decimal(&r.optimal),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&header);
    for row in &body {
        line(&row.each_ref().map(String::as_str));
    }
    out
}

pub fn render_table_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("d_minus_k,h,g_exact,g,envelope_exact,envelope,optimal_exact,optimal\n");
    let plain = |x: &BigRational| render_decimal(x).trim_start_matches('≈').to_owned();
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.d_minus_k,
            r.h,
            r.g,
            plain(&r.g),
            r.envelope,
            plain(&r.envelope),
            r.optimal,
            plain(&r.optimal)
        );
    }
    out
}

/// Published parameters of MSCR constructions supporting all `(n,k,d,h)`.
/// These are literature values and are never computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LiteratureRow {
    pub construction: &'static str,
    pub sub_packetization: &'static str,
    pub field_size: &'static str,
    pub access: &'static str,
    pub remark: &'static str,
}

pub const LITERATURE_ROWS: [LiteratureRow; 4] = [
    LiteratureRow {
        construction: "ye2018cooperative",
        sub_packetization: "((d-k+h)(d-k)^(h-1))^C(n,h)",
        field_size: "|F| >= (d-k+1)n",
        access: "dN",
        remark: "Full access",
    },
    LiteratureRow {
        construction: "zhang2020explicit",
        sub_packetization: "(d-k+h)^C(n,h)",
        field_size: "|F| >= n+d-k",
        access: "dN·h/(d-k+h)",
        remark: "Optimal access",
    },
    LiteratureRow {
        construction: "ye2020new",
        sub_packetization: "(d-k+h)(d-k+1)^n",
        field_size: "|F| >= (d-k+1)n",
        access: "dN",
        remark: "Full access",
    },
    LiteratureRow {
        construction: "this library",
        sub_packetization: "(d-k+h)(d-k+1)^n",
        field_size: "|F| >= n+d-k",
        access: "dN(1-(d-k)/(d-k+h)(1-1/(d-k+1))^h)",
        remark: "Low access",
    },
];
