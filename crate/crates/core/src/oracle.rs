//! Brute-force baselines for checking the repair pipeline.
//!
//! Naive repair rebuilds failed columns with [`reconstruct`] from `k`
//! survivors and never touches the repair module. The transcript recount
//! parses the exported text with its own tokenizer.

use std::collections::BTreeMap;

use crate::code::{reconstruct, CodeParams, NodeVector};
use crate::error::{Error, Result};
use crate::repair::RepairTranscript;

/// Columns produced by naive repair and what it would have downloaded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NaiveRepair {
    pub columns: Vec<NodeVector>,
    /// `kN` per failed node.
    pub baseline_bandwidth: u64,
}

/// Rebuilds `failed` from the `k` lowest-indexed surviving columns.
pub fn naive_repair(
    params: &CodeParams,
    failed: &[usize],
    surviving: &[NodeVector],
) -> Result<NaiveRepair> {
    let mut usable: Vec<&NodeVector> = surviving
        .iter()
        .filter(|c| !failed.contains(&c.node))
        .collect();
    usable.sort_by_key(|c| c.node);
    usable.dedup_by_key(|c| c.node);
    if usable.len() < params.k() {
        return Err(Error::NotEnoughColumns {
            got: usable.len(),
            need: params.k(),
        });
    }
    let chosen: Vec<NodeVector> = usable[..params.k()].iter().map(|&c| c.clone()).collect();
    let cw = reconstruct(params, &chosen)?;
    let mut failed = failed.to_vec();
    failed.sort_unstable();
    let columns = failed.iter().map(|&i| cw.column(i).clone()).collect();
    Ok(NaiveRepair {
        columns,
        baseline_bandwidth: (failed.len() * params.k() * params.sub_packetization()) as u64,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleReport {
    pub matches: bool,
    /// `(node, b, 𝒂)` of every differing symbol.
    pub mismatches: Vec<(usize, usize, usize)>,
    pub baseline_bandwidth: u64,
}

/// Symbol-by-symbol comparison of two sets of repaired columns. A column
/// present on one side only counts as mismatching everywhere.
pub fn cross_check(
    params: &CodeParams,
    cooperative: &[NodeVector],
    naive: &NaiveRepair,
) -> OracleReport {
    let left: BTreeMap<usize, &NodeVector> = cooperative.iter().map(|c| (c.node, c)).collect();
    let right: BTreeMap<usize, &NodeVector> = naive.columns.iter().map(|c| (c.node, c)).collect();
    let mut nodes: Vec<usize> = left.keys().chain(right.keys()).copied().collect();
    nodes.sort_unstable();
    nodes.dedup();
    let mut mismatches = Vec::new();
    for node in nodes {
        for off in 0..params.sub_packetization() {
            let a = left.get(&node).and_then(|c| c.symbols.get(off));
            let b = right.get(&node).and_then(|c| c.symbols.get(off));
            if a.is_none() || a != b {
                let (plane, index) = params.split_offset(off);
                mismatches.push((node, plane, index));
            }
        }
    }
    OracleReport {
        matches: mismatches.is_empty(),
        mismatches,
        baseline_bandwidth: naive.baseline_bandwidth,
    }
}

/// Symbol totals recounted from transcript text.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Recount {
    pub gamma: u64,
    /// `(phase, from, to)` to symbol count.
    pub edges: BTreeMap<(String, usize, usize), u64>,
}

pub fn recount_text(text: &str) -> Result<Recount> {
    let mut out = Recount::default();
    for (no, line) in text.lines().enumerate() {
        let malformed = |reason: &str| Error::MalformedTranscript {
            line: no + 1,
            reason: reason.to_owned(),
        };
        let tokens: Vec<&str> = line.split(' ').filter(|t| !t.is_empty()).collect();
        if tokens.is_empty() || tokens[0].starts_with('#') {
            continue;
        }
        if tokens.len() < 4 {
            return Err(malformed("fewer than four header fields"));
        }
        if tokens[0] != "download" && tokens[0] != "cooperative" {
            return Err(malformed("unknown phase"));
        }
        let from: usize = tokens[1].parse().map_err(|_| malformed("bad sender"))?;
        let to: usize = tokens[2].parse().map_err(|_| malformed("bad receiver"))?;
        let count: u64 = tokens[3].parse().map_err(|_| malformed("bad count"))?;
        let symbols = &tokens[4..];
        if symbols.len() as u64 != count {
            return Err(malformed("symbol count disagrees with header"));
        }
        if !symbols
            .iter()
            .all(|t| !t.is_empty() && t.len() <= 4 && t.bytes().all(|b| b.is_ascii_hexdigit()))
        {
            return Err(malformed("symbol is not 1-4 hex digits"));
        }
        out.gamma += count;
        *out.edges.entry((tokens[0].to_owned(), from, to)).or_insert(0) += count;
    }
    Ok(out)
}

pub fn recount(transcript: &RepairTranscript) -> Result<Recount> {
    recount_text(&transcript.to_text())
}
