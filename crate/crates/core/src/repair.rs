//! Cooperative repair of exactly `h` failed nodes from `d` helpers.
//!
//! The failed set `E = {i_1 < … < i_h}` assigns slot `j` (1-based) to the
//! `j`-th smallest failed node; slot `j` owns plane `d−k+j`.
//!
//! Download phase: helper `u` sends failed node `i_j`
//!
//! * `D1`: `c_{u,d−k+j,𝒂}` for `𝒂 ∈ V_{i_j}`, then
//! * `D2`: `c_{u,b,𝒂} + c_{u,d−k+j,𝒂(i_j,b)}` for `b ∈ [1,d−k]`, `𝒂 ∈ V_{i_j}`.
//!
//! From `D1` node `i_j` rebuilds its own plane `d−k+j` and learns plane
//! `d−k+j` of every other failed node on `V_{i_j}`. From each `D2` block it
//! rebuilds plane `b` of its own column and learns the matching cross sums
//! of the other failed nodes.
//!
//! Cooperative phase: node `i_l` forwards to `i_j` what it learned about
//! `i_j`, namely `c_{i_j,d−k+l,𝒂}` and `c_{i_j,b,𝒂} + c_{i_j,d−k+l,𝒂(i_l,b)}`
//! for `𝒂 ∈ V_{i_l}`. That completes plane `d−k+l` at `i_j`.
//!
//! Every edge carries `(d−k+1)·s^{n−1} = N/(d−k+h)` symbols.
//!
//! Failed nodes are separate [`FailedNode`] state objects built only from the
//! payloads they receive; the surviving codeword is never visible to them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::code::{CodeParams, NodeVector};
use crate::error::{Error, Result};
use crate::field::{inverse, vandermonde, FieldElement, Matrix};
use crate::indexing::IndexSpace;
use crate::metrics::AccessLog;

/// `c_{node, plane, index}`
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolRef {
    pub node: usize,
    pub plane: usize,
    pub index: usize,
}

impl SymbolRef {
    pub fn new(node: usize, plane: usize, index: usize) -> Self {
        SymbolRef { node, plane, index }
    }

    pub fn render(&self, space: &IndexSpace) -> String {
        match space.vector(self.index) {
            Ok(v) => format!("c[{},{},{}]", self.node, self.plane, v),
            Err(_) => format!("c[{},{},#{}]", self.node, self.plane, self.index),
        }
    }
}

/// What a transferred symbol stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolLabel {
    Single(SymbolRef),
    Sum(SymbolRef, SymbolRef),
}

impl SymbolLabel {
    pub fn render(&self, space: &IndexSpace) -> String {
        match self {
            SymbolLabel::Single(a) => a.render(space),
            SymbolLabel::Sum(a, b) => format!("{}+{}", a.render(space), b.render(space)),
        }
    }
}

/// Ordered symbols with their descriptions.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Payload {
    labels: Vec<SymbolLabel>,
    values: Vec<FieldElement>,
}

impl Payload {
    fn with_capacity(n: usize) -> Self {
        Payload {
            labels: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, label: SymbolLabel, value: FieldElement) {
        self.labels.push(label);
        self.values.push(value);
    }

    pub fn labels(&self) -> &[SymbolLabel] {
        &self.labels
    }

    pub fn values(&self) -> &[FieldElement] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Download,
    Cooperative,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Download => "download",
            Phase::Cooperative => "cooperative",
        })
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "download" => Ok(Phase::Download),
            "cooperative" => Ok(Phase::Cooperative),
            other => Err(format!("unknown phase `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairMessage {
    pub phase: Phase,
    pub from: usize,
    pub to: usize,
    pub payload: Payload,
}

/// Every message exchanged during one repair, in send order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RepairTranscript {
    messages: Vec<RepairMessage>,
}

/// One parsed line of the text export.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranscriptLine {
    pub phase: Phase,
    pub from: usize,
    pub to: usize,
    pub values: Vec<u32>,
}

impl RepairTranscript {
    pub fn messages(&self) -> &[RepairMessage] {
        &self.messages
    }

    /// Symbols per `(phase, from, to)` edge.
    pub fn edge_counts(&self) -> BTreeMap<(Phase, usize, usize), usize> {
        let mut out = BTreeMap::new();
        for m in &self.messages {
            *out.entry((m.phase, m.from, m.to)).or_insert(0) += m.payload.len();
        }
        out
    }

    pub fn phase_symbols(&self, phase: Phase) -> usize {
        self.messages
            .iter()
            .filter(|m| m.phase == phase)
            .map(|m| m.payload.len())
            .sum()
    }

    /// Repair bandwidth `γ`.
    pub fn total_symbols(&self) -> usize {
        self.messages.iter().map(|m| m.payload.len()).sum()
    }

    /// One line per message: `phase from to count` then the symbols as
    /// 4-digit lowercase hex, space separated.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            write_line(&mut out, m);
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Vec<TranscriptLine>> {
        let mut lines = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: String| Error::MalformedTranscript {
                line: no + 1,
                reason,
            };
            let mut fields = line.split_ascii_whitespace();
            let mut next = |what: &str| {
                fields
                    .next()
                    .ok_or_else(|| bad(format!("missing {what}")))
                    .map(str::to_owned)
            };
            let phase: Phase = next("phase")?.parse().map_err(bad)?;
            let num = |s: String, what: &str| {
                s.parse::<usize>()
                    .map_err(|_| bad(format!("invalid {what} `{s}`")))
            };
            let from = num(next("sender")?, "sender")?;
            let to = num(next("receiver")?, "receiver")?;
            let count = num(next("count")?, "count")?;
            let values = fields
                .map(|tok| {
                    u16::from_str_radix(tok, 16)
                        .map(u32::from)
                        .map_err(|_| bad(format!("invalid hex symbol `{tok}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != count {
                return Err(bad(format!(
                    "count says {count} symbols, line has {}",
                    values.len()
                )));
            }
            lines.push(TranscriptLine {
                phase,
                from,
                to,
                values,
            });
        }
        Ok(lines)
    }
}

fn write_line(out: &mut String, m: &RepairMessage) {
    use std::fmt::Write;
    let _ = write!(out, "{} {} {} {}", m.phase, m.from, m.to, m.payload.len());
    for v in m.payload.values() {
        let _ = write!(out, " {:04x}", v.value());
    }
    out.push('\n');
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Helper(usize),
    Other(usize),
}

/// A validated repair instance: failed set, helper set and the factored
/// `r × r` recovery matrix shared by every recovery solve.
#[derive(Clone, Debug)]
pub struct RepairJob {
    params: CodeParams,
    failed: Vec<usize>,
    helpers: Vec<usize>,
    nonhelpers: Vec<usize>,
    roles: Vec<Role>,
    /// Inverse of the Vandermonde matrix over `λ_j (j ∉ R)` then `μ_1..μ_{s−1}`.
    recovery: Matrix,
    /// `V_{i_j}` for each slot, ascending.
    v_sets: Vec<Vec<usize>>,
}

impl RepairJob {
    pub fn new(params: &CodeParams, failed: &[usize], helpers: &[usize]) -> Result<Self> {
        let n = params.n();
        let mut failed = failed.to_vec();
        failed.sort_unstable();
        let mut helpers = helpers.to_vec();
        helpers.sort_unstable();
        let bad = |m: String| Error::InvalidJob(m);
        if failed.len() != params.h() {
            return Err(bad(format!(
                "exactly h = {} failed nodes required, got {}",
                params.h(),
                failed.len()
            )));
        }
        if helpers.len() != params.d() {
            return Err(bad(format!(
                "exactly d = {} helpers required, got {}",
                params.d(),
                helpers.len()
            )));
        }
        for set in [&failed, &helpers] {
            if let Some(w) = set.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateNode(w[0]));
            }
            if let Some(&x) = set.iter().find(|&&x| x >= n) {
                return Err(bad(format!("node {x} not in [0, {n})")));
            }
        }
        if let Some(&x) = failed.iter().find(|x| helpers.contains(x)) {
            return Err(bad(format!("node {x} is both failed and a helper")));
        }
        let nonhelpers: Vec<usize> = (0..n).filter(|i| !helpers.contains(i)).collect();
        let roles = (0..n)
            .map(|i| match helpers.binary_search(&i) {
                Ok(p) => Role::Helper(p),
                Err(_) => Role::Other(nonhelpers.binary_search(&i).unwrap_or_default()),
            })
            .collect();
        let points: Vec<FieldElement> = nonhelpers
            .iter()
            .map(|&j| params.lambdas()[j])
            .chain(params.mus().iter().copied())
            .collect();
        debug_assert_eq!(points.len(), params.r());
        let recovery = inverse(params.field(), &vandermonde(params.field(), &points, params.r())?)?;
        let v_sets = failed
            .iter()
            .map(|&i| params.space().v_set(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(RepairJob {
            params: params.clone(),
            failed,
            helpers,
            nonhelpers,
            roles,
            recovery,
            v_sets,
        })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    /// Failed nodes, ascending; slot `j` is `failed()[j−1]`.
    pub fn failed(&self) -> &[usize] {
        &self.failed
    }

    pub fn helpers(&self) -> &[usize] {
        &self.helpers
    }

    /// 1-based slot of a failed node.
    pub fn slot_of(&self, node: usize) -> Option<usize> {
        self.failed.binary_search(&node).ok().map(|p| p + 1)
    }

    /// Plane owned by a slot: `d−k+j`.
    pub fn slot_plane(&self, slot: usize) -> usize {
        self.params.d() - self.params.k() + slot
    }

    /// `N/(d−k+h)`, the symbols on every edge.
    pub fn symbols_per_edge(&self) -> usize {
        self.params.sub_packetization() / self.params.planes()
    }

    fn v_set_of_slot(&self, slot: usize) -> &[usize] {
        &self.v_sets[slot - 1]
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot == 0 || slot > self.params.h() {
            return Err(Error::OutOfRange(format!(
                "failed slot {slot} not in [1, {}]",
                self.params.h()
            )));
        }
        Ok(())
    }

    fn v_set_for(&self, node: usize) -> Result<Vec<usize>> {
        match self.slot_of(node) {
            Some(slot) => Ok(self.v_set_of_slot(slot).to_vec()),
            None => self.params.space().v_set(node),
        }
    }
}

/// Payload helper `u` sends to the failed node in `slot`: `D1` then `D2`.
pub fn helper_payload(job: &RepairJob, u: usize, slot: usize, column: &NodeVector) -> Result<Payload> {
    let mut scratch = BTreeSet::new();
    helper_payload_tracked(job, u, slot, column, &mut scratch)
}

fn helper_payload_tracked(
    job: &RepairJob,
    u: usize,
    slot: usize,
    column: &NodeVector,
    accessed: &mut BTreeSet<(usize, usize)>,
) -> Result<Payload> {
    if job.helpers.binary_search(&u).is_err() {
        return Err(Error::InvalidJob(format!("node {u} is not a helper")));
    }
    job.check_slot(slot)?;
    let params = &job.params;
    if column.node != u || column.symbols.len() != params.sub_packetization() {
        return Err(Error::InvalidArgument(format!(
            "column for helper {u} is node {} with {} symbols",
            column.node,
            column.symbols.len()
        )));
    }
    let f = params.field();
    let sp = params.space();
    let target = job.failed[slot - 1];
    let own_plane = job.slot_plane(slot);
    let vset = job.v_set_of_slot(slot);
    let mut out = Payload::with_capacity(job.symbols_per_edge());
    for &a in vset {
        accessed.insert((own_plane, a));
        out.push(
            SymbolLabel::Single(SymbolRef::new(u, own_plane, a)),
            column.get(params, own_plane, a),
        );
    }
    for b in 1..=params.d() - params.k() {
        for &a in vset {
            let partner = sp.substitute(a, target, b);
            accessed.insert((b, a));
            accessed.insert((own_plane, partner));
            out.push(
                SymbolLabel::Sum(
                    SymbolRef::new(u, b, a),
                    SymbolRef::new(u, own_plane, partner),
                ),
                f.add(column.get(params, b, a), column.get(params, own_plane, partner)),
            );
        }
    }
    Ok(out)
}

/// Raw recovery solve at `node` from per-helper values over `V_node`.
struct RecoverySolution {
    /// `[nonhelper position][V position]`
    nonhelper: Vec<Vec<FieldElement>>,
    /// Own symbols at `𝒂(node, e)` for `𝒂 ∈ V_node`, `e ∈ [1, s−1]`.
    own: BTreeMap<usize, FieldElement>,
}

fn solve_recovery(job: &RepairJob, node: usize, downloads: &[&[FieldElement]]) -> Result<RecoverySolution> {
    let params = &job.params;
    let f = params.field();
    let sp = params.space();
    let r = params.r();
    let s = params.s();
    if downloads.len() != job.helpers.len() {
        return Err(Error::Protocol(format!(
            "{} helper blocks received, d = {} required",
            downloads.len(),
            job.helpers.len()
        )));
    }
    let vset = job.v_set_for(node)?;
    if let Some(bad) = downloads.iter().find(|d| d.len() != vset.len()) {
        return Err(Error::Protocol(format!(
            "helper block has {} symbols, {} expected",
            bad.len(),
            vset.len()
        )));
    }
    let Role::Other(self_pos) = job.roles[node] else {
        return Err(Error::InvalidJob(format!("node {node} is a helper")));
    };
    let unknown_nodes = job.nonhelpers.len();
    let mut nonhelper = vec![vec![FieldElement::ZERO; vset.len()]; unknown_nodes];
    let mut deltas = vec![vec![FieldElement::ZERO; vset.len()]; s - 1];
    let mut rhs = vec![FieldElement::ZERO; r];
    for pos in 0..vset.len() {
        for (t, slot) in rhs.iter_mut().enumerate() {
            let mut acc = FieldElement::ZERO;
            for (hp, &u) in job.helpers.iter().enumerate() {
                acc = f.mul_add(acc, params.lambda_pow(u, t), downloads[hp][pos]);
            }
            *slot = f.neg(acc);
        }
        let x = job.recovery.mul_vec(f, &rhs)?;
        for (q, col) in nonhelper.iter_mut().enumerate() {
            col[pos] = x[q];
        }
        for (e, col) in deltas.iter_mut().enumerate() {
            col[pos] = x[unknown_nodes + e];
        }
    }
    debug_assert_eq!(job.nonhelpers[self_pos], node);

    let value_at = |j: usize, pos: usize| match job.roles[j] {
        Role::Helper(hp) => downloads[hp][pos],
        Role::Other(q) => nonhelper[q][pos],
    };
    let mut own = BTreeMap::new();
    for (pos, &a) in vset.iter().enumerate() {
        for e in 1..s {
            let mut acc = deltas[e - 1][pos];
            for j in (0..params.n()).filter(|&j| j != node) {
                if sp.digit(a, j) == 0 {
                    let shifted = a + e * sp.weight(j);
                    acc = f.sub(acc, value_at(j, sp.position_in_v_set(shifted, node)));
                }
            }
            own.insert(a + e * sp.weight(node), acc);
        }
    }
    Ok(RecoverySolution { nonhelper, own })
}

/// Result of the paired-plane recovery at node `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairRecovery {
    /// For each non-helper `j`: `c_{j,b1,𝒂} + c_{j,b2,𝒂(i,v)}` over `V_i`.
    pub cross_sums: BTreeMap<usize, Vec<FieldElement>>,
    /// `c_{i,b1,𝒂(i,e)}` keyed by the index `𝒂(i,e)`.
    pub own: BTreeMap<usize, FieldElement>,
}

/// Recovery from the sums `c_{u,b1,𝒂} + c_{u,b2,𝒂(i,v)}` (`u ∈ R`,
/// `𝒂 ∈ V_i`), one block per helper in ascending helper order.
pub fn recover_pairs(
    job: &RepairJob,
    node: usize,
    b1: usize,
    b2: usize,
    v: usize,
    downloads: &[&[FieldElement]],
) -> Result<PairRecovery> {
    let params = &job.params;
    if b1 == b2 || b1 == 0 || b2 == 0 || b1 > params.planes() || b2 > params.planes() {
        return Err(Error::InvalidArgument(format!(
            "planes must be distinct and in [1, {}], got {b1} and {b2}",
            params.planes()
        )));
    }
    if v == 0 || v >= params.s() {
        return Err(Error::InvalidArgument(format!(
            "digit {v} not in [1, {})",
            params.s()
        )));
    }
    let sol = solve_recovery(job, node, downloads)?;
    let cross_sums = job
        .nonhelpers
        .iter()
        .copied()
        .zip(sol.nonhelper)
        .collect();
    Ok(PairRecovery {
        cross_sums,
        own: sol.own,
    })
}

/// Result of the single-plane recovery at node `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaneRecovery {
    /// `c_{i,b,𝒂}` for every `𝒂 ∈ ℤⁿ_s`.
    pub plane: Vec<FieldElement>,
    /// For each other non-helper `j`: `c_{j,b,𝒂}` over `V_i`.
    pub others: BTreeMap<usize, Vec<FieldElement>>,
}

/// Recovery from `c_{u,b,𝒂}` (`u ∈ R`, `𝒂 ∈ V_i`).
pub fn recover_own_plane(
    job: &RepairJob,
    node: usize,
    b: usize,
    downloads: &[&[FieldElement]],
) -> Result<PlaneRecovery> {
    let params = &job.params;
    if b == 0 || b > params.planes() {
        return Err(Error::OutOfRange(format!(
            "plane {b} not in [1, {}]",
            params.planes()
        )));
    }
    let sol = solve_recovery(job, node, downloads)?;
    let vset = job.v_set_for(node)?;
    let mut plane = vec![FieldElement::ZERO; params.plane_len()];
    let mut others = BTreeMap::new();
    for (&j, vals) in job.nonhelpers.iter().zip(sol.nonhelper) {
        if j == node {
            for (&a, &x) in vset.iter().zip(&vals) {
                plane[a] = x;
            }
        } else {
            others.insert(j, vals);
        }
    }
    for (a, x) in sol.own {
        plane[a] = x;
    }
    Ok(PlaneRecovery { plane, others })
}

/// What a failed node knows about another failed node after downloading.
#[derive(Clone, Debug, PartialEq, Eq)]
struct PeerShare {
    /// `c_{peer,d−k+j,𝒂}` over `V_self`.
    plane: Vec<FieldElement>,
    /// `[b−1][pos]`: `c_{peer,b,𝒂} + c_{peer,d−k+j,𝒂(self,b)}` over `V_self`.
    cross: Vec<Vec<FieldElement>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct NodeState {
    own: Vec<Option<FieldElement>>,
    peers: BTreeMap<usize, PeerShare>,
}

/// State machine of one failed node.
#[derive(Clone, Debug)]
pub struct FailedNode<'j> {
    job: &'j RepairJob,
    node: usize,
    slot: usize,
    state: Option<NodeState>,
}

impl<'j> FailedNode<'j> {
    pub fn new(job: &'j RepairJob, node: usize) -> Result<Self> {
        let slot = job
            .slot_of(node)
            .ok_or_else(|| Error::InvalidJob(format!("node {node} is not failed")))?;
        Ok(FailedNode {
            job,
            node,
            slot,
            state: None,
        })
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    /// Consumes one payload per helper and runs both recovery steps.
    pub fn absorb_downloads(&mut self, downloads: &BTreeMap<usize, Payload>) -> Result<()> {
        let job = self.job;
        let params = &job.params;
        let f = params.field();
        let sp = params.space();
        let keys: Vec<usize> = downloads.keys().copied().collect();
        if keys != job.helpers {
            return Err(Error::Protocol(format!(
                "node {} expected downloads from {:?}, got {:?}",
                self.node, job.helpers, keys
            )));
        }
        let block = job.v_set_of_slot(self.slot).len();
        let dk = params.d() - params.k();
        for (u, p) in downloads {
            if p.len() != (dk + 1) * block {
                return Err(Error::Protocol(format!(
                    "download from {u} has {} symbols, {} expected",
                    p.len(),
                    (dk + 1) * block
                )));
            }
        }
        let part = |b: usize| -> Vec<&[FieldElement]> {
            downloads
                .values()
                .map(|p| &p.values()[b * block..(b + 1) * block])
                .collect()
        };
        let own_plane = job.slot_plane(self.slot);
        let plen = params.plane_len();
        let mut own = vec![None; params.sub_packetization()];

        let d1 = recover_own_plane(job, self.node, own_plane, &part(0))?;
        for (a, &x) in d1.plane.iter().enumerate() {
            own[params.symbol_offset(own_plane, a)] = Some(x);
        }
        let mut peers: BTreeMap<usize, PeerShare> = job
            .failed
            .iter()
            .filter(|&&i| i != self.node)
            .map(|&i| {
                let plane = d1.others.get(&i).cloned().unwrap_or_default();
                (
                    i,
                    PeerShare {
                        plane,
                        cross: Vec::with_capacity(dk),
                    },
                )
            })
            .collect();

        let vset = job.v_set_of_slot(self.slot);
        for b in 1..=dk {
            let rec = recover_pairs(job, self.node, b, own_plane, b, &part(b))?;
            for (&a, &x) in &rec.own {
                own[params.symbol_offset(b, a)] = Some(x);
            }
            let mine = rec
                .cross_sums
                .get(&self.node)
                .ok_or_else(|| Error::Protocol("missing own cross sums".into()))?;
            for (&a, &sum) in vset.iter().zip(mine) {
                let partner = sp.substitute(a, self.node, b);
                let known = d1.plane[partner];
                own[params.symbol_offset(b, a)] = Some(f.sub(sum, known));
            }
            for (peer, share) in peers.iter_mut() {
                let sums = rec
                    .cross_sums
                    .get(peer)
                    .ok_or_else(|| Error::Protocol(format!("missing cross sums of {peer}")))?;
                share.cross.push(sums.clone());
            }
        }
        debug_assert!((1..=dk)
            .chain([own_plane])
            .all(|b| (0..plen).all(|a| own[params.symbol_offset(b, a)].is_some())));
        self.state = Some(NodeState { own, peers });
        Ok(())
    }

    /// Payload this node forwards to `target` in the cooperative phase.
    pub fn cooperative_payload(&self, target: usize) -> Result<Payload> {
        let job = self.job;
        let params = &job.params;
        let state = self.state.as_ref().ok_or_else(|| {
            Error::Protocol(format!(
                "node {} has not completed the download phase",
                self.node
            ))
        })?;
        if target == self.node {
            return Err(Error::Protocol(format!("node {target} cannot send to itself")));
        }
        let share = state
            .peers
            .get(&target)
            .ok_or_else(|| Error::InvalidJob(format!("node {target} is not failed")))?;
        let sp = params.space();
        let plane = job.slot_plane(self.slot);
        let vset = job.v_set_of_slot(self.slot);
        let mut out = Payload::with_capacity(job.symbols_per_edge());
        for (&a, &x) in vset.iter().zip(&share.plane) {
            out.push(SymbolLabel::Single(SymbolRef::new(target, plane, a)), x);
        }
        for (b, sums) in (1..).zip(&share.cross) {
            for (&a, &x) in vset.iter().zip(sums) {
                out.push(
                    SymbolLabel::Sum(
                        SymbolRef::new(target, b, a),
                        SymbolRef::new(target, plane, sp.substitute(a, self.node, b)),
                    ),
                    x,
                );
            }
        }
        Ok(out)
    }

    /// Every symbol (or sum) the node holds after the download phase.
    pub fn known_symbols(&self) -> Vec<SymbolLabel> {
        let Some(state) = &self.state else {
            return Vec::new();
        };
        let params = &self.job.params;
        let sp = params.space();
        let mut out = Vec::new();
        for (off, x) in state.own.iter().enumerate() {
            if x.is_some() {
                let (b, a) = params.split_offset(off);
                out.push(SymbolLabel::Single(SymbolRef::new(self.node, b, a)));
            }
        }
        let plane = self.job.slot_plane(self.slot);
        let vset = self.job.v_set_of_slot(self.slot);
        for (&peer, share) in &state.peers {
            for &a in vset.iter().take(share.plane.len()) {
                out.push(SymbolLabel::Single(SymbolRef::new(peer, plane, a)));
            }
            for b in 1..=share.cross.len() {
                for &a in vset {
                    out.push(SymbolLabel::Sum(
                        SymbolRef::new(peer, b, a),
                        SymbolRef::new(peer, plane, sp.substitute(a, self.node, b)),
                    ));
                }
            }
        }
        out
    }

    /// Completes the column from the `h−1` cooperative payloads, keyed by
    /// sender.
    pub fn finish(self, incoming: &BTreeMap<usize, Payload>) -> Result<NodeVector> {
        let job = self.job;
        let params = &job.params;
        let f = params.field();
        let sp = params.space();
        let mut state = self.state.ok_or_else(|| {
            Error::Protocol(format!(
                "node {} has not completed the download phase",
                self.node
            ))
        })?;
        for (l0, &sender) in job.failed.iter().enumerate() {
            if sender == self.node {
                continue;
            }
            let l = l0 + 1;
            let payload = incoming.get(&sender).ok_or_else(|| {
                Error::Protocol(format!(
                    "node {} is missing the cooperative payload from {sender}",
                    self.node
                ))
            })?;
            let vset = job.v_set_of_slot(l);
            let block = vset.len();
            let dk = params.d() - params.k();
            if payload.len() != (dk + 1) * block {
                return Err(Error::Protocol(format!(
                    "cooperative payload from {sender} has {} symbols, {} expected",
                    payload.len(),
                    (dk + 1) * block
                )));
            }
            let values = payload.values();
            let plane = job.slot_plane(l);
            for (&a, &x) in vset.iter().zip(&values[..block]) {
                state.own[params.symbol_offset(plane, a)] = Some(x);
            }
            for a in 0..params.plane_len() {
                let digit = sp.digit(a, sender);
                if digit == 0 {
                    continue;
                }
                let base = sp.substitute(a, sender, 0);
                let pos = sp.position_in_v_set(base, sender);
                let sum = values[digit * block + pos];
                let known = state.own[params.symbol_offset(digit, base)].ok_or_else(|| {
                    Error::Protocol(format!("plane {digit} incomplete at node {}", self.node))
                })?;
                state.own[params.symbol_offset(plane, a)] = Some(f.sub(sum, known));
            }
        }
        let symbols = state
            .own
            .into_iter()
            .enumerate()
            .map(|(off, x)| {
                x.ok_or_else(|| {
                    let (b, a) = params.split_offset(off);
                    Error::Protocol(format!(
                        "node {} could not recover plane {b}, index {a}",
                        self.node
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NodeVector::new(self.node, symbols))
    }
}

/// Repaired columns (in ascending failed-node order) with the full record.
#[derive(Clone, Debug)]
pub struct RepairOutcome {
    pub repaired: Vec<NodeVector>,
    pub transcript: RepairTranscript,
    pub access: AccessLog,
}

/// Runs both phases. Columns other than the helpers' are ignored.
pub fn run_repair(job: &RepairJob, surviving: &[NodeVector]) -> Result<RepairOutcome> {
    let columns: BTreeMap<usize, &NodeVector> = surviving
        .iter()
        .filter(|c| job.helpers.binary_search(&c.node).is_ok())
        .map(|c| (c.node, c))
        .collect();
    if let Some(&u) = job.helpers.iter().find(|u| !columns.contains_key(u)) {
        return Err(Error::InvalidJob(format!("missing column for helper {u}")));
    }

    let mut access = AccessLog::default();
    let mut transcript = RepairTranscript::default();
    let mut nodes = Vec::with_capacity(job.failed.len());
    let mut tracked: BTreeMap<usize, BTreeSet<(usize, usize)>> = BTreeMap::new();
    for (j0, &target) in job.failed.iter().enumerate() {
        let mut inbox = BTreeMap::new();
        for &u in &job.helpers {
            let set = tracked.entry(u).or_default();
            let p = helper_payload_tracked(job, u, j0 + 1, columns[&u], set)?;
            transcript.messages.push(RepairMessage {
                phase: Phase::Download,
                from: u,
                to: target,
                payload: p.clone(),
            });
            inbox.insert(u, p);
        }
        let mut node = FailedNode::new(job, target)?;
        node.absorb_downloads(&inbox)?;
        nodes.push(node);
    }
    for (u, set) in tracked {
        for (b, a) in set {
            access.record(u, b, a);
        }
    }

    let mut inboxes: Vec<BTreeMap<usize, Payload>> = vec![BTreeMap::new(); nodes.len()];
    for (t, &target) in job.failed.iter().enumerate() {
        for sender in &nodes {
            if sender.node() == target {
                continue;
            }
            let p = sender.cooperative_payload(target)?;
            transcript.messages.push(RepairMessage {
                phase: Phase::Cooperative,
                from: sender.node(),
                to: target,
                payload: p.clone(),
            });
            inboxes[t].insert(sender.node(), p);
        }
    }
    let repaired = nodes
        .into_iter()
        .zip(&inboxes)
        .map(|(node, inbox)| node.finish(inbox))
        .collect::<Result<Vec<_>>>()?;
    Ok(RepairOutcome {
        repaired,
        transcript,
        access,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{Codeword, Encoder, Message};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_codeword(params: &CodeParams, seed: u64) -> Codeword {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = params.field().modulus();
        let msg = Message::new(
            params,
            (0..params.message_len())
                .map(|_| params.field().reduce(rng.gen_range(0..p).into()))
                .collect(),
        )
        .unwrap();
        Encoder::new(params).unwrap().encode(&msg).unwrap()
    }

    fn n4_k1_d2_h2() -> (CodeParams, RepairJob) {
        let p = CodeParams::new(4, 1, 2, 2).unwrap();
        let job = RepairJob::new(&p, &[0, 1], &[2, 3]).unwrap();
        (p, job)
    }

    fn helper_blocks(
        job: &RepairJob,
        cw: &Codeword,
        node: usize,
        part: usize,
    ) -> Vec<Vec<FieldElement>> {
        let slot = job.slot_of(node).unwrap();
        let block = job.params.plane_len() / job.params.s();
        job.helpers()
            .iter()
            .map(|&u| {
                let p = helper_payload(job, u, slot, cw.column(u)).unwrap();
                p.values()[part * block..(part + 1) * block].to_vec()
            })
            .collect()
    }

    #[test]
    fn job_validation() {
        let p = CodeParams::new(4, 1, 2, 2).unwrap();
        assert!(RepairJob::new(&p, &[0], &[2, 3]).is_err());
        assert!(RepairJob::new(&p, &[0, 1], &[2]).is_err());
        assert!(RepairJob::new(&p, &[0, 1], &[1, 3]).is_err());
        assert!(RepairJob::new(&p, &[0, 4], &[2, 3]).is_err());
        assert_eq!(
            RepairJob::new(&p, &[1, 1], &[2, 3]).unwrap_err(),
            Error::DuplicateNode(1)
        );
        let job = RepairJob::new(&p, &[1, 0], &[3, 2]).unwrap();
        assert_eq!(job.failed(), &[0, 1]);
        assert_eq!(job.slot_of(1), Some(2));
        assert_eq!(job.slot_plane(2), 3);
    }

    #[test]
    fn helper_payload_symbolic_listing() {
        let (p, job) = n4_k1_d2_h2();
        let cw = random_codeword(&p, 11);
        let sp = p.space();
        let payload = helper_payload(&job, 2, 1, cw.column(2)).unwrap();
        assert_eq!(payload.len(), 16);
        let v0 = sp.v_set(0).unwrap();
        let mut expected: Vec<SymbolLabel> = v0
            .iter()
            .map(|&a| SymbolLabel::Single(SymbolRef::new(2, 2, a)))
            .collect();
        expected.extend(v0.iter().map(|&a| {
            SymbolLabel::Sum(
                SymbolRef::new(2, 1, a),
                SymbolRef::new(2, 2, sp.substitute(a, 0, 1)),
            )
        }));
        assert_eq!(payload.labels(), expected.as_slice());
        for (label, &x) in payload.labels().iter().zip(payload.values()) {
            let value = match *label {
                SymbolLabel::Single(c) => cw.symbol(c.node, c.plane, c.index),
                SymbolLabel::Sum(c, d) => p.field().add(
                    cw.symbol(c.node, c.plane, c.index),
                    cw.symbol(d.node, d.plane, d.index),
                ),
            };
            assert_eq!(value, x);
        }
        assert!(helper_payload(&job, 0, 1, cw.column(0)).is_err());
        assert!(helper_payload(&job, 2, 3, cw.column(2)).is_err());
    }

    #[test]
    fn payload_sizes_by_enumeration() {
        for (n, k, d, h) in [(5, 2, 3, 2), (6, 3, 4, 2), (6, 2, 4, 2), (6, 2, 3, 3)] {
            let p = CodeParams::new(n, k, d, h).unwrap();
            let failed: Vec<usize> = (0..h).collect();
            let helpers: Vec<usize> = (h..h + d).collect();
            let job = RepairJob::new(&p, &failed, &helpers).unwrap();
            let col = NodeVector::zeros(helpers[0], &p);
            let payload = helper_payload(&job, helpers[0], 1, &col).unwrap();
            let distinct: BTreeSet<_> = payload.labels().iter().collect();
            assert_eq!(distinct.len(), payload.len());
            assert_eq!(payload.len() * p.planes(), p.sub_packetization());
            assert_eq!(payload.len(), (d - k + 1) * p.s().pow(n as u32 - 1));
        }
    }

    #[test]
    fn n4_k1_d2_h2_recover_pairs_node_zero() {
        let (p, job) = n4_k1_d2_h2();
        let cw = random_codeword(&p, 12);
        let sp = p.space();
        let blocks = helper_blocks(&job, &cw, 0, 1);
        let refs: Vec<&[FieldElement]> = blocks.iter().map(Vec::as_slice).collect();
        let rec = recover_pairs(&job, 0, 1, 2, 1, &refs).unwrap();
        let v0 = sp.v_set(0).unwrap();
        let f = p.field();
        for (j, sums) in &rec.cross_sums {
            for (&a, &x) in v0.iter().zip(sums) {
                let want = f.add(cw.symbol(*j, 1, a), cw.symbol(*j, 2, sp.substitute(a, 0, 1)));
                assert_eq!(x, want);
            }
        }
        assert_eq!(rec.cross_sums.keys().copied().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(rec.own.len(), 8);
        for (&a, &x) in &rec.own {
            assert_eq!(sp.digit(a, 0), 1);
            assert_eq!(x, cw.symbol(0, 1, a));
        }
        assert!(recover_pairs(&job, 0, 1, 1, 1, &refs).is_err());
        assert!(recover_pairs(&job, 0, 1, 2, 0, &refs).is_err());
    }

    #[test]
    fn n4_k1_d2_h2_recover_own_plane_node_zero() {
        let (p, job) = n4_k1_d2_h2();
        let cw = random_codeword(&p, 13);
        let blocks = helper_blocks(&job, &cw, 0, 0);
        let refs: Vec<&[FieldElement]> = blocks.iter().map(Vec::as_slice).collect();
        let rec = recover_own_plane(&job, 0, 2, &refs).unwrap();
        for a in 0..16 {
            assert_eq!(rec.plane[a], cw.symbol(0, 2, a));
        }
        let v0 = p.space().v_set(0).unwrap();
        for (&a, &x) in v0.iter().zip(&rec.others[&1]) {
            assert_eq!(x, cw.symbol(1, 2, a));
        }
    }

    #[test]
    fn zero_codeword_repairs_to_zero() {
        let (p, job) = n4_k1_d2_h2();
        let cw = Codeword::zero(&p);
        let out = run_repair(&job, cw.columns()).unwrap();
        for c in &out.repaired {
            assert!(c.symbols.iter().all(|x| x.is_zero()));
        }
        for m in out.transcript.messages() {
            assert!(m.payload.values().iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn n4_k1_d2_h2_cooperative_payload_from_one_to_zero() {
        let (p, job) = n4_k1_d2_h2();
        let cw = random_codeword(&p, 14);
        let sp = p.space();
        let mut node1 = FailedNode::new(&job, 1).unwrap();
        assert!(matches!(node1.cooperative_payload(0), Err(Error::Protocol(_))));
        let inbox: BTreeMap<usize, Payload> = job
            .helpers()
            .iter()
            .map(|&u| (u, helper_payload(&job, u, 2, cw.column(u)).unwrap()))
            .collect();
        node1.absorb_downloads(&inbox).unwrap();
        let payload = node1.cooperative_payload(0).unwrap();
        assert_eq!(payload.len(), 16);
        let v1 = sp.v_set(1).unwrap();
        let mut expected: Vec<SymbolLabel> = v1
            .iter()
            .map(|&a| SymbolLabel::Single(SymbolRef::new(0, 3, a)))
            .collect();
        expected.extend(v1.iter().map(|&a| {
            SymbolLabel::Sum(
                SymbolRef::new(0, 1, a),
                SymbolRef::new(0, 3, sp.substitute(a, 1, 1)),
            )
        }));
        assert_eq!(payload.labels(), expected.as_slice());
        let f = p.field();
        for (label, &x) in payload.labels().iter().zip(payload.values()) {
            let value = match *label {
                SymbolLabel::Single(c) => cw.symbol(c.node, c.plane, c.index),
                SymbolLabel::Sum(c, d) => f.add(
                    cw.symbol(c.node, c.plane, c.index),
                    cw.symbol(d.node, d.plane, d.index),
                ),
            };
            assert_eq!(value, x);
        }
        assert!(node1.cooperative_payload(1).is_err());
        assert!(node1.cooperative_payload(2).is_err());
    }

    #[test]
    fn download_state_listing() {
        let (p, job) = n4_k1_d2_h2();
        let cw = random_codeword(&p, 15);
        let sp = p.space();
        for (&node, other, own_plane) in [(&0usize, 1usize, 2usize), (&1, 0, 3)] {
            let slot = job.slot_of(node).unwrap();
            let inbox: BTreeMap<usize, Payload> = job
                .helpers()
                .iter()
                .map(|&u| (u, helper_payload(&job, u, slot, cw.column(u)).unwrap()))
                .collect();
            let mut fnode = FailedNode::new(&job, node).unwrap();
            fnode.absorb_downloads(&inbox).unwrap();
            let known: BTreeSet<SymbolLabel> = fnode.known_symbols().into_iter().collect();
            let vset = sp.v_set(node).unwrap();
            let mut expected = BTreeSet::new();
            for a in 0..16 {
                expected.insert(SymbolLabel::Single(SymbolRef::new(node, 1, a)));
                expected.insert(SymbolLabel::Single(SymbolRef::new(node, own_plane, a)));
            }
            for &a in &vset {
                expected.insert(SymbolLabel::Single(SymbolRef::new(other, own_plane, a)));
                expected.insert(SymbolLabel::Sum(
                    SymbolRef::new(other, 1, a),
                    SymbolRef::new(other, own_plane, sp.substitute(a, node, 1)),
                ));
            }
            assert_eq!(known, expected);
        }
    }

    #[test]
    fn finish_requires_every_payload() {
        let (p, job) = n4_k1_d2_h2();
        let cw = random_codeword(&p, 16);
        let inbox: BTreeMap<usize, Payload> = job
            .helpers()
            .iter()
            .map(|&u| (u, helper_payload(&job, u, 1, cw.column(u)).unwrap()))
            .collect();
        let mut node0 = FailedNode::new(&job, 0).unwrap();
        node0.absorb_downloads(&inbox).unwrap();
        assert!(matches!(node0.finish(&BTreeMap::new()), Err(Error::Protocol(_))));
    }

    #[test]
    fn n4_k1_d2_h2_full_run() {
        let (p, job) = n4_k1_d2_h2();
        let cw = random_codeword(&p, 17);
        let out = run_repair(&job, cw.columns()).unwrap();
        assert_eq!(out.repaired[0], *cw.column(0));
        assert_eq!(out.repaired[1], *cw.column(1));
        let edges = out.transcript.edge_counts();
        assert_eq!(edges.len(), 2 * 2 + 2);
        assert!(edges.values().all(|&c| c == 16));
        assert_eq!(out.transcript.total_symbols(), 96);
        assert_eq!(out.access.accessed(2).len(), 44);
        assert_eq!(out.access.accessed(3).len(), 44);
    }

    #[test]
    fn exhaustive_pairs_small_params() {
        for (n, k, d, h) in [(4, 1, 2, 2), (5, 2, 3, 2), (5, 1, 2, 2), (5, 1, 3, 2)] {
            let p = CodeParams::new(n, k, d, h).unwrap();
            let cw = random_codeword(&p, (n * 100 + k * 10 + d) as u64);
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != h {
                    continue;
                }
                let failed: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                let rest: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
                for hmask in 0u32..(1 << rest.len()) {
                    if hmask.count_ones() as usize != d {
                        continue;
                    }
                    let helpers: Vec<usize> = rest
                        .iter()
                        .enumerate()
                        .filter(|(q, _)| hmask >> q & 1 == 1)
                        .map(|(_, &x)| x)
                        .collect();
                    let job = RepairJob::new(&p, &failed, &helpers).unwrap();
                    let out = run_repair(&job, cw.columns()).unwrap();
                    for (c, &i) in out.repaired.iter().zip(&failed) {
                        assert_eq!(c, cw.column(i), "params {n},{k},{d},{h} E={failed:?} R={helpers:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn missing_helper_column() {
        let (p, job) = n4_k1_d2_h2();
        let cw = random_codeword(&p, 18);
        assert!(matches!(
            run_repair(&job, &cw.columns()[..3]),
            Err(Error::InvalidJob(_))
        ));
    }

    #[test]
    fn transcript_text_round_trip() {
        let (p, job) = n4_k1_d2_h2();
        let cw = random_codeword(&p, 19);
        let out = run_repair(&job, cw.columns()).unwrap();
        let text = out.transcript.to_text();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("download 2 0 16 "));
        let parsed = RepairTranscript::parse_text(&text).unwrap();
        for (line, msg) in parsed.iter().zip(out.transcript.messages()) {
            assert_eq!((line.phase, line.from, line.to), (msg.phase, msg.from, msg.to));
            let vals: Vec<u32> = msg.payload.values().iter().map(|x| x.value()).collect();
            assert_eq!(line.values, vals);
        }
        assert!(RepairTranscript::parse_text("download 1 2 3 0001").is_err());
        assert!(RepairTranscript::parse_text("upload 1 2 1 0001").is_err());
        assert!(RepairTranscript::parse_text("download x 2 1 0001").is_err());
        assert!(RepairTranscript::parse_text("download 1 2 1 zz").is_err());
        assert!(RepairTranscript::parse_text("# comment\n\n").unwrap().is_empty());
    }
}
