//! The operations behind each subcommand. Every function returns a report
//! value; printing is left to the caller.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use mscr_core::field::smallest_prime_at_least;
use mscr_core::metrics::{
    comparison_table, g_ratio, render_decimal, render_table_csv, render_table_text,
    LITERATURE_ROWS, REFERENCE_ROWS,
};
use mscr_core::oracle::{cross_check, naive_repair, recount};
use mscr_core::{
    run_repair, Bounds, CodeParams, Codeword, Encoder, ErasureSolver, FieldElement, Message,
    NodeVector, ParamSpec, RepairJob, RepairMetrics, RepairTranscript,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chunk::{bytes_per_stripe, pack_stripe, unpack_stripe, ChunkFile, ChunkHeader};
use crate::config::ParamsConfig;
use crate::manifest::{
    chunk_name, sha256_hex, ChunkEntry, Manifest, ManifestParams, QUARANTINE_DIR, TRANSCRIPT_FILE,
};

/// Smallest modulus the CLI picks on its own, so that a byte fits one symbol.
pub const CLI_MIN_MODULUS: u64 = 257;

/// Merges flag values over config values into a [`ParamSpec`]. Without an
/// explicit modulus the smallest prime `>= max(n+s−1, 257)` is used.
pub fn resolve_spec(flags: &ParamsConfig, config: &ParamsConfig) -> Result<ParamSpec> {
    let pick = |a: Option<usize>, b: Option<usize>, name: &str| {
        a.or(b)
            .ok_or_else(|| anyhow!("parameter `{name}` not given by flag or config"))
    };
    let n = pick(flags.n, config.n, "n")?;
    let k = pick(flags.k, config.k, "k")?;
    let d = pick(flags.d, config.d, "d")?;
    let h = pick(flags.h, config.h, "h")?;
    let modulus = match flags.p.or(config.p) {
        Some(p) => p,
        None => {
            let s = d.saturating_sub(k) + 1;
            let floor = ((n + s).saturating_sub(1) as u64).max(CLI_MIN_MODULUS);
            smallest_prime_at_least(floor)
                .ok_or_else(|| anyhow!("no supported prime at least {floor}"))?
                .into()
        }
    };
    Ok(ParamSpec {
        n,
        k,
        d,
        h,
        modulus: Some(modulus),
        lambdas: flags.lambdas.clone().or_else(|| config.lambdas.clone()),
        mus: flags.mus.clone().or_else(|| config.mus.clone()),
    })
}

fn params_from_manifest(m: &Manifest) -> Result<CodeParams> {
    let mp = &m.params;
    let spec = ParamSpec {
        n: mp.n,
        k: mp.k,
        d: mp.d,
        h: mp.h,
        modulus: Some(mp.p.into()),
        lambdas: Some(mp.lambdas.iter().map(|&x| x.into()).collect()),
        mus: Some(mp.mus.iter().map(|&x| x.into()).collect()),
    };
    Ok(spec.validate()?)
}

fn to_u16(x: FieldElement) -> u16 {
    // The modulus is below 2^16, so every reduced symbol fits.
    x.value() as u16
}

fn node_list(nodes: &[usize]) -> String {
    nodes
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Clone, Debug)]
pub struct EncodeReport {
    pub params: CodeParams,
    pub input_len: usize,
    pub stripes: usize,
    pub chunk_files: Vec<PathBuf>,
}

impl fmt::Display for EncodeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.params;
        writeln!(
            f,
            "encoded {} bytes as {} stripe(s) with (n,k,d,h)=({},{},{},{}), p={}, N={}",
            self.input_len,
            self.stripes,
            p.n(),
            p.k(),
            p.d(),
            p.h(),
            p.field().modulus(),
            p.sub_packetization()
        )?;
        for c in &self.chunk_files {
            writeln!(f, "  wrote {}", c.display())?;
        }
        Ok(())
    }
}

/// Splits `input` into stripes of `kN` symbols, encodes each and writes one
/// chunk per node plus `manifest.json` into `dir`.
pub fn encode_file(input: &Path, dir: &Path, spec: &ParamSpec) -> Result<EncodeReport> {
    let params = spec.validate()?;
    let data = fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    encode_bytes(&data, dir, &params)
}

pub fn encode_bytes(data: &[u8], dir: &Path, params: &CodeParams) -> Result<EncodeReport> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let per_stripe = bytes_per_stripe(params);
    ensure!(per_stripe > 0, "a stripe must carry at least one byte");
    let stripes = data.len().div_ceil(per_stripe);
    let big_n = params.sub_packetization();
    let encoder = Encoder::new(params)?;
    let mut bodies: Vec<Vec<u16>> = vec![Vec::with_capacity(stripes * big_n); params.n()];
    for block in data.chunks(per_stripe) {
        let msg = Message::new(params, pack_stripe(params, block))?;
        let cw = encoder.encode(&msg)?;
        for (body, col) in bodies.iter_mut().zip(cw.columns()) {
            body.extend(col.symbols.iter().map(|&x| to_u16(x)));
        }
    }
    let mut chunks = Vec::with_capacity(params.n());
    let mut files = Vec::with_capacity(params.n());
    for (node, symbols) in bodies.into_iter().enumerate() {
        let chunk = ChunkFile {
            header: ChunkHeader::for_node(params, node, data.len(), stripes)?,
            symbols,
        };
        let bytes = chunk.to_bytes();
        let path = dir.join(chunk_name(node));
        fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
        chunks.push(ChunkEntry {
            node,
            file: chunk_name(node),
            sha256: sha256_hex(&bytes),
        });
        files.push(path);
    }
    let manifest = Manifest {
        params: ManifestParams {
            n: params.n(),
            k: params.k(),
            d: params.d(),
            h: params.h(),
            p: params.field().modulus(),
            lambdas: params.lambdas().iter().map(|x| x.value()).collect(),
            mus: params.mus().iter().map(|x| x.value()).collect(),
        },
        original_len: data.len(),
        stripes,
        symbols_per_byte: crate::chunk::symbols_per_byte(params.field().modulus()),
        input_sha256: sha256_hex(data),
        chunks,
        failed: Vec::new(),
    };
    manifest.save(dir)?;
    Ok(EncodeReport {
        params: params.clone(),
        input_len: data.len(),
        stripes,
        chunk_files: files,
    })
}

#[derive(Clone, Debug)]
pub struct FailReport {
    pub failed: Vec<usize>,
    pub moved: Vec<PathBuf>,
}

impl fmt::Display for FailReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "failed nodes {}", node_list(&self.failed))?;
        for p in &self.moved {
            writeln!(f, "  quarantined {}", p.display())?;
        }
        Ok(())
    }
}

/// Moves the chunks of exactly `h` nodes into `quarantine/`.
pub fn fail_nodes(dir: &Path, nodes: &[usize]) -> Result<FailReport> {
    let mut manifest = Manifest::load(dir)?;
    let params = params_from_manifest(&manifest)?;
    let mut nodes = nodes.to_vec();
    nodes.sort_unstable();
    if let Some(w) = nodes.windows(2).find(|w| w[0] == w[1]) {
        bail!("node {} listed twice", w[0]);
    }
    if let Some(&x) = nodes.iter().find(|x| manifest.failed.contains(x)) {
        bail!("node {x} has already failed");
    }
    ensure!(
        manifest.failed.is_empty(),
        "nodes {} have already failed; repair them first",
        node_list(&manifest.failed)
    );
    ensure!(
        nodes.len() == params.h(),
        "repair handles exactly h = {} failures, {} given",
        params.h(),
        nodes.len()
    );
    if let Some(&x) = nodes.iter().find(|&&x| x >= params.n()) {
        bail!("node {x} not in [0, {})", params.n());
    }
    let quarantine = dir.join(QUARANTINE_DIR);
    fs::create_dir_all(&quarantine)?;
    let mut moved = Vec::new();
    for &node in &nodes {
        let from = dir.join(chunk_name(node));
        let to = quarantine.join(chunk_name(node));
        fs::rename(&from, &to)
            .with_context(|| format!("moving {} to {}", from.display(), to.display()))?;
        moved.push(to);
    }
    manifest.failed = nodes.clone();
    manifest.save(dir)?;
    Ok(FailReport {
        failed: nodes,
        moved,
    })
}

#[derive(Clone, Debug, Default)]
pub struct RepairOptions {
    pub full_transcript: bool,
    pub transcript: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct RepairReport {
    pub params: CodeParams,
    pub failed: Vec<usize>,
    pub helpers: Vec<usize>,
    pub stripes: usize,
    /// Counted from the transcripts; `None` when there were no stripes.
    pub measured: Option<RepairMetrics>,
    pub closed_form: RepairMetrics,
    pub bounds: Bounds,
    pub recount_matches: bool,
    pub transcript_path: PathBuf,
    pub restored: Vec<PathBuf>,
}

impl RepairReport {
    pub fn verdict(&self) -> Vec<&'static str> {
        self.measured
            .as_ref()
            .unwrap_or(&self.closed_form)
            .verdict(&self.bounds)
    }

    pub fn to_csv(&self) -> String {
        let m = self.measured.as_ref().unwrap_or(&self.closed_form);
        let p = &self.params;
        let access: Vec<String> = m
            .per_helper_access
            .iter()
            .map(|(u, c)| format!("{u}:{c}"))
            .collect();
        format!(
            "n,k,d,h,p,stripes,beta1,beta2,gamma,gamma_access,per_helper_access,cooperative_bound,access_bound,verdict\n\
             {},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            p.n(),
            p.k(),
            p.d(),
            p.h(),
            p.field().modulus(),
            self.stripes,
            m.beta1,
            m.beta2,
            m.gamma,
            m.gamma_access,
            access.join(" "),
            self.bounds.cooperative,
            self.bounds.access,
            self.verdict().join(" ")
        )
    }
}

impl fmt::Display for RepairReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.params;
        writeln!(
            f,
            "repaired nodes {} from helpers {} over {} stripe(s)",
            node_list(&self.failed),
            node_list(&self.helpers),
            self.stripes
        )?;
        let m = match &self.measured {
            Some(m) => {
                writeln!(f, "per stripe (measured):")?;
                m
            }
            None => {
                writeln!(f, "per stripe (closed form, no stripes to repair):")?;
                &self.closed_form
            }
        };
        let big_n = p.sub_packetization();
        writeln!(f, "  beta1 (helper to failed node)   {}", m.beta1)?;
        writeln!(f, "  beta2 (failed node to failed)   {}", m.beta2)?;
        writeln!(f, "  gamma                           {}", m.gamma)?;
        writeln!(f, "  gamma_A                         {}", m.gamma_access)?;
        for (u, c) in &m.per_helper_access {
            writeln!(f, "  access at helper {u:<3}            {c} of {big_n}")?;
        }
        if let Ok(g) = g_ratio((p.d() - p.k()) as u64, p.h() as u64) {
            writeln!(f, "  access ratio G(d-k,h)           {g} ({})", render_decimal(&g))?;
        }
        writeln!(f, "bounds:")?;
        writeln!(f, "  single node   {}", self.bounds.single)?;
        writeln!(f, "  centralized   {}", self.bounds.centralized)?;
        writeln!(f, "  cooperative   {}", self.bounds.cooperative)?;
        writeln!(f, "  access        {}", self.bounds.access)?;
        writeln!(f, "verdict: {}", self.verdict().join(" "))?;
        writeln!(
            f,
            "transcript recount: {}",
            if self.recount_matches { "matches" } else { "MISMATCH" }
        )?;
        writeln!(f, "transcript: {}", self.transcript_path.display())?;
        for r in &self.restored {
            writeln!(f, "  restored {} (checksum ok)", r.display())?;
        }
        Ok(())
    }
}

fn load_checked_chunk(dir: &Path, manifest: &Manifest, node: usize) -> Result<ChunkFile> {
    let entry = manifest
        .entry(node)
        .ok_or_else(|| anyhow!("manifest has no entry for node {node}"))?;
    let path = dir.join(&entry.file);
    let bytes = fs::read(&path).with_context(|| format!("reading chunk of node {node}"))?;
    ensure!(
        sha256_hex(&bytes) == entry.sha256,
        "chunk of node {node} does not match its checksum"
    );
    let chunk = ChunkFile::from_bytes(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    ensure!(chunk.header.node as usize == node, "{} holds node {}", path.display(), chunk.header.node);
    Ok(chunk)
}

/// Runs cooperative repair stripe by stripe and writes the restored
/// chunks. Without `helpers`, the `d` lowest surviving nodes are used.
pub fn repair_dir(dir: &Path, helpers: Option<&[usize]>, opts: &RepairOptions) -> Result<RepairReport> {
    let mut manifest = Manifest::load(dir)?;
    let params = params_from_manifest(&manifest)?;
    let failed = manifest.failed.clone();
    ensure!(!failed.is_empty(), "no failed nodes recorded; run `fail` first");
    let helpers: Vec<usize> = match helpers {
        Some(h) => {
            let mut h = h.to_vec();
            h.sort_unstable();
            h
        }
        None => (0..params.n())
            .filter(|i| !failed.contains(i) && dir.join(chunk_name(*i)).exists())
            .take(params.d())
            .collect(),
    };
    ensure!(
        helpers.len() == params.d(),
        "exactly d = {} helpers required, {} available or given",
        params.d(),
        helpers.len()
    );
    if let Some(x) = helpers.iter().find(|x| failed.contains(x)) {
        bail!("helper {x} is a failed node");
    }
    let job = RepairJob::new(&params, &failed, &helpers)?;
    let chunks: Vec<ChunkFile> = helpers
        .iter()
        .map(|&u| load_checked_chunk(dir, &manifest, u))
        .collect::<Result<_>>()?;
    let stripes = manifest.stripes;
    for c in &chunks {
        ensure!(c.header.stripes as usize == stripes, "chunk stripe count disagrees with manifest");
    }

    let closed_form = RepairMetrics::closed_form(&job)?;
    let mut measured: Option<RepairMetrics> = None;
    let mut recount_matches = true;
    let mut transcript_text = String::new();
    let mut bodies: Vec<Vec<u16>> = vec![Vec::new(); failed.len()];
    for stripe in 0..stripes {
        let columns: Vec<NodeVector> = helpers
            .iter()
            .zip(&chunks)
            .map(|(&u, c)| NodeVector::new(u, c.stripe(&params, stripe)))
            .collect();
        let out = run_repair(&job, &columns)?;
        let m = RepairMetrics::measured(&out.transcript, &out.access)?;
        let rc = recount(&out.transcript)?;
        recount_matches &= rc.gamma == m.gamma;
        match &measured {
            None => measured = Some(m),
            Some(first) => ensure!(*first == m, "stripe {stripe} metrics differ from stripe 0"),
        }
        if stripe == 0 || opts.full_transcript {
            append_transcript(&mut transcript_text, &out.transcript, stripe, opts.full_transcript);
        }
        for (body, col) in bodies.iter_mut().zip(&out.repaired) {
            body.extend(col.symbols.iter().map(|&x| to_u16(x)));
        }
    }
    if let Some(m) = &measured {
        recount_matches &= *m == closed_form;
    }

    let mut restored = Vec::new();
    let mut outputs = Vec::new();
    for (&node, symbols) in failed.iter().zip(bodies) {
        let chunk = ChunkFile {
            header: ChunkHeader::for_node(&params, node, manifest.original_len, stripes)?,
            symbols,
        };
        let bytes = chunk.to_bytes();
        let entry = manifest
            .entry(node)
            .ok_or_else(|| anyhow!("manifest has no entry for node {node}"))?;
        ensure!(
            sha256_hex(&bytes) == entry.sha256,
            "restored chunk of node {node} does not match the stored checksum"
        );
        outputs.push((dir.join(&entry.file), bytes));
    }
    for (path, bytes) in outputs {
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        restored.push(path);
    }
    let transcript_path = opts
        .transcript
        .clone()
        .unwrap_or_else(|| dir.join(TRANSCRIPT_FILE));
    fs::write(&transcript_path, &transcript_text)
        .with_context(|| format!("writing {}", transcript_path.display()))?;
    manifest.failed.clear();
    manifest.save(dir)?;

    let report = RepairReport {
        params: params.clone(),
        failed,
        helpers,
        stripes,
        measured,
        closed_form,
        bounds: Bounds::new(&params),
        recount_matches,
        transcript_path,
        restored,
    };
    if let Some(csv) = &opts.csv {
        fs::write(csv, report.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    }
    Ok(report)
}

fn append_transcript(out: &mut String, t: &RepairTranscript, stripe: usize, labelled: bool) {
    if labelled {
        out.push_str(&format!("# stripe {stripe}\n"));
    }
    out.push_str(&t.to_text());
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChunkStatus {
    Ok,
    Missing,
    Quarantined,
    ChecksumMismatch,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub chunks: Vec<(usize, ChunkStatus)>,
    /// Parity of every stripe, checked only when all `n` chunks are intact.
    pub parity_ok: Option<bool>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.chunks.iter().all(|(_, s)| *s == ChunkStatus::Ok) && self.parity_ok != Some(false)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (node, status) in &self.chunks {
            let s = match status {
                ChunkStatus::Ok => "ok",
                ChunkStatus::Missing => "MISSING",
                ChunkStatus::Quarantined => "QUARANTINED",
                ChunkStatus::ChecksumMismatch => "CHECKSUM MISMATCH",
            };
            writeln!(f, "node {node}: {s}")?;
        }
        match self.parity_ok {
            Some(true) => writeln!(f, "parity: all stripes satisfy every check")?,
            Some(false) => writeln!(f, "parity: VIOLATED")?,
            None => writeln!(f, "parity: not checked (chunks unavailable)")?,
        }
        writeln!(f, "{}", if self.ok() { "OK" } else { "FAILED" })
    }
}

/// Compares every chunk against the manifest checksums and, when all are
/// intact, checks the parity equations of every stripe.
pub fn verify_dir(dir: &Path) -> Result<VerifyReport> {
    let manifest = Manifest::load(dir)?;
    let params = params_from_manifest(&manifest)?;
    let mut statuses = Vec::new();
    let mut intact = Vec::new();
    for node in 0..params.n() {
        let entry = manifest
            .entry(node)
            .ok_or_else(|| anyhow!("manifest has no entry for node {node}"))?;
        let path = dir.join(&entry.file);
        let status = if manifest.failed.contains(&node) {
            ChunkStatus::Quarantined
        } else {
            match fs::read(&path) {
                Err(_) => ChunkStatus::Missing,
                Ok(bytes) if sha256_hex(&bytes) != entry.sha256 => ChunkStatus::ChecksumMismatch,
                Ok(bytes) => {
                    intact.push(ChunkFile::from_bytes(&bytes)?);
                    ChunkStatus::Ok
                }
            }
        };
        statuses.push((node, status));
    }
    let parity_ok = if intact.len() == params.n() {
        let mut ok = true;
        for stripe in 0..manifest.stripes {
            let cols = intact
                .iter()
                .enumerate()
                .map(|(i, c)| NodeVector::new(i, c.stripe(&params, stripe)))
                .collect();
            ok &= Codeword::from_columns(&params, cols).is_ok();
        }
        Some(ok)
    } else {
        None
    };
    Ok(VerifyReport {
        chunks: statuses,
        parity_ok,
    })
}

#[derive(Clone, Debug)]
pub struct DecodeReport {
    pub used: Vec<usize>,
    pub bytes: usize,
    pub output: PathBuf,
}

impl fmt::Display for DecodeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "decoded {} bytes from nodes {} into {} (checksum ok)",
            self.bytes,
            node_list(&self.used),
            self.output.display()
        )
    }
}

/// Rebuilds the original file from `k` intact chunks (the lowest-indexed
/// ones unless `nodes` is given) and checks it against the stored digest.
pub fn decode_dir(dir: &Path, output: &Path, nodes: Option<&[usize]>) -> Result<DecodeReport> {
    let manifest = Manifest::load(dir)?;
    let params = params_from_manifest(&manifest)?;
    let used: Vec<usize> = match nodes {
        Some(list) => {
            let mut v = list.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        }
        None => (0..params.n())
            .filter(|i| !manifest.failed.contains(i) && dir.join(chunk_name(*i)).exists())
            .take(params.k())
            .collect(),
    };
    ensure!(
        used.len() >= params.k(),
        "decoding needs k = {} chunks, {} available",
        params.k(),
        used.len()
    );
    let mut chunks: BTreeMap<usize, ChunkFile> = BTreeMap::new();
    for &node in &used {
        chunks.insert(node, load_checked_chunk(dir, &manifest, node)?);
    }
    let erased: Vec<usize> = (0..params.n()).filter(|i| !chunks.contains_key(i)).collect();
    let solver = ErasureSolver::new(&params, &erased)?;
    let big_n = params.sub_packetization();
    let per_stripe = bytes_per_stripe(&params);
    let mut data = Vec::with_capacity(manifest.stripes * per_stripe);
    for stripe in 0..manifest.stripes {
        let mut columns: Vec<Vec<FieldElement>> = (0..params.n())
            .map(|i| match chunks.get(&i) {
                Some(c) => c.stripe(&params, stripe),
                None => vec![FieldElement::ZERO; big_n],
            })
            .collect();
        solver.solve(&mut columns)?;
        let message: Vec<FieldElement> = columns[..params.k()].concat();
        let take = per_stripe.min(manifest.original_len - data.len());
        data.extend(unpack_stripe(&params, &message, take)?);
    }
    ensure!(
        data.len() == manifest.original_len,
        "decoded {} bytes, manifest records {}",
        data.len(),
        manifest.original_len
    );
    ensure!(
        sha256_hex(&data) == manifest.input_sha256,
        "decoded data does not match the input checksum"
    );
    fs::write(output, &data).with_context(|| format!("writing {}", output.display()))?;
    Ok(DecodeReport {
        used,
        bytes: data.len(),
        output: output.to_owned(),
    })
}

/// The ten reference rows followed by `extra`.
pub fn table(extra: &[(u64, u64)], csv: bool, literature: bool) -> Result<String> {
    let rows: Vec<(u64, u64)> = REFERENCE_ROWS.iter().chain(extra).copied().collect();
    let table = comparison_table(&rows)?;
    let mut out = if csv {
        render_table_csv(&table)
    } else {
        render_table_text(&table)
    };
    if literature {
        out.push_str("\nliterature values (not computed):\n");
        for r in LITERATURE_ROWS {
            out.push_str(&format!(
                "  {:<20} N = {:<30} {:<18} access {:<40} {}\n",
                r.construction, r.sub_packetization, r.field_size, r.access, r.remark
            ));
        }
    }
    Ok(out)
}

/// Validates a parameter set and lists everything derived from it.
pub fn params_check(spec: &ParamSpec) -> Result<String> {
    let p = spec.validate()?;
    let bounds = Bounds::new(&p);
    let pts = |xs: &[FieldElement]| xs.iter().map(|x| x.value().to_string()).collect::<Vec<_>>().join(",");
    let g = g_ratio((p.d() - p.k()) as u64, p.h() as u64)?;
    let beta = p.sub_packetization() / p.planes();
    let mut out = String::new();
    out.push_str(&format!(
        "valid: (n,k,d,h)=({},{},{},{})\n",
        p.n(),
        p.k(),
        p.d(),
        p.h()
    ));
    out.push_str(&format!("  r = n-k          {}\n", p.r()));
    out.push_str(&format!("  s = d-k+1        {}\n", p.s()));
    out.push_str(&format!("  planes d-k+h     {}\n", p.planes()));
    out.push_str(&format!("  N                {}\n", p.sub_packetization()));
    out.push_str(&format!("  message kN       {}\n", p.message_len()));
    out.push_str(&format!("  field p          {}\n", p.field().modulus()));
    out.push_str(&format!("  lambdas          {}\n", pts(p.lambdas())));
    out.push_str(&format!("  mus              {}\n", pts(p.mus())));
    out.push_str(&format!("  beta1 = beta2    {beta}\n"));
    out.push_str(&format!(
        "  gamma            {}\n",
        p.h() * (p.d() + p.h() - 1) * beta
    ));
    out.push_str(&format!("  G(d-k,h)         {g} ({})\n", render_decimal(&g)));
    out.push_str(&format!("  bounds: single {}, centralized {}, cooperative {}, access {}\n",
        bounds.single, bounds.centralized, bounds.cooperative, bounds.access));
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SimulateReport {
    pub trials: usize,
    pub oracle_matches: usize,
    pub closed_form_matches: usize,
    pub metrics: RepairMetrics,
    pub bounds: Bounds,
}

impl fmt::Display for SimulateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trials                    {}", self.trials)?;
        writeln!(f, "oracle matches            {}", self.oracle_matches)?;
        writeln!(f, "closed-form matches       {}", self.closed_form_matches)?;
        writeln!(f, "beta1 {} beta2 {} gamma {} gamma_A {}", self.metrics.beta1, self.metrics.beta2, self.metrics.gamma, self.metrics.gamma_access)?;
        writeln!(f, "verdict: {}", self.metrics.verdict(&self.bounds).join(" "))
    }
}

/// In-memory experiment: random codewords from `seed`, cooperative repair
/// of `failed` from `helpers`, each result compared with the naive oracle.
pub fn simulate(
    params: &CodeParams,
    failed: &[usize],
    helpers: Option<&[usize]>,
    seed: u64,
    trials: usize,
) -> Result<SimulateReport> {
    let helpers: Vec<usize> = match helpers {
        Some(h) => h.to_vec(),
        None => (0..params.n())
            .filter(|i| !failed.contains(i))
            .take(params.d())
            .collect(),
    };
    let job = RepairJob::new(params, failed, &helpers)?;
    let encoder = Encoder::new(params)?;
    let closed = RepairMetrics::closed_form(&job)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = params.field().modulus();
    let (mut oracle_matches, mut closed_form_matches) = (0, 0);
    for _ in 0..trials {
        let syms = (0..params.message_len())
            .map(|_| params.field().reduce(rng.gen_range(0..p).into()))
            .collect();
        let cw = encoder.encode(&Message::new(params, syms)?)?;
        let out = run_repair(&job, cw.columns())?;
        let naive = naive_repair(params, job.failed(), cw.columns())?;
        if cross_check(params, &out.repaired, &naive).matches {
            oracle_matches += 1;
        }
        let m = RepairMetrics::measured(&out.transcript, &out.access)?;
        if m == closed && recount(&out.transcript)?.gamma == m.gamma {
            closed_form_matches += 1;
        }
    }
    Ok(SimulateReport {
        trials,
        oracle_matches,
        closed_form_matches,
        metrics: closed,
        bounds: Bounds::new(params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(n: usize, k: usize, d: usize, h: usize) -> ParamsConfig {
        ParamsConfig {
            n: Some(n),
            k: Some(k),
            d: Some(d),
            h: Some(h),
            ..Default::default()
        }
    }

    #[test]
    fn flags_override_config_and_default_modulus_fits_a_byte() {
        let cfg = ParamsConfig {
            n: Some(9),
            p: Some(11),
            ..flags(9, 9, 9, 9)
        };
        let spec = resolve_spec(&flags(4, 1, 2, 2), &ParamsConfig::default()).unwrap();
        assert_eq!(spec.modulus, Some(257));
        let spec = resolve_spec(&flags(4, 1, 2, 2), &cfg).unwrap();
        assert_eq!((spec.n, spec.modulus), (4, Some(11)));
        assert!(resolve_spec(&ParamsConfig::default(), &ParamsConfig::default()).is_err());
    }

    #[test]
    fn table_has_ten_rows_plus_extras() {
        let text = table(&[(6, 2)], false, false).unwrap();
        assert_eq!(text.lines().count(), 12);
        assert!(text.contains("(6,2)"));
        let csv = table(&[], true, true).unwrap();
        assert!(csv.contains("literature values"));
    }

    #[test]
    fn params_check_n4_k1_d2_h2() {
        let text = params_check(&ParamSpec::new(4, 1, 2, 2).with_modulus(5)).unwrap();
        assert!(text.contains("N                48"));
        assert!(text.contains("gamma            96"));
        assert!(text.contains("11/12"));
        assert!(params_check(&ParamSpec::new(4, 2, 2, 1)).is_err());
    }

    #[test]
    fn simulate_n4_k1_d2_h2() {
        let params = CodeParams::new(4, 1, 2, 2).unwrap();
        let r = simulate(&params, &[0, 1], None, 0, 5).unwrap();
        assert_eq!((r.oracle_matches, r.closed_form_matches), (5, 5));
    }
}
