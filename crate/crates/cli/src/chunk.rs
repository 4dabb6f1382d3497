//! On-disk node chunks and the byte/symbol packing.
//!
//! Layout, all header integers 4-byte little-endian:
//!
//! ```text
//! "MSCR" version n k d h p node symbols_per_byte original_len stripes
//! payload_len num_points point_0 .. point_{num_points-1}
//! symbol_0 .. symbol_{payload_len-1}          (2-byte little-endian each)
//! ```
//!
//! The points are `λ_0..λ_{n−1}` followed by `μ_1..μ_{s−1}`. The body holds
//! `stripes · N` symbols, stripe after stripe.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use mscr_core::{CodeParams, FieldElement, ParamSpec};

pub const MAGIC: &[u8; 4] = b"MSCR";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChunkHeader {
    pub n: u32,
    pub k: u32,
    pub d: u32,
    pub h: u32,
    pub p: u32,
    pub node: u32,
    pub symbols_per_byte: u32,
    pub original_len: u32,
    pub stripes: u32,
    pub payload_len: u32,
    pub points: Vec<u32>,
}

impl ChunkHeader {
    pub fn for_node(
        params: &CodeParams,
        node: usize,
        original_len: usize,
        stripes: usize,
    ) -> Result<Self> {
        let p = params.field().modulus();
        let to_u32 = |x: usize, what: &str| {
            u32::try_from(x).with_context(|| format!("{what} {x} does not fit the chunk header"))
        };
        Ok(ChunkHeader {
            n: to_u32(params.n(), "n")?,
            k: to_u32(params.k(), "k")?,
            d: to_u32(params.d(), "d")?,
            h: to_u32(params.h(), "h")?,
            p,
            node: to_u32(node, "node")?,
            symbols_per_byte: symbols_per_byte(p),
            original_len: to_u32(original_len, "input length")?,
            stripes: to_u32(stripes, "stripe count")?,
            payload_len: to_u32(stripes * params.sub_packetization(), "payload length")?,
            points: params
                .lambdas()
                .iter()
                .chain(params.mus())
                .map(|x| x.value())
                .collect(),
        })
    }

    /// Rebuilds and validates the code parameters recorded in the header.
    pub fn params(&self) -> Result<CodeParams> {
        let n = self.n as usize;
        ensure!(
            self.points.len() >= n,
            "header lists {} points, n = {n} required",
            self.points.len()
        );
        let (lambdas, mus) = self.points.split_at(n);
        let spec = ParamSpec {
            n,
            k: self.k as usize,
            d: self.d as usize,
            h: self.h as usize,
            modulus: Some(self.p.into()),
            lambdas: Some(lambdas.iter().map(|&x| x.into()).collect()),
            mus: Some(mus.iter().map(|&x| x.into()).collect()),
        };
        let params = spec.validate()?;
        ensure!(
            self.symbols_per_byte == symbols_per_byte(self.p),
            "header packing {} does not match p = {}",
            self.symbols_per_byte,
            self.p
        );
        ensure!(
            self.payload_len as usize == self.stripes as usize * params.sub_packetization(),
            "payload length {} is not stripes·N = {}·{}",
            self.payload_len,
            self.stripes,
            params.sub_packetization()
        );
        ensure!(self.node < self.n, "node {} not in [0, {})", self.node, self.n);
        Ok(params)
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        for x in [
            VERSION,
            self.n,
            self.k,
            self.d,
            self.h,
            self.p,
            self.node,
            self.symbols_per_byte,
            self.original_len,
            self.stripes,
            self.payload_len,
            self.points.len() as u32,
        ]
        .into_iter()
        .chain(self.points.iter().copied())
        {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
}

/// A header with its `stripes · N` symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChunkFile {
    pub header: ChunkHeader,
    pub symbols: Vec<u16>,
}

impl ChunkFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 4 * self.header.points.len() + 2 * self.symbols.len());
        self.header.encode(&mut out);
        for s in &self.symbols {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = io::Cursor::new(bytes);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).context("chunk shorter than its magic")?;
        ensure!(&magic == MAGIC, "bad magic {magic:?}");
        let mut word = || -> Result<u32> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b).context("truncated chunk header")?;
            Ok(u32::from_le_bytes(b))
        };
        let version = word()?;
        ensure!(version == VERSION, "unsupported chunk version {version}");
        let mut fields = [0u32; 11];
        for f in fields.iter_mut() {
            *f = word()?;
        }
        let [n, k, d, h, p, node, symbols_per_byte, original_len, stripes, payload_len, num_points] =
            fields;
        ensure!(num_points <= 1 << 16, "implausible point count {num_points}");
        let points = (0..num_points).map(|_| word()).collect::<Result<Vec<_>>>()?;
        let body = &bytes[r.position() as usize..];
        ensure!(
            body.len() == 2 * payload_len as usize,
            "body has {} bytes, header promises {} symbols",
            body.len(),
            payload_len
        );
        let symbols: Vec<u16> = body
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        if let Some(bad) = symbols.iter().find(|&&s| u32::from(s) >= p) {
            bail!("symbol {bad} is not reduced modulo {p}");
        }
        Ok(ChunkFile {
            header: ChunkHeader {
                n,
                k,
                d,
                h,
                p,
                node,
                symbols_per_byte,
                original_len,
                stripes,
                payload_len,
                points,
            },
            symbols,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_bytes(&bytes).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        f.write_all(&self.to_bytes())
            .with_context(|| format!("writing {}", path.display()))
    }

    /// Symbols of one stripe as field elements.
    pub fn stripe(&self, params: &CodeParams, stripe: usize) -> Vec<FieldElement> {
        let n = params.sub_packetization();
        self.symbols[stripe * n..(stripe + 1) * n]
            .iter()
            .map(|&s| params.field().reduce(s.into()))
            .collect()
    }
}

/// Smallest `m` with `p^m ≥ 256`: the number of symbols that carry one byte.
pub fn symbols_per_byte(p: u32) -> u32 {
    let mut m = 1;
    let mut reach = u64::from(p);
    while reach < 256 {
        reach *= u64::from(p);
        m += 1;
    }
    m
}

/// Bytes carried by one stripe of `kN` message symbols.
pub fn bytes_per_stripe(params: &CodeParams) -> usize {
    params.message_len() / symbols_per_byte(params.field().modulus()) as usize
}

/// Spreads each byte over `m` little-endian base-`p` digits and zero-pads
/// to `kN` symbols.
pub fn pack_stripe(params: &CodeParams, bytes: &[u8]) -> Vec<FieldElement> {
    let p = params.field().modulus();
    let m = symbols_per_byte(p);
    let f = params.field();
    let mut out = Vec::with_capacity(params.message_len());
    for &byte in bytes {
        let mut rest = u32::from(byte);
        for _ in 0..m {
            out.push(f.reduce((rest % p).into()));
            rest /= p;
        }
    }
    out.resize(params.message_len(), FieldElement::ZERO);
    out
}

/// Inverse of [`pack_stripe`] for the first `len` bytes.
pub fn unpack_stripe(params: &CodeParams, symbols: &[FieldElement], len: usize) -> Result<Vec<u8>> {
    let p = params.field().modulus();
    let m = symbols_per_byte(p) as usize;
    ensure!(symbols.len() >= len * m, "stripe too short for {len} bytes");
    symbols[..len * m]
        .chunks_exact(m)
        .map(|digits| {
            let v = digits
                .iter()
                .rev()
                .fold(0u32, |acc, d| acc * p + d.value());
            u8::try_from(v).with_context(|| format!("packed value {v} exceeds a byte"))
        })
        .collect()
}
