//! Minimum-storage cooperative regenerating (MSCR) code.
//!
//! An `(n, k, N)` MDS array code defined by parity checks over a prime
//! field, with sub-packetization `N = (d−k+h)·(d−k+1)ⁿ`. Any `h` failed
//! nodes are rebuilt cooperatively: each downloads `N/(d−k+h)` symbols from
//! each of `d` helpers, then the failed nodes exchange `N/(d−k+h)` symbols
//! pairwise. Helpers read only a fraction `G(d−k, h)` of their column.
//!
//! ```
//! use mscr_core::{CodeParams, Encoder, Message, FieldElement, RepairJob, run_repair};
//!
//! let params = CodeParams::new(4, 1, 2, 2).unwrap();
//! let msg = Message::new(&params, (0..48).map(|i| params.field().reduce(i)).collect()).unwrap();
//! let cw = Encoder::new(&params).unwrap().encode(&msg).unwrap();
//!
//! let job = RepairJob::new(&params, &[0, 1], &[2, 3]).unwrap();
//! let survivors = vec![cw.column(2).clone(), cw.column(3).clone()];
//! let outcome = run_repair(&job, &survivors).unwrap();
//! assert_eq!(outcome.repaired[0], *cw.column(0));
//! assert_eq!(outcome.transcript.total_symbols(), 96);
//! ```

pub mod code;
pub mod error;
pub mod field;
pub mod indexing;
pub mod metrics;
pub mod oracle;
pub mod repair;

pub use code::{
    encode, erase_decode, reconstruct, validate_params, CodeParams, Codeword, Encoder,
    ErasureSolver, Message, NodeVector, ParamSpec,
};
pub use error::{Error, Result};
pub use field::{FieldElement, Matrix, PrimeField};
pub use indexing::{delta, IndexSpace, PlaneIndex, SaryVector};
pub use metrics::{AccessLog, Bounds, RepairMetrics};
pub use oracle::OracleReport;
pub use repair::{
    run_repair, Payload, Phase, RepairJob, RepairMessage, RepairOutcome, RepairTranscript,
    SymbolLabel, SymbolRef,
};
