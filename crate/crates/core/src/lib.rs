//! Statevector simulation of logical gates on spin-pair encoded qubits,
//! driven by charge-parity measurements and feed-forward corrections.
//!
//! The crate is `no_std` (it needs `alloc`). Registers are small dense
//! statevectors with MSB-first indexing: qubit 0 is the leftmost symbol of
//! a ket, bit `0` is spin up and bit `1` spin down. A logical qubit lives on
//! an antiparallel pair, `|0_L⟩ = |01⟩` and `|1_L⟩ = |10⟩`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod blocks;
pub mod error;
pub mod logical;
pub mod noise;
pub mod oracle;
pub mod outcome;
pub mod protocols;
pub mod state;

pub use error::{Result, SimError};
pub use logical::{
    decode_logical, decode_register, dfs_weight, encode_logical, encode_register, logical_bell,
    LogicalAmplitudes, LogicalBell, LogicalQubit,
};
pub use outcome::{Fallback, ForcedOutcomes, OutcomeSource, SampledOutcomes};
pub use protocols::{
    GateConfig, HadamardMode, MeasurementRecord, PhaseParams, ProtocolKind, ProtocolResult,
    ProtocolSpec,
};
pub use state::{fidelity_up_to_global_phase, PureState, QubitId, SingleQubitUnitary, C64};
