use alloc::string::String;

use thiserror::Error;

/// Errors raised by the simulator, the gate protocols and the oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("bit string has length {got}, register has {expected} qubits")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid bit character {0:?}")]
    InvalidBit(char),
    #[error("register must hold between 1 and {max} qubits, got {got}")]
    RegisterSize { got: usize, max: usize },
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("qubit {0} listed more than once")]
    DuplicateQubit(usize),
    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("operator is not a Hermitian idempotent projector")]
    InvalidProjector,
    #[error("projectors do not sum to the identity (max deviation {deviation:e})")]
    IncompleteProjectors { deviation: f64 },
    #[error("matrix dimension {got} does not match support dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("amplitudes are not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("register sizes differ: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("{block}: outcome {outcome} has probability {probability:e}")]
    ZeroProbabilityBranch {
        block: String,
        outcome: usize,
        probability: f64,
    },
    #[error("{block}: outcome index {outcome} out of range ({count} outcomes)")]
    OutcomeOutOfRange {
        block: String,
        outcome: usize,
        count: usize,
    },
    #[error("{block}: no forced outcome left in the script")]
    ScriptExhausted { block: String },
    #[error("qubits are entangled with the rest of the register (purity {purity})")]
    EntangledDiscard { purity: f64 },
    #[error("state leaks out of the decoherence-free subspace (leaked weight {leaked:e})")]
    Leakage { leaked: f64 },
    #[error("logical register is entangled with the remaining qubits (residual {residual:e})")]
    EntangledLogical { residual: f64 },
    #[error("logical qubit pairs overlap on qubit {0}")]
    OverlappingPairs(usize),
    #[error("ancilla qubit {0} is not in the required initial state")]
    AncillaNotReady(usize),
    #[error("detector block on pair ({0}, {1}) reported leakage")]
    DetectorLeak(usize, usize),
    #[error("invalid protocol input: {0}")]
    InvalidInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("branch enumeration exceeded its limit of {limit} {what}")]
    BranchLimit { what: &'static str, limit: usize },
    #[error("channel is not completely positive (minimum Choi eigenvalue {min_eigenvalue:e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },
}

pub type Result<T, E = SimError> = core::result::Result<T, E>;
