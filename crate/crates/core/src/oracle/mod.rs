//! Independent references: density-matrix circuits, Choi matrices, branch
//! enumeration and the stage-by-stage equation checks.

pub mod branches;
pub mod channel;
pub mod choi;
pub mod density;
pub mod equations;

pub use branches::{enumerate_branches, enumerate_branches_with, Branch, BranchLimits, BranchTree};
pub use channel::{branch_averaged_output, ideal_channel, oracle_channel, protocol_channel};
pub use choi::{choi_fidelity, six_states, tomography, ChoiMatrix};
pub use density::{oracle_circuit, DensityState, OracleCircuit};
pub use equations::{
    suite_params, verification_suite, verify_all, verify_equation, verify_table, verify_table_cell,
    DerivedCorrection, EquationId, EquationParams, EquationReport,
};
