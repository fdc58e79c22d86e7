//! Branch-averaged channels on the logical spaces of a protocol.

use alloc::format;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SimError};
use crate::logical::decode_register;
use crate::oracle::branches::enumerate_branches;
use crate::oracle::choi::{tomography, ChoiMatrix};
use crate::oracle::density::oracle_circuit;
use crate::protocols::ProtocolSpec;
use crate::state::{C64, PROB_TOL};

/// Logical output density matrix averaged over every branch, corrections
/// included, for one logical input vector.
pub fn branch_averaged_output(spec: &ProtocolSpec, logical: &[C64]) -> Result<DMatrix<C64>> {
    let tree = enumerate_branches(spec, &spec.initial_state(logical)?)?;
    let dim = 1usize << spec.output_qubits();
    let mut rho = DMatrix::zeros(dim, dim);
    for b in &tree.branches {
        let v = DVector::from_vec(decode_register(&b.result.state, &b.result.output_pairs)?);
        rho += &v * v.adjoint() * C64::new(b.probability, 0.0);
    }
    Ok(rho)
}

fn checked(choi: ChoiMatrix) -> Result<ChoiMatrix> {
    let min_eigenvalue = choi.min_eigenvalue();
    if min_eigenvalue < -PROB_TOL {
        return Err(SimError::NotCompletelyPositive { min_eigenvalue });
    }
    Ok(choi)
}

/// Choi matrix of the protocol engine's branch-averaged channel, by
/// six-state tomography over branch enumeration.
pub fn protocol_channel(spec: &ProtocolSpec) -> Result<ChoiMatrix> {
    let dim_out = 1usize << spec.output_qubits();
    checked(tomography(spec.input_qubits(), dim_out, |v| {
        branch_averaged_output(spec, v)
    })?)
}

/// Choi matrix of the same protocol evolved by the density-matrix
/// reference circuits.
pub fn oracle_channel(spec: &ProtocolSpec) -> Result<ChoiMatrix> {
    let circuit = oracle_circuit(spec).ok_or_else(|| {
        SimError::InvalidInput(format!(
            "no reference circuit for {} in this mode",
            spec.kind
        ))
    })?;
    let dim_out = 1usize << circuit.output_pairs.len();
    checked(tomography(circuit.input_pairs.len(), dim_out, |v| {
        circuit.logical_output(v)
    })?)
}

/// Choi matrix of the ideal gate.
pub fn ideal_channel(spec: &ProtocolSpec) -> Result<ChoiMatrix> {
    ChoiMatrix::from_unitary(&spec.ideal_matrix())
}
