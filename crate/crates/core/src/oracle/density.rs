//! Density-matrix reference evolution.
//!
//! This path shares nothing with the statevector protocol engine except the
//! tolerance constants: circuits are written out op by op from the gate and
//! projector definitions, measurements split the ensemble by outcome
//! history, and feed-forward closures pick corrections from that history.

use alloc::{boxed::Box, collections::BTreeMap, format, vec, vec::Vec};
use core::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use crate::error::{Result, SimError};
use crate::protocols::{HadamardMode, PhaseParams, ProtocolKind, ProtocolSpec};
use crate::state::{max_abs, C64, NORM_TOL, PROB_TOL, ZERO_PROBABILITY};

type Matrix = DMatrix<C64>;

/// A mixed state on `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    num_qubits: usize,
    matrix: Matrix,
}

impl DensityState {
    pub fn new(num_qubits: usize, matrix: Matrix) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(SimError::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        let s = DensityState { num_qubits, matrix };
        s.validate()?;
        Ok(s)
    }

    /// `|ψ⟩⟨ψ|` for a normalized amplitude vector.
    pub fn from_pure(amplitudes: &[C64]) -> Result<Self> {
        let n = amplitudes.len().trailing_zeros() as usize;
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        DensityState::new(n, &v * v.adjoint())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Hermitian and unit trace within `1e-12`, eigenvalues `≥ −1e-10`.
    pub fn validate(&self) -> Result<()> {
        let hermitian = max_abs(&(&self.matrix - self.matrix.adjoint()));
        let trace = self.matrix.trace();
        if hermitian > NORM_TOL || (trace.re - 1.0).abs() > NORM_TOL || trace.im.abs() > NORM_TOL {
            return Err(SimError::NotNormalized { norm_sqr: trace.re });
        }
        let min = min_eigenvalue(&self.matrix);
        if min < -PROB_TOL {
            return Err(SimError::NotCompletelyPositive {
                min_eigenvalue: min,
            });
        }
        Ok(())
    }

    /// Traces out every qubit not in `keep`; kept qubits stay in order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        Ok(DensityState {
            num_qubits: keep.len(),
            matrix: partial_trace(&self.matrix, self.num_qubits, keep),
        })
    }
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub(crate) fn min_eigenvalue(m: &Matrix) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn bit(index: usize, q: usize, n: usize) -> usize {
    (index >> (n - 1 - q)) & 1
}

/// Sub-index of `index` restricted to `qubits` (first listed = MSB).
fn gather(index: usize, qubits: &[usize], n: usize) -> usize {
    qubits
        .iter()
        .fold(0, |acc, &q| (acc << 1) | bit(index, q, n))
}

/// Lifts an operator on `qubits` to the full `n`-qubit register.
pub fn embed(n: usize, qubits: &[usize], op: &Matrix) -> Matrix {
    let dim = 1usize << n;
    let rest_mask = (0..n)
        .filter(|q| !qubits.contains(q))
        .fold(0, |acc, q| acc | (1 << (n - 1 - q)));
    Matrix::from_fn(dim, dim, |r, c| {
        if r & rest_mask != c & rest_mask {
            C64::new(0.0, 0.0)
        } else {
            op[(gather(r, qubits, n), gather(c, qubits, n))]
        }
    })
}

fn partial_trace(m: &Matrix, n: usize, keep: &[usize]) -> Matrix {
    let k = keep.len();
    let mut out = Matrix::zeros(1 << k, 1 << k);
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if gather(r, &traced, n) == gather(c, &traced, n) {
                out[(gather(r, keep, n), gather(c, keep, n))] += m[(r, c)];
            }
        }
    }
    out
}

/// Corrections chosen from earlier outcomes: `(qubits, unitary)` list.
pub type FeedforwardRule = Box<dyn Fn(&[usize]) -> Vec<(Vec<usize>, Matrix)>>;

/// One step of a reference circuit.
pub enum OracleOp {
    Gate {
        qubits: Vec<usize>,
        matrix: Matrix,
    },
    Measure {
        name: &'static str,
        qubits: Vec<usize>,
        projectors: Vec<Matrix>,
    },
    /// Applies `rule(outcomes of names)` on each history branch.
    Feedforward {
        names: Vec<&'static str>,
        rule: FeedforwardRule,
    },
    /// Traces out `qubits`; the rest keep their order.
    Trace {
        qubits: Vec<usize>,
    },
}

/// A reference circuit with its logical input and output pairs.
pub struct OracleCircuit {
    pub num_qubits: usize,
    pub input_pairs: Vec<(usize, usize)>,
    pub output_pairs: Vec<(usize, usize)>,
    pub ops: Vec<OracleOp>,
}

struct Branch {
    history: BTreeMap<&'static str, usize>,
    rho: Matrix,
}

impl OracleCircuit {
    /// Register state for a logical input vector on the input pairs, every
    /// other qubit spin up.
    pub fn initial(&self, logical: &[C64]) -> Result<DensityState> {
        let n = self.num_qubits;
        let k = self.input_pairs.len();
        if logical.len() != 1 << k {
            return Err(SimError::DimensionMismatch {
                expected: 1 << k,
                got: logical.len(),
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        for (l, a) in logical.iter().enumerate() {
            let mut index = 0;
            for (j, &(first, second)) in self.input_pairs.iter().enumerate() {
                // |0_L⟩ = spin up, spin down; |1_L⟩ the reverse
                let value = (l >> (k - 1 - j)) & 1;
                let (b1, b2) = if value == 0 { (0, 1) } else { (1, 0) };
                index |= (b1 << (n - 1 - first)) | (b2 << (n - 1 - second));
            }
            amps[index] = *a;
        }
        DensityState::from_pure(&amps)
    }

    /// Branch-averaged final state of the whole register (after traces).
    pub fn evolve(&self, initial: &DensityState) -> Result<DensityState> {
        let mut n = self.num_qubits;
        let mut branches = vec![Branch {
            history: BTreeMap::new(),
            rho: initial.matrix.clone(),
        }];
        for op in &self.ops {
            match op {
                OracleOp::Gate { qubits, matrix } => {
                    let u = embed(n, qubits, matrix);
                    for b in &mut branches {
                        b.rho = &u * &b.rho * u.adjoint();
                    }
                }
                OracleOp::Measure {
                    name,
                    qubits,
                    projectors,
                } => {
                    let mut next = Vec::new();
                    for b in branches {
                        for (k, p) in projectors.iter().enumerate() {
                            let full = embed(n, qubits, p);
                            let rho = &full * &b.rho * &full;
                            if rho.trace().re < ZERO_PROBABILITY {
                                continue;
                            }
                            let mut history = b.history.clone();
                            history.insert(*name, k);
                            next.push(Branch { history, rho });
                        }
                    }
                    branches = next;
                }
                OracleOp::Feedforward { names, rule } => {
                    for b in &mut branches {
                        let outcomes = names
                            .iter()
                            .map(|name| {
                                b.history.get(name).copied().ok_or_else(|| {
                                    SimError::InvalidInput(format!("no outcome for {name}"))
                                })
                            })
                            .collect::<Result<Vec<_>>>()?;
                        for (qubits, u) in rule(&outcomes) {
                            let u = embed(n, &qubits, &u);
                            b.rho = &u * &b.rho * u.adjoint();
                        }
                    }
                }
                OracleOp::Trace { qubits } => {
                    let keep: Vec<usize> = (0..n).filter(|q| !qubits.contains(q)).collect();
                    for b in &mut branches {
                        b.rho = partial_trace(&b.rho, n, &keep);
                    }
                    n = keep.len();
                }
            }
        }
        let dim = 1usize << n;
        let total = branches
            .iter()
            .fold(Matrix::zeros(dim, dim), |acc, b| acc + &b.rho);
        DensityState::new(n, total)
    }

    /// Logical density matrix of the output pairs, for a pure logical input.
    /// Weight outside the output pairs' protected subspace is an error.
    pub fn logical_output(&self, logical: &[C64]) -> Result<Matrix> {
        let out = self.evolve(&self.initial(logical)?)?;
        let n = out.num_qubits;
        let keep: Vec<usize> = self
            .output_pairs
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .collect();
        let reduced = partial_trace(&out.matrix, n, &keep);
        let k = self.output_pairs.len();
        let physical: Vec<usize> = (0..1usize << k)
            .map(|l| {
                (0..k).fold(0, |acc, j| {
                    let value = (l >> (k - 1 - j)) & 1;
                    (acc << 2) | if value == 0 { 0b01 } else { 0b10 }
                })
            })
            .collect();
        let logical_rho =
            Matrix::from_fn(1 << k, 1 << k, |r, c| reduced[(physical[r], physical[c])]);
        let leaked = 1.0 - logical_rho.trace().re;
        if leaked > PROB_TOL {
            return Err(SimError::Leakage { leaked });
        }
        Ok(logical_rho)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn m2(a: C64, b: C64, cc: C64, d: C64) -> Matrix {
    Matrix::from_row_slice(2, 2, &[a, b, cc, d])
}

fn hadamard() -> Matrix {
    let s = c(FRAC_1_SQRT_2, 0.0);
    m2(s, s, s, -s)
}

fn pauli_x() -> Matrix {
    m2(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

fn pauli_z() -> Matrix {
    m2(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

fn phase(theta: f64) -> Matrix {
    m2(
        c(1.0, 0.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        C64::from_polar(1.0, theta),
    )
}

fn ket_projector(v: &[C64]) -> Matrix {
    let v = nalgebra::DVector::from_column_slice(v);
    &v * v.adjoint()
}

fn diagonal_projector(dim: usize, indices: &[usize]) -> Matrix {
    Matrix::from_fn(dim, dim, |r, cc| {
        if r == cc && indices.contains(&r) {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

fn parity(name: &'static str, a: usize, b: usize) -> OracleOp {
    OracleOp::Measure {
        name,
        qubits: vec![a, b],
        // outcome 0: antiparallel, 1: aligned
        projectors: vec![
            diagonal_projector(4, &[1, 2]),
            diagonal_projector(4, &[0, 3]),
        ],
    }
}

fn gate(qubits: &[usize], matrix: Matrix) -> OracleOp {
    OracleOp::Gate {
        qubits: qubits.to_vec(),
        matrix,
    }
}

fn feedforward(
    names: &[&'static str],
    rule: impl Fn(&[usize]) -> Vec<(Vec<usize>, Matrix)> + 'static,
) -> OracleOp {
    OracleOp::Feedforward {
        names: names.to_vec(),
        rule: Box::new(rule),
    }
}

/// `R_z` angles `(control, target)` for parity outcomes `(p1, p2)`.
fn table_angles(p1: usize, p2: usize, phases: PhaseParams) -> (f64, f64) {
    use core::f64::consts::PI;
    let (t, tp) = (phases.phi_t, phases.phi_tp);
    match (p1, p2) {
        (0, 0) => (t + PI, tp + PI),
        (1, 0) => (PI - t, tp),
        (0, 1) => (t, PI - tp),
        _ => (-t, -tp),
    }
}

/// Ancilla-pair preparation on `(a, b)` from `|00⟩`.
fn prep_ops(a: usize, b: usize) -> Vec<OracleOp> {
    vec![
        gate(&[a], hadamard()),
        gate(&[b], hadamard()),
        parity("prep", a, b),
        feedforward(&["prep"], move |o| {
            if o[0] == 1 {
                vec![(vec![b], pauli_x())]
            } else {
                vec![]
            }
        }),
    ]
}

/// Controlled-phase between `control` and `target` through `ancilla`;
/// the ancilla is traced out at the end.
fn cr_ops(control: usize, target: usize, ancilla: usize, phases: PhaseParams) -> Vec<OracleOp> {
    let s = c(FRAC_1_SQRT_2, 0.0);
    vec![
        gate(&[ancilla], hadamard()),
        gate(&[ancilla], phase(phases.phi_t)),
        parity("P1", control, ancilla),
        gate(&[ancilla], hadamard()),
        gate(&[ancilla], phase(phases.phi_tp)),
        parity("P2", target, ancilla),
        OracleOp::Measure {
            name: "dressed",
            qubits: vec![ancilla],
            projectors: vec![ket_projector(&[s, s]), ket_projector(&[s, -s])],
        },
        feedforward(&["dressed"], move |o| {
            if o[0] == 1 {
                vec![(vec![target], pauli_z())]
            } else {
                vec![]
            }
        }),
        OracleOp::Trace {
            qubits: vec![ancilla],
        },
        feedforward(&["P1", "P2"], move |o| {
            let (a, b) = table_angles(o[0], o[1], phases);
            vec![(vec![control], phase(a)), (vec![target], phase(b))]
        }),
    ]
}

/// Reference circuit for a protocol, or `None` when no reference is coded
/// (the transfer-mode controlled-phase).
pub fn oracle_circuit(spec: &ProtocolSpec) -> Option<OracleCircuit> {
    let phases = spec.config.phases;
    let s = c(FRAC_1_SQRT_2, 0.0);
    let o = c(0.0, 0.0);
    match spec.kind {
        ProtocolKind::Rz { theta } => Some(OracleCircuit {
            num_qubits: 2,
            input_pairs: vec![(0, 1)],
            output_pairs: vec![(0, 1)],
            ops: vec![gate(&[0], phase(theta))],
        }),
        ProtocolKind::Hadamard => {
            let mut ops = prep_ops(2, 3);
            ops.extend(cr_ops(0, 2, 4, phases));
            ops.push(OracleOp::Measure {
                name: "D",
                qubits: vec![0, 1],
                projectors: vec![
                    ket_projector(&[o, s, s, o]),
                    ket_projector(&[o, s, -s, o]),
                    diagonal_projector(4, &[0, 3]),
                ],
            });
            ops.push(feedforward(&["D"], |o| {
                if o[0] == 1 {
                    vec![(vec![2], pauli_x()), (vec![3], pauli_x())]
                } else {
                    vec![]
                }
            }));
            Some(OracleCircuit {
                num_qubits: 5,
                input_pairs: vec![(0, 1)],
                output_pairs: vec![(2, 3)],
                ops,
            })
        }
        ProtocolKind::CPhase if spec.config.hadamard_mode == HadamardMode::InPlace => {
            let i = c(1.0, 0.0);
            #[rustfmt::skip]
            let logical_h = Matrix::from_row_slice(4, 4, &[
                i, o,  o, o,
                o, s,  s, o,
                o, s, -s, o,
                o, o,  o, i,
            ]);
            let mut ops = prep_ops(2, 3);
            ops.push(parity("P13", 0, 2));
            ops.push(feedforward(&["P13"], |o| {
                if o[0] == 0 {
                    vec![(vec![2], pauli_x()), (vec![3], pauli_x())]
                } else {
                    vec![]
                }
            }));
            ops.push(gate(&[2, 3], logical_h.clone()));
            ops.push(parity("P46", 3, 5));
            ops.push(gate(&[2, 3], logical_h));
            ops.push(OracleOp::Measure {
                name: "readout",
                qubits: vec![2, 3],
                projectors: (0..4).map(|k| diagonal_projector(4, &[k])).collect(),
            });
            ops.push(feedforward(&["P46", "readout"], |o| {
                // readout index 2 is |10⟩
                let flipped = o[1] == 2;
                let mut u = Vec::new();
                if o[0] == 0 {
                    u.push((vec![0], pauli_z()));
                }
                if flipped {
                    u.push((vec![4], pauli_z()));
                }
                u
            }));
            Some(OracleCircuit {
                num_qubits: 6,
                input_pairs: vec![(0, 1), (4, 5)],
                output_pairs: vec![(0, 1), (4, 5)],
                ops,
            })
        }
        ProtocolKind::CPhase => None,
        ProtocolKind::CrBlock => {
            let i = c(1.0, 0.0);
            // |00⟩ ↦ (|01⟩ + |10⟩)/√2 on the second pair
            #[rustfmt::skip]
            let cnot = Matrix::from_row_slice(4, 4, &[
                i, o, o, o,
                o, i, o, o,
                o, o, o, i,
                o, o, i, o,
            ]);
            let mut ops = vec![
                gate(&[2], hadamard()),
                gate(&[2, 3], cnot),
                gate(&[3], pauli_x()),
            ];
            ops.extend(cr_ops(0, 2, 4, phases));
            Some(OracleCircuit {
                num_qubits: 5,
                input_pairs: vec![(0, 1)],
                output_pairs: vec![(0, 1), (2, 3)],
                ops,
            })
        }
    }
}
