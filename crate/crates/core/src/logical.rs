//! Logical qubits encoded on antiparallel spin pairs: `|0_L⟩ = |01⟩`,
//! `|1_L⟩ = |10⟩`. The span of these two kets is immune to collective
//! dephasing.

use alloc::{vec, vec::Vec};
use core::fmt;

use libm::sqrt;

use crate::error::{Result, SimError};
use crate::state::{PureState, QubitId, C64, NORM_TOL, ONE, PROB_TOL, ZERO};

/// An ordered pair of physical qubits carrying one logical qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LogicalQubit {
    first: QubitId,
    second: QubitId,
}

impl LogicalQubit {
    pub fn new(first: impl Into<QubitId>, second: impl Into<QubitId>) -> Result<Self> {
        let (first, second) = (first.into(), second.into());
        if first == second {
            return Err(SimError::DuplicateQubit(first.0));
        }
        Ok(LogicalQubit { first, second })
    }

    pub fn first(&self) -> QubitId {
        self.first
    }

    pub fn second(&self) -> QubitId {
        self.second
    }

    pub fn qubits(&self) -> [QubitId; 2] {
        [self.first, self.second]
    }

    /// The same pair after qubit `removed` has been dropped from the register.
    pub(crate) fn shifted_past(self, removed: QubitId) -> Self {
        let shift = |q: QubitId| if q > removed { QubitId(q.0 - 1) } else { q };
        LogicalQubit {
            first: shift(self.first),
            second: shift(self.second),
        }
    }
}

impl fmt::Display for LogicalQubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.first.0, self.second.0)
    }
}

/// Amplitudes `(α, β)` of `α|0_L⟩ + β|1_L⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogicalAmplitudes {
    pub alpha: C64,
    pub beta: C64,
}

impl LogicalAmplitudes {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let norm_sqr = alpha.norm_sqr() + beta.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(SimError::NotNormalized { norm_sqr });
        }
        Ok(LogicalAmplitudes { alpha, beta })
    }

    /// Rescales an arbitrary nonzero pair.
    pub fn normalized(alpha: C64, beta: C64) -> Result<Self> {
        let norm_sqr = alpha.norm_sqr() + beta.norm_sqr();
        if norm_sqr < PROB_TOL {
            return Err(SimError::NotNormalized { norm_sqr });
        }
        let s = 1.0 / sqrt(norm_sqr);
        Ok(LogicalAmplitudes {
            alpha: alpha * s,
            beta: beta * s,
        })
    }

    pub fn zero() -> Self {
        LogicalAmplitudes {
            alpha: ONE,
            beta: ZERO,
        }
    }

    pub fn one() -> Self {
        LogicalAmplitudes {
            alpha: ZERO,
            beta: ONE,
        }
    }

    pub fn as_vector(&self) -> [C64; 2] {
        [self.alpha, self.beta]
    }

    /// The representative with α real and non-negative (β when α = 0).
    pub fn canonical(&self) -> Self {
        let [alpha, beta] = {
            let mut v = [self.alpha, self.beta];
            canonicalize_phase(&mut v);
            v
        };
        LogicalAmplitudes { alpha, beta }
    }
}

/// `α|01⟩ + β|10⟩` on a fresh two-qubit register.
pub fn encode_logical(amps: &LogicalAmplitudes) -> Result<PureState> {
    LogicalAmplitudes::new(amps.alpha, amps.beta)?;
    PureState::from_amplitudes(vec![ZERO, amps.alpha, amps.beta, ZERO])
}

/// Encodes a joint logical amplitude vector (length `2^k`, logical qubit 0
/// most significant) onto `k` consecutive pairs.
pub fn encode_register(logical: &[C64]) -> Result<PureState> {
    let k = logical.len().trailing_zeros() as usize;
    if !logical.len().is_power_of_two() || k == 0 {
        return Err(SimError::DimensionMismatch {
            expected: logical.len().next_power_of_two().max(2),
            got: logical.len(),
        });
    }
    let mut amplitudes = vec![ZERO; 1 << (2 * k)];
    for (l, a) in logical.iter().enumerate() {
        amplitudes[physical_index(l, k)] = *a;
    }
    PureState::from_amplitudes(amplitudes)
}

/// Physical basis index of logical basis `l` on `k` consecutive pairs.
fn physical_index(l: usize, k: usize) -> usize {
    (0..k).fold(0, |acc, j| {
        let bit = (l >> (k - 1 - j)) & 1;
        // |0_L⟩ = 01, |1_L⟩ = 10
        (acc << 2) | if bit == 0 { 0b01 } else { 0b10 }
    })
}

/// Reads `(α, β)` back from a pair that lies in the DFS and is unentangled
/// with the rest of the register. Phase is fixed as in
/// [`LogicalAmplitudes::canonical`].
pub fn decode_logical(state: &PureState, pair: LogicalQubit) -> Result<LogicalAmplitudes> {
    let v = decode_register(state, &[pair])?;
    Ok(LogicalAmplitudes {
        alpha: v[0],
        beta: v[1],
    })
}

/// Joint logical amplitudes of `pairs` (pair 0 most significant).
///
/// Fails with [`SimError::Leakage`] if more than `1e-10` of the weight lies
/// outside the DFS of the pairs, and with [`SimError::EntangledLogical`] if
/// the pairs are entangled with the remaining qubits.
pub fn decode_register(state: &PureState, pairs: &[LogicalQubit]) -> Result<Vec<C64>> {
    check_pairs(state, pairs)?;
    let leaked = 1.0 - dfs_weight(state, pairs)?;
    if leaked > PROB_TOL {
        return Err(SimError::Leakage { leaked });
    }
    let k = pairs.len();
    let firsts: Vec<usize> = pairs.iter().map(|p| state.mask(p.first)).collect();
    let pair_mask = pairs
        .iter()
        .fold(0, |acc, p| acc | state.mask(p.first) | state.mask(p.second));

    // Columns of the (logical x rest) amplitude matrix, one per rest index.
    let mut columns: Vec<(usize, Vec<C64>)> = Vec::new();
    for (index, a) in state.amplitudes().iter().enumerate() {
        if *a == ZERO || !in_dfs(state, pairs, index) {
            continue;
        }
        let rest = index & !pair_mask;
        let logical = firsts
            .iter()
            .fold(0, |acc, m| (acc << 1) | usize::from(index & m != 0));
        let column = match columns.iter_mut().find(|(r, _)| *r == rest) {
            Some((_, column)) => column,
            None => {
                columns.push((rest, vec![ZERO; 1 << k]));
                &mut columns.last_mut().expect("just pushed").1
            }
        };
        column[logical] = *a;
    }
    let norm_sqr = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let (_, dominant) = columns
        .iter()
        .max_by(|a, b| norm_sqr(&a.1).total_cmp(&norm_sqr(&b.1)))
        .ok_or(SimError::Leakage { leaked: 1.0 })?;
    let scale = 1.0 / sqrt(norm_sqr(dominant));
    let mut v: Vec<C64> = dominant.iter().map(|z| z * scale).collect();

    let mut residual = 0.0;
    for (_, column) in &columns {
        let overlap: C64 = v.iter().zip(column).map(|(x, y)| x.conj() * y).sum();
        residual += column
            .iter()
            .zip(&v)
            .map(|(y, x)| (y - x * overlap).norm_sqr())
            .sum::<f64>();
    }
    if residual > PROB_TOL {
        return Err(SimError::EntangledLogical { residual });
    }
    canonicalize_phase(&mut v);
    Ok(v)
}

/// Squared norm of the projection onto the subspace where every pair is
/// antiparallel.
pub fn dfs_weight(state: &PureState, pairs: &[LogicalQubit]) -> Result<f64> {
    check_pairs(state, pairs)?;
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| in_dfs(state, pairs, *i))
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

fn in_dfs(state: &PureState, pairs: &[LogicalQubit], index: usize) -> bool {
    pairs
        .iter()
        .all(|p| (index & state.mask(p.first) != 0) != (index & state.mask(p.second) != 0))
}

fn check_pairs(state: &PureState, pairs: &[LogicalQubit]) -> Result<()> {
    let mut seen: Vec<QubitId> = Vec::with_capacity(2 * pairs.len());
    for p in pairs {
        for q in p.qubits() {
            state.check_qubit(q)?;
            if seen.contains(&q) {
                return Err(SimError::OverlappingPairs(q.0));
            }
            seen.push(q);
        }
    }
    Ok(())
}

/// Rotates the global phase so the first non-negligible entry is real and
/// non-negative.
pub(crate) fn canonicalize_phase(v: &mut [C64]) {
    if let Some(lead) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let rotation = lead.conj() / lead.norm();
        v.iter_mut().for_each(|z| *z *= rotation);
    }
}

/// The four logical Bell states on two pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicalBell {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl LogicalBell {
    pub const ALL: [LogicalBell; 4] = [
        LogicalBell::PsiPlus,
        LogicalBell::PsiMinus,
        LogicalBell::PhiPlus,
        LogicalBell::PhiMinus,
    ];
}

/// `Ψ± = (|0110⟩ ± |1001⟩)/√2`, `Φ± = (|0101⟩ ± |1010⟩)/√2`.
pub fn logical_bell(kind: LogicalBell) -> PureState {
    let (a, b, sign) = match kind {
        LogicalBell::PsiPlus => ("0110", "1001", 1.0),
        LogicalBell::PsiMinus => ("0110", "1001", -1.0),
        LogicalBell::PhiPlus => ("0101", "1010", 1.0),
        LogicalBell::PhiMinus => ("0101", "1010", -1.0),
    };
    PureState::from_kets(4, &[(a, ONE), (b, C64::new(sign, 0.0))])
        .expect("Bell kets are well formed")
}
