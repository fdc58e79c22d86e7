//! Dense pure-state simulation over small registers of spin qubits.
//!
//! Basis indices are most-significant-bit first: qubit 0 is the leftmost
//! symbol of a ket, so `|01⟩` on two qubits is index 1. Bit value 0 is spin
//! up and 1 is spin down. States are values; every operation returns a new
//! state and global phases are never normalized away.

use alloc::{vec, vec::Vec};
use core::fmt;

use libm::sqrt;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::outcome::OutcomeSource;

/// Complex amplitude type used throughout the crate.
pub type C64 = Complex64;

/// Largest register the dense engine accepts.
pub const MAX_QUBITS: usize = 12;
/// Tolerance for norms and unitarity.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance for probability sums and contract checks.
pub const PROB_TOL: f64 = 1e-10;
/// Outcomes below this Born probability are treated as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Position of a physical qubit within a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitId(pub usize);

impl QubitId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for QubitId {
    fn from(index: usize) -> Self {
        QubitId(index)
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// A 2x2 unitary acting on one physical qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleQubitUnitary {
    matrix: [[C64; 2]; 2],
}

impl SingleQubitUnitary {
    /// Validates unitarity to [`NORM_TOL`].
    pub fn new(matrix: [[C64; 2]; 2]) -> Result<Self> {
        let u = SingleQubitUnitary { matrix };
        let deviation = u.unitarity_deviation();
        if deviation > NORM_TOL {
            return Err(SimError::NotUnitary { deviation });
        }
        Ok(u)
    }

    const fn raw(matrix: [[C64; 2]; 2]) -> Self {
        SingleQubitUnitary { matrix }
    }

    pub const fn identity() -> Self {
        Self::raw([[ONE, ZERO], [ZERO, ONE]])
    }

    pub const fn pauli_x() -> Self {
        Self::raw([[ZERO, ONE], [ONE, ZERO]])
    }

    pub const fn pauli_y() -> Self {
        Self::raw([[ZERO, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), ZERO]])
    }

    pub const fn pauli_z() -> Self {
        Self::raw([[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]])
    }

    pub const fn hadamard() -> Self {
        let h = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::raw([
            [h, h],
            [h, C64::new(-core::f64::consts::FRAC_1_SQRT_2, 0.0)],
        ])
    }

    /// `diag(1, e^{iθ})`: leaves spin up alone and phases spin down.
    pub fn rz(theta: f64) -> Self {
        Self::raw([[ONE, ZERO], [ZERO, C64::from_polar(1.0, theta)]])
    }

    /// `diag(e^{ia}, e^{ib})`.
    pub fn diagonal(phase0: f64, phase1: f64) -> Self {
        Self::raw([
            [C64::from_polar(1.0, phase0), ZERO],
            [ZERO, C64::from_polar(1.0, phase1)],
        ])
    }

    pub fn matrix(&self) -> &[[C64; 2]; 2] {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.matrix;
        Self::raw([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(2, 2, |r, c| self.matrix[r][c])
    }

    fn unitarity_deviation(&self) -> f64 {
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let acc: C64 = m.iter().map(|row| row[r].conj() * row[c]).sum();
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }
}

/// A dense unitary on `k` qubits, indexed MSB-first over its support.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    num_qubits: usize,
    matrix: DMatrix<C64>,
}

impl Unitary {
    pub fn new(num_qubits: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(SimError::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        let deviation = max_abs(&(matrix.adjoint() * &matrix - DMatrix::identity(dim, dim)));
        if deviation > NORM_TOL {
            return Err(SimError::NotUnitary { deviation });
        }
        Ok(Unitary { num_qubits, matrix })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }
}

/// An orthogonal projector on an ordered support of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    support: Vec<QubitId>,
    matrix: DMatrix<C64>,
}

impl Projector {
    pub fn new(support: Vec<QubitId>, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = 1usize << support.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(SimError::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        let hermitian = max_abs(&(matrix.adjoint() - &matrix));
        let idempotent = max_abs(&(&matrix * &matrix - &matrix));
        if hermitian > NORM_TOL || idempotent > NORM_TOL {
            return Err(SimError::InvalidProjector);
        }
        Ok(Projector { support, matrix })
    }

    /// `|v⟩⟨v|` for a normalized vector `v`.
    pub fn rank_one(support: Vec<QubitId>, v: &[C64]) -> Result<Self> {
        let dim = v.len();
        let m = DMatrix::from_fn(dim, dim, |r, c| v[r] * v[c].conj());
        Projector::new(support, m)
    }

    /// Diagonal projector selecting the listed computational basis indices.
    pub fn diagonal(support: Vec<QubitId>, indices: &[usize]) -> Result<Self> {
        let dim = 1usize << support.len();
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for &i in indices {
            if i >= dim {
                return Err(SimError::DimensionMismatch {
                    expected: dim,
                    got: i,
                });
            }
            m[(i, i)] = ONE;
        }
        Projector::new(support, m)
    }

    pub fn support(&self) -> &[QubitId] {
        &self.support
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }
}

/// Result of one projective measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub outcome: usize,
    pub probability: f64,
    pub state: PureState,
}

/// Normalized amplitude vector over `num_qubits` physical qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    /// All qubits spin up.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        check_register_size(num_qubits)?;
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = ONE;
        Ok(PureState {
            num_qubits,
            amplitudes,
        })
    }

    /// Computational basis state from a bit string such as `"0110"`.
    pub fn basis(num_qubits: usize, bits: &str) -> Result<Self> {
        check_register_size(num_qubits)?;
        let index = parse_bits(num_qubits, bits)?;
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[index] = ONE;
        Ok(PureState {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps an amplitude vector that must already be normalized.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let num_qubits = register_size_for(amplitudes.len())?;
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(SimError::NotNormalized { norm_sqr });
        }
        Ok(PureState {
            num_qubits,
            amplitudes,
        })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn from_unnormalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let num_qubits = register_size_for(amplitudes.len())?;
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr < ZERO_PROBABILITY {
            return Err(SimError::NotNormalized { norm_sqr });
        }
        let scale = 1.0 / sqrt(norm_sqr);
        amplitudes.iter_mut().for_each(|a| *a *= scale);
        Ok(PureState {
            num_qubits,
            amplitudes,
        })
    }

    /// Normalized superposition of labelled kets, e.g. `[("01", a), ("10", b)]`.
    pub fn from_kets(num_qubits: usize, terms: &[(&str, C64)]) -> Result<Self> {
        check_register_size(num_qubits)?;
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        for (bits, coefficient) in terms {
            amplitudes[parse_bits(num_qubits, bits)?] += *coefficient;
        }
        PureState::from_unnormalized(amplitudes)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Amplitude of the basis ket named by `bits`.
    pub fn amplitude(&self, bits: &str) -> Result<C64> {
        Ok(self.amplitudes[parse_bits(self.num_qubits, bits)?])
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.amplitudes.iter().map(|a| a.norm_sqr()).sum())
    }

    /// Basis-index mask of qubit `q`.
    pub(crate) fn mask(&self, q: QubitId) -> usize {
        1 << (self.num_qubits - 1 - q.0)
    }

    pub(crate) fn check_qubit(&self, q: QubitId) -> Result<()> {
        if q.0 >= self.num_qubits {
            return Err(SimError::QubitOutOfRange {
                qubit: q.0,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    pub(crate) fn check_support(&self, support: &[QubitId]) -> Result<()> {
        for (i, &q) in support.iter().enumerate() {
            self.check_qubit(q)?;
            if support[..i].contains(&q) {
                return Err(SimError::DuplicateQubit(q.0));
            }
        }
        Ok(())
    }

    /// `(I ⊗ … ⊗ u ⊗ … ⊗ I)|ψ⟩` with `u` on qubit `q`.
    pub fn apply_1q(&self, u: &SingleQubitUnitary, q: QubitId) -> Result<Self> {
        self.check_qubit(q)?;
        let mask = self.mask(q);
        let m = u.matrix();
        let mut out = self.amplitudes.clone();
        for i0 in (0..self.dim()).filter(|i| i & mask == 0) {
            let i1 = i0 | mask;
            let (a0, a1) = (self.amplitudes[i0], self.amplitudes[i1]);
            out[i0] = m[0][0] * a0 + m[0][1] * a1;
            out[i1] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(PureState {
            num_qubits: self.num_qubits,
            amplitudes: out,
        })
    }

    /// Applies a multi-qubit unitary on `support` (MSB-first within the support).
    pub fn apply_unitary(&self, u: &Unitary, support: &[QubitId]) -> Result<Self> {
        if u.num_qubits() != support.len() {
            return Err(SimError::DimensionMismatch {
                expected: 1 << support.len(),
                got: u.matrix().nrows(),
            });
        }
        self.check_support(support)?;
        Ok(self.apply_operator_unchecked(u.matrix(), support))
    }

    /// `M|ψ⟩` without renormalization; callers validate `support`.
    pub(crate) fn apply_operator_unchecked(&self, m: &DMatrix<C64>, support: &[QubitId]) -> Self {
        let offsets = self.support_offsets(support);
        let support_mask: usize = offsets.iter().fold(0, |acc, &o| acc | o);
        let d = offsets.len();
        let mut out = vec![ZERO; self.dim()];
        let mut gathered = vec![ZERO; d];
        for base in (0..self.dim()).filter(|i| i & support_mask == 0) {
            for (s, &off) in offsets.iter().enumerate() {
                gathered[s] = self.amplitudes[base | off];
            }
            for (r, &off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (c, g) in gathered.iter().enumerate() {
                    acc += m[(r, c)] * g;
                }
                out[base | off] = acc;
            }
        }
        PureState {
            num_qubits: self.num_qubits,
            amplitudes: out,
        }
    }

    /// Basis-index offsets for every sub-index of `support`, MSB-first.
    fn support_offsets(&self, support: &[QubitId]) -> Vec<usize> {
        let k = support.len();
        (0..1usize << k)
            .map(|s| {
                (0..k)
                    .filter(|j| s & (1 << (k - 1 - j)) != 0)
                    .fold(0, |acc, j| acc | self.mask(support[j]))
            })
            .collect()
    }

    /// `|self⟩ ⊗ |other⟩`; the other register's qubits follow this one's.
    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let num_qubits = self.num_qubits + other.num_qubits;
        check_register_size(num_qubits)?;
        let mut amplitudes = Vec::with_capacity(1 << num_qubits);
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        Ok(PureState {
            num_qubits,
            amplitudes,
        })
    }

    /// Appends `count` fresh spin-up qubits after the existing ones.
    pub fn append_zeros(&self, count: usize) -> Result<Self> {
        if count == 0 {
            return Ok(self.clone());
        }
        self.tensor(&PureState::zero(count)?)
    }

    /// Born probability of each projector, without collapsing.
    pub fn probabilities(&self, projectors: &[Projector]) -> Result<Vec<f64>> {
        validate_measurement(self, projectors)?;
        Ok(projectors
            .iter()
            .map(|p| {
                self.apply_operator_unchecked(p.matrix(), p.support())
                    .amplitudes
                    .iter()
                    .map(|a| a.norm_sqr())
                    .sum()
            })
            .collect())
    }

    /// Projective measurement with the outcome drawn from `source`.
    ///
    /// The post-measurement state is `Π_k|ψ⟩/√p_k`. Forcing an outcome whose
    /// probability is below [`ZERO_PROBABILITY`] is an error.
    pub fn measure(
        &self,
        projectors: &[Projector],
        block: &str,
        source: &mut dyn OutcomeSource,
    ) -> Result<Measurement> {
        let probabilities = self.probabilities(projectors)?;
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(SimError::NotNormalized { norm_sqr: total });
        }
        let outcome = source.select(block, &probabilities)?;
        if outcome >= probabilities.len() {
            return Err(SimError::OutcomeOutOfRange {
                block: block.into(),
                outcome,
                count: probabilities.len(),
            });
        }
        let probability = probabilities[outcome];
        if probability < ZERO_PROBABILITY {
            return Err(SimError::ZeroProbabilityBranch {
                block: block.into(),
                outcome,
                probability,
            });
        }
        let projector = &projectors[outcome];
        let mut state = self.apply_operator_unchecked(projector.matrix(), projector.support());
        let scale = 1.0 / sqrt(probability);
        state.amplitudes.iter_mut().for_each(|a| *a *= scale);
        Ok(Measurement {
            outcome,
            probability,
            state,
        })
    }

    /// Reduced density matrix of `qubits`, indexed MSB-first in the given order.
    pub fn reduced_density(&self, qubits: &[QubitId]) -> Result<DMatrix<C64>> {
        self.check_support(qubits)?;
        let offsets = self.support_offsets(qubits);
        let kept_mask: usize = offsets.iter().fold(0, |acc, &o| acc | o);
        let d = offsets.len();
        let mut rho = DMatrix::from_element(d, d, ZERO);
        for base in (0..self.dim()).filter(|i| i & kept_mask == 0) {
            for (r, &ro) in offsets.iter().enumerate() {
                let ar = self.amplitudes[base | ro];
                if ar == ZERO {
                    continue;
                }
                for (c, &co) in offsets.iter().enumerate() {
                    rho[(r, c)] += ar * self.amplitudes[base | co].conj();
                }
            }
        }
        Ok(rho)
    }

    /// Removes `qubits`, which must jointly be in a product state with the
    /// rest (reduced purity at least `1 - 1e-10`). Remaining qubits keep
    /// their relative order.
    pub fn discard_qubits(&self, qubits: &[QubitId]) -> Result<Self> {
        let rho = self.reduced_density(qubits)?;
        let purity = (&rho * &rho).trace().re;
        if purity < 1.0 - PROB_TOL {
            return Err(SimError::EntangledDiscard { purity });
        }
        let num_qubits = self.num_qubits - qubits.len();
        check_register_size(num_qubits)?;
        // Take the slice of the dominant discarded basis value; for a product
        // state it is proportional to the remaining factor.
        let dominant = (0..rho.nrows())
            .max_by(|&a, &b| rho[(a, a)].re.total_cmp(&rho[(b, b)].re))
            .unwrap_or(0);
        let offsets = self.support_offsets(qubits);
        let discarded_mask: usize = offsets.iter().fold(0, |acc, &o| acc | o);
        let kept: Vec<usize> = (0..self.num_qubits)
            .filter(|q| !qubits.contains(&QubitId(*q)))
            .collect();
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        for (new_index, slot) in amplitudes.iter_mut().enumerate() {
            let mut old = offsets[dominant];
            for (j, &q) in kept.iter().enumerate() {
                if new_index & (1 << (num_qubits - 1 - j)) != 0 {
                    old |= self.mask(QubitId(q));
                }
            }
            debug_assert_eq!(old & discarded_mask, offsets[dominant]);
            *slot = self.amplitudes[old];
        }
        PureState::from_unnormalized(amplitudes)
    }

    pub fn discard_qubit(&self, q: QubitId) -> Result<Self> {
        self.discard_qubits(&[q])
    }

    /// Reorders qubits so that new position `k` holds old qubit `order[k]`.
    pub fn permute(&self, order: &[QubitId]) -> Result<Self> {
        if order.len() != self.num_qubits {
            return Err(SimError::LengthMismatch {
                expected: self.num_qubits,
                got: order.len(),
            });
        }
        self.check_support(order)?;
        let n = self.num_qubits;
        let mut amplitudes = vec![ZERO; self.dim()];
        for (old_index, a) in self.amplitudes.iter().enumerate() {
            let mut new_index = 0;
            for (k, &q) in order.iter().enumerate() {
                if old_index & self.mask(q) != 0 {
                    new_index |= 1 << (n - 1 - k);
                }
            }
            amplitudes[new_index] = *a;
        }
        Ok(PureState {
            num_qubits: n,
            amplitudes,
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.num_qubits != other.num_qubits {
            return Err(SimError::SizeMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Multiplies every amplitude by `e^{iφ}`.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let factor = C64::from_polar(1.0, phase);
        PureState {
            num_qubits: self.num_qubits,
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }
}

/// `|⟨a|b⟩|`, insensitive to global phase.
pub fn fidelity_up_to_global_phase(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm().min(1.0))
}

/// Convenience wrapper over [`PureState::measure`].
pub fn measure_projective(
    state: &PureState,
    projectors: &[Projector],
    block: &str,
    source: &mut dyn OutcomeSource,
) -> Result<Measurement> {
    state.measure(projectors, block, source)
}

fn validate_measurement(state: &PureState, projectors: &[Projector]) -> Result<()> {
    let Some(first) = projectors.first() else {
        return Err(SimError::IncompleteProjectors { deviation: 1.0 });
    };
    let support = first.support();
    state.check_support(support)?;
    let dim = 1usize << support.len();
    let mut sum = DMatrix::from_element(dim, dim, ZERO);
    for p in projectors {
        if p.support() != support {
            return Err(SimError::IncompleteProjectors { deviation: 1.0 });
        }
        sum += p.matrix();
    }
    let deviation = max_abs(&(sum - DMatrix::identity(dim, dim)));
    if deviation > PROB_TOL {
        return Err(SimError::IncompleteProjectors { deviation });
    }
    Ok(())
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn check_register_size(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(SimError::RegisterSize {
            got: num_qubits,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

fn register_size_for(len: usize) -> Result<usize> {
    if !len.is_power_of_two() || len < 2 {
        return Err(SimError::DimensionMismatch {
            expected: len.next_power_of_two().max(2),
            got: len,
        });
    }
    let n = len.trailing_zeros() as usize;
    check_register_size(n)?;
    Ok(n)
}

fn parse_bits(num_qubits: usize, bits: &str) -> Result<usize> {
    let len = bits.chars().count();
    if len != num_qubits {
        return Err(SimError::LengthMismatch {
            expected: num_qubits,
            got: len,
        });
    }
    bits.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        other => Err(SimError::InvalidBit(other)),
    })
}
