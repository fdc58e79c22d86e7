//! Choi matrices and channel tomography from pure product inputs.

use alloc::{vec, vec::Vec};
use core::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use crate::error::{Result, SimError};
use crate::oracle::density::min_eigenvalue;
use crate::state::{max_abs, C64, PROB_TOL};

type Matrix = DMatrix<C64>;

/// `J = (1/d_in) Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)`, input factor first.
///
/// With this normalization `tr J = 1` for trace-preserving maps and the
/// partial trace over the output is `I/d_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim_in: usize,
    dim_out: usize,
    matrix: Matrix,
}

impl ChoiMatrix {
    /// Assembles `J` from the images of the matrix units,
    /// `images[i * d_in + j] = E(|i⟩⟨j|)`.
    pub fn from_unit_images(dim_in: usize, dim_out: usize, images: &[Matrix]) -> Result<Self> {
        if images.len() != dim_in * dim_in
            || images
                .iter()
                .any(|m| m.nrows() != dim_out || m.ncols() != dim_out)
        {
            return Err(SimError::DimensionMismatch {
                expected: dim_in * dim_in,
                got: images.len(),
            });
        }
        let scale = C64::new(1.0 / dim_in as f64, 0.0);
        let matrix = Matrix::from_fn(dim_in * dim_out, dim_in * dim_out, |r, c| {
            let (i, a) = (r / dim_out, r % dim_out);
            let (j, b) = (c / dim_out, c % dim_out);
            images[i * dim_in + j][(a, b)] * scale
        });
        Ok(ChoiMatrix {
            dim_in,
            dim_out,
            matrix,
        })
    }

    /// Channel `ρ ↦ Σ K ρ K†`.
    pub fn from_kraus(kraus: &[Matrix]) -> Result<Self> {
        let first = kraus.first().ok_or(SimError::DimensionMismatch {
            expected: 1,
            got: 0,
        })?;
        let (dim_out, dim_in) = first.shape();
        let mut images = Vec::with_capacity(dim_in * dim_in);
        for i in 0..dim_in {
            for j in 0..dim_in {
                let mut image = Matrix::zeros(dim_out, dim_out);
                for k in kraus {
                    if k.shape() != (dim_out, dim_in) {
                        return Err(SimError::DimensionMismatch {
                            expected: dim_in,
                            got: k.ncols(),
                        });
                    }
                    image += k.column(i) * k.column(j).adjoint();
                }
                images.push(image);
            }
        }
        ChoiMatrix::from_unit_images(dim_in, dim_out, &images)
    }

    /// Channel `ρ ↦ U ρ U†` for a unitary or isometry `U`.
    pub fn from_unitary(u: &Matrix) -> Result<Self> {
        ChoiMatrix::from_kraus(core::slice::from_ref(u))
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// `Tr_out J`, which is `I/d_in` for trace-preserving channels.
    pub fn output_partial_trace(&self) -> Matrix {
        Matrix::from_fn(self.dim_in, self.dim_in, |i, j| {
            (0..self.dim_out)
                .map(|a| self.matrix[(i * self.dim_out + a, j * self.dim_out + a)])
                .sum()
        })
    }

    /// Largest deviation of `Tr_out J` from `I/d_in`.
    pub fn trace_preservation_error(&self) -> f64 {
        let target =
            Matrix::identity(self.dim_in, self.dim_in) * C64::new(1.0 / self.dim_in as f64, 0.0);
        max_abs(&(self.output_partial_trace() - target))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preservation_error() <= PROB_TOL
    }

    pub fn is_completely_positive(&self) -> bool {
        self.min_eigenvalue() >= -PROB_TOL
    }
}

/// `Re tr(a†b) / √(tr(a†a) tr(b†b))`, clamped to `[0, 1]`.
pub fn choi_fidelity(a: &ChoiMatrix, b: &ChoiMatrix) -> Result<f64> {
    if a.dim_in != b.dim_in || a.dim_out != b.dim_out {
        return Err(SimError::DimensionMismatch {
            expected: a.matrix.nrows(),
            got: b.matrix.nrows(),
        });
    }
    let inner = |x: &Matrix, y: &Matrix| {
        x.iter()
            .zip(y.iter())
            .map(|(p, q)| p.conj() * q)
            .sum::<C64>()
    };
    let ab = inner(&a.matrix, &b.matrix).re;
    let norm = libm::sqrt(inner(&a.matrix, &a.matrix).re * inner(&b.matrix, &b.matrix).re);
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok((ab / norm).clamp(0.0, 1.0))
}

/// `|0⟩, |1⟩, |+⟩, |−⟩, |+i⟩, |−i⟩`.
pub fn six_states() -> [[C64; 2]; 6] {
    let s = FRAC_1_SQRT_2;
    [
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        [C64::new(s, 0.0), C64::new(s, 0.0)],
        [C64::new(s, 0.0), C64::new(-s, 0.0)],
        [C64::new(s, 0.0), C64::new(0.0, s)],
        [C64::new(s, 0.0), C64::new(0.0, -s)],
    ]
}

/// `|i⟩⟨j|` on one qubit as a combination of six-state projectors.
fn unit_expansion(i: usize, j: usize) -> Vec<(usize, C64)> {
    let h = C64::new(0.5, 0.0);
    let ih = C64::new(0.0, 0.5);
    match (i, j) {
        (0, 0) => vec![(0, C64::new(1.0, 0.0))],
        (1, 1) => vec![(1, C64::new(1.0, 0.0))],
        // (X + iY)/2 with X = ρ₊ − ρ₋, Y = ρ₊ᵢ − ρ₋ᵢ
        (0, 1) => vec![(2, h), (3, -h), (4, ih), (5, -ih)],
        _ => vec![(2, h), (3, -h), (4, -ih), (5, ih)],
    }
}

/// Reconstructs the Choi matrix of a channel on `k_in` qubits from its
/// action on the `6^k_in` pure product inputs. `process` receives the joint
/// input amplitude vector (qubit 0 most significant) and returns the output
/// density matrix.
pub fn tomography(
    k_in: usize,
    dim_out: usize,
    mut process: impl FnMut(&[C64]) -> Result<Matrix>,
) -> Result<ChoiMatrix> {
    let six = six_states();
    let count = 6usize.pow(k_in as u32);
    let digits = |mut index: usize| {
        let mut d = vec![0; k_in];
        for slot in d.iter_mut().rev() {
            *slot = index % 6;
            index /= 6;
        }
        d
    };
    let mut outputs = Vec::with_capacity(count);
    for index in 0..count {
        let mut v = vec![C64::new(1.0, 0.0)];
        for d in digits(index) {
            v = v
                .iter()
                .flat_map(|a| six[d].iter().map(move |b| a * b))
                .collect();
        }
        outputs.push(process(&v)?);
    }

    let dim_in = 1usize << k_in;
    let mut images = Vec::with_capacity(dim_in * dim_in);
    for i in 0..dim_in {
        for j in 0..dim_in {
            // Expand |i⟩⟨j| = ⊗_q |i_q⟩⟨j_q| into product-state terms.
            let mut terms = vec![(0usize, C64::new(1.0, 0.0))];
            for q in 0..k_in {
                let (iq, jq) = ((i >> (k_in - 1 - q)) & 1, (j >> (k_in - 1 - q)) & 1);
                terms = terms
                    .iter()
                    .flat_map(|&(index, coeff)| {
                        unit_expansion(iq, jq)
                            .into_iter()
                            .map(move |(s, c)| (index * 6 + s, coeff * c))
                    })
                    .collect();
            }
            let mut image = Matrix::zeros(dim_out, dim_out);
            for (index, coeff) in terms {
                image += &outputs[index] * coeff;
            }
            images.push(image);
        }
    }
    ChoiMatrix::from_unit_images(dim_in, dim_out, &images)
}
