//! Ground-truth exact diagonalization: dense real-symmetric realization of a
//! Pauli sum and its full spectrum via the Jacobi eigensolver.
//!
//! The `Spectrum` produced here (and by the assembly pipeline) is the sole
//! input to all time-evolution observables: energies ascending plus the real
//! orthogonal matrix `t` whose row `I` holds the components `t_{Ix}` of
//! eigenstate `I` in the computational basis.

use crate::error::{Error, Result};
use crate::linalg::{eigh, Matrix};
use crate::pauli::{build_ising_hamiltonian, PauliSum, YParity};
use crate::state::StateVector;

use num_complex::Complex64;

/// Full eigensystem: `energies` ascending, `t` with orthonormal rows, row `I`
/// = eigenstate `I` over basis indices.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub num_sites: usize,
    pub energies: Vec<f64>,
    pub t: Matrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Eigenstate row `index` as a normalized state vector.
    pub fn eigenstate(&self, index: usize) -> Result<StateVector> {
        if index >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index,
                dim: self.dim(),
            });
        }
        let amplitudes = (0..self.dim())
            .map(|x| Complex64::new(self.t[(index, x)], 0.0))
            .collect();
        StateVector::from_amplitudes(self.num_sites, amplitudes)
    }

    /// Max deviation of `t t^T` from the identity.
    pub fn orthonormality_defect(&self) -> Result<f64> {
        let gram = self.t.matmul(&self.t.transpose())?;
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - want).abs());
            }
        }
        Ok(worst)
    }

    /// Indices grouped by degenerate energy (gap below `tol` joins a group).
    pub fn degenerate_groups(&self, tol: f64) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.dim() {
            match groups.last_mut() {
                Some(g) if (self.energies[i] - self.energies[g[0]]).abs() < tol => g.push(i),
                _ => groups.push(vec![i]),
            }
        }
        groups
    }
}

/// Dense real symmetric matrix of a Pauli sum.
///
/// Only even-Y strings have purely real matrix elements; an odd-Y term makes
/// the operator complex and is rejected.
pub fn to_dense_real(h: &PauliSum) -> Result<Matrix> {
    let n = h
        .num_sites()
        .ok_or_else(|| Error::InvalidOperand("dense matrix of the zero operator".into()))?;
    for term in h.terms() {
        if term.string.y_parity() == YParity::Odd {
            return Err(Error::NotRealRepresentable(term.string.to_string()));
        }
    }
    let dim = 1usize << n;
    let mut m = Matrix::zeros(dim, dim);
    for col in 0..dim {
        let basis = StateVector::from_basis(n, col)?;
        let applied = basis.apply_sum(h)?;
        for (row, a) in applied.iter().enumerate() {
            if a.im.abs() > 1e-12 {
                return Err(Error::NotRealRepresentable(format!(
                    "element ({row},{col}) has imaginary part {:.3e}",
                    a.im
                )));
            }
            m[(row, col)] = a.re;
        }
    }
    Ok(m)
}

/// Spectrum of a dense real symmetric matrix via cyclic Jacobi.
pub fn jacobi_eig(m: &Matrix, num_sites: usize) -> Result<Spectrum> {
    let eig = eigh(m)?;
    // linalg returns eigenvectors as columns; Spectrum wants them as rows.
    Ok(Spectrum {
        num_sites,
        energies: eig.values,
        t: eig.vectors.transpose(),
    })
}

/// Exact spectrum of the periodic transverse-field Ising chain.
pub fn oracle_spectrum(n: usize, coupling: f64, field: f64) -> Result<Spectrum> {
    let h = build_ising_hamiltonian(n, coupling, field)?;
    jacobi_eig(&to_dense_real(&h)?, n)
}
