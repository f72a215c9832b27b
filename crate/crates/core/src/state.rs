//! Complex state vectors over the computational basis, Pauli-string action,
//! expectation values, and exact unitary propagation `exp(-i t G)` for
//! Hermitian Pauli sums.
//!
//! Convention: site `i` is bit `i` of the basis index (site 0 = least
//! significant bit). Basis labels are rendered with site 0 leftmost, so the
//! label `"110"` on three sites is index 3.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{eigh, Matrix};
use crate::pauli::{Pauli, PauliString, PauliSum};

/// Normalized (by construction of the public constructors) complex state on
/// `n` qubits, `2^n` amplitudes.
#[derive(Clone, Debug)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<Complex64>,
}

/// Parse a basis label like "011" (site 0 leftmost) into a basis index.
pub fn parse_basis_label(label: &str, n: usize) -> Result<usize> {
    if label.len() != n {
        return Err(Error::InvalidParameter(format!(
            "basis label '{label}' has {} sites, expected {n}",
            label.len()
        )));
    }
    let mut index = 0usize;
    for (site, c) in label.chars().enumerate() {
        match c {
            '0' => {}
            '1' => index |= 1 << site,
            _ => {
                return Err(Error::Parse {
                    offset: site,
                    message: format!("invalid bit '{c}' in basis label"),
                })
            }
        }
    }
    Ok(index)
}

/// Render a basis index as a label with site 0 leftmost.
pub fn basis_label(index: usize, n: usize) -> String {
    (0..n)
        .map(|site| if index >> site & 1 == 1 { '1' } else { '0' })
        .collect()
}

impl StateVector {
    pub fn from_amplitudes(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n == 0 || n > crate::pauli::MAX_SITES {
            return Err(Error::InvalidParameter(format!("bad site count {n}")));
        }
        if amplitudes.len() != 1 << n {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {n} sites",
                amplitudes.len()
            )));
        }
        let mut s = StateVector { n, amplitudes };
        s.normalize()?;
        Ok(s)
    }

    pub fn from_basis(n: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        StateVector::from_amplitudes(n, amplitudes)
    }

    pub fn from_label(label: &str) -> Result<Self> {
        let n = label.len();
        StateVector::from_basis(n, parse_basis_label(label, n)?)
    }

    /// Real-weighted superposition of labeled basis states, normalized.
    pub fn from_superposition(n: usize, parts: &[(&str, f64)]) -> Result<Self> {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        for &(label, w) in parts {
            amplitudes[parse_basis_label(label, n)?] += Complex64::new(w, 0.0);
        }
        StateVector::from_amplitudes(n, amplitudes)
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn normalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if !(norm.is_finite() && norm > 1e-14) {
            return Err(Error::Numerical(format!(
                "cannot normalize state with norm {norm:.3e}"
            )));
        }
        for a in &mut self.amplitudes {
            *a /= norm;
        }
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "inner product across {} and {} sites",
                self.n, other.n
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Apply a Pauli string: amplitudes permuted by the X/Y flips with the
    /// accumulated Y/Z phases. The result stays normalized.
    pub fn apply_pauli(&self, string: &PauliString) -> Result<StateVector> {
        if string.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "string on {} sites applied to {}-site state",
                string.len(),
                self.n
            )));
        }
        let mut flip = 0usize;
        let mut y_sites = Vec::new();
        let mut z_mask = 0usize;
        for (site, &l) in string.letters().iter().enumerate() {
            match l {
                Pauli::I => {}
                Pauli::X => flip |= 1 << site,
                Pauli::Y => {
                    flip |= 1 << site;
                    y_sites.push(site);
                }
                Pauli::Z => z_mask |= 1 << site,
            }
        }
        let i_c = Complex64::new(0.0, 1.0);
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (idx, &a) in self.amplitudes.iter().enumerate() {
            // Y on site s maps |b> -> i(-1)^b |1-b>; Z gives (-1)^b.
            let mut phase = Complex64::new(1.0, 0.0);
            for &s in &y_sites {
                phase *= i_c;
                if idx >> s & 1 == 1 {
                    phase = -phase;
                }
            }
            if ((idx & z_mask).count_ones() & 1) == 1 {
                phase = -phase;
            }
            out[idx ^ flip] += phase * a;
        }
        Ok(StateVector {
            n: self.n,
            amplitudes: out,
        })
    }

    /// Raw (unnormalized) amplitudes of `O |psi>` for a Pauli sum.
    pub fn apply_sum(&self, op: &PauliSum) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for term in op.terms() {
            let applied = self.apply_pauli(&term.string)?;
            for (o, a) in out.iter_mut().zip(applied.amplitudes()) {
                *o += term.coefficient * a;
            }
        }
        Ok(out)
    }

    /// `|| (H - e) |psi> ||` — the eigen-residual at trial energy `e`.
    pub fn residual_norm(&self, op: &PauliSum, e: f64) -> Result<f64> {
        let h_psi = self.apply_sum(op)?;
        Ok(h_psi
            .iter()
            .zip(&self.amplitudes)
            .map(|(h, a)| (h - e * a).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// `<psi| O |psi>` for a Hermitian Pauli sum; guaranteed real.
    pub fn expectation(&self, op: &PauliSum) -> Result<f64> {
        let mut total = Complex64::new(0.0, 0.0);
        for term in op.terms() {
            let applied = self.apply_pauli(&term.string)?;
            total += term.coefficient * self.inner(&applied)?;
        }
        Ok(total.re)
    }

    /// `<self| P |other>` as a complex number; the imaginary part of such
    /// elements drives the imaginary-time update's right-hand side.
    pub fn matrix_element(&self, string: &PauliString, other: &StateVector) -> Result<Complex64> {
        let applied = other.apply_pauli(string)?;
        self.inner(&applied)
    }

    /// Cyclic translation of sites, `i -> i+1 (mod N)`.
    pub fn translate(&self) -> StateVector {
        let n = self.n;
        let mask = (1usize << n) - 1;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (idx, &a) in self.amplitudes.iter().enumerate() {
            let rotated = ((idx << 1) | (idx >> (n - 1))) & mask;
            out[rotated] = a;
        }
        StateVector {
            n,
            amplitudes: out,
        }
    }

    /// Spatial reflection of sites, `i -> -i (mod N)`.
    pub fn reflect(&self) -> StateVector {
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (idx, &a) in self.amplitudes.iter().enumerate() {
            let mut r = 0usize;
            for site in 0..n {
                if idx >> site & 1 == 1 {
                    r |= 1 << ((n - site) % n);
                }
            }
            out[r] = a;
        }
        StateVector {
            n,
            amplitudes: out,
        }
    }

    /// Largest imaginary amplitude magnitude after removing the global phase
    /// (the phase of the largest-magnitude amplitude).
    pub fn max_imag_after_dephasing(&self) -> f64 {
        let pivot = self
            .amplitudes
            .iter()
            .cloned()
            .max_by(|a, b| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap())
            .unwrap();
        let phase = pivot / pivot.norm();
        self.amplitudes
            .iter()
            .map(|a| (a / phase).im.abs())
            .fold(0.0, f64::max)
    }

    /// Rotate out the global phase and drop imaginary parts; errors if any
    /// imaginary residue exceeds `tol`.
    pub fn to_real(&self, tol: f64) -> Result<StateVector> {
        let max_imag = self.max_imag_after_dephasing();
        if max_imag > tol {
            return Err(Error::RealnessViolation { max_imag });
        }
        let pivot = self
            .amplitudes
            .iter()
            .cloned()
            .max_by(|a, b| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap())
            .unwrap();
        let phase = pivot / pivot.norm();
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|a| Complex64::new((a / phase).re, 0.0))
            .collect();
        StateVector::from_amplitudes(self.n, amplitudes)
    }
}

/// Dense complex Hermitian matrix of a real-weighted Pauli sum.
fn dense_matrix(op: &PauliSum, n: usize) -> Result<Vec<Vec<Complex64>>> {
    let dim = 1usize << n;
    let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for term in op.terms() {
        if term.string.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "term on {} sites in {n}-site operator",
                term.string.len()
            )));
        }
        #[allow(clippy::needless_range_loop)]
        for col in 0..dim {
            let basis = StateVector::from_basis(n, col)?;
            let applied = basis.apply_pauli(&term.string)?;
            for (row, &a) in applied.amplitudes().iter().enumerate() {
                m[row][col] += term.coefficient * a;
            }
        }
    }
    Ok(m)
}

/// Exact application of `exp(-i t G) |psi>` for a Hermitian Pauli sum `G`.
///
/// `G` is diagonalized through its real symmetric embedding
/// `[[Re G, -Im G], [Im G, Re G]]`; embedding eigenvectors come in
/// degenerate pairs from which complex eigenvectors are recovered by
/// Gram-Schmidt within each degenerate group.
pub fn exp_apply(op: &PauliSum, t: f64, psi: &StateVector) -> Result<StateVector> {
    if op.is_zero() || t == 0.0 {
        return Ok(psi.clone());
    }
    let n = psi.num_sites();
    let dim = psi.dim();
    let g = dense_matrix(op, n)?;

    let mut embed = Matrix::zeros(2 * dim, 2 * dim);
    for i in 0..dim {
        for j in 0..dim {
            embed[(i, j)] = g[i][j].re;
            embed[(i + dim, j + dim)] = g[i][j].re;
            embed[(i, j + dim)] = -g[i][j].im;
            embed[(i + dim, j)] = g[i][j].im;
        }
    }
    let eig = eigh(&embed)?;

    // Recover `dim` orthonormal complex eigenvectors from the 2*dim real
    // candidates z = x + i y. Each complex eigenvector appears twice (as z
    // and i z), and for eigenvalue pairs +lam/-lam close to zero the two
    // eigenvectors are themselves nearly parallel, so a fixed independence
    // threshold is unreliable. Pivoted Gram-Schmidt avoids any threshold:
    // at every round the candidate with the largest residual norm is kept,
    // which can never be a roundoff leftover while a genuine new direction
    // remains, and the candidates span all of C^dim by construction.
    let mut pool: Vec<(f64, Vec<Complex64>)> = (0..2 * dim)
        .map(|k| {
            let z = (0..dim)
                .map(|i| Complex64::new(eig.vectors[(i, k)], eig.vectors[(i + dim, k)]))
                .collect();
            (eig.values[k], z)
        })
        .collect();
    let mut kept: Vec<(f64, Vec<Complex64>)> = Vec::new();
    while kept.len() < dim {
        let (best, best_norm) = pool
            .iter()
            .enumerate()
            .map(|(k, (_, z))| (k, z.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("candidate pool is never empty before dim keeps");
        if best_norm < 1e-8 {
            return Err(Error::Numerical(format!(
                "recovered {} of {dim} complex eigenvectors from the real embedding",
                kept.len()
            )));
        }
        let (lam, mut z) = pool.swap_remove(best);
        for zi in &mut z {
            *zi /= best_norm;
        }
        for (_, other) in &mut pool {
            let overlap: Complex64 = z.iter().zip(other.iter()).map(|(a, b)| a.conj() * b).sum();
            for (oi, zi) in other.iter_mut().zip(&z) {
                *oi -= overlap * zi;
            }
        }
        kept.push((lam, z));
    }

    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (lam, z) in &kept {
        let proj: Complex64 = z
            .iter()
            .zip(psi.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = Complex64::from_polar(1.0, -t * lam);
        let w = phase * proj;
        for (o, a) in out.iter_mut().zip(z) {
            *o += w * a;
        }
    }
    StateVector::from_amplitudes(n, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{build_ising_hamiltonian, PauliTerm};

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn basis_label_roundtrip() {
        assert_eq!(parse_basis_label("110", 3).unwrap(), 3);
        assert_eq!(parse_basis_label("001", 3).unwrap(), 4);
        assert_eq!(basis_label(3, 3), "110");
        for idx in 0..8 {
            assert_eq!(parse_basis_label(&basis_label(idx, 3), 3).unwrap(), idx);
        }
        assert!(parse_basis_label("102", 3).is_err());
        assert!(parse_basis_label("10", 3).is_err());
    }

    #[test]
    fn superposition_normalizes() {
        let s = StateVector::from_superposition(2, &[("00", 1.0), ("11", 1.0)]).unwrap();
        assert_close(s.norm(), 1.0, 1e-14);
        assert_close(s.amplitudes()[0].re, std::f64::consts::FRAC_1_SQRT_2, 1e-14);
        assert_close(s.amplitudes()[3].re, std::f64::consts::FRAC_1_SQRT_2, 1e-14);
    }

    #[test]
    fn pauli_action_on_basis_states() {
        // X on site 0 of |00> -> |10>  (index 0 -> 1)
        let s = StateVector::from_label("00").unwrap();
        let t = s.apply_pauli(&ps("XI")).unwrap();
        assert_close(t.amplitudes()[1].re, 1.0, 1e-15);

        // Z|1> = -|1>
        let s = StateVector::from_label("1").unwrap();
        let t = s.apply_pauli(&ps("Z")).unwrap();
        assert_close(t.amplitudes()[1].re, -1.0, 1e-15);

        // Y|0> = i|1>, Y|1> = -i|0>
        let s = StateVector::from_label("0").unwrap();
        let t = s.apply_pauli(&ps("Y")).unwrap();
        assert_close(t.amplitudes()[1].im, 1.0, 1e-15);
        let s = StateVector::from_label("1").unwrap();
        let t = s.apply_pauli(&ps("Y")).unwrap();
        assert_close(t.amplitudes()[0].im, -1.0, 1e-15);
    }

    #[test]
    fn pauli_action_matches_symbolic_product() {
        let s = StateVector::from_superposition(2, &[("00", 0.5), ("10", 1.0), ("11", -0.25)])
            .unwrap();
        let a = ps("XY");
        let b = ps("ZX");
        let (phase, prod) = a.multiply(&b).unwrap();
        let via_product = s.apply_pauli(&prod).unwrap();
        let sequential = s.apply_pauli(&b).unwrap().apply_pauli(&a).unwrap();
        for (x, y) in sequential
            .amplitudes()
            .iter()
            .zip(via_product.amplitudes())
        {
            let scaled = phase.as_complex() * y;
            assert!((x - scaled).norm() < 1e-14);
        }
    }

    #[test]
    fn ising_expectation_values() {
        let h = build_ising_hamiltonian(3, 0.6, 1.0).unwrap();
        // |000>: all Z_i give +1, XX terms vanish -> E = -3 h_T = -3
        let s = StateVector::from_label("000").unwrap();
        assert_close(s.expectation(&h).unwrap(), -3.0, 1e-14);
        // |111>: E = +3
        let s = StateVector::from_label("111").unwrap();
        assert_close(s.expectation(&h).unwrap(), 3.0, 1e-14);
        // |100>: one flipped spin -> Z sum = -1+1+1 = 1, E = -1
        let s = StateVector::from_label("100").unwrap();
        assert_close(s.expectation(&h).unwrap(), -1.0, 1e-14);
    }

    #[test]
    fn translation_and_reflection() {
        // '001' means site 2 occupied; translate moves it to site 0: '100'.
        let s = StateVector::from_label("001").unwrap();
        let t = s.translate();
        assert_close(t.fidelity(&StateVector::from_label("100").unwrap()).unwrap(), 1.0, 1e-14);

        // reflect fixes site 0 and swaps sites 1 and 2: '010' -> '001'
        let s = StateVector::from_label("010").unwrap();
        let r = s.reflect();
        assert_close(r.fidelity(&StateVector::from_label("001").unwrap()).unwrap(), 1.0, 1e-14);

        // translate three times is the identity on 3 sites
        let s = StateVector::from_superposition(3, &[("110", 1.0), ("001", -0.5)]).unwrap();
        let t3 = s.translate().translate().translate();
        assert_close(s.fidelity(&t3).unwrap(), 1.0, 1e-13);
    }

    #[test]
    fn exp_apply_single_qubit_rotation() {
        // exp(-i theta X/2)|0> has |<1|psi>|^2 = sin^2(theta/2)
        let x = PauliSum::from_terms([PauliTerm::new(0.5, ps("X")).unwrap()]).unwrap();
        let theta = 0.7;
        let s = StateVector::from_label("0").unwrap();
        let out = exp_apply(&x, theta, &s).unwrap();
        assert_close(out.amplitudes()[1].norm_sqr(), (theta / 2.0).sin().powi(2), 1e-12);
        assert_close(out.amplitudes()[0].re, (theta / 2.0).cos(), 1e-12);
    }

    #[test]
    fn exp_apply_group_law_and_unitarity() {
        let h = build_ising_hamiltonian(3, 0.6, 1.0).unwrap();
        let s = StateVector::from_superposition(3, &[("000", 1.0), ("110", 0.5)]).unwrap();
        let a = exp_apply(&h, 0.3, &exp_apply(&h, 0.2, &s).unwrap()).unwrap();
        let b = exp_apply(&h, 0.5, &s).unwrap();
        assert_close(a.fidelity(&b).unwrap(), 1.0, 1e-10);
        assert_close(a.norm(), 1.0, 1e-12);
        // energy is conserved under real-time evolution
        assert_close(
            a.expectation(&h).unwrap(),
            s.expectation(&h).unwrap(),
            1e-10,
        );
    }

    #[test]
    fn exp_apply_with_y_terms_produces_complex_generator() {
        // generator with Y has complex matrix elements; check unitarity and
        // inverse
        let g = PauliSum::from_terms([
            PauliTerm::new(0.4, ps("YX")).unwrap(),
            PauliTerm::new(-0.2, ps("ZY")).unwrap(),
        ])
        .unwrap();
        let s = StateVector::from_superposition(2, &[("00", 1.0), ("01", -0.3)]).unwrap();
        let fwd = exp_apply(&g, 0.8, &s).unwrap();
        let back = exp_apply(&g, -0.8, &fwd).unwrap();
        assert_close(back.fidelity(&s).unwrap(), 1.0, 1e-10);
    }

    #[test]
    fn realness_check() {
        let s = StateVector::from_superposition(2, &[("00", 1.0), ("11", -1.0)]).unwrap();
        assert!(s.to_real(1e-10).is_ok());

        let y = PauliSum::from_terms([PauliTerm::new(1.0, ps("YI")).unwrap()]).unwrap();
        let rotated = exp_apply(&y, 0.3, &s).unwrap();
        // Y rotations keep real amplitudes real
        assert!(rotated.to_real(1e-9).is_ok());

        let x = PauliSum::from_terms([PauliTerm::new(1.0, ps("XI")).unwrap()]).unwrap();
        let complex = exp_apply(&x, 0.3, &s).unwrap();
        assert!(complex.to_real(1e-9).is_err());
    }
}
