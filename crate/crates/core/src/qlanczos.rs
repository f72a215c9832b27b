//! Krylov-subspace eigensolver over an imaginary-time trajectory.
//!
//! Even-step states |Phi_l> of a QITE trace span a small Krylov space whose
//! overlap and Hamiltonian matrices are assembled purely from recorded
//! energies and normalization constants: `T_{ll'} = c_l c_{l'} / c_r^2` and
//! `Hm_{ll'} = T_{ll'} E_r` with `r = (l + l')/2`. The generalized
//! eigenproblem `Hm x = E T x` is solved by whitening T with an eigenvalue
//! floor, candidates are reconstructed as statevectors, and an energy
//! uncertainty filter selects trustworthy ones. The (l, m) scan mirrors the
//! way the method is used in practice: try many index pairs, keep the
//! minimum-uncertainty candidate.

use crate::error::{Error, Result};
use crate::linalg::{eigh, Matrix};
use crate::pauli::PauliSum;
use crate::qite::QiteTrace;
use crate::state::StateVector;

/// Strictly increasing even QITE step indices spanning the Krylov space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KrylovSelection {
    indices: Vec<usize>,
}

impl KrylovSelection {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "Krylov selection needs >= 2 indices, got {}",
                indices.len()
            )));
        }
        for w in indices.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter(
                    "Krylov indices must be strictly increasing".into(),
                ));
            }
        }
        if let Some(odd) = indices.iter().find(|i| *i % 2 != 0) {
            return Err(Error::InvalidParameter(format!(
                "Krylov index {odd} is odd; midpoints (l + l')/2 require even indices"
            )));
        }
        Ok(KrylovSelection { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dimension(&self) -> usize {
        self.indices.len()
    }
}

/// One solved and reconstructed eigen-candidate.
#[derive(Clone, Debug)]
pub struct Candidate {
    /// Reported energy: the pencil eigenvalue in exact workflows, the
    /// Rayleigh quotient of the reconstructed state in noisy ones.
    pub energy: f64,
    /// Pencil eigenvalue.
    pub energy_pencil: f64,
    /// `<psi|H|psi>` of the reconstructed state.
    pub energy_rayleigh: f64,
    /// Coefficients over the Krylov basis.
    pub x: Vec<f64>,
    pub state: StateVector,
    /// Energy uncertainty `sqrt(<H^2> - <H>^2)` of the state.
    pub delta_e: f64,
    pub selection: KrylovSelection,
}

/// Overlap and Hamiltonian matrices of the selected Krylov vectors,
/// assembled from the trace's recorded energies and `1/c^2` sequence alone.
pub fn krylov_matrices(trace: &QiteTrace, sel: &KrylovSelection) -> Result<(Matrix, Matrix)> {
    let len = trace.len();
    for &l in sel.indices() {
        if l >= len {
            return Err(Error::IndexOutOfRange { index: l, dim: len });
        }
    }
    let d = sel.dimension();
    let mut t = Matrix::zeros(d, d);
    let mut hm = Matrix::zeros(d, d);
    for (a, &l) in sel.indices().iter().enumerate() {
        for (b, &lp) in sel.indices().iter().enumerate() {
            let r = (l + lp) / 2;
            // T_{ll'} = c_l c_{l'} / c_r^2 written in terms of 1/c^2 values
            let overlap = trace.c_sq_inv[r] / (trace.c_sq_inv[l] * trace.c_sq_inv[lp]).sqrt();
            t[(a, b)] = overlap;
            hm[(a, b)] = overlap * trace.energies[r];
        }
    }
    Ok((t, hm))
}

/// Solve the pencil `Hm x = E T x` by whitening: eigendirections of T below
/// `floor` are discarded, the reduced symmetric problem is solved, and
/// eigenvectors are mapped back. Returns `(E, x)` pairs, energies ascending.
pub fn solve_gen_eig(t: &Matrix, hm: &Matrix, floor: f64) -> Result<Vec<(f64, Vec<f64>)>> {
    if t.rows < 2 {
        return Err(Error::InvalidOperand(format!(
            "pencil dimension {} < 2",
            t.rows
        )));
    }
    let te = eigh(t)?;
    let kept: Vec<usize> = (0..t.rows).filter(|&k| te.values[k] >= floor).collect();
    if kept.is_empty() {
        return Err(Error::DegenerateKrylov { floor });
    }
    // W maps the reduced coordinates back: columns u_k / sqrt(lambda_k)
    let d = t.rows;
    let k = kept.len();
    let mut w = Matrix::zeros(d, k);
    for (col, &src) in kept.iter().enumerate() {
        let scale = 1.0 / te.values[src].sqrt();
        for i in 0..d {
            w[(i, col)] = te.vectors[(i, src)] * scale;
        }
    }
    let reduced = w.transpose().matmul(&hm.matmul(&w)?)?;
    // enforce exact symmetry lost to rounding
    let mut sym = reduced.clone();
    for i in 0..k {
        for j in 0..k {
            sym[(i, j)] = 0.5 * (reduced[(i, j)] + reduced[(j, i)]);
        }
    }
    let he = eigh(&sym)?;
    let mut out = Vec::with_capacity(k);
    for col in 0..k {
        let y: Vec<f64> = (0..k).map(|i| he.vectors[(i, col)]).collect();
        let x = w.matvec(&y)?;
        out.push((he.values[col], x));
    }
    Ok(out)
}

/// Dimension-2 pencil eigenvalues via the explicit quadratic
/// `det(Hm - E T) = 0`; used as an independent cross-check of the whitened
/// path.
pub fn pencil_eigenvalues_dim2(t: &Matrix, hm: &Matrix) -> Result<(f64, f64)> {
    if t.rows != 2 || hm.rows != 2 {
        return Err(Error::InvalidOperand("quadratic path needs dimension 2".into()));
    }
    let a = t[(0, 0)] * t[(1, 1)] - t[(0, 1)] * t[(0, 1)];
    let b = -(hm[(0, 0)] * t[(1, 1)] + hm[(1, 1)] * t[(0, 0)] - 2.0 * hm[(0, 1)] * t[(0, 1)]);
    let c = hm[(0, 0)] * hm[(1, 1)] - hm[(0, 1)] * hm[(0, 1)];
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || a.abs() < 1e-300 {
        return Err(Error::Numerical(format!(
            "quadratic pencil has no real roots (disc {disc:.3e}, a {a:.3e})"
        )));
    }
    let s = disc.sqrt();
    let (r1, r2) = ((-b - s) / (2.0 * a), (-b + s) / (2.0 * a));
    Ok((r1.min(r2), r1.max(r2)))
}

/// Normalized linear combination of the trace states selected by `sel`.
pub fn reconstruct(trace: &QiteTrace, sel: &KrylovSelection, x: &[f64]) -> Result<StateVector> {
    if x.len() != sel.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for a {}-dimensional selection",
            x.len(),
            sel.dimension()
        )));
    }
    if x.iter().all(|c| *c == 0.0) {
        return Err(Error::InvalidOperand("zero coefficient vector".into()));
    }
    let n = trace.states[0].num_sites();
    let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); 1 << n];
    for (&c, &l) in x.iter().zip(sel.indices()) {
        if l >= trace.len() {
            return Err(Error::IndexOutOfRange {
                index: l,
                dim: trace.len(),
            });
        }
        for (acc, a) in amps.iter_mut().zip(trace.states[l].amplitudes()) {
            *acc += c * a;
        }
    }
    StateVector::from_amplitudes(n, amps)
}

/// Energy uncertainty `sqrt(<H^2> - <H>^2)`, evaluated exactly on the
/// statevector. Equals `||(H - <H>)|psi>||`.
pub fn uncertainty(state: &StateVector, h: &PauliSum) -> Result<f64> {
    let e = state.expectation(h)?;
    state.residual_norm(h, e)
}

/// Scan policy and filters.
#[derive(Clone, Debug)]
pub struct ScanConfig {
    /// Candidates with `delta_e` above this are discarded.
    pub accept_delta: f64,
    /// Outer stopping rule: once a pair block is finished and the best
    /// uncertainty seen is below this, larger pairs are not examined.
    /// Zero disables the early stop and scans every pair.
    pub scan_stop: f64,
    /// Krylov dimension; selections are arithmetic progressions of even
    /// steps of this length (all pairs for dimension 2).
    pub dim: usize,
    /// Eigenvalue floor for the overlap whitening.
    pub floor: f64,
    /// Report the pencil eigenvalue as the candidate energy (exact
    /// workflows); otherwise the Rayleigh quotient of the reconstruction.
    pub energy_from_pencil: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            accept_delta: 0.8,
            scan_stop: 1.0,
            dim: 2,
            floor: 1e-6,
            energy_from_pencil: true,
        }
    }
}

impl ScanConfig {
    /// Exact-workflow settings: scan every pair, keep only candidates that
    /// are eigenstates to high accuracy, pick the minimum-uncertainty one.
    pub fn exact() -> ScanConfig {
        ScanConfig {
            accept_delta: 0.05,
            scan_stop: 0.0,
            ..ScanConfig::default()
        }
    }
}

/// One evaluated eigenpair during the scan, for diagnostics export.
#[derive(Clone, Debug)]
pub struct ScanRecord {
    pub l: usize,
    pub m: usize,
    pub energy: f64,
    pub delta_e: f64,
    pub accepted: bool,
}

/// Scan result: the minimum-uncertainty candidate, everything that passed
/// the filter, and the full evaluation log.
#[derive(Clone, Debug)]
pub struct ScanOutcome {
    pub best: Candidate,
    pub accepted: Vec<Candidate>,
    pub records: Vec<ScanRecord>,
}

/// Enumerate Krylov selections (even arithmetic progressions of length
/// `cfg.dim`, ordered by increasing last index then first index), solve each
/// pencil, reconstruct every eigenpair, and filter by uncertainty.
pub fn scan(trace: &QiteTrace, h: &PauliSum, cfg: &ScanConfig) -> Result<ScanOutcome> {
    if cfg.dim < 2 {
        return Err(Error::InvalidParameter(format!("Krylov dimension {} < 2", cfg.dim)));
    }
    if trace.len() < 2 * cfg.dim {
        return Err(Error::InvalidParameter(format!(
            "trace of length {} too short for dimension {}",
            trace.len(),
            cfg.dim
        )));
    }
    let max_even = (trace.len() - 1) & !1usize;

    // selections grouped by their last index m
    let mut selections: Vec<(usize, usize, KrylovSelection)> = Vec::new();
    for m in (2..=max_even).step_by(2) {
        let span = m; // last - first when first = 0
        let _ = span;
        for l in (0..m).step_by(2) {
            let gap = m - l;
            if gap % (2 * (cfg.dim - 1)) != 0 {
                continue;
            }
            let step = gap / (cfg.dim - 1);
            let indices: Vec<usize> = (0..cfg.dim).map(|k| l + k * step).collect();
            selections.push((m, l, KrylovSelection::new(indices)?));
        }
    }

    let mut records = Vec::new();
    let mut accepted: Vec<Candidate> = Vec::new();
    let mut best: Option<Candidate> = None;
    let mut best_delta = f64::INFINITY;
    let mut current_m = 0usize;

    for (m, l, sel) in selections {
        if m != current_m {
            // finished the previous block of pairs sharing one m
            if best_delta < cfg.scan_stop {
                break;
            }
            current_m = m;
        }
        let (t, hm) = krylov_matrices(trace, &sel)?;
        let pairs = match solve_gen_eig(&t, &hm, cfg.floor) {
            Ok(p) => p,
            Err(Error::DegenerateKrylov { .. }) => continue,
            Err(e) => return Err(e),
        };
        for (energy_pencil, x) in pairs {
            let state = match reconstruct(trace, &sel, &x) {
                Ok(s) => s,
                Err(_) => continue, // numerically null combination
            };
            let energy_rayleigh = state.expectation(h)?;
            let delta_e = state.residual_norm(h, energy_rayleigh)?;
            let energy = if cfg.energy_from_pencil {
                energy_pencil
            } else {
                energy_rayleigh
            };
            let ok = delta_e <= cfg.accept_delta;
            records.push(ScanRecord {
                l,
                m,
                energy,
                delta_e,
                accepted: ok,
            });
            if !ok {
                continue;
            }
            let cand = Candidate {
                energy,
                energy_pencil,
                energy_rayleigh,
                x: x.clone(),
                state,
                delta_e,
                selection: sel.clone(),
            };
            if delta_e < best_delta {
                best_delta = delta_e;
                best = Some(cand.clone());
            }
            accepted.push(cand);
        }
    }

    match best {
        Some(best) => Ok(ScanOutcome {
            best,
            accepted,
            records,
        }),
        None => Err(Error::NoConvergence {
            delta: cfg.accept_delta,
            best_delta_e: records
                .iter()
                .map(|r| r.delta_e)
                .fold(f64::INFINITY, f64::min),
        }),
    }
}
