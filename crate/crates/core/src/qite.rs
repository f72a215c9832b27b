//! Imaginary-time evolution realized as a sequence of unitary updates.
//!
//! Each step fits a Hermitian generator `A[s]` over the odd-Y operator pool
//! so that `exp(-i dtau A[s])` approximates the normalized action of
//! `exp(-dtau H)`, by solving the normal equations `(S + S^T) a = b` built
//! from operator expectations. Alongside the states, the trace records the
//! per-step energies and the accumulated inverse normalization `1/c_s^2`
//! that the Krylov solver later consumes.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::noise::{
    measured_expectation, measured_pauli_expectation, MeasurementMode, NoiseConfig, StreamId,
};
use crate::pauli::{operator_pool, PauliString, PauliSum, PauliTerm, YParity};
use crate::state::{exp_apply, StateVector};

/// Parameters of one imaginary-time run.
#[derive(Clone, Debug)]
pub struct QiteConfig {
    /// Imaginary-time step.
    pub dtau: f64,
    /// Number of update steps; the trace has `steps + 1` states.
    pub steps: usize,
    /// Relative eigenvalue cutoff for the pseudo-inverse of `S + S^T`.
    pub svd_cutoff: f64,
    /// Order of the normalization expansion: 1 uses `1 - 2 dtau <H>`,
    /// 2 adds `+ 2 dtau^2 <H^2>`.
    pub expansion_order: u8,
    pub mode: MeasurementMode,
    pub noise: NoiseConfig,
}

impl QiteConfig {
    /// Exact-mode defaults: dtau 0.1, 30 steps, first-order expansion.
    pub fn exact(n: usize) -> QiteConfig {
        QiteConfig {
            dtau: 0.1,
            steps: 30,
            svd_cutoff: 1e-8,
            expansion_order: 1,
            mode: MeasurementMode::Exact,
            noise: NoiseConfig::noiseless(n, 8192, 0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dtau > 0.0 && self.dtau.is_finite()) {
            return Err(Error::InvalidParameter(format!("dtau {} must be > 0", self.dtau)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be >= 1".into()));
        }
        if !(1..=2).contains(&self.expansion_order) {
            return Err(Error::InvalidParameter(format!(
                "expansion order {} not in {{1, 2}}",
                self.expansion_order
            )));
        }
        Ok(())
    }
}

/// Record of a full imaginary-time run: `steps + 1` states with matching
/// energies and inverse normalizations, plus the fitted generator
/// coefficients of each step.
#[derive(Clone, Debug)]
pub struct QiteTrace {
    pub dtau: f64,
    pub states: Vec<StateVector>,
    pub energies: Vec<f64>,
    pub c_sq_inv: Vec<f64>,
    pub a_coeffs: Vec<Vec<f64>>,
}

impl QiteTrace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_energy(&self) -> f64 {
        *self.energies.last().unwrap()
    }
}

/// The odd-Y operator pool: `operator_pool(N)` filtered to strings with an
/// odd number of Y letters, order preserved. Only these receive nonzero
/// driving from a real state, so the rest would add null directions.
pub fn reduced_pool(n: usize) -> Result<Vec<PauliString>> {
    Ok(operator_pool(n)?
        .into_iter()
        .filter(|s| s.y_parity() == YParity::Odd)
        .collect())
}

// Stream-id term offsets so energy, matrix, and rhs measurements within one
// step never share an RNG stream.
const TERM_BASE_MATRIX: u64 = 1_000;
const TERM_BASE_RHS: u64 = 1_000_000;
const TERM_BASE_HSQ: u64 = 2_000_000;

/// Cached symbolic products needed each step: pool-pair products with real
/// phase (for `S + S^T`) and pool-times-Hamiltonian products with imaginary
/// phase (for `b`).
struct SystemCache {
    pool: Vec<PauliString>,
    /// (i, j, phase.re, product) for i <= j where the product phase is real.
    matrix_products: Vec<(usize, usize, f64, PauliString)>,
    /// (i, coefficient * Im(phase), product) contributing to b_i.
    rhs_products: Vec<(usize, f64, PauliString)>,
    h_squared: Option<PauliSum>,
}

impl SystemCache {
    fn build(n: usize, h: &PauliSum, expansion_order: u8) -> Result<SystemCache> {
        let pool = reduced_pool(n)?;
        let mut matrix_products = Vec::new();
        for i in 0..pool.len() {
            for j in i..pool.len() {
                let (phase, prod) = pool[i].multiply(&pool[j])?;
                let re = phase.as_complex().re;
                if re != 0.0 {
                    matrix_products.push((i, j, re, prod));
                }
            }
        }
        let mut rhs_products = Vec::new();
        for (i, sigma) in pool.iter().enumerate() {
            for term in h.terms() {
                let (phase, prod) = sigma.multiply(&term.string)?;
                let im = phase.as_complex().im;
                if im != 0.0 {
                    rhs_products.push((i, term.coefficient * im, prod));
                }
            }
        }
        let h_squared = if expansion_order == 2 {
            Some(h.multiply(h)?)
        } else {
            None
        };
        Ok(SystemCache {
            pool,
            matrix_products,
            rhs_products,
            h_squared,
        })
    }
}

/// Build the per-step linear system `(S + S^T) a = b` on `state`:
/// `M_ij = 2 Re<sigma_i sigma_j>`, `b_i = 2 sqrt(c_ratio) Im<sigma_i H>`,
/// with expectations evaluated per the configured measurement mode.
pub fn build_linear_system(
    state: &StateVector,
    h: &PauliSum,
    c_ratio: f64,
    cfg: &QiteConfig,
    step: usize,
) -> Result<(Matrix, Vec<f64>)> {
    let cache = SystemCache::build(state.num_sites(), h, 1)?;
    build_system_cached_with_h(state, h, &cache, c_ratio, cfg, step)
}

/// Minimum-norm least-squares solve of the step system.
pub fn solve_update(m: &Matrix, b: &[f64], svd_cutoff: f64) -> Result<Vec<f64>> {
    let b_norm: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (a, rank) = crate::linalg::solve_min_norm(m, b, svd_cutoff)?;
    if rank == 0 && b_norm > 1e-12 {
        return Err(Error::InconsistentSystem);
    }
    Ok(a)
}

/// One imaginary-time step. Returns the updated state, the measured energy
/// of the *input* state, the updated `1/c^2`, and the fitted coefficients.
pub fn qite_step(
    state: &StateVector,
    h: &PauliSum,
    c_sq_inv_prev: f64,
    cfg: &QiteConfig,
    step: usize,
) -> Result<(StateVector, f64, f64, Vec<f64>)> {
    let cache = SystemCache::build(state.num_sites(), h, cfg.expansion_order)?;
    qite_step_cached(state, h, &cache, c_sq_inv_prev, cfg, step)
}

fn qite_step_cached(
    state: &StateVector,
    h: &PauliSum,
    cache: &SystemCache,
    c_sq_inv_prev: f64,
    cfg: &QiteConfig,
    step: usize,
) -> Result<(StateVector, f64, f64, Vec<f64>)> {
    let id = StreamId {
        step: step as u64,
        term: 0,
    };
    let energy = measured_expectation(state, h, &cfg.noise, cfg.mode, id)?;

    let mut factor = 1.0 - 2.0 * cfg.dtau * energy;
    if let Some(h2) = &cache.h_squared {
        let id2 = StreamId {
            step: step as u64,
            term: TERM_BASE_HSQ,
        };
        factor += 2.0 * cfg.dtau * cfg.dtau
            * measured_expectation(state, h2, &cfg.noise, cfg.mode, id2)?;
    }
    if factor <= 0.0 {
        return Err(Error::StepTooLarge { factor });
    }

    let (m, b) = build_system_cached_with_h(state, h, cache, 1.0 / factor, cfg, step)?;
    let a = solve_update(&m, &b, cfg.svd_cutoff)?;

    let mut generator = PauliSum::zero();
    for (coeff, sigma) in a.iter().zip(&cache.pool) {
        if *coeff != 0.0 {
            generator.add_term(PauliTerm::new(*coeff, sigma.clone())?)?;
        }
    }
    let next = exp_apply(&generator, cfg.dtau, state)?;
    Ok((next, energy, c_sq_inv_prev * factor, a))
}

fn build_system_cached_with_h(
    state: &StateVector,
    h: &PauliSum,
    cache: &SystemCache,
    c_ratio: f64,
    cfg: &QiteConfig,
    step: usize,
) -> Result<(Matrix, Vec<f64>)> {
    let p = cache.pool.len();
    let scale = 2.0 * c_ratio.sqrt();

    if cfg.mode == MeasurementMode::Exact {
        let mapped: Vec<StateVector> = cache
            .pool
            .iter()
            .map(|s| state.apply_pauli(s))
            .collect::<Result<_>>()?;
        let h_psi = state.apply_sum(h)?;
        let mut m = Matrix::zeros(p, p);
        let mut b = vec![0.0; p];
        for i in 0..p {
            for j in i..p {
                let val = 2.0 * mapped[i].inner(&mapped[j])?.re;
                m[(i, j)] = val;
                m[(j, i)] = val;
            }
            let elem: num_complex::Complex64 = mapped[i]
                .amplitudes()
                .iter()
                .zip(&h_psi)
                .map(|(a, hb)| a.conj() * hb)
                .sum();
            b[i] = scale * elem.im;
        }
        return Ok((m, b));
    }

    let mut m = Matrix::zeros(p, p);
    let mut b = vec![0.0; p];
    for i in 0..p {
        m[(i, i)] = 2.0;
    }
    for (k, (i, j, phase_re, prod)) in cache.matrix_products.iter().enumerate() {
        if i == j {
            continue;
        }
        let id = StreamId {
            step: step as u64,
            term: TERM_BASE_MATRIX + k as u64,
        };
        let val = 2.0 * phase_re * measured_pauli_expectation(state, prod, &cfg.noise, cfg.mode, id)?;
        m[(*i, *j)] = val;
        m[(*j, *i)] = val;
    }
    for (k, (i, weight, prod)) in cache.rhs_products.iter().enumerate() {
        let id = StreamId {
            step: step as u64,
            term: TERM_BASE_RHS + k as u64,
        };
        b[*i] += scale * weight * measured_pauli_expectation(state, prod, &cfg.noise, cfg.mode, id)?;
    }
    Ok((m, b))
}

/// Run a full imaginary-time trajectory from `initial`.
pub fn run_qite(initial: &StateVector, h: &PauliSum, cfg: &QiteConfig) -> Result<QiteTrace> {
    cfg.validate()?;
    cfg.noise.validate(initial.num_sites())?;
    let cache = SystemCache::build(initial.num_sites(), h, cfg.expansion_order)?;

    let mut states = vec![initial.clone()];
    let mut energies = Vec::with_capacity(cfg.steps + 1);
    let mut c_sq_inv = vec![1.0];
    let mut a_coeffs = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        let (next, energy, c_next, a) =
            qite_step_cached(states.last().unwrap(), h, &cache, c_sq_inv[step], cfg, step)?;
        energies.push(energy);
        states.push(next);
        c_sq_inv.push(c_next);
        a_coeffs.push(a);
    }
    // energy of the final state closes the trace
    let id = StreamId {
        step: cfg.steps as u64,
        term: 0,
    };
    energies.push(measured_expectation(
        states.last().unwrap(),
        h,
        &cfg.noise,
        cfg.mode,
        id,
    )?);

    Ok(QiteTrace {
        dtau: cfg.dtau,
        states,
        energies,
        c_sq_inv,
        a_coeffs,
    })
}
