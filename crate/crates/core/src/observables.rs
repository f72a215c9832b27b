//! Real-time and thermal observables computed from a spectrum.
//!
//! Every quantity here is a spectral sum over the eigensystem `(E_I, t)`:
//! transition amplitudes `A_fi(t) = sum_I t_{I,x_in} t_{I,x_fin} e^{-i E_I t}`,
//! occupation numbers via the double spectral sum, the z-magnetization
//! derived from them, and Gibbs ensemble averages. The sums are kept
//! literal; dense matrix exponentials serve as the independent cross-check
//! in the test suite rather than as the implementation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::oracle::Spectrum;
use crate::pauli::PauliSum;

/// Uniform sampling times in `[t_start, t_end]`.
#[derive(Clone, Debug)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, samples: usize) -> Result<TimeGrid> {
        if !t_start.is_finite() || !t_end.is_finite() || t_end < t_start {
            return Err(Error::InvalidParameter(format!(
                "invalid time range [{t_start}, {t_end}]"
            )));
        }
        if samples < 1 {
            return Err(Error::InvalidParameter("time grid needs >= 1 sample".into()));
        }
        Ok(TimeGrid {
            t_start,
            t_end,
            samples,
        })
    }

    /// The sampling times; a single sample sits at `t_start`.
    pub fn times(&self) -> Vec<f64> {
        if self.samples == 1 {
            return vec![self.t_start];
        }
        let dt = (self.t_end - self.t_start) / (self.samples - 1) as f64;
        (0..self.samples)
            .map(|k| self.t_start + dt * k as f64)
            .collect()
    }
}

/// One labelled real-valued series over a time grid.
#[derive(Clone, Debug)]
pub struct ObservableSeries {
    pub grid: TimeGrid,
    pub label: String,
    pub values: Vec<f64>,
}

fn check_index(index: usize, dim: usize) -> Result<()> {
    if index >= dim {
        return Err(Error::IndexOutOfRange { index, dim });
    }
    Ok(())
}

/// Transition amplitude `<x_fin| e^{-iHt} |x_in>` as a spectral sum.
pub fn transition_amplitude(spec: &Spectrum, x_in: usize, x_fin: usize, t: f64) -> Result<Complex64> {
    let dim = spec.dim();
    check_index(x_in, dim)?;
    check_index(x_fin, dim)?;
    let mut total = Complex64::new(0.0, 0.0);
    for level in 0..dim {
        let weight = spec.t[(level, x_in)] * spec.t[(level, x_fin)];
        let phase = Complex64::from_polar(1.0, -spec.energies[level] * t);
        total += weight * phase;
    }
    Ok(total)
}

/// `|<x_fin| e^{-iHt} |x_in>|^2` per grid point.
pub fn transition_probability_series(
    spec: &Spectrum,
    x_in: usize,
    x_fin: usize,
    grid: &TimeGrid,
) -> Result<ObservableSeries> {
    let values = grid
        .times()
        .iter()
        .map(|&t| transition_amplitude(spec, x_in, x_fin, t).map(|a| a.norm_sqr()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ObservableSeries {
        grid: grid.clone(),
        label: format!("p_{x_in}_to_{x_fin}"),
        values,
    })
}

/// `<x| n_site(t) |x>` via the double spectral sum
/// `sum_{I,J,y} y_site t_{Ix} t_{Jx} t_{Iy} t_{Jy} e^{i(E_J - E_I)t}`.
pub fn occupation_series(
    spec: &Spectrum,
    x: usize,
    site: usize,
    grid: &TimeGrid,
) -> Result<ObservableSeries> {
    let dim = spec.dim();
    check_index(x, dim)?;
    if site >= spec.num_sites {
        return Err(Error::IndexOutOfRange {
            index: site,
            dim: spec.num_sites,
        });
    }
    // inner sum over y at fixed (I, J) is t-independent; precompute
    // w_{IJ} = t_{Ix} t_{Jx} sum_y y_site t_{Iy} t_{Jy}
    let mut weights = vec![0.0f64; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut inner = 0.0;
            for y in 0..dim {
                if y >> site & 1 == 1 {
                    inner += spec.t[(i, y)] * spec.t[(j, y)];
                }
            }
            weights[i * dim + j] = spec.t[(i, x)] * spec.t[(j, x)] * inner;
        }
    }
    let mut values = Vec::with_capacity(grid.samples);
    for t in grid.times() {
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                let w = weights[i * dim + j];
                if w != 0.0 {
                    total += w * Complex64::from_polar(1.0, (spec.energies[j] - spec.energies[i]) * t);
                }
            }
        }
        if total.im.abs() > 1e-9 {
            return Err(Error::RealnessViolation {
                max_imag: total.im.abs(),
            });
        }
        values.push(total.re);
    }
    Ok(ObservableSeries {
        grid: grid.clone(),
        label: format!("n_{site}_from_{x}"),
        values,
    })
}

/// `<m_z(t)> = 1 - (2/N) sum_i <n_i(t)>` for initial basis state `x`.
pub fn magnetization_series(spec: &Spectrum, x: usize, grid: &TimeGrid) -> Result<ObservableSeries> {
    let n = spec.num_sites;
    let mut totals = vec![0.0f64; grid.samples];
    for site in 0..n {
        let occ = occupation_series(spec, x, site, grid)?;
        for (acc, v) in totals.iter_mut().zip(&occ.values) {
            *acc += v;
        }
    }
    let values = totals
        .into_iter()
        .map(|s| 1.0 - 2.0 / n as f64 * s)
        .collect();
    Ok(ObservableSeries {
        grid: grid.clone(),
        label: format!("m_z_from_{x}"),
        values,
    })
}

/// Gibbs ensemble average `sum_I e^{-beta E_I} <psi_I|O|psi_I> / Z` with a
/// max-energy shift for overflow safety.
pub fn thermal_average(spec: &Spectrum, op: &PauliSum, beta: f64) -> Result<f64> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature {beta} must be >= 0"
        )));
    }
    let e_min = spec
        .energies
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let mut numerator = 0.0;
    let mut partition = 0.0;
    for level in 0..spec.dim() {
        // shift so the largest weight is exactly 1
        let w = (-beta * (spec.energies[level] - e_min)).exp();
        let psi = spec.eigenstate(level)?;
        numerator += w * psi.expectation(op)?;
        partition += w;
    }
    Ok(numerator / partition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{oracle_spectrum, to_dense_real};
    use crate::pauli::{build_ising_hamiltonian, Pauli, PauliString, PauliSum, PauliTerm};
    use crate::state::{parse_basis_label, StateVector};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn spec3() -> Spectrum {
        oracle_spectrum(3, 0.6, 1.0).unwrap()
    }

    /// `<x_fin| e^{-iHt} |x_in>` by evolving the dense state through the
    /// eigen-decomposition of the dense Hamiltonian, fully independent of
    /// the spectral-sum path.
    fn dense_amplitude(n: usize, x_in: usize, x_fin: usize, t: f64) -> Complex64 {
        let h = build_ising_hamiltonian(n, 0.6, 1.0).unwrap();
        let dense = to_dense_real(&h).unwrap();
        let eig = crate::linalg::eigh(&dense).unwrap();
        let dim = 1usize << n;
        let mut total = Complex64::new(0.0, 0.0);
        for k in 0..dim {
            let overlap = eig.vectors[(x_in, k)] * eig.vectors[(x_fin, k)];
            total += overlap * Complex64::from_polar(1.0, -eig.values[k] * t);
        }
        total
    }

    #[test]
    fn amplitude_at_time_zero() {
        let spec = spec3();
        for x in 0..8 {
            for y in 0..8 {
                let a = transition_amplitude(&spec, x, y, 0.0).unwrap();
                let want = if x == y { 1.0 } else { 0.0 };
                assert_close(a.re, want, 1e-10);
                assert_close(a.im, 0.0, 1e-10);
            }
        }
        assert!(transition_amplitude(&spec, 8, 0, 0.0).is_err());
    }

    #[test]
    fn amplitude_matches_dense_evolution() {
        let spec = spec3();
        let x_in = parse_basis_label("100", 3).unwrap();
        let x_fin = parse_basis_label("010", 3).unwrap();
        for t in [0.3, 1.0, 2.7] {
            let a = transition_amplitude(&spec, x_in, x_fin, t).unwrap();
            let d = dense_amplitude(3, x_in, x_fin, t);
            assert!((a - d).norm() < 1e-8, "t={t}: {a} vs {d}");
        }
    }

    #[test]
    fn probability_unitarity_and_symmetries() {
        let spec = spec3();
        let grid = TimeGrid::new(0.0, 5.0, 41).unwrap();
        let x_in = parse_basis_label("100", 3).unwrap();
        // unitarity: rows of probabilities sum to one at every time
        let mut sums = vec![0.0f64; grid.samples];
        for x_fin in 0..8 {
            let s = transition_probability_series(&spec, x_in, x_fin, &grid).unwrap();
            for (acc, v) in sums.iter_mut().zip(&s.values) {
                assert!(*v >= -1e-9 && *v <= 1.0 + 1e-9);
                *acc += v;
            }
        }
        for s in sums {
            assert_close(s, 1.0, 1e-9);
        }
        // detailed symmetry and time reversal
        let x_fin = parse_basis_label("010", 3).unwrap();
        let fwd = transition_probability_series(&spec, x_in, x_fin, &grid).unwrap();
        let rev = transition_probability_series(&spec, x_fin, x_in, &grid).unwrap();
        let neg_grid = TimeGrid::new(-5.0, 0.0, 41).unwrap();
        let neg = transition_probability_series(&spec, x_in, x_fin, &neg_grid).unwrap();
        for k in 0..grid.samples {
            assert_close(fwd.values[k], rev.values[k], 1e-9);
            assert_close(fwd.values[k], neg.values[grid.samples - 1 - k], 1e-9);
        }
    }

    #[test]
    fn reflection_related_targets_coincide() {
        // |100> -> |010> and |100> -> |001> are mirror images under the
        // reflection symmetry of the ring
        let spec = spec3();
        let grid = TimeGrid::new(0.0, 4.0, 33).unwrap();
        let x_in = parse_basis_label("100", 3).unwrap();
        let a = transition_probability_series(&spec, x_in, parse_basis_label("010", 3).unwrap(), &grid)
            .unwrap();
        let b = transition_probability_series(&spec, x_in, parse_basis_label("001", 3).unwrap(), &grid)
            .unwrap();
        for k in 0..grid.samples {
            assert_close(a.values[k], b.values[k], 1e-9);
        }
    }

    #[test]
    fn occupation_at_time_zero_reads_the_bit() {
        let spec = oracle_spectrum(4, 0.6, 1.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.0, 1).unwrap();
        let x = parse_basis_label("1010", 4).unwrap();
        for site in 0..4 {
            let occ = occupation_series(&spec, x, site, &grid).unwrap();
            let want = (x >> site & 1) as f64;
            assert_close(occ.values[0], want, 1e-10);
        }
    }

    #[test]
    fn occupation_alternating_initial_state_pairs_sites() {
        // from |1010>, even sites share one curve and odd sites another
        let spec = oracle_spectrum(4, 0.6, 1.0).unwrap();
        let grid = TimeGrid::new(0.0, 6.0, 25).unwrap();
        let x = parse_basis_label("1010", 4).unwrap();
        let n: Vec<ObservableSeries> = (0..4)
            .map(|s| occupation_series(&spec, x, s, &grid).unwrap())
            .collect();
        for k in 0..grid.samples {
            assert_close(n[0].values[k], n[2].values[k], 1e-9);
            assert_close(n[1].values[k], n[3].values[k], 1e-9);
            for series in &n {
                assert!(series.values[k] >= -1e-9 && series.values[k] <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn parity_is_conserved() {
        // sum_i <n_i(t)> mod 2 is fixed; testably, <(-1)^F(t)> is constant
        let spec = spec3();
        let grid = TimeGrid::new(0.0, 5.0, 21).unwrap();
        let x = parse_basis_label("110", 3).unwrap();
        let mut parity = vec![0.0f64; grid.samples];
        // (-1)^F = prod_i (1 - 2 n_i) expands over Z strings; evaluate it
        // as a transition-probability-weighted parity of the final basis
        for x_fin in 0..8 {
            let p = transition_probability_series(&spec, x, x_fin, &grid).unwrap();
            let sign = if (x_fin as u32).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            for (acc, v) in parity.iter_mut().zip(&p.values) {
                *acc += sign * v;
            }
        }
        for v in &parity {
            assert_close(*v, parity[0], 1e-9);
        }
    }

    #[test]
    fn magnetization_at_time_zero() {
        let spec = spec3();
        let grid = TimeGrid::new(0.0, 0.0, 1).unwrap();
        let x = parse_basis_label("100", 3).unwrap();
        let m = magnetization_series(&spec, x, &grid).unwrap();
        assert_close(m.values[0], 1.0 / 3.0, 1e-10);

        let spec4 = oracle_spectrum(4, 0.6, 1.0).unwrap();
        let x = parse_basis_label("1010", 4).unwrap();
        let m = magnetization_series(&spec4, x, &grid).unwrap();
        assert_close(m.values[0], 0.0, 1e-10);
    }

    #[test]
    fn magnetization_stays_bounded() {
        let spec = spec3();
        let grid = TimeGrid::new(0.0, 8.0, 65).unwrap();
        let x = parse_basis_label("110", 3).unwrap();
        let m = magnetization_series(&spec, x, &grid).unwrap();
        for v in &m.values {
            assert!(*v >= -1.0 - 1e-9 && *v <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn thermal_average_limits() {
        let spec = spec3();
        let h = build_ising_hamiltonian(3, 0.6, 1.0).unwrap();
        // infinite temperature: uniform average of a traceless operator
        assert_close(thermal_average(&spec, &h, 0.0).unwrap(), 0.0, 1e-10);
        // zero temperature: ground-state energy
        assert_close(
            thermal_average(&spec, &h, 1e3).unwrap(),
            spec.energies[0],
            1e-6,
        );
        assert!(thermal_average(&spec, &h, -1.0).is_err());
    }

    #[test]
    fn thermal_average_matches_dense_trace() {
        let spec = spec3();
        let h = build_ising_hamiltonian(3, 0.6, 1.0).unwrap();
        let beta = 1.0;
        // dense oracle: Tr(H e^{-beta H}) / Tr(e^{-beta H}) from the dense
        // eigenvalues alone
        let dense = to_dense_real(&h).unwrap();
        let eig = crate::linalg::eigh(&dense).unwrap();
        let shift = eig.values[0];
        let mut num = 0.0;
        let mut z = 0.0;
        for e in &eig.values {
            let w = (-beta * (e - shift)).exp();
            num += w * e;
            z += w;
        }
        assert_close(thermal_average(&spec, &h, beta).unwrap(), num / z, 1e-10);
    }

    #[test]
    fn thermal_average_of_h_is_nonincreasing_in_beta() {
        let spec = spec3();
        let h = build_ising_hamiltonian(3, 0.6, 1.0).unwrap();
        let mut last = f64::INFINITY;
        for beta in [0.0, 0.2, 0.5, 1.0, 2.0, 5.0, 20.0] {
            let v = thermal_average(&spec, &h, beta).unwrap();
            assert!(v <= last + 1e-12, "beta={beta}: {v} > {last}");
            last = v;
        }
    }

    #[test]
    fn thermal_average_single_site_operator() {
        // <Z_0> at beta = 0 is Tr(Z_0)/8 = 0; at large beta it is the
        // ground-state value
        let spec = spec3();
        let mut z0 = PauliSum::zero();
        z0.add_term(PauliTerm::new(1.0, PauliString::single(3, 0, Pauli::Z).unwrap()).unwrap())
            .unwrap();
        assert_close(thermal_average(&spec, &z0, 0.0).unwrap(), 0.0, 1e-10);
        let ground: StateVector = spec.eigenstate(0).unwrap();
        let want = ground.expectation(&z0).unwrap();
        assert_close(thermal_average(&spec, &z0, 1e3).unwrap(), want, 1e-6);
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(1.0, 0.0, 5).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        let g = TimeGrid::new(0.0, 1.0, 3).unwrap();
        assert_eq!(g.times(), vec![0.0, 0.5, 1.0]);
        assert_eq!(TimeGrid::new(2.0, 9.0, 1).unwrap().times(), vec![2.0]);
    }
}
