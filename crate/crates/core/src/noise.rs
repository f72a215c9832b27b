//! Measurement models: shot sampling of Pauli expectations with depolarizing
//! attenuation and per-qubit readout bit flips, tensored readout-error
//! mitigation, and Richardson zero-noise extrapolation.
//!
//! Sampling is deterministic given (seed, step, term, scale): each quadruple
//! selects an independent counter-based RNG stream, so terms may be measured
//! concurrently with bit-identical results.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::state::StateVector;

/// How expectation values are evaluated throughout the crate.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Default)]
pub enum MeasurementMode {
    /// Exact statevector expectation, no sampling.
    #[default]
    Exact,
    /// Finite-shot sampling with the configured noise channels, raw counts.
    Shots,
    /// Shots plus readout-error mitigation.
    ShotsRoem,
    /// Shots plus mitigation plus two-scale Richardson extrapolation.
    ShotsRoemRichardson,
}

impl MeasurementMode {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "exact" => Ok(MeasurementMode::Exact),
            "shots" => Ok(MeasurementMode::Shots),
            "shots+roem" => Ok(MeasurementMode::ShotsRoem),
            "shots+roem+richardson" => Ok(MeasurementMode::ShotsRoemRichardson),
            _ => Err(Error::InvalidParameter(format!(
                "unknown measurement mode '{text}'"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MeasurementMode::Exact => "exact",
            MeasurementMode::Shots => "shots",
            MeasurementMode::ShotsRoem => "shots+roem",
            MeasurementMode::ShotsRoemRichardson => "shots+roem+richardson",
        }
    }
}

/// Sampling and channel parameters.
///
/// `p01[i]` is the probability of reading 0 given the true outcome 1 on
/// qubit `i`; `p10[i]` the reverse. `depol` is the per-layer depolarizing
/// strength and `layers` a depth proxy: the ideal distribution is mixed with
/// the uniform one with weight `1 - (1-depol)^(scale*layers)`.
#[derive(Clone, Debug)]
pub struct NoiseConfig {
    pub shots: u64,
    pub p01: Vec<f64>,
    pub p10: Vec<f64>,
    pub depol: f64,
    pub layers: u32,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn noiseless(n: usize, shots: u64, seed: u64) -> NoiseConfig {
        NoiseConfig {
            shots,
            p01: vec![0.0; n],
            p10: vec![0.0; n],
            depol: 0.0,
            layers: 0,
            seed,
        }
    }

    /// Symmetric readout error `p` on every qubit, no depolarizing.
    pub fn readout_symmetric(n: usize, shots: u64, p: f64, seed: u64) -> NoiseConfig {
        NoiseConfig {
            shots,
            p01: vec![p; n],
            p10: vec![p; n],
            depol: 0.0,
            layers: 0,
            seed,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::InvalidParameter("shots must be >= 1".into()));
        }
        if self.p01.len() != n || self.p10.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "readout probabilities for {}/{} qubits, expected {n}",
                self.p01.len(),
                self.p10.len()
            )));
        }
        for i in 0..n {
            let (a, b) = (self.p01[i], self.p10[i]);
            if !(0.0..0.5).contains(&a) || !(0.0..0.5).contains(&b) || a + b >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "readout probabilities for qubit {i} out of range: p01={a}, p10={b}"
                )));
            }
        }
        if !(0.0..=0.1).contains(&self.depol) {
            return Err(Error::InvalidParameter(format!(
                "depolarizing strength {} outside [0, 0.1]",
                self.depol
            )));
        }
        Ok(())
    }
}

/// Histogram of measured bitstring outcomes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountsTable {
    counts: BTreeMap<usize, u64>,
    shots: u64,
}

impl CountsTable {
    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    /// Empirical frequencies, iterated in ascending outcome order.
    pub fn frequencies(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let total = self.shots as f64;
        self.counts.iter().map(move |(&x, &c)| (x, c as f64 / total))
    }
}

/// Identifier for one measurement within a larger workflow, used to split
/// the RNG stream deterministically.
#[derive(Copy, Clone, Debug, Default)]
pub struct StreamId {
    pub step: u64,
    pub term: u64,
}

fn stream_seed(seed: u64, id: StreamId, scale: u32) -> u64 {
    // splitmix64 over the packed identifiers
    let mut z = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(id.step.wrapping_mul(0xbf58476d1ce4e5b9))
        .wrapping_add(id.term.wrapping_mul(0x94d049bb133111eb))
        .wrapping_add(scale as u64);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Rotate `state` so that measuring `string` becomes a Z-basis measurement:
/// Hadamard on X sites, the analogous Y-to-Z map on Y sites.
fn rotate_to_z_basis(state: &StateVector, string: &PauliString) -> Result<Vec<Complex64>> {
    let n = state.num_sites();
    if string.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "string on {} sites measured on {n}-site state",
            string.len()
        )));
    }
    let mut amps = state.amplitudes().to_vec();
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
    for (site, &letter) in string.letters().iter().enumerate() {
        match letter {
            Pauli::I | Pauli::Z => continue,
            Pauli::X | Pauli::Y => {
                let bit = 1usize << site;
                if letter == Pauli::Y {
                    // S^dagger: |1> picks up -i, turning Y eigenstates into
                    // X eigenstates before the Hadamard
                    for (idx, a) in amps.iter_mut().enumerate() {
                        if idx & bit != 0 {
                            *a *= Complex64::new(0.0, -1.0);
                        }
                    }
                }
                for idx in 0..amps.len() {
                    if idx & bit == 0 {
                        let lo = amps[idx];
                        let hi = amps[idx | bit];
                        amps[idx] = sqrt_half * (lo + hi);
                        amps[idx | bit] = sqrt_half * (lo - hi);
                    }
                }
            }
        }
    }
    Ok(amps)
}

/// Draw `cfg.shots` outcomes for measuring `string` on `state` at the given
/// noise scale: ideal rotated-basis distribution, depolarizing mixture,
/// per-shot readout bit flips.
pub fn sample_pauli(
    state: &StateVector,
    string: &PauliString,
    cfg: &NoiseConfig,
    scale: u32,
    id: StreamId,
) -> Result<CountsTable> {
    let n = state.num_sites();
    cfg.validate(n)?;
    if !(1..=3).contains(&scale) {
        return Err(Error::InvalidParameter(format!(
            "noise scale {scale} outside 1..=3"
        )));
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidOperand(format!(
            "state norm {norm} is not 1"
        )));
    }

    let rotated = rotate_to_z_basis(state, string)?;
    let dim = rotated.len();
    let lambda = (1.0 - cfg.depol).powi((scale * cfg.layers) as i32);
    let uniform = (1.0 - lambda) / dim as f64;
    let probs: Vec<f64> = rotated
        .iter()
        .map(|a| lambda * a.norm_sqr() + uniform)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, id, scale));
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..cfg.shots {
        let mut u: f64 = rng.gen();
        let mut outcome = dim - 1;
        for (x, &p) in probs.iter().enumerate() {
            if u < p {
                outcome = x;
                break;
            }
            u -= p;
        }
        // readout channel: independent bit flips
        for site in 0..n {
            let bit = 1usize << site;
            let flip_p = if outcome & bit != 0 {
                cfg.p01[site]
            } else {
                cfg.p10[site]
            };
            if flip_p > 0.0 && rng.gen::<f64>() < flip_p {
                outcome ^= bit;
            }
        }
        *counts.entry(outcome).or_insert(0) += 1;
    }
    Ok(CountsTable {
        counts,
        shots: cfg.shots,
    })
}

/// Raw Z-basis expectation of a Pauli string with the given support from a
/// counts table: `sum_x p(x) * (-1)^(popcount(x & support))`.
pub fn raw_expectation(counts: &CountsTable, support_mask: usize) -> f64 {
    counts
        .frequencies()
        .map(|(x, f)| {
            if (x & support_mask).count_ones().is_multiple_of(2) {
                f
            } else {
                -f
            }
        })
        .sum()
}

/// Readout-error-mitigated expectation over the measured qubit set:
/// `sum_x p(x) * prod_{i in support} ((-1)^{x_i} - p_i^-) / (1 - p_i^+)`
/// with `p^± = p01 ± p10`. The exact inverse of the independent-flip channel
/// at the distribution level; values may exceed 1 in magnitude.
pub fn mitigated_expectation(
    counts: &CountsTable,
    support: &[usize],
    cfg: &NoiseConfig,
) -> Result<f64> {
    if counts.shots == 0 {
        return Err(Error::InvalidOperand("empty counts table".into()));
    }
    for &i in support {
        if i >= cfg.p01.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: cfg.p01.len(),
            });
        }
        if (1.0 - (cfg.p01[i] + cfg.p10[i])).abs() < 1e-12 {
            return Err(Error::SingularMitigation(i));
        }
    }
    let mut total = 0.0;
    for (x, f) in counts.frequencies() {
        let mut w = f;
        for &i in support {
            let sign = if x >> i & 1 == 1 { -1.0 } else { 1.0 };
            let p_minus = cfg.p01[i] - cfg.p10[i];
            let p_plus = cfg.p01[i] + cfg.p10[i];
            w *= (sign - p_minus) / (1.0 - p_plus);
        }
        total += w;
    }
    Ok(total)
}

/// Linear zero-noise extrapolation: least-squares line through
/// `(scale, estimate)` points evaluated at scale 0. For scales {1, 2} this
/// is the two-point rule `2 v1 - v2`.
pub fn richardson_extrapolate(values: &[(u32, f64)]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InvalidOperand(format!(
            "{} extrapolation points, need >= 2",
            values.len()
        )));
    }
    for (i, (s, _)) in values.iter().enumerate() {
        if values[..i].iter().any(|(t, _)| t == s) {
            return Err(Error::InvalidOperand(format!("duplicate scale {s}")));
        }
    }
    let m = values.len() as f64;
    let sx: f64 = values.iter().map(|(s, _)| *s as f64).sum();
    let sy: f64 = values.iter().map(|(_, v)| v).sum();
    let sxx: f64 = values.iter().map(|(s, _)| (*s as f64).powi(2)).sum();
    let sxy: f64 = values.iter().map(|(s, v)| *s as f64 * v).sum();
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(Error::Numerical("degenerate extrapolation design".into()));
    }
    let slope = (m * sxy - sx * sy) / denom;
    Ok((sy - slope * sx) / m)
}

fn support_mask(string: &PauliString) -> usize {
    string
        .support()
        .into_iter()
        .fold(0usize, |m, s| m | 1 << s)
}

/// Expectation of one Pauli string under the given mode. For the Richardson
/// mode, mitigated estimates at scales 1 and 2 are extrapolated to zero.
pub fn measured_pauli_expectation(
    state: &StateVector,
    string: &PauliString,
    cfg: &NoiseConfig,
    mode: MeasurementMode,
    id: StreamId,
) -> Result<f64> {
    if string.is_identity() {
        return Ok(1.0);
    }
    match mode {
        MeasurementMode::Exact => {
            let applied = state.apply_pauli(string)?;
            Ok(state.inner(&applied)?.re)
        }
        MeasurementMode::Shots => {
            let counts = sample_pauli(state, string, cfg, 1, id)?;
            Ok(raw_expectation(&counts, support_mask(string)))
        }
        MeasurementMode::ShotsRoem => {
            let counts = sample_pauli(state, string, cfg, 1, id)?;
            mitigated_expectation(&counts, &string.support(), cfg)
        }
        MeasurementMode::ShotsRoemRichardson => {
            let mut points = Vec::with_capacity(2);
            for scale in [1u32, 2] {
                let counts = sample_pauli(state, string, cfg, scale, id)?;
                points.push((scale, mitigated_expectation(&counts, &string.support(), cfg)?));
            }
            richardson_extrapolate(&points)
        }
    }
}

/// Expectation of a Pauli sum under the given mode, measured term by term
/// and recombined with the real coefficients. Identity terms contribute
/// their coefficient exactly. `id.term` is overwritten per term.
pub fn measured_expectation(
    state: &StateVector,
    op: &PauliSum,
    cfg: &NoiseConfig,
    mode: MeasurementMode,
    mut id: StreamId,
) -> Result<f64> {
    let mut total = 0.0;
    for (k, term) in op.terms().iter().enumerate() {
        id.term = k as u64;
        total += term.coefficient * measured_pauli_expectation(state, &term.string, cfg, mode, id)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::build_ising_hamiltonian;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn clean_z_measurement_on_basis_state() {
        let cfg = NoiseConfig::noiseless(1, 4096, 7);
        let s = StateVector::from_label("0").unwrap();
        let counts = sample_pauli(&s, &ps("Z"), &cfg, 1, StreamId::default()).unwrap();
        assert_eq!(raw_expectation(&counts, 1), 1.0);
    }

    #[test]
    fn x_measurement_needs_basis_rotation() {
        // |+> = H|0> has <X> = 1; sampled X on |0> instead gives mean ~0
        let cfg = NoiseConfig::noiseless(1, 8192, 11);
        let plus = StateVector::from_superposition(1, &[("0", 1.0), ("1", 1.0)]).unwrap();
        let counts = sample_pauli(&plus, &ps("X"), &cfg, 1, StreamId::default()).unwrap();
        assert_eq!(raw_expectation(&counts, 1), 1.0);

        let zero = StateVector::from_label("0").unwrap();
        let counts = sample_pauli(&zero, &ps("X"), &cfg, 1, StreamId::default()).unwrap();
        assert!(raw_expectation(&counts, 1).abs() < 0.05);
    }

    #[test]
    fn y_measurement_rotation() {
        // (|0> + i|1>)/sqrt(2) is the +1 eigenstate of Y
        let amps = vec![
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2),
        ];
        let s = StateVector::from_amplitudes(1, amps).unwrap();
        let cfg = NoiseConfig::noiseless(1, 2048, 3);
        let counts = sample_pauli(&s, &ps("Y"), &cfg, 1, StreamId::default()).unwrap();
        assert_eq!(raw_expectation(&counts, 1), 1.0);
    }

    #[test]
    fn readout_flip_biases_raw_expectation() {
        // p(1|0) = 0.1 on |0>: raw <Z> -> 0.9*(+1) + 0.1*(-1) = 0.8
        let mut cfg = NoiseConfig::noiseless(1, 200_000, 5);
        cfg.p10 = vec![0.1];
        let s = StateVector::from_label("0").unwrap();
        let counts = sample_pauli(&s, &ps("Z"), &cfg, 1, StreamId::default()).unwrap();
        let raw = raw_expectation(&counts, 1);
        assert_close(raw, 0.8, 0.01);
        // mitigation recovers 1 up to shot noise
        let fixed = mitigated_expectation(&counts, &[0], &cfg).unwrap();
        assert_close(fixed, 1.0, 0.01);
    }

    #[test]
    fn mitigation_is_exact_channel_inverse_at_distribution_level() {
        // apply the flip channel analytically to exact outcome probabilities,
        // then mitigate: must recover the ideal expectation to 1e-12
        let (p01, p10) = (0.07, 0.03);
        let mut cfg = NoiseConfig::noiseless(2, 1, 0);
        cfg.p01 = vec![p01; 2];
        cfg.p10 = vec![p10; 2];

        // ideal distribution of ZZ on (3|00> + |01> - 2|11>)/sqrt(14)
        let ideal = [9.0 / 14.0, 1.0 / 14.0, 0.0, 4.0 / 14.0];
        let flip = |b: usize, to: usize| -> f64 {
            match (b, to) {
                (0, 0) => 1.0 - p10,
                (0, 1) => p10,
                (1, 1) => 1.0 - p01,
                _ => p01,
            }
        };
        // push exact probabilities through the channel, scaled to big counts
        let scale = 1_000_000_000u64;
        let mut counts = BTreeMap::new();
        for x in 0..4 {
            let mut p = 0.0;
            for (src, &ip) in ideal.iter().enumerate() {
                p += ip
                    * flip(src & 1, x & 1)
                    * flip(src >> 1 & 1, x >> 1 & 1);
            }
            counts.insert(x, (p * scale as f64).round() as u64);
        }
        let total: u64 = counts.values().sum();
        let table = CountsTable {
            counts,
            shots: total,
        };
        let ideal_zz = 9.0 / 14.0 - 1.0 / 14.0 + 4.0 / 14.0;
        let got = mitigated_expectation(&table, &[0, 1], &cfg).unwrap();
        assert_close(got, ideal_zz, 1e-8);
    }

    #[test]
    fn zero_flip_mitigation_is_identity() {
        let cfg = NoiseConfig::noiseless(2, 1024, 9);
        let s = StateVector::from_superposition(2, &[("00", 1.0), ("11", -1.0)]).unwrap();
        let counts = sample_pauli(&s, &ps("ZZ"), &cfg, 1, StreamId::default()).unwrap();
        let raw = raw_expectation(&counts, 0b11);
        let fixed = mitigated_expectation(&counts, &[0, 1], &cfg).unwrap();
        assert_close(raw, fixed, 1e-12);
    }

    #[test]
    fn singular_mitigation_detected() {
        let mut cfg = NoiseConfig::noiseless(1, 8, 0);
        // deliberately invalid channel; bypass validate by calling mitigation
        // directly
        cfg.p01 = vec![0.6];
        cfg.p10 = vec![0.4];
        let mut counts = BTreeMap::new();
        counts.insert(0usize, 8u64);
        let table = CountsTable { counts, shots: 8 };
        assert!(matches!(
            mitigated_expectation(&table, &[0], &cfg),
            Err(Error::SingularMitigation(0))
        ));
    }

    #[test]
    fn depolarizing_attenuates_and_scales() {
        let mut cfg = NoiseConfig::noiseless(1, 400_000, 21);
        cfg.depol = 0.05;
        cfg.layers = 4;
        let s = StateVector::from_label("0").unwrap();
        let e1 = raw_expectation(
            &sample_pauli(&s, &ps("Z"), &cfg, 1, StreamId::default()).unwrap(),
            1,
        );
        let e2 = raw_expectation(
            &sample_pauli(&s, &ps("Z"), &cfg, 2, StreamId::default()).unwrap(),
            1,
        );
        let l1 = 0.95f64.powi(4);
        let l2 = 0.95f64.powi(8);
        assert_close(e1, l1, 0.01);
        assert_close(e2, l2, 0.01);
        assert!(e2 < e1);
        // Richardson pulls the estimate back toward 1
        let zne = richardson_extrapolate(&[(1, e1), (2, e2)]).unwrap();
        assert!((zne - 1.0).abs() < (e1 - 1.0).abs());
    }

    #[test]
    fn richardson_rules() {
        // exact for linear models
        assert_close(
            richardson_extrapolate(&[(1, -3.0 + 0.2), (2, -3.0 + 0.4)]).unwrap(),
            -3.0,
            1e-12,
        );
        // constant data
        assert_close(richardson_extrapolate(&[(1, 0.5), (2, 0.5)]).unwrap(), 0.5, 1e-12);
        // two-point rule 2 v1 - v2
        assert_close(richardson_extrapolate(&[(1, 0.8), (2, 0.7)]).unwrap(), 0.9, 1e-12);
        // three-point least squares on a line stays exact
        assert_close(
            richardson_extrapolate(&[(1, 1.1), (2, 1.2), (3, 1.3)]).unwrap(),
            1.0,
            1e-12,
        );
        // error paths
        assert!(richardson_extrapolate(&[(1, 0.5)]).is_err());
        assert!(richardson_extrapolate(&[(1, 0.5), (1, 0.6)]).is_err());
    }

    #[test]
    fn fixed_seed_reproduces_counts() {
        let mut cfg = NoiseConfig::readout_symmetric(2, 2048, 0.03, 1234);
        cfg.depol = 0.02;
        cfg.layers = 2;
        let s = StateVector::from_superposition(2, &[("01", 1.0), ("10", -1.0)]).unwrap();
        let id = StreamId { step: 3, term: 5 };
        let a = sample_pauli(&s, &ps("XY"), &cfg, 2, id).unwrap();
        let b = sample_pauli(&s, &ps("XY"), &cfg, 2, id).unwrap();
        assert_eq!(a, b);
        // different stream gives different counts
        let c = sample_pauli(&s, &ps("XY"), &cfg, 2, StreamId { step: 3, term: 6 }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn measured_expectation_modes() {
        let h = build_ising_hamiltonian(3, 0.6, 1.0).unwrap();
        let s = StateVector::from_label("000").unwrap();

        let cfg = NoiseConfig::noiseless(3, 8192, 42);
        let exact =
            measured_expectation(&s, &h, &cfg, MeasurementMode::Exact, StreamId::default())
                .unwrap();
        assert_close(exact, -3.0, 1e-12);

        let shots =
            measured_expectation(&s, &h, &cfg, MeasurementMode::Shots, StreamId::default())
                .unwrap();
        assert_close(shots, -3.0, 0.1);

        // with readout noise, ROEM pulls the estimate back to the exact value
        let noisy_cfg = NoiseConfig::readout_symmetric(3, 8192, 0.05, 42);
        let raw = measured_expectation(
            &s,
            &h,
            &noisy_cfg,
            MeasurementMode::Shots,
            StreamId::default(),
        )
        .unwrap();
        let roem = measured_expectation(
            &s,
            &h,
            &noisy_cfg,
            MeasurementMode::ShotsRoem,
            StreamId::default(),
        )
        .unwrap();
        assert!((roem - -3.0).abs() < (raw - -3.0).abs());
        assert_close(roem, -3.0, 0.15);
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in [
            MeasurementMode::Exact,
            MeasurementMode::Shots,
            MeasurementMode::ShotsRoem,
            MeasurementMode::ShotsRoemRichardson,
        ] {
            assert_eq!(MeasurementMode::parse(mode.as_str()).unwrap(), mode);
        }
        assert!(MeasurementMode::parse("bogus").is_err());
    }
}
