//! Symmetry machinery and assembly of a complete spectrum from
//! imaginary-time runs.
//!
//! The chain Hamiltonian commutes with occupation parity `(-1)^F`, cyclic
//! translation, and spatial reflection. Imaginary-time evolution preserves
//! the symmetry sector of its initial state and converges to the lowest
//! level *of that sector*, so a plan of sector-spanning initial states —
//! run against both `H` and `-H` to reach the top of the spectrum — plus a
//! small library of analytically known degenerate eigenstates covers every
//! level. This module provides the symmetry operators and tags, the state
//! library, degenerate-subspace expansion, and the deduplicating assembly
//! that turns many Krylov candidates into one orthonormal eigensystem.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::oracle::{to_dense_real, Spectrum};
use crate::pauli::PauliSum;
use crate::qite::{run_qite, QiteConfig};
use crate::qlanczos::{scan, uncertainty, ScanConfig, ScanRecord};
use crate::state::StateVector;

/// Eigenvalue sign of a Z2 symmetry.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum Z2 {
    Even,
    Odd,
}

/// Measured symmetry character of a state. `None` means the state is not an
/// eigenvector of that operator.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct SymmetryTags {
    pub parity: Option<Z2>,
    pub reflection: Option<Z2>,
    pub translation_invariant: bool,
}

/// Occupation parity operator `(-1)^F`: phase `(-1)^popcount` per basis
/// state.
pub fn parity_op(state: &StateVector) -> StateVector {
    let amps = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(idx, a)| {
            if idx.count_ones() % 2 == 1 {
                -a
            } else {
                *a
            }
        })
        .collect();
    StateVector::from_amplitudes(state.num_sites(), amps)
        .expect("phase flip preserves the norm")
}

fn z2_character(state: &StateVector, mapped: &StateVector) -> Option<Z2> {
    let overlap = state.inner(mapped).expect("same dimension").re;
    if (overlap - 1.0).abs() < 1e-9 {
        Some(Z2::Even)
    } else if (overlap + 1.0).abs() < 1e-9 {
        Some(Z2::Odd)
    } else {
        None
    }
}

/// Measure the symmetry character of a state by applying the operators.
pub fn symmetry_tags(state: &StateVector) -> SymmetryTags {
    SymmetryTags {
        parity: z2_character(state, &parity_op(state)),
        reflection: z2_character(state, &state.reflect()),
        translation_invariant: z2_character(state, &state.translate()) == Some(Z2::Even),
    }
}

/// Max-element norms of the commutators of a Hamiltonian with the three
/// symmetry operators on dense matrices.
#[derive(Clone, Debug)]
pub struct CommutatorReport {
    pub parity: f64,
    pub translation: f64,
    pub reflection: f64,
}

fn permutation_matrix(n: usize, map: impl Fn(usize) -> usize) -> Matrix {
    let dim = 1usize << n;
    let mut m = Matrix::zeros(dim, dim);
    for x in 0..dim {
        m[(map(x), x)] = 1.0;
    }
    m
}

fn max_commutator(h: &Matrix, o: &Matrix) -> Result<f64> {
    let ho = h.matmul(o)?;
    let oh = o.matmul(h)?;
    let mut worst = 0.0f64;
    for i in 0..h.rows {
        for j in 0..h.cols {
            worst = worst.max((ho[(i, j)] - oh[(i, j)]).abs());
        }
    }
    Ok(worst)
}

/// Verify `[H, (-1)^F] = [H, T] = [H, R] = 0` on dense matrices.
pub fn commutator_checks(h: &PauliSum) -> Result<CommutatorReport> {
    let n = h
        .num_sites()
        .ok_or_else(|| Error::InvalidOperand("commutators of the zero operator".into()))?;
    let dense = to_dense_real(h)?;
    let dim = 1usize << n;
    let mut parity = Matrix::zeros(dim, dim);
    for x in 0..dim {
        parity[(x, x)] = if x.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
    }
    let mask = dim - 1;
    let translation = permutation_matrix(n, |x| ((x << 1) | (x >> (n - 1))) & mask);
    let reflection = permutation_matrix(n, |x| {
        let mut r = 0usize;
        for site in 0..n {
            if x >> site & 1 == 1 {
                r |= 1 << ((n - site) % n);
            }
        }
        r
    });
    Ok(CommutatorReport {
        parity: max_commutator(&dense, &parity)?,
        translation: max_commutator(&dense, &translation)?,
        reflection: max_commutator(&dense, &reflection)?,
    })
}

/// Named initial state with its measured symmetry tags. `analytic` marks
/// exact degenerate eigenstates (at the standard couplings) intended for
/// direct injection rather than imaginary-time evolution.
#[derive(Clone, Debug)]
pub struct LibraryEntry {
    pub name: String,
    pub state: StateVector,
    pub tags: SymmetryTags,
    pub analytic: bool,
}

fn entry(name: &str, state: StateVector, analytic: bool) -> LibraryEntry {
    let tags = symmetry_tags(&state);
    LibraryEntry {
        name: name.to_string(),
        state,
        tags,
        analytic,
    }
}

/// The named initial states used throughout: computational basis anchors,
/// symmetric/alternating one-particle superpositions, and the analytic
/// degenerate eigenstates of the standard couplings (J = 0.6, h_T = 1).
pub fn initial_state_library(n: usize) -> Result<Vec<LibraryEntry>> {
    let sup = |parts: &[(&str, f64)]| StateVector::from_superposition(n, parts);
    match n {
        3 => Ok(vec![
            entry("000", StateVector::from_label("000")?, false),
            entry("100", StateVector::from_label("100")?, false),
            entry("010", StateVector::from_label("010")?, false),
            entry("001", StateVector::from_label("001")?, false),
            entry("110", StateVector::from_label("110")?, false),
            entry("101", StateVector::from_label("101")?, false),
            entry("011", StateVector::from_label("011")?, false),
            entry("111", StateVector::from_label("111")?, false),
            entry(
                "w3-oneparticle",
                sup(&[("100", 1.0), ("010", 1.0), ("001", 1.0)])?,
                false,
            ),
            entry(
                "w3-twoparticle",
                sup(&[("110", 1.0), ("101", 1.0), ("011", 1.0)])?,
                false,
            ),
            // one-particle differences: the E = -0.4 doublet
            entry("doublet-low-a", sup(&[("001", 1.0), ("010", -1.0)])?, true),
            entry("doublet-low-b", sup(&[("100", 1.0), ("001", -1.0)])?, true),
            // two-particle differences: the E = +1.6 doublet
            entry("doublet-high-a", sup(&[("110", 1.0), ("101", -1.0)])?, true),
            entry("doublet-high-b", sup(&[("011", 1.0), ("110", -1.0)])?, true),
        ]),
        4 => Ok(vec![
            entry("0000", StateVector::from_label("0000")?, false),
            entry("1000", StateVector::from_label("1000")?, false),
            entry("1100", StateVector::from_label("1100")?, false),
            entry("1010", StateVector::from_label("1010")?, false),
            entry("1111", StateVector::from_label("1111")?, false),
            entry(
                "w4-oneparticle",
                sup(&[("1000", 1.0), ("0100", 1.0), ("0010", 1.0), ("0001", 1.0)])?,
                false,
            ),
            entry(
                "w4-oneparticle-alt",
                sup(&[("0001", 1.0), ("0010", -1.0), ("0100", 1.0), ("1000", -1.0)])?,
                false,
            ),
            entry(
                "sqrt7",
                sup(&[
                    ("0000", 1.0),
                    ("1100", 1.0),
                    ("0110", 1.0),
                    ("0101", 1.0),
                    ("1010", 1.0),
                    ("1001", 1.0),
                    ("1111", 1.0),
                ])?,
                false,
            ),
            // the E = -2 doublet
            entry("pair-low-a", sup(&[("0001", 1.0), ("0100", -1.0)])?, true),
            entry("pair-low-b", sup(&[("0010", 1.0), ("1000", -1.0)])?, true),
            // the four-fold E = 0 subspace
            entry("zero-a", sup(&[("0101", 1.0), ("1010", -1.0)])?, true),
            entry("zero-b", sup(&[("0011", 1.0), ("0110", -1.0)])?, true),
            entry("zero-c", sup(&[("0110", 1.0), ("1001", -1.0)])?, true),
            entry("zero-d", sup(&[("1001", 1.0), ("1100", -1.0)])?, true),
            // the E = +2 doublet
            entry("pair-high-a", sup(&[("1110", 1.0), ("1011", -1.0)])?, true),
            entry("pair-high-b", sup(&[("1101", 1.0), ("0111", -1.0)])?, true),
        ]),
        _ => Err(Error::InvalidParameter(format!(
            "no state library for {n} sites (supported: 3, 4)"
        ))),
    }
}

/// Look up a library state by name.
pub fn library_state(n: usize, name: &str) -> Result<StateVector> {
    initial_state_library(n)?
        .into_iter()
        .find(|e| e.name == name)
        .map(|e| e.state)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown library state '{name}' for {n} sites")))
}

fn project_out(amps: &mut [Complex64], basis: &[StateVector]) {
    for b in basis {
        let overlap: Complex64 = b
            .amplitudes()
            .iter()
            .zip(amps.iter())
            .map(|(x, y)| x.conj() * y)
            .sum();
        for (a, x) in amps.iter_mut().zip(b.amplitudes()) {
            *a -= overlap * x;
        }
    }
}

fn norm_of(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormal basis of the degenerate subspace reachable from `state` by
/// the translation and reflection orbit, Gram-Schmidt accumulated. `state`
/// must be an approximate eigenstate (`uncertainty < tol`).
pub fn degenerate_partners(
    state: &StateVector,
    h: &PauliSum,
    tol: f64,
) -> Result<Vec<StateVector>> {
    let delta = uncertainty(state, h)?;
    if delta >= tol {
        return Err(Error::InvalidOperand(format!(
            "degenerate-partner input is not an eigenstate: dE = {delta:.3e} >= {tol:.3e}"
        )));
    }
    let mut basis = vec![state.clone()];
    let mut frontier = vec![state.clone()];
    while let Some(current) = frontier.pop() {
        for mapped in [current.translate(), current.reflect()] {
            let mut amps = mapped.amplitudes().to_vec();
            project_out(&mut amps, &basis);
            if norm_of(&amps) > 1e-6 {
                let new = StateVector::from_amplitudes(state.num_sites(), amps)?;
                basis.push(new.clone());
                frontier.push(new);
            }
        }
    }
    // symmetry operators commute with H, so partners share the energy;
    // assert it anyway to catch misuse
    let e0 = state.expectation(h)?;
    for b in &basis {
        let e = b.expectation(h)?;
        if (e - e0).abs() > tol.max(1e-8) {
            return Err(Error::Numerical(format!(
                "degenerate partner drifted in energy: {e} vs {e0}"
            )));
        }
    }
    Ok(basis)
}

/// One imaginary-time run of the plan.
#[derive(Clone, Debug)]
pub struct PlanEntry {
    pub label: String,
    pub initial: StateVector,
    /// Evolve under `-H` to reach the top of the spectrum.
    pub negate_h: bool,
    /// Per-run override of the plan's scan settings; `None` uses the
    /// plan-level configuration. Larger Krylov dimensions resolve sectors
    /// with more than two levels.
    pub scan: Option<ScanConfig>,
}

/// Complete recipe for assembling a spectrum.
#[derive(Clone, Debug)]
pub struct PipelinePlan {
    pub entries: Vec<PlanEntry>,
    /// Analytically known eigenstates injected directly.
    pub injections: Vec<(String, StateVector)>,
    pub qite: QiteConfig,
    pub scan: ScanConfig,
    /// Candidates within this energy window of an accepted level are tested
    /// for duplication against that level's subspace.
    pub energy_window: f64,
    /// Squared-overlap threshold above which a candidate counts as a
    /// duplicate of an already-accepted subspace.
    pub dedupe_fidelity: f64,
    /// Worker threads for the independent plan entries.
    pub jobs: usize,
    /// When at most this many levels are missing after assembly, recover
    /// them by diagonalizing the Hamiltonian restricted to the orthogonal
    /// complement of the found basis. Zero disables completion.
    pub max_completed_levels: usize,
}

impl PipelinePlan {
    /// Exact-mode plan covering every symmetry sector of the standard
    /// couplings: sector minima via `+H` runs, sector maxima via `-H` runs,
    /// analytic degenerate eigenstates injected.
    pub fn exact_default(n: usize) -> Result<PipelinePlan> {
        let lib = |name: &str| library_state(n, name);
        let run = |label: &str, initial: StateVector, negate_h: bool| PlanEntry {
            label: label.to_string(),
            initial,
            negate_h,
            scan: None,
        };
        let entries = match n {
            3 => vec![
                run("100+H", lib("100")?, false),
                run("w3-twoparticle+H", lib("w3-twoparticle")?, false),
                run("111-H", lib("111")?, true),
                run("110-H", lib("110")?, true),
                run("000-H", lib("000")?, true),
            ],
            4 => {
                // the translation-invariant even sector holds four levels,
                // so its runs use a three-dimensional Krylov scan
                let wide = ScanConfig {
                    dim: 3,
                    ..ScanConfig::exact()
                };
                vec![
                    PlanEntry {
                        label: "0000+H".into(),
                        initial: lib("0000")?,
                        negate_h: false,
                        scan: Some(wide.clone()),
                    },
                    PlanEntry {
                        label: "sqrt7-H".into(),
                        initial: lib("sqrt7")?,
                        negate_h: true,
                        scan: None,
                    },
                    run("1100-H", lib("1100")?, true),
                    run("w4-oneparticle+H", lib("w4-oneparticle")?, false),
                    run("w4-oneparticle-alt+H", lib("w4-oneparticle-alt")?, false),
                    run("w4-oneparticle-alt-H", lib("w4-oneparticle-alt")?, true),
                ]
            }
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "no default plan for {n} sites (supported: 3, 4)"
                )))
            }
        };
        let injections = initial_state_library(n)?
            .into_iter()
            .filter(|e| e.analytic)
            .map(|e| (e.name, e.state))
            .collect();
        let mut qite = QiteConfig::exact(n);
        if n >= 4 {
            // the four-site sectors relax more slowly; a longer trace keeps
            // the Krylov uncertainty filter satisfiable
            qite.steps = 60;
        }
        Ok(PipelinePlan {
            entries,
            injections,
            qite,
            scan: ScanConfig::exact(),
            energy_window: 0.05,
            dedupe_fidelity: 0.99,
            jobs: 1,
            // the even translation-invariant mid-spectrum pair is recovered
            // from the orthogonal complement of the directly found levels
            max_completed_levels: if n >= 4 { 2 } else { 0 },
        })
    }

    /// Same coverage with sampled measurements: looser uncertainty filter,
    /// Rayleigh-quotient energies, and a wider dedupe window to absorb shot
    /// noise.
    pub fn noisy_default(n: usize, qite: QiteConfig) -> Result<PipelinePlan> {
        let mut plan = PipelinePlan::exact_default(n)?;
        plan.qite = qite;
        plan.scan = ScanConfig {
            accept_delta: 0.8,
            scan_stop: 0.0,
            energy_from_pencil: false,
            ..ScanConfig::default()
        };
        // per-entry overrides keep their Krylov dimension but inherit the
        // noisy acceptance settings
        for entry in &mut plan.entries {
            if let Some(over) = &mut entry.scan {
                over.accept_delta = plan.scan.accept_delta;
                over.scan_stop = plan.scan.scan_stop;
                over.energy_from_pencil = plan.scan.energy_from_pencil;
            }
        }
        // noisy candidates scatter in energy and often sit mostly inside an
        // already-accepted degenerate subspace with a small contamination;
        // a wider window and a lower overlap threshold reject those while
        // genuinely new eigenstates (low mutual overlap) still pass
        plan.energy_window = 0.3;
        plan.dedupe_fidelity = 0.5;
        plan.max_completed_levels = plan.max_completed_levels.max(4);
        Ok(plan)
    }
}

struct Harvested {
    origin: String,
    state: StateVector,
    energy: f64,
    delta_e: f64,
}

/// Assembled spectrum plus per-entry scan diagnostics.
pub struct AssemblyOutcome {
    pub spectrum: Spectrum,
    pub scans: Vec<(String, Vec<ScanRecord>)>,
    /// (origin, energy) of every deduplicated level before orthonormalization.
    pub provenance: Vec<(String, f64)>,
}

/// Run the plan and assemble the complete orthonormal eigensystem.
///
/// Candidates are harvested from every run (all scan-accepted eigenpairs),
/// analytic injections are seeded first, duplicates are filtered by
/// subspace overlap within an energy window, accepted eigenstates are
/// expanded along their symmetry orbits, and the final basis is
/// orthonormalized in ascending energy order. Level energies are recomputed
/// as Rayleigh quotients of the orthonormal basis, which makes the trace
/// identity `sum E = 0` exact.
pub fn assemble_spectrum(plan: &PipelinePlan, h: &PauliSum) -> Result<AssemblyOutcome> {
    let n = h
        .num_sites()
        .ok_or_else(|| Error::InvalidOperand("assembly for the zero operator".into()))?;
    let dim = 1usize << n;
    if plan.entries.is_empty() {
        return Err(Error::InvalidParameter("plan has no entries".into()));
    }

    // run the independent plan entries (optionally on worker threads)
    type EntryResult = (Vec<Harvested>, Vec<ScanRecord>);
    let results: Mutex<Vec<Option<EntryResult>>> =
        Mutex::new((0..plan.entries.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let errors: Mutex<Vec<Error>> = Mutex::new(Vec::new());

    let worker = |_| {
        loop {
            let k = next.fetch_add(1, Ordering::SeqCst);
            if k >= plan.entries.len() {
                break;
            }
            let entry = &plan.entries[k];
            let run = || -> Result<(Vec<Harvested>, Vec<ScanRecord>)> {
                let h_run = if entry.negate_h { h.scaled(-1.0) } else { h.clone() };
                let trace = run_qite(&entry.initial, &h_run, &plan.qite)?;
                let scan_cfg = entry.scan.as_ref().unwrap_or(&plan.scan);
                let outcome = scan(&trace, &h_run, scan_cfg)?;
                let mut harvested = Vec::new();
                for cand in outcome.accepted {
                    // energies and uncertainties are re-expressed against the
                    // un-negated Hamiltonian
                    let energy = cand.state.expectation(h)?;
                    harvested.push(Harvested {
                        origin: entry.label.clone(),
                        state: cand.state,
                        energy,
                        delta_e: cand.delta_e,
                    });
                }
                Ok((harvested, outcome.records))
            };
            match run() {
                Ok(r) => results.lock().unwrap()[k] = Some(r),
                Err(e) => errors.lock().unwrap().push(e),
            }
        }
    };
    let jobs = plan.jobs.max(1).min(plan.entries.len());
    if jobs <= 1 {
        worker(0);
    } else {
        std::thread::scope(|scope| {
            for j in 0..jobs {
                scope.spawn(move || worker(j));
            }
        });
    }
    if let Some(e) = errors.into_inner().unwrap().into_iter().next() {
        return Err(e);
    }

    let mut scans = Vec::new();
    let mut candidates: Vec<Harvested> = Vec::new();
    for (entry, slot) in plan.entries.iter().zip(results.into_inner().unwrap()) {
        let (harvested, records) = slot.expect("worker filled every slot");
        scans.push((entry.label.clone(), records));
        candidates.extend(harvested);
    }
    candidates.sort_by(|a, b| a.delta_e.partial_cmp(&b.delta_e).unwrap());

    // injections are trusted first
    let mut ordered: Vec<Harvested> = Vec::new();
    for (name, state) in &plan.injections {
        let energy = state.expectation(h)?;
        let delta_e = state.residual_norm(h, energy)?;
        ordered.push(Harvested {
            origin: format!("inject:{name}"),
            state: state.clone(),
            energy,
            delta_e,
        });
    }
    ordered.extend(candidates);

    // greedy dedupe: a candidate is dropped when its squared overlap with
    // the span of accepted states at compatible energies exceeds the
    // threshold
    let mut accepted: Vec<Harvested> = Vec::new();
    for cand in ordered {
        let span: Vec<StateVector> = accepted
            .iter()
            .filter(|a| (a.energy - cand.energy).abs() < plan.energy_window)
            .map(|a| a.state.clone())
            .collect();
        if !span.is_empty() {
            // Gram-Schmidt the span on the fly, then measure the overlap
            let mut ortho: Vec<StateVector> = Vec::new();
            for s in &span {
                let mut amps = s.amplitudes().to_vec();
                project_out(&mut amps, &ortho);
                if norm_of(&amps) > 1e-8 {
                    ortho.push(StateVector::from_amplitudes(n, amps)?);
                }
            }
            let overlap_sq: f64 = ortho
                .iter()
                .map(|b| cand.state.inner(b).map(|z| z.norm_sqr()))
                .collect::<Result<Vec<_>>>()?
                .iter()
                .sum();
            if overlap_sq > plan.dedupe_fidelity {
                continue;
            }
        }
        accepted.push(cand);
        if accepted.len() == dim {
            break;
        }
    }

    // expand symmetry orbits of sharp eigenstates to fill degenerate
    // subspaces the runs saw only one member of
    let sharp: Vec<(String, StateVector, f64)> = accepted
        .iter()
        .filter(|a| a.delta_e < 1e-6)
        .map(|a| (a.origin.clone(), a.state.clone(), a.energy))
        .collect();
    for (origin, state, energy) in sharp {
        if accepted.len() >= dim {
            break;
        }
        for partner in degenerate_partners(&state, h, 1e-5)? {
            let span: Vec<StateVector> = accepted
                .iter()
                .filter(|a| (a.energy - energy).abs() < plan.energy_window)
                .map(|a| a.state.clone())
                .collect();
            let mut amps = partner.amplitudes().to_vec();
            project_out(&mut amps, &span);
            if norm_of(&amps) > 0.1 {
                let new = StateVector::from_amplitudes(n, amps)?;
                let e = new.expectation(h)?;
                let d = new.residual_norm(h, e)?;
                accepted.push(Harvested {
                    origin: format!("orbit:{origin}"),
                    state: new,
                    energy: e,
                    delta_e: d,
                });
            }
        }
    }

    // global orthonormalization in order of trust (uncertainty ascending):
    // sharp eigenstates — injections have uncertainty near zero — are kept
    // intact and noisy candidates absorb the orthogonality corrections;
    // vectors consumed by earlier ones are duplicates and vanish here
    accepted.sort_by(|a, b| a.delta_e.partial_cmp(&b.delta_e).unwrap());
    let mut basis: Vec<StateVector> = Vec::new();
    let mut provenance: Vec<(String, f64)> = Vec::new();
    for cand in &accepted {
        let mut amps = cand.state.amplitudes().to_vec();
        project_out(&mut amps, &basis);
        if norm_of(&amps) < 1e-6 {
            continue;
        }
        basis.push(StateVector::from_amplitudes(n, amps)?);
        provenance.push((cand.origin.clone(), cand.energy));
    }

    // recover a small number of missing levels from the orthogonal
    // complement of the found basis: the Hamiltonian block-diagonalizes
    // against an invariant subspace, so diagonalizing its restriction to
    // the complement yields the remaining eigenpairs
    if basis.len() < dim && dim - basis.len() <= plan.max_completed_levels {
        let mut complement: Vec<StateVector> = Vec::new();
        for x in 0..dim {
            if basis.len() + complement.len() == dim {
                break;
            }
            let mut amps = vec![Complex64::new(0.0, 0.0); dim];
            amps[x] = Complex64::new(1.0, 0.0);
            project_out(&mut amps, &basis);
            project_out(&mut amps, &complement);
            if norm_of(&amps) > 1e-3 {
                complement.push(StateVector::from_amplitudes(n, amps)?);
            }
        }
        let k = complement.len();
        let mut block = Matrix::zeros(k, k);
        for i in 0..k {
            let h_ci = complement[i].apply_sum(h)?;
            for j in 0..k {
                let elem: Complex64 = complement[j]
                    .amplitudes()
                    .iter()
                    .zip(&h_ci)
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                block[(j, i)] = elem.re;
            }
        }
        let eig = crate::linalg::eigh(&block)?;
        for level in 0..k {
            let mut amps = vec![Complex64::new(0.0, 0.0); dim];
            for (i, c) in complement.iter().enumerate() {
                let w = eig.vectors[(i, level)];
                for (a, x) in amps.iter_mut().zip(c.amplitudes()) {
                    *a += w * x;
                }
            }
            let state = StateVector::from_amplitudes(n, amps)?;
            let e = state.expectation(h)?;
            basis.push(state);
            provenance.push(("complement".to_string(), e));
        }
    }

    if basis.len() != dim {
        let covered = basis
            .iter()
            .map(|b| b.expectation(h))
            .collect::<Result<Vec<_>>>()?;
        return Err(Error::MissingLevels {
            found: basis.len(),
            expected: dim,
            covered,
        });
    }

    // final energies are Rayleigh quotients of the orthonormal basis
    let mut levels: Vec<(f64, StateVector, String)> = basis
        .into_iter()
        .zip(provenance)
        .map(|(b, (origin, _))| {
            let e = b.expectation(h)?;
            Ok((e, b, origin))
        })
        .collect::<Result<Vec<_>>>()?;
    levels.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut energies = Vec::with_capacity(dim);
    let mut t = Matrix::zeros(dim, dim);
    let mut provenance = Vec::with_capacity(dim);
    for (row, (e, state, origin)) in levels.into_iter().enumerate() {
        // imaginary-time propagation through matrix exponentials leaves
        // imaginary residue at roundoff-accumulation scale
        let real = state.to_real(1e-6)?;
        // sign convention: largest-magnitude component positive
        let mut best = 0usize;
        for x in 1..dim {
            if real.amplitudes()[x].re.abs() > real.amplitudes()[best].re.abs() {
                best = x;
            }
        }
        let sign = if real.amplitudes()[best].re < 0.0 { -1.0 } else { 1.0 };
        for x in 0..dim {
            t[(row, x)] = sign * real.amplitudes()[x].re;
        }
        energies.push(e);
        provenance.push((origin, e));
    }

    let spectrum = Spectrum {
        num_sites: n,
        energies,
        t,
    };
    Ok(AssemblyOutcome {
        spectrum,
        scans,
        provenance,
    })
}
