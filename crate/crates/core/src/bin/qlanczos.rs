//! Command-line front end: spectra, imaginary-time traces, and
//! time-dependent observables as CSV.
//!
//! Exit codes: 0 success, 2 configuration/validation/parse failure,
//! 3 numerical no-convergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qlanczos::error::Error;
use qlanczos::io::{
    atomic_write, format_float, parse_config_file, parse_state_spec, scans_to_csv, series_to_csv,
    spectrum_from_csv, spectrum_to_csv, traces_to_csv,
};
use qlanczos::noise::{MeasurementMode, NoiseConfig};
use qlanczos::observables::{
    magnetization_series, occupation_series, transition_probability_series, ObservableSeries,
    TimeGrid,
};
use qlanczos::oracle::{oracle_spectrum, Spectrum};
use qlanczos::pauli::build_ising_hamiltonian;
use qlanczos::pipeline::{assemble_spectrum, PipelinePlan};
use qlanczos::qite::{run_qite, QiteConfig, QiteTrace};
use qlanczos::state::parse_basis_label;

#[derive(Parser)]
#[command(
    name = "qlanczos",
    about = "Imaginary-time and Krylov-subspace spectroscopy of the periodic transverse-field Ising chain",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the exact-diagonalization spectrum.
    Oracle(CommonArgs),
    /// Assemble the full spectrum from imaginary-time runs and compare it
    /// with the exact diagonalization.
    Spectrum(CommonArgs),
    /// Run imaginary-time evolution from an initial state and write the
    /// energy trace.
    Qite(QiteArgs),
    /// Evaluate time-dependent observables from a spectrum.
    Evolve(EvolveArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Number of sites.
    #[arg(long)]
    sites: Option<usize>,
    /// Ising bond coupling J.
    #[arg(long)]
    coupling: Option<f64>,
    /// Transverse field h_T.
    #[arg(long)]
    field: Option<f64>,
    /// Imaginary-time step.
    #[arg(long)]
    dtau: Option<f64>,
    /// Number of imaginary-time steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Shots per measured expectation value.
    #[arg(long)]
    shots: Option<u64>,
    /// Repeat count for error bars (seed offsets seed, seed+1, ...).
    #[arg(long)]
    runs: Option<usize>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Measurement mode: exact, shots, shots+roem, shots+roem+richardson.
    #[arg(long)]
    mode: Option<String>,
    /// Readout flip probability 1 -> 0 (applied to every qubit).
    #[arg(long)]
    p01: Option<f64>,
    /// Readout flip probability 0 -> 1 (applied to every qubit).
    #[arg(long)]
    p10: Option<f64>,
    /// Depolarizing strength per operation layer.
    #[arg(long)]
    depol: Option<f64>,
    /// Relative eigenvalue cutoff of the linear-system pseudo-inverse.
    #[arg(long)]
    svd_cutoff: Option<f64>,
    /// Order of the normalization-ratio expansion (1 or 2).
    #[arg(long)]
    expansion_order: Option<u8>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long)]
    jobs: Option<usize>,
    /// Flat key = value configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct QiteArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Initial state: `lib:<name>` or signed bitstrings like `+0001,-0010`.
    #[arg(long)]
    initial: String,
    /// Evolve under -H instead of H.
    #[arg(long)]
    negate_h: bool,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Spectrum CSV to evaluate; the exact oracle is used when omitted,
    /// and deviation columns against the oracle are added when present.
    #[arg(long)]
    spectrum: Option<PathBuf>,
    /// Transition probability series `in:fin` (bitstring labels).
    #[arg(long)]
    transition: Vec<String>,
    /// Occupation-number series for this initial bitstring (all sites).
    #[arg(long)]
    occupation: Vec<String>,
    /// Magnetization series for this initial bitstring.
    #[arg(long)]
    magnetization: Vec<String>,
    /// Start of the time grid.
    #[arg(long, default_value_t = 0.0)]
    tmin: f64,
    /// End of the time grid.
    #[arg(long, default_value_t = 10.0)]
    tmax: f64,
    /// Number of grid samples.
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

/// Fully resolved run configuration: defaults, then config file, then
/// explicit flags.
struct Resolved {
    sites: usize,
    coupling: f64,
    field: f64,
    mode: MeasurementMode,
    runs: usize,
    seed: u64,
    jobs: usize,
    out: Option<PathBuf>,
    qite: QiteConfig,
}

impl Resolved {
    fn provenance(&self) -> Vec<(String, String)> {
        let n = &self.qite.noise;
        vec![
            ("sites".into(), self.sites.to_string()),
            ("coupling".into(), format_float(self.coupling)),
            ("field".into(), format_float(self.field)),
            ("mode".into(), self.mode.as_str().into()),
            ("dtau".into(), format_float(self.qite.dtau)),
            ("steps".into(), self.qite.steps.to_string()),
            ("svd_cutoff".into(), format_float(self.qite.svd_cutoff)),
            (
                "expansion_order".into(),
                self.qite.expansion_order.to_string(),
            ),
            ("shots".into(), n.shots.to_string()),
            (
                "p01".into(),
                n.p01.iter().map(|p| format_float(*p)).collect::<Vec<_>>().join(";"),
            ),
            (
                "p10".into(),
                n.p10.iter().map(|p| format_float(*p)).collect::<Vec<_>>().join(";"),
            ),
            ("depol".into(), format_float(n.depol)),
            ("runs".into(), self.runs.to_string()),
            ("seed".into(), self.seed.to_string()),
        ]
    }
}

struct ConfigMap(Vec<(String, String)>);

impl ConfigMap {
    fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidParameter(format!("config key '{key}' has invalid value '{v}'"))
            }),
        }
    }

    /// Per-qubit probability list: a single value or a comma list.
    fn parse_probs(&self, key: &str, n: usize) -> Result<Option<Vec<f64>>, Error> {
        let Some(v) = self.get(key) else { return Ok(None) };
        let parts = v
            .split(',')
            .map(|p| {
                p.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidParameter(format!("config key '{key}' has invalid value '{v}'"))
                })
            })
            .collect::<Result<Vec<f64>, Error>>()?;
        match parts.len() {
            1 => Ok(Some(vec![parts[0]; n])),
            len if len == n => Ok(Some(parts)),
            len => Err(Error::InvalidParameter(format!(
                "config key '{key}' lists {len} probabilities for {n} qubits"
            ))),
        }
    }
}

fn resolve(args: &CommonArgs) -> Result<Resolved, Error> {
    let file = match &args.config {
        Some(path) => ConfigMap(parse_config_file(&std::fs::read_to_string(path)?)?),
        None => ConfigMap(Vec::new()),
    };
    let sites = args.sites.or(file.parse("sites")?).unwrap_or(3);
    let coupling = args.coupling.or(file.parse("coupling")?).unwrap_or(0.6);
    let field = args.field.or(file.parse("field")?).unwrap_or(1.0);
    let mode_text = args
        .mode
        .clone()
        .or(file.get("mode").map(str::to_string))
        .unwrap_or_else(|| "exact".into());
    let mode = MeasurementMode::parse(&mode_text)?;
    let runs = args.runs.or(file.parse("runs")?).unwrap_or(3);
    let seed = args.seed.or(file.parse("seed")?).unwrap_or(0);
    let jobs = args.jobs.or(file.parse("jobs")?).unwrap_or(1);
    if runs < 1 {
        return Err(Error::InvalidParameter("runs must be >= 1".into()));
    }
    if jobs < 1 {
        return Err(Error::InvalidParameter("jobs must be >= 1".into()));
    }

    let shots = args.shots.or(file.parse("noise.shots")?).unwrap_or(8192);
    let mut noise = NoiseConfig::noiseless(sites, shots, seed);
    if let Some(p) = args.p01.map(|p| vec![p; sites]).or(file.parse_probs("noise.p01", sites)?) {
        noise.p01 = p;
    }
    if let Some(p) = args.p10.map(|p| vec![p; sites]).or(file.parse_probs("noise.p10", sites)?) {
        noise.p10 = p;
    }
    if let Some(d) = args.depol.or(file.parse("noise.depol")?) {
        noise.depol = d;
    }
    if let Some(l) = file.parse("noise.layers")? {
        noise.layers = l;
    }
    noise.validate(sites)?;

    let mut qite = QiteConfig::exact(sites);
    qite.mode = mode;
    qite.noise = noise;
    qite.dtau = args.dtau.or(file.parse("qite.dtau")?).unwrap_or(qite.dtau);
    qite.steps = args.steps.or(file.parse("qite.steps")?).unwrap_or(qite.steps);
    qite.svd_cutoff = args
        .svd_cutoff
        .or(file.parse("qite.svd_cutoff")?)
        .unwrap_or(qite.svd_cutoff);
    qite.expansion_order = args
        .expansion_order
        .or(file.parse("qite.expansion_order")?)
        .unwrap_or(qite.expansion_order);
    qite.validate()?;

    Ok(Resolved {
        sites,
        coupling,
        field,
        mode,
        runs,
        seed,
        jobs,
        out: args.out.clone(),
        qite,
    })
}

fn emit(out: &Option<PathBuf>, contents: &str) -> Result<(), Error> {
    match out {
        Some(path) => atomic_write(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

/// Sibling path with a suffix before the extension: `spectrum.csv` ->
/// `spectrum-scan.csv`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn cmd_oracle(args: &CommonArgs) -> Result<(), Error> {
    let cfg = resolve(args)?;
    let spec = oracle_spectrum(cfg.sites, cfg.coupling, cfg.field)?;
    let mut provenance = cfg.provenance();
    provenance.insert(0, ("command".into(), "oracle".into()));
    emit(&cfg.out, &spectrum_to_csv(&spec, &provenance))
}

fn cmd_spectrum(args: &CommonArgs) -> Result<(), Error> {
    let cfg = resolve(args)?;
    let h = build_ising_hamiltonian(cfg.sites, cfg.coupling, cfg.field)?;
    let oracle = oracle_spectrum(cfg.sites, cfg.coupling, cfg.field)?;

    // exact mode is deterministic; repeats only matter with sampling
    let effective_runs = if cfg.mode == MeasurementMode::Exact {
        1
    } else {
        cfg.runs
    };
    let mut spectra: Vec<Spectrum> = Vec::new();
    let mut all_scans = Vec::new();
    for run in 0..effective_runs {
        let mut plan = if cfg.mode == MeasurementMode::Exact {
            let mut p = PipelinePlan::exact_default(cfg.sites)?;
            p.qite.dtau = cfg.qite.dtau;
            p.qite.svd_cutoff = cfg.qite.svd_cutoff;
            p.qite.expansion_order = cfg.qite.expansion_order;
            p
        } else {
            let mut qite = cfg.qite.clone();
            qite.noise.seed = cfg.seed + run as u64;
            PipelinePlan::noisy_default(cfg.sites, qite)?
        };
        plan.jobs = cfg.jobs;
        let outcome = assemble_spectrum(&plan, &h)?;
        for (label, records) in outcome.scans {
            all_scans.push((format!("run{run}:{label}"), records));
        }
        spectra.push(outcome.spectrum);
    }

    // comparison table on stdout
    let dim = oracle.dim();
    println!("# level, oracle, assembled(mean), std, deviation");
    for level in 0..dim {
        let values: Vec<f64> = spectra.iter().map(|s| s.energies[level]).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64)
            .sqrt();
        println!(
            "{level}, {:+.6}, {:+.6}, {:.2e}, {:+.2e}",
            oracle.energies[level],
            mean,
            std,
            mean - oracle.energies[level]
        );
    }

    let mut provenance = cfg.provenance();
    provenance.insert(0, ("command".into(), "spectrum".into()));
    emit(&cfg.out, &spectrum_to_csv(&spectra[0], &provenance))?;
    if let Some(out) = &cfg.out {
        atomic_write(&sibling(out, "-scan"), &scans_to_csv(&all_scans, &provenance))?;
    }
    Ok(())
}

fn cmd_qite(args: &QiteArgs) -> Result<(), Error> {
    let cfg = resolve(&args.common)?;
    let initial = parse_state_spec(&args.initial, cfg.sites)?;
    let mut h = build_ising_hamiltonian(cfg.sites, cfg.coupling, cfg.field)?;
    if args.negate_h {
        h = h.scaled(-1.0);
    }
    let effective_runs = if cfg.mode == MeasurementMode::Exact {
        1
    } else {
        cfg.runs
    };
    let mut traces: Vec<QiteTrace> = Vec::new();
    for run in 0..effective_runs {
        let mut qcfg = cfg.qite.clone();
        qcfg.noise.seed = cfg.seed + run as u64;
        traces.push(run_qite(&initial, &h, &qcfg)?);
    }
    let mut provenance = cfg.provenance();
    provenance.insert(0, ("command".into(), "qite".into()));
    provenance.push(("initial".into(), args.initial.clone()));
    provenance.push(("negate_h".into(), args.negate_h.to_string()));
    emit(&cfg.out, &traces_to_csv(&traces, &provenance)?)
}

fn cmd_evolve(args: &EvolveArgs) -> Result<(), Error> {
    let cfg = resolve(&args.common)?;
    let oracle = oracle_spectrum(cfg.sites, cfg.coupling, cfg.field)?;
    let loaded: Option<Spectrum> = match &args.spectrum {
        Some(path) => {
            let spec = spectrum_from_csv(&std::fs::read_to_string(path)?)?;
            if spec.num_sites != cfg.sites {
                return Err(Error::DimensionMismatch(format!(
                    "spectrum file describes {} sites, configured {}",
                    spec.num_sites, cfg.sites
                )));
            }
            Some(spec)
        }
        None => None,
    };
    let primary = loaded.as_ref().unwrap_or(&oracle);
    let grid = TimeGrid::new(args.tmin, args.tmax, args.samples)?;

    if args.transition.is_empty() && args.occupation.is_empty() && args.magnetization.is_empty() {
        return Err(Error::InvalidParameter(
            "no observable requested: use --transition, --occupation, or --magnetization".into(),
        ));
    }

    let evaluate = |spec: &Spectrum| -> Result<Vec<ObservableSeries>, Error> {
        let mut series = Vec::new();
        for spec_text in &args.transition {
            let (from, to) = spec_text.split_once(':').ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "transition '{spec_text}' must be of the form in:fin"
                ))
            })?;
            let x_in = parse_basis_label(from, cfg.sites)?;
            let x_fin = parse_basis_label(to, cfg.sites)?;
            let mut s = transition_probability_series(spec, x_in, x_fin, &grid)?;
            s.label = format!("p_{from}_to_{to}");
            series.push(s);
        }
        for label in &args.occupation {
            let x = parse_basis_label(label, cfg.sites)?;
            for site in 0..cfg.sites {
                let mut s = occupation_series(spec, x, site, &grid)?;
                s.label = format!("n{site}_{label}");
                series.push(s);
            }
        }
        for label in &args.magnetization {
            let x = parse_basis_label(label, cfg.sites)?;
            let mut s = magnetization_series(spec, x, &grid)?;
            s.label = format!("mz_{label}");
            series.push(s);
        }
        Ok(series)
    };

    let mut series = evaluate(primary)?;
    if loaded.is_some() {
        // deviation columns against the oracle
        let reference = evaluate(&oracle)?;
        for (s, r) in series.clone().iter().zip(reference) {
            let values = s
                .values
                .iter()
                .zip(&r.values)
                .map(|(a, b)| a - b)
                .collect();
            series.push(ObservableSeries {
                grid: grid.clone(),
                label: format!("{}_dev", s.label),
                values,
            });
        }
    }

    let mut provenance = cfg.provenance();
    provenance.insert(0, ("command".into(), "evolve".into()));
    provenance.push((
        "source".into(),
        match &args.spectrum {
            Some(p) => p.display().to_string(),
            None => "oracle".into(),
        },
    ));
    emit(&cfg.out, &series_to_csv(&series, &provenance)?)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidOperand(_)
        | Error::InvalidParameter(_)
        | Error::IndexOutOfRange { .. }
        | Error::DimensionMismatch(_)
        | Error::Parse { .. }
        | Error::Io(_) => 2,
        Error::NotRealRepresentable(_)
        | Error::NoEigConvergence { .. }
        | Error::Numerical(_)
        | Error::SingularMitigation(_)
        | Error::InconsistentSystem
        | Error::StepTooLarge { .. }
        | Error::DegenerateKrylov { .. }
        | Error::NoConvergence { .. }
        | Error::MissingLevels { .. }
        | Error::RealnessViolation { .. } => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Oracle(args) => cmd_oracle(args),
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Qite(args) => cmd_qite(args),
        Command::Evolve(args) => cmd_evolve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
