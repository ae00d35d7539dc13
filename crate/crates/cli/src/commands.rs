//! Subcommand definitions and dispatch.
//!
//! Numeric CSV columns are documented in each subcommand's long help,
//! including units: energies are in units of the hopping scale, densities
//! in particles per lattice site, and the box parameter l means a side of
//! l sites (periodic) or l + 1 sites (Neumann).

use bosegas::bogoliubov::{log_grid, trial_energy_finite, upper_bound_sweep, TrialStateConfig};
use bosegas::ed::{build_hamiltonian, ground_state_energy, EdParams, DEFAULT_NNZ_CAP};
use bosegas::error::Error as CoreError;
use bosegas::lattice::{build_lattice, LatticeConfig, LatticeModel};
use bosegas::lower_bound::{certificate, default_mu, mu_window, CertificateInput, MuWindow};
use bosegas::numerics::pairwise_sum;
use bosegas::quad::QuadratureParams;
use bosegas::scattering::{scattering_data, ScatteringData};
use bosegas::spectra::{build_laplacian, special_neumann_eigs, LaplacianKind, SpectrumResult};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};

use crate::report::{cell, json_text, Manifest, Target};

#[derive(Parser)]
#[command(
    name = "bosegas",
    version,
    about = "Dilute Bose gas energetics on 3D Bravais lattices",
    after_help = "Exit codes: 0 success, 1 compute error, 2 validation error, 64 usage error.\n\
                  Errors are reported as one-line JSON on standard error."
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scattering data for the configured lattice.
    #[command(after_help = "JSON fields: gamma (zone integral of 1/(2 eps)), a \
        (scattering length, primitive-cell units), phi0 (scattering solution at the \
        origin), w0 = 1 - phi0, rel_error_estimate (quadrature error on gamma).")]
    Scattering(ScatteringArgs),
    /// Variational upper-bound sweep over a density grid.
    #[command(after_help = "CSV columns: rho (particles per site), e_psi (trial energy \
        per site, hopping units), ratio = e_psi / (4 pi a rho^2), leading_term = \
        4 pi a rho^2 (hopping units). With --finite-L two columns follow: finite_e_psi \
        (exact finite-box energy per site) and finite_quadratic_terms (the pair-sum \
        contribution the thermodynamic formula drops). The JSON summary holds the \
        dilute-limit fit ratio - 1 ~ fit_prefactor * rho^fit_exponent; with --out it \
        is written next to the CSV, otherwise it trails the CSV as a '# summary' line.")]
    UpperBound(UpperBoundArgs),
    /// Spectral diagnostics of the one-body box Laplacians.
    #[command(after_help = "CSV columns: l (box parameter), kind, gap (second \
        eigenvalue, hopping units), trace_inv (per-site sum of inverse nonzero \
        eigenvalues, inverse hopping units), min_nonzero (smallest nonzero \
        eigenvalue, hopping units).")]
    Spectra(SpectraArgs),
    /// Certified lower bound on an n-particle Neumann ground energy.
    #[command(after_help = "JSON fields: mu_window (admissible chemical-potential \
        interval, hopping units), mu_used, S (Bogoliubov defect sum), lb_energy \
        (certified lower bound, hopping units), and with --ed also ed_energy (exact \
        ground energy) and slack = ed_energy - lb_energy >= 0. The default mu is the \
        geometric midpoint of the window; --scan evaluates 16 points across the \
        window and keeps the largest bound.")]
    Certify(CertifyArgs),
    /// Exact diagonalization of small boxes.
    #[command(after_help = "CSV columns: n (bosons), l (box parameter), u (on-site \
        interaction, hopping units), bc (periodic or neumann), dim (basis states), \
        e0 (ground energy, hopping units), residual (|H v - e0 v|).")]
    Ed(EdArgs),
    /// All subcommands over one config, written into a directory.
    #[command(after_help = "Writes scattering.json, spectra.csv, upper_bound.csv, \
        upper_bound.json, ed.csv, certify.json, and manifest.json into --out-dir. \
        The certificate leg runs at --certify-u (the small-interaction desk scale) \
        regardless of the config's U, since dense interactions empty the mu window \
        on desk-sized boxes.")]
    SweepAll(SweepAllArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Lattice configuration JSON file.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Worker pool size; defaults to the available parallelism.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Seed for the eigensolver start vector.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct ScatteringArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Quadrature resolution per axis.
    #[arg(long, default_value_t = 128)]
    nq: usize,
    /// Write the JSON here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct UpperBoundArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Smallest density of the sweep (particles per site).
    #[arg(long = "rho-min", default_value_t = 1e-6)]
    rho_min: f64,
    /// Largest density of the sweep.
    #[arg(long = "rho-max", default_value_t = 1e-3)]
    rho_max: f64,
    /// Number of grid points, log-spaced.
    #[arg(long, default_value_t = 25)]
    points: usize,
    /// Also evaluate the exact finite-box trial energy at this even box size.
    #[arg(long = "finite-L", value_name = "L")]
    finite_l: Option<i64>,
    /// Quadrature resolution per axis.
    #[arg(long, default_value_t = 128)]
    nq: usize,
    /// Write the CSV here (the JSON summary lands next to it).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum SpectraKind {
    Periodic,
    Neumann,
    #[value(name = "neumann_special")]
    NeumannSpecial,
}

impl SpectraKind {
    fn to_kind(self) -> LaplacianKind {
        match self {
            SpectraKind::Periodic => LaplacianKind::Periodic,
            SpectraKind::Neumann => LaplacianKind::Neumann,
            SpectraKind::NeumannSpecial => LaplacianKind::NeumannSpecial,
        }
    }
}

#[derive(Args)]
struct SpectraArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Which box Laplacian to diagonalize.
    #[arg(long, value_enum)]
    kind: SpectraKind,
    /// Comma-separated box parameters.
    #[arg(long = "l-list", value_delimiter = ',', required = true)]
    l_list: Vec<i64>,
    /// Write the CSV here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Particle number.
    #[arg(long)]
    n: usize,
    /// Box parameter; the Neumann box has l + 1 sites per side.
    #[arg(long)]
    l: i64,
    /// On-site interaction, overriding the config value.
    #[arg(long, allow_negative_numbers = true)]
    u: f64,
    /// Chemical potential; defaults to the geometric midpoint of the window.
    #[arg(long, conflicts_with = "scan")]
    mu: Option<f64>,
    /// Evaluate 16 points across the window and keep the best bound.
    #[arg(long)]
    scan: bool,
    /// Also diagonalize the box exactly and report the slack.
    #[arg(long)]
    ed: bool,
    /// Nonzero cap for the exact diagonalization.
    #[arg(long = "nnz-cap", default_value_t = DEFAULT_NNZ_CAP)]
    nnz_cap: u64,
    /// Quadrature resolution per axis.
    #[arg(long, default_value_t = 128)]
    nq: usize,
    /// Write the JSON here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Boundary {
    Periodic,
    Neumann,
}

impl Boundary {
    fn to_kind(self) -> LaplacianKind {
        match self {
            Boundary::Periodic => LaplacianKind::Periodic,
            Boundary::Neumann => LaplacianKind::Neumann,
        }
    }
}

#[derive(Args)]
struct EdArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Particle number.
    #[arg(long)]
    n: usize,
    /// Box parameter.
    #[arg(long)]
    l: i64,
    /// On-site interaction, overriding the config value.
    #[arg(long, allow_negative_numbers = true)]
    u: f64,
    /// Boundary condition of the kinetic term.
    #[arg(long, value_enum)]
    bc: Boundary,
    /// Run a comma-separated list of box parameters instead of --l.
    #[arg(long = "sweep-l", value_delimiter = ',', value_name = "A,B,C")]
    sweep_l: Option<Vec<i64>>,
    /// Cap on the number of stored Hamiltonian nonzeros.
    #[arg(long = "nnz-cap", default_value_t = DEFAULT_NNZ_CAP)]
    nnz_cap: u64,
    /// Write the CSV here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepAllArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Directory receiving all artifacts.
    #[arg(long = "out-dir", value_name = "DIR", default_value = "sweep")]
    out_dir: PathBuf,
    /// Quadrature resolution per axis; the desk default favors speed.
    #[arg(long, default_value_t = 64)]
    nq: usize,
    /// Interaction used by the certificate leg.
    #[arg(long = "certify-u", default_value_t = 0.1, allow_negative_numbers = true)]
    certify_u: f64,
}

/// What went wrong, with the exit code the process contract assigns.
pub struct CliError {
    validation: bool,
    message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> CliError {
        CliError {
            validation: true,
            message: message.into(),
        }
    }

    fn compute(message: impl Into<String>) -> CliError {
        CliError {
            validation: false,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        if self.validation {
            2
        } else {
            1
        }
    }

    /// One-line machine-readable error document.
    pub fn to_json(&self) -> String {
        json!({
            "error": if self.validation { "ValidationError" } else { "ComputeError" },
            "message": self.message,
        })
        .to_string()
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> CliError {
        let validation = matches!(
            err,
            CoreError::SingularBasis { .. }
                | CoreError::MissingPrimitiveHopping { .. }
                | CoreError::NonPositiveWeight { .. }
                | CoreError::DirectionNotPositive { .. }
                | CoreError::DuplicateDirection { .. }
                | CoreError::NegativeInteraction { .. }
                | CoreError::OddLatticeSize { .. }
                | CoreError::GridTooCoarse { .. }
                | CoreError::BadConfig(_)
                | CoreError::DimensionCap { .. }
                | CoreError::EmptyWindow { .. }
                | CoreError::InvalidMu { .. }
                | CoreError::NegativeCondensate { .. }
        );
        CliError {
            validation,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> CliError {
        CliError::compute(format!("i/o failure: {err}"))
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Scattering(args) => run_scattering(args),
        Command::UpperBound(args) => run_upper_bound(args),
        Command::Spectra(args) => run_spectra(args),
        Command::Certify(args) => run_certify(args),
        Command::Ed(args) => run_ed(args),
        Command::SweepAll(args) => run_sweep_all(args),
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|err| CliError::validation(format!("worker pool: {err}")))?;
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<LatticeModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|err| {
        CliError::validation(format!("cannot read config {}: {err}", path.display()))
    })?;
    let config = LatticeConfig::from_json(&text)?;
    Ok(build_lattice(&config)?)
}

fn override_interaction(model: &mut LatticeModel, u: f64) -> Result<(), CliError> {
    if !u.is_finite() || u < 0.0 {
        return Err(CliError::validation(format!(
            "interaction override u = {u} must be finite and nonnegative"
        )));
    }
    model.u = u;
    Ok(())
}

fn quad_params(nq: usize) -> QuadratureParams {
    QuadratureParams {
        n_q: nq,
        ..QuadratureParams::default()
    }
}

fn scattering_payload(scat: &ScatteringData) -> Map<String, Value> {
    let mut payload = Map::new();
    payload.insert("gamma".into(), scat.gamma.into());
    payload.insert("a".into(), scat.scattering_length.into());
    payload.insert("phi0".into(), scat.phi0.into());
    payload.insert("w0".into(), scat.w0.into());
    payload.insert("rel_error_estimate".into(), scat.gamma_rel_error.into());
    payload
}

fn run_scattering(args: ScatteringArgs) -> Result<(), CliError> {
    init_threads(args.common.threads)?;
    let model = load_model(&args.common.config)?;
    let mut manifest = Manifest::new("scattering", &args.common.config);
    manifest.param("nq", args.nq);
    let scat = scattering_data(&model, &quad_params(args.nq))?;

    let target = Target::from_flag(args.out.as_deref());
    manifest.output(&target);
    let mut payload = scattering_payload(&scat);
    payload.insert("manifest".into(), manifest.to_value());
    target.write(&json_text(&Value::Object(payload)))?;
    Ok(())
}

fn run_upper_bound(args: UpperBoundArgs) -> Result<(), CliError> {
    init_threads(args.common.threads)?;
    let model = load_model(&args.common.config)?;
    let mut manifest = Manifest::new("upper-bound", &args.common.config);
    manifest.param("rho_min", args.rho_min);
    manifest.param("rho_max", args.rho_max);
    manifest.param("points", args.points);
    manifest.param("nq", args.nq);
    if let Some(l) = args.finite_l {
        manifest.param("finite_L", l);
    }

    let params = quad_params(args.nq);
    let scat = scattering_data(&model, &params)?;
    let rhos = log_grid(args.rho_min, args.rho_max, args.points)?;
    let sweep = upper_bound_sweep(&model, &scat, &rhos, &params)?;

    let finite = match args.finite_l {
        Some(l) => {
            let mut rows = Vec::with_capacity(rhos.len());
            for &rho in &rhos {
                let config = TrialStateConfig::solve(&model, &scat, rho, l)?;
                rows.push(trial_energy_finite(&model, &config, &scat)?);
            }
            Some(rows)
        }
        None => None,
    };

    let csv_target = Target::from_flag(args.out.as_deref());
    let json_target = csv_target.sibling("json");
    manifest.output(&csv_target);
    if args.out.is_some() {
        manifest.output(&json_target);
    }

    let mut body = String::new();
    if finite.is_some() {
        body.push_str("rho,e_psi,ratio,leading_term,finite_e_psi,finite_quadratic_terms\n");
    } else {
        body.push_str("rho,e_psi,ratio,leading_term\n");
    }
    for (i, point) in sweep.points.iter().enumerate() {
        body.push_str(&format!(
            "{},{},{},{}",
            cell(point.rho),
            cell(point.e_psi),
            cell(point.ratio),
            cell(point.leading_term)
        ));
        if let Some(rows) = &finite {
            body.push_str(&format!(
                ",{},{}",
                cell(rows[i].energy_density),
                cell(rows[i].quadratic_terms)
            ));
        }
        body.push('\n');
    }

    let summary = json!({
        "fit_exponent": sweep.fit_exponent,
        "fit_prefactor": sweep.fit_prefactor,
        "manifest": manifest.to_value(),
    });
    match args.out {
        Some(_) => {
            csv_target.write(&format!("{}{}", manifest.comment_header(), body))?;
            json_target.write(&json_text(&summary))?;
        }
        None => {
            let trailer = format!("# summary: {summary}\n");
            csv_target.write(&format!("{}{}{}", manifest.comment_header(), body, trailer))?;
        }
    }
    Ok(())
}

fn spectrum_for(
    model: &LatticeModel,
    kind: SpectraKind,
    l: i64,
) -> Result<SpectrumResult, CliError> {
    match kind {
        SpectraKind::NeumannSpecial => Ok(special_neumann_eigs(model, l)?),
        other => Ok(build_laplacian(model, l, other.to_kind())?.spectrum()?),
    }
}

fn run_spectra(args: SpectraArgs) -> Result<(), CliError> {
    init_threads(args.common.threads)?;
    let model = load_model(&args.common.config)?;
    let mut manifest = Manifest::new("spectra", &args.common.config);
    manifest.param("kind", args.kind.to_kind().label());
    manifest.param(
        "l_list",
        Value::Array(args.l_list.iter().map(|&l| l.into()).collect()),
    );

    let mut body = String::from("l,kind,gap,trace_inv,min_nonzero\n");
    for &l in &args.l_list {
        let spectrum = spectrum_for(&model, args.kind, l)?;
        let volume = spectrum.eigenvalues.len() as f64;
        let recips: Vec<f64> = spectrum.eigenvalues[1..].iter().map(|&e| 1.0 / e).collect();
        let trace_inv = pairwise_sum(&recips) / volume;
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            l,
            spectrum.kind.label(),
            cell(spectrum.gap),
            cell(trace_inv),
            cell(spectrum.eigenvalues[1])
        ));
    }

    let target = Target::from_flag(args.out.as_deref());
    manifest.output(&target);
    target.write(&format!("{}{}", manifest.comment_header(), body))?;
    Ok(())
}

/// Chemical potentials for the scan: 16 points spread across the open
/// window, geometrically when the lower endpoint is positive.
fn scan_points(window: &MuWindow) -> Vec<f64> {
    let count = 16;
    (1..=count)
        .map(|i| {
            let fraction = i as f64 / (count + 1) as f64;
            if window.mu_min > 0.0 {
                (window.mu_min.ln() + fraction * (window.mu_max / window.mu_min).ln()).exp()
            } else {
                window.mu_min + fraction * (window.mu_max - window.mu_min)
            }
        })
        .collect()
}

fn run_certify(args: CertifyArgs) -> Result<(), CliError> {
    init_threads(args.common.threads)?;
    let mut model = load_model(&args.common.config)?;
    override_interaction(&mut model, args.u)?;
    let mut manifest = Manifest::new("certify", &args.common.config);
    manifest.param("n", args.n as u64);
    manifest.param("l", args.l);
    manifest.param("u", args.u);
    manifest.param("seed", args.common.seed);
    manifest.param("nq", args.nq);
    manifest.param("scan", args.scan);

    let params = quad_params(args.nq);
    let scat = scattering_data(&model, &params)?;
    let window = mu_window(&model, args.n, args.l, &scat)?;
    let spectrum = build_laplacian(&model, args.l, LaplacianKind::Neumann)?.spectrum()?;

    let mus = if args.scan {
        scan_points(&window)
    } else {
        vec![args.mu.unwrap_or_else(|| default_mu(&window))]
    };
    let mut best: Option<(f64, bosegas::lower_bound::CertificateResult)> = None;
    for &mu in &mus {
        let input = CertificateInput {
            n: args.n,
            l: args.l,
            mu,
        };
        let result = certificate(&model, &input, &spectrum, &scat)?;
        if best
            .as_ref()
            .map_or(true, |(_, kept)| result.lb_energy > kept.lb_energy)
        {
            best = Some((mu, result));
        }
    }
    let (mu_used, result) = best.expect("at least one chemical potential");

    let mut payload = Map::new();
    payload.insert(
        "mu_window".into(),
        json!([result.window.0, result.window.1]),
    );
    payload.insert("mu_used".into(), mu_used.into());
    payload.insert("S".into(), result.bogoliubov_sum.into());
    payload.insert("lb_energy".into(), result.lb_energy.into());
    if args.ed {
        let ed_params = EdParams {
            nnz_cap: args.nnz_cap,
            seed: args.common.seed,
            ..EdParams::default()
        };
        let h = build_hamiltonian(&model, args.l, args.n, LaplacianKind::Neumann, &ed_params)?;
        let ed = ground_state_energy(&h, &ed_params)?;
        payload.insert("ed_energy".into(), ed.e0.into());
        payload.insert("slack".into(), (ed.e0 - result.lb_energy).into());
    }

    let target = Target::from_flag(args.out.as_deref());
    manifest.output(&target);
    payload.insert("manifest".into(), manifest.to_value());
    target.write(&json_text(&Value::Object(payload)))?;
    Ok(())
}

fn run_ed(args: EdArgs) -> Result<(), CliError> {
    init_threads(args.common.threads)?;
    let mut model = load_model(&args.common.config)?;
    override_interaction(&mut model, args.u)?;
    let mut manifest = Manifest::new("ed", &args.common.config);
    let ls = args.sweep_l.clone().unwrap_or_else(|| vec![args.l]);
    manifest.param("n", args.n as u64);
    manifest.param(
        "l_list",
        Value::Array(ls.iter().map(|&l| l.into()).collect()),
    );
    manifest.param("u", args.u);
    manifest.param("bc", args.bc.to_kind().label());
    manifest.param("seed", args.common.seed);
    manifest.param("nnz_cap", args.nnz_cap);

    let params = EdParams {
        nnz_cap: args.nnz_cap,
        seed: args.common.seed,
        ..EdParams::default()
    };
    let mut body = String::from("n,l,u,bc,dim,e0,residual\n");
    for &l in &ls {
        let h = build_hamiltonian(&model, l, args.n, args.bc.to_kind(), &params)?;
        let result = ground_state_energy(&h, &params)?;
        body.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            args.n,
            l,
            cell(args.u),
            result.kind.label(),
            result.basis_dim,
            cell(result.e0),
            cell(result.residual)
        ));
    }

    let target = Target::from_flag(args.out.as_deref());
    manifest.output(&target);
    target.write(&format!("{}{}", manifest.comment_header(), body))?;
    Ok(())
}

fn run_sweep_all(args: SweepAllArgs) -> Result<(), CliError> {
    init_threads(args.common.threads)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let config = args.common.config.clone();
    let dir = |name: &str| Some(args.out_dir.join(name));
    let seed = args.common.seed;

    run_scattering(ScatteringArgs {
        common: CommonArgs {
            config: config.clone(),
            threads: None,
            seed,
        },
        nq: args.nq,
        out: dir("scattering.json"),
    })?;
    run_spectra(SpectraArgs {
        common: CommonArgs {
            config: config.clone(),
            threads: None,
            seed,
        },
        kind: SpectraKind::Neumann,
        l_list: vec![2, 4, 6],
        out: dir("spectra.csv"),
    })?;
    run_upper_bound(UpperBoundArgs {
        common: CommonArgs {
            config: config.clone(),
            threads: None,
            seed,
        },
        rho_min: 1e-6,
        rho_max: 1e-3,
        points: 13,
        finite_l: None,
        nq: args.nq,
        out: dir("upper_bound.csv"),
    })?;
    run_ed(EdArgs {
        common: CommonArgs {
            config: config.clone(),
            threads: None,
            seed,
        },
        n: 2,
        l: 2,
        u: args.certify_u,
        bc: Boundary::Neumann,
        sweep_l: Some(vec![2, 4]),
        nnz_cap: DEFAULT_NNZ_CAP,
        out: dir("ed.csv"),
    })?;
    run_certify(CertifyArgs {
        common: CommonArgs {
            config: config.clone(),
            threads: None,
            seed,
        },
        n: 2,
        l: 4,
        u: args.certify_u,
        mu: None,
        scan: false,
        ed: true,
        nnz_cap: DEFAULT_NNZ_CAP,
        nq: args.nq,
        out: dir("certify.json"),
    })?;

    let mut manifest = Manifest::new("sweep-all", &config);
    manifest.param("nq", args.nq);
    manifest.param("certify_u", args.certify_u);
    manifest.param("seed", seed);
    let outputs = [
        "scattering.json",
        "spectra.csv",
        "upper_bound.csv",
        "upper_bound.json",
        "ed.csv",
        "certify.json",
    ];
    for name in outputs {
        manifest.output(&Target::File(args.out_dir.join(name)));
    }
    let target = Target::File(args.out_dir.join("manifest.json"));
    target.write(&json_text(&manifest.to_value()))?;
    Ok(())
}
