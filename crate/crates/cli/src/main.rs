//! `intflux` command line.
//!
//! Exit codes: 0 when every check passes, 1 on a quantitative failure
//! (flux violations, uncertified connection, diverging estimate), 2 on bad
//! input.

mod config;

use clap::{Parser, Subcommand};
use config::RunConfig;
use intflux::asymptotics::{hoelder_bound_check, pairing_growth, write_table_csv};
use intflux::connection::{boundary_residual, certify, dual_value, greedy_connection, optimal_connection};
use intflux::decomp::{bad_volume_sweep, decompose, SelectOptions, SweepTable};
use intflux::field::{load_field, AnyField, FieldSpec, SampledField};
use intflux::flux::{integer_flux_scan, write_scan_csv, ScanSummary};
use intflux::regularize::{approximation_error, assemble, AssembleOptions, ErrorRegion};
use intflux::{Error, QuadratureSpec, Singularity, VectorField};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "intflux", version, about = "Integer-flux vector fields on the unit ball")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Points per face edge of the flux quadrature.
    #[arg(long = "quadrature-n", global = true)]
    quadrature_n: Option<usize>,
    /// Integrality tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a field spec and write it (and optionally a sampled copy).
    Generate {
        spec: PathBuf,
        /// Also write the field sampled on an n³ grid of [−1, 1]³.
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Check that random cube fluxes are integer multiples of the flux unit.
    Fluxscan { field: PathBuf },
    /// Select a lattice translation, label cubes and sweep the bad volume.
    Decompose {
        field: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Build the regularized field and its approximation error.
    Regularize {
        field: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Minimal connection of a singularity list with its optimality certificate.
    Connect {
        singularities: PathBuf,
        /// Field whose divergence the connection should match.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Pairings with the logarithmic test functions.
    Analyze {
        field: PathBuf,
        /// Comma separated list of k.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<u32>>,
        /// Exponent of the Hölder bound.
        #[arg(long)]
        p: Option<f64>,
    },
}

enum Failure {
    Input(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_)
            | Error::Singular(_)
            | Error::OutOfRange(_)
            | Error::Io(_)
            | Error::Json(_) => Failure::Input(e.to_string()),
            Error::InCube { ref source, .. } if matches!(**source, Error::InvalidInput(_)) => {
                Failure::Input(e.to_string())
            }
            _ => Failure::Check(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_config(&cli).and_then(|cfg| run(&cli, &cfg));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("intflux: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("intflux: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(Failure::Input)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.quadrature_n {
        cfg.quadrature.n_q = n;
    }
    if let Some(t) = cli.tol {
        cfg.tol = t;
    }
    cfg.validate().map_err(Failure::Input)?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &RunConfig) -> Outcome {
    let out = cli.out.as_path();
    std::fs::create_dir_all(out)?;
    match &cli.command {
        Command::Generate { spec, sample } => cmd_generate(spec, *sample, out),
        Command::Fluxscan { field } => cmd_fluxscan(field, cfg, out),
        Command::Decompose { field, eps } => cmd_decompose(field, eps.unwrap_or(cfg.decompose.eps), cfg, out),
        Command::Regularize { field, eps } => cmd_regularize(field, eps.unwrap_or(cfg.decompose.eps), cfg, out),
        Command::Connect { singularities, field } => cmd_connect(singularities, field.as_deref(), cfg, out),
        Command::Analyze { field, k, p } => {
            let k_list = k.clone().unwrap_or_else(|| cfg.analyze.k_list.clone());
            cmd_analyze(field, &k_list, p.or(cfg.analyze.p), cfg, out)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, Failure> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

fn cmd_generate(spec_path: &Path, sample: Option<usize>, out: &Path) -> Outcome {
    let text = std::fs::read_to_string(spec_path)?;
    let spec: FieldSpec =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", spec_path.display())))?;
    let base = spec_path.parent().unwrap_or(Path::new("."));
    let field = spec.build(base)?;
    match &field {
        // rewrite the blob next to the header so the copy resolves
        AnyField::Sampled(s) => s.write(&out.join("field.json"))?,
        _ => write_json(&out.join("field.json"), &spec)?,
    }
    if let Some(n) = sample {
        SampledField::on_unit_box(&field, n)?.write(&out.join("field_sampled.json"))?;
    }
    println!(
        "field with {} singularities, flux unit {} -> {}",
        field.singularities().len(),
        field.flux_unit(),
        out.join("field.json").display()
    );
    Ok(true)
}

fn cmd_fluxscan(path: &Path, cfg: &RunConfig, out: &Path) -> Outcome {
    let field = load_field(path)?;
    let report = integer_flux_scan(&field, cfg.scan.centers, cfg.scan.radii, cfg.tol, &cfg.quadrature, cfg.seed)?;
    write_scan_csv(&report.rows, create(&out.join("scan.csv"))?)?;
    write_json(&out.join("scan.json"), &report.summary)?;
    let s = &report.summary;
    println!(
        "{} cubes, {} evaluated, {} skipped, {} violations (max distance {:.3e}, tol {:.1e})",
        s.cubes, s.evaluated, s.skipped, s.violations, s.max_nearest_int_dist, s.tol
    );
    Ok(s.violations == 0)
}

fn select_options(cfg: &RunConfig) -> SelectOptions {
    SelectOptions {
        int_tol: cfg.tol,
        p: cfg.decompose.p,
    }
}

fn sweep_csv(t: &SweepTable) -> String {
    let mut s = String::from("eps,n_bad,volume,a_x,a_y,a_z\n");
    for r in &t.rows {
        let a = r.translation;
        let _ = writeln!(s, "{},{},{},{},{},{}", r.eps, r.n_bad, r.volume, a.x, a.y, a.z);
    }
    s
}

fn cmd_decompose(path: &Path, eps: f64, cfg: &RunConfig, out: &Path) -> Outcome {
    let field = load_field(path)?;
    let d = &cfg.decompose;
    let opts = select_options(cfg);
    let (dec, score, report) = decompose(&field, eps, d.n_samples, &cfg.quadrature, cfg.seed, &opts, d.label_tol)?;
    let mut json = dec.to_json();
    json["seed"] = cfg.seed.into();
    json["score"] = serde_json::to_value(score)?;
    json["integrality"] = serde_json::to_value(&report)?;
    write_json(&out.join("decomposition.json"), &json)?;
    println!(
        "eps {eps}: {} cubes, {} bad, translation {:?} ({} of {} candidates integral)",
        dec.lattice.len(),
        dec.n_bad(),
        score.a.to_array(),
        report.survivors,
        d.n_samples
    );
    if d.eps_list.len() >= 3 {
        let table = bad_volume_sweep(&field, &d.eps_list, d.n_samples, &cfg.quadrature, cfg.seed, &opts, d.label_tol)?;
        std::fs::write(out.join("sweep.csv"), sweep_csv(&table))?;
        match table.slope {
            Some(s) => println!("bad volume slope {s:.3}"),
            None => println!("bad volume vanishes at some eps; no slope"),
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct RegularizeSummary {
    seed: u64,
    eps: f64,
    translation: [f64; 3],
    n_bad: usize,
    delta: f64,
    singularities: Vec<Singularity>,
    p: f64,
    error_cubes: f64,
    error_ball: f64,
    scan: ScanSummary,
}

fn cmd_regularize(path: &Path, eps: f64, cfg: &RunConfig, out: &Path) -> Outcome {
    let field = load_field(path)?;
    let d = &cfg.decompose;
    let r = &cfg.regularize;
    let (dec, score, _) = decompose(&field, eps, d.n_samples, &cfg.quadrature, cfg.seed, &select_options(cfg), d.label_tol)?;
    let opts = AssembleOptions {
        delta: r.delta,
        m: r.m,
        quad: QuadratureSpec {
            n_q: r.quadrature_n,
            rule: cfg.quadrature.rule,
        },
        mollify: r.mollify,
        int_tol: cfg.tol,
        solver_tol: r.solver_tol,
        ..AssembleOptions::default()
    };
    let reg = assemble(&field, &dec, &opts)?;
    reg.write(out)?;
    let error_cubes = approximation_error(&reg, &field, r.error_p, r.error_spacing, reg.region())?;
    let error_ball = approximation_error(&reg, &field, r.error_p, r.error_spacing, ErrorRegion::Ball)?;
    let scan = integer_flux_scan(&reg, cfg.scan.centers, cfg.scan.radii, r.scan_tol, &cfg.quadrature, cfg.seed)?;
    let summary = RegularizeSummary {
        seed: cfg.seed,
        eps,
        translation: score.a.to_array(),
        n_bad: dec.n_bad(),
        delta: reg.delta,
        singularities: reg.singularities.clone(),
        p: r.error_p,
        error_cubes,
        error_ball,
        scan: scan.summary,
    };
    write_json(&out.join("regularize.json"), &summary)?;
    println!(
        "eps {eps}: {} singularities, L^{} error {error_cubes:.4e} on the cubes, {error_ball:.4e} on the ball",
        summary.singularities.len(),
        r.error_p
    );
    let s = &summary.scan;
    println!(
        "output scan: {} of {} cubes evaluated, {} violations at tol {:.1e}",
        s.evaluated, s.cubes, s.violations, s.tol
    );
    Ok(s.violations == 0)
}

/// A bare list or an object with a `singularities` key.
#[derive(Deserialize)]
#[serde(untagged)]
enum SingularityFile {
    List(Vec<Singularity>),
    Wrapped { singularities: Vec<Singularity> },
}

#[derive(Serialize)]
struct ConnectSummary {
    seed: u64,
    certified: bool,
    mass: f64,
    dual: f64,
    gap: f64,
    greedy_mass: f64,
    max_residual: Option<f64>,
}

fn cmd_connect(path: &Path, field: Option<&Path>, cfg: &RunConfig, out: &Path) -> Outcome {
    let text = std::fs::read_to_string(path)?;
    let sings = match serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))? {
        SingularityFile::List(v) | SingularityFile::Wrapped { singularities: v } => v,
    };
    let greedy = greedy_connection(&sings)?;
    let optimal = optimal_connection(&sings)?;
    let dual = dual_value(&sings)?;
    let cert = certify(&optimal, &dual, cfg.connect.gap_tol)?;
    write_json(&out.join("current.json"), &optimal)?;
    write_json(&out.join("greedy.json"), &greedy)?;
    write_json(&out.join("dual.json"), &dual)?;
    optimal.write_polyline_csv(create(&out.join("current.csv"))?)?;
    let mut pass = cert.certified;
    let mut max_residual = None;
    if let Some(fp) = field {
        let f = load_field(fp)?;
        let rep = boundary_residual(&f, &optimal, cfg.connect.n_test, cfg.seed)?;
        write_json(&out.join("residual.json"), &rep)?;
        println!("boundary residual {:.3e} over {} bumps", rep.max_residual, rep.tests.len());
        pass &= rep.max_residual < cfg.connect.residual_tol;
        max_residual = Some(rep.max_residual);
    }
    write_json(
        &out.join("certificate.json"),
        &ConnectSummary {
            seed: cfg.seed,
            certified: cert.certified,
            mass: cert.mass,
            dual: cert.dual,
            gap: cert.gap,
            greedy_mass: greedy.mass,
            max_residual,
        },
    )?;
    println!(
        "mass {:.12} dual {:.12} gap {:.3e} greedy {:.12} certified {}",
        cert.mass, cert.dual, cert.gap, greedy.mass, cert.certified
    );
    Ok(pass)
}

fn cmd_analyze(path: &Path, k_list: &[u32], p: Option<f64>, cfg: &RunConfig, out: &Path) -> Outcome {
    if k_list.is_empty() || k_list.contains(&0) {
        return Err(Failure::Input("k list needs positive entries".into()));
    }
    let field = load_field(path)?;
    let Some(p) = p else {
        let rows = pairing_growth(&field, k_list, &cfg.quadrature)?;
        write_table_csv(&rows, create(&out.join("asymptotics.csv"))?)?;
        for r in &rows {
            println!("k {:3}  pairing {:.9e}  ratio {:.9e}", r.k, r.pairing, r.ratio);
        }
        return Ok(true);
    };
    let (est, rows) = match hoelder_bound_check(&field, p, k_list, &cfg.quadrature) {
        Ok(v) => v,
        Err(e @ Error::LpEstimateDivergence { .. }) => {
            // the pairing table is still informative
            let rows = pairing_growth(&field, k_list, &cfg.quadrature)?;
            write_table_csv(&rows, create(&out.join("asymptotics.csv"))?)?;
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    write_table_csv(&rows, create(&out.join("asymptotics.csv"))?)?;
    let mut summary = serde_json::to_value(&est)?;
    summary["seed"] = cfg.seed.into();
    write_json(&out.join("lp_estimate.json"), &summary)?;
    println!("L^{p} norm {:.6e}", est.norm);
    let mut ok = true;
    for r in &rows {
        let b = r.bound.unwrap_or(f64::INFINITY);
        ok &= r.pairing <= b * (1.0 + 1e-9);
        println!("k {:3}  |pairing| {:.6e}  bound {:.6e}  ratio {:.6e}", r.k, r.pairing, b, r.ratio);
    }
    Ok(ok)
}
