//! `bloch`: band sweeps, convergence studies and validation from a TOML config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bloch_core::config::{Config, ConfigError};
use bloch_core::lattice::build_index_set;
use bloch_core::output::{write_gnuplot, write_points_file, Manifest};
use bloch_core::path::{resolve_tau, PathError, TauPolicy};
use bloch_core::quadratic::{QuadraticSolver, SolverError};
use bloch_core::standard::{StandardError, StandardSolver};
use bloch_core::sweep::{convergence_study, sweep_quadratic, sweep_standard, SweepError};
use bloch_core::validation::run_validation;
use clap::{Parser, Subcommand};
use log::info;
use serde_json::json;

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_ADMISSIBILITY: u8 = 4;

#[derive(Parser)]
#[command(name = "bloch", version, about = "Bloch variety of 3D periodic media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML configuration file.
    #[arg(short, long)]
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fixed-k sweep of the lowest bands along Γ-X-M-R.
    BandsStandard(Common),
    /// Fixed-ω sweep solving for the wave vector on each configured segment.
    BandsQuadratic(Common),
    /// Relative wave-vector error against a reference point over basis orders.
    Converge(Common),
    /// Admissibility of the chosen τ for every segment and frequency.
    Admissible(Common),
    /// Oracle checks; prints a table and writes a JSON verdict.
    Validate(Common),
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::new(EXIT_CONFIG, e.to_string())
    }
}

fn is_admissibility(e: &SweepError) -> bool {
    matches!(
        e,
        SweepError::Path(PathError::NoAdmissibleTau(_)) | SweepError::Solver(SolverError::Inadmissible(_))
    )
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        let code = match &e {
            _ if is_admissibility(&e) => EXIT_ADMISSIBILITY,
            SweepError::Standard(StandardError::NotFrequencyIndependent) => EXIT_CONFIG,
            _ => EXIT_SOLVER,
        };
        Failure::new(code, e.to_string())
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_SOLVER, format!("{}: {e}", path.display()))
}

struct Run {
    cfg: Config,
    dir: PathBuf,
}

impl Run {
    fn load(common: &Common) -> Result<Self, Failure> {
        let cfg = Config::load(&common.config)?;
        let dir = common.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
        Ok(Self { cfg, dir })
    }

    fn manifest(&self, command: &str) -> Manifest {
        let mut m = Manifest::new(command, serde_json::to_value(&self.cfg).unwrap_or_default(), self.cfg.solver.seed);
        let s = &self.cfg.solver;
        m.thresholds = json!({
            "im_tol": s.im_tol,
            "diag_tol": s.diag_tol,
            "residual_tol": s.residual_tol,
            "mu_cutoff": s.mu_cutoff,
            "arnoldi_tol": s.arnoldi_tol,
            "path_margin": self.cfg.path.margin,
        });
        m
    }

    fn finish(&self, mut manifest: Manifest, outputs: &[&str]) -> Result<(), Failure> {
        manifest.outputs = outputs.iter().map(|s| s.to_string()).collect();
        let path = self.dir.join(format!("{}.manifest.json", manifest.command));
        manifest.write(&path).map_err(|e| io_failure(&path, e))?;
        for o in outputs {
            println!("wrote {}", self.dir.join(o).display());
        }
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn bands_standard(common: &Common) -> Result<(), Failure> {
    let run = Run::load(common)?;
    let model = run.cfg.model();
    let basis = build_index_set(run.cfg.basis.order);
    let solver = StandardSolver::new(&model, &basis, run.cfg.basis.grid).map_err(SweepError::from)?;
    let points = sweep_standard(&solver, &run.cfg.path_spec(), run.cfg.path.nbands)?;
    info!("{} standard points", points.len());
    let csv = run.dir.join("bands_standard.csv");
    write_points_file(&csv, &points).map_err(|e| io_failure(&csv, e))?;
    let gp = run.dir.join("bands_standard.gp");
    write_gnuplot(&gp, "bands_standard.csv", &model.label()).map_err(|e| io_failure(&gp, e))?;
    run.finish(run.manifest("bands-standard"), &["bands_standard.csv", "bands_standard.gp"])
}

fn bands_quadratic(common: &Common) -> Result<(), Failure> {
    let run = Run::load(common)?;
    let model = run.cfg.model();
    let basis = build_index_set(run.cfg.basis.order);
    let solver = QuadraticSolver::new(&model, &basis, run.cfg.quadratic_options()).map_err(SweepError::from)?;
    let path = run.cfg.path_spec();
    let omegas = run.cfg.omega.grid();
    let opts = run.cfg.sweep_options();
    let mut manifest = run.manifest("bands-quadratic");
    let mut points = Vec::new();
    let mut taus = Vec::new();
    let mut solved = 0;
    let mut inadmissible = 0;
    for &s in &run.cfg.path.segments {
        let seg = path.segment(s).map_err(SweepError::from)?;
        info!("segment {}: {} frequencies", seg.name, omegas.len());
        let sweep = sweep_quadratic(&solver, seg, &omegas, &opts);
        solved += sweep.taus.len();
        for f in &sweep.failures {
            if f.message.contains("no admissible tau") {
                inadmissible += 1;
            }
            manifest.failures.push(json!({
                "segment": seg.name,
                "omega": f.omega,
                "message": f.message,
            }));
        }
        taus.push(json!({ "segment": seg.name, "omega_tau": sweep.taus }));
        manifest.warnings.extend(sweep.warnings);
        points.extend(sweep.points);
    }
    manifest.extra = json!({ "taus": taus, "points": points.len() });
    let csv = run.dir.join("bands_quadratic.csv");
    write_points_file(&csv, &points).map_err(|e| io_failure(&csv, e))?;
    let gp = run.dir.join("bands_quadratic.gp");
    write_gnuplot(&gp, "bands_quadratic.csv", &model.label()).map_err(|e| io_failure(&gp, e))?;
    let failures = manifest.failures.len();
    run.finish(manifest, &["bands_quadratic.csv", "bands_quadratic.gp"])?;
    if inadmissible > 0 {
        return Err(Failure::new(
            EXIT_ADMISSIBILITY,
            format!("{inadmissible} frequencies had no admissible tau"),
        ));
    }
    if solved == 0 && failures > 0 {
        return Err(Failure::new(EXIT_SOLVER, "every frequency failed"));
    }
    Ok(())
}

fn converge(common: &Common) -> Result<(), Failure> {
    let run = Run::load(common)?;
    let c = &run.cfg.converge;
    let model = run.cfg.model();
    let path = run.cfg.path_spec();
    let seg = path.segment(c.segment).map_err(SweepError::from)?;
    let omega = 2.0 * std::f64::consts::PI * c.omega_ref_over_2pi;
    let rows = convergence_study(
        &model,
        seg,
        &c.k_ref,
        omega,
        &c.orders,
        &run.cfg.quadratic_options(),
        &run.cfg.tau_policy(),
    )?;
    let mut text = String::from("order,dofs,kx,ky,kz,rel_error\n");
    println!("{:>5} {:>7} {:>22} {:>12}", "order", "dofs", "kx", "rel_error");
    for r in &rows {
        let _ = writeln!(
            text,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.order, r.dofs, r.k[0], r.k[1], r.k[2], r.rel_error
        );
        println!("{:>5} {:>7} {:>22.15} {:>12.4e}", r.order, r.dofs, r.k[0], r.rel_error);
    }
    let csv = run.dir.join("converge.csv");
    fs::write(&csv, text).map_err(|e| io_failure(&csv, e))?;
    let mut manifest = run.manifest("converge");
    manifest.extra = json!({ "rows": rows });
    run.finish(manifest, &["converge.csv"])
}

fn admissible(common: &Common) -> Result<(), Failure> {
    let run = Run::load(common)?;
    let model = run.cfg.model();
    let path = run.cfg.path_spec();
    let policy = run.cfg.tau_policy();
    let omegas = run.cfg.omega.grid();
    let mut text = String::from("segment,omega_over_2pi,tau,admissible,margin,case\n");
    let mut rejected = 0;
    println!("{:<8} {:>10} {:>10} {:>5} {:>12}", "segment", "omega/2pi", "tau", "ok", "margin");
    for &s in &run.cfg.path.segments {
        let seg = path.segment(s).map_err(SweepError::from)?;
        for &w in &omegas {
            let nu = w / (2.0 * std::f64::consts::PI);
            let tau = match resolve_tau(&policy, seg, w, &model) {
                Ok((tau, _)) => Some(tau),
                Err(PathError::NoAdmissibleTau(_)) if policy == TauPolicy::Strict => None,
                Err(e) => return Err(SweepError::from(e).into()),
            };
            let report = tau
                .map(|t| seg.split(t).map(|sp| bloch_core::admissibility::check_admissibility(&sp, w, &model)))
                .transpose()
                .map_err(|e| SweepError::from(PathError::from(e)))?;
            let ok = report.as_ref().is_some_and(|r| r.ok);
            if !ok {
                rejected += 1;
            }
            let tau_s = tau.map(|t| format!("{t:.16e}")).unwrap_or_else(|| "-".into());
            let margin = report.as_ref().map(|r| r.margin).unwrap_or(f64::NAN);
            let case = report.as_ref().map(|r| r.case_label.label()).unwrap_or("-");
            let tau_short = tau.map(|t| format!("{t:.6}")).unwrap_or_else(|| "-".into());
            println!("{:<8} {nu:>10.5} {tau_short:>10} {ok:>5} {margin:>12.4e}", seg.name);
            let _ = writeln!(text, "{},{nu:.16e},{tau_s},{ok},{margin:.16e},{case}", seg.name);
        }
    }
    let csv = run.dir.join("admissible.csv");
    fs::write(&csv, text).map_err(|e| io_failure(&csv, e))?;
    let mut manifest = run.manifest("admissible");
    manifest.extra = json!({ "rejected": rejected });
    run.finish(manifest, &["admissible.csv"])?;
    if rejected > 0 {
        return Err(Failure::new(
            EXIT_ADMISSIBILITY,
            format!("{rejected} (segment, omega) pairs are not admissible"),
        ));
    }
    Ok(())
}

fn validate(common: &Common) -> Result<(), Failure> {
    let run = Run::load(common)?;
    let verdict = run_validation(&run.cfg.model(), run.cfg.basis.order, &run.cfg.quadratic_options());
    println!("{:<56} {:>6} {:>10} {:>10}  detail", "check", "result", "value", "tol");
    for c in &verdict.checks {
        let fmt = |x: Option<f64>| x.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<56} {:>6} {:>10} {:>10}  {}",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            fmt(c.value),
            fmt(c.tolerance),
            c.detail
        );
    }
    let path = run.dir.join("validate.json");
    let text = serde_json::to_string_pretty(&verdict).map_err(|e| io_failure(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| io_failure(&path, e))?;
    let mut manifest = run.manifest("validate");
    manifest.extra = json!({ "passed": verdict.passed });
    run.finish(manifest, &["validate.json"])?;
    if !verdict.passed {
        return Err(Failure::new(EXIT_SOLVER, "validation failed"));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::BandsStandard(c) => bands_standard(c),
        Command::BandsQuadratic(c) => bands_quadratic(c),
        Command::Converge(c) => converge(c),
        Command::Admissible(c) => admissible(c),
        Command::Validate(c) => validate(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
