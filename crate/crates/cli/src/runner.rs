//! Command implementations: solve, write artifacts, audit, compare.
//!
//! Output contract: `front.csv` and `audit.json` are byte-identical across
//! repeated runs of the same configuration and seed. The iteration log
//! carries wall-clock timings and is exempt.

use crate::config::{parse_config_file, ConfigError, RunConfig, RunMode};
use fracstefan::{
    audit_barrier_constants, audit_barrier_positivity, audit_extremum_principle,
    audit_flux_and_bounds, audit_front_flux_sign, audit_mass_balance,
    audit_monotone_dependence, solve_given_front, solve_stefan_marching, solve_stefan_picard,
    AuditCheck, AuditReport, Field, FrontPath, IterationRecord, ProblemSpec, Trajectory,
};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Solver(fracstefan::Error),
    Io(std::io::Error),
}

impl CliError {
    /// 3 for configuration problems, 2 for solver and environment failures.
    /// Audit failures are not errors; commands report them as exit 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Solver(_) | CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Solver(e) => write!(f, "solver failure: {e}"),
            CliError::Io(e) => write!(f, "io failure: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<fracstefan::Error> for CliError {
    fn from(e: fracstefan::Error) -> Self {
        CliError::Solver(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CommandOptions<'a> {
    pub config_path: &'a Path,
    pub out_dir: &'a Path,
    pub seed: u64,
    pub strict_audits: bool,
}

#[derive(Debug)]
pub struct RunSummary {
    pub audits_passed: bool,
    pub warnings: Vec<String>,
    pub final_front: f64,
    pub out_dir: PathBuf,
}

#[derive(Debug)]
pub struct AuditSummary {
    pub passed: bool,
    pub warnings: Vec<String>,
    pub table: String,
}

#[derive(Debug, Clone)]
pub struct StudyRow {
    pub observable: String,
    pub values: [f64; 3],
    pub observed_order: f64,
}

#[derive(Debug)]
pub struct StudySummary {
    pub rows: Vec<StudyRow>,
}

#[derive(Debug)]
pub struct LimitSummary {
    pub fractional_final: f64,
    pub classical_final: f64,
    pub relative_gap: f64,
}

fn solve_configured(
    cfg: &RunConfig,
    spec: &ProblemSpec,
) -> Result<(Trajectory, Option<Vec<IterationRecord>>), fracstefan::Error> {
    match cfg.mode {
        RunMode::StefanMarching => Ok((solve_stefan_marching(spec)?, None)),
        RunMode::StefanPicard => {
            let sol = solve_stefan_picard(spec, &cfg.fixed_point_config())?;
            Ok((sol.trajectory, Some(sol.log)))
        }
    }
}

fn write_front_csv(
    path: &Path,
    traj: &Trajectory,
    config_hash: &str,
    seed: u64,
) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "# config_sha256 = {config_hash}")?;
    writeln!(f, "# seed = {seed}")?;
    writeln!(f, "t,s,s_dot,flux")?;
    let front = traj.front();
    for k in 0..traj.n_times() {
        writeln!(
            f,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            front.time(k),
            front.position(k),
            front.speed(k),
            traj.front_flux(k)
        )?;
    }
    Ok(())
}

fn write_snapshots(dir: &Path, traj: &Trajectory, config_hash: &str) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for k in 0..traj.n_times() {
        let snap = traj.physical_snapshot(k);
        let mut f = fs::File::create(dir.join(format!("level_{k:04}.csv")))?;
        writeln!(f, "# config_sha256 = {config_hash}")?;
        writeln!(f, "x,u")?;
        for i in 0..snap.len() {
            writeln!(f, "{:.16e},{:.16e}", snap.grid().node(i), snap.value(i))?;
        }
    }
    Ok(())
}

fn write_iteration_log(path: &Path, log: &[IterationRecord]) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    for record in log {
        writeln!(f, "{}", serde_json::to_string(record).expect("record serializes"))?;
    }
    Ok(())
}

fn trajectory_checks(traj: &Trajectory, spec: &ProblemSpec, tol_factor: f64) -> Vec<AuditCheck> {
    let tol = spec.audit_tolerance(tol_factor);
    vec![
        audit_extremum_principle(traj, tol),
        audit_flux_and_bounds(traj, spec, tol),
        audit_mass_balance(traj, tol_factor),
    ]
}

/// Comparison partner for the monotone-dependence audit: same setup with
/// the data uniformly shrunk, which preserves admissibility and sits below
/// the original pointwise.
fn shrunken_partner(spec: &ProblemSpec) -> fracstefan::Result<ProblemSpec> {
    let values: Vec<f64> = (0..spec.u0.len()).map(|i| 0.8 * spec.u0.value(i)).collect();
    let u0 = Field::new(
        spec.u0.grid().clone(),
        values,
        fracstefan::BcLeft::NeumannZero,
        fracstefan::BcRight::DirichletZero,
    )?;
    ProblemSpec::new(
        spec.alpha,
        spec.b,
        spec.t_final,
        spec.m_bound,
        u0,
        spec.n_steps,
    )
}

fn gather_warnings(traj: &Trajectory, log: Option<&[IterationRecord]>) -> Vec<String> {
    let mut warnings = Vec::new();
    if traj.trivial() {
        warnings.push("trivial data: field identically zero, front never moves".to_string());
    }
    if traj.front().is_degenerate() {
        warnings.push("front path stalls at the positivity floor somewhere".to_string());
    }
    if let Some(log) = log {
        let clamped: usize = log.iter().map(|r| r.clamp_count).sum();
        if clamped > 0 {
            warnings.push(format!(
                "speed clamping occurred in {clamped} node(s) across the iteration"
            ));
        }
    }
    warnings
}

fn write_audit_json(
    path: &Path,
    report: &AuditReport,
    warnings: &[String],
) -> Result<(), CliError> {
    let mut value = serde_json::to_value(report).expect("report serializes");
    value
        .as_object_mut()
        .expect("report is an object")
        .insert("warnings".to_string(), serde_json::json!(warnings));
    fs::write(path, serde_json::to_string_pretty(&value).expect("json renders"))?;
    Ok(())
}

/// `run`: solve the configured problem, write the artifact set, audit the
/// trajectory.
pub fn execute_run(opts: &CommandOptions) -> Result<RunSummary, CliError> {
    let cfg = parse_config_file(opts.config_path)?;
    let spec = cfg.build_spec()?;
    let (traj, log) = solve_configured(&cfg, &spec)?;

    fs::create_dir_all(opts.out_dir)?;
    let hash = cfg.sha256_hex();
    write_front_csv(&opts.out_dir.join("front.csv"), &traj, &hash, opts.seed)?;
    write_snapshots(&opts.out_dir.join("snapshots"), &traj, &hash)?;
    if let Some(log) = &log {
        write_iteration_log(&opts.out_dir.join("iteration.log"), log)?;
    }

    let report = AuditReport {
        checks: trajectory_checks(&traj, &spec, cfg.tol_factor),
    };
    let warnings = gather_warnings(&traj, log.as_deref());
    write_audit_json(&opts.out_dir.join("audit.json"), &report, &warnings)?;

    let audits_passed = report.passed() && (!opts.strict_audits || warnings.is_empty());
    Ok(RunSummary {
        audits_passed,
        warnings,
        final_front: traj.front().final_position(),
        out_dir: opts.out_dir.to_path_buf(),
    })
}

/// `audit`: run the complete audit suite for the configuration, one check
/// per auditor, and write the combined report.
pub fn execute_audit(opts: &CommandOptions) -> Result<AuditSummary, CliError> {
    let cfg = parse_config_file(opts.config_path)?;
    let spec = cfg.build_spec()?;
    let (traj, log) = solve_configured(&cfg, &spec)?;

    let mut checks = vec![
        audit_barrier_constants(opts.seed),
        audit_barrier_positivity(2001),
    ];
    checks.extend(trajectory_checks(&traj, &spec, cfg.tol_factor));
    let partner = shrunken_partner(&spec)?;
    checks.push(audit_monotone_dependence(&partner, &spec, cfg.tol_factor)?);
    checks.push(audit_front_flux_sign(opts.seed));

    let report = AuditReport { checks };
    let warnings = gather_warnings(&traj, log.as_deref());
    fs::create_dir_all(opts.out_dir)?;
    write_audit_json(&opts.out_dir.join("audit.json"), &report, &warnings)?;

    let passed = report.passed() && (!opts.strict_audits || warnings.is_empty());
    Ok(AuditSummary {
        passed,
        warnings,
        table: report.render_table(),
    })
}

const STUDY_LADDER: [(usize, usize); 3] = [(65, 64), (129, 128), (257, 256)];

/// Difference-ratio order estimate from three ladder values: compares
/// consecutive-level gaps, which stays honest when the exact limit is
/// unknown.
fn richardson_order(values: &[f64; 3]) -> f64 {
    let d1 = (values[0] - values[1]).abs();
    let d2 = (values[1] - values[2]).abs();
    (d1 / d2).log2()
}

/// `study`: refinement ladder for a fixed-front solve (front moving at
/// half budget) and the free-boundary marcher, with difference-ratio
/// convergence orders on scalar observables.
pub fn execute_study(opts: &CommandOptions) -> Result<StudySummary, CliError> {
    let cfg = parse_config_file(opts.config_path)?;
    if !cfg.is_parametric() {
        return Err(CliError::Config(ConfigError::Invalid(vec![
            "study needs a parametric u0 family; a fixed nodal table cannot change resolution"
                .into(),
        ])));
    }

    let mut fixed_values = [0.0f64; 3];
    let mut marching_values = [0.0f64; 3];
    for (level, &(n_nodes, n_steps)) in STUDY_LADDER.iter().enumerate() {
        let spec = cfg.build_spec_at(n_nodes, n_steps)?;
        let front = FrontPath::linear(
            cfg.b,
            0.5 * cfg.m_bound,
            cfg.t_final,
            n_steps,
            cfg.m_bound,
        )?;
        let fixed = solve_given_front(&spec, &front)?;
        fixed_values[level] = fixed.snapshot(fixed.n_times() - 1).max_abs();

        let marched = solve_stefan_marching(&spec)?;
        marching_values[level] = marched.front().final_position();
    }

    let rows = vec![
        StudyRow {
            observable: "fixed_front_sup_norm".to_string(),
            values: fixed_values,
            observed_order: richardson_order(&fixed_values),
        },
        StudyRow {
            observable: "marching_front_position".to_string(),
            values: marching_values,
            observed_order: richardson_order(&marching_values),
        },
    ];

    fs::create_dir_all(opts.out_dir)?;
    let mut f = fs::File::create(opts.out_dir.join("convergence.csv"))?;
    writeln!(f, "# config_sha256 = {}", cfg.sha256_hex())?;
    writeln!(
        f,
        "observable,coarse,medium,fine,diff_coarse_medium,diff_medium_fine,observed_order"
    )?;
    for row in &rows {
        writeln!(
            f,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.6}",
            row.observable,
            row.values[0],
            row.values[1],
            row.values[2],
            (row.values[0] - row.values[1]).abs(),
            (row.values[1] - row.values[2]).abs(),
            row.observed_order
        )?;
    }

    Ok(StudySummary { rows })
}

/// `limit`: fractional run at the configured alpha against the classical
/// marcher on the identical data vector.
pub fn execute_limit(opts: &CommandOptions) -> Result<LimitSummary, CliError> {
    let cfg = parse_config_file(opts.config_path)?;
    let spec = cfg.build_spec()?;
    let fractional = solve_stefan_marching(&spec)?;

    let u0: Vec<f64> = (0..spec.u0.len()).map(|i| spec.u0.value(i)).collect();
    let classical = crate::classical::solve_classical_marching(
        &u0,
        cfg.b,
        cfg.t_final,
        cfg.m_bound,
        cfg.n_steps,
    )
    .map_err(|msg| {
        CliError::Solver(fracstefan::Error::SpecInvalid(format!(
            "classical reference failed: {msg}"
        )))
    })?;

    let f_final = fractional.front().final_position();
    let c_final = *classical.s.last().expect("classical run has levels");
    let relative_gap = (f_final - c_final).abs() / c_final.abs().max(1e-300);

    fs::create_dir_all(opts.out_dir)?;
    let payload = serde_json::json!({
        "alpha": cfg.alpha,
        "fractional_s_final": f_final,
        "classical_s_final": c_final,
        "relative_gap": relative_gap,
    });
    fs::write(
        opts.out_dir.join("limit.json"),
        serde_json::to_string_pretty(&payload).expect("json renders"),
    )?;

    Ok(LimitSummary {
        fractional_final: f_final,
        classical_final: c_final,
        relative_gap,
    })
}
