//! The four scenario commands. Each writes its artefacts into the output
//! directory and returns the sealed report with an exit status; only
//! configuration and I/O problems are returned as errors.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::report::{write_csv, write_json, ExitStatus, RunReport};
use super::{Resolved, ScenarioError};
use crate::certificate::{certify, Mode, TheoremCertificate};
use crate::manifold::{format_float, ManifoldSequence};
use crate::solver::{solve_fixed_point, SolverError};
use crate::verification::{
    contraction_probe, decay_check, decay_samples, invariance_sweep, local_grid_samples,
    local_invariance_check, local_samples, propagation_check, VerificationError,
};

pub const MANIFOLD_FILE: &str = "manifold.json";

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub report: RunReport,
    pub files: Vec<PathBuf>,
}

impl CommandOutput {
    pub fn status(&self) -> ExitStatus {
        self.report.status
    }
}

fn ensure_dir(dir: &Path) -> Result<(), ScenarioError> {
    std::fs::create_dir_all(dir).map_err(|e| ScenarioError::io(dir, e))
}

fn run_certify(r: &Resolved) -> Result<TheoremCertificate, ScenarioError> {
    certify(&r.scenario.bounds, &r.budget, &r.certify_config)
        .map_err(|e| ScenarioError::config("bounds", e.to_string()))
}

fn record_certificate(report: &mut RunReport, cert: TheoremCertificate) {
    if !cert.admissible {
        for issue in &cert.issues {
            report.fail(ExitStatus::GateFailure, issue.clone());
        }
    }
    report.certificate = Some(cert);
}

fn finish(
    mut report: RunReport,
    dir: &Path,
    name: &str,
    start: Instant,
    mut files: Vec<PathBuf>,
) -> Result<CommandOutput, ScenarioError> {
    report
        .timings
        .insert("total".into(), start.elapsed().as_secs_f64());
    report.seal();
    let path = dir.join(name);
    write_json(&path, &report)?;
    files.push(path);
    Ok(CommandOutput { report, files })
}

/// α, β, gap, gates and, in local mode, `s_n`.
pub fn cmd_certify(r: &Resolved) -> Result<CommandOutput, ScenarioError> {
    let start = Instant::now();
    ensure_dir(&r.out_dir)?;
    let mut report = RunReport::new("certify", &r.scenario, &r.fingerprint, r.mode);
    let cert = run_certify(r)?;
    report
        .timings
        .insert("certify".into(), start.elapsed().as_secs_f64());
    let cert_path = r.out_dir.join("certificate.json");
    write_json(&cert_path, &cert)?;
    record_certificate(&mut report, cert);
    finish(
        report,
        &r.out_dir,
        "certify_report.json",
        start,
        vec![cert_path],
    )
}

/// Certifies, then runs the Picard iteration and writes the manifold.
pub fn cmd_solve(r: &Resolved) -> Result<CommandOutput, ScenarioError> {
    let start = Instant::now();
    ensure_dir(&r.out_dir)?;
    let mut report = RunReport::new("solve", &r.scenario, &r.fingerprint, r.mode);
    let mut files = Vec::new();
    let cert = run_certify(r)?;
    report
        .timings
        .insert("certify".into(), start.elapsed().as_secs_f64());
    let admissible = cert.admissible;
    record_certificate(&mut report, cert.clone());
    if !admissible && !r.solver_config.force {
        report
            .messages
            .push("refusing to solve without an admissible certificate; use --force".into());
        return finish(report, &r.out_dir, "solve_report.json", start, files);
    }
    if !admissible {
        // forced run: keep the gate failure visible but do not fail the command on it
        report.status = ExitStatus::Success;
        report.exit_code = 0;
        report
            .messages
            .push("uncertified: solved with --force".into());
    }
    let solve_start = Instant::now();
    let outcome =
        match solve_fixed_point(&r.cocycle, &r.solver_perturbation, &r.solver_config, &cert) {
            Ok(o) => o,
            Err(e @ SolverError::Config(_)) => {
                return Err(ScenarioError::config("solver", e.to_string()))
            }
            Err(e) => {
                report.fail(ExitStatus::ConvergenceFailure, e.to_string());
                return finish(report, &r.out_dir, "solve_report.json", start, files);
            }
        };
    report
        .timings
        .insert("solve".into(), solve_start.elapsed().as_secs_f64());
    let mut manifold = outcome.manifold;
    manifold.metadata.fingerprint = Some(r.fingerprint.clone());
    if !outcome.log.converged {
        report.fail(
            ExitStatus::ConvergenceFailure,
            format!(
                "no convergence after {} iterations (last step {:e})",
                outcome.log.iterations,
                outcome.log.steps.last().copied().unwrap_or(f64::NAN)
            ),
        );
    }
    let json_path = r.out_dir.join(MANIFOLD_FILE);
    write_json(&json_path, &manifold)?;
    let csv_path = r.out_dir.join("manifold.csv");
    let file = std::fs::File::create(&csv_path).map_err(|e| ScenarioError::io(&csv_path, e))?;
    manifold
        .write_csv(std::io::BufWriter::new(file))
        .map_err(|e| ScenarioError::io(&csv_path, e))?;
    let log_path = r.out_dir.join("convergence.csv");
    let rows: Vec<Vec<String>> = outcome
        .log
        .steps
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let ratio = if j > 0 && outcome.log.steps[j - 1] > 0.0 {
                format_float(s / outcome.log.steps[j - 1])
            } else {
                String::new()
            };
            vec![(j + 1).to_string(), format_float(*s), ratio]
        })
        .collect();
    write_csv(&log_path, &["iteration", "step", "ratio"], &rows)?;
    files.extend([json_path, csv_path, log_path]);
    report.convergence = Some(outcome.log);
    finish(report, &r.out_dir, "solve_report.json", start, files)
}

pub fn load_manifold(path: &Path) -> Result<ManifoldSequence, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ScenarioError::Parse {
        file: path.display().to_string(),
        message: e.to_string(),
    })
}

fn verification_failure(report: &mut RunReport, e: VerificationError) {
    match e {
        VerificationError::RadiusViolated(v) => {
            report.fail(
                ExitStatus::VerificationFailure,
                format!("{} sample(s) left the local balls", v.len()),
            );
            report.radius_violations = v;
        }
        other => report.fail(ExitStatus::VerificationFailure, other.to_string()),
    }
}

/// Invariance, decay and (local mode) ball checks on a solved manifold.
/// `manifold` defaults to `manifold.json` in the output directory.
pub fn cmd_verify(r: &Resolved, manifold: Option<&Path>) -> Result<CommandOutput, ScenarioError> {
    let start = Instant::now();
    let path = manifold.map_or_else(|| r.out_dir.join(MANIFOLD_FILE), Path::to_path_buf);
    let phi = load_manifold(&path)?;
    let found = phi
        .metadata
        .fingerprint
        .clone()
        .unwrap_or_else(|| "none".into());
    if found != r.fingerprint {
        return Err(ScenarioError::FingerprintMismatch {
            expected: r.fingerprint.clone(),
            found,
        });
    }
    let (de, df) = (r.cocycle.stable_dim(), r.cocycle.unstable_dim());
    if phi.stable_dim != de || phi.unstable_dim != df || phi.series_horizon != r.scenario.horizon {
        return Err(ScenarioError::config(
            "manifold",
            "dimensions or horizon differ from the scenario",
        ));
    }
    ensure_dir(&r.out_dir)?;
    let mut report = RunReport::new("verify", &r.scenario, &r.fingerprint, r.mode);
    let cert = run_certify(r)?;
    let v = &r.scenario.verification;
    let k = r.scenario.horizon;
    let mut rng = ChaCha8Rng::seed_from_u64(r.scenario.seed);
    let starts: Vec<usize> = if v.start_times.is_empty() {
        (1..=k).collect()
    } else {
        v.start_times.clone()
    };
    let p = &r.solver_perturbation;

    let t = Instant::now();
    match invariance_sweep(
        &r.cocycle,
        p,
        &phi,
        &starts,
        v.span,
        v.extra_points,
        v.tol_inv,
        &mut rng,
    ) {
        Ok(inv) => {
            if !inv.passed {
                report.fail(
                    ExitStatus::VerificationFailure,
                    format!("invariance residual {:e} >= {:e}", inv.max_value, v.tol_inv),
                );
            }
            report.residuals.push(inv);
        }
        Err(e) => verification_failure(&mut report, e),
    }
    report
        .timings
        .insert("invariance".into(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    if v.decay_pairs > 0 {
        let samples = decay_samples(&phi, v.decay_pairs, v.span, &mut rng);
        match decay_check(
            &r.cocycle,
            p,
            &phi,
            &r.scenario.bounds,
            &samples,
            cert.alpha,
            v.slack,
            r.mode,
        ) {
            Ok(d) => {
                if !d.passed {
                    report.fail(
                        ExitStatus::VerificationFailure,
                        format!("decay ratio {} exceeds 1 + {}", d.max_value, v.slack),
                    );
                }
                report.residuals.push(d);
            }
            Err(e) => verification_failure(&mut report, e),
        }
    }
    report
        .timings
        .insert("decay".into(), t.elapsed().as_secs_f64());

    let first = starts[0];
    let last = (first + v.span).min(k + 1);
    let probe_points: Vec<Vec<f64>> = phi
        .get(first)
        .map(|g| g.grid().points().collect())
        .unwrap_or_default();
    match propagation_check(&r.cocycle, p, &phi, first, last, &probe_points, 0.1) {
        Ok(prop) => {
            if !prop.passed {
                report.fail(
                    ExitStatus::VerificationFailure,
                    format!(
                        "residual growth ratio {} exceeds its propagation bound",
                        prop.max_ratio
                    ),
                );
            }
            report.propagation = Some(prop);
        }
        Err(e) => verification_failure(&mut report, e),
    }

    if r.mode == Mode::Local {
        let t = Instant::now();
        let radii = r.scenario.radii.as_ref().expect("local mode has radii");
        match &cert.shrink_factors {
            Some(shrink) => {
                let mut samples = local_grid_samples(&phi, radii, shrink, &starts);
                if v.extra_points > 0 {
                    samples.extend(local_samples(
                        radii,
                        shrink,
                        de,
                        &starts,
                        v.extra_points,
                        &mut rng,
                    ));
                }
                match local_invariance_check(
                    &r.cocycle,
                    &r.perturbation,
                    &phi,
                    radii,
                    shrink,
                    &samples,
                    v.span,
                    v.tol_inv,
                ) {
                    Ok(l) => {
                        if !l.passed {
                            report.fail(
                                ExitStatus::VerificationFailure,
                                format!(
                                    "local invariance residual {:e} >= {:e}",
                                    l.max_value, v.tol_inv
                                ),
                            );
                        }
                        report.residuals.push(l);
                    }
                    Err(e) => verification_failure(&mut report, e),
                }
            }
            None => report.fail(
                ExitStatus::VerificationFailure,
                "no shrink factors: local certificate failed",
            ),
        }
        report
            .timings
            .insert("local".into(), t.elapsed().as_secs_f64());
    }

    if v.contraction_trials > 0 {
        let t = Instant::now();
        match contraction_probe(
            &r.cocycle,
            p,
            &r.scenario.bounds,
            &phi.grids(),
            cert.alpha,
            cert.beta,
            v.contraction_trials,
            v.slack,
            &mut rng,
        ) {
            Ok(c) => {
                if !c.passed {
                    report.fail(
                        ExitStatus::VerificationFailure,
                        "contraction ratios exceed their bounds",
                    );
                }
                report.contraction = Some(c);
            }
            Err(e) => verification_failure(&mut report, e),
        }
        report
            .timings
            .insert("contraction".into(), t.elapsed().as_secs_f64());
    }
    report.certificate = Some(cert);

    let csv_path = r.out_dir.join("residuals.csv");
    let rows: Vec<Vec<String>> = report
        .residuals
        .iter()
        .flat_map(|res| res.csv_rows().into_iter().map(|row| row.to_vec()))
        .collect();
    write_csv(&csv_path, &["check", "m", "n", "value"], &rows)?;
    finish(
        report,
        &r.out_dir,
        "verify_report.json",
        start,
        vec![csv_path],
    )
}

/// One row of the aggregated summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub file: String,
    pub scenario: String,
    pub command: String,
    pub mode: String,
    pub status: String,
    pub exit_code: i64,
    pub admissible: String,
    pub alpha: String,
    pub beta: String,
    pub gate: String,
    pub iterations: String,
    pub max_residual: String,
}

impl SummaryRow {
    const HEADER: [&'static str; 12] = [
        "file",
        "scenario",
        "command",
        "mode",
        "status",
        "exit_code",
        "admissible",
        "alpha",
        "beta",
        "gate",
        "iterations",
        "max_residual",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            self.file.clone(),
            self.scenario.clone(),
            self.command.clone(),
            self.mode.clone(),
            self.status.clone(),
            self.exit_code.to_string(),
            self.admissible.clone(),
            self.alpha.clone(),
            self.beta.clone(),
            self.gate.clone(),
            self.iterations.clone(),
            self.max_residual.clone(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub status: ExitStatus,
    pub files: Vec<PathBuf>,
}

fn collect_reports(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), ScenarioError> {
    let entries = std::fs::read_dir(dir).map_err(|e| ScenarioError::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| ScenarioError::io(dir, e))?.path();
        if path.is_dir() {
            collect_reports(&path, out)?;
        } else if path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with("_report.json"))
        {
            out.push(path);
        }
    }
    Ok(())
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => match n.as_f64() {
            Some(f) if !n.is_i64() && !n.is_u64() => format_float(f),
            _ => n.to_string(),
        },
        Some(other) => other.to_string(),
    }
}

fn summary_row(root: &Path, path: &Path, v: &Value) -> SummaryRow {
    let cert = v.get("certificate");
    let gate = cert.and_then(|c| {
        let key = if c.get("mode").and_then(Value::as_str) == Some("local") {
            "local_gate"
        } else {
            "global_gate"
        };
        c.get(key).and_then(|g| g.get("value"))
    });
    let max_residual = v
        .get("residuals")
        .and_then(Value::as_array)
        .and_then(|rs| {
            rs.iter()
                .filter(|r| r.get("check").and_then(Value::as_str) != Some("decay"))
                .filter_map(|r| r.get("max_value").and_then(Value::as_f64))
                .reduce(f64::max)
        })
        .map(format_float)
        .unwrap_or_default();
    SummaryRow {
        file: path
            .strip_prefix(root)
            .unwrap_or(path)
            .display()
            .to_string(),
        scenario: cell(v.get("scenario")),
        command: cell(v.get("command")),
        mode: cell(v.get("mode")),
        status: cell(v.get("status")),
        exit_code: v.get("exit_code").and_then(Value::as_i64).unwrap_or(1),
        admissible: cell(cert.and_then(|c| c.get("admissible"))),
        alpha: cell(cert.and_then(|c| c.get("alpha"))),
        beta: cell(cert.and_then(|c| c.get("beta"))),
        gate: cell(gate),
        iterations: cell(v.get("convergence").and_then(|c| c.get("iterations"))),
        max_residual,
    }
}

/// Aggregates every `*_report.json` under `dir` into `summary.csv` and
/// `summary.md`. The status is the worst status among the reports.
pub fn cmd_report(dir: &Path) -> Result<Summary, ScenarioError> {
    if !dir.is_dir() {
        return Err(ScenarioError::EmptyDirectory(dir.display().to_string()));
    }
    let mut paths = Vec::new();
    collect_reports(dir, &mut paths)?;
    paths.sort();
    if paths.is_empty() {
        return Err(ScenarioError::EmptyDirectory(dir.display().to_string()));
    }
    let mut rows = Vec::new();
    for path in &paths {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| ScenarioError::Parse {
            file: path.display().to_string(),
            message: e.to_string(),
        })?;
        rows.push(summary_row(dir, path, &value));
    }
    let status = rows
        .iter()
        .map(|r| ExitStatus::from_code(r.exit_code).unwrap_or(ExitStatus::ConfigError))
        .max()
        .unwrap_or(ExitStatus::Success);

    let csv_path = dir.join("summary.csv");
    let cells: Vec<Vec<String>> = rows.iter().map(SummaryRow::cells).collect();
    write_csv(&csv_path, &SummaryRow::HEADER, &cells)?;

    let mut md = String::new();
    md.push_str(&format!("| {} |\n", SummaryRow::HEADER.join(" | ")));
    md.push_str(&format!("|{}\n", "---|".repeat(SummaryRow::HEADER.len())));
    for row in &cells {
        let escaped: Vec<String> = row.iter().map(|c| c.replace('|', "\\|")).collect();
        md.push_str(&format!("| {} |\n", escaped.join(" | ")));
    }
    md.push_str(&format!(
        "\n{} report(s), overall status: {:?}\n",
        rows.len(),
        status
    ));
    let md_path = dir.join("summary.md");
    std::fs::write(&md_path, md).map_err(|e| ScenarioError::io(&md_path, e))?;
    Ok(Summary {
        rows,
        status,
        files: vec![csv_path, md_path],
    })
}
