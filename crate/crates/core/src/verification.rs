//! Numerical checks of a computed manifold: forward invariance, the decay
//! estimate, containment in the local balls, the trajectory bounds, and
//! empirical contraction ratios.
//!
//! Invariance is checked in the forward-inclusion direction only.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{BoundFamily, BoundsError};
use crate::certificate::{Mode, ShrinkFactors};
use crate::cocycle::Cocycle;
use crate::cocycle::StateVector;
use crate::grid::{GridError, RegularGrid};
use crate::manifold::{metric_d, ManifoldError, ManifoldSequence};
use crate::perturbation::PerturbationFamily;
use crate::sequence::Sequence;
use crate::solver::{apply_graph_transform, full_orbit, stable_trajectory, SolverError};

pub const DEFAULT_TOL_INV: f64 = 1e-6;
pub const DEFAULT_SLACK: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerificationError {
    #[error("orbit left the grid of phi_{time} (sup-norm {norm} > radius {radius})")]
    GridEscape { time: usize, norm: f64, radius: f64 },
    #[error("{} sample(s) left the local balls", .0.len())]
    RadiusViolated(Vec<RadiusViolation>),
    #[error("no samples to check")]
    EmptySample,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

fn grid_escape(time: usize, e: ManifoldError) -> VerificationError {
    match e {
        ManifoldError::Grid(GridError::OutOfDomain { norm, radius }) => {
            VerificationError::GridEscape { time, norm, radius }
        }
        other => other.into(),
    }
}

/// Worst sample of a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub m: usize,
    pub n: usize,
    pub xi: Vec<f64>,
    pub value: f64,
}

/// Per-pair maxima of a check together with the global verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub check: String,
    /// `(m, n, max value)` for every checked pair, sorted by `(n, m)`.
    pub pairs: Vec<(usize, usize, f64)>,
    pub max_value: f64,
    pub witness: Option<Witness>,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
    pub note: String,
}

impl ResidualReport {
    fn build(
        check: &str,
        mut rows: Vec<(usize, usize, f64, Vec<f64>)>,
        tolerance: f64,
        note: &str,
    ) -> Self {
        rows.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let samples = rows.len();
        let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
        let mut witness: Option<Witness> = None;
        for (m, n, value, xi) in rows {
            match pairs.last_mut() {
                Some(last) if last.0 == m && last.1 == n => last.2 = last.2.max(value),
                _ => pairs.push((m, n, value)),
            }
            if witness.as_ref().is_none_or(|w| value > w.value) {
                witness = Some(Witness { m, n, xi, value });
            }
        }
        let max_value = witness.as_ref().map_or(0.0, |w| w.value);
        ResidualReport {
            check: check.to_string(),
            pairs,
            max_value,
            witness,
            tolerance,
            samples,
            passed: max_value < tolerance,
            note: note.to_string(),
        }
    }

    /// `m, n, value` rows for CSV export.
    pub fn csv_rows(&self) -> Vec<[String; 4]> {
        self.pairs
            .iter()
            .map(|(m, n, v)| {
                [
                    self.check.clone(),
                    m.to_string(),
                    n.to_string(),
                    format!("{v:?}"),
                ]
            })
            .collect()
    }
}

/// `‖y - φ_m(x)‖` where `(x, y) = ℱ_{m,n}(ξ, φ_n(ξ))`, for every sample.
pub fn invariance_residual(
    c: &Cocycle,
    p: &PerturbationFamily,
    phi: &ManifoldSequence,
    n: usize,
    m: usize,
    samples: &[Vec<f64>],
    tol_inv: f64,
) -> Result<ResidualReport, VerificationError> {
    let rows = invariance_rows(c, p, phi, &[(n, m)], samples)?;
    Ok(ResidualReport::build(
        "invariance",
        rows,
        tol_inv,
        "forward inclusion only; surjectivity is not tested",
    ))
}

fn invariance_rows(
    c: &Cocycle,
    p: &PerturbationFamily,
    phi: &ManifoldSequence,
    pairs: &[(usize, usize)],
    samples: &[Vec<f64>],
) -> Result<Vec<(usize, usize, f64, Vec<f64>)>, VerificationError> {
    let jobs: Vec<(usize, usize, &Vec<f64>)> = pairs
        .iter()
        .flat_map(|&(n, m)| samples.iter().map(move |xi| (n, m, xi)))
        .collect();
    jobs.par_iter()
        .map(|&(n, m, xi)| {
            let y = phi.eval(n, xi).map_err(|e| grid_escape(n, e))?;
            let start = StateVector::new(DVector::from_column_slice(xi), y);
            let w = full_orbit(c, p, n, &start, m)?;
            let on_graph = phi
                .eval(m, w.stable.as_slice())
                .map_err(|e| grid_escape(m, e))?;
            Ok((m, n, (&w.unstable - on_graph).norm(), xi.clone()))
        })
        .collect()
}

/// Invariance residuals for `m - n ≤ span`, starting at `starts`, on every
/// grid point of `φ_n` plus `extra` random points per start time.
pub fn invariance_sweep<R: Rng + ?Sized>(
    c: &Cocycle,
    p: &PerturbationFamily,
    phi: &ManifoldSequence,
    starts: &[usize],
    span: usize,
    extra: usize,
    tol_inv: f64,
    rng: &mut R,
) -> Result<ResidualReport, VerificationError> {
    let mut rows = Vec::new();
    let last = phi.last_time();
    for &n in starts {
        let grid = phi.get(n)?.grid().clone();
        let mut samples: Vec<Vec<f64>> = grid.points().collect();
        samples.extend((0..extra).map(|_| random_in_box(rng, &grid, 1.0)));
        let pairs: Vec<(usize, usize)> = (n..=(n + span).min(last)).map(|m| (n, m)).collect();
        rows.extend(invariance_rows(c, p, phi, &pairs, &samples)?);
    }
    if rows.is_empty() {
        return Err(VerificationError::EmptySample);
    }
    Ok(ResidualReport::build(
        "invariance",
        rows,
        tol_inv,
        "forward inclusion only; surjectivity is not tested",
    ))
}

/// A point uniformly distributed in `fraction · [-R, R]^d`.
pub fn random_in_box<R: Rng + ?Sized>(rng: &mut R, grid: &RegularGrid, fraction: f64) -> Vec<f64> {
    let r = grid.radius() * fraction;
    (0..grid.dim()).map(|_| rng.random_range(-r..=r)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub samples: usize,
    /// `max residual(m,n) / bound` over the samples.
    pub max_ratio: f64,
    pub slack: f64,
    pub passed: bool,
}

/// Checks that the `m`-step residual is dominated by the one-step residuals
/// measured along the orbit, propagated with
/// `e_{k+1} ≤ ρ_k + (‖A_k|F‖ + (1 + L_{k+1}) Lip(f_k)) e_k`,
/// where `ρ_k` is the one-step residual at `(x_k, φ_k(x_k))` and `L_{k+1}`
/// the discrete Lipschitz constant of `φ_{k+1}`.
pub fn propagation_check(
    c: &Cocycle,
    p: &PerturbationFamily,
    phi: &ManifoldSequence,
    n: usize,
    m: usize,
    samples: &[Vec<f64>],
    slack: f64,
) -> Result<PropagationReport, VerificationError> {
    if samples.is_empty() {
        return Err(VerificationError::EmptySample);
    }
    let graph_lip: Vec<f64> = phi.graphs.iter().map(|g| g.discrete_lipschitz()).collect();
    let mut max_ratio: f64 = 0.0;
    for xi in samples {
        let y = phi.eval(n, xi).map_err(|e| grid_escape(n, e))?;
        let mut state = StateVector::new(DVector::from_column_slice(xi), y);
        let mut bound = 0.0;
        for k in n..m {
            let on_graph = StateVector::new(
                state.stable.clone(),
                phi.eval(k, state.stable.as_slice())
                    .map_err(|e| grid_escape(k, e))?,
            );
            let one = full_orbit(c, p, k, &on_graph, k + 1)?;
            let rho = (&one.unstable
                - phi
                    .eval(k + 1, one.stable.as_slice())
                    .map_err(|e| grid_escape(k + 1, e))?)
            .norm();
            let gain =
                crate::cocycle::spectral_norm(&c.step(k).map_err(SolverError::from)?.unstable)
                    + (1.0 + graph_lip[k]) * p.declared_lip(k);
            bound = rho + gain * bound;
            state = full_orbit(c, p, k, &state, k + 1)?;
        }
        let residual = (&state.unstable
            - phi
                .eval(m, state.stable.as_slice())
                .map_err(|e| grid_escape(m, e))?)
        .norm();
        let ratio = if bound > 0.0 {
            residual / bound
        } else if residual == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_ratio = max_ratio.max(ratio);
    }
    Ok(PropagationReport {
        samples: samples.len(),
        max_ratio,
        slack,
        passed: max_ratio <= 1.0 + slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub n: usize,
    pub m: usize,
    pub xi: Vec<f64>,
    pub xi_bar: Vec<f64>,
}

/// `count` random pairs of distinct grid nodes of `φ_n` with `n ≤ K` and
/// `n ≤ m ≤ n + span`. Nodes carry the solver's values exactly, so the check
/// is not polluted by interpolation error, which the unstable block
/// amplifies along the orbit.
pub fn decay_samples<R: Rng + ?Sized>(
    phi: &ManifoldSequence,
    count: usize,
    span: usize,
    rng: &mut R,
) -> Vec<DecaySample> {
    let last = phi.last_time();
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..last);
            let m = rng.random_range(n..=(n + span).min(last));
            let grid = phi.graphs[n - 1].grid();
            let i = rng.random_range(0..grid.len());
            let j = (i + rng.random_range(1..grid.len())) % grid.len();
            DecaySample {
                n,
                m,
                xi: grid.point(i),
                xi_bar: grid.point(j),
            }
        })
        .collect()
}

/// Checks `‖ℱ_{m,n}(ξ, φ_n ξ) - ℱ_{m,n}(ξ̄, φ_n ξ̄)‖ ≤ κ a(m,n) ‖ξ - ξ̄‖ (1 + slack)`
/// with `κ = 2/(1-2α)` (global) or `2/(1-4α)` (local).
///
/// The reported value is the ratio of the left side to the unslacked right
/// side; the check passes when every ratio is at most `1 + slack`.
pub fn decay_check(
    c: &Cocycle,
    p: &PerturbationFamily,
    phi: &ManifoldSequence,
    family: &BoundFamily,
    samples: &[DecaySample],
    alpha: f64,
    slack: f64,
    mode: Mode,
) -> Result<ResidualReport, VerificationError> {
    if samples.is_empty() {
        return Err(VerificationError::EmptySample);
    }
    let kappa = match mode {
        Mode::Global => 2.0 / (1.0 - 2.0 * alpha),
        Mode::Local => 2.0 / (1.0 - 4.0 * alpha),
    };
    let rows = samples
        .par_iter()
        .map(|s| {
            let orbit = |xi: &[f64]| -> Result<StateVector, VerificationError> {
                let y = phi.eval(s.n, xi).map_err(|e| grid_escape(s.n, e))?;
                Ok(full_orbit(
                    c,
                    p,
                    s.n,
                    &StateVector::new(DVector::from_column_slice(xi), y),
                    s.m,
                )?)
            };
            let lhs = orbit(&s.xi)?.sub(&orbit(&s.xi_bar)?).norm();
            let dist =
                (DVector::from_column_slice(&s.xi) - DVector::from_column_slice(&s.xi_bar)).norm();
            let rhs = kappa * family.bound_a(s.m, s.n)? * dist;
            let ratio = if rhs > 0.0 {
                lhs / rhs
            } else if lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            Ok((s.m, s.n, ratio, s.xi.clone()))
        })
        .collect::<Result<Vec<_>, VerificationError>>()?;
    let mut report = ResidualReport::build("decay", rows, 1.0 + slack, "value = measured / bound");
    report.passed = report.max_value <= 1.0 + slack;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusViolation {
    pub n: usize,
    pub m: usize,
    pub xi: Vec<f64>,
    pub norm: f64,
    pub radius: f64,
}

/// Random start points with `‖ξ‖ < r_n / (2 s_n)` for each time in `times`.
pub fn local_samples<R: Rng + ?Sized>(
    radii: &Sequence,
    shrink: &ShrinkFactors,
    stable_dim: usize,
    times: &[usize],
    per_time: usize,
    rng: &mut R,
) -> Vec<(usize, Vec<f64>)> {
    let mut out = Vec::new();
    for &n in times {
        let Some(s) = shrink.get(n) else { continue };
        let bound = radii.value(n) / (2.0 * s);
        for _ in 0..per_time {
            let dir: Vec<f64> = (0..stable_dim)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            let scale = bound * rng.random_range(0.0..1.0) / norm;
            out.push((n, dir.iter().map(|v| v * scale).collect()));
        }
    }
    out
}

/// Grid nodes of `φ_n` with `‖ξ‖ < r_n / (2 s_n)`, for each time in `times`.
pub fn local_grid_samples(
    phi: &ManifoldSequence,
    radii: &Sequence,
    shrink: &ShrinkFactors,
    times: &[usize],
) -> Vec<(usize, Vec<f64>)> {
    let mut out = Vec::new();
    for &n in times {
        let (Some(s), Ok(g)) = (shrink.get(n), phi.get(n)) else {
            continue;
        };
        let bound = radii.value(n) / (2.0 * s);
        out.extend(
            g.grid()
                .points()
                .filter(|xi| xi.iter().map(|v| v * v).sum::<f64>().sqrt() < bound)
                .map(|xi| (n, xi)),
        );
    }
    out
}

/// Local-ball containment and graph residual.
///
/// For each sample `(n, ξ)` with `‖ξ‖ < r_n/(2 s_n)`, every orbit point
/// `ℱ_{m,n}(ξ, φ_n(ξ))`, `n ≤ m ≤ n + span`, must lie in `B(r_m)`, so that
/// the original perturbation and its radial extension agree along it; `p`
/// is the original, unextended family. Returns the graph-residual report;
/// containment failures, including samples outside the shrunken start ball,
/// are returned as `RadiusViolated`.
pub fn local_invariance_check(
    c: &Cocycle,
    p: &PerturbationFamily,
    phi: &ManifoldSequence,
    radii: &Sequence,
    shrink: &ShrinkFactors,
    samples: &[(usize, Vec<f64>)],
    span: usize,
    tol_inv: f64,
) -> Result<ResidualReport, VerificationError> {
    if samples.is_empty() {
        return Err(VerificationError::EmptySample);
    }
    let last = phi.last_time();
    let results = samples
        .par_iter()
        .map(|(n, xi)| {
            let n = *n;
            let mut violations = Vec::new();
            let mut rows = Vec::new();
            let xi_norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            let start_bound = shrink.get(n).map_or(0.0, |s| radii.value(n) / (2.0 * s));
            if !(xi_norm < start_bound) {
                violations.push(RadiusViolation {
                    n,
                    m: n,
                    xi: xi.clone(),
                    norm: xi_norm,
                    radius: start_bound,
                });
            }
            let y = phi.eval(n, xi).map_err(|e| grid_escape(n, e))?;
            let mut state = StateVector::new(DVector::from_column_slice(xi), y);
            for m in n..=(n + span).min(last) {
                if m > n {
                    state = full_orbit(c, p, m - 1, &state, m)?;
                }
                let r = radii.value(m);
                let norm = state.norm();
                if !(norm < r) {
                    violations.push(RadiusViolation {
                        n,
                        m,
                        xi: xi.clone(),
                        norm,
                        radius: r,
                    });
                }
                let on_graph = phi
                    .eval(m, state.stable.as_slice())
                    .map_err(|e| grid_escape(m, e))?;
                rows.push((m, n, (&state.unstable - on_graph).norm(), xi.clone()));
            }
            Ok((rows, violations))
        })
        .collect::<Result<Vec<_>, VerificationError>>()?;
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (r, v) in results {
        rows.extend(r);
        violations.extend(v);
    }
    if !violations.is_empty() {
        return Err(VerificationError::RadiusViolated(violations));
    }
    Ok(ResidualReport::build(
        "local_invariance",
        rows,
        tol_inv,
        "orbits stay in B(r_m); forward inclusion only",
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBounds {
    /// `sup ‖x_m(ξ)‖ / (a(m,n) ‖ξ‖)`.
    pub max_norm_ratio: f64,
    /// `sup ‖x_m(ξ) - x_m(ξ̄)‖ / (a(m,n) ‖ξ - ξ̄‖)` over neighbouring grid points.
    pub max_lipschitz_ratio: f64,
    /// `1 / (1 - 2α)`.
    pub bound: f64,
    pub passed: bool,
}

/// Weighted trajectory bounds over every grid point of `φ_n`, `n ∈ starts`.
pub fn trajectory_bounds(
    c: &Cocycle,
    p: &PerturbationFamily,
    phi: &ManifoldSequence,
    family: &BoundFamily,
    starts: &[usize],
    alpha: f64,
    slack: f64,
) -> Result<TrajectoryBounds, VerificationError> {
    let horizon = phi.series_horizon;
    let mut max_norm_ratio: f64 = 0.0;
    let mut max_lipschitz_ratio: f64 = 0.0;
    for &n in starts {
        let grid = phi.get(n)?.grid().clone();
        let points: Vec<Vec<f64>> = grid.points().collect();
        let trajectories = points
            .par_iter()
            .map(|xi| stable_trajectory(c, p, phi, n, xi, horizon))
            .collect::<Result<Vec<_>, SolverError>>()?;
        for (i, xi) in points.iter().enumerate() {
            let xi_norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            // neighbour along the first axis
            let j = i + 1;
            let neighbour = (j < points.len() && (j % grid.points_per_axis()) != 0).then_some(j);
            for m in n..=horizon + 1 {
                let a = family.bound_a(m, n)?;
                let x = trajectories[i]
                    .at(m)
                    .expect("trajectory covers the horizon");
                if xi_norm > 0.0 {
                    max_norm_ratio = max_norm_ratio.max(x.norm() / (a * xi_norm));
                }
                if let Some(j) = neighbour {
                    let dist = (DVector::from_column_slice(xi)
                        - DVector::from_column_slice(&points[j]))
                    .norm();
                    let xj = trajectories[j]
                        .at(m)
                        .expect("trajectory covers the horizon");
                    max_lipschitz_ratio = max_lipschitz_ratio.max((x - xj).norm() / (a * dist));
                }
            }
        }
    }
    let bound = 1.0 / (1.0 - 2.0 * alpha);
    Ok(TrajectoryBounds {
        max_norm_ratio,
        max_lipschitz_ratio,
        bound,
        passed: max_norm_ratio <= bound * (1.0 + slack)
            && max_lipschitz_ratio <= bound * (1.0 + slack),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub trials: usize,
    /// `max d(Φφ, Φψ) / d(φ, ψ)`.
    pub max_transform_ratio: f64,
    /// `β / (1 - 2α)²`.
    pub transform_bound: f64,
    /// `max ‖x^φ - x^ψ‖_n / d(φ, ψ)` with the weighted sup norm.
    pub max_trajectory_ratio: f64,
    /// `α / (1 - 2α)²`.
    pub trajectory_bound: f64,
    pub slack: f64,
    pub passed: bool,
}

/// A random family with every graph Lipschitz at most `0.95` and zero at 0:
/// `φ_n(ξ)_j = c_j (sin(⟨ω_j, ξ⟩ + θ_j) - sin θ_j) / ‖ω_j‖` with `Σ c_j² ≤ 0.95²`.
pub fn random_admissible<R: Rng + ?Sized>(
    rng: &mut R,
    stable_dim: usize,
    unstable_dim: usize,
    grids: &[RegularGrid],
) -> ManifoldSequence {
    let count = grids.len();
    let params: Vec<Vec<(Vec<f64>, f64, f64)>> = (0..count)
        .map(|_| {
            (0..unstable_dim)
                .map(|_| {
                    let omega: Vec<f64> = (0..stable_dim)
                        .map(|_| rng.random_range(-4.0..4.0))
                        .collect();
                    let theta = rng.random_range(0.0..std::f64::consts::TAU);
                    let c = rng.random_range(-1.0..1.0) * 0.95 / (unstable_dim as f64).sqrt();
                    (omega, theta, c)
                })
                .collect()
        })
        .collect();
    ManifoldSequence::tabulate(stable_dim, unstable_dim, grids, |n, xi| {
        params[n - 1]
            .iter()
            .map(|(omega, theta, c)| {
                let w = omega.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                let dot: f64 = omega.iter().zip(xi).map(|(a, b)| a * b).sum();
                c * ((dot + theta).sin() - theta.sin()) / w
            })
            .collect()
    })
}

/// Measures both contraction ratios on `trials` random admissible pairs on
/// the given grids.
pub fn contraction_probe<R: Rng + ?Sized>(
    c: &Cocycle,
    p: &PerturbationFamily,
    family: &BoundFamily,
    grids: &[RegularGrid],
    alpha: f64,
    beta: f64,
    trials: usize,
    slack: f64,
    rng: &mut R,
) -> Result<ContractionReport, VerificationError> {
    let (de, df) = (c.stable_dim(), c.unstable_dim());
    let horizon = grids.len() - 1;
    let mut max_transform_ratio: f64 = 0.0;
    let mut max_trajectory_ratio: f64 = 0.0;
    for _ in 0..trials {
        let phi = random_admissible(rng, de, df, grids);
        let psi = random_admissible(rng, de, df, grids);
        let d = metric_d(&phi, &psi)?;
        if d == 0.0 {
            continue;
        }
        let d_transform = metric_d(
            &apply_graph_transform(c, p, &phi)?.manifold,
            &apply_graph_transform(c, p, &psi)?.manifold,
        )?;
        max_transform_ratio = max_transform_ratio.max(d_transform / d);

        let weighted = (1..=horizon)
            .into_par_iter()
            .map(|n| {
                let mut best: f64 = 0.0;
                for xi in grids[n - 1].points() {
                    let xi_norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if xi_norm == 0.0 {
                        continue;
                    }
                    let a = stable_trajectory(c, p, &phi, n, &xi, horizon)?;
                    let b = stable_trajectory(c, p, &psi, n, &xi, horizon)?;
                    for m in n..=horizon + 1 {
                        let diff = (a.at(m).unwrap() - b.at(m).unwrap()).norm();
                        best = best.max(diff / (family.bound_a(m, n)? * xi_norm));
                    }
                }
                Ok(best)
            })
            .collect::<Result<Vec<f64>, VerificationError>>()?
            .into_iter()
            .fold(0.0, f64::max);
        max_trajectory_ratio = max_trajectory_ratio.max(weighted / d);
    }
    let denom = (1.0 - 2.0 * alpha).powi(2);
    let transform_bound = beta / denom;
    let trajectory_bound = alpha / denom;
    Ok(ContractionReport {
        trials,
        max_transform_ratio,
        transform_bound,
        max_trajectory_ratio,
        trajectory_bound,
        slack,
        passed: max_transform_ratio <= transform_bound + slack
            && max_trajectory_ratio <= trajectory_bound + slack,
    })
}

impl From<BoundsError> for SolverError {
    fn from(e: BoundsError) -> Self {
        SolverError::Config(e.to_string())
    }
}
