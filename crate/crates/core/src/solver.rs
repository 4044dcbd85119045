//! Graph-transform solver for the invariant graph sequence.
//!
//! Stable trajectories are advanced by the one-step recursion
//! `x_{k+1} = A_k x_k + P f_k(x_k, φ_k(x_k))`, the transform is the series
//! `(Φφ)_n(ξ) = -Σ_{k=n}^{K} (𝒜_{k+1,n}|F)^{-1} Q f_k(x_k, φ_k(x_k))`, and
//! the fixed point is reached by Picard iteration from the zero family.
//! Truncating at `K` is the same as switching the perturbation off after
//! time `K`, so graphs are stored for `n = 1..=K+1` with `φ_{K+1} = 0`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificate::TheoremCertificate;
use crate::cocycle::{infinity_norm, Cocycle, CocycleError, StateVector};
use crate::grid::{GridData, GridError, RegularGrid};
use crate::manifold::{metric_d, ManifoldError, ManifoldSequence};
use crate::perturbation::PerturbationFamily;
use crate::sequence::Sequence;

/// Terms inspected by the series decay check.
pub const SERIES_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("trajectory from time {start} left the grid of phi_{time} (sup-norm {norm} > radius {radius})")]
    GridEscape {
        start: usize,
        time: usize,
        norm: f64,
        radius: f64,
    },
    #[error(
        "graph-transform series at time {n} is not decaying over its last {SERIES_WINDOW} terms"
    )]
    SeriesNotDecaying { n: usize },
    #[error("certificate is not admissible; pass force to solve anyway")]
    Uncertified,
    #[error("declared Lipschitz constant at time {0} is not finite")]
    UnboundedLipschitz(usize),
    #[error("no convergence after {iterations} iterations (last step {step:e})")]
    NoConvergence { iterations: usize, step: f64 },
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusPolicy {
    /// Every graph uses the configured radius.
    Fixed,
    /// `R_1 = R`, `R_{k+1} = max{R, g_k R_k}` with
    /// `g_k = ‖A_k|E‖_∞ + 2 √d_E Lip(f_k)`, so trajectories started on a
    /// grid cannot leave the later grids.
    Envelope,
    /// As `Envelope` with the floor `R` replaced by `R s_k / s_1`, for graphs
    /// that only matter inside a shrinking ball `B(s_k)`.
    Scaled(Sequence),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub series_horizon: usize,
    pub max_iterations: usize,
    pub tol_d: f64,
    pub grid_radius: f64,
    pub points_per_axis: usize,
    pub radius_policy: RadiusPolicy,
    pub force: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            series_horizon: 60,
            max_iterations: 100,
            tol_d: 1e-8,
            grid_radius: 1.0,
            points_per_axis: 33,
            radius_policy: RadiusPolicy::Envelope,
            force: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self, c: &Cocycle, p: &PerturbationFamily) -> Result<(), SolverError> {
        if self.series_horizon == 0 {
            return Err(SolverError::Config(
                "series_horizon must be positive".into(),
            ));
        }
        if !(self.tol_d > 0.0) {
            return Err(SolverError::Config("tol_d must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(SolverError::Config(
                "max_iterations must be positive".into(),
            ));
        }
        if c.horizon() < self.series_horizon + 1 {
            return Err(SolverError::Config(format!(
                "cocycle horizon {} is below series_horizon + 1 = {}",
                c.horizon(),
                self.series_horizon + 1
            )));
        }
        if p.dims() != (c.stable_dim(), c.unstable_dim()) {
            return Err(SolverError::Config(
                "perturbation and cocycle dimensions differ".into(),
            ));
        }
        if c.stable_dim() == 0 {
            return Err(SolverError::Config(
                "stable dimension must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Grid radii for `n = 1..=K+1`.
pub fn grid_radii(
    c: &Cocycle,
    p: &PerturbationFamily,
    config: &SolverConfig,
) -> Result<Vec<f64>, SolverError> {
    let count = config.series_horizon + 1;
    let r = config.grid_radius;
    let floor = |k: usize| match &config.radius_policy {
        RadiusPolicy::Scaled(s) => r * s.value(k + 1) / s.value(1),
        _ => r,
    };
    match config.radius_policy {
        RadiusPolicy::Fixed => Ok(vec![r; count]),
        RadiusPolicy::Envelope | RadiusPolicy::Scaled(_) => {
            let root_d = (c.stable_dim() as f64).sqrt();
            let mut out = Vec::with_capacity(count);
            out.push(r);
            for k in 1..count {
                let lip = p.declared_lip(k);
                if !lip.is_finite() {
                    return Err(SolverError::UnboundedLipschitz(k));
                }
                let g = infinity_norm(&c.step(k)?.stable) + 2.0 * root_d * lip;
                let prev = out[k - 1];
                out.push(floor(k).max(g * prev * (1.0 + 1e-9)));
            }
            Ok(out)
        }
    }
}

pub fn solver_grids(
    c: &Cocycle,
    p: &PerturbationFamily,
    config: &SolverConfig,
) -> Result<Vec<RegularGrid>, SolverError> {
    grid_radii(c, p, config)?
        .into_iter()
        .map(|r| {
            RegularGrid::new(c.stable_dim(), r, config.points_per_axis)
                .map_err(|e| SolverError::Config(e.to_string()))
        })
        .collect()
}

/// Stable parts `x_k` of a trajectory on the graph family, `k = n..=end`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub start: usize,
    pub points: Vec<DVector<f64>>,
}

impl Trajectory {
    /// `x_k`, or `None` outside the computed range.
    pub fn at(&self, k: usize) -> Option<&DVector<f64>> {
        k.checked_sub(self.start).and_then(|i| self.points.get(i))
    }

    pub fn end(&self) -> usize {
        self.start + self.points.len() - 1
    }
}

fn escape(start: usize, time: usize, x: &DVector<f64>, err: GridError) -> SolverError {
    match err {
        GridError::OutOfDomain { radius, .. } => SolverError::GridEscape {
            start,
            time,
            norm: x.amax(),
            radius,
        },
        other => SolverError::Manifold(other.into()),
    }
}

/// Runs the recursion from `(n, ξ)` up to `x_{end}` and returns the stable
/// parts together with `f_k(x_k, φ_k(x_k))` for `k = n..end`.
fn trace(
    c: &Cocycle,
    p: &PerturbationFamily,
    phi: &ManifoldSequence,
    n: usize,
    xi: &DVector<f64>,
    end: usize,
) -> Result<(Vec<DVector<f64>>, Vec<StateVector>), SolverError> {
    let mut xs = Vec::with_capacity(end + 1 - n);
    let mut fs = Vec::with_capacity(end - n);
    let mut x = xi.clone();
    for k in n..end {
        let y = phi
            .get(k)?
            .eval(x.as_slice())
            .map_err(|e| escape(n, k, &x, e))?;
        let f = p.eval(k, &StateVector::new(x.clone(), y));
        let next = &c.step(k)?.stable * &x + &f.stable;
        xs.push(std::mem::replace(&mut x, next));
        fs.push(f);
    }
    xs.push(x);
    Ok((xs, fs))
}

/// `x_k` for `k = n..=K+1` along the graph family `φ`, started at `ξ ∈ E_n`.
pub fn stable_trajectory(
    c: &Cocycle,
    p: &PerturbationFamily,
    phi: &ManifoldSequence,
    n: usize,
    xi: &[f64],
    series_horizon: usize,
) -> Result<Trajectory, SolverError> {
    if n == 0 {
        return Err(CocycleError::ZeroIndex.into());
    }
    if n > series_horizon + 1 {
        return Err(SolverError::Config(format!(
            "start time {n} beyond series_horizon + 1 = {}",
            series_horizon + 1
        )));
    }
    let (points, _) = trace(
        c,
        p,
        phi,
        n,
        &DVector::from_column_slice(xi),
        series_horizon + 1,
    )?;
    Ok(Trajectory { start: n, points })
}

/// Result of one application of the graph transform.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformOutput {
    pub manifold: ManifoldSequence,
    /// Largest norm of the last retained series term over all cells.
    pub max_last_term: f64,
}

struct Cell {
    values: Vec<f64>,
    last_term: f64,
}

fn transform_cell(
    c: &Cocycle,
    p: &PerturbationFamily,
    phi: &ManifoldSequence,
    inverses: &[DMatrix<f64>],
    n: usize,
    xi: &[f64],
    horizon: usize,
) -> Result<Cell, SolverError> {
    let df = c.unstable_dim();
    let (_, fs) = trace(c, p, phi, n, &DVector::from_column_slice(xi), horizon + 1)?;
    let mut inv = DMatrix::<f64>::identity(df, df);
    let mut sum = DVector::<f64>::zeros(df);
    let mut norms = Vec::with_capacity(fs.len());
    for (i, f) in fs.iter().enumerate() {
        let k = n + i;
        inv *= &inverses[k - 1];
        let term = &inv * &f.unstable;
        norms.push(term.norm());
        sum += term;
    }
    if norms.len() >= SERIES_WINDOW {
        let tail = &norms[norms.len() - SERIES_WINDOW..];
        if tail[SERIES_WINDOW - 1] > 0.0 && tail.windows(2).all(|w| w[1] >= w[0]) {
            return Err(SolverError::SeriesNotDecaying { n });
        }
    }
    Ok(Cell {
        values: (-sum).iter().copied().collect(),
        last_term: norms.last().copied().unwrap_or(0.0),
    })
}

/// One application of `Φ` on the grids of `phi`.
pub fn apply_graph_transform(
    c: &Cocycle,
    p: &PerturbationFamily,
    phi: &ManifoldSequence,
) -> Result<TransformOutput, SolverError> {
    let horizon = phi.series_horizon;
    let inverses = (1..=horizon)
        .map(|k| c.unstable_step_inverse(k).cloned())
        .collect::<Result<Vec<_>, _>>()?;
    let df = c.unstable_dim();
    let jobs: Vec<(usize, usize)> = phi.graphs[..horizon]
        .iter()
        .flat_map(|g| (0..g.grid().len()).map(move |i| (g.time, i)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(n, i)| {
            let xi = phi.graphs[n - 1].grid().point(i);
            transform_cell(c, p, phi, &inverses, n, &xi, horizon)
        })
        .collect::<Result<Vec<Cell>, SolverError>>()?;

    let mut manifold = phi.clone();
    let mut max_last_term: f64 = 0.0;
    let mut cursor = cells.into_iter();
    for g in manifold.graphs[..horizon].iter_mut() {
        let mut values = Vec::with_capacity(g.grid().len() * df);
        for _ in 0..g.grid().len() {
            let cell = cursor.next().expect("one cell per grid point");
            max_last_term = max_last_term.max(cell.last_term);
            values.extend(cell.values);
        }
        g.data =
            GridData::from_values(g.grid().clone(), df, values).map_err(ManifoldError::from)?;
    }
    let last = &mut manifold.graphs[horizon];
    last.data = GridData::zeros(last.grid().clone(), df);
    Ok(TransformOutput {
        manifold,
        max_last_term,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLog {
    /// `d(φ^{(j)}, φ^{(j-1)})` for each iteration `j`.
    pub steps: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub uncertified: bool,
    pub max_last_term: f64,
    pub tol_d: f64,
}

impl ConvergenceLog {
    /// Successive step ratios `steps[j+1] / steps[j]` where defined.
    pub fn ratios(&self) -> Vec<f64> {
        self.steps
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub manifold: ManifoldSequence,
    pub log: ConvergenceLog,
}

impl SolveOutcome {
    /// Turns a non-converged outcome into `NoConvergence`.
    pub fn require_converged(self) -> Result<Self, SolverError> {
        if self.log.converged {
            Ok(self)
        } else {
            Err(SolverError::NoConvergence {
                iterations: self.log.iterations,
                step: self.log.steps.last().copied().unwrap_or(f64::NAN),
            })
        }
    }
}

/// Picard iteration from the zero family.
///
/// Refuses to run on an inadmissible certificate unless `config.force` is
/// set. A run that hits `max_iterations` is returned with
/// `log.converged = false`; see [`SolveOutcome::require_converged`].
pub fn solve_fixed_point(
    c: &Cocycle,
    p: &PerturbationFamily,
    config: &SolverConfig,
    certificate: &TheoremCertificate,
) -> Result<SolveOutcome, SolverError> {
    config.validate(c, p)?;
    let grids = solver_grids(c, p, config)?;
    let initial = ManifoldSequence::zero(c.stable_dim(), c.unstable_dim(), &grids);
    solve_fixed_point_from(c, p, config, certificate, initial)
}

/// Picard iteration from a caller-supplied family on the solver grids.
pub fn solve_fixed_point_from(
    c: &Cocycle,
    p: &PerturbationFamily,
    config: &SolverConfig,
    certificate: &TheoremCertificate,
    initial: ManifoldSequence,
) -> Result<SolveOutcome, SolverError> {
    config.validate(c, p)?;
    if initial.series_horizon != config.series_horizon {
        return Err(SolverError::Config(format!(
            "initial family has horizon {}, expected {}",
            initial.series_horizon, config.series_horizon
        )));
    }
    let uncertified = !certificate.admissible;
    if uncertified && !config.force {
        return Err(SolverError::Uncertified);
    }
    let mut current = initial;
    let mut steps = Vec::new();
    let mut converged = false;
    let mut max_last_term = 0.0;
    for _ in 0..config.max_iterations {
        let out = apply_graph_transform(c, p, &current)?;
        let step = metric_d(&out.manifold, &current)?;
        steps.push(step);
        max_last_term = out.max_last_term;
        current = out.manifold;
        if step < config.tol_d {
            converged = true;
            break;
        }
    }
    let iterations = steps.len();
    current.metadata.iterations = iterations;
    current.metadata.final_step = steps.last().copied().unwrap_or(0.0);
    current.metadata.converged = converged;
    current.metadata.uncertified = uncertified;
    Ok(SolveOutcome {
        manifold: current,
        log: ConvergenceLog {
            steps,
            iterations,
            converged,
            uncertified,
            max_last_term,
            tol_d: config.tol_d,
        },
    })
}

/// `ℱ_{m,n}(v) = (A_{m-1} + f_{m-1}) ∘ ⋯ ∘ (A_n + f_n)(v)`.
pub fn full_orbit(
    c: &Cocycle,
    p: &PerturbationFamily,
    n: usize,
    v: &StateVector,
    m: usize,
) -> Result<StateVector, SolverError> {
    if n == 0 {
        return Err(CocycleError::ZeroIndex.into());
    }
    if m < n {
        return Err(CocycleError::IndexOrder { m, n }.into());
    }
    let mut state = v.clone();
    for k in n..m {
        let step = c.step(k)?;
        state = step.apply(&state).add(&p.eval(k, &state));
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::BoundFamily;
    use crate::certificate::{certify, CertifyConfig, LipschitzBudget};
    use crate::sequence::Sequence;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn small_setup(
        delta: f64,
        horizon: usize,
    ) -> (Cocycle, PerturbationFamily, TheoremCertificate) {
        let c = Cocycle::diagonal(
            &[Sequence::constant((-1.0f64).exp())],
            &[Sequence::constant(0.5f64.exp())],
            horizon + 1,
        )
        .unwrap();
        let p = PerturbationFamily::saturating(1, 1)
            .with_coefficient(Sequence::exponential(delta, -0.2));
        let family = BoundFamily::exponential(1.0, -1.0, 0.5, 0.1);
        let budget = LipschitzBudget::from_fn(horizon, |k| p.declared_lip(k));
        let cert = certify(&family, &budget, &CertifyConfig::global(horizon)).unwrap();
        (c, p, cert)
    }

    /// Small grids; `force` lets the mechanics be exercised off-gate.
    fn config(horizon: usize) -> SolverConfig {
        SolverConfig {
            series_horizon: horizon,
            points_per_axis: 9,
            force: true,
            ..SolverConfig::default()
        }
    }

    /// `x_m = 𝒜_{m,n} ξ + Σ_{k=n}^{m-1} 𝒜_{m,k+1} P f_k(x_k, φ_k(x_k))`.
    fn summed_form(
        c: &Cocycle,
        p: &PerturbationFamily,
        phi: &ManifoldSequence,
        n: usize,
        xi: &[f64],
        m: usize,
        xs: &[DVector<f64>],
    ) -> DVector<f64> {
        let mut out = &c.transition(m, n).unwrap().stable * DVector::from_column_slice(xi);
        for k in n..m {
            let x = &xs[k - n];
            let y = phi.eval(k, x.as_slice()).unwrap();
            let f = p.eval(k, &StateVector::new(x.clone(), y));
            out += &c.transition(m, k + 1).unwrap().stable * &f.stable;
        }
        out
    }

    #[test]
    fn zero_perturbation_is_linear() {
        let (c, _, cert) = small_setup(0.01, 20);
        let p = PerturbationFamily::zero(1, 1);
        let out = solve_fixed_point(&c, &p, &config(20), &cert).unwrap();
        assert_eq!(out.log.iterations, 1);
        assert_eq!(out.log.steps, vec![0.0]);
        assert!(out
            .manifold
            .graphs
            .iter()
            .all(|g| g.data.values.iter().all(|v| *v == 0.0)));
        let t = stable_trajectory(&c, &p, &out.manifold, 3, &[0.5], 20).unwrap();
        for m in 3..=21 {
            let expected = c.transition(m, 3).unwrap().stable[(0, 0)] * 0.5;
            assert_relative_eq!(t.at(m).unwrap()[0], expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn recursion_matches_summed_form() {
        let (c, p, cert) = small_setup(0.05, 25);
        let out = solve_fixed_point(&c, &p, &config(25), &cert).unwrap();
        for n in [1usize, 4, 11] {
            for xi in [0.9, -0.35, 0.125] {
                let t = stable_trajectory(&c, &p, &out.manifold, n, &[xi], 25).unwrap();
                for m in n..=26 {
                    let s = summed_form(&c, &p, &out.manifold, n, &[xi], m, &t.points);
                    let x = t.at(m).unwrap();
                    assert!(
                        (x - &s).norm() <= 1e-10 * s.norm().max(1e-300),
                        "n={n} m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn refuses_inadmissible_without_force() {
        let (c, p, cert) = small_setup(0.01, 40);
        assert!(cert.admissible, "{:?}", cert.issues);
        let strict = SolverConfig {
            force: false,
            ..config(40)
        };
        let out = solve_fixed_point(&c, &p, &strict, &cert).unwrap();
        assert!(!out.log.uncertified && out.log.converged);
        let mut cert = cert;
        cert.admissible = false;
        assert_eq!(
            solve_fixed_point(&c, &p, &strict, &cert),
            Err(SolverError::Uncertified)
        );
        let out = solve_fixed_point(&c, &p, &config(40), &cert).unwrap();
        assert!(out.log.uncertified && out.manifold.metadata.uncertified);
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let (c, p, cert) = small_setup(0.5, 15);
        let capped = SolverConfig {
            max_iterations: 1,
            tol_d: 1e-300,
            ..config(15)
        };
        let out = solve_fixed_point(&c, &p, &capped, &cert).unwrap();
        assert!(!out.log.converged);
        assert!(matches!(
            out.require_converged(),
            Err(SolverError::NoConvergence { iterations: 1, .. })
        ));
    }

    #[test]
    fn fixed_radius_escape_is_reported() {
        let c =
            Cocycle::diagonal(&[Sequence::constant(3.0)], &[Sequence::constant(4.0)], 12).unwrap();
        let p = PerturbationFamily::zero(1, 1);
        let (_, _, cert) = small_setup(0.01, 10);
        let cfg = SolverConfig {
            radius_policy: RadiusPolicy::Fixed,
            ..config(10)
        };
        let phi = ManifoldSequence::zero(1, 1, &solver_grids(&c, &p, &cfg).unwrap());
        assert!(matches!(
            stable_trajectory(&c, &p, &phi, 1, &[1.0], 10),
            Err(SolverError::GridEscape {
                start: 1,
                time: 2,
                ..
            })
        ));
        // the envelope policy grows the radii instead
        let out = solve_fixed_point(&c, &p, &config(10), &cert);
        assert!(out.is_ok(), "{out:?}");
    }

    #[test]
    fn full_orbit_basics() {
        let (c, p, _) = small_setup(0.3, 10);
        let v = StateVector::from_slices(&[0.4], &[-0.2]);
        assert_eq!(full_orbit(&c, &p, 3, &v, 3).unwrap(), v);
        let z = PerturbationFamily::zero(1, 1);
        let w = full_orbit(&c, &z, 2, &v, 7).unwrap();
        assert!(w.sub(&c.transition(7, 2).unwrap().apply(&v)).norm() <= 1e-15 * w.norm());
    }

    #[test]
    fn full_orbit_matches_variation_of_constants() {
        // v_m = 𝒜_{m,n} v + Σ_{k=n}^{m-1} 𝒜_{m,k+1} f_k(v_k), split into both parts
        let (c, p, _) = small_setup(0.4, 20);
        let v = StateVector::from_slices(&[0.7], &[0.3]);
        let mut orbit = vec![v.clone()];
        for k in 2..15 {
            orbit.push(full_orbit(&c, &p, 2, &v, k + 1).unwrap());
        }
        for m in 2..=15 {
            let mut s = c.transition(m, 2).unwrap().apply(&v);
            for k in 2..m {
                s = s.add(
                    &c.transition(m, k + 1)
                        .unwrap()
                        .apply(&p.eval(k, &orbit[k - 2])),
                );
            }
            let direct = &orbit[m - 2];
            assert!(direct.sub(&s).norm() <= 1e-10 * s.norm());
        }
    }

    #[test]
    fn envelope_radii_grow_with_expansion() {
        let c = Cocycle::alternating(3.0, 2.0, 12).unwrap();
        let p = PerturbationFamily::zero(1, 1);
        let r = grid_radii(&c, &p, &config(10)).unwrap();
        assert_eq!(r.len(), 11);
        assert_relative_eq!(r[0], 1.0);
        // A_1 = 1/3 keeps the floor, A_2 = 3 triples it
        assert_relative_eq!(r[1], 1.0);
        assert_relative_eq!(r[2], 3.0, max_relative = 1e-8);
        let power = PerturbationFamily::power(1, 1, 0.1, 1.0);
        assert_eq!(
            grid_radii(&c, &power, &config(10)),
            Err(SolverError::UnboundedLipschitz(1))
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn recursion_equals_sum_on_random_graphs(
            seed in 0u64..1000,
            amp in 0.0f64..0.9,
            freq in 0.5f64..4.0,
            n in 1usize..20,
            xi in -1.0f64..1.0,
        ) {
            let (c, p, _) = small_setup(0.2, 20);
            let grids = solver_grids(&c, &p, &config(20)).unwrap();
            let phase = seed as f64 * 0.01;
            let phi = ManifoldSequence::tabulate(1, 1, &grids, |k, x| {
                vec![amp * ((freq * x[0] + phase + k as f64).sin() - (phase + k as f64).sin()) / freq]
            });
            let t = stable_trajectory(&c, &p, &phi, n, &[xi], 20).unwrap();
            for m in n..=21 {
                let s = summed_form(&c, &p, &phi, n, &[xi], m, &t.points);
                let x = t.at(m).unwrap();
                prop_assert!((x - &s).norm() <= 1e-10 * s.norm().max(1e-300));
            }
        }
    }
}
