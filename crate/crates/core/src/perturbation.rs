//! Time-indexed nonlinear perturbations `f_k` with `f_k(0) = 0`, their
//! declared Lipschitz budgets, and the radial extension of a ball-local
//! perturbation to the whole space.
//!
//! The scalar built-in kinds act through the functional `ℓ(x, y) = x₁ + y₁`
//! and output along `w = (e₁/2, e₁/2)`, so `‖g(ℓ(v)) w‖ = |g(ℓ(v))|` and a
//! scalar profile `g` with Lipschitz constant `L` gives a map with Lipschitz
//! constant at most `L` in the sum norm.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;
use thiserror::Error;

use crate::cocycle::StateVector;
use crate::grid::{GridData, GridError, RegularGrid};
use crate::sequence::Sequence;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerturbationError {
    #[error("Lipschitz estimate needs at least two distinct sample points")]
    DegenerateSample,
    #[error("table perturbation does not vanish at the origin (time {time}, value {value})")]
    NonzeroAtOrigin { time: usize, value: f64 },
    #[error("table perturbation has no data")]
    EmptyTable,
    #[error("table grid dimension {grid} does not match state dimension {state}")]
    TableDimension { grid: usize, state: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type EvalFn = dyn Fn(usize, &StateVector) -> StateVector + Send + Sync;
pub type LipFn = dyn Fn(usize) -> f64 + Send + Sync;

/// User-supplied perturbation with a declared Lipschitz budget.
#[derive(Clone)]
pub struct CustomMap {
    pub name: String,
    pub eval: Arc<EvalFn>,
    pub lip: Arc<LipFn>,
}

impl fmt::Debug for CustomMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMap")
            .field("name", &self.name)
            .finish()
    }
}

/// Per-time tables over the full state `(x, y)`, interpolated multilinearly.
///
/// `tables[i]` is used at time `first_time + i`; later times reuse the last
/// table. Points outside the box are clamped onto it coordinatewise, which
/// keeps the declared Lipschitz constant valid.
#[derive(Debug, Clone, PartialEq)]
pub struct TablePerturbation {
    pub first_time: usize,
    pub tables: Vec<GridData>,
    pub lip: Vec<f64>,
}

impl TablePerturbation {
    pub fn new(
        first_time: usize,
        tables: Vec<GridData>,
        lip: Vec<f64>,
        stable_dim: usize,
        unstable_dim: usize,
    ) -> Result<Self, PerturbationError> {
        if tables.is_empty() {
            return Err(PerturbationError::EmptyTable);
        }
        let state = stable_dim + unstable_dim;
        for (i, t) in tables.iter().enumerate() {
            if t.grid.dim() != state || t.width != state {
                return Err(PerturbationError::TableDimension {
                    grid: t.grid.dim(),
                    state,
                });
            }
            let origin = t.at(t.grid.origin_index());
            if let Some(v) = origin.iter().find(|v| **v != 0.0) {
                return Err(PerturbationError::NonzeroAtOrigin {
                    time: first_time + i,
                    value: *v,
                });
            }
        }
        Ok(TablePerturbation {
            first_time,
            tables,
            lip,
        })
    }

    fn table(&self, k: usize) -> &GridData {
        let i = k.saturating_sub(self.first_time).min(self.tables.len() - 1);
        &self.tables[i]
    }

    fn lip_at(&self, k: usize) -> f64 {
        let i = k.saturating_sub(self.first_time);
        self.lip
            .get(i)
            .or(self.lip.last())
            .copied()
            .unwrap_or(f64::INFINITY)
    }

    fn eval(&self, k: usize, v: &StateVector) -> StateVector {
        let table = self.table(k);
        let r = table.grid.radius();
        let x: Vec<f64> = v
            .stable
            .iter()
            .chain(v.unstable.iter())
            .map(|c| c.clamp(-r, r))
            .collect();
        let out = table.eval(&x).expect("clamped point lies in the table box");
        let de = v.stable.len();
        StateVector::from_slices(&out[..de], &out[de..])
    }
}

#[derive(Debug, Clone)]
pub enum PerturbationKind {
    Zero,
    /// `f(v) = slope · v`.
    Linear {
        slope: f64,
    },
    /// `g(t) = t - tanh t`, unit Lipschitz and cubic near 0.
    Saturating,
    /// `g(t) = c κ sign(t) |t|^{q+1}` with `κ = min{1, 2^q/(q+1)}`, which
    /// satisfies `‖f(u) - f(v)‖ ≤ c ‖u - v‖ (‖u‖ + ‖v‖)^q`.
    Power {
        c: f64,
        q: f64,
    },
    /// `f_k = δ_k · base_k`.
    DecayCoefficient {
        base: Box<PerturbationFamily>,
        coefficient: Sequence,
    },
    Table(TablePerturbation),
    Custom(CustomMap),
    /// `f̃_k(v) = f_k(v)` on `B(r_k)`, `f_k(v r_k / ‖v‖)` outside.
    RadialExtension {
        base: Box<PerturbationFamily>,
        radii: Sequence,
    },
}

#[derive(Debug, Clone)]
pub struct PerturbationFamily {
    stable_dim: usize,
    unstable_dim: usize,
    kind: PerturbationKind,
}

fn scalar_direction(stable_dim: usize, unstable_dim: usize, g: f64) -> StateVector {
    let mut out = StateVector::zeros(stable_dim, unstable_dim);
    match (stable_dim, unstable_dim) {
        (0, 0) => {}
        (0, _) => out.unstable[0] = g,
        (_, 0) => out.stable[0] = g,
        _ => {
            out.stable[0] = 0.5 * g;
            out.unstable[0] = 0.5 * g;
        }
    }
    out
}

fn functional(v: &StateVector) -> f64 {
    v.stable.iter().next().copied().unwrap_or(0.0)
        + v.unstable.iter().next().copied().unwrap_or(0.0)
}

/// `t - tanh t`, by its Taylor series near 0 to avoid cancellation.
fn saturating_profile(t: f64) -> f64 {
    if t.abs() < 0.05 {
        let t2 = t * t;
        let tail = 1382.0 / 155925.0 - t2 * 21844.0 / 6081075.0;
        t * t2
            * (1.0 / 3.0
                - t2 * (2.0 / 15.0 - t2 * (17.0 / 315.0 - t2 * (62.0 / 2835.0 - t2 * tail))))
    } else {
        t - t.tanh()
    }
}

fn power_kappa(q: f64) -> f64 {
    1f64.min(2f64.powf(q) / (q + 1.0))
}

impl PerturbationFamily {
    pub fn new(stable_dim: usize, unstable_dim: usize, kind: PerturbationKind) -> Self {
        PerturbationFamily {
            stable_dim,
            unstable_dim,
            kind,
        }
    }

    pub fn zero(stable_dim: usize, unstable_dim: usize) -> Self {
        Self::new(stable_dim, unstable_dim, PerturbationKind::Zero)
    }

    pub fn linear(stable_dim: usize, unstable_dim: usize, slope: f64) -> Self {
        Self::new(stable_dim, unstable_dim, PerturbationKind::Linear { slope })
    }

    pub fn saturating(stable_dim: usize, unstable_dim: usize) -> Self {
        Self::new(stable_dim, unstable_dim, PerturbationKind::Saturating)
    }

    pub fn power(stable_dim: usize, unstable_dim: usize, c: f64, q: f64) -> Self {
        Self::new(stable_dim, unstable_dim, PerturbationKind::Power { c, q })
    }

    pub fn custom(
        stable_dim: usize,
        unstable_dim: usize,
        name: impl Into<String>,
        eval: impl Fn(usize, &StateVector) -> StateVector + Send + Sync + 'static,
        lip: impl Fn(usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(
            stable_dim,
            unstable_dim,
            PerturbationKind::Custom(CustomMap {
                name: name.into(),
                eval: Arc::new(eval),
                lip: Arc::new(lip),
            }),
        )
    }

    /// `δ_k · self`.
    pub fn with_coefficient(self, coefficient: Sequence) -> Self {
        let (de, df) = (self.stable_dim, self.unstable_dim);
        Self::new(
            de,
            df,
            PerturbationKind::DecayCoefficient {
                base: Box::new(self),
                coefficient,
            },
        )
    }

    pub fn kind(&self) -> &PerturbationKind {
        &self.kind
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.stable_dim, self.unstable_dim)
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            PerturbationKind::Zero => true,
            PerturbationKind::Linear { slope } => *slope == 0.0,
            PerturbationKind::Power { c, .. } => *c == 0.0,
            PerturbationKind::DecayCoefficient { base, .. }
            | PerturbationKind::RadialExtension { base, .. } => base.is_zero(),
            _ => false,
        }
    }

    /// `f_k(v)`; exactly zero at `v = 0` for every built-in kind.
    pub fn eval(&self, k: usize, v: &StateVector) -> StateVector {
        let (de, df) = (self.stable_dim, self.unstable_dim);
        match &self.kind {
            PerturbationKind::Zero => StateVector::zeros(de, df),
            PerturbationKind::Linear { slope } => v.scaled(*slope),
            PerturbationKind::Saturating => {
                scalar_direction(de, df, saturating_profile(functional(v)))
            }
            PerturbationKind::Power { c, q } => {
                let t = functional(v);
                let g = c * power_kappa(*q) * t.signum() * t.abs().powf(q + 1.0);
                scalar_direction(de, df, if t == 0.0 { 0.0 } else { g })
            }
            PerturbationKind::DecayCoefficient { base, coefficient } => {
                base.eval(k, v).scaled(coefficient.value(k))
            }
            PerturbationKind::Table(t) => t.eval(k, v),
            PerturbationKind::Custom(c) => (c.eval)(k, v),
            PerturbationKind::RadialExtension { base, radii } => {
                let r = radii.value(k);
                let norm = v.norm();
                if norm <= r {
                    base.eval(k, v)
                } else {
                    base.eval(k, &v.scaled(r / norm))
                }
            }
        }
    }

    /// Declared global `Lip(f_k)`; infinite for power-type kinds with `q > 0`.
    pub fn declared_lip(&self, k: usize) -> f64 {
        match &self.kind {
            PerturbationKind::Zero => 0.0,
            PerturbationKind::Linear { slope } => slope.abs(),
            PerturbationKind::Saturating => 1.0,
            PerturbationKind::Power { c, q } => {
                if *c == 0.0 {
                    0.0
                } else if *q == 0.0 {
                    c.abs()
                } else {
                    f64::INFINITY
                }
            }
            PerturbationKind::DecayCoefficient { base, coefficient } => {
                let d = coefficient.value(k).abs();
                if d == 0.0 {
                    0.0
                } else {
                    d * base.declared_lip(k)
                }
            }
            PerturbationKind::Table(t) => t.lip_at(k),
            PerturbationKind::Custom(c) => (c.lip)(k),
            PerturbationKind::RadialExtension { base, radii } => {
                2.0 * base.ball_lip(k, radii.value(k))
            }
        }
    }

    /// Declared Lipschitz constant of `f_k` restricted to `B(r)`.
    pub fn ball_lip(&self, k: usize, r: f64) -> f64 {
        match &self.kind {
            PerturbationKind::Power { c, q } => c.abs() * 2f64.powf(*q) * r.powf(*q),
            PerturbationKind::DecayCoefficient { base, coefficient } => {
                let d = coefficient.value(k).abs();
                if d == 0.0 {
                    0.0
                } else {
                    d * base.ball_lip(k, r)
                }
            }
            PerturbationKind::RadialExtension { base, radii } => {
                let rk = radii.value(k);
                if r <= rk {
                    base.ball_lip(k, r)
                } else {
                    2.0 * base.ball_lip(k, rk)
                }
            }
            _ => self.declared_lip(k),
        }
    }
}

/// `f̃` agreeing with `p` on each `B(r_k)` and constant along rays outside.
pub fn radial_extension(p: &PerturbationFamily, radii: &Sequence) -> PerturbationFamily {
    PerturbationFamily::new(
        p.stable_dim,
        p.unstable_dim,
        PerturbationKind::RadialExtension {
            base: Box::new(p.clone()),
            radii: radii.clone(),
        },
    )
}

/// Largest difference quotient `‖f_k(u) - f_k(v)‖ / ‖u - v‖` over all pairs.
pub fn estimate_lipschitz(
    p: &PerturbationFamily,
    k: usize,
    samples: &[StateVector],
) -> Result<f64, PerturbationError> {
    let images: Vec<StateVector> = samples.iter().map(|v| p.eval(k, v)).collect();
    let mut best: Option<f64> = None;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let d = samples[i].sub(&samples[j]).norm();
            if d > 0.0 {
                let q = images[i].sub(&images[j]).norm() / d;
                best = Some(best.map_or(q, |b| b.max(q)));
            }
        }
    }
    best.ok_or(PerturbationError::DegenerateSample)
}

/// Largest difference quotient over explicit pairs.
pub fn estimate_lipschitz_pairs(
    p: &PerturbationFamily,
    k: usize,
    pairs: &[(StateVector, StateVector)],
) -> Result<f64, PerturbationError> {
    let mut best: Option<f64> = None;
    for (u, v) in pairs {
        let d = u.sub(v).norm();
        if d > 0.0 {
            let q = p.eval(k, u).sub(&p.eval(k, v)).norm() / d;
            best = Some(best.map_or(q, |b| b.max(q)));
        }
    }
    best.ok_or(PerturbationError::DegenerateSample)
}

/// A random point of sum norm `radius · U` with `U` uniform on `[0, 1]`.
pub fn sample_in_ball<R: Rng + ?Sized>(
    rng: &mut R,
    stable_dim: usize,
    unstable_dim: usize,
    radius: f64,
) -> StateVector {
    let v = random_direction(rng, stable_dim, unstable_dim);
    v.scaled(radius * rng.random::<f64>())
}

/// A random point with sum norm exactly `1`.
pub fn random_direction<R: Rng + ?Sized>(
    rng: &mut R,
    stable_dim: usize,
    unstable_dim: usize,
) -> StateVector {
    loop {
        let x = DVector::from_fn(stable_dim, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(unstable_dim, |_, _| rng.random_range(-1.0..1.0));
        let v = StateVector::new(x, y);
        let n = v.norm();
        if n > 1e-3 {
            return v.scaled(1.0 / n);
        }
    }
}

/// Table perturbation sampled from `p` at times `first..=last` on a box of
/// radius `radius` over the full state.
pub fn tabulate(
    p: &PerturbationFamily,
    first: usize,
    last: usize,
    radius: f64,
    points_per_axis: usize,
) -> Result<PerturbationFamily, PerturbationError> {
    let (de, df) = p.dims();
    let grid = RegularGrid::new(de + df, radius, points_per_axis)?;
    let tables = (first..=last)
        .map(|k| {
            GridData::tabulate(grid.clone(), de + df, |x| {
                let v = StateVector::from_slices(&x[..de], &x[de..]);
                let out = p.eval(k, &v);
                out.stable
                    .iter()
                    .chain(out.unstable.iter())
                    .copied()
                    .collect()
            })
        })
        .collect();
    let lip = (first..=last).map(|k| p.declared_lip(k)).collect();
    let t = TablePerturbation::new(first, tables, lip, de, df)?;
    Ok(PerturbationFamily::new(de, df, PerturbationKind::Table(t)))
}
