//! Certificate constants α, β, the gap condition, the global and local gates
//! and the local shrink factors `s_n`.
//!
//! Every supremum and series is truncated at a horizon `M`; the results carry
//! the diagnostics needed to judge whether the truncation looks converged.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{BoundFamily, BoundsError};
use crate::sequence::Sequence;

/// Number of trailing terms inspected by tail and monotonicity diagnostics.
pub const TAIL_WINDOW: usize = 10;
/// A fitted geometric ratio at or above this is reported as unreliable.
pub const UNRELIABLE_RATIO: f64 = 0.99;
pub const DEFAULT_GAP_THRESHOLD: f64 = 1e-6;

const INCREASE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertificateError {
    #[error("horizon must be at least 2, got {0}")]
    HorizonTooSmall(usize),
    #[error("non-finite value in {quantity} at (m, n) = ({m}, {n})")]
    NonFinite {
        quantity: &'static str,
        m: usize,
        n: usize,
    },
    #[error("beta series for n = {n} is not decreasing over its last {TAIL_WINDOW} terms")]
    DivergentTail { n: usize },
    #[error("local gate violated: 4 alpha = {0} >= 1")]
    GateViolated(f64),
    #[error("s_n supremum for n = {n} still increasing at the horizon")]
    DivergentSup { n: usize },
    #[error("radius r_{n} = {value} is not positive")]
    InvalidRadius { n: usize, value: f64 },
    #[error("Lipschitz budget covers k <= {available}, need {needed}")]
    BudgetTooShort { available: usize, needed: usize },
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// Declared Lipschitz constants `Lip(f_k)` for `k = 1..=len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBudget {
    values: Vec<f64>,
}

impl LipschitzBudget {
    pub fn new(values: Vec<f64>) -> Self {
        LipschitzBudget { values }
    }

    pub fn zero(len: usize) -> Self {
        LipschitzBudget {
            values: vec![0.0; len],
        }
    }

    pub fn from_fn(len: usize, f: impl Fn(usize) -> f64) -> Self {
        LipschitzBudget {
            values: (1..=len).map(f).collect(),
        }
    }

    pub fn from_sequence(seq: &Sequence, len: usize) -> Self {
        Self::from_fn(len, |k| seq.value(k))
    }

    /// `Lip(f_k)`; zero beyond the stored range.
    pub fn get(&self, k: usize) -> f64 {
        k.checked_sub(1)
            .and_then(|i| self.values.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        LipschitzBudget {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    fn require(&self, needed: usize) -> Result<(), CertificateError> {
        if self.values.len() < needed {
            return Err(CertificateError::BudgetTooShort {
                available: self.values.len(),
                needed,
            });
        }
        Ok(())
    }
}

/// Lower-triangular cache of `a(m, n)` (and optionally `b`), row `m - 1`.
struct Triangle {
    rows: Vec<Vec<f64>>,
}

impl Triangle {
    fn build(
        horizon: usize,
        quantity: &'static str,
        f: impl Fn(usize, usize) -> Result<f64, BoundsError> + Sync,
    ) -> Result<Self, CertificateError> {
        let rows = (1..=horizon)
            .into_par_iter()
            .map(|m| {
                (1..=m)
                    .map(|n| {
                        let v = f(m, n)?;
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(CertificateError::NonFinite { quantity, m, n })
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Triangle { rows })
    }

    #[inline]
    fn at(&self, m: usize, n: usize) -> f64 {
        self.rows[m - 1][n - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    pub alpha: f64,
    /// Maximising pair `(m, n)`; `(0, 0)` when every term vanishes.
    pub witness: (usize, usize),
    /// Inner quantity at the witness `n` for `m = n+1..=M`.
    pub increments: Vec<f64>,
    /// Relative change of the inner quantity over the last step at the witness.
    pub last_relative_increment: f64,
    pub horizon: usize,
}

/// `α = sup_{n<m≤M} (1/a(m,n)) Σ_{k=n}^{m-1} a(m,k+1) a(k,n) Lip(f_k)`.
pub fn compute_alpha(
    family: &BoundFamily,
    budget: &LipschitzBudget,
    horizon: usize,
) -> Result<AlphaResult, CertificateError> {
    if horizon < 2 {
        return Err(CertificateError::HorizonTooSmall(horizon));
    }
    budget.require(horizon - 1)?;
    let a = Triangle::build(horizon, "a", |m, n| family.bound_a(m, n))?;

    let per_n: Vec<(f64, usize, Vec<f64>)> = (1..horizon)
        .into_par_iter()
        .map(|n| {
            let mut best = (0.0f64, 0usize);
            let mut values = Vec::with_capacity(horizon - n);
            for m in n + 1..=horizon {
                let mut sum = 0.0;
                for k in n..m {
                    sum += a.at(m, k + 1) * a.at(k, n) * budget.get(k);
                }
                let v = sum / a.at(m, n);
                values.push(v);
                if v > best.0 {
                    best = (v, m);
                }
            }
            (best.0, best.1, values)
        })
        .collect();

    let mut alpha = 0.0;
    let mut witness = (0, 0);
    let mut increments = Vec::new();
    for (i, (value, m, values)) in per_n.into_iter().enumerate() {
        if !value.is_finite() {
            return Err(CertificateError::NonFinite {
                quantity: "alpha",
                m,
                n: i + 1,
            });
        }
        if value > alpha {
            alpha = value;
            witness = (m, i + 1);
            increments = values;
        }
    }
    let last_relative_increment = match increments.as_slice() {
        [.., prev, last] if *last > 0.0 => (last - prev) / last,
        _ => 0.0,
    };
    Ok(AlphaResult {
        alpha,
        witness,
        increments,
        last_relative_increment,
        horizon,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub ratio: f64,
    pub remainder: f64,
    pub unreliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaResult {
    pub beta: f64,
    pub witness: usize,
    /// Truncated series value for each `n = 1..=M`.
    pub per_n: Vec<f64>,
    /// Geometric tail fit at the witness, when it has enough terms.
    pub tail: Option<TailEstimate>,
    /// Largest fitted remainder over all `n` with enough terms.
    pub max_tail_remainder: f64,
    pub any_tail_unreliable: bool,
    pub horizon: usize,
}

fn fit_tail(terms: &[f64]) -> Option<TailEstimate> {
    if terms.len() < TAIL_WINDOW {
        return None;
    }
    let window = &terms[terms.len() - TAIL_WINDOW..];
    let (first, last) = (window[0], window[TAIL_WINDOW - 1]);
    if last == 0.0 {
        return Some(TailEstimate {
            ratio: 0.0,
            remainder: 0.0,
            unreliable: false,
        });
    }
    if first <= 0.0 {
        return Some(TailEstimate {
            ratio: f64::INFINITY,
            remainder: f64::INFINITY,
            unreliable: true,
        });
    }
    let ratio = (last / first).powf(1.0 / (TAIL_WINDOW - 1) as f64);
    let unreliable = ratio >= UNRELIABLE_RATIO;
    let remainder = if ratio < 1.0 {
        last * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    Some(TailEstimate {
        ratio,
        remainder,
        unreliable,
    })
}

fn strictly_increases(window: &[f64]) -> bool {
    window
        .windows(2)
        .any(|w| w[0] > 0.0 && w[1] > w[0] * (1.0 + INCREASE_TOLERANCE))
}

/// `β = sup_{n≤M} Σ_{k=n}^{M} b(k+1,n) a(k,n) Lip(f_k)`.
pub fn compute_beta(
    family: &BoundFamily,
    budget: &LipschitzBudget,
    horizon: usize,
) -> Result<BetaResult, CertificateError> {
    if horizon < 2 {
        return Err(CertificateError::HorizonTooSmall(horizon));
    }
    budget.require(horizon)?;
    let a = Triangle::build(horizon, "a", |m, n| family.bound_a(m, n))?;
    let b = Triangle::build(horizon + 1, "b", |m, n| family.bound_b(m, n))?;

    let series: Vec<Vec<f64>> = (1..=horizon)
        .into_par_iter()
        .map(|n| {
            (n..=horizon)
                .map(|k| b.at(k + 1, n) * a.at(k, n) * budget.get(k))
                .collect()
        })
        .collect();

    let mut per_n = Vec::with_capacity(horizon);
    let mut beta = 0.0;
    let mut witness = 1;
    let mut max_tail_remainder: f64 = 0.0;
    let mut any_tail_unreliable = false;
    for (i, terms) in series.iter().enumerate() {
        let n = i + 1;
        let sum: f64 = terms.iter().sum();
        if !sum.is_finite() {
            return Err(CertificateError::NonFinite {
                quantity: "beta",
                m: horizon,
                n,
            });
        }
        if terms.len() >= TAIL_WINDOW {
            let window = &terms[terms.len() - TAIL_WINDOW..];
            let positive: Vec<f64> = window.iter().copied().filter(|t| *t > 0.0).collect();
            if strictly_increases(&positive) {
                return Err(CertificateError::DivergentTail { n });
            }
            if let Some(t) = fit_tail(terms) {
                max_tail_remainder = max_tail_remainder.max(t.remainder);
                any_tail_unreliable |= t.unreliable;
            }
        }
        if sum > beta {
            beta = sum;
            witness = n;
        }
        per_n.push(sum);
    }
    Ok(BetaResult {
        beta,
        witness,
        tail: fit_tail(&series[witness - 1]),
        per_n,
        max_tail_remainder,
        any_tail_unreliable,
        horizon,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSample {
    pub n: usize,
    /// `a(n+1,n) b(n+1,n)`.
    pub initial: f64,
    /// `a(M,n) b(M,n)`.
    pub last: f64,
    pub relative: f64,
    pub monotone_tail: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub threshold: f64,
    pub horizon: usize,
    pub samples: Vec<GapSample>,
    pub passed: bool,
}

/// Checks that `a(m,n) b(m,n)` decays along `m` for each sampled `n`.
///
/// A sample passes when the product at `m = M` is below `threshold` times its
/// value at `m = n+1` and is non-increasing over the last ten terms. Samples
/// with fewer than ten terms before the horizon fail.
pub fn check_gap(
    family: &BoundFamily,
    times: &[usize],
    horizon: usize,
    threshold: f64,
) -> Result<GapReport, CertificateError> {
    if horizon < 2 {
        return Err(CertificateError::HorizonTooSmall(horizon));
    }
    let mut samples = Vec::with_capacity(times.len());
    for &n in times {
        if n == 0 {
            return Err(BoundsError::ZeroIndex.into());
        }
        let products = (n + 1..=horizon)
            .map(|m| Ok(family.bound_a(m, n)? * family.bound_b(m, n)?))
            .collect::<Result<Vec<f64>, BoundsError>>()?;
        let (initial, last) = match (products.first(), products.last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => (f64::NAN, f64::NAN),
        };
        let relative = last / initial;
        let monotone_tail = products.len() >= TAIL_WINDOW
            && products[products.len() - TAIL_WINDOW..]
                .windows(2)
                .all(|w| w[1] <= w[0] * (1.0 + INCREASE_TOLERANCE));
        let passed = monotone_tail && relative.is_finite() && relative < threshold;
        samples.push(GapSample {
            n,
            initial,
            last,
            relative,
            monotone_tail,
            passed,
        });
    }
    let passed = !samples.is_empty() && samples.iter().all(|s| s.passed);
    Ok(GapReport {
        threshold,
        horizon,
        samples,
        passed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    /// Left-hand side of the strict inequality `value < 1`.
    pub value: f64,
    pub margin: f64,
    pub passed: bool,
}

impl GateResult {
    fn from_value(value: f64) -> Self {
        GateResult {
            value,
            margin: 1.0 - value,
            passed: value < 1.0,
        }
    }
}

/// `2α + max{2β, √β} < 1`.
pub fn check_global_gate(alpha: f64, beta: f64) -> GateResult {
    GateResult::from_value(2.0 * alpha + (2.0 * beta).max(beta.sqrt()))
}

/// `4α + max{4β, √(2β)} < 1`.
pub fn check_local_gate(alpha: f64, beta: f64) -> GateResult {
    GateResult::from_value(4.0 * alpha + (4.0 * beta).max((2.0 * beta).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkFactors {
    /// `s_n` for `n = 1..=M`.
    pub values: Vec<f64>,
    /// Truncated `sup_{m≥n} a(m,n) r_n / r_m` for each `n`.
    pub sups: Vec<f64>,
    pub horizon: usize,
}

impl ShrinkFactors {
    /// `s_n`, or `None` beyond the horizon.
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.values.get(i)).copied()
    }
}

/// `s_n = max{1, 2/(1-4α) sup_{n≤m≤M} a(m,n) r_n / r_m}`.
pub fn compute_s_n(
    family: &BoundFamily,
    radii: &Sequence,
    alpha: f64,
    horizon: usize,
) -> Result<ShrinkFactors, CertificateError> {
    if horizon < 2 {
        return Err(CertificateError::HorizonTooSmall(horizon));
    }
    if 4.0 * alpha >= 1.0 {
        return Err(CertificateError::GateViolated(4.0 * alpha));
    }
    let r: Vec<f64> = (1..=horizon).map(|k| radii.value(k)).collect();
    if let Some((i, value)) = r
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
    {
        return Err(CertificateError::InvalidRadius {
            n: i + 1,
            value: *value,
        });
    }
    let factor = 2.0 / (1.0 - 4.0 * alpha);
    let mut values = Vec::with_capacity(horizon);
    let mut sups = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let terms = (n..=horizon)
            .map(|m| Ok(family.bound_a(m, n)? * r[n - 1] / r[m - 1]))
            .collect::<Result<Vec<f64>, BoundsError>>()?;
        if terms.len() >= TAIL_WINDOW {
            let window = &terms[terms.len() - TAIL_WINDOW..];
            if window
                .windows(2)
                .all(|w| w[1] > w[0] * (1.0 + INCREASE_TOLERANCE))
            {
                return Err(CertificateError::DivergentSup { n });
            }
        }
        let sup = terms.iter().copied().fold(0.0, f64::max);
        if !sup.is_finite() {
            return Err(CertificateError::NonFinite {
                quantity: "s_n",
                m: horizon,
                n,
            });
        }
        sups.push(sup);
        values.push(1f64.max(factor * sup));
    }
    Ok(ShrinkFactors {
        values,
        sups,
        horizon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Global,
    Local,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyConfig {
    pub horizon: usize,
    pub gap_threshold: f64,
    /// Times `n` sampled by the gap check; empty means `1` and `horizon / 4`.
    pub gap_times: Vec<usize>,
    pub mode: Mode,
    pub radii: Option<Sequence>,
}

impl CertifyConfig {
    pub fn global(horizon: usize) -> Self {
        CertifyConfig {
            horizon,
            gap_threshold: DEFAULT_GAP_THRESHOLD,
            gap_times: Vec::new(),
            mode: Mode::Global,
            radii: None,
        }
    }

    pub fn local(horizon: usize, radii: Sequence) -> Self {
        CertifyConfig {
            mode: Mode::Local,
            radii: Some(radii),
            ..Self::global(horizon)
        }
    }

    fn gap_times(&self) -> Vec<usize> {
        if self.gap_times.is_empty() {
            let mut t = vec![1, (self.horizon / 4).max(1)];
            t.dedup();
            t
        } else {
            self.gap_times.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremCertificate {
    pub mode: Mode,
    pub horizon: usize,
    /// Always true: sups and series are evaluated up to the horizon only.
    pub truncated: bool,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_detail: AlphaResult,
    pub beta_detail: Option<BetaResult>,
    pub gap: GapReport,
    pub global_gate: GateResult,
    pub local_gate: GateResult,
    pub shrink_factors: Option<ShrinkFactors>,
    /// Diagnostics that made the certificate inadmissible.
    pub issues: Vec<String>,
    pub admissible: bool,
}

impl TheoremCertificate {
    /// The gate that governs this certificate's mode.
    pub fn gate(&self) -> &GateResult {
        match self.mode {
            Mode::Global => &self.global_gate,
            Mode::Local => &self.local_gate,
        }
    }
}

/// Computes α, β, the gap report, both gates and, in local mode, `s_n`.
///
/// Divergence diagnostics (`DivergentTail`, `DivergentSup`, a violated local
/// gate) mark the certificate inadmissible instead of failing; structural
/// problems such as non-finite bounds are returned as errors.
pub fn certify(
    family: &BoundFamily,
    budget: &LipschitzBudget,
    config: &CertifyConfig,
) -> Result<TheoremCertificate, CertificateError> {
    let horizon = config.horizon;
    let alpha_detail = compute_alpha(family, budget, horizon)?;
    let mut issues = Vec::new();
    let beta_detail = match compute_beta(family, budget, horizon) {
        Ok(b) => Some(b),
        Err(e @ CertificateError::DivergentTail { .. }) => {
            issues.push(e.to_string());
            None
        }
        Err(e) => return Err(e),
    };
    let alpha = alpha_detail.alpha;
    let beta = beta_detail.as_ref().map_or(f64::INFINITY, |b| b.beta);
    let gap = check_gap(family, &config.gap_times(), horizon, config.gap_threshold)?;
    if !gap.passed {
        issues.push("gap condition a(m,n) b(m,n) -> 0 not met on the sampled times".into());
    }
    let global_gate = check_global_gate(alpha, beta);
    let local_gate = check_local_gate(alpha, beta);
    let mut shrink_factors = None;
    match config.mode {
        Mode::Global => {
            if !global_gate.passed {
                issues.push(format!("global gate failed: {} >= 1", global_gate.value));
            }
        }
        Mode::Local => {
            if !local_gate.passed {
                issues.push(format!("local gate failed: {} >= 1", local_gate.value));
            }
            match &config.radii {
                None => issues.push("local mode requires radii".into()),
                Some(r) => match compute_s_n(family, r, alpha, horizon) {
                    Ok(s) => shrink_factors = Some(s),
                    Err(
                        e @ (CertificateError::GateViolated(_)
                        | CertificateError::DivergentSup { .. }
                        | CertificateError::InvalidRadius { .. }),
                    ) => issues.push(e.to_string()),
                    Err(e) => return Err(e),
                },
            }
        }
    }
    Ok(TheoremCertificate {
        mode: config.mode,
        horizon,
        truncated: true,
        alpha,
        beta,
        alpha_detail,
        beta_detail,
        gap,
        global_gate,
        local_gate,
        shrink_factors,
        admissible: issues.is_empty(),
        issues,
    })
}
