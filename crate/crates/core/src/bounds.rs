//! Dichotomy bound families `a(m, n)` and `b(m, n)`.
//!
//! `a(m, n)` bounds the stable evolution `‖𝒜_{m,n} P_n‖` and `b(m, n)` bounds
//! the inverse unstable evolution `‖(𝒜_{m,n}|_{F_n})^{-1} Q_m‖`, for
//! `1 ≤ n ≤ m`. The parametric forms cover uniform and nonuniform,
//! exponential and polynomial behaviour, general growth rates, and any
//! combination of a stable form with a different unstable form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cocycle::{spectral_norm, Cocycle, CocycleError};
use crate::sequence::Sequence;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("time indices start at 1")]
    ZeroIndex,
    #[error("index order violated: m = {m} < n = {n}")]
    IndexOrder { m: usize, n: usize },
    #[error("pair ({m}, {n}) lies outside the bound table (horizon {horizon})")]
    OutsideTable { m: usize, n: usize, horizon: usize },
    #[error("invalid bound family: {0}")]
    InvalidFamily(String),
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
}

/// Explicit lower-triangular tables, `a[m-1][n-1]` for `n ≤ m ≤ horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    pub horizon: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl BoundTable {
    fn lookup(rows: &[Vec<f64>], m: usize, n: usize) -> f64 {
        rows.get(m - 1)
            .and_then(|row| row.get(n - 1))
            .copied()
            .unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundFamily {
    /// `a(m,n) = (a_n / a_m) c_n`, `b(m,n) = (b_n / b_m) d_m`.
    RatioForm {
        a: Sequence,
        b: Sequence,
        c: Sequence,
        d: Sequence,
    },
    /// `a(m,n) = D e^{λ(m-n) + εn}`, `b(m,n) = D e^{-μ(m-n) + εm}`.
    Exponential {
        scale: f64,
        stable_rate: f64,
        unstable_rate: f64,
        nonuniformity: f64,
    },
    /// `a(m,n) = D (m/n)^λ n^ε`, `b(m,n) = D (m/n)^{-μ} m^ε`.
    PolynomialRatio {
        scale: f64,
        stable_rate: f64,
        unstable_rate: f64,
        nonuniformity: f64,
    },
    /// `a(m,n) = D (m-n+1)^λ n^ε`, `b(m,n) = D (m-n+1)^{-μ} m^ε`.
    PolynomialShift {
        scale: f64,
        stable_rate: f64,
        unstable_rate: f64,
        nonuniformity: f64,
    },
    /// `a(m,n) = D (μ_m / μ_{n-1})^λ ν_{n-1}^ε`,
    /// `b(m,n) = D (μ_{m-1} / μ_n)^{-μ} ν_{m-1}^ε`, with `μ`, `ν` growth
    /// rates indexed from 0.
    GrowthRate {
        scale: f64,
        stable_rate: f64,
        unstable_rate: f64,
        nonuniformity: f64,
        mu: Sequence,
        nu: Sequence,
    },
    /// Stable bound of one family paired with the unstable bound of another.
    Mixed {
        stable: Box<BoundFamily>,
        unstable: Box<BoundFamily>,
    },
    Table(BoundTable),
}

impl BoundFamily {
    pub fn exponential(
        scale: f64,
        stable_rate: f64,
        unstable_rate: f64,
        nonuniformity: f64,
    ) -> Self {
        BoundFamily::Exponential {
            scale,
            stable_rate,
            unstable_rate,
            nonuniformity,
        }
    }

    pub fn mixed(stable: BoundFamily, unstable: BoundFamily) -> Self {
        BoundFamily::Mixed {
            stable: Box::new(stable),
            unstable: Box::new(unstable),
        }
    }

    fn check(m: usize, n: usize) -> Result<(), BoundsError> {
        if n == 0 {
            return Err(BoundsError::ZeroIndex);
        }
        if m < n {
            return Err(BoundsError::IndexOrder { m, n });
        }
        Ok(())
    }

    /// Stable bound `a(m, n)`.
    pub fn bound_a(&self, m: usize, n: usize) -> Result<f64, BoundsError> {
        Self::check(m, n)?;
        if let BoundFamily::Table(t) = self {
            if m > t.horizon {
                return Err(BoundsError::OutsideTable {
                    m,
                    n,
                    horizon: t.horizon,
                });
            }
        }
        Ok(self.a_unchecked(m, n))
    }

    /// Unstable bound `b(m, n)`.
    pub fn bound_b(&self, m: usize, n: usize) -> Result<f64, BoundsError> {
        Self::check(m, n)?;
        if let BoundFamily::Table(t) = self {
            if m > t.horizon {
                return Err(BoundsError::OutsideTable {
                    m,
                    n,
                    horizon: t.horizon,
                });
            }
        }
        Ok(self.b_unchecked(m, n))
    }

    pub(crate) fn a_unchecked(&self, m: usize, n: usize) -> f64 {
        let (mf, nf) = (m as f64, n as f64);
        match self {
            BoundFamily::RatioForm { a, c, .. } => a.value(n) / a.value(m) * c.value(n),
            BoundFamily::Exponential {
                scale,
                stable_rate,
                nonuniformity,
                ..
            } => scale * (stable_rate * (mf - nf) + nonuniformity * nf).exp(),
            BoundFamily::PolynomialRatio {
                scale,
                stable_rate,
                nonuniformity,
                ..
            } => scale * (mf / nf).powf(*stable_rate) * nf.powf(*nonuniformity),
            BoundFamily::PolynomialShift {
                scale,
                stable_rate,
                nonuniformity,
                ..
            } => scale * (mf - nf + 1.0).powf(*stable_rate) * nf.powf(*nonuniformity),
            BoundFamily::GrowthRate {
                scale,
                stable_rate,
                nonuniformity,
                mu,
                nu,
                ..
            } => {
                scale
                    * (mu.value(m) / mu.value(n - 1)).powf(*stable_rate)
                    * nu.value(n - 1).powf(*nonuniformity)
            }
            BoundFamily::Mixed { stable, .. } => stable.a_unchecked(m, n),
            BoundFamily::Table(t) => BoundTable::lookup(&t.a, m, n),
        }
    }

    pub(crate) fn b_unchecked(&self, m: usize, n: usize) -> f64 {
        let (mf, nf) = (m as f64, n as f64);
        match self {
            BoundFamily::RatioForm { b, d, .. } => b.value(n) / b.value(m) * d.value(m),
            BoundFamily::Exponential {
                scale,
                unstable_rate,
                nonuniformity,
                ..
            } => scale * (-unstable_rate * (mf - nf) + nonuniformity * mf).exp(),
            BoundFamily::PolynomialRatio {
                scale,
                unstable_rate,
                nonuniformity,
                ..
            } => scale * (mf / nf).powf(-unstable_rate) * mf.powf(*nonuniformity),
            BoundFamily::PolynomialShift {
                scale,
                unstable_rate,
                nonuniformity,
                ..
            } => scale * (mf - nf + 1.0).powf(-unstable_rate) * mf.powf(*nonuniformity),
            BoundFamily::GrowthRate {
                scale,
                unstable_rate,
                nonuniformity,
                mu,
                nu,
                ..
            } => {
                scale
                    * (mu.value(m - 1) / mu.value(n)).powf(-unstable_rate)
                    * nu.value(m - 1).powf(*nonuniformity)
            }
            BoundFamily::Mixed { unstable, .. } => unstable.b_unchecked(m, n),
            BoundFamily::Table(t) => BoundTable::lookup(&t.b, m, n),
        }
    }

    /// Evaluates the family into an explicit table up to `horizon`.
    pub fn materialize(&self, horizon: usize) -> BoundFamily {
        let a = (1..=horizon)
            .map(|m| (1..=m).map(|n| self.a_unchecked(m, n)).collect())
            .collect();
        let b = (1..=horizon)
            .map(|m| (1..=m).map(|n| self.b_unchecked(m, n)).collect())
            .collect();
        BoundFamily::Table(BoundTable { horizon, a, b })
    }

    /// Checks positivity on `n ≤ m ≤ horizon` and the per-kind side
    /// conditions (`c, d ≥ 1` for ratio forms; non-decreasing growth rates
    /// starting at 1).
    pub fn validate(&self, horizon: usize) -> Result<(), BoundsError> {
        for m in 1..=horizon {
            for n in 1..=m {
                let (a, b) = (self.a_unchecked(m, n), self.b_unchecked(m, n));
                if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
                    return Err(BoundsError::InvalidFamily(format!(
                        "bounds must be positive and finite, got a({m},{n}) = {a}, b({m},{n}) = {b}"
                    )));
                }
            }
        }
        match self {
            BoundFamily::RatioForm { c, d, .. } => {
                for n in 1..=horizon + 1 {
                    if !(c.value(n) >= 1.0 && d.value(n) >= 1.0) {
                        return Err(BoundsError::InvalidFamily(format!(
                            "ratio form needs c_n >= 1 and d_n >= 1 (fails at n = {n})"
                        )));
                    }
                }
            }
            BoundFamily::GrowthRate { mu, nu, .. } => {
                if mu.value(0) != 1.0 || nu.value(0) != 1.0 {
                    return Err(BoundsError::InvalidFamily(
                        "growth rates must start at mu_0 = nu_0 = 1".into(),
                    ));
                }
                if !mu.is_non_decreasing(0, horizon) || !nu.is_non_decreasing(0, horizon) {
                    return Err(BoundsError::InvalidFamily(
                        "growth rates must be non-decreasing".into(),
                    ));
                }
            }
            BoundFamily::Mixed { stable, unstable } => {
                stable.validate(horizon)?;
                unstable.validate(horizon)?;
            }
            _ => {}
        }
        Ok(())
    }
}

/// A pair at which a measured norm exceeds its declared bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub m: usize,
    pub n: usize,
    pub which: BoundSide,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsValidation {
    pub pairs_checked: usize,
    /// `min (a(m,n) - ‖𝒜_{m,n}P_n‖) / a(m,n)`; negative means a violation.
    pub worst_stable_slack: f64,
    pub worst_unstable_slack: f64,
    pub violations: Vec<BoundViolation>,
}

impl BoundsValidation {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relative tolerance used when comparing a measured norm with its bound.
pub const BOUND_TOLERANCE: f64 = 1e-12;

/// Compares the measured evolution norms of `cocycle` against `family`.
pub fn validate_bounds(
    cocycle: &Cocycle,
    family: &BoundFamily,
    pairs: &[(usize, usize)],
) -> Result<BoundsValidation, BoundsError> {
    let mut out = BoundsValidation {
        pairs_checked: 0,
        worst_stable_slack: f64::INFINITY,
        worst_unstable_slack: f64::INFINITY,
        violations: Vec::new(),
    };
    for &(m, n) in pairs {
        let transition = cocycle.transition(m, n)?;
        let stable = spectral_norm(&transition.stable);
        let unstable = spectral_norm(&cocycle.inverse_on_unstable(m, n)?);
        let (a, b) = (family.bound_a(m, n)?, family.bound_b(m, n)?);
        let slack_a = (a - stable) / a;
        let slack_b = (b - unstable) / b;
        out.worst_stable_slack = out.worst_stable_slack.min(slack_a);
        out.worst_unstable_slack = out.worst_unstable_slack.min(slack_b);
        if !(slack_a >= -BOUND_TOLERANCE) {
            out.violations.push(BoundViolation {
                m,
                n,
                which: BoundSide::Stable,
                measured: stable,
                bound: a,
            });
        }
        if !(slack_b >= -BOUND_TOLERANCE) {
            out.violations.push(BoundViolation {
                m,
                n,
                which: BoundSide::Unstable,
                measured: unstable,
                bound: b,
            });
        }
        out.pairs_checked += 1;
    }
    Ok(out)
}

/// All pairs `1 ≤ n ≤ m ≤ horizon`.
pub fn all_pairs(horizon: usize) -> Vec<(usize, usize)> {
    (1..=horizon)
        .flat_map(|m| (1..=m).map(move |n| (m, n)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_closed_form() {
        let f = BoundFamily::exponential(1.0, -(2f64.ln()), 0.0, 0.0);
        assert_relative_eq!(f.bound_a(5, 2).unwrap(), 0.125, max_relative = 1e-14);
        let g = BoundFamily::exponential(2.0, -1.0, 0.5, 0.1);
        assert_relative_eq!(
            g.bound_b(7, 3).unwrap(),
            2.0 * (-0.5 * 4.0 + 0.1 * 7.0f64).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn polynomial_shift_closed_form() {
        let f = BoundFamily::PolynomialShift {
            scale: 3.0,
            stable_rate: -2.0,
            unstable_rate: 1.5,
            nonuniformity: 0.5,
        };
        assert_relative_eq!(
            f.bound_a(9, 4).unwrap(),
            3.0 * 6f64.powf(-2.0) * 4f64.powf(0.5),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            f.bound_b(9, 4).unwrap(),
            3.0 * 6f64.powf(-1.5) * 9f64.powf(0.5),
            max_relative = 1e-14
        );
    }

    #[test]
    fn ratio_form_diagonal() {
        let f = BoundFamily::RatioForm {
            a: Sequence::exponential(1.0, -1.0),
            b: Sequence::exponential(1.0, 0.5),
            c: Sequence::OnePlusReciprocal { scale: 1.0 },
            d: Sequence::power(2.0, 0.1),
        };
        for n in 1..20 {
            assert_relative_eq!(
                f.bound_a(n, n).unwrap(),
                1.0 + 1.0 / n as f64,
                max_relative = 1e-15
            );
            assert_relative_eq!(
                f.bound_b(n, n).unwrap(),
                2.0 * (n as f64).powf(0.1),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn index_errors() {
        let f = BoundFamily::exponential(1.0, -1.0, 0.5, 0.0);
        assert_eq!(f.bound_a(2, 3), Err(BoundsError::IndexOrder { m: 2, n: 3 }));
        assert_eq!(f.bound_b(2, 0), Err(BoundsError::ZeroIndex));
    }

    #[test]
    fn table_agrees_with_parametric() {
        let families = [
            BoundFamily::exponential(1.5, -0.7, 0.4, 0.05),
            BoundFamily::PolynomialRatio {
                scale: 1.0,
                stable_rate: -2.0,
                unstable_rate: 1.0,
                nonuniformity: 0.3,
            },
            BoundFamily::GrowthRate {
                scale: 1.0,
                stable_rate: -1.0,
                unstable_rate: 1.0,
                nonuniformity: 0.2,
                mu: Sequence::Linear {
                    intercept: 1.0,
                    slope: 1.0,
                },
                nu: Sequence::Linear {
                    intercept: 1.0,
                    slope: 2.0,
                },
            },
        ];
        for f in families {
            let t = f.materialize(25);
            for (m, n) in all_pairs(25) {
                assert_eq!(t.bound_a(m, n).unwrap(), f.bound_a(m, n).unwrap());
                assert_eq!(t.bound_b(m, n).unwrap(), f.bound_b(m, n).unwrap());
            }
            assert!(matches!(
                t.bound_a(26, 1),
                Err(BoundsError::OutsideTable { .. })
            ));
        }
    }

    #[test]
    fn validate_rejects_bad_families() {
        let bad_ratio = BoundFamily::RatioForm {
            a: Sequence::constant(1.0),
            b: Sequence::constant(1.0),
            c: Sequence::constant(0.5),
            d: Sequence::constant(1.0),
        };
        assert!(bad_ratio.validate(5).is_err());
        let bad_growth = BoundFamily::GrowthRate {
            scale: 1.0,
            stable_rate: -1.0,
            unstable_rate: 1.0,
            nonuniformity: 0.1,
            mu: Sequence::exponential(2.0, 1.0),
            nu: Sequence::constant(1.0),
        };
        assert!(bad_growth.validate(5).is_err());
        assert!(BoundFamily::exponential(1.0, -1.0, 0.5, 0.1)
            .validate(50)
            .is_ok());
    }

    #[test]
    fn ratio_cocycle_satisfies_its_bounds() {
        let (a, b) = (
            Sequence::exponential(1.0, 1.0),
            Sequence::exponential(1.0, -0.5),
        );
        let c = Sequence::OnePlusReciprocal { scale: 1.0 };
        let cocycle = Cocycle::ratio_diagonal(&a, &b, &c, &c, 30).unwrap();
        let family = BoundFamily::RatioForm {
            a,
            b,
            c: c.clone(),
            d: c,
        };
        let report = validate_bounds(&cocycle, &family, &all_pairs(30)).unwrap();
        assert!(report.passed(), "{:?}", report.violations.first());
    }

    #[test]
    fn alternating_cocycle_with_constant_bound() {
        let l = 3.0;
        let cocycle = Cocycle::alternating(l, 2.0, 40).unwrap();
        let family = BoundFamily::mixed(
            BoundFamily::exponential(l, 0.0, 0.0, 0.0),
            BoundFamily::exponential(1.0, 0.0, 2f64.ln(), 0.0),
        );
        let report = validate_bounds(&cocycle, &family, &all_pairs(40)).unwrap();
        assert!(report.passed());
        // `a(m,n) = L` is attained, so the stable slack is zero up to rounding
        assert!(report.worst_stable_slack.abs() < 1e-12);

        let halved = BoundFamily::mixed(
            BoundFamily::exponential(l / 2.0, 0.0, 0.0, 0.0),
            BoundFamily::exponential(0.5, 0.0, 2f64.ln(), 0.0),
        );
        let report = validate_bounds(&cocycle, &halved, &all_pairs(40)).unwrap();
        assert!(!report.passed());
        assert!(report.worst_stable_slack < 0.0 && report.worst_unstable_slack < 0.0);
    }

    #[test]
    fn contracting_unstable_block_breaks_decaying_b() {
        // with 1/2 on the second coordinate the inverse grows like 2^{m-n}
        let cocycle = Cocycle::alternating(3.0, 0.5, 20).unwrap();
        let family = BoundFamily::mixed(
            BoundFamily::exponential(3.0, 0.0, 0.0, 0.0),
            BoundFamily::exponential(1.0, 0.0, 2f64.ln(), 0.0),
        );
        let report = validate_bounds(&cocycle, &family, &all_pairs(20)).unwrap();
        assert!(report
            .violations
            .iter()
            .all(|v| v.which == BoundSide::Unstable));
        assert_eq!(report.violations.len(), all_pairs(20).len() - 20);
    }
}
