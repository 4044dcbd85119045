//! Parametric real sequences indexed by time.
//!
//! Sequences feed the cocycle generators, the ratio-form bound families,
//! perturbation coefficients and ball radii. Evaluation is total: indices
//! outside a table's range yield `NaN`, which downstream checks reject as
//! non-finite.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sequence {
    /// `value` for every index.
    Constant { value: f64 },
    /// `scale * exp(rate * n)`.
    Exponential { scale: f64, rate: f64 },
    /// `scale * n^exponent`.
    Power { scale: f64, exponent: f64 },
    /// `intercept + slope * n`.
    Linear { intercept: f64, slope: f64 },
    /// `1 + scale / n`.
    OnePlusReciprocal { scale: f64 },
    /// `((n + 1) / n)^exponent`.
    RatioPower { exponent: f64 },
    /// Explicit values, `values[0]` sits at index `start`.
    Table { start: usize, values: Vec<f64> },
}

impl Sequence {
    pub fn constant(value: f64) -> Self {
        Sequence::Constant { value }
    }

    pub fn exponential(scale: f64, rate: f64) -> Self {
        Sequence::Exponential { scale, rate }
    }

    pub fn power(scale: f64, exponent: f64) -> Self {
        Sequence::Power { scale, exponent }
    }

    pub fn value(&self, n: usize) -> f64 {
        let x = n as f64;
        match self {
            Sequence::Constant { value } => *value,
            Sequence::Exponential { scale, rate } => scale * (rate * x).exp(),
            Sequence::Power { scale, exponent } => scale * x.powf(*exponent),
            Sequence::Linear { intercept, slope } => intercept + slope * x,
            Sequence::OnePlusReciprocal { scale } => 1.0 + scale / x,
            Sequence::RatioPower { exponent } => ((x + 1.0) / x).powf(*exponent),
            Sequence::Table { start, values } => n
                .checked_sub(*start)
                .and_then(|i| values.get(i).copied())
                .unwrap_or(f64::NAN),
        }
    }

    /// Values at `from..=to`.
    pub fn materialize(&self, from: usize, to: usize) -> Vec<f64> {
        (from..=to).map(|n| self.value(n)).collect()
    }

    /// True when the sequence is non-decreasing on `from..=to`.
    pub fn is_non_decreasing(&self, from: usize, to: usize) -> bool {
        let v = self.materialize(from, to);
        v.windows(2).all(|w| w[1] >= w[0])
    }
}
