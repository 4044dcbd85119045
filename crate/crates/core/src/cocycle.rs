//! Block-diagonal linear cocycles `x_{m+1} = A_m x_m` with a fixed
//! coordinate splitting `X = E ⊕ F`.
//!
//! The stable space `E` is spanned by the first `stable_dim` coordinates and
//! the unstable space `F` by the remaining `unstable_dim` ones, for every
//! time. Each step map is stored as a pair of square blocks. The norm on `X`
//! is the sum norm `‖(x, y)‖ = ‖x‖₂ + ‖y‖₂`.
//!
//! Time indices are 1-based. A cocycle materializes `A_1, …, A_N` where
//! `N` is its horizon; `transition(m, n)` is defined for `1 ≤ n ≤ m ≤ N`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::sequence::Sequence;

/// Condition number above which an unstable block is treated as singular.
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CocycleError {
    #[error("time indices start at 1")]
    ZeroIndex,
    #[error("index order violated: m = {m} < n = {n}")]
    IndexOrder { m: usize, n: usize },
    #[error("time {m} exceeds the cocycle horizon {horizon}")]
    HorizonExceeded { m: usize, horizon: usize },
    #[error("unstable block at time {time} is singular (condition number {condition:e})")]
    SingularBlock { time: usize, condition: f64 },
    #[error("block at time {time} has the wrong shape (expected {stable}x{stable} and {unstable}x{unstable})")]
    DimensionMismatch {
        time: usize,
        stable: usize,
        unstable: usize,
    },
    #[error("block at time {time} contains a non-finite entry")]
    NonFinite { time: usize },
    #[error("cocycle needs at least one step block")]
    Empty,
}

/// A point of `E ⊕ F`, stored as its two components.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub stable: DVector<f64>,
    pub unstable: DVector<f64>,
}

impl StateVector {
    pub fn new(stable: DVector<f64>, unstable: DVector<f64>) -> Self {
        Self { stable, unstable }
    }

    pub fn from_slices(stable: &[f64], unstable: &[f64]) -> Self {
        Self::new(
            DVector::from_column_slice(stable),
            DVector::from_column_slice(unstable),
        )
    }

    pub fn zeros(stable_dim: usize, unstable_dim: usize) -> Self {
        Self::new(DVector::zeros(stable_dim), DVector::zeros(unstable_dim))
    }

    /// Sum norm `‖x‖₂ + ‖y‖₂`.
    pub fn norm(&self) -> f64 {
        self.stable.norm() + self.unstable.norm()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(&self.stable * factor, &self.unstable * factor)
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        StateVector::new(
            &self.stable - &other.stable,
            &self.unstable - &other.unstable,
        )
    }

    pub fn add(&self, other: &StateVector) -> StateVector {
        StateVector::new(
            &self.stable + &other.stable,
            &self.unstable + &other.unstable,
        )
    }

    /// `P v = (x, 0)`.
    pub fn project_stable(&self) -> StateVector {
        StateVector::new(self.stable.clone(), DVector::zeros(self.unstable.len()))
    }

    /// `Q v = (0, y)`.
    pub fn project_unstable(&self) -> StateVector {
        StateVector::new(DVector::zeros(self.stable.len()), self.unstable.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.stable
            .iter()
            .chain(self.unstable.iter())
            .all(|v| *v == 0.0)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.stable.len(), self.unstable.len())
    }
}

/// A linear map of `E ⊕ F` that preserves both components.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLinearMap {
    pub stable: DMatrix<f64>,
    pub unstable: DMatrix<f64>,
}

impl BlockLinearMap {
    pub fn new(stable: DMatrix<f64>, unstable: DMatrix<f64>) -> Self {
        Self { stable, unstable }
    }

    pub fn identity(stable_dim: usize, unstable_dim: usize) -> Self {
        Self::new(
            DMatrix::identity(stable_dim, stable_dim),
            DMatrix::identity(unstable_dim, unstable_dim),
        )
    }

    pub fn diagonal(stable: &[f64], unstable: &[f64]) -> Self {
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(stable)),
            DMatrix::from_diagonal(&DVector::from_column_slice(unstable)),
        )
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &BlockLinearMap) -> BlockLinearMap {
        BlockLinearMap::new(&self.stable * &rhs.stable, &self.unstable * &rhs.unstable)
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        StateVector::new(&self.stable * &v.stable, &self.unstable * &v.unstable)
    }

    /// Operator norm of `A P` for the sum norm, i.e. the spectral norm of the
    /// stable block.
    pub fn stable_norm(&self) -> f64 {
        spectral_norm(&self.stable)
    }

    pub fn unstable_condition(&self) -> f64 {
        condition_number(&self.unstable)
    }

    /// The full `(d_E + d_F)`-square matrix.
    pub fn to_full(&self) -> DMatrix<f64> {
        let (de, df) = (self.stable.nrows(), self.unstable.nrows());
        let mut full = DMatrix::zeros(de + df, de + df);
        full.view_mut((0, 0), (de, de)).copy_from(&self.stable);
        full.view_mut((de, de), (df, df)).copy_from(&self.unstable);
        full
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].abs();
    }
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Ratio of extreme singular values; `inf` for a singular matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        let v = m[(0, 0)].abs();
        return if v == 0.0 { f64::INFINITY } else { 1.0 };
    }
    let sv = m.clone().singular_values();
    let (max, min) = (sv.max(), sv.min());
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Induced `∞`-norm (maximum absolute row sum).
pub fn infinity_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct Cocycle {
    stable_dim: usize,
    unstable_dim: usize,
    maps: Vec<BlockLinearMap>,
    unstable_inverses: Vec<Option<DMatrix<f64>>>,
    unstable_conditions: Vec<f64>,
    condition_cap: f64,
}

impl Cocycle {
    /// Materializes `A_n = generator(n)` for `n = 1..=horizon`.
    pub fn from_fn<G>(
        stable_dim: usize,
        unstable_dim: usize,
        horizon: usize,
        generator: G,
    ) -> Result<Self, CocycleError>
    where
        G: Fn(usize) -> BlockLinearMap,
    {
        let maps = (1..=horizon).map(generator).collect();
        Self::from_maps(stable_dim, unstable_dim, maps)
    }

    /// `maps[0]` is `A_1`.
    pub fn from_maps(
        stable_dim: usize,
        unstable_dim: usize,
        maps: Vec<BlockLinearMap>,
    ) -> Result<Self, CocycleError> {
        if maps.is_empty() {
            return Err(CocycleError::Empty);
        }
        let mut unstable_inverses = Vec::with_capacity(maps.len());
        let mut unstable_conditions = Vec::with_capacity(maps.len());
        for (i, map) in maps.iter().enumerate() {
            let time = i + 1;
            if map.stable.shape() != (stable_dim, stable_dim)
                || map.unstable.shape() != (unstable_dim, unstable_dim)
            {
                return Err(CocycleError::DimensionMismatch {
                    time,
                    stable: stable_dim,
                    unstable: unstable_dim,
                });
            }
            if map
                .stable
                .iter()
                .chain(map.unstable.iter())
                .any(|v| !v.is_finite())
            {
                return Err(CocycleError::NonFinite { time });
            }
            let condition = map.unstable_condition();
            unstable_conditions.push(condition);
            unstable_inverses.push(map.unstable.clone().try_inverse());
        }
        Ok(Self {
            stable_dim,
            unstable_dim,
            maps,
            unstable_inverses,
            unstable_conditions,
            condition_cap: DEFAULT_CONDITION_CAP,
        })
    }

    /// `A_n = diag(stable_i(n)) ⊕ diag(unstable_j(n))`.
    pub fn diagonal(
        stable: &[Sequence],
        unstable: &[Sequence],
        horizon: usize,
    ) -> Result<Self, CocycleError> {
        Self::from_fn(stable.len(), unstable.len(), horizon, |n| {
            let s: Vec<f64> = stable.iter().map(|q| q.value(n)).collect();
            let u: Vec<f64> = unstable.iter().map(|q| q.value(n)).collect();
            BlockLinearMap::diagonal(&s, &u)
        })
    }

    /// Planar diagonal cocycle built from four positive sequences so that
    /// `‖𝒜_{m,n} P_n‖ ≤ (a_n / a_m) c_n` and
    /// `‖(𝒜_{m,n}|_F)^{-1} Q_m‖ ≤ (b_n / b_m) d_m` whenever `c, d ≥ 1`.
    pub fn ratio_diagonal(
        a: &Sequence,
        b: &Sequence,
        c: &Sequence,
        d: &Sequence,
        horizon: usize,
    ) -> Result<Self, CocycleError> {
        Self::from_fn(1, 1, horizon, |n| {
            let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
            let stable = a.value(n) / a.value(n + 1)
                * (c.value(n).powf(1.0 - parity) / c.value(n + 1).powf(1.0 + parity)).sqrt();
            let unstable = b.value(n + 1) / b.value(n)
                * (d.value(n).powf(1.0 - parity) / d.value(n + 1).powf(1.0 + parity)).sqrt();
            BlockLinearMap::diagonal(&[stable], &[unstable])
        })
    }

    /// `A_n = diag(factor^{(-1)^n}, unstable)`.
    pub fn alternating(factor: f64, unstable: f64, horizon: usize) -> Result<Self, CocycleError> {
        Self::from_fn(1, 1, horizon, |n| {
            let s = if n % 2 == 0 { factor } else { 1.0 / factor };
            BlockLinearMap::diagonal(&[s], &[unstable])
        })
    }

    /// Repeats `blocks` periodically: `A_n = blocks[(n - 1) % len]`.
    pub fn periodic(blocks: &[BlockLinearMap], horizon: usize) -> Result<Self, CocycleError> {
        let first = blocks.first().ok_or(CocycleError::Empty)?;
        let (de, df) = (first.stable.nrows(), first.unstable.nrows());
        let maps = (0..horizon)
            .map(|i| blocks[i % blocks.len()].clone())
            .collect();
        Self::from_maps(de, df, maps)
    }

    pub fn with_condition_cap(mut self, cap: f64) -> Self {
        self.condition_cap = cap;
        self
    }

    pub fn stable_dim(&self) -> usize {
        self.stable_dim
    }

    pub fn unstable_dim(&self) -> usize {
        self.unstable_dim
    }

    pub fn horizon(&self) -> usize {
        self.maps.len()
    }

    fn check_time(&self, n: usize) -> Result<(), CocycleError> {
        if n == 0 {
            return Err(CocycleError::ZeroIndex);
        }
        if n > self.horizon() {
            return Err(CocycleError::HorizonExceeded {
                m: n,
                horizon: self.horizon(),
            });
        }
        Ok(())
    }

    fn check_pair(&self, m: usize, n: usize) -> Result<(), CocycleError> {
        if n == 0 || m == 0 {
            return Err(CocycleError::ZeroIndex);
        }
        if m < n {
            return Err(CocycleError::IndexOrder { m, n });
        }
        self.check_time(m)
    }

    /// The step map `A_n`.
    pub fn step(&self, n: usize) -> Result<&BlockLinearMap, CocycleError> {
        self.check_time(n)?;
        Ok(&self.maps[n - 1])
    }

    /// `(A_n|_F)^{-1}`, subject to the condition-number cap.
    pub fn unstable_step_inverse(&self, n: usize) -> Result<&DMatrix<f64>, CocycleError> {
        self.check_time(n)?;
        let condition = self.unstable_conditions[n - 1];
        match &self.unstable_inverses[n - 1] {
            Some(inv) if condition <= self.condition_cap => Ok(inv),
            _ => Err(CocycleError::SingularBlock { time: n, condition }),
        }
    }

    /// `𝒜_{m,n} = A_{m-1} ⋯ A_n`, the identity when `m = n`.
    pub fn transition(&self, m: usize, n: usize) -> Result<BlockLinearMap, CocycleError> {
        self.check_pair(m, n)?;
        let mut acc = BlockLinearMap::identity(self.stable_dim, self.unstable_dim);
        for k in n..m {
            acc = self.maps[k - 1].compose(&acc);
        }
        Ok(acc)
    }

    /// `(𝒜_{m,n}|_{F_n})^{-1} = (A_n|_F)^{-1} ⋯ (A_{m-1}|_F)^{-1}`.
    pub fn inverse_on_unstable(&self, m: usize, n: usize) -> Result<DMatrix<f64>, CocycleError> {
        self.check_pair(m, n)?;
        let mut acc = DMatrix::identity(self.unstable_dim, self.unstable_dim);
        for k in n..m {
            acc *= self.unstable_step_inverse(k)?;
        }
        Ok(acc)
    }

    /// Checks the invariant-splitting conditions on a sample of pairs.
    pub fn verify_splitting(&self, pairs: &[(usize, usize)]) -> SplittingReport {
        let de = self.stable_dim;
        let dim = de + self.unstable_dim;
        let mut projection = DMatrix::zeros(dim, dim);
        projection.view_mut((0, 0), (de, de)).fill_with_identity();
        let complement = DMatrix::identity(dim, dim) - &projection;

        let mut report = SplittingReport::default();
        for &(m, n) in pairs {
            let transition = match self.transition(m, n) {
                Ok(t) => t,
                Err(e) => {
                    report.failures.push(SplittingFailure {
                        m,
                        n,
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            let full = transition.to_full();
            let commutation = (&projection * &full - &full * &projection).norm();
            let range = (&projection * &full * &complement).norm();
            report.commutation_residual = report.commutation_residual.max(commutation);
            report.range_residual = report.range_residual.max(range);
            match self.inverse_on_unstable(m, n) {
                Ok(inv) => {
                    let eye = DMatrix::<f64>::identity(self.unstable_dim, self.unstable_dim);
                    let r = (&inv * &transition.unstable - eye).norm();
                    report.inverse_residual = report.inverse_residual.max(r);
                }
                Err(e) => report.failures.push(SplittingFailure {
                    m,
                    n,
                    reason: e.to_string(),
                }),
            }
            report.pairs_checked += 1;
        }
        report
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingFailure {
    pub m: usize,
    pub n: usize,
    pub reason: String,
}

/// Maximum residuals of the commutation, range and invertibility conditions.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SplittingReport {
    pub pairs_checked: usize,
    pub commutation_residual: f64,
    pub range_residual: f64,
    pub inverse_residual: f64,
    pub failures: Vec<SplittingFailure>,
}

impl SplittingReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.failures.is_empty()
            && self.commutation_residual <= tolerance
            && self.range_residual <= tolerance
            && self.inverse_residual <= tolerance
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_cocycle(stable: &[f64], unstable: &[f64]) -> Cocycle {
        let maps = stable
            .iter()
            .zip(unstable)
            .map(|(s, u)| BlockLinearMap::diagonal(&[*s], &[*u]))
            .collect();
        Cocycle::from_maps(1, 1, maps).unwrap()
    }

    #[test]
    fn transition_identity_when_equal_times() {
        let c = Cocycle::alternating(3.0, 0.5, 10).unwrap();
        let t = c.transition(5, 5).unwrap();
        assert_eq!(t, BlockLinearMap::identity(1, 1));
    }

    #[test]
    fn transition_multiplies_steps() {
        let c = scalar_cocycle(&[2.0, 3.0, 5.0, 7.0], &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(c.transition(4, 1).unwrap().stable[(0, 0)], 30.0);
    }

    #[test]
    fn transition_errors() {
        let c = Cocycle::alternating(3.0, 0.5, 10).unwrap();
        assert_eq!(
            c.transition(2, 3),
            Err(CocycleError::IndexOrder { m: 2, n: 3 })
        );
        assert_eq!(
            c.transition(11, 3),
            Err(CocycleError::HorizonExceeded { m: 11, horizon: 10 })
        );
        assert_eq!(c.transition(3, 0), Err(CocycleError::ZeroIndex));
    }

    #[test]
    fn projections_are_complementary() {
        let v = StateVector::from_slices(&[1.0, -2.0], &[3.0]);
        let p = v.project_stable();
        let q = v.project_unstable();
        assert_eq!(p.add(&q), v);
        assert_eq!(p.project_stable(), p);
        assert!(v.project_unstable().project_stable().is_zero());
        assert_eq!(v.norm(), 5f64.sqrt() + 3.0);
    }

    #[test]
    fn inverse_on_unstable_scalar_half() {
        let c = Cocycle::alternating(3.0, 0.5, 30).unwrap();
        assert_eq!(c.inverse_on_unstable(4, 4).unwrap()[(0, 0)], 1.0);
        for (m, n) in [(5, 1), (20, 3), (30, 30), (29, 10)] {
            let inv = c.inverse_on_unstable(m, n).unwrap()[(0, 0)];
            assert_relative_eq!(inv, 2f64.powi((m - n) as i32), max_relative = 1e-14);
        }
    }

    #[test]
    fn singular_block_is_reported() {
        let c = scalar_cocycle(&[1.0, 1.0, 1.0], &[2.0, 0.0, 2.0]);
        assert!(c.inverse_on_unstable(2, 1).is_ok());
        assert!(matches!(
            c.inverse_on_unstable(3, 1),
            Err(CocycleError::SingularBlock { time: 2, .. })
        ));
        let report = c.verify_splitting(&[(2, 1), (3, 1), (3, 2)]);
        assert_eq!(report.failures.len(), 2);
        assert!(!report.passed(1e-12));
    }

    #[test]
    fn ill_conditioned_block_hits_cap() {
        let block = BlockLinearMap::new(
            DMatrix::identity(1, 1),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-14]),
        );
        let c = Cocycle::periodic(&[block], 3).unwrap();
        assert!(matches!(
            c.unstable_step_inverse(1),
            Err(CocycleError::SingularBlock { .. })
        ));
        let relaxed = c.with_condition_cap(1e15);
        assert!(relaxed.unstable_step_inverse(1).is_ok());
    }

    #[test]
    fn block_diagonal_splitting_is_exact() {
        let block = BlockLinearMap::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]),
            DMatrix::from_row_slice(1, 1, &[2.0]),
        );
        let c = Cocycle::periodic(&[block], 12).unwrap();
        let pairs: Vec<_> = (1..=12)
            .flat_map(|m| (1..=m).map(move |n| (m, n)))
            .collect();
        let report = c.verify_splitting(&pairs);
        assert_eq!(report.commutation_residual, 0.0);
        assert_eq!(report.range_residual, 0.0);
        assert!(report.passed(1e-10));
    }

    #[test]
    fn cocycle_law_on_generic_blocks() {
        let blocks = [
            BlockLinearMap::new(
                DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]),
                DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.0, 1.5]),
            ),
            BlockLinearMap::new(
                DMatrix::from_row_slice(2, 2, &[0.9, -0.3, 0.4, 0.2]),
                DMatrix::from_row_slice(2, 2, &[1.1, -0.4, 0.3, 2.2]),
            ),
        ];
        let c = Cocycle::periodic(&blocks, 15).unwrap();
        for n in 1..=15 {
            for k in n..=15 {
                for m in k..=15 {
                    let lhs = c
                        .transition(m, k)
                        .unwrap()
                        .compose(&c.transition(k, n).unwrap());
                    let rhs = c.transition(m, n).unwrap();
                    let scale = rhs.stable.norm().max(rhs.unstable.norm()).max(1e-300);
                    let err =
                        (lhs.stable - &rhs.stable).norm() + (lhs.unstable - &rhs.unstable).norm();
                    assert!(err <= 1e-12 * scale, "cocycle law at ({m},{k},{n}): {err}");
                }
                let inv = c.inverse_on_unstable(k, n).unwrap();
                let fwd = c.transition(k, n).unwrap().unstable;
                let eye = DMatrix::<f64>::identity(2, 2);
                assert!((inv * fwd - eye).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn stable_norm_is_spectral() {
        let m = BlockLinearMap::new(
            DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -4.0]),
            DMatrix::identity(1, 1),
        );
        assert_relative_eq!(m.stable_norm(), 4.0, max_relative = 1e-14);
    }
}
