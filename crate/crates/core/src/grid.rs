//! Regular tensor grids on `[-R, R]^d` with multilinear interpolation of
//! vector-valued samples.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Points within `BOUNDARY_TOLERANCE * R` outside the box are clamped onto it.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("points per axis must be odd and at least 3, got {0}")]
    EvenResolution(usize),
    #[error("grid radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("grid dimension must be positive")]
    ZeroDimension,
    #[error("point with sup-norm {norm} lies outside the grid of radius {radius}")]
    OutOfDomain { norm: f64, radius: f64 },
    #[error("expected {expected} values, got {got}")]
    ValueCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularGrid {
    dim: usize,
    radius: f64,
    points_per_axis: usize,
}

impl RegularGrid {
    pub fn new(dim: usize, radius: f64, points_per_axis: usize) -> Result<Self, GridError> {
        if dim == 0 {
            return Err(GridError::ZeroDimension);
        }
        if points_per_axis < 3 || points_per_axis % 2 == 0 {
            return Err(GridError::EvenResolution(points_per_axis));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GridError::InvalidRadius(radius));
        }
        Ok(RegularGrid {
            dim,
            radius,
            points_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / (self.points_per_axis - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same radius with spacing halved.
    pub fn refined(&self) -> Self {
        RegularGrid {
            points_per_axis: 2 * self.points_per_axis - 1,
            ..self.clone()
        }
    }

    fn axis_value(&self, i: usize) -> f64 {
        let mid = (self.points_per_axis / 2) as isize;
        (i as isize - mid) as f64 * self.spacing()
    }

    /// Multi-index of flat index `idx`, first axis fastest.
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim);
        for _ in 0..self.dim {
            out.push(idx % self.points_per_axis);
            idx /= self.points_per_axis;
        }
        out
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .into_iter()
            .map(|i| self.axis_value(i))
            .collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Flat index of the origin.
    pub fn origin_index(&self) -> usize {
        let mid = self.points_per_axis / 2;
        (0..self.dim).fold(0, |acc, _| acc * self.points_per_axis + mid)
    }

    /// True if `x` lies in the box, up to the boundary tolerance.
    pub fn contains(&self, x: &[f64]) -> bool {
        let limit = self.radius * (1.0 + BOUNDARY_TOLERANCE);
        x.iter().all(|v| v.abs() <= limit)
    }

    /// Cells and weights of the multilinear stencil at `x`.
    fn stencil(&self, x: &[f64]) -> Result<Vec<(usize, f64)>, GridError> {
        if !self.contains(x) {
            let norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            return Err(GridError::OutOfDomain {
                norm,
                radius: self.radius,
            });
        }
        let h = self.spacing();
        let last = self.points_per_axis - 1;
        let mut lower = Vec::with_capacity(self.dim);
        let mut frac = Vec::with_capacity(self.dim);
        for v in x {
            let mut t =
                ((v.clamp(-self.radius, self.radius) + self.radius) / h).clamp(0.0, last as f64);
            // snap onto nodes so that grid points reproduce their own values exactly
            if (t - t.round()).abs() < 1e-9 {
                t = t.round();
            }
            let i = (t.floor() as usize).min(last - 1);
            lower.push(i);
            frac.push(t - i as f64);
        }
        let mut out = Vec::with_capacity(1 << self.dim);
        for corner in 0..(1usize << self.dim) {
            let mut weight = 1.0;
            let mut idx = 0;
            let mut stride = 1;
            for d in 0..self.dim {
                let up = (corner >> d) & 1 == 1;
                weight *= if up { frac[d] } else { 1.0 - frac[d] };
                idx += (lower[d] + usize::from(up)) * stride;
                stride *= self.points_per_axis;
            }
            if weight != 0.0 {
                out.push((idx, weight));
            }
        }
        Ok(out)
    }

    /// Interpolates `values` (width `width` per grid point) at `x`.
    pub fn interpolate(
        &self,
        values: &[f64],
        width: usize,
        x: &[f64],
    ) -> Result<Vec<f64>, GridError> {
        let mut out = vec![0.0; width];
        for (idx, w) in self.stencil(x)? {
            let row = &values[idx * width..(idx + 1) * width];
            for (o, v) in out.iter_mut().zip(row) {
                *o += w * v;
            }
        }
        Ok(out)
    }
}

/// Vector-valued samples on a [`RegularGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridData {
    pub grid: RegularGrid,
    pub width: usize,
    /// Row-major, `width` entries per grid point.
    pub values: Vec<f64>,
}

impl GridData {
    pub fn zeros(grid: RegularGrid, width: usize) -> Self {
        let len = grid.len() * width;
        GridData {
            grid,
            width,
            values: vec![0.0; len],
        }
    }

    pub fn from_values(
        grid: RegularGrid,
        width: usize,
        values: Vec<f64>,
    ) -> Result<Self, GridError> {
        let expected = grid.len() * width;
        if values.len() != expected {
            return Err(GridError::ValueCount {
                expected,
                got: values.len(),
            });
        }
        Ok(GridData {
            grid,
            width,
            values,
        })
    }

    pub fn tabulate(grid: RegularGrid, width: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(grid.len() * width);
        for p in grid.points() {
            values.extend(f(&p));
        }
        GridData {
            grid,
            width,
            values,
        }
    }

    pub fn at(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.width..(idx + 1) * self.width]
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, GridError> {
        self.grid.interpolate(&self.values, self.width, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn construction_rules() {
        assert!(RegularGrid::new(1, 1.0, 4).is_err());
        assert!(RegularGrid::new(1, 1.0, 1).is_err());
        assert!(RegularGrid::new(0, 1.0, 3).is_err());
        assert!(RegularGrid::new(2, 0.0, 3).is_err());
        let g = RegularGrid::new(2, 1.0, 5).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g.point(g.origin_index()), vec![0.0, 0.0]);
        assert_eq!(g.point(0), vec![-1.0, -1.0]);
        assert_eq!(g.point(24), vec![1.0, 1.0]);
        assert_eq!(g.refined().points_per_axis(), 9);
    }

    #[test]
    fn reproduces_nodes_and_affine_maps() {
        let g = RegularGrid::new(2, 2.0, 7).unwrap();
        let data = GridData::tabulate(g.clone(), 2, |p| vec![3.0 * p[0] - p[1] + 0.5, p[0] * p[1]]);
        for (i, p) in g.points().enumerate() {
            assert_eq!(data.eval(&p).unwrap(), data.at(i).to_vec());
        }
        let v = data.eval(&[0.37, -1.21]).unwrap();
        assert!((v[0] - (3.0 * 0.37 + 1.21 + 0.5)).abs() < 1e-14);
    }

    #[test]
    fn escape_is_an_error() {
        let g = RegularGrid::new(1, 1.0, 5).unwrap();
        let data = GridData::zeros(g, 1);
        assert!(data.eval(&[1.0 + 1e-12]).is_ok());
        assert!(matches!(
            data.eval(&[1.01]),
            Err(GridError::OutOfDomain { .. })
        ));
    }

    proptest! {
        #[test]
        fn interpolation_stays_within_node_range(x in -1.0f64..1.0, y in -1.0f64..1.0, seed in 0u64..1000) {
            let g = RegularGrid::new(2, 1.0, 5).unwrap();
            let data = GridData::tabulate(g, 1, |p| vec![((p[0] * 7.0 + p[1] * 3.0 + seed as f64).sin())]);
            let lo = data.values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = data.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let v = data.eval(&[x, y]).unwrap()[0];
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }
}
