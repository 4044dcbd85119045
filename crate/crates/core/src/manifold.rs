//! Grid-sampled graph functions `φ_n : E_n → F_n` and the sampled metric
//! `d(φ, ψ) = sup ‖φ_n(ξ) - ψ_n(ξ)‖ / ‖ξ‖`.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridData, GridError, RegularGrid};

/// Slack allowed on the discrete Lipschitz-1 check of a graph.
pub const GRAPH_LIPSCHITZ_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifoldError {
    #[error("no graph stored for time {0}")]
    MissingTime(usize),
    #[error("graph sequences have different grids at time {0}")]
    GridMismatch(usize),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("export failed: {0}")]
    Export(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFunction {
    pub time: usize,
    pub data: GridData,
}

impl GraphFunction {
    pub fn zero(time: usize, grid: RegularGrid, unstable_dim: usize) -> Self {
        GraphFunction {
            time,
            data: GridData::zeros(grid, unstable_dim),
        }
    }

    pub fn grid(&self) -> &RegularGrid {
        &self.data.grid
    }

    pub fn eval(&self, xi: &[f64]) -> Result<DVector<f64>, GridError> {
        Ok(DVector::from_vec(self.data.eval(xi)?))
    }

    pub fn value_at_origin(&self) -> &[f64] {
        self.data.at(self.grid().origin_index())
    }

    /// Largest `‖φ(ξ) - φ(ξ̄)‖ / ‖ξ - ξ̄‖` over pairs of grid points.
    ///
    /// Grids with more than 4096 points only compare neighbours along each
    /// axis and diagonal cell corners.
    pub fn discrete_lipschitz(&self) -> f64 {
        let grid = self.grid();
        let points: Vec<Vec<f64>> = grid.points().collect();
        let quotient = |i: usize, j: usize| {
            let dx: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let dy: f64 = self
                .data
                .at(i)
                .iter()
                .zip(self.data.at(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dy / dx
        };
        let mut best: f64 = 0.0;
        if points.len() <= 4096 {
            for i in 0..points.len() {
                for j in i + 1..points.len() {
                    best = best.max(quotient(i, j));
                }
            }
        } else {
            let ppa = grid.points_per_axis();
            let dim = grid.dim();
            for i in 0..points.len() {
                let mi = grid.multi_index(i);
                for corner in 1..(1usize << dim) {
                    let mut j = 0;
                    let mut stride = 1;
                    let mut inside = true;
                    for (d, v) in mi.iter().enumerate() {
                        let step = (corner >> d) & 1;
                        if v + step >= ppa {
                            inside = false;
                        }
                        j += (v + step) * stride;
                        stride *= ppa;
                    }
                    if inside {
                        best = best.max(quotient(i, j));
                    }
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifoldMetadata {
    pub iterations: usize,
    pub final_step: f64,
    pub converged: bool,
    /// Set when the solve ran without an admissible certificate.
    pub uncertified: bool,
    /// Scenario fingerprint, when produced from a scenario.
    pub fingerprint: Option<String>,
}

/// Graphs `φ_n` for `n = 1..=K+1`; `φ_{K+1}` is identically zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSequence {
    pub stable_dim: usize,
    pub unstable_dim: usize,
    pub series_horizon: usize,
    pub graphs: Vec<GraphFunction>,
    pub metadata: ManifoldMetadata,
}

impl ManifoldSequence {
    /// Zero graphs on the given per-time grids (`grids[0]` at time 1).
    pub fn zero(stable_dim: usize, unstable_dim: usize, grids: &[RegularGrid]) -> Self {
        let graphs = grids
            .iter()
            .enumerate()
            .map(|(i, g)| GraphFunction::zero(i + 1, g.clone(), unstable_dim))
            .collect::<Vec<_>>();
        ManifoldSequence {
            stable_dim,
            unstable_dim,
            series_horizon: graphs.len().saturating_sub(1),
            graphs,
            metadata: ManifoldMetadata::default(),
        }
    }

    /// Graphs tabulated from `f(n, ξ)`; the last graph is forced to zero.
    pub fn tabulate(
        stable_dim: usize,
        unstable_dim: usize,
        grids: &[RegularGrid],
        f: impl Fn(usize, &[f64]) -> Vec<f64>,
    ) -> Self {
        let mut out = Self::zero(stable_dim, unstable_dim, grids);
        let last = out.graphs.len();
        for g in out.graphs.iter_mut().take(last.saturating_sub(1)) {
            let n = g.time;
            g.data = GridData::tabulate(g.data.grid.clone(), unstable_dim, |xi| f(n, xi));
        }
        out
    }

    pub fn get(&self, n: usize) -> Result<&GraphFunction, ManifoldError> {
        n.checked_sub(1)
            .and_then(|i| self.graphs.get(i))
            .ok_or(ManifoldError::MissingTime(n))
    }

    pub fn eval(&self, n: usize, xi: &[f64]) -> Result<DVector<f64>, ManifoldError> {
        Ok(self.get(n)?.eval(xi)?)
    }

    pub fn grids(&self) -> Vec<RegularGrid> {
        self.graphs.iter().map(|g| g.grid().clone()).collect()
    }

    /// Last time with a stored graph (`K + 1`).
    pub fn last_time(&self) -> usize {
        self.graphs.len()
    }

    pub fn max_discrete_lipschitz(&self) -> f64 {
        self.graphs
            .iter()
            .map(GraphFunction::discrete_lipschitz)
            .fold(0.0, f64::max)
    }

    pub fn max_abs_at_origin(&self) -> f64 {
        self.graphs
            .iter()
            .flat_map(|g| g.value_at_origin().iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }

    /// Largest absolute difference of stored values; grids must agree.
    pub fn sup_difference(&self, other: &ManifoldSequence) -> Result<f64, ManifoldError> {
        let mut best: f64 = 0.0;
        for (a, b) in self.graphs.iter().zip(&other.graphs) {
            if a.grid() != b.grid() {
                return Err(ManifoldError::GridMismatch(a.time));
            }
            for (x, y) in a.data.values.iter().zip(&b.data.values) {
                best = best.max((x - y).abs());
            }
        }
        Ok(best)
    }

    /// Writes `n, xi_1.., phi_1..` rows for every stored grid point.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ManifoldError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["n".to_string()];
        header.extend((1..=self.stable_dim).map(|i| format!("xi_{i}")));
        header.extend((1..=self.unstable_dim).map(|i| format!("phi_{i}")));
        w.write_record(&header)
            .map_err(|e| ManifoldError::Export(e.to_string()))?;
        for g in &self.graphs {
            for (i, p) in g.grid().points().enumerate() {
                let mut row = vec![g.time.to_string()];
                row.extend(p.iter().map(|v| format_float(*v)));
                row.extend(g.data.at(i).iter().map(|v| format_float(*v)));
                w.write_record(&row)
                    .map_err(|e| ManifoldError::Export(e.to_string()))?;
            }
        }
        w.flush().map_err(|e| ManifoldError::Export(e.to_string()))
    }
}

/// Shortest representation that round-trips.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

/// Sampled metric over every stored grid point except the origin.
pub fn metric_d(phi: &ManifoldSequence, psi: &ManifoldSequence) -> Result<f64, ManifoldError> {
    let mut best: f64 = 0.0;
    for (a, b) in phi.graphs.iter().zip(&psi.graphs) {
        if a.grid() != b.grid() {
            return Err(ManifoldError::GridMismatch(a.time));
        }
        for (i, p) in a.grid().points().enumerate() {
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let diff = a
                .data
                .at(i)
                .iter()
                .zip(b.data.at(i))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            best = best.max(diff / norm);
        }
    }
    Ok(best)
}

/// Sampled metric at explicit `(n, ξ)` points, interpolating off-grid.
pub fn metric_d_on(
    phi: &ManifoldSequence,
    psi: &ManifoldSequence,
    sample: &[(usize, Vec<f64>)],
) -> Result<f64, ManifoldError> {
    let mut best: f64 = 0.0;
    for (n, xi) in sample {
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let diff = (phi.eval(*n, xi)? - psi.eval(*n, xi)?).norm();
        best = best.max(diff / norm);
    }
    Ok(best)
}
