//! Conditional treatment density estimation.
//!
//! Everything downstream (support sets, non-overlap ratios, the weighted
//! curve) consumes densities through two entry points: pointwise evaluation
//! and the grid-by-unit `DensityMatrix`. The matrix is filled per unit so the
//! work parallelizes over columns, and the per-unit fast paths reuse exactly
//! the arithmetic of `eval`, keeping the two bitwise interchangeable.

mod gaussian;
mod hazard;
mod kernel;

pub use gaussian::GaussianCondDensity;
pub use hazard::HazardCondDensity;
pub use kernel::KernelCondDensity;

use std::io::Write;

use crate::data::{Dataset, DensityConfig, InterventionGrid};
use crate::error::Result;
use crate::exec;

/// A fitted conditional density f(a | l), one of three estimators.
#[derive(Debug, Clone)]
pub enum CondDensityModel {
    Gaussian(GaussianCondDensity),
    Kernel(KernelCondDensity),
    Hazard(HazardCondDensity),
}

impl CondDensityModel {
    pub fn fit(data: &Dataset, spec: &DensityConfig) -> Result<Self> {
        match spec {
            DensityConfig::Gaussian => {
                Ok(CondDensityModel::Gaussian(GaussianCondDensity::fit(data)?))
            }
            DensityConfig::Kernel(p) => {
                Ok(CondDensityModel::Kernel(KernelCondDensity::fit(data, p)?))
            }
            DensityConfig::Hazard(p) => {
                Ok(CondDensityModel::Hazard(HazardCondDensity::fit(data, p)?))
            }
        }
    }

    /// Density of treatment `a` given confounders `l`. Non-negative; zero
    /// outside the support of the hazard binning.
    pub fn eval(&self, a: f64, l: &[f64]) -> f64 {
        match self {
            CondDensityModel::Gaussian(m) => m.eval(a, l),
            CondDensityModel::Kernel(m) => m.eval(a, l),
            CondDensityModel::Hazard(m) => m.eval(a, l),
        }
    }

    /// One unit's density over a whole grid, bitwise equal to calling `eval`
    /// per point but cheaper for the kernel and hazard models.
    pub fn column(&self, grid_values: &[f64], l: &[f64]) -> Vec<f64> {
        match self {
            CondDensityModel::Gaussian(m) => grid_values.iter().map(|&a| m.eval(a, l)).collect(),
            CondDensityModel::Kernel(m) => m.column(grid_values, l),
            CondDensityModel::Hazard(m) => m.column(grid_values, l),
        }
    }

    /// Marginal density f(a) as the equal-weight mixture of the fitted
    /// conditionals across the observed confounder rows.
    pub fn eval_marginal(&self, a: f64, data: &Dataset) -> f64 {
        let mut sum = 0.0;
        for j in 0..data.n() {
            sum += self.eval(a, data.confounder_row(j));
        }
        sum / data.n() as f64
    }
}

/// Grid-by-unit density evaluations: entry (i, j) = f(a_i | l_j).
/// Stored unit-major so per-unit scans are contiguous.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    values: Vec<f64>,
    m: usize,
    n: usize,
}

impl DensityMatrix {
    pub fn evaluate(model: &CondDensityModel, grid: &InterventionGrid, data: &Dataset) -> Self {
        let m = grid.len();
        let n = data.n();
        let cols = exec::map_indexed(n, |j| model.column(grid.values(), data.confounder_row(j)));
        let mut values = Vec::with_capacity(m * n);
        for c in cols {
            values.extend_from_slice(&c);
        }
        DensityMatrix { values, m, n }
    }

    /// Builds a matrix from an arbitrary density function; used by the
    /// simulation oracle and by tests that need hand-picked densities.
    pub fn from_fn<F: Fn(usize, usize) -> f64>(m: usize, n: usize, f: F) -> Self {
        let mut values = Vec::with_capacity(m * n);
        for j in 0..n {
            for i in 0..m {
                values.push(f(i, j));
            }
        }
        DensityMatrix { values, m, n }
    }

    /// Grid points.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Units.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.m && j < self.n);
        self.values[j * self.m + i]
    }

    pub fn unit_column(&self, j: usize) -> &[f64] {
        &self.values[j * self.m..(j + 1) * self.m]
    }

    /// Mean over units at grid point `i`, i.e. the mixture marginal f(a_i).
    pub fn row_mean(&self, i: usize) -> f64 {
        let mut sum = 0.0;
        for j in 0..self.n {
            sum += self.values[j * self.m + i];
        }
        sum / self.n as f64
    }

    /// One row per grid point: a, then one column per unit.
    pub fn write_csv<W: Write>(&self, grid: &InterventionGrid, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["a".to_string()];
        header.extend((1..=self.n).map(|j| format!("unit_{j}")));
        wtr.write_record(&header)?;
        for i in 0..self.m {
            let mut record = vec![grid.values()[i].to_string()];
            record.extend((0..self.n).map(|j| self.entry(i, j).to_string()));
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }
}
