//! Per-unit support sets and the non-overlap diagnostic.
//!
//! For each unit the grid cells are ranked by density and accumulated, after
//! per-unit normalization, until they hold at least `alpha` of that unit's
//! on-grid mass. The density of the cell that crossed `alpha` becomes the
//! unit's threshold, and every cell at or above it is supported, so ties
//! enter together. The resulting sets satisfy
//!
//!   mass{f > threshold} < alpha <= mass{f >= threshold}.

use std::io::Write;

use crate::data::InterventionGrid;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::exec;

/// Density threshold for one unit's row of grid densities, or None when the
/// row carries no mass. The returned threshold is always positive, so cells
/// of zero density are never supported.
pub(crate) fn hdr_threshold_row(density: &[f64], widths: &[f64], alpha: f64) -> Option<f64> {
    debug_assert_eq!(density.len(), widths.len());
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    let mut total = 0.0;
    for (d, w) in density.iter().zip(widths) {
        total += d * w;
    }
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..density.len()).collect();
    idx.sort_unstable_by(|&a, &b| density[b].total_cmp(&density[a]).then(a.cmp(&b)));
    let mut cum = 0.0;
    let mut last_positive = 0.0;
    for &i in &idx {
        let d = density[i];
        if d > 0.0 {
            last_positive = d;
        }
        cum += d * widths[i] / total;
        if cum >= alpha {
            return Some(d);
        }
    }
    // Rounding left cum a hair under alpha: include every positive cell.
    Some(last_positive)
}

/// Supported grid value nearest to `a` among ascending grid indices `idx`;
/// exact distance ties resolve to the smaller value.
pub(crate) fn nearest_in(values: &[f64], idx: &[usize], a: f64) -> f64 {
    debug_assert!(!idx.is_empty());
    let pos = idx.partition_point(|&i| values[i] <= a);
    if pos == 0 {
        return values[idx[0]];
    }
    if pos == idx.len() {
        return values[idx[idx.len() - 1]];
    }
    let left = values[idx[pos - 1]];
    let right = values[idx[pos]];
    if a - left <= right - a {
        left
    } else {
        right
    }
}

/// Per-unit density thresholds and the grid-by-unit support indicator.
#[derive(Debug, Clone)]
pub struct SupportProfile {
    alpha: f64,
    thresholds: Vec<f64>,
    supported: Vec<bool>, // unit-major n x m
    supported_idx: Vec<Vec<usize>>,
    grid_values: Vec<f64>,
    m: usize,
    n: usize,
}

/// Builds the support profile for every unit. Errors with the unit index if
/// some unit has zero density mass across the whole grid.
pub fn hdr_thresholds(
    dm: &DensityMatrix,
    grid: &InterventionGrid,
    alpha: f64,
) -> Result<SupportProfile> {
    if dm.m() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "density matrix has {} grid rows, grid has {}",
            dm.m(),
            grid.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "support level must lie strictly between 0 and 1, got {alpha}"
        )));
    }
    let m = dm.m();
    let n = dm.n();
    let widths = grid.cell_widths();

    let per_unit = exec::map_indexed(n, |j| {
        let col = dm.unit_column(j);
        hdr_threshold_row(col, widths, alpha).map(|thr| {
            let mut mask = Vec::with_capacity(m);
            let mut idx = Vec::new();
            for (i, &d) in col.iter().enumerate() {
                let s = d >= thr;
                mask.push(s);
                if s {
                    idx.push(i);
                }
            }
            (thr, mask, idx)
        })
    });

    let mut thresholds = Vec::with_capacity(n);
    let mut supported = Vec::with_capacity(n * m);
    let mut supported_idx = Vec::with_capacity(n);
    for (j, entry) in per_unit.into_iter().enumerate() {
        match entry {
            None => return Err(Error::ZeroDensityUnit { unit: j }),
            Some((thr, mask, idx)) => {
                thresholds.push(thr);
                supported.extend_from_slice(&mask);
                supported_idx.push(idx);
            }
        }
    }
    Ok(SupportProfile {
        alpha,
        thresholds,
        supported,
        supported_idx,
        grid_values: grid.values().to_vec(),
        m,
        n,
    })
}

impl SupportProfile {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn grid_len(&self) -> usize {
        self.m
    }

    pub fn units(&self) -> usize {
        self.n
    }

    pub fn is_supported(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.m && j < self.n);
        self.supported[j * self.m + i]
    }

    /// Ascending grid indices supported for unit `j`; never empty.
    pub fn supported_indices(&self, j: usize) -> &[usize] {
        &self.supported_idx[j]
    }

    /// tau(a_i): the fraction of units for which grid point `i` falls outside
    /// their support set. Always an exact multiple of 1/n.
    pub fn non_overlap_ratio(&self) -> Vec<f64> {
        let mut tau = Vec::with_capacity(self.m);
        for i in 0..self.m {
            let unsupported = (0..self.n)
                .filter(|&j| !self.supported[j * self.m + i])
                .count();
            tau.push(unsupported as f64 / self.n as f64);
        }
        tau
    }

    /// The value substituted for unit `j` when intervening at `a`: `a` itself
    /// while the nearest grid cell is supported, otherwise the supported grid
    /// value closest to `a` (ties toward the smaller value).
    pub fn nearest_feasible(&self, a: f64, j: usize) -> f64 {
        let pos = self.grid_values.partition_point(|&v| v <= a);
        let cell = if pos == 0 {
            0
        } else if pos == self.m {
            self.m - 1
        } else if a - self.grid_values[pos - 1] <= self.grid_values[pos] - a {
            pos - 1
        } else {
            pos
        };
        if self.is_supported(cell, j) {
            a
        } else {
            nearest_in(&self.grid_values, &self.supported_idx[j], a)
        }
    }

    /// The per-unit interventions actually applied at grid point `i`:
    /// a_i where supported, the nearest supported grid value elsewhere.
    pub fn assign_interventions(&self, i: usize) -> Vec<f64> {
        let a = self.grid_values[i];
        (0..self.n)
            .map(|j| {
                if self.is_supported(i, j) {
                    a
                } else {
                    nearest_in(&self.grid_values, &self.supported_idx[j], a)
                }
            })
            .collect()
    }
}

/// The non-overlap diagnostic curve, ready for CSV export.
#[derive(Debug, Clone)]
pub struct NonOverlapCurve {
    pub a: Vec<f64>,
    pub tau: Vec<f64>,
}

impl NonOverlapCurve {
    pub fn from_profile(grid: &InterventionGrid, profile: &SupportProfile) -> Self {
        NonOverlapCurve {
            a: grid.values().to_vec(),
            tau: profile.non_overlap_ratio(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["a", "tau"])?;
        for (a, t) in self.a.iter().zip(&self.tau) {
            wtr.write_record([a.to_string(), t.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}
