//! Discrete-hazard conditional density. The observed treatment range is cut
//! into equal-mass bins; a single pooled logistic model
//!
//!   logit P(A in bin b | A beyond bin b-1, L) ~ 1 + b + b^2 + L + b*L
//!
//! gives per-bin hazards, and the density in bin b is the discrete
//! probability hazard_b * prod_{k<b} (1 - hazard_k) spread over the bin
//! width. The terminal bin's hazard is 1 by construction (a treatment that
//! survives every earlier bin must land there), which makes the bin masses
//! sum to one exactly.

use crate::data::{Dataset, HazardParams};
use crate::error::{Error, Result};
use crate::linalg::{self, Design};

#[derive(Debug, Clone)]
pub struct HazardCondDensity {
    edges: Vec<f64>,  // B + 1 ascending
    widths: Vec<f64>, // B
    coef: Vec<f64>,
    use_t: bool,
    use_t2: bool,
    q: usize,
}

/// max(10, ceil(n^(1/3))), with cube roots of perfect cubes snapped before
/// the ceiling so fp noise cannot bump the count.
fn default_bins(n: usize) -> usize {
    let c = (n as f64).cbrt();
    let r = c.round();
    let c = if (c - r).abs() < 1e-9 { r } else { c.ceil() };
    (c as usize).max(10)
}

/// Linear-interpolation sample quantile on a sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

impl HazardCondDensity {
    pub fn fit(data: &Dataset, params: &HazardParams) -> Result<Self> {
        let n = data.n();
        let q = data.q();
        let b_req = params.bins.unwrap_or_else(|| default_bins(n));

        let mut sorted = data.treatment().to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let mut edges: Vec<f64> = (0..=b_req)
            .map(|k| quantile_sorted(&sorted, k as f64 / b_req as f64))
            .collect();
        edges.dedup();
        if edges.len() < 3 {
            return Err(Error::InvalidConfig(
                "hazard binning needs at least 2 bins of distinct treatment values".into(),
            ));
        }
        let b = edges.len() - 1;
        let widths: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();

        let unit_bins: Vec<usize> = data
            .treatment()
            .iter()
            .map(|&a| bin_index(&edges, a).expect("observed treatment inside its own range"))
            .collect();

        // Pooled person-bin records, excluding the terminal bin whose hazard
        // is structurally one.
        let mut distinct = vec![false; b];
        let mut n_records = 0usize;
        for &bj in &unit_bins {
            let stop = bj.min(b - 2);
            for d in distinct.iter_mut().take(stop + 1) {
                *d = true;
            }
            n_records += stop + 1;
        }
        let n_distinct = distinct.iter().filter(|d| **d).count();
        // With a single fitted bin the index terms are constants; drop them
        // rather than hand the solver a collinear design.
        let use_t = n_distinct >= 2;
        let use_t2 = n_distinct >= 3;
        let p = 1 + use_t as usize + use_t2 as usize + q + if use_t { q } else { 0 };

        let mut x = Vec::with_capacity(n_records * p);
        let mut y = Vec::with_capacity(n_records);
        for (j, &bj) in unit_bins.iter().enumerate() {
            let l = data.confounder_row(j);
            for k in 0..=bj.min(b - 2) {
                push_covariates(&mut x, use_t, use_t2, k, l);
                y.push(if k == bj { 1.0 } else { 0.0 });
            }
        }
        let design = Design::new(x, n_records, p);
        let coef = linalg::logistic_irls(&design, &y, "pooled treatment hazard")?;

        Ok(HazardCondDensity {
            edges,
            widths,
            coef,
            use_t,
            use_t2,
            q,
        })
    }

    #[cfg(test)]
    pub(crate) fn from_parts(
        edges: Vec<f64>,
        coef: Vec<f64>,
        use_t: bool,
        use_t2: bool,
        q: usize,
    ) -> Self {
        let widths = edges.windows(2).map(|w| w[1] - w[0]).collect();
        HazardCondDensity {
            edges,
            widths,
            coef,
            use_t,
            use_t2,
            q,
        }
    }

    pub fn bins(&self) -> usize {
        self.widths.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Per-bin hazards at confounder value `l`; the terminal entry is 1.
    pub fn unit_hazards(&self, l: &[f64]) -> Vec<f64> {
        debug_assert_eq!(l.len(), self.q);
        let b = self.bins();
        let mut row = Vec::new();
        let mut hz = Vec::with_capacity(b);
        for k in 0..b - 1 {
            row.clear();
            push_covariates(&mut row, self.use_t, self.use_t2, k, l);
            hz.push(linalg::sigmoid(linalg::dot(&row, &self.coef)));
        }
        hz.push(1.0);
        hz
    }

    fn density_at_bin(hazards: &[f64], widths: &[f64], b: usize) -> f64 {
        let mut surv = 1.0;
        for &h in &hazards[..b] {
            surv *= 1.0 - h;
        }
        hazards[b] * surv / widths[b]
    }

    pub fn eval(&self, a: f64, l: &[f64]) -> f64 {
        match bin_index(&self.edges, a) {
            None => 0.0,
            Some(b) => Self::density_at_bin(&self.unit_hazards(l), &self.widths, b),
        }
    }

    pub fn column(&self, grid_values: &[f64], l: &[f64]) -> Vec<f64> {
        let hz = self.unit_hazards(l);
        grid_values
            .iter()
            .map(|&a| match bin_index(&self.edges, a) {
                None => 0.0,
                Some(b) => Self::density_at_bin(&hz, &self.widths, b),
            })
            .collect()
    }
}

fn push_covariates(out: &mut Vec<f64>, use_t: bool, use_t2: bool, bin: usize, l: &[f64]) {
    let t = (bin + 1) as f64;
    out.push(1.0);
    if use_t {
        out.push(t);
    }
    if use_t2 {
        out.push(t * t);
    }
    out.extend_from_slice(l);
    if use_t {
        for &v in l {
            out.push(t * v);
        }
    }
}

/// Index of the half-open bin [e_b, e_{b+1}) containing `a`; the last bin is
/// closed. None outside the binned range.
fn bin_index(edges: &[f64], a: f64) -> Option<usize> {
    let b = edges.len() - 1;
    if a < edges[0] || a > edges[b] {
        return None;
    }
    let pos = edges.partition_point(|&e| e <= a);
    Some((pos - 1).min(b - 1))
}
