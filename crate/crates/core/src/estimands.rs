//! Plug-in estimation of the dose-response curves and bootstrap bands.
//!
//! Every curve is an average of outcome-model predictions over the observed
//! confounders; they differ only in which treatment value each unit is
//! evaluated at and which units enter the average. At any grid point where
//! every unit is supported the standard, feasible, and trimming sums
//! accumulate the same predictions in the same unit order, so those three
//! estimates agree bit for bit, not merely within tolerance.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, InterventionGrid, RunConfig};
use crate::density::{CondDensityModel, DensityMatrix};
use crate::error::{Error, Result};
use crate::exec;
use crate::outcome::OutcomeModel;
use crate::support::{hdr_thresholds, SupportProfile};

/// Per-curve lower and upper percentile bands from the bootstrap.
#[derive(Debug, Clone)]
pub struct Bands {
    pub standard: (Vec<f64>, Vec<f64>),
    pub feasible: (Vec<f64>, Vec<f64>),
    pub trimming: (Vec<Option<f64>>, Vec<Option<f64>>),
    pub weighted: Option<(Vec<f64>, Vec<f64>)>,
}

/// Point estimates of every requested curve on the grid, plus the
/// non-overlap diagnostic and optional bootstrap bands.
#[derive(Debug, Clone)]
pub struct CurveSet {
    pub a: Vec<f64>,
    pub tau: Vec<f64>,
    pub standard: Vec<f64>,
    pub feasible: Vec<f64>,
    /// None exactly where no unit is supported (tau = 1).
    pub trimming: Vec<Option<f64>>,
    pub weighted: Option<Vec<f64>>,
    pub bands: Option<Bands>,
}

/// The g-computation plug-in for all curves at once.
///
/// Per grid point a_i, with predictions p_j = predict(a_i, l_j):
/// standard averages p_j over all units; feasible replaces p_j by the
/// prediction at the unit's nearest supported grid value when a_i falls
/// outside its support; trimming averages p_j over supported units only;
/// weighted (when a cutoff c is given) downweights unit j by
/// f(a_i|l_j)/f(a_i) wherever the conditional density sits at or below c.
pub fn plugin_curves(
    data: &Dataset,
    grid: &InterventionGrid,
    dm: &DensityMatrix,
    profile: &SupportProfile,
    model: &OutcomeModel,
    weighted_cutoff: Option<f64>,
) -> Result<CurveSet> {
    let m = grid.len();
    let n = data.n();
    if dm.m() != m || profile.grid_len() != m {
        return Err(Error::DimensionMismatch(format!(
            "grid has {m} points, density matrix {}, support profile {}",
            dm.m(),
            profile.grid_len()
        )));
    }
    if dm.n() != n || profile.units() != n {
        return Err(Error::DimensionMismatch(format!(
            "data has {n} units, density matrix {}, support profile {}",
            dm.n(),
            profile.units()
        )));
    }

    let per_point = exec::map_indexed(m, |i| {
        let a = grid.values()[i];
        let marginal = if weighted_cutoff.is_some() {
            dm.row_mean(i)
        } else {
            0.0
        };
        let mut s_std = 0.0;
        let mut s_feas = 0.0;
        let mut s_trim = 0.0;
        let mut supported = 0usize;
        let mut s_w = 0.0;
        for j in 0..n {
            let l = data.confounder_row(j);
            let p_std = model.predict(a, l);
            s_std += p_std;
            if profile.is_supported(i, j) {
                // Reusing p_std keeps the three sums bitwise identical at
                // fully supported points.
                s_feas += p_std;
                s_trim += p_std;
                supported += 1;
            } else {
                let d = profile.nearest_feasible(a, j);
                s_feas += model.predict(d, l);
            }
            if let Some(c) = weighted_cutoff {
                let f = dm.entry(i, j);
                let w = if f > c {
                    1.0
                } else if f == 0.0 {
                    0.0
                } else {
                    f / marginal
                };
                s_w += p_std * w;
            }
        }
        let nf = n as f64;
        let trimming = if supported == 0 {
            None
        } else {
            Some(s_trim / supported as f64)
        };
        (s_std / nf, s_feas / nf, trimming, s_w / nf)
    });

    let mut standard = Vec::with_capacity(m);
    let mut feasible = Vec::with_capacity(m);
    let mut trimming = Vec::with_capacity(m);
    let mut weighted = weighted_cutoff.map(|_| Vec::with_capacity(m));
    for (s, f, t, w) in per_point {
        standard.push(s);
        feasible.push(f);
        trimming.push(t);
        if let Some(wv) = weighted.as_mut() {
            wv.push(w);
        }
    }
    Ok(CurveSet {
        a: grid.values().to_vec(),
        tau: profile.non_overlap_ratio(),
        standard,
        feasible,
        trimming,
        weighted,
        bands: None,
    })
}

/// Fits density on `rule_data`, applies the resulting support rule to
/// `est_data`, fits the outcome model on `est_data`, and averages the
/// plug-in over `est_data`. The two datasets coincide except in split mode.
fn run_pipeline(
    rule_data: &Dataset,
    est_data: &Dataset,
    config: &RunConfig,
    grid: &InterventionGrid,
) -> Result<CurveSet> {
    let density = CondDensityModel::fit(rule_data, &config.density)?;
    let dm = DensityMatrix::evaluate(&density, grid, est_data);
    let profile = hdr_thresholds(&dm, grid, config.support_level)?;
    let model = OutcomeModel::fit(est_data, config.outcome)?;
    plugin_curves(
        est_data,
        grid,
        &dm,
        &profile,
        &model,
        config.weighted_cutoff,
    )
}

struct Replicate {
    standard: Vec<f64>,
    feasible: Vec<f64>,
    trimming: Vec<Option<f64>>,
    weighted: Option<Vec<f64>>,
}

/// Empirical percentile bands over B row resamples. Replicate r draws from a
/// generator seeded with `seed + r`, so bands are reproducible and replicates
/// may run in parallel; merging follows replicate index order. A replicate
/// whose refit degenerates (singular design, lost support, separation) is
/// recorded as failed; more than 10% failures aborts.
pub fn bootstrap_curves(
    data: &Dataset,
    config: &RunConfig,
    grid: &InterventionGrid,
) -> Result<(Bands, Vec<usize>)> {
    let b = config.bootstrap.b;
    debug_assert!(b >= 1);
    let n = data.n();
    let seed = config.bootstrap.seed;
    let split = config.bootstrap.split;

    let reps = exec::map_indexed(b, |r| -> Result<Replicate> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let resample = data.subset(&rows);
        let curves = if split {
            let half = n.div_ceil(2);
            let rule = resample.subset(&(0..half).collect::<Vec<_>>());
            let est = resample.subset(&(half..n).collect::<Vec<_>>());
            run_pipeline(&rule, &est, config, grid)?
        } else {
            run_pipeline(&resample, &resample, config, grid)?
        };
        Ok(Replicate {
            standard: curves.standard,
            feasible: curves.feasible,
            trimming: curves.trimming,
            weighted: curves.weighted,
        })
    });

    let mut ok = Vec::with_capacity(b);
    let mut failed = Vec::new();
    let mut first_failure: Option<String> = None;
    for (r, rep) in reps.into_iter().enumerate() {
        match rep {
            Ok(rep) => ok.push(rep),
            Err(e) => {
                failed.push(r);
                if first_failure.is_none() {
                    first_failure = Some(e.to_string());
                }
            }
        }
    }
    if failed.len() * 10 > b {
        return Err(Error::BootstrapFailures {
            failed: failed.len(),
            total: b,
            first: first_failure.unwrap_or_default(),
        });
    }

    let m = grid.len();
    let with_weighted = config.weighted_cutoff.is_some();
    let mut bands = Bands {
        standard: (Vec::with_capacity(m), Vec::with_capacity(m)),
        feasible: (Vec::with_capacity(m), Vec::with_capacity(m)),
        trimming: (Vec::with_capacity(m), Vec::with_capacity(m)),
        weighted: if with_weighted {
            Some((Vec::with_capacity(m), Vec::with_capacity(m)))
        } else {
            None
        },
    };
    let mut buf = Vec::with_capacity(ok.len());
    for i in 0..m {
        buf.clear();
        buf.extend(ok.iter().map(|r| r.standard[i]));
        let (lo, hi) = percentile_band(&mut buf);
        bands.standard.0.push(lo);
        bands.standard.1.push(hi);

        buf.clear();
        buf.extend(ok.iter().map(|r| r.feasible[i]));
        let (lo, hi) = percentile_band(&mut buf);
        bands.feasible.0.push(lo);
        bands.feasible.1.push(hi);

        buf.clear();
        buf.extend(ok.iter().filter_map(|r| r.trimming[i]));
        if buf.is_empty() {
            bands.trimming.0.push(None);
            bands.trimming.1.push(None);
        } else {
            let (lo, hi) = percentile_band(&mut buf);
            bands.trimming.0.push(Some(lo));
            bands.trimming.1.push(Some(hi));
        }

        if let Some(w) = bands.weighted.as_mut() {
            buf.clear();
            buf.extend(
                ok.iter()
                    .map(|r| r.weighted.as_ref().expect("weighted replicate")[i]),
            );
            let (lo, hi) = percentile_band(&mut buf);
            w.0.push(lo);
            w.1.push(hi);
        }
    }
    Ok((bands, failed))
}

/// 2.5% and 97.5% empirical quantiles with linear interpolation.
fn percentile_band(values: &mut [f64]) -> (f64, f64) {
    values.sort_unstable_by(f64::total_cmp);
    (percentile(values, 0.025), percentile(values, 0.975))
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[sorted.len() - 1]
    }
}

/// A full estimation run: point estimates from the whole sample, then
/// optional bootstrap bands.
#[derive(Debug)]
pub struct EstimationResult {
    pub curves: CurveSet,
    pub model: OutcomeModel,
    /// Indices of bootstrap replicates whose refit degenerated.
    pub failed_replicates: Vec<usize>,
}

pub fn estimate_curves(data: &Dataset, config: &RunConfig) -> Result<EstimationResult> {
    config.validate()?;
    let grid = config.build_grid()?;
    let density = CondDensityModel::fit(data, &config.density)?;
    let dm = DensityMatrix::evaluate(&density, &grid, data);
    let profile = hdr_thresholds(&dm, &grid, config.support_level)?;
    let model = OutcomeModel::fit(data, config.outcome)?;
    let mut curves = plugin_curves(data, &grid, &dm, &profile, &model, config.weighted_cutoff)?;
    let mut failed = Vec::new();
    if config.bootstrap.b > 0 {
        let (bands, f) = bootstrap_curves(data, config, &grid)?;
        curves.bands = Some(bands);
        failed = f;
    }
    Ok(EstimationResult {
        curves,
        model,
        failed_replicates: failed,
    })
}

impl CurveSet {
    /// One row per grid point. Undefined trimming values render as empty
    /// cells; band columns appear only when bands were computed.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["a", "tau", "m_standard", "m_feasible", "m_trimming"];
        if self.weighted.is_some() {
            header.push("m_weighted");
        }
        if self.bands.is_some() {
            header.extend([
                "m_standard_lo",
                "m_standard_hi",
                "m_feasible_lo",
                "m_feasible_hi",
                "m_trimming_lo",
                "m_trimming_hi",
            ]);
            if self.weighted.is_some() {
                header.extend(["m_weighted_lo", "m_weighted_hi"]);
            }
        }
        wtr.write_record(&header)?;

        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for i in 0..self.a.len() {
            let mut record = vec![
                self.a[i].to_string(),
                self.tau[i].to_string(),
                self.standard[i].to_string(),
                self.feasible[i].to_string(),
                cell(self.trimming[i]),
            ];
            if let Some(w) = &self.weighted {
                record.push(w[i].to_string());
            }
            if let Some(b) = &self.bands {
                record.push(b.standard.0[i].to_string());
                record.push(b.standard.1[i].to_string());
                record.push(b.feasible.0[i].to_string());
                record.push(b.feasible.1[i].to_string());
                record.push(cell(b.trimming.0[i]));
                record.push(cell(b.trimming.1[i]));
                if let Some(w) = &b.weighted {
                    record.push(w.0[i].to_string());
                    record.push(w.1[i].to_string());
                }
            }
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Contiguous grid regions where trimming is undefined, as (start, end)
    /// index pairs inclusive; used for run-report warnings.
    pub fn undefined_trimming_regions(&self) -> Vec<(usize, usize)> {
        let mut regions = Vec::new();
        let mut start = None;
        for (i, t) in self.trimming.iter().enumerate() {
            match (t.is_none(), start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    regions.push((s, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            regions.push((s, self.trimming.len() - 1));
        }
        regions
    }
}
