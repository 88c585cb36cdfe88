//! Simulation laws, interventional oracle truths, and the Monte Carlo
//! absolute-bias harness.
//!
//! Three families of data-generating processes, six laws total. Family 1
//! pairs normal treatment and confounder with a linear, sinusoidal, or
//! logarithmic outcome; family 2 has a binary confounder whose strata share
//! treatment support (2A) or barely overlap (2B); family 3 mimics a dosing
//! study: treatment is truncated below at 0.2032, and a binary outcome rises
//! sharply as the dose approaches that floor.
//!
//! Oracle curves intervene on the law itself: confounders are drawn fresh,
//! each draw's support set is built from the TRUE conditional density on the
//! grid via the same threshold rule the estimator uses, and true outcome
//! means are averaged. Everything is seeded and chunked so results are
//! bit-identical at any thread count.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::json;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{
    BasisSpec, BootstrapConfig, ColumnSchema, Dataset, DensityConfig, Family, GridConfig,
    HazardParams, InterventionGrid, OutcomeConfig, RunConfig,
};
use crate::error::{Error, Result};
use crate::estimands::{estimate_curves, CurveSet};
use crate::exec;
use crate::linalg::sigmoid;
use crate::support::{hdr_threshold_row, nearest_in};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Treatment floor of law 3; no generated dose falls below it.
pub const LAW3_TREATMENT_FLOOR: f64 = 0.2032;

/// Draws per RNG stream in the oracle; chunking fixes the stream layout so
/// parallel and sequential runs agree bitwise.
const ORACLE_CHUNK: usize = 4096;

/// Mixed into the user seed for the oracle pass so it never shares a stream
/// with replication seeds seed, seed+1, ...
const ORACLE_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimLaw {
    OneA,
    OneB,
    OneC,
    TwoA,
    TwoB,
    Three,
}

impl FromStr for SimLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "1A" => Ok(SimLaw::OneA),
            "1B" => Ok(SimLaw::OneB),
            "1C" => Ok(SimLaw::OneC),
            "2A" => Ok(SimLaw::TwoA),
            "2B" => Ok(SimLaw::TwoB),
            "3" => Ok(SimLaw::Three),
            _ => Err(Error::UnknownLaw(s.to_string())),
        }
    }
}

impl fmt::Display for SimLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let id = match self {
            SimLaw::OneA => "1A",
            SimLaw::OneB => "1B",
            SimLaw::OneC => "1C",
            SimLaw::TwoA => "2A",
            SimLaw::TwoB => "2B",
            SimLaw::Three => "3",
        };
        f.write_str(id)
    }
}

/// Inverse-CDF draw from a normal truncated to [lo, hi].
fn trunc_normal_draw(rng: &mut ChaCha8Rng, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    let p_lo = n.cdf((lo - mean) / sd);
    let p_hi = n.cdf((hi - mean) / sd);
    let u: f64 = rng.random_range(0.0..1.0);
    let p = (p_lo + u * (p_hi - p_lo)).clamp(1e-15, 1.0 - 1e-15);
    (mean + sd * n.inverse_cdf(p)).clamp(lo, hi)
}

fn trunc_normal_pdf(a: f64, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    if a < lo || a > hi {
        return 0.0;
    }
    let n = Normal::new(0.0, 1.0).unwrap();
    let denom = n.cdf((hi - mean) / sd) - n.cdf((lo - mean) / sd);
    let z = (a - mean) / sd;
    (INV_SQRT_2PI * (-0.5 * z * z).exp()) / (sd * denom)
}

impl SimLaw {
    /// Number of confounder columns the law generates.
    pub fn q(&self) -> usize {
        match self {
            SimLaw::Three => 2,
            _ => 1,
        }
    }

    /// Column names matching `generate`'s output when written to CSV.
    pub fn schema(&self) -> ColumnSchema {
        let confounders = match self {
            SimLaw::Three => vec!["L1".to_string(), "L2".to_string()],
            _ => vec!["L".to_string()],
        };
        ColumnSchema {
            confounders,
            treatment: "A".to_string(),
            outcome: "Y".to_string(),
        }
    }

    fn law2_sd(&self) -> f64 {
        match self {
            SimLaw::TwoA => 1.5,
            SimLaw::TwoB => 0.5,
            _ => unreachable!("law2_sd on a non-family-2 law"),
        }
    }

    /// One confounder draw; the slice of the returned pair holds q values.
    fn draw_confounders(&self, rng: &mut ChaCha8Rng) -> [f64; 2] {
        match self {
            SimLaw::OneA | SimLaw::OneB | SimLaw::OneC => {
                [rng.sample::<f64, _>(StandardNormal), 0.0]
            }
            SimLaw::TwoA | SimLaw::TwoB => [
                if rng.random_range(0.0..1.0) < 0.5 {
                    1.0
                } else {
                    0.0
                },
                0.0,
            ],
            SimLaw::Three => {
                let l1 = if rng.random_range(0.0..1.0) < 0.4 {
                    1.0
                } else {
                    0.0
                };
                let l2: f64 = rng.sample(StandardNormal);
                [l1, l2]
            }
        }
    }

    fn draw_treatment(&self, rng: &mut ChaCha8Rng, l: &[f64]) -> f64 {
        match self {
            SimLaw::OneA | SimLaw::OneB | SimLaw::OneC => {
                l[0] + rng.sample::<f64, _>(StandardNormal)
            }
            SimLaw::TwoA | SimLaw::TwoB => {
                trunc_normal_draw(rng, 2.0 + 2.0 * l[0], self.law2_sd(), 0.0, 8.0)
            }
            SimLaw::Three => trunc_normal_draw(
                rng,
                2.0 + l[0] + 0.5 * l[1],
                1.0,
                LAW3_TREATMENT_FLOOR,
                20.0,
            ),
        }
    }

    fn draw_outcome(&self, rng: &mut ChaCha8Rng, a: f64, l: &[f64]) -> f64 {
        match self {
            SimLaw::Three => {
                let p = self.true_mean(a, l);
                if rng.random_range(0.0..1.0) < p {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.true_mean(a, l) + 0.1 * rng.sample::<f64, _>(StandardNormal),
        }
    }

    /// True conditional treatment density f(a | l).
    pub fn true_density(&self, a: f64, l: &[f64]) -> f64 {
        match self {
            SimLaw::OneA | SimLaw::OneB | SimLaw::OneC => {
                let z = a - l[0];
                INV_SQRT_2PI * (-0.5 * z * z).exp()
            }
            SimLaw::TwoA | SimLaw::TwoB => {
                trunc_normal_pdf(a, 2.0 + 2.0 * l[0], self.law2_sd(), 0.0, 8.0)
            }
            SimLaw::Three => {
                trunc_normal_pdf(a, 2.0 + l[0] + 0.5 * l[1], 1.0, LAW3_TREATMENT_FLOOR, 20.0)
            }
        }
    }

    /// Fills `out` with f(a_i | l) over the grid. Same values as
    /// `true_density` per point, with the truncation constant hoisted.
    fn true_density_row(&self, values: &[f64], l: &[f64], out: &mut [f64]) {
        match self {
            SimLaw::OneA | SimLaw::OneB | SimLaw::OneC => {
                for (o, &a) in out.iter_mut().zip(values) {
                    let z = a - l[0];
                    *o = INV_SQRT_2PI * (-0.5 * z * z).exp();
                }
            }
            SimLaw::TwoA | SimLaw::TwoB | SimLaw::Three => {
                let (mean, sd, lo, hi) = match self {
                    SimLaw::Three => (2.0 + l[0] + 0.5 * l[1], 1.0, LAW3_TREATMENT_FLOOR, 20.0),
                    _ => (2.0 + 2.0 * l[0], self.law2_sd(), 0.0, 8.0),
                };
                let n = Normal::new(0.0, 1.0).unwrap();
                let denom = n.cdf((hi - mean) / sd) - n.cdf((lo - mean) / sd);
                for (o, &a) in out.iter_mut().zip(values) {
                    *o = if a < lo || a > hi {
                        0.0
                    } else {
                        let z = (a - mean) / sd;
                        (INV_SQRT_2PI * (-0.5 * z * z).exp()) / (sd * denom)
                    };
                }
            }
        }
    }

    /// True conditional outcome mean E[Y | A=a, L=l]. For law 3 the mean is
    /// the event probability; at or below a=0 it takes its limit value 1.
    pub fn true_mean(&self, a: f64, l: &[f64]) -> f64 {
        match self {
            SimLaw::OneA => 1.0 + a + l[0],
            SimLaw::OneB => a.sin() + 0.5 * l[0],
            SimLaw::OneC => (a.abs() + 0.5).ln() + 0.5 * l[0],
            SimLaw::TwoA | SimLaw::TwoB => 1.0 + a + 0.5 * l[0],
            SimLaw::Three => {
                if a <= 0.0 {
                    return 1.0;
                }
                sigmoid(1.5 - 1.2 * a.ln() + 0.5 * l[0] - 0.3 * l[1])
            }
        }
    }

    /// iid sample of n units; per unit the draw order is confounders,
    /// treatment, outcome noise, so datasets are reproducible per seed.
    pub fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        let q = self.q();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut confounders = Vec::with_capacity(n * q);
        let mut treatment = Vec::with_capacity(n);
        let mut outcome = Vec::with_capacity(n);
        for _ in 0..n {
            let l = self.draw_confounders(&mut rng);
            let a = self.draw_treatment(&mut rng, &l[..q]);
            let y = self.draw_outcome(&mut rng, a, &l[..q]);
            confounders.extend_from_slice(&l[..q]);
            treatment.push(a);
            outcome.push(y);
        }
        Dataset::new(confounders, q, treatment, outcome)
    }

    /// Estimation defaults suited to each law: evaluation window inside the
    /// bulk of the treatment distribution, density method able to express
    /// the law's shape, outcome basis rich enough for its mean.
    pub fn default_config(&self) -> RunConfig {
        let (grid, density, outcome) = match self {
            SimLaw::OneA => (
                GridConfig {
                    min: -3.5,
                    max: 3.5,
                    m: 71,
                },
                DensityConfig::Gaussian,
                OutcomeConfig {
                    family: Family::Gaussian,
                    basis: BasisSpec::Linear,
                },
            ),
            SimLaw::OneB | SimLaw::OneC => (
                GridConfig {
                    min: -3.5,
                    max: 3.5,
                    m: 71,
                },
                DensityConfig::Gaussian,
                OutcomeConfig {
                    family: Family::Gaussian,
                    basis: BasisSpec::Cubic,
                },
            ),
            SimLaw::TwoA | SimLaw::TwoB => (
                GridConfig {
                    min: 1.5,
                    max: 4.5,
                    m: 61,
                },
                DensityConfig::Gaussian,
                OutcomeConfig {
                    family: Family::Gaussian,
                    basis: BasisSpec::Linear,
                },
            ),
            SimLaw::Three => (
                GridConfig {
                    min: 0.0,
                    max: 6.0,
                    m: 61,
                },
                DensityConfig::Hazard(HazardParams::default()),
                OutcomeConfig {
                    family: Family::Binomial,
                    basis: BasisSpec::Cubic,
                },
            ),
        };
        RunConfig {
            support_level: 0.95,
            density,
            outcome,
            weighted_cutoff: None,
            bootstrap: BootstrapConfig::default(),
            grid,
            columns: Some(self.schema()),
        }
    }

    /// Law parameters as JSON, for run reports.
    pub fn params_json(&self) -> serde_json::Value {
        match self {
            SimLaw::OneA | SimLaw::OneB | SimLaw::OneC => json!({
                "law": self.to_string(),
                "confounder": "L ~ Normal(0, 1)",
                "treatment": "A | L ~ Normal(L, 1)",
                "outcome": match self {
                    SimLaw::OneA => "Y = 1 + A + L + e, e ~ Normal(0, 0.01)",
                    SimLaw::OneB => "Y = sin(A) + 0.5 L + e, e ~ Normal(0, 0.01)",
                    _ => "Y = log(|A| + 0.5) + 0.5 L + e, e ~ Normal(0, 0.01)",
                },
            }),
            SimLaw::TwoA | SimLaw::TwoB => json!({
                "law": self.to_string(),
                "confounder": "L ~ Bernoulli(0.5)",
                "treatment": format!(
                    "A | L ~ TruncNormal(2 + 2L, {}, [0, 8])",
                    self.law2_sd()
                ),
                "outcome": "Y = 1 + A + 0.5 L + e, e ~ Normal(0, 0.01)",
            }),
            SimLaw::Three => json!({
                "law": "3",
                "confounders": "L1 ~ Bernoulli(0.4), L2 ~ Normal(0, 1)",
                "treatment": "A | L ~ TruncNormal(2 + L1 + 0.5 L2, 1, [0.2032, 20])",
                "outcome": "Y ~ Bernoulli(logit^-1(1.5 - 1.2 log A + 0.5 L1 - 0.3 L2))",
            }),
        }
    }
}

/// Which curve a bias entry refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimandKind {
    Standard,
    Feasible,
    Trimming,
}

impl fmt::Display for EstimandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimandKind::Standard => "standard",
            EstimandKind::Feasible => "feasible",
            EstimandKind::Trimming => "trimming",
        })
    }
}

/// True curves under a law, computed by intervening on the law itself.
#[derive(Debug, Clone)]
pub struct OracleCurves {
    pub a: Vec<f64>,
    pub tau: Vec<f64>,
    pub standard: Vec<f64>,
    pub feasible: Vec<f64>,
    /// None where no confounder draw supports the grid point.
    pub trimming: Vec<Option<f64>>,
}

struct OracleAccum {
    std: Vec<f64>,
    feas: Vec<f64>,
    trim: Vec<f64>,
    trim_n: Vec<u64>,
    unsupported: Vec<u64>,
    massless: u64,
}

impl OracleAccum {
    fn new(m: usize) -> Self {
        OracleAccum {
            std: vec![0.0; m],
            feas: vec![0.0; m],
            trim: vec![0.0; m],
            trim_n: vec![0; m],
            unsupported: vec![0; m],
            massless: 0,
        }
    }
}

/// Monte Carlo oracle for all estimand kinds at support level `alpha`.
///
/// Per confounder draw: build the true density row on the grid, apply the
/// same highest-density threshold rule the estimator uses, then accumulate
/// true outcome means under the standard, substituted, and trimmed
/// interventions. Chunks of 4096 draws each own the RNG stream seeded
/// `seed + chunk`, and partial sums merge in chunk order, so the result is
/// identical at any thread count.
pub fn oracle_curves(
    law: SimLaw,
    grid: &InterventionGrid,
    alpha: f64,
    draws: usize,
    seed: u64,
) -> Result<OracleCurves> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "support level must lie strictly between 0 and 1, got {alpha}"
        )));
    }
    if draws == 0 {
        return Err(Error::InvalidConfig(
            "oracle needs at least one draw".into(),
        ));
    }
    let m = grid.len();
    let values = grid.values();
    let widths = grid.cell_widths();
    let q = law.q();
    let chunks = draws.div_ceil(ORACLE_CHUNK);

    let parts = exec::map_indexed(chunks, |c| {
        let lo = c * ORACLE_CHUNK;
        let hi = ((c + 1) * ORACLE_CHUNK).min(draws);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(c as u64));
        let mut acc = OracleAccum::new(m);
        let mut row = vec![0.0; m];
        let mut sup_idx: Vec<usize> = Vec::with_capacity(m);
        for _ in lo..hi {
            let lbuf = law.draw_confounders(&mut rng);
            let l = &lbuf[..q];
            law.true_density_row(values, l, &mut row);
            let thr = match hdr_threshold_row(&row, widths, alpha) {
                Some(t) => t,
                None => {
                    acc.massless += 1;
                    continue;
                }
            };
            sup_idx.clear();
            for (i, &d) in row.iter().enumerate() {
                if d >= thr {
                    sup_idx.push(i);
                }
            }
            for i in 0..m {
                let mu = law.true_mean(values[i], l);
                acc.std[i] += mu;
                if row[i] >= thr {
                    acc.feas[i] += mu;
                    acc.trim[i] += mu;
                    acc.trim_n[i] += 1;
                } else {
                    acc.unsupported[i] += 1;
                    let d = nearest_in(values, &sup_idx, values[i]);
                    acc.feas[i] += law.true_mean(d, l);
                }
            }
        }
        acc
    });

    let mut total = OracleAccum::new(m);
    for part in parts {
        total.massless += part.massless;
        for i in 0..m {
            total.std[i] += part.std[i];
            total.feas[i] += part.feas[i];
            total.trim[i] += part.trim[i];
            total.trim_n[i] += part.trim_n[i];
            total.unsupported[i] += part.unsupported[i];
        }
    }
    if total.massless > 0 {
        return Err(Error::InvalidGrid(format!(
            "law {law} puts no density mass on the grid for {} of {draws} confounder draws",
            total.massless
        )));
    }

    let nf = draws as f64;
    let trimming = (0..m)
        .map(|i| {
            if total.trim_n[i] == 0 {
                None
            } else {
                Some(total.trim[i] / total.trim_n[i] as f64)
            }
        })
        .collect();
    Ok(OracleCurves {
        a: values.to_vec(),
        tau: total.unsupported.iter().map(|&u| u as f64 / nf).collect(),
        standard: total.std.iter().map(|s| s / nf).collect(),
        feasible: total.feas.iter().map(|s| s / nf).collect(),
        trimming,
    })
}

/// One oracle column; None only for trimming outside the law's support.
pub fn oracle_truth(
    law: SimLaw,
    kind: EstimandKind,
    grid: &InterventionGrid,
    alpha: f64,
    draws: usize,
    seed: u64,
) -> Result<Vec<Option<f64>>> {
    let oc = oracle_curves(law, grid, alpha, draws, seed)?;
    Ok(match kind {
        EstimandKind::Standard => oc.standard.into_iter().map(Some).collect(),
        EstimandKind::Feasible => oc.feasible.into_iter().map(Some).collect(),
        EstimandKind::Trimming => oc.trimming,
    })
}

impl OracleCurves {
    /// Columns a, tau, standard, feasible, trimming; trimming empty where
    /// the truth is undefined.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["a", "tau", "standard", "feasible", "trimming"])?;
        for i in 0..self.a.len() {
            wtr.write_record([
                self.a[i].to_string(),
                self.tau[i].to_string(),
                self.standard[i].to_string(),
                self.feasible[i].to_string(),
                self.trimming[i].map(|t| t.to_string()).unwrap_or_default(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// A column of the bias table: per grid point, the mean absolute error of
/// one estimand and how many replications contributed nothing to it.
#[derive(Debug, Clone)]
pub struct BiasColumn {
    pub abs_bias: Vec<Option<f64>>,
    pub n_fail: Vec<usize>,
}

/// Monte Carlo absolute bias of the three point estimators under a law.
#[derive(Debug, Clone)]
pub struct BiasTable {
    pub a: Vec<f64>,
    pub reps: usize,
    pub n: usize,
    /// Indices of replications whose whole pipeline failed (degenerate refit).
    pub failed_replications: Vec<usize>,
    pub standard: BiasColumn,
    pub feasible: BiasColumn,
    pub trimming: BiasColumn,
}

/// Runs R replications of generate -> estimate against oracle truths and
/// returns the bias table together with the oracle it was scored against.
///
/// Replication r draws its dataset with seed `seed + r`; the oracle pass
/// mixes a fixed constant into the seed so it shares no stream with any
/// replication. Failed replications are tolerated up to 10%, then abort.
/// Bias at a cell averages over the replications that produced a value
/// there; `n_fail` counts the rest. Cells where the truth itself is
/// undefined stay undefined.
pub fn monte_carlo_bias(
    law: SimLaw,
    reps: usize,
    n: usize,
    config: &RunConfig,
    oracle_draws: usize,
    seed: u64,
) -> Result<(BiasTable, OracleCurves)> {
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    config.validate()?;
    let grid = config.build_grid()?;
    let oracle = oracle_curves(
        law,
        &grid,
        config.support_level,
        oracle_draws,
        seed ^ ORACLE_SEED_MIX,
    )?;

    let mut point_config = config.clone();
    point_config.bootstrap.b = 0;

    let outcomes = exec::map_indexed(reps, |r| -> Result<CurveSet> {
        let data = law.generate(n, seed.wrapping_add(r as u64))?;
        Ok(estimate_curves(&data, &point_config)?.curves)
    });

    let m = grid.len();
    let mut failed = Vec::new();
    let mut first_failure: Option<String> = None;
    let mut sums = vec![[0.0f64; 3]; m];
    let mut counts = vec![[0usize; 3]; m];
    for (r, rep) in outcomes.iter().enumerate() {
        match rep {
            Err(e) => {
                failed.push(r);
                if first_failure.is_none() {
                    first_failure = Some(e.to_string());
                }
            }
            Ok(curves) => {
                for i in 0..m {
                    sums[i][0] += (curves.standard[i] - oracle.standard[i]).abs();
                    counts[i][0] += 1;
                    sums[i][1] += (curves.feasible[i] - oracle.feasible[i]).abs();
                    counts[i][1] += 1;
                    if let (Some(est), Some(truth)) = (curves.trimming[i], oracle.trimming[i]) {
                        sums[i][2] += (est - truth).abs();
                        counts[i][2] += 1;
                    }
                }
            }
        }
    }
    if failed.len() * 10 > reps {
        return Err(Error::MonteCarloFailures {
            failed: failed.len(),
            total: reps,
            first: first_failure.unwrap_or_default(),
        });
    }

    let column = |k: usize, defined: &dyn Fn(usize) -> bool| -> BiasColumn {
        let mut abs_bias = Vec::with_capacity(m);
        let mut n_fail = Vec::with_capacity(m);
        for i in 0..m {
            if defined(i) && counts[i][k] > 0 {
                abs_bias.push(Some(sums[i][k] / counts[i][k] as f64));
            } else {
                abs_bias.push(None);
            }
            n_fail.push(reps - counts[i][k]);
        }
        BiasColumn { abs_bias, n_fail }
    };
    let always = |_: usize| true;
    let truth_defined = |i: usize| oracle.trimming[i].is_some();
    let table = BiasTable {
        a: grid.values().to_vec(),
        reps,
        n,
        failed_replications: failed,
        standard: column(0, &always),
        feasible: column(1, &always),
        trimming: column(2, &truth_defined),
    };
    Ok((table, oracle))
}

impl BiasTable {
    /// Three rows per grid point (one per estimand); bias cells empty where
    /// the truth is undefined.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["a", "estimand", "abs_bias", "n_fail"])?;
        for i in 0..self.a.len() {
            for (kind, col) in [
                (EstimandKind::Standard, &self.standard),
                (EstimandKind::Feasible, &self.feasible),
                (EstimandKind::Trimming, &self.trimming),
            ] {
                wtr.write_record([
                    self.a[i].to_string(),
                    kind.to_string(),
                    col.abs_bias[i].map(|b| b.to_string()).unwrap_or_default(),
                    col.n_fail[i].to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}
