//! Observed data, the intervention grid, and run configuration.
//!
//! A `Dataset` holds one row per unit: q confounder columns, one continuous
//! treatment, one outcome. The `InterventionGrid` is the uniform grid of
//! treatment values every curve is evaluated on; each grid point owns a
//! midpoint cell of one full step (the boundary cells extend half a step past
//! the requested range), so cell widths sum to the range plus one step.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Dataset {
    confounders: Vec<f64>, // row-major n x q
    treatment: Vec<f64>,
    outcome: Vec<f64>,
    n: usize,
    q: usize,
}

impl Dataset {
    /// `confounders` is row-major with `q` values per unit.
    pub fn new(
        confounders: Vec<f64>,
        q: usize,
        treatment: Vec<f64>,
        outcome: Vec<f64>,
    ) -> Result<Self> {
        let n = treatment.len();
        if n == 0 {
            return Err(Error::EmptyTable);
        }
        if q == 0 {
            return Err(Error::DimensionMismatch(
                "at least one confounder column is required".into(),
            ));
        }
        if confounders.len() != n * q || outcome.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n} rows with {q} confounders, got {} confounder values and {} outcomes",
                confounders.len(),
                outcome.len()
            )));
        }
        Ok(Dataset {
            confounders,
            treatment,
            outcome,
            n,
            q,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of confounder columns.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn confounder_row(&self, j: usize) -> &[f64] {
        &self.confounders[j * self.q..(j + 1) * self.q]
    }

    pub fn treatment(&self) -> &[f64] {
        &self.treatment
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    /// New dataset holding the given rows, in order; duplicates allowed.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut confounders = Vec::with_capacity(rows.len() * self.q);
        let mut treatment = Vec::with_capacity(rows.len());
        let mut outcome = Vec::with_capacity(rows.len());
        for &j in rows {
            confounders.extend_from_slice(self.confounder_row(j));
            treatment.push(self.treatment[j]);
            outcome.push(self.outcome[j]);
        }
        Dataset {
            confounders,
            treatment,
            outcome,
            n: rows.len(),
            q: self.q,
        }
    }

    /// Errors with the first offending row (1-based) unless every outcome is
    /// exactly 0 or 1.
    pub fn require_binary_outcome(&self) -> Result<()> {
        for (j, &y) in self.outcome.iter().enumerate() {
            if y != 0.0 && y != 1.0 {
                return Err(Error::NonBinaryOutcome {
                    row: j + 1,
                    value: y,
                });
            }
        }
        Ok(())
    }
}

/// Maps table columns onto the model roles.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ColumnSchema {
    pub confounders: Vec<String>,
    pub treatment: String,
    pub outcome: String,
}

impl ColumnSchema {
    /// Convention when no schema is configured: treatment column "A",
    /// outcome column "Y", every other column a confounder in header order.
    pub fn from_header(header: &[String]) -> Result<Self> {
        let treatment = "A".to_string();
        let outcome = "Y".to_string();
        if !header.contains(&treatment) {
            return Err(Error::MissingColumn(treatment));
        }
        if !header.contains(&outcome) {
            return Err(Error::MissingColumn(outcome));
        }
        let confounders = header
            .iter()
            .filter(|h| **h != treatment && **h != outcome)
            .cloned()
            .collect::<Vec<_>>();
        if confounders.is_empty() {
            return Err(Error::MissingColumn("<any confounder>".into()));
        }
        Ok(ColumnSchema {
            confounders,
            treatment,
            outcome,
        })
    }
}

/// Loads a headered CSV, checking every cell parses to a finite double.
/// When `binary_outcome` is set the outcome column must be exactly 0/1.
pub fn load_csv<R: Read>(
    reader: R,
    schema: &ColumnSchema,
    binary_outcome: bool,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let col_index = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let conf_idx: Vec<usize> = schema
        .confounders
        .iter()
        .map(|c| col_index(c))
        .collect::<Result<_>>()?;
    let a_idx = col_index(&schema.treatment)?;
    let y_idx = col_index(&schema.outcome)?;

    let parse = |field: &str, row: usize, column: &str| -> Result<f64> {
        let v: f64 = field.trim().parse().map_err(|_| Error::NonNumeric {
            row,
            column: column.to_string(),
            value: field.trim().to_string(),
        })?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                row,
                column: column.to_string(),
            });
        }
        Ok(v)
    };

    let mut confounders = Vec::new();
    let mut treatment = Vec::new();
    let mut outcome = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        for (&ci, name) in conf_idx.iter().zip(&schema.confounders) {
            confounders.push(parse(&record[ci], row, name)?);
        }
        treatment.push(parse(&record[a_idx], row, &schema.treatment)?);
        let y = parse(&record[y_idx], row, &schema.outcome)?;
        if binary_outcome && y != 0.0 && y != 1.0 {
            return Err(Error::NonBinaryOutcome { row, value: y });
        }
        outcome.push(y);
    }
    Dataset::new(confounders, schema.confounders.len(), treatment, outcome)
}

pub fn load_csv_path(path: &Path, schema: &ColumnSchema, binary_outcome: bool) -> Result<Dataset> {
    load_csv(std::fs::File::open(path)?, schema, binary_outcome)
}

/// Reads only the header row, for schema-by-convention resolution.
pub fn csv_header(path: &Path) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(std::fs::File::open(path)?);
    Ok(rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect())
}

/// Writes the dataset back out at 17 significant digits, which round-trips
/// every finite double bit-for-bit.
pub fn write_csv<W: Write>(data: &Dataset, schema: &ColumnSchema, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = schema.confounders.iter().map(|s| s.as_str()).collect();
    header.push(&schema.treatment);
    header.push(&schema.outcome);
    wtr.write_record(&header)?;
    let mut buf = String::new();
    for j in 0..data.n() {
        let mut record: Vec<String> = Vec::with_capacity(data.q() + 2);
        for &v in data.confounder_row(j) {
            buf.clear();
            write!(buf, "{v:.16e}").unwrap();
            record.push(buf.clone());
        }
        record.push(format!("{:.16e}", data.treatment()[j]));
        record.push(format!("{:.16e}", data.outcome()[j]));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Uniform grid of intervention values with midpoint quadrature cells.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionGrid {
    values: Vec<f64>,
    cell_widths: Vec<f64>,
}

impl InterventionGrid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_widths(&self) -> &[f64] {
        &self.cell_widths
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.cell_widths[0]
    }
}

/// Equally spaced grid of `m >= 2` points from `a_min` to `a_max` inclusive.
pub fn make_grid(a_min: f64, a_max: f64, m: usize) -> Result<InterventionGrid> {
    if !a_min.is_finite() || !a_max.is_finite() {
        return Err(Error::InvalidGrid("endpoints must be finite".into()));
    }
    if m < 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 points, got {m}"
        )));
    }
    if a_min >= a_max {
        return Err(Error::InvalidGrid(format!(
            "min must be below max, got [{a_min}, {a_max}]"
        )));
    }
    let step = (a_max - a_min) / (m - 1) as f64;
    let mut values: Vec<f64> = (0..m).map(|i| a_min + step * i as f64).collect();
    values[m - 1] = a_max;
    Ok(InterventionGrid {
        values,
        cell_widths: vec![step; m],
    })
}

/// Density estimator selection plus method parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityConfig {
    Gaussian,
    Kernel(KernelParams),
    Hazard(HazardParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    /// Treatment bandwidth; Silverman's rule when absent.
    #[serde(default)]
    pub bandwidth: Option<f64>,
    /// Per-confounder bandwidths for continuous columns; Silverman when absent.
    #[serde(default)]
    pub confounder_bandwidths: Option<Vec<f64>>,
    /// Mismatch weight of the matching kernel on binary columns.
    #[serde(default = "default_match_lambda")]
    pub match_lambda: f64,
}

fn default_match_lambda() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct HazardParams {
    /// Number of equal-mass treatment bins; max(10, ceil(n^(1/3))) when absent.
    #[serde(default)]
    pub bins: Option<usize>,
}

// Hand-rolled so `params` may be omitted and unknown methods read as config
// errors rather than enum arms.
impl Serialize for DensityConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(None)?;
        match self {
            DensityConfig::Gaussian => map.serialize_entry("method", "gaussian")?,
            DensityConfig::Kernel(p) => {
                map.serialize_entry("method", "kernel")?;
                map.serialize_entry("params", p)?;
            }
            DensityConfig::Hazard(p) => {
                map.serialize_entry("method", "hazard")?;
                map.serialize_entry("params", p)?;
            }
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for DensityConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        struct Raw {
            method: String,
            #[serde(default)]
            params: Option<serde_json::Value>,
        }
        let raw = Raw::deserialize(d)?;
        let params = raw.params.unwrap_or(serde_json::Value::Null);
        let from_params = |v: serde_json::Value| {
            if v.is_null() {
                Ok(serde_json::Value::Object(Default::default()))
            } else {
                Ok(v)
            }
        };
        match raw.method.as_str() {
            "gaussian" => Ok(DensityConfig::Gaussian),
            "kernel" => {
                let p: KernelParams =
                    serde_json::from_value(from_params(params)?).map_err(D::Error::custom)?;
                Ok(DensityConfig::Kernel(p))
            }
            "hazard" => {
                let p: HazardParams =
                    serde_json::from_value(from_params(params)?).map_err(D::Error::custom)?;
                Ok(DensityConfig::Hazard(p))
            }
            other => Err(D::Error::custom(format!(
                "unknown density method '{other}' (expected gaussian, kernel, or hazard)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Binomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisSpec {
    /// Intercept, treatment, confounders.
    Linear,
    /// Intercept, treatment up to its cube, confounders.
    Cubic,
    /// Intercept, treatment, confounders, treatment-by-confounder products.
    Interaction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeConfig {
    pub family: Family,
    pub basis: BasisSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    /// Number of replicates; 0 disables the bootstrap.
    #[serde(rename = "B", default)]
    pub b: usize,
    #[serde(default)]
    pub seed: u64,
    /// Refit the support rule and the outcome model on disjoint halves of
    /// each resample.
    #[serde(default)]
    pub split: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub m: usize,
}

/// Everything one estimation run needs beyond the table itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// HDR mass level alpha, strictly between 0 and 1.
    pub support_level: f64,
    pub density: DensityConfig,
    pub outcome: OutcomeConfig,
    /// Cutoff c of the weighted estimand; absent disables that curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighted_cutoff: Option<f64>,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    pub grid: GridConfig,
    /// Table column roles; defaults to treatment "A", outcome "Y",
    /// confounders = the rest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<ColumnSchema>,
}

impl RunConfig {
    pub fn from_json<R: Read>(reader: R) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_reader(reader).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.support_level > 0.0 && self.support_level < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "support_level must lie strictly between 0 and 1, got {}",
                self.support_level
            )));
        }
        if let Some(c) = self.weighted_cutoff {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "weighted_cutoff must be a finite non-negative number, got {c}"
                )));
            }
        }
        match &self.density {
            DensityConfig::Gaussian => {}
            DensityConfig::Kernel(p) => {
                if let Some(h) = p.bandwidth {
                    if !h.is_finite() || h <= 0.0 {
                        return Err(Error::InvalidConfig(format!(
                            "kernel bandwidth must be positive, got {h}"
                        )));
                    }
                }
                if let Some(hs) = &p.confounder_bandwidths {
                    if hs.iter().any(|h| !h.is_finite() || *h <= 0.0) {
                        return Err(Error::InvalidConfig(
                            "confounder bandwidths must all be positive".into(),
                        ));
                    }
                }
                if !(0.0..=0.5).contains(&p.match_lambda) {
                    return Err(Error::InvalidConfig(format!(
                        "match_lambda must lie in [0, 0.5], got {}",
                        p.match_lambda
                    )));
                }
            }
            DensityConfig::Hazard(p) => {
                if let Some(b) = p.bins {
                    if b < 2 {
                        return Err(Error::InvalidConfig(format!(
                            "hazard binning needs at least 2 bins, got {b}"
                        )));
                    }
                }
            }
        }
        // Surfaces grid errors at config load rather than mid-pipeline.
        make_grid(self.grid.min, self.grid.max, self.grid.m)?;
        Ok(())
    }

    pub fn build_grid(&self) -> Result<InterventionGrid> {
        make_grid(self.grid.min, self.grid.max, self.grid.m)
    }
}
