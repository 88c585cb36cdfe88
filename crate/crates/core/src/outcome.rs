//! Outcome regression: the model whose predictions are averaged into every
//! curve. Gaussian outcomes fit by least squares, binary outcomes by logistic
//! IRLS with an explicit separation report, since a separated fit would push
//! predictions to exact 0/1 and silently poison the plug-in averages.

use serde::Serialize;

use crate::data::{BasisSpec, Dataset, Family, OutcomeConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, Design};

/// A converged coefficient beyond this magnitude is treated as separation:
/// on standardized-scale data no finite optimum lands there.
pub const SEPARATION_BOUND: f64 = 30.0;

/// Fitted outcome regression. Serializes to JSON for run reports.
#[derive(Debug, Clone, Serialize)]
pub struct OutcomeModel {
    family: Family,
    basis: BasisSpec,
    coef: Vec<f64>,
    #[serde(rename = "confounder_columns")]
    q: usize,
}

/// Number of basis terms for `q` confounder columns.
pub fn basis_dim(basis: BasisSpec, q: usize) -> usize {
    match basis {
        BasisSpec::Linear => 2 + q,
        BasisSpec::Cubic => 4 + q,
        BasisSpec::Interaction => 2 + 2 * q,
    }
}

fn push_basis(out: &mut Vec<f64>, basis: BasisSpec, a: f64, l: &[f64]) {
    out.push(1.0);
    out.push(a);
    match basis {
        BasisSpec::Linear => out.extend_from_slice(l),
        BasisSpec::Cubic => {
            out.push(a * a);
            out.push(a * a * a);
            out.extend_from_slice(l);
        }
        BasisSpec::Interaction => {
            out.extend_from_slice(l);
            for &v in l {
                out.push(a * v);
            }
        }
    }
}

impl OutcomeModel {
    pub fn fit(data: &Dataset, config: OutcomeConfig) -> Result<Self> {
        let n = data.n();
        let q = data.q();
        let p = basis_dim(config.basis, q);
        let mut x = Vec::with_capacity(n * p);
        for j in 0..n {
            push_basis(
                &mut x,
                config.basis,
                data.treatment()[j],
                data.confounder_row(j),
            );
        }
        let design = Design::new(x, n, p);
        let coef = match config.family {
            Family::Gaussian => linalg::ols(&design, data.outcome(), "outcome model")?.coef,
            Family::Binomial => {
                data.require_binary_outcome()?;
                let coef = linalg::logistic_irls(&design, data.outcome(), "outcome model")?;
                let max_abs = coef.iter().fold(0.0f64, |m, c| m.max(c.abs()));
                if max_abs > SEPARATION_BOUND {
                    return Err(Error::CompleteSeparation {
                        max_abs_coef: max_abs,
                    });
                }
                coef
            }
        };
        Ok(OutcomeModel {
            family: config.family,
            basis: config.basis,
            coef,
            q,
        })
    }

    /// Model with given coefficients, checked against the basis dimension.
    pub fn from_parts(family: Family, basis: BasisSpec, coef: Vec<f64>, q: usize) -> Result<Self> {
        let p = basis_dim(basis, q);
        if coef.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "basis needs {p} coefficients, got {}",
                coef.len()
            )));
        }
        Ok(OutcomeModel {
            family,
            basis,
            coef,
            q,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn basis(&self) -> BasisSpec {
        self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    /// Predicted mean outcome at treatment `a` and confounders `l`.
    /// Binomial predictions are probabilities, never exactly 0 or 1 for
    /// finite linear predictors.
    pub fn predict(&self, a: f64, l: &[f64]) -> f64 {
        debug_assert_eq!(l.len(), self.q);
        let mut row = Vec::with_capacity(self.coef.len());
        push_basis(&mut row, self.basis, a, l);
        let eta = linalg::dot(&row, &self.coef);
        match self.family {
            Family::Gaussian => eta,
            Family::Binomial => linalg::sigmoid(eta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(rows: Vec<(f64, f64, f64)>) -> Dataset {
        let confounders: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let treatment: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let outcome: Vec<f64> = rows.iter().map(|r| r.2).collect();
        Dataset::new(confounders, 1, treatment, outcome).unwrap()
    }

    #[test]
    fn gaussian_linear_recovers_exact_plane() {
        let rows: Vec<(f64, f64, f64)> = (0..30)
            .map(|i| {
                let l = (i % 5) as f64;
                let a = (i / 5) as f64;
                (l, a, 1.0 + 2.0 * a + 3.0 * l)
            })
            .collect();
        let data = dataset(rows);
        let model = OutcomeModel::fit(
            &data,
            OutcomeConfig {
                family: Family::Gaussian,
                basis: BasisSpec::Linear,
            },
        )
        .unwrap();
        assert!((model.coefficients()[0] - 1.0).abs() < 1e-6);
        assert!((model.coefficients()[1] - 2.0).abs() < 1e-6);
        assert!((model.coefficients()[2] - 3.0).abs() < 1e-6);
        assert!((model.predict(10.0, &[1.0]) - 24.0).abs() < 1e-5);
    }

    #[test]
    fn cubic_basis_fits_cubic_exactly() {
        let rows: Vec<(f64, f64, f64)> = (0..40)
            .map(|i| {
                let a = (i as f64) / 5.0 - 4.0;
                let l = (i % 3) as f64;
                (l, a, a * a * a - a + 0.5 * l)
            })
            .collect();
        let data = dataset(rows);
        let model = OutcomeModel::fit(
            &data,
            OutcomeConfig {
                family: Family::Gaussian,
                basis: BasisSpec::Cubic,
            },
        )
        .unwrap();
        for a in [-3.0, 0.0, 2.5] {
            let truth = a * a * a - a + 0.5;
            assert!(
                (model.predict(a, &[1.0]) - truth).abs() < 1e-5,
                "prediction at {a} off: {} vs {truth}",
                model.predict(a, &[1.0])
            );
        }
    }

    #[test]
    fn interaction_basis_layout() {
        // y = a * l exactly, expressible only through the product term.
        let rows: Vec<(f64, f64, f64)> = (0..25)
            .map(|i| {
                let l = (i % 5) as f64 - 2.0;
                let a = (i / 5) as f64 - 2.0;
                (l, a, a * l)
            })
            .collect();
        let data = dataset(rows);
        let model = OutcomeModel::fit(
            &data,
            OutcomeConfig {
                family: Family::Gaussian,
                basis: BasisSpec::Interaction,
            },
        )
        .unwrap();
        assert_eq!(model.coefficients().len(), 4);
        assert!(
            (model.coefficients()[3] - 1.0).abs() < 1e-6,
            "{:?}",
            model.coefficients()
        );
        assert!((model.predict(3.0, &[2.0]) - 6.0).abs() < 1e-5);
    }

    #[test]
    fn binomial_recovers_logistic_surface() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let l: f64 = rng.random_range(-1.0..1.0);
            let a: f64 = rng.random_range(-2.0..2.0);
            let p = linalg::sigmoid(0.5 - 0.8 * a + 1.0 * l);
            let y = if rng.random_range(0.0..1.0) < p {
                1.0
            } else {
                0.0
            };
            rows.push((l, a, y));
        }
        let data = dataset(rows);
        let model = OutcomeModel::fit(
            &data,
            OutcomeConfig {
                family: Family::Binomial,
                basis: BasisSpec::Linear,
            },
        )
        .unwrap();
        let c = model.coefficients();
        assert!((c[0] - 0.5).abs() < 0.15, "intercept {}", c[0]);
        assert!((c[1] + 0.8).abs() < 0.15, "treatment {}", c[1]);
        assert!((c[2] - 1.0).abs() < 0.15, "confounder {}", c[2]);
        let p = model.predict(0.0, &[0.0]);
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn binomial_rejects_non_binary_outcome() {
        let data = dataset(vec![(0.0, 1.0, 0.0), (1.0, 2.0, 1.0), (0.5, 3.0, 0.5)]);
        match OutcomeModel::fit(
            &data,
            OutcomeConfig {
                family: Family::Binomial,
                basis: BasisSpec::Linear,
            },
        ) {
            Err(Error::NonBinaryOutcome { row, value }) => {
                assert_eq!(row, 3);
                assert_eq!(value, 0.5);
            }
            other => panic!("expected non-binary outcome, got {other:?}"),
        }
    }

    #[test]
    fn separation_is_reported_not_returned() {
        // y = 1 exactly when a > 0: no finite optimum exists. The confounder
        // varies so the design itself stays full rank.
        let rows: Vec<(f64, f64, f64)> = (0..60)
            .map(|i| {
                let a = (i as f64 - 29.5) / 10.0;
                let l = (i % 7) as f64 / 7.0;
                (l, a, if a > 0.0 { 1.0 } else { 0.0 })
            })
            .collect();
        let data = dataset(rows);
        match OutcomeModel::fit(
            &data,
            OutcomeConfig {
                family: Family::Binomial,
                basis: BasisSpec::Linear,
            },
        ) {
            Err(Error::CompleteSeparation { max_abs_coef }) => {
                assert!(max_abs_coef > SEPARATION_BOUND);
            }
            Err(Error::IrlsNoConvergence { .. }) => {}
            other => panic!("separated fit slipped through: {other:?}"),
        }
    }

    #[test]
    fn deep_tail_probabilities_stay_positive() {
        let model = OutcomeModel::from_parts(
            Family::Binomial,
            BasisSpec::Linear,
            vec![-50.0, 0.0, 0.0],
            1,
        )
        .unwrap();
        let p = model.predict(1.0, &[1.0]);
        assert!(p > 0.0, "underflowed to zero");
        assert!(p < 1e-20, "not deep in the tail: {p}");
    }

    #[test]
    fn from_parts_checks_dimension() {
        assert!(matches!(
            OutcomeModel::from_parts(Family::Gaussian, BasisSpec::Cubic, vec![1.0, 2.0], 1),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn model_serializes_for_reports() {
        let model =
            OutcomeModel::from_parts(Family::Gaussian, BasisSpec::Linear, vec![1.0, 2.0, 3.0], 1)
                .unwrap();
        let json = serde_json::to_value(&model).unwrap();
        assert_eq!(json["family"], "gaussian");
        assert_eq!(json["basis"], "linear");
        assert_eq!(json["coef"].as_array().unwrap().len(), 3);
    }
}
