//! Dense least squares and logistic IRLS for the small design matrices used
//! by the density and outcome models. Columns number in the single digits, so
//! normal equations with a Cholesky solve are accurate enough and avoid
//! pulling in a linear algebra stack.

use crate::error::{Error, Result};

/// Ridge jitter added to the normal-equation diagonal before factorization.
pub const RIDGE_JITTER: f64 = 1e-10;

/// IRLS stops when no coefficient moves by more than this between iterations.
pub const IRLS_TOL: f64 = 1e-8;

/// IRLS iteration cap; exceeding it is reported, never silently truncated.
pub const IRLS_MAX_ITER: usize = 100;

/// A row-major design matrix. Rows are observations, columns basis terms.
pub struct Design {
    x: Vec<f64>,
    n: usize,
    p: usize,
}

impl Design {
    pub fn new(x: Vec<f64>, n: usize, p: usize) -> Self {
        assert_eq!(x.len(), n * p, "design storage does not match dimensions");
        Design { x, n, p }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }
}

#[derive(Debug)]
pub struct OlsFit {
    pub coef: Vec<f64>,
    pub rss: f64,
}

/// Ordinary least squares via jittered normal equations.
pub fn ols(design: &Design, y: &[f64], context: &str) -> Result<OlsFit> {
    assert_eq!(design.n(), y.len());
    let p = design.p();
    let mut xtx = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    for (i, &yi) in y.iter().enumerate() {
        let row = design.row(i);
        for a in 0..p {
            xty[a] += row[a] * yi;
            for b in a..p {
                xtx[a * p + b] += row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtx[a * p + b] = xtx[b * p + a];
        }
        xtx[a * p + a] += RIDGE_JITTER;
    }
    let coef = cholesky_solve(&mut xtx, xty, p, context)?;
    let mut rss = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let r = yi - dot(design.row(i), &coef);
        rss += r * r;
    }
    Ok(OlsFit { coef, rss })
}

/// Logistic regression by iteratively reweighted least squares; returns the
/// converged coefficients.
///
/// Policy shared by every binomial fit in the crate: start at zero, solve the
/// weighted normal equations, halve the step while the deviance worsens, stop
/// when the largest coefficient change drops below `IRLS_TOL`, and report
/// failure to converge within `IRLS_MAX_ITER` iterations.
pub fn logistic_irls(design: &Design, y: &[f64], context: &str) -> Result<Vec<f64>> {
    assert_eq!(design.n(), y.len());
    let p = design.p();
    let mut coef = vec![0.0; p];
    let mut dev = logistic_deviance(design, y, &coef);

    for _ in 0..IRLS_MAX_ITER {
        let mut xtwx = vec![0.0; p * p];
        let mut xtwz = vec![0.0; p];
        for (i, &yi) in y.iter().enumerate() {
            let row = design.row(i);
            let eta = dot(row, &coef);
            let mu = sigmoid(eta);
            // Weight floor keeps the system solvable when fitted values pin
            // to 0 or 1; the separation report below still fires.
            let w = (mu * (1.0 - mu)).max(1e-10);
            let z = eta + (yi - mu) / w;
            for a in 0..p {
                xtwz[a] += w * row[a] * z;
                for b in a..p {
                    xtwx[a * p + b] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                xtwx[a * p + b] = xtwx[b * p + a];
            }
            xtwx[a * p + a] += RIDGE_JITTER;
        }
        let proposal = cholesky_solve(&mut xtwx, xtwz, p, context)?;

        // Step-halve from the full Newton proposal back toward the current
        // coefficients until the deviance stops increasing.
        let mut accepted = None;
        let mut lambda = 1.0;
        for _ in 0..30 {
            let trial: Vec<f64> = coef
                .iter()
                .zip(&proposal)
                .map(|(c, t)| c + lambda * (t - c))
                .collect();
            let trial_dev = logistic_deviance(design, y, &trial);
            if trial_dev <= dev + 1e-12 {
                accepted = Some((trial, trial_dev));
                break;
            }
            lambda *= 0.5;
        }
        let (next, next_dev) = match accepted {
            Some(pair) => pair,
            // No usable step: we are at a (possibly flat) optimum.
            None => (coef.clone(), dev),
        };

        let max_delta = coef
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        coef = next;
        dev = next_dev;
        if max_delta < IRLS_TOL {
            return Ok(coef);
        }
    }
    Err(Error::IrlsNoConvergence {
        iterations: IRLS_MAX_ITER,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for k in 0..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// Numerically safe inverse logit; exact 0 and 1 only at infinite input.
pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn logistic_deviance(design: &Design, y: &[f64], coef: &[f64]) -> f64 {
    let mut dev = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let mu = sigmoid(dot(design.row(i), coef)).clamp(1e-12, 1.0 - 1e-12);
        dev -= 2.0 * (yi * mu.ln() + (1.0 - yi) * (1.0 - mu).ln());
    }
    dev
}

/// Solves the symmetric positive definite system `a x = b` in place.
///
/// A pivot falling below 1e-9 of the largest diagonal entry is treated as
/// rank deficiency: with the 1e-10 jitter already added, only a genuinely
/// collinear design can get that low.
fn cholesky_solve(a: &mut [f64], mut b: Vec<f64>, p: usize, context: &str) -> Result<Vec<f64>> {
    let max_diag = (0..p).map(|k| a[k * p + k]).fold(0.0, f64::max);
    let floor = 1e-9 * max_diag.max(1.0);
    for k in 0..p {
        let mut d = a[k * p + k];
        for j in 0..k {
            d -= a[k * p + j] * a[k * p + j];
        }
        if d.is_nan() || d <= floor {
            return Err(Error::SingularDesign {
                context: context.to_string(),
            });
        }
        let d = d.sqrt();
        a[k * p + k] = d;
        for i in (k + 1)..p {
            let mut v = a[i * p + k];
            for j in 0..k {
                v -= a[i * p + j] * a[k * p + j];
            }
            a[i * p + k] = v / d;
        }
    }
    // Forward then backward substitution.
    for i in 0..p {
        let mut v = b[i];
        for j in 0..i {
            v -= a[i * p + j] * b[j];
        }
        b[i] = v / a[i * p + i];
    }
    for i in (0..p).rev() {
        let mut v = b[i];
        for j in (i + 1)..p {
            v -= a[j * p + i] * b[j];
        }
        b[i] = v / a[i * p + i];
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn design_from_rows(rows: Vec<Vec<f64>>) -> Design {
        let n = rows.len();
        let p = rows[0].len();
        Design::new(rows.into_iter().flatten().collect(), n, p)
    }

    #[test]
    fn ols_recovers_exact_line() {
        // y = 2 + 3x with no noise; the jitter perturbs at the 1e-10 scale.
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| 2.0 + 3.0 * i as f64).collect();
        let fit = ols(&design_from_rows(rows), &y, "test").unwrap();
        assert!((fit.coef[0] - 2.0).abs() < 1e-6);
        assert!((fit.coef[1] - 3.0).abs() < 1e-7);
        assert!(fit.rss < 1e-10);
    }

    #[test]
    fn ols_residuals_orthogonal_to_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 400;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let x: f64 = rng.random_range(-2.0..2.0);
                vec![1.0, x, x * x]
            })
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 0.5 - r[1] + 0.3 * r[2] + rng.random_range(-0.5..0.5))
            .collect();
        let design = design_from_rows(rows);
        let fit = ols(&design, &y, "test").unwrap();
        let mut grad: Vec<f64> = vec![0.0; 3];
        for (i, &yi) in y.iter().enumerate() {
            let r = yi - dot(design.row(i), &fit.coef);
            for (g, v) in grad.iter_mut().zip(design.row(i)) {
                *g += v * r;
            }
        }
        let sup = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        assert!(sup < 1e-8 * n as f64, "gradient sup norm {sup}");
    }

    #[test]
    fn collinear_design_is_reported() {
        // Second and third columns identical.
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|i| {
                let x = (i as f64) / 10.0 - 5.0;
                vec![1.0, x, x]
            })
            .collect();
        let y: Vec<f64> = (0..100).map(|i| i as f64).collect();
        match ols(&design_from_rows(rows), &y, "collinear test") {
            Err(Error::SingularDesign { context }) => assert_eq!(context, "collinear test"),
            other => panic!("expected singular design, got {other:?}"),
        }
    }

    #[test]
    fn logistic_recovers_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let mut rows = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = rng.random_range(-3.0..3.0);
            let p = sigmoid(-1.0 + x);
            rows.push(vec![1.0, x]);
            y.push(if rng.random_range(0.0..1.0) < p {
                1.0
            } else {
                0.0
            });
        }
        let coef = logistic_irls(&design_from_rows(rows), &y, "test").unwrap();
        assert!((coef[0] + 1.0).abs() < 0.1, "intercept {}", coef[0]);
        assert!((coef[1] - 1.0).abs() < 0.1, "slope {}", coef[1]);
    }

    #[test]
    fn logistic_score_equation_holds_at_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 500;
        let mut rows = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = rng.random_range(-2.0..2.0);
            let p = sigmoid(0.5 - 0.8 * x);
            rows.push(vec![1.0, x]);
            y.push(if rng.random_range(0.0..1.0) < p {
                1.0
            } else {
                0.0
            });
        }
        let design = design_from_rows(rows);
        let coef = logistic_irls(&design, &y, "test").unwrap();
        let mut grad = [0.0; 2];
        for (i, &yi) in y.iter().enumerate() {
            let mu = sigmoid(dot(design.row(i), &coef));
            for (g, v) in grad.iter_mut().zip(design.row(i)) {
                *g += v * (yi - mu);
            }
        }
        let sup = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        assert!(sup < 1e-6 * n as f64, "score sup norm {sup}");
    }

    #[test]
    fn separated_data_does_not_converge_quietly() {
        // Perfectly separated: y = 1 exactly when x > 0. The optimum is at
        // infinite slope, so IRLS must either report non-convergence or walk
        // the coefficient past any fixed bound; both are caught upstream.
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![1.0, (i as f64 - 19.5) / 10.0])
            .collect();
        let y: Vec<f64> = (0..40).map(|i| if i >= 20 { 1.0 } else { 0.0 }).collect();
        match logistic_irls(&design_from_rows(rows), &y, "test") {
            Err(Error::IrlsNoConvergence { .. }) => {}
            Ok(coef) => assert!(
                coef.iter().any(|c| c.abs() > 30.0),
                "separated fit converged with small coefficients {coef:?}"
            ),
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }
}
