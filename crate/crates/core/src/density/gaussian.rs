//! Linear-Gaussian conditional density: A | L ~ Normal(b'x(L), sigma^2) with
//! x(L) = (1, L). The homoscedastic normal working model from the estimation
//! pipeline's parametric option.

use crate::data::Dataset;
use crate::error::Result;
use crate::linalg::{self, Design};

/// Fitted sigma never drops below this; a perfectly deterministic treatment
/// would otherwise produce a delta spike no quadrature can represent.
const SIGMA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct GaussianCondDensity {
    coef: Vec<f64>, // intercept, then one slope per confounder
    sigma: f64,
}

impl GaussianCondDensity {
    pub fn fit(data: &Dataset) -> Result<Self> {
        let n = data.n();
        let q = data.q();
        let p = q + 1;
        let mut x = Vec::with_capacity(n * p);
        for j in 0..n {
            x.push(1.0);
            x.extend_from_slice(data.confounder_row(j));
        }
        let design = Design::new(x, n, p);
        let fit = linalg::ols(&design, data.treatment(), "conditional mean of treatment")?;
        // Residual degrees of freedom, floored so tiny tables still fit.
        let dof = if n > p { (n - p) as f64 } else { 1.0 };
        let sigma = (fit.rss / dof).sqrt().max(SIGMA_FLOOR);
        Ok(GaussianCondDensity {
            coef: fit.coef,
            sigma,
        })
    }

    #[cfg(test)]
    pub(crate) fn from_parts(coef: Vec<f64>, sigma: f64) -> Self {
        assert!(sigma > 0.0);
        GaussianCondDensity { coef, sigma }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mean(&self, l: &[f64]) -> f64 {
        debug_assert_eq!(l.len() + 1, self.coef.len());
        let mut mu = self.coef[0];
        for (k, &v) in l.iter().enumerate() {
            mu += self.coef[k + 1] * v;
        }
        mu
    }

    pub fn eval(&self, a: f64, l: &[f64]) -> f64 {
        let z = (a - self.mean(l)) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * std::f64::consts::PI).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn recovers_conditional_law() {
        // A | L ~ N(L, 1) with L standard normal.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let std = Normal::new(0.0, 1.0).unwrap();
        let n = 5000;
        let mut l = Vec::with_capacity(n);
        let mut a = Vec::with_capacity(n);
        for _ in 0..n {
            let li: f64 = std.sample(&mut rng);
            l.push(li);
            a.push(li + std.sample(&mut rng));
        }
        let data = Dataset::new(l, 1, a, vec![0.0; n]).unwrap();
        let fit = GaussianCondDensity::fit(&data).unwrap();
        assert!(
            fit.coefficients()[0].abs() < 0.1,
            "intercept {}",
            fit.coefficients()[0]
        );
        assert!((fit.coefficients()[1] - 1.0).abs() < 0.1);
        assert!((fit.sigma() - 1.0).abs() < 0.1);
    }

    #[test]
    fn mode_density_is_inverse_sqrt_2pi() {
        let m = GaussianCondDensity::from_parts(vec![0.0, 1.0], 1.0);
        let want = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        for l in [-2.0, 0.0, 1.5] {
            let got = m.eval(l, &[l]);
            assert!((got - want).abs() < 1e-15, "at l={l}: {got}");
        }
    }

    #[test]
    fn far_tail_is_negligible_but_positive() {
        let m = GaussianCondDensity::from_parts(vec![0.0, 1.0], 1.0);
        let v = m.eval(10.0, &[0.0]);
        assert!(v > 0.0);
        assert!(v < 1e-20);
    }

    #[test]
    fn deterministic_treatment_keeps_sigma_positive() {
        // A is an exact linear function of L; rss is ~0.
        let l: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        let a: Vec<f64> = l.iter().map(|v| 2.0 * v - 1.0).collect();
        let data = Dataset::new(l, 1, a, vec![0.0; 50]).unwrap();
        let fit = GaussianCondDensity::fit(&data).unwrap();
        assert!(fit.sigma() >= 1e-8);
        assert!(fit.eval(0.0, &[0.5]).is_finite());
    }

    #[test]
    fn single_row_is_underdetermined() {
        // One observation cannot pin down intercept and slope.
        let data = Dataset::new(vec![0.3], 1, vec![1.7], vec![0.0]).unwrap();
        match GaussianCondDensity::fit(&data) {
            Err(crate::error::Error::SingularDesign { .. }) => {}
            other => panic!("expected singular design, got {other:?}"),
        }
    }
}
