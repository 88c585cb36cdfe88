//! Kernel conditional density: a Nadaraya-Watson ratio of a joint KDE to the
//! confounder-margin KDE,
//!
//!   f(a | l) = sum_r w_r(l) K_h(a - A_r) / sum_r w_r(l),
//!
//! with Gaussian product kernels, Silverman bandwidths per continuous
//! dimension, and a two-point matching kernel on binary confounder columns.

use crate::data::{Dataset, KernelParams};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct KernelCondDensity {
    a_train: Vec<f64>,
    l_train: Vec<f64>, // row-major n x q
    n: usize,
    q: usize,
    h_a: f64,
    h_l: Vec<f64>, // unused entries for binary columns
    binary: Vec<bool>,
    lambda: f64,
}

/// Silverman's rule for one dimension: 1.06 sd n^(-1/5). Falls back to unit
/// scale when the sample carries no spread to measure.
fn silverman(values: impl Iterator<Item = f64> + Clone, n: usize) -> f64 {
    let sd = if n >= 2 {
        let mean = values.clone().sum::<f64>() / n as f64;
        let ss = values.map(|v| (v - mean) * (v - mean)).sum::<f64>();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let sd = if sd > 0.0 { sd } else { 1.0 };
    1.06 * sd * (n as f64).powf(-0.2)
}

impl KernelCondDensity {
    pub fn fit(data: &Dataset, params: &KernelParams) -> Result<Self> {
        let n = data.n();
        let q = data.q();
        let binary: Vec<bool> = (0..q)
            .map(|k| {
                (0..n).all(|j| {
                    let v = data.confounder_row(j)[k];
                    v == 0.0 || v == 1.0
                })
            })
            .collect();

        let h_a = params
            .bandwidth
            .unwrap_or_else(|| silverman(data.treatment().iter().copied(), n));
        let h_l: Vec<f64> = match &params.confounder_bandwidths {
            Some(user) => user.clone(),
            None => (0..q)
                .map(|k| silverman((0..n).map(|j| data.confounder_row(j)[k]), n))
                .collect(),
        };

        let mut l_train = Vec::with_capacity(n * q);
        for j in 0..n {
            l_train.extend_from_slice(data.confounder_row(j));
        }
        Ok(KernelCondDensity {
            a_train: data.treatment().to_vec(),
            l_train,
            n,
            q,
            h_a,
            h_l,
            binary,
            lambda: params.match_lambda,
        })
    }

    pub fn treatment_bandwidth(&self) -> f64 {
        self.h_a
    }

    /// Unnormalized confounder kernel weight of every training row at `l`.
    /// Constant factors shared by all rows cancel in the ratio and are left
    /// out.
    fn confounder_weights(&self, l: &[f64]) -> Vec<f64> {
        debug_assert_eq!(l.len(), self.q);
        let mut w = vec![1.0; self.n];
        for (k, (&binary, &lk)) in self.binary.iter().zip(l).enumerate() {
            if binary {
                for (r, wr) in w.iter_mut().enumerate() {
                    let m = if self.l_train[r * self.q + k] == lk {
                        1.0 - self.lambda
                    } else {
                        self.lambda
                    };
                    *wr *= m;
                }
            } else {
                let h = self.h_l[k];
                for (r, wr) in w.iter_mut().enumerate() {
                    let z = (lk - self.l_train[r * self.q + k]) / h;
                    *wr *= (-0.5 * z * z).exp();
                }
            }
        }
        w
    }

    fn eval_weighted(&self, w: &[f64], wsum: f64, a: f64) -> f64 {
        if wsum <= 0.0 {
            return 0.0;
        }
        let mut num = 0.0;
        for (r, &wr) in w.iter().enumerate() {
            let z = (a - self.a_train[r]) / self.h_a;
            num += wr * (-0.5 * z * z).exp();
        }
        num / (wsum * self.h_a * (2.0 * std::f64::consts::PI).sqrt())
    }

    pub fn eval(&self, a: f64, l: &[f64]) -> f64 {
        let w = self.confounder_weights(l);
        let wsum: f64 = w.iter().sum();
        self.eval_weighted(&w, wsum, a)
    }

    pub fn column(&self, grid_values: &[f64], l: &[f64]) -> Vec<f64> {
        let w = self.confounder_weights(l);
        let wsum: f64 = w.iter().sum();
        grid_values
            .iter()
            .map(|&a| self.eval_weighted(&w, wsum, a))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn single_point_is_one_kernel_bump() {
        let data = Dataset::new(vec![0.0], 1, vec![2.0], vec![0.0]).unwrap();
        let m = KernelCondDensity::fit(&data, &KernelParams::default()).unwrap();
        let peak = m.eval(2.0, &[0.0]);
        assert!(peak > 0.0);
        // Symmetric decay around the lone training treatment.
        let left = m.eval(1.5, &[0.0]);
        let right = m.eval(2.5, &[0.0]);
        assert!((left - right).abs() < 1e-15);
        assert!(peak > left);
    }

    #[test]
    fn integrates_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let std = Normal::new(0.0, 1.0).unwrap();
        let n = 300;
        let mut l = Vec::new();
        let mut a = Vec::new();
        for _ in 0..n {
            let li: f64 = std.sample(&mut rng);
            l.push(li);
            a.push(0.5 * li + std.sample(&mut rng));
        }
        let data = Dataset::new(l, 1, a, vec![0.0; n]).unwrap();
        let m = KernelCondDensity::fit(&data, &KernelParams::default()).unwrap();
        // Riemann sum over a wide window at a few confounder values.
        for lv in [-1.0, 0.0, 1.5] {
            let mut total = 0.0;
            let step = 0.01;
            let mut x = -8.0;
            while x <= 8.0 {
                total += m.eval(x, &[lv]) * step;
                x += step;
            }
            assert!((total - 1.0).abs() < 0.01, "integral at l={lv}: {total}");
        }
    }

    #[test]
    fn tracks_conditional_location() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let std = Normal::new(0.0, 1.0).unwrap();
        let n = 2000;
        let mut l = Vec::new();
        let mut a = Vec::new();
        for _ in 0..n {
            let li: f64 = std.sample(&mut rng);
            l.push(li);
            a.push(li + 0.5 * std.sample(&mut rng));
        }
        let data = Dataset::new(l, 1, a, vec![0.0; n]).unwrap();
        let m = KernelCondDensity::fit(&data, &KernelParams::default()).unwrap();
        // Density near the conditional mean dominates density two units off.
        assert!(m.eval(1.0, &[1.0]) > 3.0 * m.eval(-1.0, &[1.0]));
        assert!(m.eval(-1.0, &[-1.0]) > 3.0 * m.eval(1.0, &[-1.0]));
    }

    #[test]
    fn binary_columns_use_matching_kernel() {
        // Strata at l = 0 and l = 1 with treatments far apart; a mismatch
        // weight of 0.1 leaks a tenth of each row's weight across strata.
        let l = vec![0.0, 0.0, 1.0, 1.0];
        let a = vec![0.0, 0.1, 10.0, 10.1];
        let data = Dataset::new(l, 1, a, vec![0.0; 4]).unwrap();
        let m = KernelCondDensity::fit(&data, &KernelParams::default()).unwrap();
        let near_own = m.eval(0.05, &[0.0]);
        let near_other = m.eval(10.05, &[0.0]);
        let ratio = near_other / near_own;
        // Exactly lambda / (1 - lambda) in the limit of separated strata.
        assert!((ratio - 1.0 / 9.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn explicit_bandwidth_respected() {
        let data = Dataset::new(vec![0.0, 1.0], 1, vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let params = KernelParams {
            bandwidth: Some(0.4),
            ..KernelParams::default()
        };
        let m = KernelCondDensity::fit(&data, &params).unwrap();
        assert_eq!(m.treatment_bandwidth(), 0.4);
    }
}
