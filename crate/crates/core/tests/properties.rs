//! Randomized invariant checks over the public API: the HDR mass sandwich,
//! nesting across support levels, substitution rules, estimand coincidences,
//! and bit-exact determinism of the full pipeline.

use proptest::prelude::*;

use cdrc::{
    estimate_curves, hdr_thresholds, load_csv, make_grid, write_csv, BasisSpec, BootstrapConfig,
    ColumnSchema, Dataset, DensityConfig, DensityMatrix, Family, GridConfig, OutcomeConfig,
    OutcomeModel, RunConfig, SupportProfile,
};

/// One-unit density matrix over an m-point grid with the given column.
fn one_unit_profile(density: &[f64], alpha: f64) -> (SupportProfile, cdrc::InterventionGrid) {
    let m = density.len();
    let grid = make_grid(0.0, m as f64 - 1.0, m).unwrap();
    let dm = DensityMatrix::from_fn(m, 1, |i, _| density[i]);
    let profile = hdr_thresholds(&dm, &grid, alpha).unwrap();
    (profile, grid)
}

fn density_row() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..10.0, 3..40)
        .prop_filter("needs positive mass", |v| v.iter().any(|&x| x > 0.0))
}

fn small_table() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec(((-2.0f64..2.0), (-3.0f64..3.0), (-5.0f64..5.0)), 20..50).prop_filter(
        "confounder and treatment must vary",
        |rows| {
            let spread = |f: &dyn Fn(&(f64, f64, f64)) -> f64| {
                let lo = rows.iter().map(f).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            };
            spread(&|r| r.0) > 0.5 && spread(&|r| r.1) > 0.5
        },
    )
}

fn dataset(rows: &[(f64, f64, f64)]) -> Dataset {
    let l: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let a: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.2).collect();
    Dataset::new(l, 1, a, y).unwrap()
}

fn base_config(b: usize, seed: u64, split: bool, cutoff: Option<f64>) -> RunConfig {
    RunConfig {
        support_level: 0.9,
        density: DensityConfig::Gaussian,
        outcome: OutcomeConfig {
            family: Family::Gaussian,
            basis: BasisSpec::Linear,
        },
        weighted_cutoff: cutoff,
        bootstrap: BootstrapConfig { b, seed, split },
        grid: GridConfig {
            min: -3.0,
            max: 3.0,
            m: 9,
        },
        columns: None,
    }
}

proptest! {
    /// The HDR is the smallest density-ranked set reaching alpha: mass
    /// strictly above the threshold falls short of alpha, mass at or above
    /// reaches it, and zero-density cells never enter.
    #[test]
    fn hdr_mass_sandwich(density in density_row(), alpha in 0.05f64..0.99) {
        let (profile, grid) = one_unit_profile(&density, alpha);
        let thr = profile.thresholds()[0];
        prop_assert!(thr > 0.0);
        let w = grid.cell_widths()[0];
        let total: f64 = density.iter().map(|d| d * w).sum();
        let mass_gt: f64 = density.iter().filter(|&&d| d > thr).map(|d| d * w).sum();
        let mass_ge: f64 = density.iter().filter(|&&d| d >= thr).map(|d| d * w).sum();
        prop_assert!(mass_gt / total < alpha);
        // Floating-point shortfall can leave the accumulated mass a hair
        // under alpha even with every positive cell included.
        prop_assert!(mass_ge / total >= alpha - 1e-9);
        for (i, &d) in density.iter().enumerate() {
            if d == 0.0 {
                prop_assert!(!profile.is_supported(i, 0));
            }
            prop_assert_eq!(profile.is_supported(i, 0), density[i] >= thr);
        }
    }

    /// Raising the support level only grows each unit's supported set, so
    /// the non-overlap ratio can only fall.
    #[test]
    fn hdr_nests_and_tau_is_monotone(density in density_row(), lo in 0.1f64..0.5, hi in 0.55f64..0.99) {
        let (p_lo, _) = one_unit_profile(&density, lo);
        let (p_hi, _) = one_unit_profile(&density, hi);
        for i in 0..density.len() {
            if p_lo.is_supported(i, 0) {
                prop_assert!(p_hi.is_supported(i, 0));
            }
        }
        let t_lo = p_lo.non_overlap_ratio();
        let t_hi = p_hi.non_overlap_ratio();
        for i in 0..density.len() {
            prop_assert!(t_hi[i] <= t_lo[i]);
        }
    }

    /// Substitution lands on a supported grid value and leaves supported
    /// values untouched, bit for bit.
    #[test]
    fn nearest_feasible_is_idempotent(density in density_row(), idx in any::<prop::sample::Index>()) {
        let (profile, grid) = one_unit_profile(&density, 0.9);
        let i = idx.index(density.len());
        let a = grid.values()[i];
        let d = profile.nearest_feasible(a, 0);
        let supported = profile.supported_indices(0);
        prop_assert!(supported.iter().any(|&s| grid.values()[s] == d));
        if profile.is_supported(i, 0) {
            prop_assert_eq!(d.to_bits(), a.to_bits());
        }
        // A second substitution changes nothing.
        prop_assert_eq!(profile.nearest_feasible(d, 0).to_bits(), d.to_bits());
    }

    /// Non-overlap ratios are exact unit fractions k/n.
    #[test]
    fn tau_is_an_exact_fraction(rows in small_table()) {
        let data = dataset(&rows);
        let config = base_config(0, 0, false, None);
        let result = estimate_curves(&data, &config).unwrap();
        let n = data.n() as f64;
        for &t in &result.curves.tau {
            // t = k/n for integer k; multiplying back may wobble by an ulp.
            let k = t * n;
            prop_assert!((k - k.round()).abs() < 1e-9, "tau {t} is not a unit fraction");
            prop_assert!((0.0..=1.0).contains(&t));
        }
    }

    /// With cutoff 0 every weight is 1 under a strictly positive density,
    /// so the weighted curve IS the standard curve.
    #[test]
    fn weighted_with_zero_cutoff_matches_standard(rows in small_table()) {
        let data = dataset(&rows);
        let config = base_config(0, 0, false, Some(0.0));
        let result = estimate_curves(&data, &config).unwrap();
        let w = result.curves.weighted.as_ref().unwrap();
        for (wv, std_v) in w.iter().zip(&result.curves.standard) {
            prop_assert_eq!(wv.to_bits(), std_v.to_bits());
        }
    }

    /// Trimming is undefined exactly where every unit lost support.
    #[test]
    fn trimming_defined_iff_some_support(rows in small_table(), alpha in 0.5f64..0.95) {
        let data = dataset(&rows);
        let mut config = base_config(0, 0, false, None);
        config.support_level = alpha;
        let result = estimate_curves(&data, &config).unwrap();
        for i in 0..result.curves.a.len() {
            prop_assert_eq!(result.curves.trimming[i].is_none(), result.curves.tau[i] == 1.0);
        }
    }

    /// The whole pipeline, bootstrap included, is bit-identical on reruns.
    #[test]
    fn pipeline_is_deterministic(rows in small_table(), seed in any::<u64>(), split in any::<bool>()) {
        let data = dataset(&rows);
        let config = base_config(6, seed, split, Some(0.02));
        let r1 = estimate_curves(&data, &config);
        let r2 = estimate_curves(&data, &config);
        match (r1, r2) {
            (Ok(r1), Ok(r2)) => {
                for i in 0..r1.curves.a.len() {
                    prop_assert_eq!(r1.curves.standard[i].to_bits(), r2.curves.standard[i].to_bits());
                    prop_assert_eq!(r1.curves.feasible[i].to_bits(), r2.curves.feasible[i].to_bits());
                }
                let (b1, b2) = (r1.curves.bands.unwrap(), r2.curves.bands.unwrap());
                for i in 0..b1.standard.0.len() {
                    prop_assert_eq!(b1.standard.0[i].to_bits(), b2.standard.0[i].to_bits());
                    prop_assert_eq!(b1.standard.1[i].to_bits(), b2.standard.1[i].to_bits());
                }
                prop_assert_eq!(r1.failed_replicates, r2.failed_replicates);
            }
            (Err(e1), Err(e2)) => prop_assert_eq!(e1.to_string(), e2.to_string()),
            _ => prop_assert!(false, "one run failed, the other did not"),
        }
    }

    /// Grid cells tile the range: one full step per point, half a step of
    /// overhang at each boundary.
    #[test]
    fn grid_cells_tile_the_range(min in -50.0f64..50.0, span in 0.1f64..100.0, m in 2usize..200) {
        let grid = make_grid(min, min + span, m).unwrap();
        let step = grid.step();
        let total: f64 = grid.cell_widths().iter().sum();
        prop_assert!((total - (span + step)).abs() < 1e-9 * (1.0 + span));
        prop_assert_eq!(grid.values()[0], min);
        prop_assert_eq!(grid.values()[m - 1], min + span);
        for w in grid.values().windows(2) {
            prop_assert!(w[0] < w[1]);
        }
    }

    /// Table writing round-trips every finite double bit for bit.
    #[test]
    fn csv_round_trip_is_bitwise(
        rows in prop::collection::vec(
            (
                prop::num::f64::POSITIVE | prop::num::f64::NEGATIVE | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL,
                prop::num::f64::POSITIVE | prop::num::f64::NEGATIVE | prop::num::f64::ZERO,
                prop::num::f64::POSITIVE | prop::num::f64::NEGATIVE | prop::num::f64::ZERO,
            ),
            1..30,
        )
    ) {
        let data = dataset(&rows);
        let schema = ColumnSchema {
            confounders: vec!["L".into()],
            treatment: "A".into(),
            outcome: "Y".into(),
        };
        let mut buf = Vec::new();
        write_csv(&data, &schema, &mut buf).unwrap();
        let back = load_csv(buf.as_slice(), &schema, false).unwrap();
        for j in 0..data.n() {
            prop_assert_eq!(back.confounder_row(j)[0].to_bits(), data.confounder_row(j)[0].to_bits());
            prop_assert_eq!(back.treatment()[j].to_bits(), data.treatment()[j].to_bits());
            prop_assert_eq!(back.outcome()[j].to_bits(), data.outcome()[j].to_bits());
        }
    }

    /// Binomial predictions are probabilities for any coefficient vector.
    /// The closed interval is the honest bound: past |linear predictor| of
    /// about 37 the sigmoid saturates to an exact 0 or 1 in doubles.
    #[test]
    fn binomial_predictions_stay_in_unit_interval(
        coef in prop::collection::vec(-40.0f64..40.0, 3),
        a in -10.0f64..10.0,
        l in -10.0f64..10.0,
    ) {
        let model = OutcomeModel::from_parts(Family::Binomial, BasisSpec::Linear, coef, 1).unwrap();
        let p = model.predict(a, &[l]);
        prop_assert!((0.0..=1.0).contains(&p), "p = {p}");
    }
}
