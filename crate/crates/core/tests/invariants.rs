//! Property-based invariants over randomized parameters.

use std::sync::Arc;

use proptest::prelude::*;
use superband::classical::{init_ensemble, is_ordered, ordering_time, ConstraintMode};
use superband::grid::SimGrid;
use superband::synthesis::{
    analytic_superband_point, momentum_distribution, normalization_constant, SynthesisParams,
};

fn params(alpha: f64, delta_kappa: f64) -> SynthesisParams {
    SynthesisParams {
        alpha,
        delta_kappa,
        ..SynthesisParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectra_normalize_across_the_family(
        alpha in 0.0_f64..3.0,
        delta_kappa in 0.2_f64..1.0,
    ) {
        let p = params(alpha, delta_kappa);
        let grid = Arc::new(SimGrid::new(-256.0, 256.0, 1 << 15).unwrap());
        let spec = momentum_distribution(&p, &grid).unwrap();
        prop_assert!((spec.norm_sq() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn propagation_is_unitary_at_random_times(
        alpha in 0.0_f64..2.0,
        t in -50.0_f64..50.0,
    ) {
        let p = params(alpha, 0.25);
        let grid = Arc::new(SimGrid::new(-512.0, 512.0, 1 << 16).unwrap());
        let spec = momentum_distribution(&p, &grid).unwrap();
        let field = spec.propagate(&p, t).unwrap();
        prop_assert!((field.norm_sq() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn transform_round_trip_is_identity(
        alpha in 0.0_f64..2.0,
        t in 0.0_f64..5.0,
    ) {
        let p = params(alpha, 0.5);
        let grid = Arc::new(SimGrid::new(-256.0, 256.0, 1 << 15).unwrap());
        let spec = momentum_distribution(&p, &grid).unwrap();
        let back = spec.propagate(&p, t).unwrap().to_momentum().unwrap();
        let worst = back
            .amplitudes()
            .iter()
            .zip(spec.amplitudes())
            .enumerate()
            .map(|(k, (a, b))| {
                // undo the evolution phase before comparing
                let kappa = grid.kappa(k);
                let phase = kappa * kappa * t / 2.0;
                let unwound = a * num_complex::Complex64::new(phase.cos(), phase.sin());
                (unwound - b).norm()
            })
            .fold(0.0_f64, f64::max);
        prop_assert!(worst < 1e-10, "worst {}", worst);
    }

    #[test]
    fn closed_form_field_tracks_the_spectral_route(
        alpha in 0.0_f64..2.0,
        t in 0.0_f64..5.0,
        x in -20.0_f64..60.0,
    ) {
        let p = params(alpha, 0.5);
        let grid = Arc::new(SimGrid::new(-512.0, 512.0, 1 << 18).unwrap());
        let spec = momentum_distribution(&p, &grid).unwrap();
        let field = spec.propagate(&p, t).unwrap();
        let j = grid.index_of(x);
        let closed = analytic_superband_point(&p, grid.x(j), t).unwrap();
        prop_assert!((closed - field.amplitudes()[j]).norm() < 1e-9);
    }

    #[test]
    fn normalization_constant_squares_to_the_profile_integral(
        alpha in 0.0_f64..3.0,
        delta_kappa in 0.2_f64..1.0,
    ) {
        let p = params(alpha, delta_kappa);
        let n = normalization_constant(&p).unwrap();
        // quadrature of the unnormalized profile
        let steps = 200_000;
        let (lo, hi) = (p.kappa0 - 12.0 * delta_kappa, p.kappa0 + 12.0 * delta_kappa);
        let h = (hi - lo) / steps as f64;
        let mut acc = 0.0;
        for i in 0..=steps {
            let u = (lo + i as f64 * h - p.kappa0) / delta_kappa;
            let v = (-u * u).exp() - alpha * (-4.0 * u * u).exp();
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            acc += w * v * v * h;
        }
        prop_assert!((acc.sqrt() - n).abs() < 1e-8);
    }

    #[test]
    fn ensembles_sort_by_momentum_after_the_last_crossing(
        seed in 0_u64..5_000,
        n in 2_usize..10,
    ) {
        let ens = init_ensemble(n, (0.0, 1.0), (1.0, 2.0), 1.0, seed, ConstraintMode::ExtremalSwapped).unwrap();
        let tl = ordering_time(&ens).unwrap();
        for dt in [1e-9, 1e-3, 1.0, 100.0] {
            prop_assert!(is_ordered(&ens, tl + dt));
        }
    }
}
