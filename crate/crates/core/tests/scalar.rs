use geoptics::scalar_ft::{scalar_evolve, scalar_riemann, AffineFlux};
use geoptics::tracking::FrontKind;
use geoptics::PiecewiseConstantFn;
use proptest::prelude::*;

const NU: u32 = 4;

/// Grid-valued data with values `k / 2^NU`, `|k| ≤ 16`, constant outside `[0, 8]`.
fn grid_data() -> impl Strategy<Value = PiecewiseConstantFn> {
    (1usize..7).prop_flat_map(|n| {
        (prop::collection::vec(0.0..8.0f64, n), prop::collection::vec(-16i32..=16, n + 1)).prop_map(|(mut xs, ks)| {
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let vals: Vec<f64> = ks.iter().take(xs.len() + 1).map(|&k| k as f64 / 16.0).collect();
            PiecewiseConstantFn::scalar(xs, vals).unwrap()
        })
    })
}

fn on_grid(f: &PiecewiseConstantFn) -> bool {
    (0..f.interval_count()).all(|i| {
        let k = f.value(i)[0] * 16.0;
        k == k.round()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_keeps_grid_mass_and_tv(init in grid_data(), t in 0.0..4.0f64) {
        let flux = AffineFlux::burgers(NU, -1.0, 1.0).unwrap();
        let traj = scalar_evolve(&init, &flux, 4.0).unwrap();
        let u = traj.snapshot(t).unwrap();
        prop_assert!(on_grid(&u));
        prop_assert!(u.total_variation() <= init.total_variation() + 1e-12);
        // speeds are at most 1, so the ends of [-2 - t, 10 + t] keep the far-field
        // states and the mass changes only by the boundary fluxes u²/2
        let (a, b) = (-2.0 - t, 10.0 + t);
        let (l, r) = (init.left_end()[0], init.right_end()[0]);
        let inflow = t * 0.5 * (l * l - r * r);
        let drift = (u.integral(a, b)[0] - init.integral(a, b)[0] - inflow).abs();
        prop_assert!(drift <= 1e-10 * (1.0 + t), "drift {}", drift);
        let history = traj.tv_history_units();
        prop_assert!(history.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn burgers_shocks_move_at_the_mean(ka in -16i32..=16, kb in -16i32..=16) {
        prop_assume!(ka > kb);
        let flux = AffineFlux::burgers(NU, -1.0, 1.0).unwrap();
        let (a, b) = (ka as f64 / 16.0, kb as f64 / 16.0);
        let fan = scalar_riemann(a, b, &flux).unwrap();
        prop_assert_eq!(fan.len(), 1);
        prop_assert_eq!(fan[0].kind, FrontKind::Shock);
        prop_assert!((fan[0].speed - 0.5 * (a + b)).abs() <= 1e-15);
    }

    #[test]
    fn burgers_rarefactions_fan_out_cell_by_cell(ka in -16i32..=16, kb in -16i32..=16) {
        prop_assume!(ka < kb);
        let flux = AffineFlux::burgers(NU, -1.0, 1.0).unwrap();
        let fan = scalar_riemann(ka as f64 / 16.0, kb as f64 / 16.0, &flux).unwrap();
        prop_assert_eq!(fan.len(), (kb - ka) as usize);
        for (i, f) in fan.iter().enumerate() {
            // slope of u²/2 across the cell [k, k+1]/16 is its midpoint
            let mid = (ka as f64 + i as f64 + 0.5) / 16.0;
            prop_assert!((f.speed - mid).abs() <= 1e-15);
            prop_assert_eq!(f.kind, FrontKind::Rarefaction);
        }
    }
}

#[test]
fn snapshot_at_zero_is_the_data() {
    let init = PiecewiseConstantFn::scalar(vec![0.0, 1.0, 3.0], vec![0.0, 0.5, -0.25, 0.0]).unwrap();
    let flux = AffineFlux::burgers(NU, -1.0, 1.0).unwrap();
    let traj = scalar_evolve(&init, &flux, 1.0).unwrap();
    assert!(traj.snapshot(0.0).unwrap().l1_distance(&init, None).unwrap() == 0.0);
}
