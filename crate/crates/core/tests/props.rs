//! Property-based invariants of the pure transforms.

use proptest::prelude::*;
use vortex_pair::dynamics::{from_w, to_w, PairState, VortexConfig};
use vortex_pair::geometry::wrap_diff;
use vortex_pair::{DomainModel, Point2};

fn strength() -> impl Strategy<Value = f64> {
    prop_oneof![0.05f64..3.0, -3.0f64..-0.05]
}

proptest! {
    #[test]
    fn transform_roundtrip(
        k1 in strength(),
        k2 in strength(),
        x1 in -0.6f64..0.6, y1 in -0.6f64..0.6,
        x2 in -0.6f64..0.6, y2 in -0.6f64..0.6,
    ) {
        prop_assume!((k1 + k2).abs() > 1e-3);
        let z1 = Point2::new(x1, y1);
        let z2 = Point2::new(x2, y2);
        prop_assume!((z1 - z2).norm() > 1e-6);
        let cfg = VortexConfig::new(k1, k2).unwrap();
        let state = PairState::new(z1, z2);
        let back = from_w(&cfg, &to_w(&cfg, &state));
        let scale = 1.0 + z1.norm().max(z2.norm());
        prop_assert!((back.z1 - z1).norm() < 1e-11 * scale);
        prop_assert!((back.z2 - z2).norm() < 1e-11 * scale);
    }

    #[test]
    fn greens_regular_part_is_symmetric(
        x1 in -0.7f64..0.7, y1 in -0.7f64..0.7,
        x2 in -0.7f64..0.7, y2 in -0.7f64..0.7,
        p in 1.1f64..3.0,
    ) {
        let z = Point2::new(x1, y1);
        let w = Point2::new(x2, y2);
        let disk = DomainModel::unit_disk();
        prop_assert_eq!(disk.eval_g(z, w), disk.eval_g(w, z));
        prop_assert!((disk.eval_h(z) - disk.eval_g(z, z)).abs() < 1e-15);
        let power = DomainModel::radial_power(p).unwrap();
        prop_assert_eq!(power.eval_g(z, w), power.eval_g(w, z));
    }

    #[test]
    fn wrapped_difference_reconstructs_the_angle(
        theta in -10.0f64..10.0,
        lift in -50.0f64..50.0,
    ) {
        let d = wrap_diff(theta, lift);
        prop_assert!(d > -std::f64::consts::PI && d <= std::f64::consts::PI);
        let reconstructed = (lift + d).rem_euclid(std::f64::consts::TAU);
        let target = theta.rem_euclid(std::f64::consts::TAU);
        let gap = (reconstructed - target).abs();
        prop_assert!(gap < 1e-9 || (gap - std::f64::consts::TAU).abs() < 1e-9);
    }
}
