use geolab::boundary::{boundary_distance, boundary_point, scattering_relation, FanCoordinate};
use geolab::fiber::SMGridFunction;
use geolab::grid::DiskGrid;
use geolab::spec::{MetricSpec, Profile};
use geolab::util::angle_diff;
use geolab::{pullback, DiskDiffeo, MetricField};
use proptest::prelude::*;
use std::f64::consts::PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scattering_is_an_involution(beta in 0.0..2.0 * PI, alpha in -1.3..1.3f64, c in -0.2..0.3f64) {
        let g = MetricField::conformal_parabolic(c);
        let s = scattering_relation(&g, FanCoordinate { beta, alpha }).unwrap();
        let back = scattering_relation(&g, FanCoordinate { beta: s.beta, alpha: s.alpha }).unwrap();
        prop_assert!(angle_diff(back.beta, beta).abs() < 1e-7);
        prop_assert!((back.alpha - alpha).abs() < 1e-7);
        prop_assert!((back.tau - s.tau).abs() < 1e-7);
    }

    #[test]
    fn boundary_distance_is_symmetric(b1 in 0.0..2.0 * PI, b2 in 0.0..2.0 * PI, s in -0.1..0.1f64) {
        prop_assume!(angle_diff(b1, b2).abs() > 0.05);
        let g = MetricField::sheared(s, 0.5);
        let d12 = boundary_distance(&g, b1, b2).unwrap().length;
        let d21 = boundary_distance(&g, b2, b1).unwrap().length;
        prop_assert!((d12 - d21).abs() < 1e-6 * d12);
        let chord = (boundary_point(1.0, b1) - boundary_point(1.0, b2)).norm();
        prop_assert!(d12 > 0.5 * chord);
    }

    #[test]
    fn boundary_fixing_maps_preserve_boundary_distance(amp in -0.08..0.08f64, b1 in 0.0..2.0 * PI, b2 in 0.0..2.0 * PI) {
        prop_assume!(angle_diff(b1, b2).abs() > 0.2);
        let psi = DiskDiffeo::radial_bump(amp, 0.2, 0.8);
        let g = MetricField::euclidean();
        let h = pullback(&psi, &g);
        for k in 0..8 {
            let x = boundary_point(1.0, 0.8 * k as f64);
            prop_assert!((psi.forward(x) - x).norm() < 1e-14);
        }
        let d = boundary_distance(&g, b1, b2).unwrap().length;
        let e = boundary_distance(&h, b1, b2).unwrap().length;
        prop_assert!((d - e).abs() < 1e-5, "{d} {e}");
    }

    #[test]
    fn hilbert_squares_to_minus_identity_on_mean_free_fibers(coef in prop::collection::vec(-1.0..1.0f64, 8)) {
        let g = MetricField::conformal_parabolic(0.2);
        let u = SMGridFunction::from_fn(&g, DiskGrid::new(4, 8), 32, |p| {
            let th = p.v[1].atan2(p.v[0]);
            coef.iter().enumerate().map(|(k, a)| {
                let m = (k / 2 + 1) as f64;
                if k % 2 == 0 { a * (m * th).cos() } else { a * (m * th).sin() }
            }).sum()
        });
        let hh = u.hilbert().hilbert();
        for (a, b) in hh.values.iter().zip(&u.values) {
            prop_assert!((a + b).abs() < 1e-10);
        }
        let split = u.hilbert_even().pointwise(&u.hilbert_odd(), |e, o| e + o);
        for (s, h) in split.values.iter().zip(&u.hilbert().values) {
            prop_assert!((s - h).abs() < 1e-10);
        }
    }

    #[test]
    fn metric_specs_round_trip(c in -0.5..0.5f64, parabolic in any::<bool>()) {
        let profile = if parabolic { Profile::Parabolic } else { Profile::Constant };
        let m = MetricSpec::Conformal { c, profile };
        let inline = format!("kind:conformal,c={c},profile={}", if parabolic { "parabolic" } else { "constant" });
        prop_assert_eq!(MetricSpec::parse(&inline).unwrap(), m.clone());
        prop_assert_eq!(MetricSpec::parse(&serde_json::to_string(&m).unwrap()).unwrap(), m);
    }
}
