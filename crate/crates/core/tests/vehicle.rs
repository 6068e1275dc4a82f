use chargeplan::vehicle::{default_fleet, link_energy, tractive_force, tractive_power, DriveState, Regen, VehicleSpec};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = VehicleSpec> {
    (800.0f64..3000.0, 0.2f64..0.4, 1.8f64..3.0, 0.005f64..0.02, 1.0f64..1.2, 0.7f64..1.0).prop_map(
        |(m, cd, area, f, delta, eta)| VehicleSpec {
            name: "p".into(),
            m,
            cd,
            area,
            f,
            delta,
            eta,
            battery_kwh: 50.0,
            i_t: 9.0,
            r_wheel: 0.33,
        },
    )
}

proptest! {
    #[test]
    fn force_is_the_sum_of_its_terms(spec in spec_strategy(), u in 0.0f64..150.0, a in -3.0f64..3.0, th in -0.3f64..0.3) {
        let s = DriveState { u_kmh: u, accel: a, theta: th };
        let f = tractive_force(&spec, &s, 9.81);
        let g = spec.m * 9.81;
        let by_hand = g * th.cos() * spec.f + g * th.sin() + spec.cd * spec.area * u * u / 21.15 + spec.delta * spec.m * a;
        prop_assert!((f.total_n() - by_hand).abs() <= 1e-12 * by_hand.abs().max(1.0));
        prop_assert!((f.total_n() - (f.rolling_n + f.grade_n + f.aero_n + f.inertia_n)).abs() <= 1e-12 * f.total_n().abs().max(1.0));
    }

    #[test]
    fn splitting_a_link_keeps_its_energy(spec in spec_strategy(), len in 1.0f64..20_000.0, u in 5.0f64..130.0, th in -0.1f64..0.1) {
        let whole = link_energy(&spec, len, u, th, 9.81, Regen(None));
        let halves = 2.0 * link_energy(&spec, len / 2.0, u, th, 9.81, Regen(None));
        prop_assert!((whole - halves).abs() <= 1e-9);
        prop_assert!(whole >= 0.0);
    }

    #[test]
    fn energy_grows_with_mass_drag_area_friction(spec in spec_strategy(), len in 100.0f64..5000.0, u in 5.0f64..130.0, th in 0.0f64..0.1, k in 1.0f64..1.5) {
        let base = link_energy(&spec, len, u, th, 9.81, Regen(None));
        for bigger in [
            VehicleSpec { m: spec.m * k, ..spec.clone() },
            VehicleSpec { cd: spec.cd * k, ..spec.clone() },
            VehicleSpec { area: spec.area * k, ..spec.clone() },
            VehicleSpec { f: spec.f * k, ..spec.clone() },
        ] {
            prop_assert!(link_energy(&bigger, len, u, th, 9.81, Regen(None)) >= base);
        }
    }

    #[test]
    fn slope_sign_only_flips_the_grade_term(spec in spec_strategy(), u in 0.0f64..130.0, th in 0.0f64..0.3) {
        let up = tractive_force(&spec, &DriveState::cruise(u, th), 9.81);
        let down = tractive_force(&spec, &DriveState::cruise(u, -th), 9.81);
        prop_assert_eq!(up.rolling_n, down.rolling_n);
        prop_assert_eq!(up.aero_n, down.aero_n);
        prop_assert_eq!(up.grade_n, -down.grade_n);
        let pu = tractive_power(&spec, &DriveState::cruise(u, th), 9.81, Regen(None)).wheel_w;
        let pd = tractive_power(&spec, &DriveState::cruise(u, -th), 9.81, Regen(None)).wheel_w;
        prop_assert!((pu - pd - 2.0 * up.grade_n * u / 3.6).abs() <= 1e-9 * pu.abs().max(1.0));
    }
}

#[test]
fn tiny_links_use_almost_nothing() {
    let spec = &default_fleet()[0];
    assert!(link_energy(spec, 1e-6, 100.0, 0.0, 9.81, Regen(None)) < 1e-9);
}

#[test]
fn steep_descent_is_free() {
    let spec = &default_fleet()[3];
    assert_eq!(link_energy(spec, 2000.0, 40.0, -0.15, 9.81, Regen(None)), 0.0);
}
