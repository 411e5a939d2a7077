use fbd_core::audit::{round_trip, sample};
use fbd_core::tilthex::{build_tilthex, TiltHexParams, TiltHexTrajectory};

fn samples(gravity: f64, r: usize) -> (fbd_core::RobotModel, Vec<fbd_core::MotionInput>) {
    let model = build_tilthex(&TiltHexParams {
        gravity,
        ..TiltHexParams::default()
    })
    .unwrap();
    let motions = sample(&model, &TiltHexTrajectory::default(), 0.37, 82, r + 2).unwrap();
    (model, motions)
}

#[test]
fn gravity_free_round_trip_within_one_part_per_million() {
    let (model, motions) = samples(0.0, 5);
    let report = round_trip(&model, &motions, 5).unwrap();
    for e in &report.per_order {
        assert!(e.relative() < 1e-6, "order {}: {:e}", e.order, e.relative());
    }
}

#[test]
fn low_orders_round_trip_under_gravity() {
    let (model, motions) = samples(9.81, 1);
    let report = round_trip(&model, &motions, 1).unwrap();
    for e in &report.per_order {
        assert!(e.relative() < 1e-8, "order {}: {:e}", e.order, e.relative());
    }
}

#[test]
fn round_trip_error_grows_with_order_under_gravity() {
    // The base is far from the origin and the links are light, so each pair
    // of orders multiplies rounding errors by roughly the squared ratio of
    // the pendulum frequency to the trajectory frequency.
    let (model, motions) = samples(9.81, 5);
    let errors: Vec<f64> = round_trip(&model, &motions, 5)
        .unwrap()
        .per_order
        .iter()
        .map(|e| e.relative())
        .collect();
    assert!(errors[0] < 1e-8 && errors[5] < 1.0, "{errors:?}");
    assert!(errors[5] > errors[1], "{errors:?}");
}
