use snakeforge_core::calibration::{calibrate, CalibrationTargets};
use snakeforge_core::config::default_assembly;
use snakeforge_core::model::Branch;

#[test]
fn shipped_constants_match_a_fresh_calibration() {
    let shipped = default_assembly();
    let r = calibrate(&shipped, &CalibrationTargets::default()).unwrap();
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let front = shipped.pneumatics.branch(Branch::Front).unwrap();
    let rear = shipped.pneumatics.branch(Branch::Rear).unwrap();
    assert!(rel(r.front_fill_resistance, front.fill_resistance) < 1e-5);
    assert!(rel(r.rear_fill_resistance, rear.fill_resistance) < 1e-5);
    assert!(rel(r.front_vent_resistance, front.vent_resistance) < 1e-5);
    assert!(rel(r.rear_vent_resistance, rear.vent_resistance) < 1e-5);
    assert!(rel(r.drag_coefficient, shipped.hydro.drag_coefficient) < 1e-4);
    assert!(rel(r.added_mass_kg, shipped.hydro.added_mass_kg) < 1e-4);
}

#[test]
fn calibration_hits_its_targets() {
    let targets = CalibrationTargets::default();
    let r = calibrate(&default_assembly(), &targets).unwrap();
    assert!((r.descent.mean_acceleration_m_s2 / targets.descent_acceleration_m_s2 - 1.0).abs() < 1e-5);
    assert!((r.ascent.mean_acceleration_m_s2 / targets.ascent_acceleration_m_s2 - 1.0).abs() < 1e-5);
}

#[test]
fn fit_recovers_from_a_distant_start() {
    let mut a = default_assembly();
    a.hydro.drag_coefficient *= 2.0;
    a.hydro.added_mass_kg *= 0.5;
    let shipped = default_assembly();
    let r = calibrate(&a, &CalibrationTargets::default()).unwrap();
    assert!(((r.drag_coefficient - shipped.hydro.drag_coefficient) / shipped.hydro.drag_coefficient).abs() < 1e-3);
    assert!(((r.added_mass_kg - shipped.hydro.added_mass_kg) / shipped.hydro.added_mass_kg).abs() < 1e-3);
}
