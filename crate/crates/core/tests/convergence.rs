use biphoton::multiplex::ShiftSet;
use biphoton::params::Model;
use biphoton::schmidt::{convergence_check, FrequencyGrid, Scenario};
use biphoton::spectral::Evaluator;

fn single_cell() -> Scenario {
    Scenario::new(Evaluator::closed(Model::default()), ShiftSet::single())
}

#[test]
fn single_cell_resolution_converges() {
    let report = convergence_check(&single_cell(), FrequencyGrid::sweep(), false).unwrap();
    assert_eq!(report.resolution.against.n_points, 1024);
    assert!(report.resolution.delta_s.abs() < 1e-2, "{report:?}");
    assert!(report.passed);
}

#[test]
fn coarse_grid_is_flagged() {
    // Spacing 100 is wider than the spectral features.
    let report = convergence_check(&single_cell(), FrequencyGrid::new(3200.0, 64).unwrap(), false).unwrap();
    assert!(!report.passed, "{report:?}");
    assert!(!report.resolution.passed);
}

/// The single-cell amplitude decays slowly enough that doubling the ±400 window
/// still moves S by about 0.04 bits.
#[test]
fn window_doubling_moves_single_cell_entropy() {
    let report = convergence_check(&single_cell(), FrequencyGrid::new(400.0, 512).unwrap(), true).unwrap();
    let window = report.window.expect("window comparison requested");
    assert_eq!(window.against.half_width, 800.0);
    assert!((0.03..0.05).contains(&window.delta_s), "{window:?}");
    assert!(!window.passed);
    assert!(!report.passed);
}
