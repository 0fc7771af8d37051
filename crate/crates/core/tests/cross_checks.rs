//! Cross-validation of the Gaussian path against externally computed
//! reference values and against the in-crate oracle paths.

use mesofcs::dynamics::{evolve, InitialCovariance, IntegratorConfig, WindowPlan};
use mesofcs::validation::{three_mode_model, DriveCase};

/// Trace the three-mode instance and return (J, D) at the two probe times.
fn gaussian_j_d(case: DriveCase) -> ((f64, f64), (f64, f64)) {
    let model = three_mode_model(case).unwrap();
    let mut config = IntegratorConfig::new(0.01, 10.0);
    config.windows = WindowPlan::Explicit(vec![0.0]);
    let init = InitialCovariance::Empty.build(&model).unwrap();
    let trace = evolve(&model, init, &config, &[0]).unwrap();
    let idx_of = |t: f64| {
        trace
            .times
            .iter()
            .position(|&x| (x - t).abs() < 1e-9)
            .unwrap_or_else(|| panic!("time {t} not stored"))
    };
    let (i1, i2) = (idx_of(1.0), idx_of(10.0));
    let d = &trace.windows[0].noise[0];
    ((trace.currents[0][i1], d[i1]), (trace.currents[0][i2], d[i2]))
}

/// Reference values for the three-mode instances, computed with an
/// independent implementation (numpy) of both the Lyapunov pair and the
/// full Fock-space master equation; the two agreed to better than 1e−9.
#[test]
fn gaussian_path_matches_external_reference() {
    let cases = [
        // (case, J(1), D(1,0), J(10), D(10,0))
        (
            DriveCase::Static,
            -0.076621393256,
            0.072362199619,
            -0.066200914374,
            0.044871478785,
        ),
        (
            DriveCase::Cosine,
            -0.075785895897,
            0.071661230966,
            -0.013190055142,
            0.014879865516,
        ),
        (
            DriveCase::Pulse,
            -0.076485066688,
            0.072236696847,
            -0.065187323392,
            0.046234742566,
        ),
    ];
    for (case, j1, d1, j10, d10) in cases {
        let ((gj1, gd1), (gj10, gd10)) = gaussian_j_d(case);
        assert!((gj1 - j1).abs() < 1e-6, "{case:?} J(1): {gj1} vs {j1}");
        assert!((gd1 - d1).abs() < 1e-6, "{case:?} D(1): {gd1} vs {d1}");
        assert!((gj10 - j10).abs() < 1e-6, "{case:?} J(10): {gj10} vs {j10}");
        assert!((gd10 - d10).abs() < 1e-6, "{case:?} D(10): {gd10} vs {d10}");
    }
}

/// Fock-space covariance matches the Lyapunov covariance entrywise on the
/// same instance with the same integrator settings.
#[test]
fn oracle_covariance_matches_gaussian_covariance() {
    use mesofcs::oracle::{evolve_tilted, FockSpaceModel};
    let model = three_mode_model(DriveCase::Cosine).unwrap();
    let config = IntegratorConfig::new(0.01, 4.0);
    let init = InitialCovariance::Empty.build(&model).unwrap();
    let trace = evolve(&model, init, &config, &[0]).unwrap();
    let fock = FockSpaceModel::new(&model).unwrap();
    let state = evolve_tilted(&fock, &fock.vacuum(), 0, 0.0, 0.0, 4.0, 0.01, |_, _| {}).unwrap();
    let c_fock = fock.covariance_from_density(&state.rho);
    let c_gauss = &trace.final_state.c;
    for i in 0..3 {
        for j in 0..3 {
            let diff = (c_fock[[i, j]] - c_gauss[[i, j]]).norm();
            assert!(diff < 1e-8, "C[{i},{j}] differs by {diff}");
        }
    }
}
