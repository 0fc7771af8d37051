use mesofcs::dynamics::{evolve, InitialCovariance, IntegratorConfig, WindowPlan};
use mesofcs::model::DriveWaveform;
use mesofcs::observables as obs;
use mesofcs::validation::bridge_model;

fn ratio(modes: usize, w: f64, omega: f64) {
    let tau = std::f64::consts::TAU / omega;
    let t1 = 1.0 * tau;
    let periods = 4usize;
    let model = bridge_model(modes, w, 0.5, 0.5,
        DriveWaveform::Cosine { amplitude: 20.0, omega }).unwrap();
    let mut config = IntegratorConfig::new(0.01, t1 + (periods as f64 + 0.25) * tau);
    config.windows = WindowPlan::Explicit(vec![t1]);
    config.store_stride = 2;
    let init = InitialCovariance::Empty.build(&model).unwrap();
    let trace = evolve(&model, init, &config, &[0]).unwrap();
    let win = &trace.windows[0];
    let wt = trace.window_times(0);
    let s0 = obs::single_period_noise(wt, &win.noise[0], win.t_start, tau).unwrap();
    let sinf = obs::zero_frequency_noise(wt, &win.noise[0], win.t_start, tau, 3, 0.02).unwrap();
    println!("N={modes} W={w} omega={omega}: S0={:.6e} Sinf={:.6e} ratio={:.4} (periods {}, conv {})",
        s0, sinf.last_period, s0 / sinf.last_period, sinf.periods, sinf.converged);
}

#[test]
fn gamma_probe() {
    ratio(100, 100.0, 0.2);   // gamma = 2
    ratio(100, 50.0, 0.2);    // gamma = 1
    ratio(200, 50.0, 0.2);    // gamma = 0.5  (paper's spacing)
}
