// trace the slowest-converging endpoint sample to long horizon
use bohm_core::chaos::{average_lyapunov, lyapunov, InitialDirection, LyapunovParams, Sampler};
use bohm_core::dynamics::IntegratorParams;
use bohm_core::families::eq31;
use bohm_core::wavefunction::Configuration;
use std::f64::consts::PI;

fn main() {
    let iparams = IntegratorParams::default();
    let params = LyapunovParams { n_steps: 10_000, seed: 1, ..Default::default() };
    let sampler = Sampler::default_cube();
    let g = eq31(PI / 2.0, 0.0);
    let r = average_lyapunov(&g.wavefunction, &sampler, 20, &params, &iparams).unwrap();
    let (worst_x0, worst) = r
        .per_sample
        .iter()
        .max_by(|a, b| a.1.final_h.total_cmp(&b.1.final_h))
        .unwrap();
    println!("worst sample x0 = {worst_x0:?}, h(1e4) = {:.5}", worst.final_h);
    let long = LyapunovParams {
        n_steps: 100_000,
        seed: 1,
        e0: InitialDirection::Fixed({
            let mut e = vec![0.0; 3];
            e[0] = 1.0;
            e
        }),
        ..Default::default()
    };
    let est = lyapunov(&g.wavefunction, &Configuration::new(worst_x0.clone()), &long, &iparams).unwrap();
    for frac in [10, 5, 2, 1] {
        let idx = est.h_series.len() / frac - 1;
        let (t, h) = est.h_series[idx];
        println!("h(T={t:0.0}) = {h:.5}");
    }
}
