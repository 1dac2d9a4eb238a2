use bohm_core::chaos::{average_lyapunov, LyapunovParams, Sampler};
use bohm_core::dynamics::IntegratorParams;
use bohm_core::families::{eq31, eq32};
use std::f64::consts::PI;
use std::time::Instant;
fn main() {
    let iparams = IntegratorParams::default();
    let params = LyapunovParams { n_steps: 10_000, seed: 1, ..Default::default() };
    let sampler = Sampler::default_cube();
    for (label, wf) in [
        ("eq31 a=0", eq31(0.0, 0.0)),
        ("eq31 a=pi/2", eq31(PI / 2.0, 0.0)),
        ("eq32 a=0", eq32(0.0)),
        ("eq32 a=pi/2", eq32(PI / 2.0)),
    ] {
        let t = Instant::now();
        let r = average_lyapunov(&wf.wavefunction, &sampler, 20, &params, &iparams).unwrap();
        println!("{label}: mean={:.5} std={:.5} excl={} max={:.5} [{:.1?}]",
            r.mean_h, r.std_h, r.excluded,
            r.per_sample.iter().map(|(_, e)| e.final_h).fold(f64::MIN, f64::max),
            t.elapsed());
    }
}
