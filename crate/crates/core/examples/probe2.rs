// scratch calibration probe for sweep shapes and the HH section statistic
use bohm_core::chaos::{average_lyapunov, LyapunovParams, Sampler};
use bohm_core::dynamics::IntegratorParams;
use bohm_core::families::{eq31, eq32};
use bohm_core::ode::Dopri5;
use std::f64::consts::PI;
use std::time::Instant;

fn hh_rhs(_t: f64, y: &[f64], dy: &mut [f64]) {
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = -y[0] - 2.0 * y[0] * y[1];
    dy[3] = -y[1] - y[0] * y[0] + y[1] * y[1];
}

/// Section of the HH flow at x = 0, upward crossings, (y, py) pairs.
fn hh_section(energy: f64, y0: f64, py0: f64, t_max: f64, n_max: usize) -> Vec<(f64, f64)> {
    let v = 0.5 * y0 * y0 - y0 * y0 * y0 / 3.0;
    let px = (2.0 * (energy - v) - py0 * py0).sqrt();
    let mut integ = Dopri5::new(hh_rhs, 0.0, vec![0.0, y0, px, py0], 1e-10, 1e-10, 0.5);
    let mut points = Vec::new();
    let mut buf = [0.0; 4];
    while integ.t < t_max && points.len() < n_max {
        integ.step_toward(t_max).unwrap();
        let dense = integ.dense();
        let mut prev = {
            dense.eval_theta(0.0, &mut buf);
            buf[0]
        };
        for k in 1..=4 {
            let th = k as f64 / 4.0;
            dense.eval_theta(th, &mut buf);
            let cur = buf[0];
            if prev < 0.0 && cur >= 0.0 {
                // bisect for the upward crossing
                let (mut lo, mut hi) = ((k - 1) as f64 / 4.0, th);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    dense.eval_theta(mid, &mut buf);
                    if buf[0] < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                dense.eval_theta(0.5 * (lo + hi), &mut buf);
                points.push((buf[1], buf[3]));
            }
            prev = cur;
        }
    }
    points
}

/// Angle-binned radial spread around the centroid: small for curves, large
/// for scattered clouds.
fn section_spread(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let cy = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cp = points.iter().map(|p| p.1).sum::<f64>() / n;
    const BINS: usize = 24;
    let mut bins: Vec<Vec<f64>> = vec![Vec::new(); BINS];
    let mut scale = 0.0f64;
    for (y, py) in points {
        let (dy, dp) = (y - cy, py - cp);
        let r = (dy * dy + dp * dp).sqrt();
        scale += r;
        let a = dp.atan2(dy).rem_euclid(2.0 * PI);
        bins[((a / (2.0 * PI) * BINS as f64) as usize).min(BINS - 1)].push(r);
    }
    scale /= n;
    let mut spreads: Vec<f64> = bins
        .iter()
        .filter(|b| b.len() >= 3)
        .map(|b| {
            let m = b.iter().sum::<f64>() / b.len() as f64;
            (b.iter().map(|r| (r - m).powi(2)).sum::<f64>() / b.len() as f64).sqrt()
        })
        .collect();
    spreads.sort_by(f64::total_cmp);
    spreads[spreads.len() / 2] / scale
}

fn main() {
    // HH section statistic at both benchmark ICs
    for (e, y, py, label) in [
        (1.0 / 12.0, 0.1, 0.0, "E=1/12 regular"),
        (1.0 / 8.0, -0.25, 0.0, "E=1/8 chaotic"),
    ] {
        let t = Instant::now();
        let pts = hh_section(e, y, py, 4000.0, 400);
        println!(
            "HH {label}: {} crossings, spread = {:.4} [{:.1?}]",
            pts.len(),
            section_spread(&pts),
            t.elapsed()
        );
    }

    // reduced sweep probes
    let iparams = IntegratorParams::default();
    let params = LyapunovParams {
        n_steps: 3000,
        seed: 1,
        ..Default::default()
    };
    let sampler = Sampler::default_cube();
    for alpha in [0.0, PI / 10.0, PI / 4.0, 2.0 * PI / 5.0, PI / 2.0] {
        let t = Instant::now();
        let g = eq31(alpha, 0.0);
        let r = average_lyapunov(&g.wavefunction, &sampler, 6, &params, &iparams).unwrap();
        println!(
            "eq31 alpha={alpha:.3}: mean={:.4} std={:.4} excl={} [{:.1?}]",
            r.mean_h,
            r.std_h,
            r.excluded,
            t.elapsed()
        );
    }
    for alpha in [0.0, PI / 10.0, PI / 4.0, 2.0 * PI / 5.0, PI / 2.0] {
        let t = Instant::now();
        let g = eq32(alpha);
        let r = average_lyapunov(&g.wavefunction, &sampler, 6, &params, &iparams).unwrap();
        println!(
            "eq32 alpha={alpha:.3}: mean={:.4} std={:.4} excl={} [{:.1?}]",
            r.mean_h,
            r.std_h,
            r.excluded,
            t.elapsed()
        );
    }
}
