// scratch calibration probe (removed before release)
use bohm_core::basis::{BasisFamily, BasisState};
use bohm_core::chaos::{henon_heiles_lyapunov, henon_heiles_section_start, lyapunov, LyapunovParams};
use bohm_core::dynamics::IntegratorParams;
use bohm_core::wavefunction::{Configuration, ProductTerm, WaveFunction};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::time::Instant;

fn bs(f: BasisFamily, qn: &[i32]) -> BasisState {
    BasisState::new(f, qn).unwrap()
}
fn ph(p: f64) -> Complex64 {
    Complex64::from_polar(1.0, p)
}

fn main() {
    let t_budget: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2000);
    let iparams = IntegratorParams::default();
    let params = LyapunovParams {
        n_steps: t_budget,
        seed: 42,
        ..Default::default()
    };

    // ho3d_stat: spherical three-mode, E = 9/2, target h ~ 0.06
    let wf = WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![bs(BasisFamily::Harm3DSph, &[0, 3, 1])]),
        ProductTerm::new(ph(PI / 3.0), vec![bs(BasisFamily::Harm3DSph, &[0, 3, 0])]),
        ProductTerm::new(ph(PI / 7.0), vec![bs(BasisFamily::Harm3DSph, &[1, 1, 0])]),
    ])
    .unwrap();
    let (r, th, phi): (f64, f64, f64) = (6.6969, 2.38696, -0.249865);
    let x0 = vec![
        r * th.sin() * phi.cos(),
        r * th.sin() * phi.sin(),
        r * th.cos(),
    ];
    let t = Instant::now();
    let est = lyapunov(&wf, &Configuration::new(x0), &params, &iparams).unwrap();
    println!(
        "ho3d_stat      T={} h={:.4} status={:?} [{:.1?}]",
        t_budget, est.final_h, est.status, t.elapsed()
    );

    // cartesian cousin, nodal plane at x=0, target h ~ 0.06
    let wf = WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![bs(BasisFamily::Harm3DCart, &[1, 1, 1])]),
        ProductTerm::new(ph(PI / 3.0), vec![bs(BasisFamily::Harm3DCart, &[3, 0, 0])]),
        ProductTerm::new(ph(PI / 7.0), vec![bs(BasisFamily::Harm3DCart, &[1, 2, 0])]),
    ])
    .unwrap();
    let x0 = vec![-2.212756, -1.97466, 0.179963];
    let t = Instant::now();
    let est = lyapunov(&wf, &Configuration::new(x0), &params, &iparams).unwrap();
    println!(
        "ho3d_stat_cart T={} h={:.4} status={:?} [{:.1?}]",
        t_budget, est.final_h, est.status, t.elapsed()
    );

    // two-particle polar four-mode, E = 6, target h ~ 0.17
    let p11 = bs(BasisFamily::Harm2DPolar, &[1, 1]);
    let p20 = bs(BasisFamily::Harm2DPolar, &[2, 0]);
    let wf = WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![p11.clone(), p11.clone()]),
        ProductTerm::new(ph(PI / 3.0), vec![p11.clone(), p20.clone()]),
        ProductTerm::new(ph(PI / 5.0), vec![p20.clone(), p11.clone()]),
        ProductTerm::new(ph(PI / 7.0), vec![p20.clone(), p20.clone()]),
    ])
    .unwrap();
    let x0 = vec![2.37166, -0.374916, -0.522219, 2.99893];
    let t = Instant::now();
    let est = lyapunov(&wf, &Configuration::new(x0), &params, &iparams).unwrap();
    println!(
        "harm_2p_polar  T={} h={:.4} status={:?} [{:.1?}]",
        t_budget, est.final_h, est.status, t.elapsed()
    );

    // two-particle box three-mode, target h ~ 25 (band [10, 40])
    let b71 = bs(BasisFamily::Box2D, &[7, 1]);
    let b17 = bs(BasisFamily::Box2D, &[1, 7]);
    let b55 = bs(BasisFamily::Box2D, &[5, 5]);
    let wf = WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![b71.clone(), b71.clone()]),
        ProductTerm::new(ph(PI / 3.0), vec![b17.clone(), b17.clone()]),
        ProductTerm::new(ph(PI / 7.0), vec![b55.clone(), b55.clone()]),
    ])
    .unwrap();
    let x0 = vec![0.666891, 0.584026, 0.193745, 0.747208];
    let box_params = LyapunovParams {
        n_steps: (t_budget / 4).max(100),
        seed: 42,
        ..Default::default()
    };
    let t = Instant::now();
    let est = lyapunov(&wf, &Configuration::new(x0), &box_params, &iparams).unwrap();
    println!(
        "box_2p         T={} h={:.3} status={:?} [{:.1?}]",
        box_params.n_steps, est.final_h, est.status, t.elapsed()
    );

    // Henon-Heiles probes
    let tight = IntegratorParams {
        rel_tol: 1e-12,
        abs_tol: 1e-12,
        ..Default::default()
    };
    for (e, y, py, label) in [
        (1.0 / 12.0, 0.1, 0.0, "regular E=1/12"),
        (1.0 / 8.0, -0.15, 0.2, "probe  E=1/8 a"),
        (1.0 / 8.0, 0.2, -0.25, "probe  E=1/8 b"),
        (1.0 / 8.0, -0.25, 0.0, "probe  E=1/8 c"),
        (1.0 / 8.0, 0.1, 0.25, "probe  E=1/8 d"),
    ] {
        let x0 = henon_heiles_section_start(e, y, py).unwrap();
        let hh_params = LyapunovParams {
            n_steps: 4 * t_budget,
            seed: 7,
            ..Default::default()
        };
        let t = Instant::now();
        match henon_heiles_lyapunov(e, &x0, &hh_params, &tight) {
            Ok((est, drift)) => println!(
                "HH {label} T={} h={:.4} drift={:.1e} [{:.1?}]",
                4 * t_budget,
                est.final_h,
                drift,
                t.elapsed()
            ),
            Err(err) => println!("HH {label}: {err}"),
        }
    }
}
