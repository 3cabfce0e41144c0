use isospec::calculus::EDGE_SKIP;
use isospec::darboux::{darboux_transform, DarbouxSeed};
use isospec::tdse::{
    intertwining_defect, propagate_tdse, tdse_darboux_forward, tdse_residual, transformed_potential, uniform_times,
    SpaceTimeFunction, TdseSeed,
};
use isospec::{ComplexFunction, Grid, SampledFunction};
use num_complex::Complex64;
use proptest::prelude::*;

fn packet(g: Grid, x0: f64, k: f64, w: f64) -> ComplexFunction {
    SampledFunction::tabulate(g, move |x| Complex64::new(0.0, k * x).exp() * (-(x - x0).powi(2) / (2.0 * w * w)).exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn intertwining_holds_on_arbitrary_probes(
        kappa in 0.5f64..1.5,
        plane in any::<bool>(),
        x0 in -3.0f64..3.0,
        k in -2.0f64..2.0,
        w in 0.7f64..2.0,
        drift in -1.0f64..1.0,
    ) {
        let g = Grid::full_line_default();
        let times = uniform_times(0.0, 0.01, 11);
        let v0 = SpaceTimeFunction::constant_in_time(&SampledFunction::zeros(g), times.clone()).unwrap();
        let seed = if plane {
            TdseSeed::plane_wave(g, kappa, times.clone()).unwrap()
        } else {
            let phi = SampledFunction::tabulate(g, move |x| (kappa * x).cosh());
            TdseSeed::stationary(&phi, -kappa * kappa, times.clone()).unwrap()
        };
        let v1 = transformed_potential(&v0, &seed).unwrap();
        let probe = SpaceTimeFunction::tabulate(g, times, |x, t| {
            let c = x0 + drift * t;
            Complex64::new(0.0, k * x - 0.3 * t).exp() * (-(x - c).powi(2) / (2.0 * w * w)).exp()
        })
        .unwrap();
        let d = intertwining_defect(&v0, &v1, &seed, &probe).unwrap();
        prop_assert!(d.iter().all(|v| *v <= 1e-3), "{d:?}");
    }

    #[test]
    fn stationary_seeds_reduce_to_darboux(kappa in 0.3f64..2.0, oscillator in any::<bool>()) {
        let g = Grid::full_line_default();
        let times = uniform_times(0.0, 0.01, 3);
        let (u, seed) = if oscillator {
            let u = SampledFunction::tabulate(g, |x| x * x);
            (u.clone(), DarbouxSeed::ground(&u).unwrap())
        } else {
            let phi = SampledFunction::tabulate(g, move |x| (kappa * x).cosh());
            (SampledFunction::zeros(g), DarbouxSeed::new(phi, -kappa * kappa))
        };
        let v0 = SpaceTimeFunction::constant_in_time(&u, times.clone()).unwrap();
        let ts = TdseSeed::stationary(&seed.psi1, seed.lambda1, times).unwrap();
        let v1 = transformed_potential(&v0, &ts).unwrap();
        let static_v = darboux_transform(&u, &seed).unwrap().potential;
        for j in 0..3 {
            let s = v1.slice(j);
            prop_assert!(s.values().iter().all(|z| z.im.abs() <= 1e-10));
            prop_assert!(s.re().sup_distance(&static_v, EDGE_SKIP).unwrap() <= 1e-6);
        }
    }

    #[test]
    fn propagation_preserves_the_norm(x0 in -3.0f64..3.0, k in -2.0f64..2.0, w in 0.7f64..2.0, oscillator in any::<bool>()) {
        let g = Grid::full_line_default();
        let u = if oscillator { SampledFunction::tabulate(g, |x| x * x) } else { SampledFunction::zeros(g) };
        let times = uniform_times(0.0, 0.02, 11);
        let psi = propagate_tdse(&u, &packet(g, x0, k, w), &times).unwrap();
        let n = psi.norms();
        prop_assert!(n.iter().all(|v| (v - n[0]).abs() <= 1e-8 * n[0]), "{n:?}");
    }

    #[test]
    fn forward_transform_solves_the_new_equation(kappa in 0.5f64..1.5, x0 in -2.0f64..2.0, k in -1.0f64..1.0) {
        let g = Grid::full_line_default();
        let times = uniform_times(0.0, 0.005, 21);
        let free = SampledFunction::zeros(g);
        let v0 = SpaceTimeFunction::constant_in_time(&free, times.clone()).unwrap();
        let phi = SampledFunction::tabulate(g, move |x| (kappa * x).cosh());
        let seed = TdseSeed::stationary(&phi, -kappa * kappa, times.clone()).unwrap();
        let psi0 = propagate_tdse(&free, &packet(g, x0, k, 1.5), &times).unwrap();
        let fw = tdse_darboux_forward(&v0, &seed, &psi0).unwrap();
        let r = tdse_residual(&fw.v1, &fw.psi1).unwrap();
        prop_assert!(r.iter().all(|v| *v <= 1e-3), "{r:?}");
        prop_assert!(fw.imaginary_part <= 1e-10);
    }
}
