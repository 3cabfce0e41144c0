mod common;

use common::{max_abs_diff, sech2};
use isospec::calculus::{count_nodes, schrodinger_residual, EDGE_SKIP};
use isospec::eigensolve::{rt_coefficients, solve_bound_states, solve_levels, SolveConfig};
use isospec::{Grid, SampledFunction};
use proptest::prelude::*;

fn oscillator(g: Grid, w: f64) -> SampledFunction {
    SampledFunction::tabulate(g, move |x| w * w * x * x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn oscillator_levels_residuals_and_nodes(w in 0.5f64..2.0) {
        let u = oscillator(Grid::full_line_default(), w);
        let levels = solve_bound_states(&u, &SolveConfig::auto(&u, 6)).unwrap();
        for (n, l) in levels.iter().enumerate() {
            prop_assert!((l.energy - w * (2 * n + 1) as f64).abs() <= 1e-6);
            prop_assert_eq!(l.node_count, n);
            prop_assert_eq!(count_nodes(l.wavefunction.values(), 1e-10), n);
            let r = schrodinger_residual(&l.wavefunction, &u, l.energy, EDGE_SKIP);
            prop_assert!(r <= 1e-4 * (1.0 + l.energy.abs()), "level {n}: residual {r}");
        }
    }

    #[test]
    fn sech2_levels_match_closed_form(ell in 0.8f64..4.5) {
        let u = SampledFunction::tabulate(Grid::full_line_default(), sech2(ell));
        let got: Vec<f64> = solve_levels(&u, &SolveConfig::auto(&u, 8)).unwrap().iter().map(|l| l.energy).collect();
        // levels with κ = ℓ − n ≥ 0.4 are resolved on [−15, 15]
        let want: Vec<f64> = (0..).map(|n| ell - n as f64).take_while(|k| *k >= 0.4).map(|k| -k * k).collect();
        prop_assert!(got.len() >= want.len());
        prop_assert!(max_abs_diff(&got[..want.len()], &want) <= 1e-6, "{got:?} vs {want:?}");
    }

    #[test]
    fn gaussian_barrier_conserves_flux(a in -2.0f64..2.0, width in 0.5f64..2.0, k0 in 0.2f64..5.0) {
        let u = SampledFunction::tabulate(Grid::full_line_default(), move |x| a * (-(x / width).powi(2)).exp());
        let ks = [k0, 1.3 * k0, 2.1 * k0];
        let s = rt_coefficients(&u, &ks).unwrap();
        prop_assert!(s.flux_defect() <= 1e-4, "{}", s.flux_defect());
    }

    #[test]
    fn refinement_does_not_worsen_levels(w in 0.5f64..2.0) {
        let err = |n: usize| {
            let u = oscillator(Grid::new(-15.0, 15.0, n).unwrap(), w);
            let l = solve_bound_states(&u, &SolveConfig::auto(&u, 4)).unwrap();
            l.iter().enumerate().map(|(k, p)| (p.energy - w * (2 * k + 1) as f64).abs()).fold(0.0, f64::max)
        };
        let (coarse, fine) = (err(751), err(3001));
        prop_assert!(fine <= coarse + 1e-10, "{coarse} -> {fine}");
        prop_assert!(fine <= 1e-6);
    }
}
