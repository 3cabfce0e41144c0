mod common;

use common::max_abs_diff;
use isospec::calculus::{schrodinger_residual, EDGE_SKIP};
use isospec::eigensolve::{solve_levels, SolveConfig};
use isospec::shapeinv::{si_spectrum, si_wavefunction, swkb_quantization, SiPotential, SwkbConfig};
use isospec::Grid;
use proptest::prelude::*;

fn family(pt: bool) -> SiPotential {
    if pt {
        SiPotential::poschl_teller()
    } else {
        SiPotential::harmonic()
    }
}

/// Levels worth comparing: all of them for the oscillator, and for
/// Pöschl–Teller those with `a − n ≥ 0.4`.
fn level_count(pt: bool, a: f64) -> usize {
    if pt {
        (0..).take_while(|n| a - *n as f64 >= 0.4).count().min(5)
    } else {
        5
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn swkb_is_exact_for_shape_invariant_pairs(pt in any::<bool>(), a in 0.5f64..4.5) {
        let p = family(pt);
        let n = level_count(pt, a);
        let g = Grid::full_line_default();
        let algebraic = si_spectrum(&p, a, n - 1, &g).unwrap();
        let cfg = SwkbConfig::default();
        let w = |x: f64| p.superpotential(x, a);
        for (k, e) in algebraic.iter().enumerate() {
            let s = swkb_quantization(&w, k, &cfg).unwrap();
            prop_assert!((s - e).abs() <= 1e-6 * (1.0 + e.abs()), "n = {k}: {s} vs {e}");
        }
    }

    #[test]
    fn algebraic_spectrum_matches_the_eigensolver(pt in any::<bool>(), a in 0.5f64..4.5) {
        let p = family(pt);
        let n = level_count(pt, a);
        let g = Grid::full_line_default();
        let algebraic = si_spectrum(&p, a, n - 1, &g).unwrap();
        let v = p.v_minus(&g, a);
        let numeric: Vec<f64> = solve_levels(&v, &SolveConfig::auto(&v, n)).unwrap().iter().map(|l| l.energy).collect();
        prop_assert_eq!(numeric.len(), n);
        prop_assert!(max_abs_diff(&numeric, &algebraic) <= 1e-5, "{numeric:?} vs {algebraic:?}");
    }

    #[test]
    fn ladder_wavefunctions_solve_the_equation(pt in any::<bool>(), a in 0.5f64..4.5) {
        let p = family(pt);
        let n = level_count(pt, a);
        let g = Grid::full_line_default();
        let e = si_spectrum(&p, a, n - 1, &g).unwrap();
        let v = p.v_minus(&g, a);
        for (k, ek) in e.iter().enumerate() {
            let psi = si_wavefunction(&p, a, k, &g).unwrap();
            let r = schrodinger_residual(&psi, &v, *ek, EDGE_SKIP);
            prop_assert!(r <= 1e-3 * (1.0 + ek.abs()), "n = {k}: residual {r}");
        }
    }
}
