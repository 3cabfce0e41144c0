mod common;

use common::{max_abs_diff, sech2};
use isospec::calculus::{interior, normalized, schrodinger_residual, sign_changes, EDGE_SKIP};
use isospec::darboux::{crum_iterate, darboux_transform, inverse_darboux, wronskian, DarbouxSeed};
use isospec::eigensolve::{solve_bound_states, solve_levels, EigenPair, SolveConfig};
use isospec::{Grid, SampledFunction};
use proptest::prelude::*;

fn oscillator(w: f64) -> SampledFunction {
    SampledFunction::tabulate(Grid::full_line_default(), move |x| w * w * x * x)
}

fn levels(u: &SampledFunction, n: usize) -> Vec<EigenPair> {
    solve_bound_states(u, &SolveConfig::auto(u, n)).unwrap()
}

fn energies(u: &SampledFunction, n: usize) -> Vec<f64> {
    solve_levels(u, &SolveConfig::auto(u, n)).unwrap().iter().map(|l| l.energy).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ground_deletion_is_isospectral_for_oscillators(w in 0.5f64..2.0) {
        let u = oscillator(w);
        let src = energies(&u, 5);
        let v = darboux_transform(&u, &DarbouxSeed::ground(&u).unwrap()).unwrap().potential;
        prop_assert!(max_abs_diff(&energies(&v, 4), &src[1..]) <= 1e-5);
    }

    #[test]
    fn ground_deletion_lowers_sech2_strength(ell in 2.0f64..4.5) {
        let u = SampledFunction::tabulate(Grid::full_line_default(), sech2(ell));
        let v = darboux_transform(&u, &DarbouxSeed::ground(&u).unwrap()).unwrap().potential;
        let want: Vec<f64> = (1..).map(|n| ell - n as f64).take_while(|k| *k >= 0.4).map(|k| -k * k).collect();
        let got = energies(&v, 8);
        prop_assert!(got.len() >= want.len());
        prop_assert!(max_abs_diff(&got[..want.len()], &want) <= 1e-5, "{got:?} vs {want:?}");
        let exact = SampledFunction::tabulate(*u.grid(), sech2(ell - 1.0));
        prop_assert!(v.sup_distance(&exact, EDGE_SKIP).unwrap() <= 1e-5);
    }

    #[test]
    fn mapped_eigenfunctions_solve_the_partner(w in 0.5f64..2.0, n in 1usize..4) {
        let u = oscillator(w);
        let ls = levels(&u, n + 1);
        let r = darboux_transform(&u, &DarbouxSeed::ground(&u).unwrap()).unwrap();
        let mapped = normalized(&r.map.apply(&ls[n].wavefunction)).unwrap();
        let res = schrodinger_residual(&mapped, &r.potential, ls[n].energy, EDGE_SKIP);
        prop_assert!(res <= 1e-3 * (1.0 + ls[n].energy.abs()), "residual {res}");
    }

    #[test]
    fn inverse_step_restores_the_source(ell in 1.0f64..4.5) {
        let u = SampledFunction::tabulate(Grid::full_line_default(), sech2(ell));
        let seed = DarbouxSeed::ground(&u).unwrap();
        let v = darboux_transform(&u, &seed).unwrap().potential;
        let phi = seed.psi1.map(|p| 1.0 / p);
        let back = inverse_darboux(&v, &phi, seed.lambda1).unwrap();
        prop_assert!(back.sup_distance(&u, EDGE_SKIP).unwrap() <= 1e-6);
    }

    #[test]
    fn crum_pair_equals_two_steps(w in 0.5f64..2.0) {
        let u = oscillator(w);
        let ls = levels(&u, 2);
        let seeds: Vec<DarbouxSeed> = ls.iter().map(|l| DarbouxSeed::new(l.wavefunction.clone(), l.energy)).collect();
        let crum = crum_iterate(&u, &seeds).unwrap().potential;
        let first = darboux_transform(&u, &seeds[0]).unwrap();
        let second_seed = DarbouxSeed::new(first.map.apply(&ls[1].wavefunction), ls[1].energy);
        let seq = darboux_transform(&first.potential, &second_seed).unwrap().potential;
        prop_assert!(crum.sup_distance(&seq, EDGE_SKIP).unwrap() <= 1e-5);
    }

    #[test]
    fn consecutive_wronskians_keep_their_sign(w in 0.5f64..2.0, k in 0usize..3) {
        let u = oscillator(w);
        let ls = levels(&u, k + 3);
        let pair = |a: usize, b: usize| {
            let f = [ls[a].wavefunction.clone(), ls[b].wavefunction.clone()];
            wronskian(&f, &u, &[ls[a].energy, ls[b].energy]).unwrap()
        };
        let nodes = |f: &SampledFunction| {
            let peak = f.max_modulus();
            let g = *f.grid();
            let vals: Vec<f64> = interior(&g, EDGE_SKIP).map(|i| f.at(i)).filter(|v| v.abs() > 1e-8 * peak).collect();
            sign_changes(&vals).len()
        };
        prop_assert_eq!(nodes(&pair(k, k + 1)), 0);
        prop_assert!(nodes(&pair(k, k + 2)) > 0);
    }
}
