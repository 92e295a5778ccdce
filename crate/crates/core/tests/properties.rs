//! Property tests for the structural invariants of the workbench.

use std::f64::consts::{FRAC_PI_2, TAU};

use proptest::prelude::*;

use gfl_core::indicial::{build_indicial_system, compute_indicial_roots, roots_via_casimir};
use gfl_core::lattice::{seeded_rng, Backend, Grid};
use gfl_core::lie::{br, c, fnorm, random_unitary, spin_irrep_triple};
use gfl_core::models::{KnotSingularityModel, NahmPoleModel};
use gfl_core::octonion::{cross_twisted, twisted_square_expanded, AlgebraVector};
use gfl_core::reduction::{check_reduction_equivalence, random_reduced, reduced_grid, ReductionSpec};
use gfl_core::report::CheckRecord;
use gfl_core::residual::{kw_forms_defect, KwFields};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn spin_triples_close_and_conjugate(two_j in 1usize..6, seed in 0u64..1000) {
        let t = spin_irrep_triple(two_j).unwrap();
        let g = random_unitary(two_j + 1, &mut seeded_rng(seed));
        let tg = t.conjugate(&g).unwrap();
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            prop_assert!(fnorm(&(br(&tg.t[i], &tg.t[j]) - &tg.t[k])) < 1e-12);
        }
        let jf = two_j as f64 / 2.0;
        let cas = tg.casimir();
        let target = gfl_core::Mat::identity(two_j + 1, two_j + 1) * c(jf * (jf + 1.0));
        prop_assert!(fnorm(&(cas - target)) < 1e-11);
    }

    #[test]
    fn twisted_square_matches_expansion(beta in 0.0f64..FRAC_PI_2, seed in 0u64..1000) {
        let mut rng = seeded_rng(seed);
        let comps = (0..7).map(|_| gfl_core::lie::random_compact(2, &mut rng)).collect();
        let x = AlgebraVector::new(comps).unwrap();
        let a = cross_twisted(beta, &x, &x).unwrap();
        let b = twisted_square_expanded(beta, &x);
        for (p, q) in a.comps.iter().zip(&b.comps) {
            prop_assert!(fnorm(&(p - q)) < 1e-12);
        }
    }

    #[test]
    fn indicial_roots_do_not_depend_on_beta(beta in 0.0f64..1.5, n in 2usize..4) {
        let numeric = compute_indicial_roots(&build_indicial_system(n, beta).unwrap()).unwrap();
        let (closed, _) = roots_via_casimir(n).unwrap();
        prop_assert_eq!(numeric.snapped_multiset(), closed.snapped_multiset());
        prop_assert!(numeric.roots.iter().all(|r| r.value.abs() >= 1.0 - 1e-7));
        prop_assert_eq!(numeric.roots.last().unwrap().snapped, Some(n as i64));
    }

    #[test]
    fn nahm_pole_is_exact_everywhere(beta in 0.0f64..=FRAC_PI_2, y in 0.01f64..50.0, two_j in 1usize..4) {
        let m = NahmPoleModel::new(spin_irrep_triple(two_j).unwrap(), beta);
        let r = gfl_core::models::verify_nahm_pole(&m, &[y], &[], Backend::Central4).unwrap();
        prop_assert!(r.analytic_max_rel < 1e-13);
    }

    #[test]
    fn knot_model_is_homogeneous_and_periodic(
        lam in 1u32..5, r in 0.1f64..5.0, psi in 0.05f64..1.5, th in 0.0f64..TAU, s in 0.2f64..5.0
    ) {
        let m = KnotSingularityModel::standard(lam).unwrap();
        let a = m.eval(r, psi, th).unwrap();
        let b = m.eval(s * r, psi, th).unwrap();
        prop_assert!(fnorm(&(&a.phi1 * c(1.0 / s) - &b.phi1)) <= 1e-12 * fnorm(&a.phi1));
        prop_assert!(fnorm(&(&a.varphi * c(1.0 / s) - &b.varphi)) <= 1e-12 * fnorm(&a.varphi).max(1e-300));
        prop_assert!(fnorm(&(&a.a_theta - &b.a_theta)) <= 1e-14);
        let w = m.eval(r, psi, th + TAU).unwrap();
        prop_assert!(fnorm(&(&a.varphi - &w.varphi)) <= 1e-12 * fnorm(&a.varphi).max(1e-300));
        prop_assert!(fnorm(&(&a.varphi * &a.varphi)) == 0.0);
    }

    #[test]
    fn record_pass_is_metric_within_tolerance(metric in 0.0f64..2.0, tol in 0.0f64..2.0) {
        prop_assert_eq!(CheckRecord::new("p", "anchor", metric, tol, 0.0).pass, metric <= tol);
    }
}

proptest! {
    #![proptest_config(cases(8))]

    #[test]
    fn reductions_match_for_random_angles(k_idx in 0usize..3, angle in 0.05f64..3.0, seed in 0u64..10_000) {
        let k = [1, 2, 4][k_idx];
        let angle = if k == 4 { angle.min(FRAC_PI_2) } else { angle };
        let grid = reduced_grid(k, if k == 4 { 12 } else { 4 }).unwrap();
        let spec = ReductionSpec::new(k, angle).unwrap();
        let red = random_reduced(&spec, &grid, 2, &mut seeded_rng(seed));
        let rep = check_reduction_equivalence(&spec, &grid, &red, Backend::Spectral).unwrap();
        prop_assert!(rep.max_discrepancy < 1e-10, "{:?}", rep);
    }

    #[test]
    fn kw_dictionaries_hold_for_random_angles(theta in 0.05f64..3.0, seed in 0u64..10_000) {
        let grid = Grid::periodic(&["t", "x1", "x2", "x3"], 4, TAU).unwrap();
        let f = KwFields::random(&grid, 2, &mut seeded_rng(seed));
        prop_assert!(kw_forms_defect(&grid, theta, &f, Backend::Spectral).unwrap() < 1e-12);
    }
}
