use std::f64::consts::PI;
use std::sync::OnceLock;

use actuator_forge::biortho::{build_biorthogonal, gram_entry, BiorthogonalFamily};
use actuator_forge::control::randomized_cost;
use actuator_forge::design::{project_simplex, solve_truncated, DesignProblem, DesignResult, SolverConfig};
use actuator_forge::geometry::{bathtub, superlevel_set, IntervalUnion, ModeCombination};
use actuator_forge::lumped::{profile_value, solve_lumped};
use actuator_forge::spectrum::{mode_cross, mode_mass, SpectralFamily};
use proptest::prelude::*;

/// Interval union of measure `fraction·π` from piece and gap proportions.
fn domain_from(fraction: f64, pieces: &[f64], gaps: &[f64]) -> IntervalUnion {
    let (ps, gs): (f64, f64) = (pieces.iter().sum(), gaps.iter().sum());
    let mut x = 0.0;
    let mut raw = Vec::new();
    for (p, g) in pieces.iter().zip(gaps) {
        x += g / gs * (1.0 - fraction) * PI;
        let len = p / ps * fraction * PI;
        raw.push((x, x + len));
        x += len;
    }
    IntervalUnion::new(raw).unwrap()
}

fn domain_strategy(fraction: f64) -> impl Strategy<Value = IntervalUnion> {
    (1usize..=3).prop_flat_map(move |k| {
        (
            prop::collection::vec(0.2f64..1.0, k),
            prop::collection::vec(0.2f64..1.0, k + 1),
        )
            .prop_map(move |(p, g)| domain_from(fraction, &p, &g))
    })
}

fn weights_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 1..=6)
}

fn clip(omega: &IntervalUnion, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    omega
        .intervals()
        .iter()
        .filter_map(|&(a, b)| {
            let (a, b) = (a.max(lo), b.min(hi));
            (b > a).then_some((a, b))
        })
        .collect()
}

const L: f64 = 0.3;

fn optimum() -> &'static (BiorthogonalFamily, DesignResult) {
    static CELL: OnceLock<(BiorthogonalFamily, DesignResult)> = OnceLock::new();
    CELL.get_or_init(|| {
        let bio = build_biorthogonal(&SpectralFamily::heat(), 6, 0.5, 512).unwrap();
        let problem = DesignProblem::from_biorthogonal(&bio, L, 6).unwrap();
        let result = solve_truncated(&problem, &SolverConfig::default()).unwrap();
        (bio, result)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bathtub_hits_measure(w in weights_strategy(), l in 0.05f64..0.95) {
        let b = bathtub(&ModeCombination::new(w).unwrap(), l).unwrap();
        prop_assert!((b.omega.measure() - l * PI).abs() <= 1e-10);
    }

    #[test]
    fn bathtub_component_bound(w in weights_strategy(), l in 0.05f64..0.95) {
        let n = w.len();
        let b = bathtub(&ModeCombination::new(w).unwrap(), l).unwrap();
        prop_assert!(b.omega.component_count() <= n);
    }

    #[test]
    fn superlevel_sets_shrink_with_level(w in weights_strategy(), s in 0.0f64..1.0, ds in 0.0f64..0.5) {
        let p = ModeCombination::new(w).unwrap();
        let top = (0..=2000).map(|i| p.eval(PI * i as f64 / 2000.0)).fold(0.0, f64::max);
        let low = superlevel_set(&p, s * top);
        let high = superlevel_set(&p, (s + ds) * top);
        // Nested sets: the symmetric difference is exactly the measure gap.
        let d = low.symdiff_measure(&high);
        prop_assert!(high.measure() <= low.measure() + 1e-12);
        prop_assert!((d - (low.measure() - high.measure())).abs() <= 1e-9);
    }

    #[test]
    fn superlevel_set_exceeds_level(w in weights_strategy(), s in 0.05f64..0.95, u in 0.0f64..1.0) {
        let p = ModeCombination::new(w).unwrap();
        let top = (0..=2000).map(|i| p.eval(PI * i as f64 / 2000.0)).fold(0.0, f64::max);
        let set = superlevel_set(&p, s * top);
        let x = 1e-9 + u * (PI - 2e-9);
        let v = p.eval(x);
        if (v - s * top).abs() > 1e-9 * top {
            prop_assert_eq!(set.contains(x), v > s * top);
        }
    }

    #[test]
    fn mode_mass_is_additive(omega in domain_strategy(0.4), cut in 0.1f64..3.0, j in 1usize..20) {
        let left = IntervalUnion::new(clip(&omega, 0.0, cut)).unwrap();
        let right = IntervalUnion::new(clip(&omega, cut, PI)).unwrap();
        let total = mode_mass(j, &omega);
        prop_assert!((mode_mass(j, &left) + mode_mass(j, &right) - total).abs() <= 1e-13);
        let k = j + 1;
        prop_assert!((mode_cross(j, k, &left) + mode_cross(j, k, &right) - mode_cross(j, k, &omega)).abs() <= 1e-13);
    }

    #[test]
    fn modes_orthonormal_on_full_domain(j in 1usize..40, k in 1usize..40) {
        let full = IntervalUnion::full();
        let expected = if j == k { 1.0 } else { 0.0 };
        prop_assert!((mode_cross(j, k, &full) - expected).abs() <= 1e-13);
    }

    #[test]
    fn lumped_profile_is_optimal(
        gamma in prop::collection::vec(1e-3f64..1e3, 1..10),
        raw in prop::collection::vec(-1.0f64..1.0, 10),
    ) {
        let p = solve_lumped(&gamma).unwrap();
        let h: Vec<f64> = raw[..gamma.len()].to_vec();
        let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-6);
        let h: Vec<f64> = h.iter().map(|x| x / norm).collect();
        prop_assert!(profile_value(&h, &gamma) <= p.value * (1.0 + 1e-12));
    }

    #[test]
    fn simplex_projection_lands_on_simplex(y in prop::collection::vec(-3.0f64..3.0, 1..12)) {
        let x = project_simplex(&y);
        prop_assert!(x.iter().all(|&v| v >= 0.0));
        prop_assert!((x.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let again = project_simplex(&x);
        prop_assert!(x.iter().zip(&again).all(|(a, b)| (a - b).abs() <= 1e-12));
    }

    #[test]
    fn gram_entries_symmetric(a in 0.1f64..50.0, b in 0.1f64..50.0, t in 0.01f64..5.0) {
        prop_assert_eq!(gram_entry(a, b, t).unwrap(), gram_entry(b, a, t).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn optimum_minimizes_randomized_cost(omega in domain_strategy(L)) {
        let (bio, best) = optimum();
        let k_star = randomized_cost(&best.omega, bio).unwrap();
        prop_assert!((k_star * best.value - 1.0).abs() <= 1e-12);
        prop_assert!(k_star <= randomized_cost(&omega, bio).unwrap() * (1.0 + 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn biorthogonal_norms_grow_with_m(t in 0.05f64..2.0, j in 1usize..5) {
        let mut previous = 0.0;
        for m in j..=10 {
            let bio = build_biorthogonal(&SpectralFamily::heat(), m, t, 384).unwrap();
            prop_assert!(bio.gram().inverse_asymmetry() <= 1e-25);
            let n = bio.norm_sq(j);
            prop_assert!(n >= previous * (1.0 - 1e-12));
            previous = n;
        }
    }

    #[test]
    fn design_is_scale_invariant(t in 0.05f64..1.0, l in 0.1f64..0.6, n in 1usize..5, ln_c in -8.0f64..8.0) {
        let c = ln_c.exp();
        let (problem, _) = DesignProblem::build(&SpectralFamily::heat(), t, l, n, n + 6, 384).unwrap();
        let base = solve_truncated(&problem, &SolverConfig::default()).unwrap();
        let scaled = solve_truncated(&problem.scaled(c).unwrap(), &SolverConfig::default()).unwrap();
        prop_assert!(base.omega.symdiff_measure(&scaled.omega) <= 1e-9);
        prop_assert!((scaled.value - c * base.value).abs() <= 1e-12 * c * base.value);
    }
}
