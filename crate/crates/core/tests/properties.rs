//! Invariants as property tests.

use std::collections::HashMap;

use proptest::prelude::*;

use doflab::ais::{image_map, toy_instance, AlignmentSetup, CodewordPair};
use doflab::entropy::estimate::judge;
use doflab::entropy::kernel::{Compiled, DEFAULT_BUDGET};
use doflab::entropy::submod::check_submodularity;
use doflab::entropy::{exact_entropy, Expr, FinitePmf, Model, Variable, Verdict};
use doflab::power::level;
use doflab::region::{is_subset, region_of, sum_dof};
use doflab::{Level, PowerScale, Rational};

fn pmf_strategy() -> impl Strategy<Value = FinitePmf> {
    (1usize..=3, 2u64..=4).prop_flat_map(|(m, k)| {
        let total = k.pow(m as u32) as usize;
        proptest::collection::vec(0.0f64..1.0, total).prop_map(move |w| {
            let support: Vec<Vec<u64>> =
                (0..total).map(|i| (0..m).map(|d| (i as u64 / k.pow(d as u32)) % k).collect()).collect();
            let keep: Vec<usize> = (0..total).filter(|&i| w[i] > 0.3).collect();
            let keep = if keep.is_empty() { vec![0] } else { keep };
            let s: f64 = keep.iter().map(|&i| w[i]).sum::<f64>().max(1e-12);
            let probs = keep.iter().map(|&i| if keep.len() == 1 { 1.0 } else { w[i] / s }).collect();
            FinitePmf::new(keep.iter().map(|&i| support[i].clone()).collect(), probs).unwrap()
        })
    })
}

/// `Σ_y p(y)·H(X | Y = y)`, computed directly.
fn conditional_direct(pmf: &FinitePmf) -> f64 {
    let mut groups: HashMap<u64, Vec<f64>> = HashMap::new();
    for (x, &p) in pmf.support.iter().zip(&pmf.probs) {
        groups.entry(*x.last().unwrap()).or_default().push(p);
    }
    groups
        .values()
        .map(|ps| {
            let py: f64 = ps.iter().sum();
            -ps.iter().map(|&p| p * (p / py).log2()).sum::<f64>()
        })
        .sum()
}

fn levels() -> impl Strategy<Value = Level> {
    (0i64..=12).prop_map(|n| level(n, 12))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_rule_matches_direct_conditional(pmf in pmf_strategy()) {
        let m = pmf.support[0].len();
        let joint = exact_entropy(&pmf, |x| x.to_vec());
        let last = exact_entropy(&pmf, |x| x[m - 1]);
        prop_assert!((joint - last - conditional_direct(&pmf)).abs() < 1e-9);
    }

    #[test]
    fn conditioning_reduces_entropy(pmf in pmf_strategy()) {
        let m = pmf.support[0].len();
        let first = exact_entropy(&pmf, |x| x[0]);
        let cond = exact_entropy(&pmf, |x| (x[0], x[m - 1])) - exact_entropy(&pmf, |x| x[m - 1]);
        prop_assert!(cond <= first + 1e-9);
    }

    #[test]
    fn entropy_at_most_log_support(pmf in pmf_strategy()) {
        let h = exact_entropy(&pmf, |x| x.to_vec());
        prop_assert!(h <= (pmf.support.len() as f64).log2() + 1e-9 && h >= 0.0);
    }

    #[test]
    fn window_inequality_holds(pmf in pmf_strategy(), n in 1usize..=3) {
        let n = n.min(pmf.support[0].len());
        prop_assert!(check_submodularity(&pmf, n, None).unwrap().holds);
    }

    #[test]
    fn partition_reconstruction(p in prop::sample::select(vec![16u64, 64, 256, 1024]), a in levels(), b in levels(), x in any::<u64>()) {
        let (l1, l) = if a <= b { (a, b) } else { (b, a) };
        let s = PowerScale::new(p).unwrap();
        let x = x % s.alphabet(l).unwrap();
        let top = s.part_mid(x, l1, l).unwrap();
        prop_assert_eq!(s.pbar(l1).unwrap() * top + s.part_low(x, l1).unwrap(), x);
    }

    #[test]
    fn kernel_entropy_within_support_bound(p in prop::sample::select(vec![16u64, 64]), lo in 0i64..4, seed in 0u64..1000) {
        let mut model = Model::uniform(2);
        let full = [(0, level(0, 1), Level::from_integer(1)), (1, level(0, 1), Level::from_integer(1))];
        let f = model.add_random("Z", &full).unwrap();
        let vars = vec![
            Variable::new("Z", vec![Expr::Form(f)]),
            Variable::new("Zt", vec![Expr::Window { form: f, lo: level(lo, 4), hi: Level::from_integer(1) }]),
        ];
        let scale = PowerScale::new(p).unwrap();
        let c = Compiled::new(&model, &scale, &vars, DEFAULT_BUDGET).unwrap();
        if let Ok(t) = c.tables(&model.draw_coefficients(seed, 0, 0).unwrap()) {
            let h = c.conditional_entropies(&t, &vars).unwrap();
            for (v, hv) in vars.iter().zip(&h) {
                prop_assert!(*hv <= c.support_bound(v).unwrap().log2() + 1e-9);
            }
            prop_assert!(h[1] <= h[0] + 1e-9);
        }
    }

    #[test]
    fn region_grows_with_beta(
        (m, n1, n2) in (1usize..=6, 1usize..=6, 1usize..=6).prop_filter("ordered", |(m, a, b)| a <= b && b <= m && *m <= a + b),
        b1 in 0i64..=6, b2 in 0i64..=6, d1 in 0i64..=6, d2 in 0i64..=6,
    ) {
        let small = region_of(m, n1, n2, level(b1, 6), level(b2, 6)).unwrap();
        let big = region_of(m, n1, n2, level((b1 + d1).min(6), 6), level((b2 + d2).min(6), 6)).unwrap();
        prop_assert!(is_subset(&small, &big));
        let s = sum_dof(&small);
        prop_assert!(s >= Rational::from_integer((n2 as i64).into()) && s <= Rational::from_integer((m as i64).into()));
        for (x, y) in &small.vertices {
            prop_assert!(small.halfspaces.iter().all(|h| h.contains(x, y)));
        }
    }

    #[test]
    fn breve_bound_on_random_pairs(e in prop::collection::vec(0u64..256, 5), f in prop::collection::vec(0u64..256, 5), m in 0i64..=4, e_lvl in 0i64..=4) {
        prop_assume!(m + e_lvl <= 8);
        let scale = PowerScale::new(1 << 16).unwrap();
        let setup = AlignmentSetup::for_channel(5, 2, 3, m, e_lvl, 8, 1).unwrap();
        let pair = CodewordPair::new(e, f).unwrap();
        prop_assert!(pair.breve_bound_holds(&setup, &scale).unwrap());
    }

    #[test]
    fn image_map_is_a_partition(draw in 0u64..50) {
        let p = image_map(&toy_instance().unwrap(), &PowerScale::new(64).unwrap(), draw, 0, DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(p.sizes.iter().sum::<usize>(), p.part_images);
        prop_assert!(p.sizes.iter().all(|&s| s >= 1));
        prop_assert!(p.dependence_bound_holds());
    }

    #[test]
    fn nonpositive_gaps_pass(gaps in prop::collection::vec(-5.0f64..=0.0, 2..6)) {
        let n = gaps.len();
        let lp: Vec<f64> = (0..n).map(|i| 2.0 + i as f64).collect();
        prop_assert_eq!(judge(&gaps, &vec![0.1; n], &lp, 0.15), Verdict::Pass);
    }
}

/// Every single-column pair on a perfect-power scale satisfies the `Δ̆` bound.
#[test]
fn breve_bound_exhaustive_single_column() {
    let scale = PowerScale::new(256).unwrap();
    for m in 0..=4 {
        for e in 0..=4 - m {
            for whole in [true, false] {
                let setup = if whole {
                    AlignmentSetup { trimmed: vec![], full: vec![0], ..AlignmentSetup::for_channel(2, 1, 2, m, e, 4, 1).unwrap() }
                } else {
                    AlignmentSetup::for_channel(2, 1, 2, m, e, 4, 1).unwrap()
                };
                for a in 0..16u64 {
                    for b in 0..16u64 {
                        let pair = CodewordPair::new(vec![a, a], vec![b, b]).unwrap();
                        assert!(pair.breve_bound_holds(&setup, &scale).unwrap(), "m={m} e={e} {a} {b}");
                    }
                }
            }
        }
    }
}
