//! Property tests over randomly generated scenarios.

mod common;

use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smcflow::dist::{DiscreteDist, DomainSpec};
use smcflow::entropy::EntropyOrder;
use smcflow::expr::Expr;
use smcflow::leakage::{awae, awae_via, PartyGroup, Route};

use common::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expr_display_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_expr(&mut rng, &["x", "y", "z"], 4);
        let text = e.to_string();
        let back: Expr = text.parse().unwrap();
        prop_assert_eq!(back.to_string(), text.clone());
        for _ in 0..5 {
            let env: HashMap<String, i64> = ["x", "y", "z"]
                .iter()
                .map(|v| (v.to_string(), rng.random_range(-5..=5)))
                .collect();
            prop_assert_eq!(e.eval(&env).unwrap(), back.eval(&env).unwrap(), "{}", text);
        }
    }

    #[test]
    fn renyi_entropy_is_non_increasing_in_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = random_domain(&mut rng, 6);
        let d = random_prior(&mut rng, &values, false);
        let hs: Vec<f64> = [0.3, 0.7, 2.0, 4.0, 9.0]
            .iter()
            .map(|&a| d.renyi_entropy(EntropyOrder::new(a).unwrap()))
            .chain([d.renyi_entropy(EntropyOrder::Infinity)])
            .collect();
        let h1 = d.renyi_entropy(EntropyOrder::One);
        prop_assert!(hs[1] + 1e-12 >= h1 && h1 + 1e-12 >= hs[2]);
        for w in hs.windows(2) {
            prop_assert!(w[0] + 1e-12 >= w[1], "{:?}", hs);
        }
    }

    #[test]
    fn product_marginals_recover_factors(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (va, vb) = (random_domain(&mut rng, 4), random_domain(&mut rng, 4));
        let a = random_prior(&mut rng, &va, false);
        let b = random_prior(&mut rng, &vb, false);
        let ab = a.product(&b);
        prop_assert_eq!(ab.marginal(&[0]).unwrap(), a);
        prop_assert_eq!(ab.marginal(&[1]).unwrap(), b);
    }

    #[test]
    fn homogeneous_and_normalized_routes_agree(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scenario(&mut rng, ORDERS[k]);
        let h = awae_via(&s, Route::Homogeneous).unwrap();
        let n = awae_via(&s, Route::Normalized).unwrap();
        for ((x, a), (_, b)) in h.entries().iter().zip(n.entries()) {
            prop_assert!(close(*a, *b, 1e-9), "x = {:?}: {} vs {}", x, a, b);
        }
    }

    #[test]
    fn observing_the_output_never_raises_entropy(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scenario(&mut rng, ORDERS[k]);
        let prior = s.prior_entropy().unwrap();
        for (x, h) in awae(&s).unwrap().entries() {
            prop_assert!(*h <= prior + 1e-9 * (1.0 + prior.abs()), "x = {:?}: {} > {}", x, h, prior);
        }
    }

    #[test]
    fn unused_spectators_do_not_change_leakage(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scenario(&mut rng, ORDERS[k]);
        let values = random_domain(&mut rng, 3);
        let extra = PartyGroup::scalar(
            "u",
            DomainSpec::set(values.clone()).unwrap(),
            random_prior(&mut rng, &values, false),
        )
        .unwrap();
        let wider = s.extended_with(s.function().clone(), &extra).unwrap();
        let a = awae(&s).unwrap();
        let b = awae(&wider).unwrap();
        for ((x, ha), (_, hb)) in a.entries().iter().zip(b.entries()) {
            prop_assert!(close(*ha, *hb, 1e-9), "x = {:?}: {} vs {}", x, ha, hb);
        }
    }

    #[test]
    fn revealing_the_target_leaves_nothing(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scenario(&mut rng, ORDERS[k]);
        let deterministic = s.gain().is_unitary()
            && s.gain().matrix().iter().flatten().all(|&g| g == 0.0 || g == 1.0);
        if s.targets().names().len() != 1 || !deterministic {
            return Ok(());
        }
        let revealing = s.extended_with("y".parse().unwrap(), &PartyGroup::empty()).unwrap();
        for (x, h) in awae(&revealing).unwrap().entries() {
            prop_assert!(h.abs() < 1e-9, "x = {:?}: {}", x, h);
        }
    }
}

#[test]
fn point_mass_has_zero_entropy_at_every_order() {
    let d = DiscreteDist::point_mass(vec![3]);
    for order in ORDERS {
        assert_eq!(d.renyi_entropy(order), 0.0);
    }
}
