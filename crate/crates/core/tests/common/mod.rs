//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::IndexedRandom;
use rand::Rng;
use smcflow::dist::{ratio, DiscreteDist, DomainSpec, Tuple, VarDomain};
use smcflow::entropy::{gain_id, gain_parity, EntropyOrder, GainSpec};
use smcflow::expr::Expr;
use smcflow::leakage::{PartyGroup, ScenarioSpec};
use smcflow::randomization::ApproximationSpec;

pub fn scenario_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

pub fn uniform_group(name: &str, a: i64, b: i64) -> PartyGroup {
    let d = DomainSpec::interval(a, b).unwrap();
    PartyGroup::scalar(name, d.clone(), DiscreteDist::uniform(&d).unwrap()).unwrap()
}

pub fn linear_group(name: &str, a: i64, b: i64) -> PartyGroup {
    let d = DomainSpec::interval(a, b).unwrap();
    let values: Vec<i64> = (a..=b).collect();
    PartyGroup::scalar(name, d, DiscreteDist::linear_over(&values).unwrap()).unwrap()
}

/// Two-way and three-way interaction scenario over ⟦1,30⟧ with uniform priors.
pub fn example_basic(order: EntropyOrder) -> ScenarioSpec {
    let t = uniform_group("y", 1, 30);
    let g = gain_id(&t.domain().tuples()).unwrap();
    ScenarioSpec::new(
        "x*(2*y + z) + 2*z".parse().unwrap(),
        uniform_group("x", 1, 30),
        t,
        uniform_group("z", 1, 30),
        g,
        order,
    )
    .unwrap()
}

/// Linear priors, attacker fixed at 5, parity gain.
pub fn example_parity() -> ScenarioSpec {
    let d = DomainSpec::interval(1, 30).unwrap();
    let a = PartyGroup::scalar("x", d.clone(), DiscreteDist::point_mass(vec![5])).unwrap();
    let t = linear_group("y", 1, 30);
    let g = gain_parity(&t.domain().tuples()).unwrap();
    ScenarioSpec::new(
        "x*(3*y - 5*z) + 2*z".parse().unwrap(),
        a,
        t,
        linear_group("z", 1, 30),
        g,
        EntropyOrder::Infinity,
    )
    .unwrap()
}

/// `5xy − 2yz` on {1,2}, linear priors, attacker fixed at 1.
pub fn example_two_atoms(order: EntropyOrder) -> ScenarioSpec {
    let d = DomainSpec::set(vec![1, 2]).unwrap();
    let a = PartyGroup::scalar("x", d.clone(), DiscreteDist::point_mass(vec![1])).unwrap();
    let t = linear_group("y", 1, 2);
    let g = gain_id(&t.domain().tuples()).unwrap();
    ScenarioSpec::new(
        "5*x*y - 2*y*z".parse().unwrap(),
        a,
        t,
        linear_group("z", 1, 2),
        g,
        order,
    )
    .unwrap()
}

pub fn ratio_dist(values: &[i64], weights: &[i64]) -> DiscreteDist {
    let total: i64 = weights.iter().sum();
    DiscreteDist::from_exact(
        1,
        values
            .iter()
            .zip(weights)
            .map(|(v, w)| (vec![*v], ratio(*w, total)))
            .collect(),
    )
    .unwrap()
}

/// Random prior with rational weights; `full` forces every value into the support.
pub fn random_prior<R: Rng>(rng: &mut R, values: &[i64], full: bool) -> DiscreteDist {
    loop {
        let weights: Vec<i64> = values
            .iter()
            .map(|_| {
                if full {
                    rng.random_range(1..=9)
                } else {
                    rng.random_range(0..=9)
                }
            })
            .collect();
        if weights.iter().sum::<i64>() > 0 {
            return ratio_dist(values, &weights);
        }
    }
}

pub fn random_domain<R: Rng>(rng: &mut R, max_len: usize) -> Vec<i64> {
    let len = rng.random_range(1..=max_len);
    let mut pool: Vec<i64> = (-3..=4).collect();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let i = rng.random_range(0..pool.len());
        out.push(pool.remove(i));
    }
    out.sort_unstable();
    out
}

pub fn random_expr<R: Rng>(rng: &mut R, vars: &[&str], depth: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.3) {
        return if rng.random_bool(0.7) {
            Expr::var(vars.choose(rng).unwrap())
        } else {
            Expr::Lit(rng.random_range(-3..=3))
        };
    }
    let a = Box::new(random_expr(rng, vars, depth - 1));
    let b = Box::new(random_expr(rng, vars, depth - 1));
    match rng.random_range(0..4) {
        0 => Expr::Add(a, b),
        1 => Expr::Sub(a, b),
        2 => Expr::Mul(a, b),
        _ => Expr::Neg(a),
    }
}

/// Positive gain matrix with `|W| ≤ 4`; unitary (column-normalised) on request.
pub fn random_gain<R: Rng>(rng: &mut R, secrets: &[Tuple], unitary: bool) -> GainSpec {
    if unitary && rng.random_bool(0.5) {
        return gain_id(secrets).unwrap();
    }
    let n_w = rng.random_range(1..=4);
    let mut m: Vec<Vec<f64>> = (0..n_w)
        .map(|_| {
            (0..secrets.len())
                .map(|_| rng.random_range(0..=10) as f64 / 10.0)
                .collect()
        })
        .collect();
    for t in 0..secrets.len() {
        if m.iter().all(|r| r[t] == 0.0) {
            m[rng.random_range(0..n_w)][t] = 1.0;
        }
        if unitary {
            let s: f64 = m.iter().map(|r| r[t]).sum();
            for r in m.iter_mut() {
                r[t] /= s;
            }
        }
    }
    GainSpec::new((0..n_w).map(|w| format!("w{w}")).collect(), m).unwrap()
}

pub const ORDERS: [EntropyOrder; 5] = [
    EntropyOrder::Finite(0.5),
    EntropyOrder::One,
    EntropyOrder::Finite(2.0),
    EntropyOrder::Finite(5.0),
    EntropyOrder::Infinity,
];

/// Random scenario with attacker `x`, targets `y` (sometimes also `y2`) and
/// spectator `z`, every group domain of size at most 4.
pub fn random_scenario<R: Rng>(rng: &mut R, order: EntropyOrder) -> ScenarioSpec {
    let xa = random_domain(rng, 4);
    let xz = random_domain(rng, 4);
    let two_targets = rng.random_bool(0.25);
    let targets = if two_targets {
        let y1 = random_domain(rng, 2);
        let y2 = random_domain(rng, 2);
        let d = DomainSpec::new(vec![
            VarDomain::set(y1.clone()).unwrap(),
            VarDomain::set(y2.clone()).unwrap(),
        ]);
        let prior = random_prior(rng, &y1, false).product(&random_prior(rng, &y2, false));
        PartyGroup::new(vec!["y".into(), "y2".into()], d, prior).unwrap()
    } else {
        let y = random_domain(rng, 4);
        PartyGroup::scalar(
            "y",
            DomainSpec::set(y.clone()).unwrap(),
            random_prior(rng, &y, false),
        )
        .unwrap()
    };
    let vars: Vec<&str> = if two_targets {
        vec!["x", "y", "y2", "z"]
    } else {
        vec!["x", "y", "z"]
    };
    let f = random_expr(rng, &vars, 3);
    let a = PartyGroup::scalar(
        "x",
        DomainSpec::set(xa.clone()).unwrap(),
        random_prior(rng, &xa, false),
    )
    .unwrap();
    let s = PartyGroup::scalar(
        "z",
        DomainSpec::set(xz.clone()).unwrap(),
        random_prior(rng, &xz, false),
    )
    .unwrap();
    let gain = random_gain(rng, &targets.domain().tuples(), order == EntropyOrder::One);
    ScenarioSpec::new(f, a, targets, s, gain, order).unwrap()
}

/// Random mapped approximation `a·o + b·phi + c·o·phi` over a small noise domain.
pub fn random_mapped<R: Rng>(rng: &mut R) -> ApproximationSpec {
    let a = rng.random_range(-2..=2);
    let b = rng.random_range(-2..=2);
    let c = if rng.random_bool(0.3) {
        rng.random_range(-1..=1)
    } else {
        0
    };
    let h: Expr = format!("{a}*o + {b}*phi + {c}*o*phi").parse().unwrap();
    let dom = random_domain(rng, 5);
    ApproximationSpec::mapped(h, vec!["phi".into()], DomainSpec::set(dom).unwrap()).unwrap()
}

/// Random noise distribution supported inside `domain` (at most 5 atoms).
pub fn random_noise<R: Rng>(rng: &mut R, domain: &DomainSpec) -> DiscreteDist {
    let mut values: Vec<i64> = domain.tuples().into_iter().map(|t| t[0]).collect();
    while values.len() > 5 {
        values.remove(rng.random_range(0..values.len()));
    }
    random_prior(rng, &values, false)
}

/// Conditional entropy computed from the full joint table
/// `p(x_A, x_T, x_S, o)` with explicitly normalised posteriors.
pub fn oracle_profile(s: &ScenarioSpec) -> Vec<(Tuple, f64)> {
    let names_a = s.attackers().names().to_vec();
    let names_t = s.targets().names().to_vec();
    let names_s = s.spectators().names().to_vec();
    let secrets = s.targets().domain().tuples();
    let g = s.gain();
    let mut joint: BTreeMap<(Tuple, usize, i64), f64> = BTreeMap::new();
    for xa in s.attackers().domain().tuples() {
        for (ti, xt) in secrets.iter().enumerate() {
            let pt = s.targets().prior().mass(xt);
            for (xs, ps) in s
                .spectators()
                .prior()
                .support()
                .iter()
                .zip(s.spectators().prior().probs_f64())
            {
                let mut env = HashMap::new();
                for (n, v) in names_a.iter().zip(&xa) {
                    env.insert(n.clone(), *v);
                }
                for (n, v) in names_t.iter().zip(xt) {
                    env.insert(n.clone(), *v);
                }
                for (n, v) in names_s.iter().zip(xs) {
                    env.insert(n.clone(), *v);
                }
                let o = s.function().eval(&env).unwrap();
                *joint.entry((xa.clone(), ti, o)).or_insert(0.0) += pt * ps;
            }
        }
    }
    s.attackers()
        .domain()
        .tuples()
        .into_iter()
        .map(|xa| {
            let outputs: BTreeSet<i64> = joint
                .keys()
                .filter(|(a, _, _)| *a == xa)
                .map(|(_, _, o)| *o)
                .collect();
            let mut acc = 0.0;
            for o in outputs {
                let col: Vec<f64> = (0..secrets.len())
                    .map(|t| *joint.get(&(xa.clone(), t, o)).unwrap_or(&0.0))
                    .collect();
                let po: f64 = col.iter().sum();
                if po == 0.0 {
                    continue;
                }
                let post: Vec<f64> = col.iter().map(|c| c / po).collect();
                let u: Vec<f64> = (0..g.num_guesses())
                    .map(|w| (0..secrets.len()).map(|t| post[t] * g.gain(w, t)).sum())
                    .collect();
                acc += po
                    * match s.order() {
                        EntropyOrder::Infinity => u.iter().cloned().fold(0.0, f64::max),
                        EntropyOrder::Finite(a) => {
                            u.iter().map(|x| x.powf(a)).sum::<f64>().powf(1.0 / a)
                        }
                        EntropyOrder::One => u
                            .iter()
                            .map(|&x| if x > 0.0 { -x * x.log2() } else { 0.0 })
                            .sum::<f64>(),
                    };
            }
            let h = match s.order() {
                EntropyOrder::Infinity => -acc.log2(),
                EntropyOrder::Finite(a) => a / (1.0 - a) * acc.log2(),
                EntropyOrder::One => acc,
            };
            (xa, if h < 0.0 && h > -1e-12 { 0.0 } else { h })
        })
        .collect()
}

/// Rényi entropy in bits of a distribution, straight from the definition.
pub fn renyi(p: &[f64], order: EntropyOrder) -> f64 {
    match order {
        EntropyOrder::Infinity => -p.iter().cloned().fold(0.0, f64::max).log2(),
        EntropyOrder::One => p.iter().filter(|x| **x > 0.0).map(|x| -x * x.log2()).sum(),
        EntropyOrder::Finite(a) => p.iter().map(|x| x.powf(a)).sum::<f64>().log2() / (1.0 - a),
    }
}

/// Injectivity of every `h(·, φ)` over `outputs`, checked by direct evaluation.
pub fn oracle_is_close(h: &Expr, phis: &[i64], outputs: &BTreeSet<i64>) -> bool {
    phis.iter().all(|&phi| {
        let images: BTreeSet<i64> = outputs
            .iter()
            .map(|&o| {
                h.eval(&HashMap::from([
                    ("o".to_string(), o),
                    ("phi".to_string(), phi),
                ]))
                .unwrap()
            })
            .collect();
        images.len() == outputs.len()
    })
}

/// Grid over the 2-simplex (`n` steps per axis).
pub fn simplex_grid3(n: usize) -> Vec<[f64; 3]> {
    let mut pts = Vec::new();
    for i in 0..=n {
        for j in 0..=(n - i) {
            let a = i as f64 / n as f64;
            let b = j as f64 / n as f64;
            pts.push([a, b, (1.0 - a - b).max(0.0)]);
        }
    }
    pts
}
