//! Multistart basin hopping over the simplex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use super::local::{clean_simplex, maximize, LocalOptions, LocalOutcome};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinOptions {
    /// Number of random Dirichlet starts (the uniform point and the point
    /// mass at the zero atom are always added).
    pub starts: usize,
    pub concentration: f64,
    pub hops: usize,
    /// Weight of the fresh Dirichlet sample in a perturbation.
    pub hop_weight: f64,
    pub temperature: f64,
    pub seed: u64,
    pub local: LocalOptions,
}

impl Default for BasinOptions {
    fn default() -> Self {
        BasinOptions {
            starts: 32,
            concentration: 1.0,
            hops: 4,
            hop_weight: 0.3,
            temperature: 1e-3,
            seed: 0,
            local: LocalOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinOutcome {
    pub best: LocalOutcome,
    pub best_start: usize,
    pub starts: usize,
    /// Best point found from every start, in start order.
    pub per_start: Vec<LocalOutcome>,
}

pub fn dirichlet<R: Rng>(rng: &mut R, dim: usize, concentration: f64) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
    loop {
        let draws: Vec<f64> = (0..dim).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 {
            return draws.iter().map(|d| d / total).collect();
        }
    }
}

/// `a` beats `b` if it is strictly better, or equal and lexicographically smaller.
fn better(a: &LocalOutcome, b: &LocalOutcome) -> bool {
    if a.value != b.value {
        return a.value > b.value;
    }
    a.x.iter()
        .zip(&b.x)
        .find(|(p, q)| p != q)
        .is_some_and(|(p, q)| p < q)
}

/// Runs basin hopping from the deterministic anchors (uniform, point mass at
/// `zero_index`) followed by `opts.starts` Dirichlet samples. Each start uses
/// its own random stream, so the outcome does not depend on thread count.
pub fn basin_hopping<F>(
    f: F,
    dim: usize,
    zero_index: Option<usize>,
    opts: &BasinOptions,
) -> BasinOutcome
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync,
{
    let mut anchors = vec![vec![1.0 / dim as f64; dim]];
    if let Some(z) = zero_index {
        let mut e = vec![0.0; dim];
        e[z] = 1.0;
        anchors.push(e);
    }
    let n_anchor = anchors.len();
    let total = n_anchor + opts.starts;
    let per_start: Vec<LocalOutcome> = (0..total)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64);
            let start = if i < n_anchor {
                anchors[i].clone()
            } else {
                dirichlet(&mut rng, dim, opts.concentration)
            };
            run_start(&f, &start, &mut rng, opts)
        })
        .collect();
    let mut best_start = 0;
    for (i, o) in per_start.iter().enumerate().skip(1) {
        if better(o, &per_start[best_start]) {
            best_start = i;
        }
    }
    BasinOutcome {
        best: per_start[best_start].clone(),
        best_start,
        starts: total,
        per_start,
    }
}

fn run_start<F>(f: &F, start: &[f64], rng: &mut ChaCha8Rng, opts: &BasinOptions) -> LocalOutcome
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let dim = start.len();
    let mut current = maximize(f, start, &opts.local);
    let mut best = current.clone();
    if dim < 2 {
        return best;
    }
    for _ in 0..opts.hops {
        let fresh = dirichlet(rng, dim, opts.concentration);
        let w = opts.hop_weight;
        let jump: Vec<f64> = current
            .x
            .iter()
            .zip(&fresh)
            .map(|(a, b)| (1.0 - w) * a + w * b)
            .collect();
        let cand = maximize(f, &clean_simplex(&jump), &opts.local);
        let accept = cand.value >= current.value
            || rng.random::<f64>() < ((cand.value - current.value) / opts.temperature).exp();
        if better(&cand, &best) {
            best = cand.clone();
        }
        if accept {
            current = cand;
        }
    }
    best
}
