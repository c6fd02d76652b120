//! Fast evaluation of the randomized objective for additive noise.
//!
//! For each attacker input the base expected-gain vectors `C[i][w]` of the
//! unrandomized outputs are computed once. With noise `φ_k` of mass `π_k`,
//! the randomized output `o_i + φ_k` receives `π_k·C[i]`, so every randomized
//! vector is linear in `π` and the derivatives follow directly.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::dist::Tuple;
use crate::entropy::{mu_unchecked, EntropyOrder, Precision};
use crate::error::Result;
use crate::extended::ExtendedContext;
use crate::leakage::ScenarioSpec;
use crate::numeric::{ln_alpha_norm, log_sum_exp, neumaier_sum, snap_entropy};

/// Floor applied to conditional masses in the order-1 gradient.
pub const SHANNON_GRADIENT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Block {
    weight: f64,
    base: Vec<Vec<f64>>,
    /// `targets[i][k]`: index of the randomized output `o_i + φ_k`.
    targets: Vec<Vec<usize>>,
    n_out: usize,
}

#[derive(Debug, Clone)]
pub struct Kernel {
    support: Vec<i64>,
    n_guesses: usize,
    blocks: Vec<Block>,
    inputs: Vec<Tuple>,
}

impl Kernel {
    /// Builds the base tables for every attacker input in the prior's support.
    pub fn new(scenario: &ScenarioSpec, support: &[i64]) -> Result<Self> {
        let prior = scenario.attackers().prior();
        let inputs: Vec<Tuple> = prior.support().to_vec();
        let blocks: Vec<Result<Block>> = inputs
            .par_iter()
            .map(|x_a| {
                let table = scenario.fiber_table(x_a)?;
                let base = table.projected(scenario.gain());
                let mut index: BTreeMap<i64, usize> = BTreeMap::new();
                for &o in &table.outputs {
                    for &phi in support {
                        index.insert(o + phi, 0);
                    }
                }
                for (n, v) in index.values_mut().enumerate() {
                    *v = n;
                }
                let targets = table
                    .outputs
                    .iter()
                    .map(|&o| support.iter().map(|&phi| index[&(o + phi)]).collect())
                    .collect();
                Ok(Block {
                    weight: prior.mass(x_a),
                    base,
                    targets,
                    n_out: index.len(),
                })
            })
            .collect();
        Ok(Kernel {
            support: support.to_vec(),
            n_guesses: scenario.gain().num_guesses(),
            blocks: blocks.into_iter().collect::<Result<_>>()?,
            inputs,
        })
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.support.len()
    }

    pub fn inputs(&self) -> &[Tuple] {
        &self.inputs
    }

    /// Largest number of randomized outputs reachable from a single attacker input.
    pub fn max_reachable(&self) -> usize {
        self.blocks.iter().map(|b| b.n_out).max().unwrap_or(0)
    }

    fn randomized(&self, b: &Block, pi: &[f64]) -> Vec<Vec<f64>> {
        let mut u = vec![vec![0.0; self.n_guesses]; b.n_out];
        for (row, targets) in b.base.iter().zip(&b.targets) {
            for (&j, &p) in targets.iter().zip(pi) {
                if p == 0.0 {
                    continue;
                }
                for (acc, c) in u[j].iter_mut().zip(row) {
                    *acc += p * c;
                }
            }
        }
        u
    }

    /// Randomized expected-gain vectors per attacker input, sorted by output.
    pub fn randomized_vectors(&self, pi: &[f64]) -> Vec<Vec<Vec<f64>>> {
        self.blocks.iter().map(|b| self.randomized(b, pi)).collect()
    }

    /// Per-attacker-input entropies of the randomized computation.
    pub fn entropies(&self, pi: &[f64], order: EntropyOrder, precision: Precision) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| {
                let u = self.randomized(b, pi);
                let h = match order {
                    EntropyOrder::Infinity => {
                        let v =
                            neumaier_sum(u.iter().map(|r| r.iter().cloned().fold(0.0, f64::max)));
                        -v.log2()
                    }
                    EntropyOrder::Finite(alpha) => {
                        let log2_v = match precision {
                            Precision::Double => {
                                let logs: Vec<f64> =
                                    u.iter().map(|r| ln_alpha_norm(r, alpha)).collect();
                                log_sum_exp(&logs) / LN_2
                            }
                            Precision::Extended => ExtendedContext::new()
                                .log2_sum_of_norms(u.iter().map(|r| r.as_slice()), alpha),
                        };
                        alpha / (1.0 - alpha) * log2_v
                    }
                    EntropyOrder::One => shannon(&u),
                };
                snap_entropy(h)
            })
            .collect()
    }

    /// `Σ_{x_A} p(x_A)·H(x_A)`.
    pub fn objective(&self, pi: &[f64], order: EntropyOrder, precision: Precision) -> f64 {
        let h = self.entropies(pi, order, precision);
        neumaier_sum(self.blocks.iter().zip(h).map(|(b, h)| b.weight * h))
    }

    /// Smoothed objective for finite `α > 1` and its gradient. Every output
    /// in the global output set of size `n_outputs` gets the offset `δ`; the
    /// ones unreachable from an attacker input contribute `δ·|W|^{1/α}` each.
    pub fn smoothed(
        &self,
        pi: &[f64],
        alpha: f64,
        delta: f64,
        n_outputs: usize,
    ) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; self.dim()];
        let unreachable_norm = delta * (self.n_guesses as f64).powf(1.0 / alpha);
        for b in &self.blocks {
            let u = self.randomized(b, pi);
            let shifted: Vec<Vec<f64>> = u
                .iter()
                .map(|r| r.iter().map(|x| x + delta).collect())
                .collect();
            let ln_norms: Vec<f64> = shifted.iter().map(|r| ln_alpha_norm(r, alpha)).collect();
            let missing = n_outputs.saturating_sub(b.n_out) as f64;
            let v = neumaier_sum(ln_norms.iter().map(|l| l.exp())) + missing * unreachable_norm;
            let h = alpha / (1.0 - alpha) * v.log2();
            value += b.weight * h;
            // dN_j/du_j[w] = ((δ + u_j[w]) / N_j)^(α-1)
            let partial: Vec<Vec<f64>> = shifted
                .iter()
                .zip(&ln_norms)
                .map(|(r, ln_n)| {
                    r.iter()
                        .map(|x| ((alpha - 1.0) * (x.ln() - ln_n)).exp())
                        .collect()
                })
                .collect();
            let scale = b.weight * alpha / ((1.0 - alpha) * v * LN_2);
            accumulate(&mut grad, b, &partial, scale);
        }
        (value, grad)
    }

    /// Order-1 objective and gradient (unitary gain; no smoothing).
    pub fn shannon_with_gradient(&self, pi: &[f64]) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; self.dim()];
        for b in &self.blocks {
            let u = self.randomized(b, pi);
            value += b.weight * shannon(&u);
            // dH/du_j[w] = log2 P_j − log2 u_j[w]
            let partial: Vec<Vec<f64>> = u
                .iter()
                .map(|r| {
                    let lp = neumaier_sum(r.iter().cloned())
                        .max(SHANNON_GRADIENT_FLOOR)
                        .log2();
                    r.iter()
                        .map(|x| lp - x.max(SHANNON_GRADIENT_FLOOR).log2())
                        .collect()
                })
                .collect();
            accumulate(&mut grad, b, &partial, b.weight);
        }
        (value, grad)
    }
}

/// `H_1 = Σ_j [Σ_w μ(u_j[w]) − μ(P_j)]` with `P_j = Σ_w u_j[w]`.
fn shannon(u: &[Vec<f64>]) -> f64 {
    neumaier_sum(u.iter().map(|r| {
        let p = neumaier_sum(r.iter().cloned());
        neumaier_sum(r.iter().map(|&x| mu_unchecked(x))) - mu_unchecked(p)
    }))
}

fn accumulate(grad: &mut [f64], b: &Block, partial: &[Vec<f64>], scale: f64) {
    for (row, targets) in b.base.iter().zip(&b.targets) {
        for (k, &j) in targets.iter().enumerate() {
            let d: f64 = row.iter().zip(&partial[j]).map(|(c, p)| c * p).sum();
            grad[k] += scale * d;
        }
    }
}
