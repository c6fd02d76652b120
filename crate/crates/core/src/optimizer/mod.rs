//! Optimal virtual-input distributions for additive output randomization.
//!
//! The objective is the attacker-prior-weighted awae of `f + φ` as a function
//! of the noise distribution `π_Φ` on a fixed support. Finite orders `α > 1`
//! are optimised through a δ-smoothed surrogate whose accuracy loss is
//! bounded; `α = ∞` goes through a large finite order, and `α = 1` is
//! optimised directly.

pub mod basin;
pub mod kernel;
pub mod local;

use std::collections::BTreeSet;

use crate::dist::DiscreteDist;
use crate::entropy::EntropyOrder;
use crate::error::{Error, Result};
use crate::leakage::ScenarioSpec;

pub use basin::{basin_hopping, BasinOptions, BasinOutcome};
pub use kernel::Kernel;
pub use local::{maximize, project_simplex, projected_gradient_norm, LocalOptions, LocalOutcome};

pub const DEFAULT_EPSILON: f64 = 0.01;

/// Statement attached to every certificate.
pub const GLOBAL_OPTIMALITY_ASSUMPTION: &str =
    "bounds assume the best basin found is the global optimum of the smoothed problem";

/// Maximise the weighted randomized awae over distributions on a fixed
/// noise support.
#[derive(Debug, Clone)]
pub struct OptProblem {
    scenario: ScenarioSpec,
    support: Vec<i64>,
    epsilon: f64,
    basin: BasinOptions,
    kernel: Kernel,
    n_outputs: usize,
}

impl OptProblem {
    /// Noise support `⟦−Δ, Δ⟧`.
    pub fn new(scenario: ScenarioSpec, delta: i64) -> Result<Self> {
        if delta < 1 {
            return Err(Error::InvalidProblem(format!(
                "distortion bound must be at least 1, got {delta}"
            )));
        }
        Self::with_support(scenario, (-delta..=delta).collect())
    }

    /// Arbitrary finite noise support.
    pub fn with_support(scenario: ScenarioSpec, mut support: Vec<i64>) -> Result<Self> {
        support.sort_unstable();
        support.dedup();
        if support.is_empty() {
            return Err(Error::InvalidProblem("empty noise support".into()));
        }
        let base: BTreeSet<i64> = scenario.achievable_outputs()?;
        let randomized: BTreeSet<i64> = base
            .iter()
            .flat_map(|o| support.iter().map(move |p| o + p))
            .collect();
        let kernel = Kernel::new(&scenario, &support)?;
        Ok(OptProblem {
            scenario,
            support,
            epsilon: DEFAULT_EPSILON,
            basin: BasinOptions::default(),
            kernel,
            n_outputs: randomized.len(),
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "accuracy must be positive, got {epsilon}"
            )));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn with_basin(mut self, basin: BasinOptions) -> Self {
        self.basin = basin;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.basin.seed = seed;
        self
    }

    pub fn with_starts(mut self, starts: usize) -> Self {
        self.basin.starts = starts;
        self
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        &self.scenario
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn order(&self) -> EntropyOrder {
        self.scenario.order()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn basin(&self) -> &BasinOptions {
        &self.basin
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Number of distinct randomized outputs over all declared domains.
    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn num_guesses(&self) -> usize {
        self.scenario.gain().num_guesses()
    }

    /// Dense mass vector of `pi` over the support.
    pub fn masses_of(&self, pi: &DiscreteDist) -> Result<Vec<f64>> {
        if pi.dim() != 1 {
            return Err(Error::InvalidProblem(
                "noise distributions are scalar".into(),
            ));
        }
        if let Some(t) = pi
            .support()
            .iter()
            .find(|t| self.support.binary_search(&t[0]).is_err())
        {
            return Err(Error::InvalidProblem(format!(
                "noise value {} lies outside the allowed support",
                t[0]
            )));
        }
        Ok(self.support.iter().map(|&p| pi.mass(&[p])).collect())
    }

    pub fn distribution_of(&self, masses: &[f64]) -> Result<DiscreteDist> {
        DiscreteDist::scalar_f64(
            &self
                .support
                .iter()
                .cloned()
                .zip(masses.iter().cloned())
                .collect::<Vec<_>>(),
        )
    }

    fn zero_index(&self) -> Option<usize> {
        self.support.binary_search(&0).ok()
    }

    fn check_masses(&self, masses: &[f64]) -> Result<()> {
        if masses.len() != self.support.len() {
            return Err(Error::InvalidProblem(format!(
                "{} masses for a support of size {}",
                masses.len(),
                self.support.len()
            )));
        }
        let total: f64 = masses.iter().sum();
        if masses.iter().any(|m| *m < -1e-12) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProblem(
                "masses are not on the simplex".into(),
            ));
        }
        Ok(())
    }

    /// Objective at a dense mass vector, at an explicit order.
    pub fn objective_at(&self, masses: &[f64], order: EntropyOrder) -> Result<f64> {
        self.check_masses(masses)?;
        if order == EntropyOrder::One && !self.scenario.gain().is_unitary() {
            return Err(Error::NonUnitaryGain);
        }
        Ok(self
            .kernel
            .objective(masses, order, self.scenario.precision()))
    }
}

/// `Σ_{x_A} p(x_A)·awae_randomized(x_A)` at the problem's order.
pub fn objective(p: &OptProblem, pi: &DiscreteDist) -> Result<f64> {
    p.objective_at(&p.masses_of(pi)?, p.order())
}

/// The δ-smoothed problem at a finite order `α > 1`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothedProblem<'a> {
    base: &'a OptProblem,
    alpha: f64,
    delta: f64,
}

impl<'a> SmoothedProblem<'a> {
    pub fn new(base: &'a OptProblem, alpha: f64, delta: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidOrder(format!(
                "smoothing needs a finite order above 1, got {alpha}"
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "smoothing offset must be positive, got {delta}"
            )));
        }
        Ok(SmoothedProblem { base, alpha, delta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn base(&self) -> &OptProblem {
        self.base
    }

    pub fn value_and_gradient(&self, masses: &[f64]) -> (f64, Vec<f64>) {
        self.base
            .kernel
            .smoothed(masses, self.alpha, self.delta, self.base.n_outputs)
    }

    pub fn value(&self, masses: &[f64]) -> f64 {
        self.value_and_gradient(masses).0
    }

    /// Worst-case gap between the smoothed and the exact objective.
    pub fn error_bound(&self) -> f64 {
        let beta = self.base.scenario.gain().beta();
        self.alpha / (self.alpha - 1.0)
            * self.delta
            * self.base.n_outputs as f64
            * self.base.num_guesses() as f64
            / (beta * std::f64::consts::LN_2)
    }
}

/// Largest smoothing offset keeping the smoothed optimum within `epsilon`:
/// `(1 − 1/α)·ε·β·ln2 / (|D_O'|·|W|)`.
pub fn delta_for_accuracy(
    epsilon: f64,
    alpha: f64,
    beta: f64,
    n_outputs: usize,
    n_guesses: usize,
) -> f64 {
    (1.0 - 1.0 / alpha) * epsilon * beta * std::f64::consts::LN_2
        / (n_outputs as f64 * n_guesses as f64)
}

/// Finite order whose normalised optimum is within `ε/2` of the min-entropy
/// optimum: `(2/ε)·log2|W|`, floored at 2 (which also covers `|W| < 2`).
pub fn alpha_for_accuracy(epsilon: f64, n_guesses: usize) -> f64 {
    let bound = 2.0 / epsilon * (n_guesses.max(1) as f64).log2();
    bound.max(2.0)
}

/// Local ascent on the smoothed objective.
pub fn solve_local(sp: &SmoothedProblem<'_>, start: &[f64]) -> LocalOutcome {
    maximize(|x| sp.value_and_gradient(x), start, &sp.base.basin.local)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub epsilon: f64,
    /// Order actually optimised (`None` at order 1).
    pub alpha_used: Option<f64>,
    pub delta_bound: Option<f64>,
    pub beta_gain: f64,
    pub n_outputs: usize,
    pub smoothed_objective: Option<f64>,
    /// Bracket for the optimal value at the requested order.
    pub lower: f64,
    pub upper: f64,
    pub assumption: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub starts: usize,
    pub best_start: usize,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub support: Vec<i64>,
    pub masses: Vec<f64>,
    pub distribution: DiscreteDist,
    pub objective: f64,
    pub certificate: Certificate,
    pub diagnostics: Diagnostics,
    /// Every start's best point with its objective at the requested order.
    pub candidates: Vec<(Vec<f64>, f64)>,
}

/// Solves the problem at its own order.
pub fn solve(p: &OptProblem) -> Result<OptResult> {
    solve_at(p, p.order())
}

/// Solves the problem at an explicit order, reusing the precomputed tables.
pub fn solve_at(p: &OptProblem, order: EntropyOrder) -> Result<OptResult> {
    let eps = p.epsilon;
    let beta = p.scenario.gain().beta();
    let n_w = p.num_guesses();
    let (alpha, delta) = match order {
        EntropyOrder::Finite(a) if a < 1.0 => {
            return Err(Error::InvalidOrder(format!(
                "orders below 1 are not supported by the optimizer, got {a}"
            )))
        }
        EntropyOrder::One => {
            if !p.scenario.gain().is_unitary() {
                return Err(Error::NonUnitaryGain);
            }
            (None, None)
        }
        EntropyOrder::Finite(a) => (
            Some(a),
            Some(delta_for_accuracy(eps, a, beta, p.n_outputs, n_w)),
        ),
        EntropyOrder::Infinity => {
            let a = alpha_for_accuracy(eps, n_w);
            let inner = a / (a - 1.0) * eps / 2.0;
            (
                Some(a),
                Some(delta_for_accuracy(inner, a, beta, p.n_outputs, n_w)),
            )
        }
    };
    let outcome = match (alpha, delta) {
        (Some(a), Some(d)) => {
            let sp = SmoothedProblem::new(p, a, d)?;
            basin_hopping(
                |x| sp.value_and_gradient(x),
                p.support.len(),
                p.zero_index(),
                &p.basin,
            )
        }
        _ => basin_hopping(
            |x| p.kernel.shannon_with_gradient(x),
            p.support.len(),
            p.zero_index(),
            &p.basin,
        ),
    };
    let masses = local::clean_simplex(&outcome.best.x);
    let value = p.kernel.objective(&masses, order, p.scenario.precision());
    let smoothed = alpha.map(|_| outcome.best.value);
    let (lower, upper) = match (order, smoothed, alpha) {
        (EntropyOrder::Infinity, Some(s), Some(a)) => (value, (a - 1.0) / a * s + eps),
        (EntropyOrder::Finite(_), Some(s), _) => (value, s + eps),
        _ => (value, value),
    };
    let candidates = outcome
        .per_start
        .iter()
        .map(|o| {
            let m = local::clean_simplex(&o.x);
            let v = p.kernel.objective(&m, order, p.scenario.precision());
            (m, v)
        })
        .collect();
    Ok(OptResult {
        support: p.support.clone(),
        distribution: p.distribution_of(&masses)?,
        masses,
        objective: value,
        certificate: Certificate {
            epsilon: eps,
            alpha_used: alpha,
            delta_bound: delta,
            beta_gain: beta,
            n_outputs: p.n_outputs,
            smoothed_objective: smoothed,
            lower,
            upper,
            assumption: GLOBAL_OPTIMALITY_ASSUMPTION,
        },
        diagnostics: Diagnostics {
            starts: outcome.starts,
            best_start: outcome.best_start,
            iterations: outcome.per_start.iter().map(|o| o.iterations).sum(),
            gradient_norm: outcome.best.gradient_norm,
            converged: outcome.best.converged,
        },
        candidates,
    })
}

/// Tolerance of the checks reported by [`convergence_diagnostics`].
pub const SWEEP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub omega_alpha: f64,
    /// `((α − 1)/α)·ω_α`.
    pub omega_bar: f64,
    /// `ω_∞ − ω̄_α`.
    pub theta: f64,
    /// `(1/α)·log2|W|`.
    pub theta_bound: f64,
    pub under_ok: bool,
    pub theta_ok: bool,
    pub masses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Best min-entropy objective found across all solves.
    pub omega_inf: f64,
    pub inf_masses: Vec<f64>,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.under_ok && r.theta_ok)
    }
}

/// Solves at each finite order and at `∞`, and tabulates how the normalised
/// optima approach the min-entropy optimum.
pub fn convergence_diagnostics(p: &OptProblem, alphas: &[f64]) -> Result<SweepReport> {
    if let Some(a) = alphas.iter().find(|a| !(**a > 1.0 && a.is_finite())) {
        return Err(Error::InvalidOrder(format!(
            "sweep orders must be finite and above 1, got {a}"
        )));
    }
    let inf = solve_at(p, EntropyOrder::Infinity)?;
    let mut omega_inf = inf.objective;
    let mut inf_masses = inf.masses.clone();
    let mut solved = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let r = solve_at(p, EntropyOrder::Finite(a))?;
        let at_inf = p
            .kernel
            .objective(&r.masses, EntropyOrder::Infinity, p.scenario.precision());
        if at_inf > omega_inf {
            omega_inf = at_inf;
            inf_masses = r.masses.clone();
        }
        solved.push((a, r));
    }
    let log_w = (p.num_guesses() as f64).log2();
    let rows = solved
        .into_iter()
        .map(|(a, r)| {
            let omega_bar = (a - 1.0) / a * r.objective;
            let theta = omega_inf - omega_bar;
            let theta_bound = log_w / a;
            SweepRow {
                alpha: a,
                omega_alpha: r.objective,
                omega_bar,
                theta,
                theta_bound,
                under_ok: omega_bar <= omega_inf + SWEEP_TOLERANCE,
                theta_ok: theta <= theta_bound + SWEEP_TOLERANCE,
                masses: r.masses,
            }
        })
        .collect();
    Ok(SweepReport {
        omega_inf,
        inf_masses,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_parameters() {
        let d = delta_for_accuracy(5.0e-3, 200.0, 1.0, 5656, 2);
        assert!((d - 3.0e-7).abs() < 0.1e-7, "{d}");
        assert!(
            (delta_for_accuracy(0.1, 1e12, 1.0, 10, 2) - 0.1 * std::f64::consts::LN_2 / 20.0).abs()
                < 1e-12
        );
        let a = delta_for_accuracy(0.1, 5.0, 1.0, 10, 2);
        let b = delta_for_accuracy(0.1, 5.0, 1.0, 10, 4);
        assert!((a - 2.0 * b).abs() < 1e-18);

        assert!((alpha_for_accuracy(0.01, 2) - 200.0).abs() < 1e-9);
        assert_eq!(alpha_for_accuracy(1.0, 2), 2.0);
        assert!((alpha_for_accuracy(0.5, 4) - 8.0).abs() < 1e-12);
        assert_eq!(alpha_for_accuracy(0.5, 1), 2.0);
    }
}
