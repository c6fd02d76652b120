//! Attackers' weighted average entropy (awae) by exact enumeration.
//!
//! For a fixed attacker input `x_A` the enumeration produces, for every
//! reachable output `o`, the unnormalised weights `B[o][t] = p(t)·p(o | t, x_A)`
//! over the target domain. Because the α-norm is homogeneous, the conditional
//! vulnerability is `Σ_o ‖⟨Σ_t B[o][t]·g(w, t)⟩_w‖_α`, so no per-output
//! normalisation is needed.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::dist::{prob_to_f64, DiscreteDist, DomainSpec, Prob, Tuple};
use crate::entropy::{entropy_with, mu_unchecked, EntropyOrder, GainSpec, Precision};
use crate::error::{Error, Result};
use crate::expr::{Arithmetic, CompiledExpr, Expr};
use crate::extended::ExtendedContext;
use crate::numeric::{ln_alpha_norm, log_sum_exp, neumaier_sum, snap_entropy};

/// Default cap on the number of enumerated `(x_A, x_T, rest)` triples.
pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000_000;

/// A set of named input variables with their joint domain and prior.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyGroup {
    names: Vec<String>,
    domain: DomainSpec,
    prior: DiscreteDist,
}

impl PartyGroup {
    pub fn new(names: Vec<String>, domain: DomainSpec, prior: DiscreteDist) -> Result<Self> {
        if names.len() != domain.dim() || prior.dim() != domain.dim() {
            return Err(Error::InvalidScenario(format!(
                "group {names:?}: {} names, domain of dimension {}, prior of dimension {}",
                names.len(),
                domain.dim(),
                prior.dim()
            )));
        }
        if let Some(t) = prior.support().iter().find(|t| !domain.contains(t)) {
            return Err(Error::InvalidScenario(format!(
                "prior of {names:?} puts mass on {t:?}, outside the declared domain"
            )));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::DuplicateVariable(dup.clone()));
        }
        Ok(PartyGroup {
            names,
            domain,
            prior,
        })
    }

    /// A single scalar variable.
    pub fn scalar(name: &str, domain: DomainSpec, prior: DiscreteDist) -> Result<Self> {
        Self::new(vec![name.to_string()], domain, prior)
    }

    /// The group with no variables (its only tuple is the empty one).
    pub fn empty() -> Self {
        PartyGroup {
            names: Vec::new(),
            domain: DomainSpec::default(),
            prior: DiscreteDist::unit(),
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn prior(&self) -> &DiscreteDist {
        &self.prior
    }

    /// Independent union of two groups.
    pub fn join(&self, other: &PartyGroup) -> Result<PartyGroup> {
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        PartyGroup::new(
            names,
            self.domain.product(&other.domain),
            self.prior.product(&other.prior),
        )
    }
}

/// A leakage scenario: the public function, the three party groups, the gain
/// function over the target domain and the entropy order.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    function: Expr,
    attackers: PartyGroup,
    targets: PartyGroup,
    spectators: PartyGroup,
    gain: GainSpec,
    order: EntropyOrder,
    arithmetic: Arithmetic,
    precision: Precision,
    enumeration_cap: u128,
}

impl ScenarioSpec {
    pub fn new(
        function: Expr,
        attackers: PartyGroup,
        targets: PartyGroup,
        spectators: PartyGroup,
        gain: GainSpec,
        order: EntropyOrder,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for name in attackers
            .names()
            .iter()
            .chain(targets.names())
            .chain(spectators.names())
        {
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateVariable(name.clone()));
            }
        }
        if let Some(missing) = function.free_vars().into_iter().find(|v| !seen.contains(v)) {
            return Err(Error::UnassignedVariable(missing));
        }
        if targets.domain().dim() == 0 {
            return Err(Error::InvalidScenario(
                "the target group must contain at least one variable".into(),
            ));
        }
        let n_targets = targets.domain().len();
        if gain.num_secrets() as u128 != n_targets {
            return Err(Error::InvalidGain(format!(
                "gain function covers {} secrets but the target domain has {n_targets}",
                gain.num_secrets()
            )));
        }
        EntropyOrder::new(order.value())?;
        Ok(ScenarioSpec {
            function,
            attackers,
            targets,
            spectators,
            gain,
            order,
            arithmetic: Arithmetic::Fixed,
            precision: Precision::Double,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    pub fn with_order(mut self, order: EntropyOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_arithmetic(mut self, arithmetic: Arithmetic) -> Self {
        self.arithmetic = arithmetic;
        self
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn with_enumeration_cap(mut self, cap: u128) -> Self {
        self.enumeration_cap = cap;
        self
    }

    /// Same scenario with a different function and extra spectator-side
    /// variables (used for randomized computations).
    pub fn extended_with(&self, function: Expr, extra: &PartyGroup) -> Result<Self> {
        let spectators = self.spectators.join(extra)?;
        let mut s = ScenarioSpec::new(
            function,
            self.attackers.clone(),
            self.targets.clone(),
            spectators,
            self.gain.clone(),
            self.order,
        )?;
        s.arithmetic = self.arithmetic;
        s.precision = self.precision;
        s.enumeration_cap = self.enumeration_cap;
        Ok(s)
    }

    pub fn function(&self) -> &Expr {
        &self.function
    }

    pub fn attackers(&self) -> &PartyGroup {
        &self.attackers
    }

    pub fn targets(&self) -> &PartyGroup {
        &self.targets
    }

    pub fn spectators(&self) -> &PartyGroup {
        &self.spectators
    }

    pub fn gain(&self) -> &GainSpec {
        &self.gain
    }

    pub fn order(&self) -> EntropyOrder {
        self.order
    }

    pub fn arithmetic(&self) -> Arithmetic {
        self.arithmetic
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn enumeration_cap(&self) -> u128 {
        self.enumeration_cap
    }

    /// Variable order used for compiled evaluation: attackers, targets, spectators.
    pub fn slot_names(&self) -> Vec<String> {
        let mut v = self.attackers.names.clone();
        v.extend(self.targets.names.iter().cloned());
        v.extend(self.spectators.names.iter().cloned());
        v
    }

    /// Checks that the function cannot overflow on the declared domains under
    /// the configured arithmetic.
    pub fn check_overflow(&self) -> Result<()> {
        let mut ranges = HashMap::new();
        for g in [&self.attackers, &self.targets, &self.spectators] {
            for (name, var) in g.names.iter().zip(g.domain.vars()) {
                ranges.insert(name.clone(), var.bounds());
            }
        }
        let b = self.function.interval(&ranges)?;
        if !b.root_fits() {
            return Err(Error::Overflow(format!(
                "{} ranges over [{}, {}], outside the 64-bit integer range",
                self.function, b.lo, b.hi
            )));
        }
        if self.arithmetic == Arithmetic::Fixed && !b.intermediates_fit {
            return Err(Error::Overflow(format!(
                "an intermediate result of {} may overflow 64-bit arithmetic; use wide arithmetic",
                self.function
            )));
        }
        Ok(())
    }

    fn compile(&self) -> Result<CompiledExpr> {
        self.function.compile(&self.slot_names(), self.arithmetic)
    }

    /// Entropy of the target prior under this scenario's gain and order.
    pub fn prior_entropy(&self) -> Result<f64> {
        let p = self.target_weights();
        entropy_with(&p, &self.gain, self.order, self.precision)
    }

    /// Target prior as a dense vector indexed like the target domain.
    pub fn target_weights(&self) -> Vec<f64> {
        self.targets
            .domain
            .tuples()
            .iter()
            .map(|t| self.targets.prior.mass(t))
            .collect()
    }

    fn check_cap(&self, attacker_count: u128, rest: u128) -> Result<()> {
        let requested = attacker_count
            .saturating_mul(self.targets.prior.len() as u128)
            .saturating_mul(rest);
        if requested > self.enumeration_cap {
            return Err(Error::DomainTooLarge {
                requested,
                cap: self.enumeration_cap,
            });
        }
        Ok(())
    }

    fn check_order(&self) -> Result<()> {
        if self.order == EntropyOrder::One && !self.gain.is_unitary() {
            return Err(Error::NonUnitaryGain);
        }
        Ok(())
    }

    /// Exact unnormalised fibers for one attacker input.
    pub fn fiber_table(&self, x_a: &[i64]) -> Result<FiberTable> {
        let compiled = self.compile()?;
        self.fiber_table_with(&compiled, x_a)
    }

    fn fiber_table_with(&self, compiled: &CompiledExpr, x_a: &[i64]) -> Result<FiberTable> {
        if x_a.len() != self.attackers.domain.dim() {
            return Err(Error::InvalidScenario(format!(
                "attacker input {x_a:?} has the wrong dimension"
            )));
        }
        let target_tuples = self.targets.domain.tuples();
        let n_t = target_tuples.len();
        let index: HashMap<&Tuple, usize> = target_tuples
            .iter()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        let mut slots: Vec<i64> = x_a.to_vec();
        let a_len = slots.len();
        let t_len = self.targets.domain.dim();
        slots.resize(a_len + t_len + self.spectators.domain.dim(), 0);
        let mut table: BTreeMap<i64, Vec<Prob>> = BTreeMap::new();
        for (t, pt) in self.targets.prior.iter() {
            let ti = index[t];
            slots[a_len..a_len + t_len].copy_from_slice(t);
            let mut fiber: BTreeMap<i64, Prob> = BTreeMap::new();
            for (s, ps) in self.spectators.prior.iter() {
                slots[a_len + t_len..].copy_from_slice(s);
                let o = compiled.eval(&slots)?;
                *fiber.entry(o).or_insert_with(Prob::zero) += ps;
            }
            for (o, w) in fiber {
                let row = table.entry(o).or_insert_with(|| vec![Prob::zero(); n_t]);
                row[ti] = w * pt;
            }
        }
        let (outputs, weights) = table.into_iter().unzip();
        Ok(FiberTable { outputs, weights })
    }

    /// Outputs reachable from any combination of values in the declared
    /// domains (not only the prior supports).
    pub fn achievable_outputs(&self) -> Result<BTreeSet<i64>> {
        let total = self
            .attackers
            .domain
            .len()
            .saturating_mul(self.targets.domain.len())
            .saturating_mul(self.spectators.domain.len());
        if total > self.enumeration_cap {
            return Err(Error::DomainTooLarge {
                requested: total,
                cap: self.enumeration_cap,
            });
        }
        let compiled = self.compile()?;
        let a = self.attackers.domain.tuples();
        let t = self.targets.domain.tuples();
        let s = self.spectators.domain.tuples();
        let parts: Vec<Result<BTreeSet<i64>>> = a
            .par_iter()
            .map(|xa| {
                let mut out = BTreeSet::new();
                let mut slots = Vec::new();
                for xt in &t {
                    for xs in &s {
                        slots.clear();
                        slots.extend_from_slice(xa);
                        slots.extend_from_slice(xt);
                        slots.extend_from_slice(xs);
                        out.insert(compiled.eval(&slots)?);
                    }
                }
                Ok(out)
            })
            .collect();
        let mut all = BTreeSet::new();
        for p in parts {
            all.extend(p?);
        }
        Ok(all)
    }
}

/// Unnormalised joint weights `B[o][t] = p(t)·p(o | t, x_A)` for the
/// reachable outputs `o` (sorted ascending) and every target index `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberTable {
    pub outputs: Vec<i64>,
    pub weights: Vec<Vec<Prob>>,
}

impl FiberTable {
    pub fn weights_f64(&self) -> Vec<Vec<f64>> {
        self.weights
            .iter()
            .map(|r| r.iter().map(prob_to_f64).collect())
            .collect()
    }

    /// Expected-gain vectors `u_o[w] = Σ_t B[o][t]·g(w, t)`.
    pub fn projected(&self, g: &GainSpec) -> Vec<Vec<f64>> {
        self.weights_f64().iter().map(|r| g.project(r)).collect()
    }

    /// Output probabilities `p(o | x_A)`.
    pub fn output_masses(&self) -> Vec<Prob> {
        self.weights
            .iter()
            .map(|r| r.iter().fold(Prob::zero(), |acc, p| acc + p))
            .collect()
    }

    /// Conditional entropy of the targets given the output.
    pub fn entropy(&self, g: &GainSpec, order: EntropyOrder, precision: Precision) -> f64 {
        let h = match order {
            EntropyOrder::Infinity => {
                let v = exact_max_vulnerability(&self.weights, g);
                -prob_to_f64(&v).log2()
            }
            EntropyOrder::Finite(alpha) => {
                let u = self.projected(g);
                let log2_v = match precision {
                    Precision::Double => {
                        let logs: Vec<f64> = u.iter().map(|v| ln_alpha_norm(v, alpha)).collect();
                        log_sum_exp(&logs) / std::f64::consts::LN_2
                    }
                    Precision::Extended => ExtendedContext::new()
                        .log2_sum_of_norms(u.iter().map(|v| v.as_slice()), alpha),
                };
                alpha / (1.0 - alpha) * log2_v
            }
            EntropyOrder::One => {
                let u = self.projected(g);
                let masses = self.output_masses();
                neumaier_sum(u.iter().zip(&masses).map(|(v, m)| {
                    let m = prob_to_f64(m);
                    m * neumaier_sum(v.iter().map(|x| mu_unchecked(x / m)))
                }))
            }
        };
        snap_entropy(h)
    }

    /// Same quantity computed through normalised conditionals
    /// `p(t | o, x_A)` weighted by `p(o | x_A)`.
    pub fn entropy_normalized(&self, g: &GainSpec, order: EntropyOrder) -> f64 {
        let masses: Vec<f64> = self.output_masses().iter().map(prob_to_f64).collect();
        let conditionals: Vec<Vec<f64>> = self
            .weights_f64()
            .iter()
            .zip(&masses)
            .map(|(r, m)| r.iter().map(|x| x / m).collect())
            .collect();
        let h = match order {
            EntropyOrder::Infinity => {
                let v = neumaier_sum(
                    conditionals
                        .iter()
                        .zip(&masses)
                        .map(|(c, m)| m * g.project(c).into_iter().fold(0.0, f64::max)),
                );
                -v.log2()
            }
            EntropyOrder::Finite(alpha) => {
                let v = neumaier_sum(
                    conditionals
                        .iter()
                        .zip(&masses)
                        .map(|(c, m)| m * ln_alpha_norm(&g.project(c), alpha).exp()),
                );
                alpha / (1.0 - alpha) * v.log2()
            }
            EntropyOrder::One => neumaier_sum(
                conditionals
                    .iter()
                    .zip(&masses)
                    .map(|(c, m)| m * neumaier_sum(g.project(c).into_iter().map(mu_unchecked))),
            ),
        };
        snap_entropy(h)
    }
}

/// `Σ_o max_w Σ_t B[o][t]·g(w, t)`, evaluated exactly with the gain entries
/// converted to rationals.
fn exact_max_vulnerability(weights: &[Vec<Prob>], g: &GainSpec) -> Prob {
    let columns: Vec<Vec<(usize, Prob)>> = (0..g.num_secrets())
        .map(|t| {
            (0..g.num_guesses())
                .filter(|&w| g.gain(w, t) > 0.0)
                .map(|w| (w, Prob::from_float(g.gain(w, t)).expect("finite gain")))
                .collect()
        })
        .collect();
    let mut total = Prob::zero();
    let mut acc: BTreeMap<usize, Prob> = BTreeMap::new();
    for row in weights {
        acc.clear();
        for (t, b) in row.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            for (w, gw) in &columns[t] {
                let term = if gw.is_one() { b.clone() } else { b * gw };
                *acc.entry(*w).or_insert_with(Prob::zero) += term;
            }
        }
        if let Some(max) = acc.values().max() {
            total += max;
        }
    }
    total
}

/// awae as a function of the attackers' input, one entry per element of `D_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageProfile {
    entries: Vec<(Tuple, f64)>,
}

impl LeakageProfile {
    pub fn new(entries: Vec<(Tuple, f64)>) -> Self {
        LeakageProfile { entries }
    }

    pub fn entries(&self) -> &[(Tuple, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, x_a: &[i64]) -> Option<f64> {
        self.entries
            .iter()
            .find(|(t, _)| t.as_slice() == x_a)
            .map(|(_, h)| *h)
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, h)| *h).collect()
    }

    /// `Σ_{x_A} p(x_A)·awae(x_A)` under the given attacker prior.
    pub fn weighted(&self, prior: &DiscreteDist) -> f64 {
        neumaier_sum(self.entries.iter().map(|(t, h)| prior.mass(t) * h))
    }
}

/// Which algebraic route computes the conditional vulnerability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Unnormalised weights, using homogeneity of the α-norm.
    Homogeneous,
    /// Explicitly normalised conditionals weighted by `p(o | x_A)`.
    Normalized,
}

/// Distribution of `f` when the variables in `fixed` are set and the
/// remaining variables `rest_vars` follow `joint_rest`.
pub fn output_dist_given(
    f: &Expr,
    fixed: &HashMap<String, i64>,
    rest_vars: &[String],
    joint_rest: &DiscreteDist,
) -> Result<DiscreteDist> {
    if rest_vars.len() != joint_rest.dim() {
        return Err(Error::InvalidDistribution(format!(
            "{} rest variables for a distribution of dimension {}",
            rest_vars.len(),
            joint_rest.dim()
        )));
    }
    let mut slots: Vec<String> = fixed.keys().cloned().collect();
    slots.sort();
    let n_fixed = slots.len();
    slots.extend(rest_vars.iter().cloned());
    let compiled = f.compile(&slots, Arithmetic::Wide)?;
    let mut values: Vec<i64> = slots[..n_fixed].iter().map(|k| fixed[k]).collect();
    values.resize(slots.len(), 0);
    let mut out: BTreeMap<i64, Prob> = BTreeMap::new();
    for (r, p) in joint_rest.iter() {
        values[n_fixed..].copy_from_slice(r);
        *out.entry(compiled.eval(&values)?)
            .or_insert_with(Prob::zero) += p;
    }
    DiscreteDist::from_exact(1, out.into_iter().map(|(o, p)| (vec![o], p)).collect())
}

/// awae over every attacker input in `D_A`.
pub fn awae(s: &ScenarioSpec) -> Result<LeakageProfile> {
    awae_via(s, Route::Homogeneous)
}

pub fn awae_via(s: &ScenarioSpec, route: Route) -> Result<LeakageProfile> {
    let inputs = s.attackers.domain.tuples();
    profile_over(s, inputs, route)
}

/// awae restricted to the listed attacker inputs.
pub fn awae_at(s: &ScenarioSpec, inputs: &[Tuple]) -> Result<LeakageProfile> {
    profile_over(s, inputs.to_vec(), Route::Homogeneous)
}

fn profile_over(s: &ScenarioSpec, inputs: Vec<Tuple>, route: Route) -> Result<LeakageProfile> {
    s.check_order()?;
    s.check_cap(inputs.len() as u128, s.spectators.prior.len() as u128)?;
    let compiled = s.compile()?;
    let entries: Vec<Result<(Tuple, f64)>> = inputs
        .into_par_iter()
        .map(|x_a| {
            let table = s.fiber_table_with(&compiled, &x_a)?;
            let h = match route {
                Route::Homogeneous => table.entropy(&s.gain, s.order, s.precision),
                Route::Normalized => table.entropy_normalized(&s.gain, s.order),
            };
            Ok((x_a, h))
        })
        .collect();
    Ok(LeakageProfile::new(
        entries.into_iter().collect::<Result<_>>()?,
    ))
}
