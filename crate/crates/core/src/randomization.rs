//! Randomized computations `f'(x, φ) = h(f(x), φ)` driven by virtual inputs,
//! their distortion, and the privacy gain Γ with its bounds.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::dist::{DiscreteDist, DomainSpec, Tuple};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::leakage::{awae, PartyGroup, ScenarioSpec};

/// Name of the original output inside a mapped approximation `h`.
pub const OUTPUT_VAR: &str = "o";
/// Tolerance of the bound checks in [`verify_bounds`].
pub const BOUND_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub enum ApproxKind {
    /// `h(o, φ) = o + φ`.
    Additive,
    /// Arbitrary `h` over `o` and the virtual variables.
    Mapped(Expr),
}

/// How the output is randomized, and the domain of the virtual inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationSpec {
    kind: ApproxKind,
    virtual_vars: Vec<String>,
    domain: DomainSpec,
}

impl ApproximationSpec {
    pub fn additive(var: &str, domain: DomainSpec) -> Result<Self> {
        if domain.dim() != 1 {
            return Err(Error::InvalidApproximation(
                "an additive approximation has exactly one virtual variable".into(),
            ));
        }
        check_var_name(var)?;
        Ok(ApproximationSpec {
            kind: ApproxKind::Additive,
            virtual_vars: vec![var.to_string()],
            domain,
        })
    }

    pub fn mapped(h: Expr, vars: Vec<String>, domain: DomainSpec) -> Result<Self> {
        if vars.len() != domain.dim() || vars.is_empty() {
            return Err(Error::InvalidApproximation(format!(
                "{} virtual variables for a domain of dimension {}",
                vars.len(),
                domain.dim()
            )));
        }
        let mut seen = BTreeSet::new();
        for v in &vars {
            check_var_name(v)?;
            if !seen.insert(v.as_str()) {
                return Err(Error::DuplicateVariable(v.clone()));
            }
        }
        if let Some(bad) = h
            .free_vars()
            .into_iter()
            .find(|v| v != OUTPUT_VAR && !seen.contains(v.as_str()))
        {
            return Err(Error::InvalidApproximation(format!(
                "h refers to {bad}, which is neither {OUTPUT_VAR} nor a virtual variable"
            )));
        }
        Ok(ApproximationSpec {
            kind: ApproxKind::Mapped(h),
            virtual_vars: vars,
            domain,
        })
    }

    pub fn kind(&self) -> &ApproxKind {
        &self.kind
    }

    pub fn virtual_vars(&self) -> &[String] {
        &self.virtual_vars
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// `h` as an expression over `o` and the virtual variables.
    pub fn h(&self) -> Expr {
        match &self.kind {
            ApproxKind::Additive => Expr::Add(
                Box::new(Expr::var(OUTPUT_VAR)),
                Box::new(Expr::var(&self.virtual_vars[0])),
            ),
            ApproxKind::Mapped(h) => h.clone(),
        }
    }

    /// The randomized function `h(f(x), φ)`.
    pub fn transform(&self, f: &Expr) -> Expr {
        match &self.kind {
            ApproxKind::Additive => Expr::Add(
                Box::new(f.clone()),
                Box::new(Expr::var(&self.virtual_vars[0])),
            ),
            ApproxKind::Mapped(h) => h.substitute(OUTPUT_VAR, f),
        }
    }

    /// `h(o, φ)` in unbounded arithmetic.
    pub fn apply(&self, o: i64, phi: &[i64]) -> Result<BigInt> {
        let mut env = HashMap::with_capacity(phi.len() + 1);
        env.insert(OUTPUT_VAR.to_string(), o);
        for (name, v) in self.virtual_vars.iter().zip(phi) {
            env.insert(name.clone(), *v);
        }
        self.h().eval_big(&env)
    }

    /// True iff every `h(·, φ)` is injective on `outputs`.
    pub fn is_close(&self, outputs: &BTreeSet<i64>) -> bool {
        if self.kind == ApproxKind::Additive {
            return true;
        }
        self.domain.tuples().iter().all(|phi| {
            let mut images = BTreeSet::new();
            outputs.iter().all(|&o| match self.apply(o, phi) {
                Ok(v) => images.insert(v),
                Err(_) => false,
            })
        })
    }

    /// Largest `|o − h(o, φ)|` over the support of `pi` and the given outputs.
    pub fn distortion(&self, pi: &DiscreteDist, outputs: &BTreeSet<i64>) -> Result<u128> {
        self.check_virtual_prior(pi)?;
        let mut max = 0u128;
        for phi in pi.support() {
            match self.kind {
                ApproxKind::Additive => max = max.max(phi[0].unsigned_abs() as u128),
                ApproxKind::Mapped(_) => {
                    for &o in outputs {
                        let d = (BigInt::from(o) - self.apply(o, phi)?).abs();
                        let d = d
                            .to_u128()
                            .ok_or_else(|| Error::Overflow(format!("distortion {d}")))?;
                        max = max.max(d);
                    }
                }
            }
        }
        Ok(max)
    }

    fn check_virtual_prior(&self, pi: &DiscreteDist) -> Result<()> {
        if pi.dim() != self.domain.dim() {
            return Err(Error::InvalidDistribution(format!(
                "virtual distribution has dimension {}, expected {}",
                pi.dim(),
                self.domain.dim()
            )));
        }
        if let Some(t) = pi.support().iter().find(|t| !self.domain.contains(t)) {
            return Err(Error::InvalidDistribution(format!(
                "virtual distribution puts mass on {t:?}, outside the virtual domain"
            )));
        }
        Ok(())
    }

    /// Scenario of the randomized computation: `f'` with the virtual
    /// variables joining the spectators.
    pub fn randomized_scenario(&self, s: &ScenarioSpec, pi: &DiscreteDist) -> Result<ScenarioSpec> {
        self.check_virtual_prior(pi)?;
        let group = PartyGroup::new(self.virtual_vars.clone(), self.domain.clone(), pi.clone())?;
        s.extended_with(self.transform(s.function()), &group)
    }
}

fn check_var_name(v: &str) -> Result<()> {
    if v == OUTPUT_VAR {
        return Err(Error::InvalidApproximation(format!(
            "{OUTPUT_VAR} is reserved for the original output"
        )));
    }
    Ok(())
}

/// awae of the randomized computation over every attacker input.
pub fn awae_randomized(
    s: &ScenarioSpec,
    approx: &ApproximationSpec,
    pi: &DiscreteDist,
) -> Result<crate::leakage::LeakageProfile> {
    awae(&approx.randomized_scenario(s, pi)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainRow {
    pub x_a: Tuple,
    pub baseline: f64,
    pub randomized: f64,
    pub gamma: f64,
}

/// Per-attacker-input privacy gain, plus the entropy of the virtual prior
/// at the scenario's order.
#[derive(Debug, Clone, PartialEq)]
pub struct GainReport {
    pub rows: Vec<GainRow>,
    pub virtual_entropy: f64,
}

pub fn gamma(
    s: &ScenarioSpec,
    approx: &ApproximationSpec,
    pi: &DiscreteDist,
) -> Result<GainReport> {
    let base = awae(s)?;
    let rand = awae_randomized(s, approx, pi)?;
    let rows = base
        .entries()
        .iter()
        .zip(rand.entries())
        .map(|((x_a, b), (_, r))| GainRow {
            x_a: x_a.clone(),
            baseline: *b,
            randomized: *r,
            gamma: r - b,
        })
        .collect();
    Ok(GainReport {
        rows,
        virtual_entropy: pi.renyi_entropy(s.order()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub x_a: Tuple,
    pub gamma: f64,
    pub lower_ok: bool,
    /// `None` when the approximation is not close and the upper bound does not apply.
    pub upper_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub close: bool,
    pub virtual_entropy: f64,
    pub tolerance: f64,
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn all_ok(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.lower_ok && r.upper_ok.unwrap_or(true))
    }

    pub fn violations(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| !(r.lower_ok && r.upper_ok.unwrap_or(true)))
            .count()
    }
}

/// Checks `0 ≤ Γ` everywhere and, for close approximations,
/// `Γ ≤ H_α(π_Φ)`.
pub fn verify_bounds(
    s: &ScenarioSpec,
    approx: &ApproximationSpec,
    pi: &DiscreteDist,
) -> Result<BoundReport> {
    let report = gamma(s, approx, pi)?;
    let close = approx.is_close(&s.achievable_outputs()?);
    let tol = BOUND_TOLERANCE;
    let rows = report
        .rows
        .iter()
        .map(|r| BoundRow {
            x_a: r.x_a.clone(),
            gamma: r.gamma,
            lower_ok: r.gamma >= -tol,
            upper_ok: close.then_some(r.gamma <= report.virtual_entropy + tol),
        })
        .collect();
    Ok(BoundReport {
        close,
        virtual_entropy: report.virtual_entropy,
        tolerance: tol,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{gain_id, EntropyOrder};

    fn group(name: &str, a: i64, b: i64) -> PartyGroup {
        let d = DomainSpec::interval(a, b).unwrap();
        PartyGroup::scalar(name, d.clone(), DiscreteDist::uniform(&d).unwrap()).unwrap()
    }

    fn scenario(f: &str, order: EntropyOrder) -> ScenarioSpec {
        let t = group("y", 1, 4);
        let g = gain_id(&t.domain().tuples()).unwrap();
        ScenarioSpec::new(
            f.parse().unwrap(),
            group("x", 1, 3),
            t,
            group("z", 1, 3),
            g,
            order,
        )
        .unwrap()
    }

    fn phi_domain(a: i64, b: i64) -> DomainSpec {
        DomainSpec::interval(a, b).unwrap()
    }

    #[test]
    fn closeness() {
        let outputs: BTreeSet<i64> = (0..10).collect();
        assert!(ApproximationSpec::additive("phi", phi_domain(-2, 2))
            .unwrap()
            .is_close(&outputs));
        let constant =
            ApproximationSpec::mapped(Expr::Lit(0), vec!["phi".into()], phi_domain(0, 1)).unwrap();
        assert!(!constant.is_close(&outputs));
        let doubled = ApproximationSpec::mapped(
            "2*o + phi".parse().unwrap(),
            vec!["phi".into()],
            phi_domain(0, 1),
        )
        .unwrap();
        assert!(doubled.is_close(&outputs));
        let folded = ApproximationSpec::mapped(
            "o*o + phi".parse().unwrap(),
            vec!["phi".into()],
            phi_domain(0, 1),
        )
        .unwrap();
        assert!(folded.is_close(&outputs));
        assert!(!folded.is_close(&(-3..3).collect()));
    }

    #[test]
    fn distortion_examples() {
        let outputs: BTreeSet<i64> = (0..5).collect();
        let add = ApproximationSpec::additive("phi", phi_domain(-4, 4)).unwrap();
        let pi = DiscreteDist::scalar_f64(&[(-1, 0.3), (0, 0.49), (1, 0.21)]).unwrap();
        assert_eq!(add.distortion(&pi, &outputs).unwrap(), 1);
        assert_eq!(
            add.distortion(&DiscreteDist::point_mass(vec![0]), &outputs)
                .unwrap(),
            0
        );
        let pi1 =
            DiscreteDist::scalar_ratio(&[(-2, 1, 4), (0, 1, 4), (2, 1, 4), (4, 1, 4)]).unwrap();
        assert_eq!(add.distortion(&pi1, &outputs).unwrap(), 4);
        let scaled = ApproximationSpec::mapped(
            "2*o + phi".parse().unwrap(),
            vec!["phi".into()],
            phi_domain(0, 1),
        )
        .unwrap();
        let pi = DiscreteDist::scalar_ratio(&[(0, 1, 2), (1, 1, 2)]).unwrap();
        assert_eq!(scaled.distortion(&pi, &outputs).unwrap(), 5);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ApproximationSpec::additive("o", phi_domain(0, 1)).is_err());
        assert!(ApproximationSpec::mapped(
            "o + q".parse().unwrap(),
            vec!["phi".into()],
            phi_domain(0, 1)
        )
        .is_err());
        let add = ApproximationSpec::additive("phi", phi_domain(-1, 1)).unwrap();
        let s = scenario("x*y + z", EntropyOrder::Infinity);
        let outside = DiscreteDist::point_mass(vec![3]);
        assert!(awae_randomized(&s, &add, &outside).is_err());
    }

    #[test]
    fn point_mass_gives_zero_gain() {
        for order in [
            EntropyOrder::One,
            EntropyOrder::Finite(2.0),
            EntropyOrder::Infinity,
        ] {
            let s = scenario("x*y + z", order);
            let add = ApproximationSpec::additive("phi", phi_domain(-2, 2)).unwrap();
            for c in [0, 2] {
                let r = gamma(&s, &add, &DiscreteDist::point_mass(vec![c])).unwrap();
                assert!(r.rows.iter().all(|row| row.gamma.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn bounds_hold_for_uniform_noise() {
        let s = scenario("x*y + z", EntropyOrder::Finite(2.0));
        let add = ApproximationSpec::additive("phi", phi_domain(-2, 2)).unwrap();
        let pi = DiscreteDist::uniform(&phi_domain(-2, 2)).unwrap();
        let report = verify_bounds(&s, &add, &pi).unwrap();
        assert!(report.close);
        assert!(report.all_ok());
        assert!((report.virtual_entropy - 5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn identity_map_and_constant_map() {
        let s = scenario("x*y + z", EntropyOrder::Infinity);
        let pi = DiscreteDist::uniform(&phi_domain(0, 1)).unwrap();
        let ident = ApproximationSpec::mapped(Expr::var("o"), vec!["phi".into()], phi_domain(0, 1))
            .unwrap();
        let report = verify_bounds(&s, &ident, &pi).unwrap();
        assert!(report.all_ok());
        assert!(report.rows.iter().all(|r| r.gamma.abs() < 1e-12));

        let constant =
            ApproximationSpec::mapped(Expr::Lit(0), vec!["phi".into()], phi_domain(0, 1)).unwrap();
        let report = verify_bounds(&s, &constant, &pi).unwrap();
        assert!(!report.close);
        assert!(report.all_ok());
        let prior = s.prior_entropy().unwrap();
        let rand = awae_randomized(&s, &constant, &pi).unwrap();
        assert!(rand.values().iter().all(|h| (h - prior).abs() < 1e-12));
    }
}
