//! JSON scenario files.
//!
//! ```json
//! {
//!   "function": "x*(2*y + z) + 2*z",
//!   "parties": {
//!     "attackers":  [{"name": "x", "domain": {"interval": [1, 30]}, "prior": {"kind": "uniform"}}],
//!     "targets":    [{"name": "y", "domain": {"interval": [1, 30]}, "prior": {"kind": "uniform"}}],
//!     "spectators": [{"name": "z", "domain": {"interval": [1, 30]}, "prior": {"kind": "uniform"}}]
//!   },
//!   "gain": "id",
//!   "alpha": "inf",
//!   "approximation": {
//!     "kind": "additive", "var": "phi", "domain": {"interval": [-4, 4]},
//!     "distributions": [{"label": "phi1", "prior": {"kind": "explicit", "atoms": [[-2, "1/4"], [0, 0.25], [2, 0.25], [4, 0.25]]}}]
//!   },
//!   "optimize": {"delta": 1, "epsilon": 0.01, "seed": 0, "starts": 32}
//! }
//! ```

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::dist::{parse_rational, DiscreteDist, DomainSpec, Prob, Tuple, VarDomain};
use crate::entropy::{EntropyOrder, GainSpec, Precision};
use crate::error::{Error, Result};
use crate::expr::{parse, Arithmetic};
use crate::leakage::{PartyGroup, ScenarioSpec};
use crate::randomization::ApproximationSpec;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    function: String,
    parties: RawParties,
    gain: RawGain,
    alpha: Value,
    #[serde(default)]
    precision: Option<String>,
    #[serde(default)]
    arithmetic: Option<String>,
    #[serde(default)]
    enumeration_cap: Option<u64>,
    #[serde(default)]
    approximation: Option<RawApproximation>,
    #[serde(default)]
    optimize: Option<RawOptimize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParties {
    attackers: Vec<RawVar>,
    targets: Vec<RawVar>,
    #[serde(default)]
    spectators: Vec<RawVar>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVar {
    name: String,
    domain: RawDomain,
    prior: RawPrior,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    #[serde(default)]
    interval: Option<[i64; 2]>,
    #[serde(default)]
    set: Option<Vec<i64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrior {
    kind: String,
    #[serde(default)]
    value: Option<Value>,
    #[serde(default)]
    atoms: Option<Vec<(Value, Value)>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawGain {
    Named(String),
    Matrix {
        guesses: Vec<String>,
        matrix: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawApproximation {
    kind: String,
    #[serde(default)]
    var: Option<String>,
    #[serde(default)]
    vars: Option<Vec<String>>,
    #[serde(default)]
    h: Option<String>,
    #[serde(default)]
    domain: Option<RawDomain>,
    #[serde(default)]
    domains: Option<Vec<RawDomain>>,
    #[serde(default)]
    distributions: Vec<RawLabeled>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabeled {
    label: String,
    prior: RawPrior,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimize {
    #[serde(default)]
    delta: Option<i64>,
    #[serde(default)]
    support: Option<Vec<i64>>,
    #[serde(default)]
    epsilon: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    starts: Option<usize>,
    #[serde(default)]
    alphas: Option<Vec<f64>>,
}

/// Approximation section: the randomization scheme and the named noise
/// distributions to evaluate.
#[derive(Debug, Clone)]
pub struct ApproximationConfig {
    pub spec: ApproximationSpec,
    pub distributions: Vec<(String, DiscreteDist)>,
}

/// Optimizer section with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub support: Vec<i64>,
    pub epsilon: f64,
    pub seed: u64,
    pub starts: usize,
    pub alphas: Vec<f64>,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            support: vec![-1, 0, 1],
            epsilon: 0.01,
            seed: 0,
            starts: 32,
            alphas: vec![3.0, 4.0, 10.0],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub scenario: ScenarioSpec,
    pub approximation: Option<ApproximationConfig>,
    pub optimize: OptimizeConfig,
    /// Hex SHA-256 of the configuration text.
    pub sha256: String,
}

fn err(path: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        msg: msg.into(),
    }
}

fn at(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config { .. } => e,
        other => err(path, other.to_string()),
    }
}

pub fn load_scenario(path: &Path) -> Result<Config> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<Config> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| err("$", e.to_string()))?;
    let sha256 = hex::encode(Sha256::digest(text.as_bytes()));

    let function = parse(&raw.function).map_err(at("function"))?;
    let attackers = group(&raw.parties.attackers, "parties.attackers")?;
    let targets = group(&raw.parties.targets, "parties.targets")?;
    let spectators = group(&raw.parties.spectators, "parties.spectators")?;
    let secrets = targets.domain().tuples();
    let gain = match &raw.gain {
        RawGain::Named(n) if n == "id" => GainSpec::identity(&secrets),
        RawGain::Named(n) if n == "parity" => GainSpec::parity(&secrets),
        RawGain::Named(n) => return Err(err("gain", format!("unknown gain {n:?}"))),
        RawGain::Matrix { guesses, matrix } => GainSpec::new(guesses.clone(), matrix.clone()),
    }
    .map_err(at("gain"))?;
    let order = parse_order(&raw.alpha)?;
    let mut scenario = ScenarioSpec::new(function, attackers, targets, spectators, gain, order)
        .map_err(at("parties"))?;
    if let Some(p) = &raw.precision {
        scenario = scenario.with_precision(p.parse().map_err(at("precision"))?);
    }
    let arithmetic = match raw.arithmetic.as_deref() {
        None | Some("fixed") => Arithmetic::Fixed,
        Some("wide") => Arithmetic::Wide,
        Some(other) => return Err(err("arithmetic", format!("unknown arithmetic {other:?}"))),
    };
    scenario = scenario.with_arithmetic(arithmetic);
    if let Some(cap) = raw.enumeration_cap {
        scenario = scenario.with_enumeration_cap(cap as u128);
    }
    scenario.check_overflow().map_err(at("function"))?;

    let approximation = raw.approximation.as_ref().map(approximation).transpose()?;
    let optimize = optimize(raw.optimize.as_ref())?;
    Ok(Config {
        scenario,
        approximation,
        optimize,
        sha256,
    })
}

fn parse_order(v: &Value) -> Result<EntropyOrder> {
    let order = match v {
        Value::String(s) => s.parse(),
        Value::Number(n) => EntropyOrder::new(n.as_f64().unwrap_or(f64::NAN)),
        _ => return Err(err("alpha", "expected a number or \"inf\"")),
    };
    order.map_err(at("alpha"))
}

fn domain(raw: &RawDomain, path: &str) -> Result<VarDomain> {
    match (&raw.interval, &raw.set) {
        (Some([a, b]), None) => VarDomain::interval(*a, *b),
        (None, Some(values)) => VarDomain::set(values.clone()),
        _ => {
            return Err(err(
                path,
                "a domain is either {\"interval\": [a, b]} or {\"set\": [...]}",
            ))
        }
    }
    .map_err(at(path))
}

fn group(vars: &[RawVar], path: &str) -> Result<PartyGroup> {
    let mut g = PartyGroup::empty();
    for (i, v) in vars.iter().enumerate() {
        let p = format!("{path}[{i}]");
        let d = DomainSpec::single(domain(&v.domain, &format!("{p}.domain"))?);
        let prior = prior(&v.prior, &d, &format!("{p}.prior"))?;
        let single = PartyGroup::scalar(&v.name, d, prior).map_err(at(&p))?;
        g = g.join(&single).map_err(at(&p))?;
    }
    Ok(g)
}

fn tuple_of(v: &Value, dim: usize, path: &str) -> Result<Tuple> {
    let t: Option<Tuple> = match v {
        Value::Number(n) => n.as_i64().map(|x| vec![x]),
        Value::Array(items) => items.iter().map(|i| i.as_i64()).collect(),
        _ => None,
    };
    match t {
        Some(t) if t.len() == dim => Ok(t),
        _ => Err(err(
            path,
            format!("expected an integer tuple of dimension {dim}, got {v}"),
        )),
    }
}

fn probability(v: &Value, path: &str) -> Result<Prob> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(err(path, format!("expected a probability, got {v}"))),
    };
    parse_rational(&text).map_err(at(path))
}

fn prior(raw: &RawPrior, dom: &DomainSpec, path: &str) -> Result<DiscreteDist> {
    let dist = match raw.kind.as_str() {
        "uniform" => DiscreteDist::uniform(dom),
        "linear" => {
            if dom.dim() != 1 {
                return Err(err(path, "a linear prior needs a single variable"));
            }
            DiscreteDist::linear_over(&dom.vars()[0].values())
        }
        "point" => {
            let v = raw
                .value
                .as_ref()
                .ok_or_else(|| err(path, "a point prior needs \"value\""))?;
            Ok(DiscreteDist::point_mass(tuple_of(
                v,
                dom.dim(),
                &format!("{path}.value"),
            )?))
        }
        "explicit" => {
            let atoms = raw
                .atoms
                .as_ref()
                .ok_or_else(|| err(path, "an explicit prior needs \"atoms\""))?;
            let atoms = atoms
                .iter()
                .enumerate()
                .map(|(i, (v, p))| {
                    let ap = format!("{path}.atoms[{i}]");
                    Ok((tuple_of(v, dom.dim(), &ap)?, probability(p, &ap)?))
                })
                .collect::<Result<Vec<_>>>()?;
            DiscreteDist::from_exact(dom.dim(), atoms)
        }
        other => return Err(err(path, format!("unknown prior kind {other:?}"))),
    }
    .map_err(at(path))?;
    if let Some(t) = dist.support().iter().find(|t| !dom.contains(t)) {
        return Err(err(
            path,
            format!("prior puts mass on {t:?}, outside the domain"),
        ));
    }
    Ok(dist)
}

fn approximation(raw: &RawApproximation) -> Result<ApproximationConfig> {
    let path = "approximation";
    let vars: Vec<String> = match (&raw.var, &raw.vars) {
        (Some(v), None) => vec![v.clone()],
        (None, Some(vs)) => vs.clone(),
        (None, None) => vec!["phi".to_string()],
        _ => return Err(err(path, "give either \"var\" or \"vars\"")),
    };
    let domains: Vec<VarDomain> = match (&raw.domain, &raw.domains) {
        (Some(d), None) => vec![domain(d, "approximation.domain")?],
        (None, Some(ds)) => ds
            .iter()
            .enumerate()
            .map(|(i, d)| domain(d, &format!("approximation.domains[{i}]")))
            .collect::<Result<_>>()?,
        _ => return Err(err(path, "give either \"domain\" or \"domains\"")),
    };
    let dom = DomainSpec::new(domains);
    let spec = match raw.kind.as_str() {
        "additive" => {
            if vars.len() != 1 {
                return Err(err(
                    path,
                    "an additive approximation has exactly one virtual variable",
                ));
            }
            ApproximationSpec::additive(&vars[0], dom.clone())
        }
        "mapped" => {
            let h = raw
                .h
                .as_ref()
                .ok_or_else(|| err(path, "a mapped approximation needs \"h\""))?;
            let h = parse(h).map_err(at("approximation.h"))?;
            ApproximationSpec::mapped(h, vars, dom.clone())
        }
        other => return Err(err(path, format!("unknown approximation kind {other:?}"))),
    }
    .map_err(at(path))?;
    let distributions = raw
        .distributions
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let p = format!("approximation.distributions[{i}].prior");
            Ok((d.label.clone(), prior(&d.prior, &dom, &p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ApproximationConfig {
        spec,
        distributions,
    })
}

fn optimize(raw: Option<&RawOptimize>) -> Result<OptimizeConfig> {
    let mut o = OptimizeConfig::default();
    let Some(raw) = raw else { return Ok(o) };
    match (raw.delta, &raw.support) {
        (Some(d), None) => o.support = delta_support(d).map_err(at("optimize.delta"))?,
        (None, Some(s)) if !s.is_empty() => o.support = s.clone(),
        (None, None) => {}
        _ => {
            return Err(err(
                "optimize",
                "give either \"delta\" or a non-empty \"support\"",
            ))
        }
    }
    if let Some(e) = raw.epsilon {
        if !(e > 0.0) {
            return Err(err("optimize.epsilon", "must be positive"));
        }
        o.epsilon = e;
    }
    if let Some(s) = raw.seed {
        o.seed = s;
    }
    if let Some(s) = raw.starts {
        o.starts = s;
    }
    if let Some(a) = &raw.alphas {
        if a.iter().any(|a| !(*a > 1.0 && a.is_finite())) {
            return Err(err("optimize.alphas", "orders must be finite and above 1"));
        }
        o.alphas = a.clone();
    }
    Ok(o)
}

/// `⟦−Δ, Δ⟧`.
pub fn delta_support(delta: i64) -> Result<Vec<i64>> {
    if delta < 1 {
        return Err(Error::InvalidProblem(format!(
            "distortion bound must be at least 1, got {delta}"
        )));
    }
    Ok((-delta..=delta).collect())
}

/// Applies a precision override to a loaded configuration.
pub fn with_precision(mut cfg: Config, precision: Precision) -> Config {
    cfg.scenario = cfg.scenario.with_precision(precision);
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "function": "x*(2*y + z) + 2*z",
        "parties": {
            "attackers": [{"name": "x", "domain": {"interval": [1, 30]}, "prior": {"kind": "uniform"}}],
            "targets": [{"name": "y", "domain": {"interval": [1, 30]}, "prior": {"kind": "uniform"}}],
            "spectators": [{"name": "z", "domain": {"interval": [1, 30]}, "prior": {"kind": "uniform"}}]
        },
        "gain": "id",
        "alpha": "inf"
    }"#;

    #[test]
    fn loads_example() {
        let cfg = parse_config(EXAMPLE).unwrap();
        assert_eq!(cfg.scenario.order(), EntropyOrder::Infinity);
        assert_eq!(cfg.scenario.gain().num_guesses(), 30);
        assert!(cfg.approximation.is_none());
        assert_eq!(cfg.sha256.len(), 64);
    }

    #[test]
    fn missing_variable_is_named() {
        let text = EXAMPLE.replace("\"spectators\": [{\"name\": \"z\", \"domain\": {\"interval\": [1, 30]}, \"prior\": {\"kind\": \"uniform\"}}]", "\"spectators\": []");
        let e = parse_config(&text).unwrap_err();
        assert!(e.to_string().contains('z'), "{e}");
    }

    #[test]
    fn explicit_priors_are_exact() {
        let raw = RawPrior {
            kind: "explicit".into(),
            value: None,
            atoms: Some(vec![
                (Value::from(-1), Value::from(0.3)),
                (Value::from(0), Value::from("0.49")),
                (Value::from(1), Value::from("21/100")),
            ]),
        };
        let d = DomainSpec::interval(-1, 1).unwrap();
        let p = prior(&raw, &d, "p").unwrap();
        assert_eq!(p.mass_exact(&[-1]), crate::dist::ratio(3, 10));
        let bad = RawPrior {
            kind: "explicit".into(),
            value: None,
            atoms: Some(vec![(Value::from(5), Value::from(1))]),
        };
        assert!(prior(&bad, &d, "p").is_err());
    }

    #[test]
    fn errors_carry_field_paths() {
        let text = EXAMPLE.replace("\"gain\": \"id\"", "\"gain\": \"bogus\"");
        match parse_config(&text).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "gain"),
            other => panic!("{other:?}"),
        }
        let text = EXAMPLE.replace("\"alpha\": \"inf\"", "\"alpha\": -1");
        match parse_config(&text).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "alpha"),
            other => panic!("{other:?}"),
        }
    }
}
