//! Finite discrete distributions over integer tuples and the domains they
//! live on.
//!
//! Probabilities are held as exact rationals. Constructors that start from
//! floating-point weights convert them exactly (every finite `f64` is a dyadic
//! rational), so all enumeration downstream is exact and rounding only
//! happens inside entropy kernels.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::entropy::EntropyOrder;
use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

pub type Tuple = Vec<i64>;
pub type Prob = BigRational;

/// Tolerance on the total mass of explicitly supplied distributions.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Domain of a single integer variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarDomain {
    /// Consecutive integers `a..=b`.
    Interval(i64, i64),
    /// Explicit set, kept sorted and deduplicated.
    Set(Vec<i64>),
}

impl VarDomain {
    pub fn interval(a: i64, b: i64) -> Result<Self> {
        if a > b {
            return Err(Error::InvalidDomain(format!(
                "interval [{a}, {b}] has a > b"
            )));
        }
        Ok(VarDomain::Interval(a, b))
    }

    pub fn set(mut values: Vec<i64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDomain);
        }
        values.sort_unstable();
        values.dedup();
        Ok(VarDomain::Set(values))
    }

    pub fn values(&self) -> Vec<i64> {
        match self {
            VarDomain::Interval(a, b) => (*a..=*b).collect(),
            VarDomain::Set(v) => v.clone(),
        }
    }

    pub fn len(&self) -> u128 {
        match self {
            VarDomain::Interval(a, b) => (*b as i128 - *a as i128 + 1) as u128,
            VarDomain::Set(v) => v.len() as u128,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: i64) -> bool {
        match self {
            VarDomain::Interval(a, b) => *a <= x && x <= *b,
            VarDomain::Set(v) => v.binary_search(&x).is_ok(),
        }
    }

    /// Smallest and largest element.
    pub fn bounds(&self) -> (i64, i64) {
        match self {
            VarDomain::Interval(a, b) => (*a, *b),
            VarDomain::Set(v) => (v[0], v[v.len() - 1]),
        }
    }
}

/// Cartesian product of per-variable domains. A domain with no variables
/// holds exactly the empty tuple.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DomainSpec {
    vars: Vec<VarDomain>,
}

impl DomainSpec {
    pub fn new(vars: Vec<VarDomain>) -> Self {
        DomainSpec { vars }
    }

    pub fn single(var: VarDomain) -> Self {
        DomainSpec { vars: vec![var] }
    }

    pub fn interval(a: i64, b: i64) -> Result<Self> {
        Ok(Self::single(VarDomain::interval(a, b)?))
    }

    pub fn set(values: Vec<i64>) -> Result<Self> {
        Ok(Self::single(VarDomain::set(values)?))
    }

    pub fn vars(&self) -> &[VarDomain] {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn len(&self) -> u128 {
        self.vars.iter().map(VarDomain::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, t: &[i64]) -> bool {
        t.len() == self.vars.len() && self.vars.iter().zip(t).all(|(d, &x)| d.contains(x))
    }

    /// All tuples in lexicographic order.
    pub fn tuples(&self) -> Vec<Tuple> {
        let mut out: Vec<Tuple> = vec![Vec::with_capacity(self.vars.len())];
        for var in &self.vars {
            let values = var.values();
            let mut next = Vec::with_capacity(out.len() * values.len());
            for prefix in &out {
                for &v in &values {
                    let mut t = prefix.clone();
                    t.push(v);
                    next.push(t);
                }
            }
            out = next;
        }
        out
    }

    pub fn product(&self, other: &DomainSpec) -> DomainSpec {
        let mut vars = self.vars.clone();
        vars.extend(other.vars.iter().cloned());
        DomainSpec { vars }
    }
}

/// A finite probability distribution over integer tuples of a fixed
/// dimension. Atoms are sorted lexicographically and carry strictly positive
/// exact weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    dim: usize,
    support: Vec<Tuple>,
    probs: Vec<Prob>,
    floats: Vec<f64>,
}

impl DiscreteDist {
    /// Builds a distribution from exact weights. Zero weights are dropped; a
    /// total within [`NORMALIZATION_TOLERANCE`] of one is renormalised.
    pub fn from_exact(dim: usize, atoms: Vec<(Tuple, Prob)>) -> Result<Self> {
        let mut map: BTreeMap<Tuple, Prob> = BTreeMap::new();
        for (t, p) in atoms {
            if t.len() != dim {
                return Err(Error::InvalidDistribution(format!(
                    "atom {t:?} has dimension {}, expected {dim}",
                    t.len()
                )));
            }
            if p.is_negative() {
                return Err(Error::InvalidDistribution(format!(
                    "negative weight on {t:?}"
                )));
            }
            if map.insert(t.clone(), p).is_some() {
                return Err(Error::InvalidDistribution(format!("duplicate atom {t:?}")));
            }
        }
        map.retain(|_, p| !p.is_zero());
        if map.is_empty() {
            return Err(Error::InvalidDistribution(
                "no atom with positive weight".into(),
            ));
        }
        let total: Prob = map.values().fold(Prob::zero(), |acc, p| acc + p);
        let gap = (&total - Prob::one())
            .abs()
            .to_f64()
            .unwrap_or(f64::INFINITY);
        if gap > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {} (off by {gap:e})",
                total.to_f64().unwrap_or(f64::NAN)
            )));
        }
        let (support, probs): (Vec<_>, Vec<_>) = if total.is_one() {
            map.into_iter().unzip()
        } else {
            map.into_iter().map(|(t, p)| (t, p / &total)).unzip()
        };
        let floats = probs.iter().map(prob_to_f64).collect();
        Ok(DiscreteDist {
            dim,
            support,
            probs,
            floats,
        })
    }

    /// Builds a distribution from floating-point weights, converted exactly.
    pub fn from_f64(dim: usize, atoms: Vec<(Tuple, f64)>) -> Result<Self> {
        let exact = atoms
            .into_iter()
            .map(|(t, p)| {
                if !p.is_finite() {
                    return Err(Error::InvalidDistribution(format!(
                        "non-finite weight on {t:?}"
                    )));
                }
                Ok((t, BigRational::from_float(p).expect("finite float")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_exact(dim, exact)
    }

    /// Scalar convenience wrapper around [`DiscreteDist::from_f64`].
    pub fn scalar_f64(atoms: &[(i64, f64)]) -> Result<Self> {
        Self::from_f64(1, atoms.iter().map(|&(v, p)| (vec![v], p)).collect())
    }

    /// Scalar distribution from exact `numerator/denominator` weights.
    pub fn scalar_ratio(atoms: &[(i64, i64, i64)]) -> Result<Self> {
        Self::from_exact(
            1,
            atoms
                .iter()
                .map(|&(v, n, d)| (vec![v], ratio(n, d)))
                .collect(),
        )
    }

    pub fn uniform(dom: &DomainSpec) -> Result<Self> {
        let tuples = dom.tuples();
        if tuples.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let w = Prob::new(BigInt::one(), BigInt::from(tuples.len()));
        Self::from_exact(
            dom.dim(),
            tuples.into_iter().map(|t| (t, w.clone())).collect(),
        )
    }

    /// Triangular distribution on `1..=n` with mode `n`: `k` has weight `2k/(n(n+1))`.
    pub fn linear(n: i64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidDistribution(format!(
                "linear distribution needs n >= 1, got {n}"
            )));
        }
        let norm = BigInt::from(n) * BigInt::from(n + 1);
        Self::from_exact(
            1,
            (1..=n)
                .map(|k| (vec![k], Prob::new(BigInt::from(2 * k), norm.clone())))
                .collect(),
        )
    }

    /// Weights proportional to rank (1, 2, ..., m) over the sorted values of a
    /// scalar domain; coincides with [`DiscreteDist::linear`] on `1..=n`.
    pub fn linear_over(values: &[i64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let m = sorted.len() as i64;
        let norm = BigInt::from(m) * BigInt::from(m + 1);
        Self::from_exact(
            1,
            sorted
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    (
                        vec![v],
                        Prob::new(BigInt::from(2 * (i as i64 + 1)), norm.clone()),
                    )
                })
                .collect(),
        )
    }

    pub fn point_mass(v: Tuple) -> Self {
        DiscreteDist {
            dim: v.len(),
            support: vec![v],
            probs: vec![Prob::one()],
            floats: vec![1.0],
        }
    }

    /// Distribution of the empty tuple; neutral element of [`DiscreteDist::product`].
    pub fn unit() -> Self {
        Self::point_mass(Vec::new())
    }

    /// Independent joint distribution; tuples are concatenated.
    pub fn product(&self, other: &DiscreteDist) -> DiscreteDist {
        let mut support = Vec::with_capacity(self.len() * other.len());
        let mut probs = Vec::with_capacity(self.len() * other.len());
        for (u, pu) in self.support.iter().zip(&self.probs) {
            for (v, pv) in other.support.iter().zip(&other.probs) {
                let mut t = u.clone();
                t.extend_from_slice(v);
                support.push(t);
                probs.push(pu * pv);
            }
        }
        // Concatenating lexicographically sorted factors keeps the order sorted.
        let floats = probs.iter().map(prob_to_f64).collect();
        DiscreteDist {
            dim: self.dim + other.dim,
            support,
            probs,
            floats,
        }
    }

    /// Marginal over the listed coordinates (in the given order).
    pub fn marginal(&self, coords: &[usize]) -> Result<DiscreteDist> {
        if let Some(&bad) = coords.iter().find(|&&c| c >= self.dim) {
            return Err(Error::InvalidDistribution(format!(
                "coordinate {bad} out of range"
            )));
        }
        let mut map: BTreeMap<Tuple, Prob> = BTreeMap::new();
        for (t, p) in self.support.iter().zip(&self.probs) {
            let key: Tuple = coords.iter().map(|&c| t[c]).collect();
            *map.entry(key).or_insert_with(Prob::zero) += p;
        }
        Self::from_exact(coords.len(), map.into_iter().collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[Tuple] {
        &self.support
    }

    pub fn probs(&self) -> &[Prob] {
        &self.probs
    }

    pub fn probs_f64(&self) -> &[f64] {
        &self.floats
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Tuple, &Prob)> {
        self.support.iter().zip(&self.probs)
    }

    fn position(&self, v: &[i64]) -> Option<usize> {
        self.support.binary_search_by(|t| lex_cmp(t, v)).ok()
    }

    pub fn mass(&self, v: &[i64]) -> f64 {
        self.position(v).map(|i| self.floats[i]).unwrap_or(0.0)
    }

    pub fn mass_exact(&self, v: &[i64]) -> Prob {
        self.position(v)
            .map(|i| self.probs[i].clone())
            .unwrap_or_else(Prob::zero)
    }

    /// Rényi entropy in bits, computed directly from `Σ p^α`.
    pub fn renyi_entropy(&self, order: EntropyOrder) -> f64 {
        let h = match order {
            EntropyOrder::One => self.floats.iter().map(|&p| -p * p.log2()).sum::<f64>(),
            EntropyOrder::Infinity => -self.floats.iter().cloned().fold(0.0, f64::max).log2(),
            EntropyOrder::Finite(alpha) => {
                let logs: Vec<f64> = self.floats.iter().map(|&p| alpha * p.ln()).collect();
                log_sum_exp(&logs) / ((1.0 - alpha) * std::f64::consts::LN_2)
            }
        };
        h.max(0.0)
    }
}

fn lex_cmp(a: &[i64], b: &[i64]) -> Ordering {
    a.cmp(b)
}

pub fn prob_to_f64(p: &Prob) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}

pub fn ratio(n: i64, d: i64) -> Prob {
    Prob::new(BigInt::from(n), BigInt::from(d))
}

/// Parses an exact rational from `"p/q"`, an integer, or a decimal literal
/// with optional exponent (`"0.49"`, `"2.5e-3"`).
pub fn parse_rational(text: &str) -> Result<Prob> {
    let bad = || Error::InvalidDistribution(format!("cannot parse probability {text:?}"));
    let s = text.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| bad())?;
        let d: BigInt = den.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Prob::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut n: BigInt = digits.parse().map_err(|_| bad())?;
    if neg {
        n = -n;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Prob::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        Prob::new(n, num_traits::pow(ten, (-scale) as usize))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn uniform_weights_are_equal() {
        let d = DiscreteDist::uniform(&DomainSpec::interval(1, 4).unwrap()).unwrap();
        assert_eq!(d.len(), 4);
        assert!(d.probs().iter().all(|p| *p == ratio(1, 4)));
        let s = DiscreteDist::uniform(&DomainSpec::set(vec![7]).unwrap()).unwrap();
        assert_eq!(s, DiscreteDist::point_mass(vec![7]));
        let u30 = DiscreteDist::uniform(&DomainSpec::interval(1, 30).unwrap()).unwrap();
        assert_eq!(u30.len(), 30);
        assert!(u30.probs().iter().all(|p| *p == ratio(1, 30)));
    }

    #[test]
    fn empty_domains_are_rejected() {
        assert_eq!(VarDomain::set(vec![]), Err(Error::EmptyDomain));
        assert!(matches!(
            VarDomain::interval(3, 1),
            Err(Error::InvalidDomain(_))
        ));
    }

    #[test]
    fn linear_distribution_weights() {
        assert_eq!(
            DiscreteDist::linear(1).unwrap(),
            DiscreteDist::point_mass(vec![1])
        );
        let l2 = DiscreteDist::linear(2).unwrap();
        assert_eq!(l2.mass_exact(&[1]), ratio(1, 3));
        assert_eq!(l2.mass_exact(&[2]), ratio(2, 3));
        let l3 = DiscreteDist::linear(3).unwrap();
        assert_eq!(l3.mass_exact(&[1]), ratio(1, 6));
        assert_eq!(l3.mass_exact(&[2]), ratio(1, 3));
        assert_eq!(l3.mass_exact(&[3]), ratio(1, 2));
        assert!(DiscreteDist::linear(0).is_err());
        assert_eq!(DiscreteDist::linear_over(&[1, 2, 3]).unwrap(), l3);
    }

    #[test]
    fn point_masses() {
        let p = DiscreteDist::point_mass(vec![2, 3]);
        assert_eq!(p.dim(), 2);
        assert_eq!(p.mass(&[2, 3]), 1.0);
        assert_eq!(p.support(), &[vec![2, 3]]);
        assert_eq!(DiscreteDist::point_mass(vec![5]).mass(&[5]), 1.0);
    }

    #[test]
    fn products_multiply_weights() {
        let a = DiscreteDist::point_mass(vec![0]);
        let b = DiscreteDist::point_mass(vec![1]);
        assert_eq!(a.product(&b), DiscreteDist::point_mass(vec![0, 1]));

        let bit = DiscreteDist::uniform(&DomainSpec::set(vec![0, 1]).unwrap()).unwrap();
        let pp = bit.product(&bit);
        assert_eq!(pp.len(), 4);
        assert!(pp.probs().iter().all(|p| *p == ratio(1, 4)));

        let s = DiscreteDist::uniform(&DomainSpec::interval(1, 2).unwrap()).unwrap();
        let phi = DiscreteDist::scalar_ratio(&[(0, 1, 2), (1, 1, 2)]).unwrap();
        let joint = s.product(&phi);
        assert_eq!(
            joint.support(),
            &[vec![1, 0], vec![1, 1], vec![2, 0], vec![2, 1]]
        );
        assert!(joint.probs().iter().all(|p| *p == ratio(1, 4)));
        assert_eq!(joint.marginal(&[0]).unwrap(), s);
        assert_eq!(joint.marginal(&[1]).unwrap(), phi);
    }

    #[test]
    fn unit_is_neutral_for_products() {
        let d = DiscreteDist::linear(3).unwrap();
        assert_eq!(DiscreteDist::unit().product(&d), d);
        assert_eq!(d.product(&DiscreteDist::unit()), d);
    }

    #[test]
    fn support_and_mass_accessors() {
        let d = DiscreteDist::scalar_f64(&[(-1, 0.3), (0, 0.49), (1, 0.21)]).unwrap();
        assert_eq!(d.support(), &[vec![-1], vec![0], vec![1]]);
        assert_eq!(d.mass(&[7]), 0.0);
        assert_eq!(DiscreteDist::point_mass(vec![0]).support(), &[vec![0]]);
    }

    #[test]
    fn normalisation_tolerance() {
        assert!(DiscreteDist::scalar_f64(&[(0, 0.5), (1, 0.5 + 1e-13)]).is_ok());
        assert!(DiscreteDist::scalar_f64(&[(0, 0.5), (1, 0.5 + 1e-9)]).is_err());
        assert!(DiscreteDist::scalar_f64(&[(0, 1.5), (1, -0.5)]).is_err());
        assert!(DiscreteDist::scalar_f64(&[(0, 0.5), (0, 0.5)]).is_err());
        let d = DiscreteDist::scalar_f64(&[(0, 1.0), (1, 0.0)]).unwrap();
        assert_eq!(d.support(), &[vec![0]]);
    }

    #[test]
    fn renyi_entropies() {
        let u = DiscreteDist::uniform(&DomainSpec::interval(1, 8).unwrap()).unwrap();
        for order in [
            EntropyOrder::One,
            EntropyOrder::Infinity,
            EntropyOrder::Finite(0.5),
            EntropyOrder::Finite(3.0),
        ] {
            assert!(approx(u.renyi_entropy(order), 3.0, 1e-12));
        }
        let phi1 =
            DiscreteDist::scalar_ratio(&[(-2, 1, 4), (0, 1, 4), (2, 1, 4), (4, 1, 4)]).unwrap();
        assert_eq!(phi1.renyi_entropy(EntropyOrder::Infinity), 2.0);
        let p = DiscreteDist::point_mass(vec![3]);
        assert_eq!(p.renyi_entropy(EntropyOrder::Finite(2.0)), 0.0);
        assert_eq!(p.renyi_entropy(EntropyOrder::One), 0.0);
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("0.49").unwrap(), ratio(49, 100));
        assert_eq!(parse_rational("1/3").unwrap(), ratio(1, 3));
        assert_eq!(parse_rational("2.5e-1").unwrap(), ratio(1, 4));
        assert_eq!(parse_rational("3").unwrap(), ratio(3, 1));
        assert_eq!(parse_rational("-1.5").unwrap(), ratio(-3, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn domain_tuples_are_lexicographic() {
        let d = DomainSpec::new(vec![
            VarDomain::interval(0, 1).unwrap(),
            VarDomain::set(vec![5, 3]).unwrap(),
        ]);
        assert_eq!(
            d.tuples(),
            vec![vec![0, 3], vec![0, 5], vec![1, 3], vec![1, 5]]
        );
        assert_eq!(d.len(), 4);
        assert!(d.contains(&[1, 5]));
        assert!(!d.contains(&[1, 4]));
        assert_eq!(DomainSpec::default().tuples(), vec![Vec::<i64>::new()]);
    }
}
