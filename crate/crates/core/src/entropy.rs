//! Generalised (α, g)-vulnerability and entropy.
//!
//! For a weight vector `p` over secrets and a gain function `g: W × X → [0,1]`
//! the (α, g)-vulnerability is the α-norm of the expected-gain vector
//! `⟨Σ_x p(x)·g(w, x)⟩_w`, and the entropy is `α/(1−α) · log2 V`. The order
//! `∞` replaces the norm by a maximum (g-entropy) and the order `1` uses
//! `Σ_w μ(Σ_x p(x)·g(w,x))` with `μ(x) = −x·log2 x`. With `g = id` these
//! reduce to the Rényi family (Shannon, collision, min-entropy, ...).

use std::fmt;
use std::str::FromStr;

use crate::dist::Tuple;
use crate::error::{Error, Result};
use crate::extended::ExtendedContext;
use crate::numeric::{ln_alpha_norm, max_norm, neumaier_sum};

/// Tolerance used to decide whether a gain function is unitary.
pub const UNITARY_TOLERANCE: f64 = 1e-12;
/// Tolerance on the total mass of probability vectors passed to [`entropy`].
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Rényi-style order α of an entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropyOrder {
    /// α = 1 (Shannon-type).
    One,
    /// Finite α > 0, α ≠ 1.
    Finite(f64),
    /// α = ∞ (min-entropy / g-entropy).
    Infinity,
}

impl EntropyOrder {
    /// Classifies a numeric order; `1.0` maps to [`EntropyOrder::One`] and
    /// `+∞` to [`EntropyOrder::Infinity`].
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::InvalidOrder(format!(
                "order must be positive, got {alpha}"
            )));
        }
        Ok(if alpha == f64::INFINITY {
            EntropyOrder::Infinity
        } else if alpha == 1.0 {
            EntropyOrder::One
        } else {
            EntropyOrder::Finite(alpha)
        })
    }

    pub fn value(&self) -> f64 {
        match self {
            EntropyOrder::One => 1.0,
            EntropyOrder::Finite(a) => *a,
            EntropyOrder::Infinity => f64::INFINITY,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            EntropyOrder::Finite(a) if !(a.is_finite() && *a > 0.0 && *a != 1.0) => {
                Err(Error::InvalidOrder(format!(
                    "finite order must be positive and differ from 1, got {a}"
                )))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for EntropyOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntropyOrder::One => f.write_str("1"),
            EntropyOrder::Finite(a) => write!(f, "{a}"),
            EntropyOrder::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for EntropyOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if matches!(t.as_str(), "inf" | "infinity" | "+inf" | "∞") {
            return Ok(EntropyOrder::Infinity);
        }
        let alpha: f64 = t
            .parse()
            .map_err(|_| Error::InvalidOrder(format!("cannot parse order {s:?}")))?;
        EntropyOrder::new(alpha)
    }
}

/// Numeric mode of the α-norm kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    /// Log-domain double precision with compensated summation.
    #[default]
    Double,
    /// 192-bit software floating point.
    Extended,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::Double => "double",
            Precision::Extended => "extended",
        })
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "double" | "double-logspace" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            other => Err(Error::Config {
                path: "precision".into(),
                msg: format!("unknown mode {other:?}"),
            }),
        }
    }
}

/// Gain function over guesses `W` and secrets `D_T`, stored as a
/// `|W| × |D_T|` matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSpec {
    guesses: Vec<String>,
    matrix: Vec<Vec<f64>>,
    beta: f64,
    unitary: bool,
}

impl GainSpec {
    pub fn new(guesses: Vec<String>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        if guesses.is_empty() || guesses.len() != matrix.len() {
            return Err(Error::InvalidGain(format!(
                "{} guess labels for {} matrix rows",
                guesses.len(),
                matrix.len()
            )));
        }
        let cols = matrix[0].len();
        if cols == 0 || matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidGain(
                "matrix rows must be non-empty and equally long".into(),
            ));
        }
        for (w, row) in matrix.iter().enumerate() {
            for (x, &g) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&g) {
                    return Err(Error::InvalidGain(format!(
                        "g({w}, {x}) = {g} is outside [0, 1]"
                    )));
                }
            }
        }
        let sums: Vec<f64> = (0..cols)
            .map(|x| neumaier_sum(matrix.iter().map(|r| r[x])))
            .collect();
        let beta = sums.iter().cloned().fold(f64::INFINITY, f64::min);
        if beta <= 0.0 {
            return Err(Error::InvalidGain(
                "gain function is not positive (a secret has zero total gain)".into(),
            ));
        }
        let unitary = sums.iter().all(|s| (s - 1.0).abs() <= UNITARY_TOLERANCE);
        Ok(GainSpec {
            guesses,
            matrix,
            beta,
            unitary,
        })
    }

    /// `id` gain: guesses are the secrets themselves.
    pub fn identity(secrets: &[Tuple]) -> Result<Self> {
        let n = secrets.len();
        let matrix = (0..n)
            .map(|w| (0..n).map(|x| if w == x { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(secrets.iter().map(|t| tuple_label(t)).collect(), matrix)
    }

    /// Least-significant-bit gain on scalar secrets: `g(w, x) = 1` iff `w ≡ x (mod 2)`.
    pub fn parity(secrets: &[Tuple]) -> Result<Self> {
        if secrets.iter().any(|t| t.len() != 1) {
            return Err(Error::InvalidGain(
                "parity gain needs a scalar target domain".into(),
            ));
        }
        let matrix = (0..2i64)
            .map(|w| {
                secrets
                    .iter()
                    .map(|t| if t[0].rem_euclid(2) == w { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        Self::new(vec!["0".into(), "1".into()], matrix)
    }

    pub fn guesses(&self) -> &[String] {
        &self.guesses
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn gain(&self, w: usize, x: usize) -> f64 {
        self.matrix[w][x]
    }

    pub fn num_guesses(&self) -> usize {
        self.guesses.len()
    }

    pub fn num_secrets(&self) -> usize {
        self.matrix[0].len()
    }

    /// Smallest column sum; the function is β-positive for this β.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    /// Expected-gain vector `⟨Σ_x weights[x]·g(w, x)⟩_w`.
    pub fn project(&self, weights: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|row| neumaier_sum(row.iter().zip(weights).map(|(g, p)| g * p)))
            .collect()
    }
}

pub fn gain_id(secrets: &[Tuple]) -> Result<GainSpec> {
    GainSpec::identity(secrets)
}

pub fn gain_parity(secrets: &[Tuple]) -> Result<GainSpec> {
    GainSpec::parity(secrets)
}

fn tuple_label(t: &[i64]) -> String {
    match t {
        [x] => x.to_string(),
        _ => format!(
            "({})",
            t.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
    }
}

/// `μ(x) = −x·log2 x` with `μ(0) = 0`.
pub fn mu(x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::InvalidWeights(format!("mu is undefined at {x}")));
    }
    Ok(mu_unchecked(x))
}

pub(crate) fn mu_unchecked(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

fn check_weights(weights: &[f64], g: &GainSpec) -> Result<()> {
    if weights.len() != g.num_secrets() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for a gain function over {} secrets",
            weights.len(),
            g.num_secrets()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidWeights(format!(
            "weight {w} is negative or not finite"
        )));
    }
    Ok(())
}

/// (α, g)-vulnerability of a non-negative (not necessarily normalised) weight
/// vector. The α-norm is homogeneous, so scaling the weights scales the
/// result. Order 1 has no vulnerability form and is rejected.
pub fn vulnerability(weights: &[f64], g: &GainSpec, order: EntropyOrder) -> Result<f64> {
    vulnerability_with(weights, g, order, Precision::Double)
}

pub fn vulnerability_with(
    weights: &[f64],
    g: &GainSpec,
    order: EntropyOrder,
    precision: Precision,
) -> Result<f64> {
    order.validate()?;
    check_weights(weights, g)?;
    let u = g.project(weights);
    match order {
        EntropyOrder::One => Err(Error::InvalidOrder(
            "order 1 has no vulnerability form; use the entropy directly".into(),
        )),
        EntropyOrder::Infinity => Ok(max_norm(&u)),
        EntropyOrder::Finite(alpha) => Ok(match precision {
            Precision::Double => ln_alpha_norm(&u, alpha).exp(),
            Precision::Extended => ExtendedContext::new()
                .log2_sum_of_norms([u.as_slice()], alpha)
                .exp2(),
        }),
    }
}

/// (α, g)-entropy in bits of a probability vector over the secrets.
pub fn entropy(weights: &[f64], g: &GainSpec, order: EntropyOrder) -> Result<f64> {
    entropy_with(weights, g, order, Precision::Double)
}

pub fn entropy_with(
    weights: &[f64],
    g: &GainSpec,
    order: EntropyOrder,
    precision: Precision,
) -> Result<f64> {
    order.validate()?;
    check_weights(weights, g)?;
    let total = neumaier_sum(weights.iter().cloned());
    if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(Error::InvalidWeights(format!(
            "weights sum to {total}, not 1"
        )));
    }
    let h = match order {
        EntropyOrder::One => neumaier_sum(g.project(weights).into_iter().map(mu_unchecked)),
        EntropyOrder::Infinity => -vulnerability(weights, g, order)?.log2(),
        EntropyOrder::Finite(alpha) => {
            let u = g.project(weights);
            let log2_v = match precision {
                Precision::Double => ln_alpha_norm(&u, alpha) / std::f64::consts::LN_2,
                Precision::Extended => {
                    ExtendedContext::new().log2_sum_of_norms([u.as_slice()], alpha)
                }
            };
            alpha / (1.0 - alpha) * log2_v
        }
    };
    Ok(h)
}
