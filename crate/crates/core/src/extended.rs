//! Extended-precision α-norm sums (192-bit significands, ~57 decimal digits)
//! used as a cross-check for the log-domain double kernel.

use astro_float::{BigFloat, Consts, RoundingMode};

const PRECISION_BITS: usize = 192;
const RM: RoundingMode = RoundingMode::ToEven;

pub struct ExtendedContext {
    consts: Consts,
}

impl ExtendedContext {
    pub fn new() -> Self {
        ExtendedContext {
            consts: Consts::new().expect("astro-float constants cache"),
        }
    }

    fn big(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, PRECISION_BITS)
    }

    /// `‖v‖_α` of a non-negative vector.
    pub fn alpha_norm(&mut self, v: &[f64], alpha: f64) -> BigFloat {
        let a = self.big(alpha);
        let inv = self.big(1.0).div(&a, PRECISION_BITS, RM);
        let mut sum = self.big(0.0);
        for &x in v.iter().filter(|&&x| x > 0.0) {
            let term = self.big(x).pow(&a, PRECISION_BITS, RM, &mut self.consts);
            sum = sum.add(&term, PRECISION_BITS, RM);
        }
        if sum.is_zero() {
            return sum;
        }
        sum.pow(&inv, PRECISION_BITS, RM, &mut self.consts)
    }

    /// `log2 Σ_k ‖v_k‖_α`, returned as a double.
    pub fn log2_sum_of_norms<'a, I>(&mut self, vectors: I, alpha: f64) -> f64
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut total = self.big(0.0);
        for v in vectors {
            let n = self.alpha_norm(v, alpha);
            total = total.add(&n, PRECISION_BITS, RM);
        }
        if total.is_zero() {
            return f64::NEG_INFINITY;
        }
        let l = total.log2(PRECISION_BITS, RM, &mut self.consts);
        to_f64(&l)
    }
}

impl Default for ExtendedContext {
    fn default() -> Self {
        Self::new()
    }
}

fn to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    x.to_string().parse::<f64>().unwrap_or(f64::NAN)
}
