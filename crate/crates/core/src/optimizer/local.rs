//! Projected gradient ascent on the probability simplex.

/// Euclidean projection onto `{x : x ≥ 0, Σ x = 1}` (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Clips tiny negatives and renormalises.
pub fn clean_simplex(x: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    clipped.iter().map(|v| v / total).collect()
}

const ROUNDING_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOptions {
    pub max_iterations: usize,
    /// Stop once `‖x − P(x + ∇f(x))‖ ≤ tolerance`.
    pub tolerance: f64,
    pub armijo: f64,
    pub min_step: f64,
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions {
            max_iterations: 5000,
            tolerance: 1e-8,
            armijo: 1e-4,
            min_step: 1e-20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Objective after each accepted iterate, starting with the start point.
    pub trace: Vec<f64>,
}

/// Projected-gradient norm `‖x − P(x + g)‖`.
pub fn projected_gradient_norm(x: &[f64], g: &[f64]) -> f64 {
    let g = centered(g);
    let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + b).collect();
    let p = project_simplex(&y);
    x.iter()
        .zip(&p)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Projection onto the simplex ignores a common shift of all components;
/// removing it keeps long steps from drowning the useful part in rounding.
fn centered(g: &[f64]) -> Vec<f64> {
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    g.iter().map(|v| v - mean).collect()
}

/// Maximises `f` over the simplex from `start` with Barzilai–Borwein step
/// lengths and Armijo backtracking along the projected direction.
pub fn maximize<F>(f: F, start: &[f64], opts: &LocalOptions) -> LocalOutcome
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = clean_simplex(start);
    let (mut fx, mut g) = f(&x);
    let mut trace = vec![fx];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut pg = projected_gradient_norm(&x, &g);
    while pg > opts.tolerance && iterations < opts.max_iterations {
        iterations += 1;
        let gc = centered(&g);
        let y: Vec<f64> = x.iter().zip(&gc).map(|(a, b)| a + step * b).collect();
        let d: Vec<f64> = project_simplex(&y)
            .iter()
            .zip(&x)
            .map(|(p, a)| p - a)
            .collect();
        let slope: f64 = d.iter().zip(&gc).map(|(a, b)| a * b).sum();
        if slope <= 0.0 {
            break;
        }
        let mut lambda = 1.0;
        let accepted = loop {
            let cand: Vec<f64> = x
                .iter()
                .zip(&d)
                .map(|(a, b)| (a + lambda * b).max(0.0))
                .collect();
            let (fc, gc) = f(&cand);
            let gain = opts.armijo * lambda * slope;
            // Below the rounding floor of f, a non-decreasing step is enough.
            if fc >= fx + gain || (gain <= ROUNDING_FLOOR * fx.abs().max(1.0) && fc >= fx) {
                break Some((cand, fc, gc));
            }
            lambda *= 0.5;
            if lambda < opts.min_step {
                break None;
            }
        };
        let Some((xn, fn_, gn)) = accepted else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yg: f64 = gn
            .iter()
            .zip(&g)
            .zip(&s)
            .map(|((a, b), c)| (a - b) * c)
            .sum();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        step = if yg < 0.0 {
            (ss / -yg).clamp(1e-10, 1e10)
        } else {
            1e10_f64.min(step * 4.0)
        };
        x = xn;
        fx = fn_;
        g = gn;
        trace.push(fx);
        pg = projected_gradient_norm(&x, &g);
    }
    LocalOutcome {
        x,
        value: fx,
        iterations,
        gradient_norm: pg,
        converged: pg <= opts.tolerance,
        trace,
    }
}
