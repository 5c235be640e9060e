//! Small dense Levenberg-Marquardt solver with a robust loss, numeric
//! central-difference Jacobians and per-residual weights. The problems here
//! are tiny (5-6 parameters, a few hundred residuals), so a hand-rolled
//! dense solver with IRLS-style robust weighting is the right size.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

/// Robust loss ρ applied to each raw residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    Squared,
    /// Huber loss: quadratic within `scale`, linear beyond.
    Huber(f64),
}

impl Loss {
    pub fn rho(&self, r: f64) -> f64 {
        match *self {
            Loss::Squared => r * r,
            Loss::Huber(delta) => {
                let a = r.abs();
                if a <= delta {
                    r * r
                } else {
                    2.0 * delta * a - delta * delta
                }
            }
        }
    }

    /// IRLS weight ρ'(r) / (2r), continuous at r = 0.
    pub fn irls_weight(&self, r: f64) -> f64 {
        match *self {
            Loss::Squared => 1.0,
            Loss::Huber(delta) => {
                let a = r.abs();
                if a <= delta {
                    1.0
                } else {
                    delta / a
                }
            }
        }
    }

    /// dρ/dr.
    pub fn drho(&self, r: f64) -> f64 {
        match *self {
            Loss::Squared => 2.0 * r,
            Loss::Huber(delta) => {
                let a = r.abs();
                if a <= delta {
                    2.0 * r
                } else {
                    2.0 * delta * r.signum()
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop iterating once the cost gradient norm falls below this.
    pub stop_gradient: f64,
    /// The final iterate counts as converged when its gradient norm is
    /// below this (looser than `stop_gradient`: noisy problems stall before
    /// reaching the stopping value).
    pub converged_gradient: f64,
    /// Stop when an accepted step decreases the cost by less than this
    /// relative amount.
    pub cost_tolerance: f64,
    pub initial_lambda: f64,
    pub max_lambda: f64,
    /// Relative central-difference step for the numeric Jacobian.
    pub jacobian_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            stop_gradient: 1e-10,
            converged_gradient: 1e-6,
            cost_tolerance: 1e-14,
            initial_lambda: 1e-4,
            max_lambda: 1e12,
            jacobian_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Cost after every accepted step, starting with the initial cost.
    pub cost_trace: Vec<f64>,
}

/// Minimizes `sum_i w_i * rho(r_i(x))`. `residual_fn` writes the raw
/// residual vector for the given parameters; `weights` has one entry per
/// residual and is fixed.
pub fn minimize<F>(
    x0: &[f64],
    weights: &[f64],
    loss: Loss,
    opts: &LmOptions,
    mut residual_fn: F,
) -> (Vec<f64>, LmReport)
where
    F: FnMut(&[f64], &mut Vec<f64>),
{
    let n_params = x0.len();
    let mut x = x0.to_vec();
    let mut r: Vec<f64> = Vec::new();
    residual_fn(&x, &mut r);
    debug_assert_eq!(r.len(), weights.len());

    let cost_of = |r: &[f64]| -> f64 {
        r.iter()
            .zip(weights)
            .map(|(&ri, &wi)| wi * loss.rho(ri))
            .sum()
    };

    let mut cost = cost_of(&r);
    let mut trace = alloc::vec![cost];
    let mut lambda = opts.initial_lambda;
    let mut gradient_norm = f64::INFINITY;
    let mut iterations = 0;

    let mut r_plus: Vec<f64> = Vec::new();
    let mut r_minus: Vec<f64> = Vec::new();
    let mut r_cand: Vec<f64> = Vec::new();

    'outer: while iterations < opts.max_iterations {
        iterations += 1;

        // Numeric Jacobian, central differences.
        let m = r.len();
        let mut jac = DMatrix::<f64>::zeros(m, n_params);
        for j in 0..n_params {
            let h = opts.jacobian_step * x[j].abs().max(1.0);
            let saved = x[j];
            x[j] = saved + h;
            residual_fn(&x, &mut r_plus);
            x[j] = saved - h;
            residual_fn(&x, &mut r_minus);
            x[j] = saved;
            for i in 0..m {
                jac[(i, j)] = (r_plus[i] - r_minus[i]) / (2.0 * h);
            }
        }

        // Gradient of the robust cost and the IRLS normal matrix.
        let mut grad = DVector::<f64>::zeros(n_params);
        let mut jtwj = DMatrix::<f64>::zeros(n_params, n_params);
        let mut jtwr = DVector::<f64>::zeros(n_params);
        for i in 0..m {
            let wi = weights[i];
            let irls = wi * loss.irls_weight(r[i]);
            let drho = wi * loss.drho(r[i]);
            for a in 0..n_params {
                grad[a] += jac[(i, a)] * drho;
                jtwr[a] += jac[(i, a)] * irls * r[i];
                for b in a..n_params {
                    jtwj[(a, b)] += jac[(i, a)] * irls * jac[(i, b)];
                }
            }
        }
        for a in 0..n_params {
            for b in 0..a {
                jtwj[(a, b)] = jtwj[(b, a)];
            }
        }
        gradient_norm = grad.norm();
        if gradient_norm < opts.stop_gradient {
            break;
        }

        // Damped steps, retrying with larger lambda until one decreases the
        // robust cost.
        loop {
            let mut a = jtwj.clone();
            for d in 0..n_params {
                a[(d, d)] += lambda * jtwj[(d, d)].max(1e-12);
            }
            let step = match a.lu().solve(&(-&jtwr)) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    if lambda > opts.max_lambda {
                        break 'outer;
                    }
                    continue;
                }
            };
            let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, si)| xi + si).collect();
            residual_fn(&cand, &mut r_cand);
            let cand_cost = cost_of(&r_cand);
            if cand_cost.is_finite() && cand_cost < cost {
                let decrease = cost - cand_cost;
                x = cand;
                core::mem::swap(&mut r, &mut r_cand);
                let relative = decrease / cost.max(1e-300);
                cost = cand_cost;
                trace.push(cost);
                lambda = (lambda / 3.0).max(1e-12);
                if relative < opts.cost_tolerance {
                    break 'outer;
                }
                break;
            }
            lambda *= 4.0;
            if lambda > opts.max_lambda {
                break 'outer;
            }
        }
    }

    // Exact gradient norm at the exit point, used to classify convergence.
    if !r.is_empty() {
        let m = r.len();
        let mut grad = alloc::vec![0.0; n_params];
        for j in 0..n_params {
            let h = opts.jacobian_step * x[j].abs().max(1.0);
            let saved = x[j];
            x[j] = saved + h;
            residual_fn(&x, &mut r_plus);
            x[j] = saved - h;
            residual_fn(&x, &mut r_minus);
            x[j] = saved;
            for i in 0..m {
                grad[j] += (r_plus[i] - r_minus[i]) / (2.0 * h) * weights[i] * loss.drho(r[i]);
            }
        }
        gradient_norm = libm::sqrt(grad.iter().map(|g| g * g).sum::<f64>());
    }

    (
        x,
        LmReport {
            final_cost: cost,
            iterations,
            converged: gradient_norm < opts.converged_gradient,
            gradient_norm,
            cost_trace: trace,
        },
    )
}
