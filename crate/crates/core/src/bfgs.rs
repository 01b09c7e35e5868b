//! Dense BFGS with a strong-Wolfe line search.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfgsOptions {
    /// Stop when the Euclidean gradient norm falls to this value.
    pub gradient_tolerance: f64,
    /// Stop when an accepted step changes the objective by at most this.
    pub value_tolerance: f64,
    pub max_iterations: usize,
    /// A failed line search still counts as converged below this gradient
    /// norm (the objective is flat to working precision there).
    pub stall_gradient_tolerance: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            gradient_tolerance: 1e-8,
            value_tolerance: 1e-10,
            max_iterations: 2000,
            stall_gradient_tolerance: 1e-6,
            c1: 1e-4,
            c2: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    ValueChange,
    LineSearchStall,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Probe {
    alpha: f64,
    value: f64,
    slope: f64,
    x: Vec<f64>,
    gradient: Vec<f64>,
}

struct LineSearch<'a, F> {
    f: &'a mut F,
    x: &'a [f64],
    direction: &'a [f64],
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> LineSearch<'_, F> {
    fn probe(&mut self, alpha: f64) -> Probe {
        let x: Vec<f64> = self
            .x
            .iter()
            .zip(self.direction)
            .map(|(xi, pi)| xi + alpha * pi)
            .collect();
        let (value, gradient) = (self.f)(&x);
        self.evaluations += 1;
        Probe {
            alpha,
            value,
            slope: dot(&gradient, self.direction),
            x,
            gradient,
        }
    }
}

/// Minimizer of the cubic through two points with slopes, or `None` when it
/// is not well defined.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let denom = db - da + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let t = b - (b - a) * (db + d2 - d1) / denom;
    t.is_finite().then_some(t)
}

const LINE_SEARCH_MAX_PROBES: usize = 40;

/// Strong-Wolfe search along `direction`. Returns the accepted probe, or
/// the best sufficiently decreasing probe when the bracket collapses.
fn wolfe_search<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    search: &mut LineSearch<'_, F>,
    value0: f64,
    slope0: f64,
    alpha_init: f64,
    c1: f64,
    c2: f64,
) -> Option<Probe> {
    let armijo = |p: &Probe| p.value <= value0 + c1 * p.alpha * slope0;
    let curvature = |p: &Probe| p.slope.abs() <= -c2 * slope0;

    let mut prev = Probe {
        alpha: 0.0,
        value: value0,
        slope: slope0,
        x: search.x.to_vec(),
        gradient: Vec::new(),
    };
    let mut alpha = alpha_init;
    let mut best: Option<Probe> = None;

    let remember = |best: &mut Option<Probe>, p: &Probe| {
        if p.value < value0 && best.as_ref().is_none_or(|b| p.value < b.value) {
            *best = Some(Probe {
                alpha: p.alpha,
                value: p.value,
                slope: p.slope,
                x: p.x.clone(),
                gradient: p.gradient.clone(),
            });
        }
    };

    let (mut lo, mut hi);
    let mut first = true;
    loop {
        if search.evaluations >= LINE_SEARCH_MAX_PROBES {
            return best;
        }
        let cur = search.probe(alpha);
        remember(&mut best, &cur);
        if !armijo(&cur) || (!first && cur.value >= prev.value) {
            lo = prev;
            hi = cur;
            break;
        }
        if curvature(&cur) {
            return Some(cur);
        }
        if cur.slope >= 0.0 {
            lo = cur;
            hi = prev;
            break;
        }
        first = false;
        alpha = cur.alpha * 2.0;
        prev = cur;
    }

    // Zoom: `lo` satisfies Armijo with the lowest value seen in the bracket.
    loop {
        if search.evaluations >= LINE_SEARCH_MAX_PROBES
            || (hi.alpha - lo.alpha).abs() <= 1e-14 * lo.alpha.abs().max(1e-8)
        {
            return best;
        }
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let margin = 0.1 * (b - a);
        let trial = cubic_min(lo.alpha, lo.value, lo.slope, hi.alpha, hi.value, hi.slope)
            .filter(|t| *t > a + margin && *t < b - margin)
            .unwrap_or(0.5 * (a + b));
        let cur = search.probe(trial);
        remember(&mut best, &cur);
        if !armijo(&cur) || cur.value >= lo.value {
            hi = cur;
        } else {
            if curvature(&cur) {
                return Some(cur);
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
}

/// Minimizes `f`, which returns the value and gradient at a point.
pub fn minimize<F>(mut f: F, x0: &[f64], options: &BfgsOptions) -> BfgsOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut value, mut gradient) = f(&x);
    let mut evaluations = 1;

    let finish = |x: Vec<f64>, value, gradient: Vec<f64>, iterations, evaluations, termination| {
        let converged = match termination {
            Termination::GradientTolerance | Termination::ValueChange => true,
            Termination::LineSearchStall => norm(&gradient) <= options.stall_gradient_tolerance,
            Termination::MaxIterations => false,
        };
        BfgsOutcome {
            x,
            value,
            gradient,
            iterations,
            evaluations,
            termination,
            converged,
        }
    };

    if n == 0 || norm(&gradient) <= options.gradient_tolerance {
        return finish(x, value, gradient, 0, evaluations, Termination::GradientTolerance);
    }

    // Row-major inverse Hessian estimate.
    let identity = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
    };
    let mut h_inv = vec![0.0; n * n];
    identity(&mut h_inv);
    let mut previous_value: Option<f64> = None;
    let mut fresh_hessian = true;

    for iteration in 1..=options.max_iterations {
        let mut direction: Vec<f64> = (0..n)
            .map(|i| -dot(&h_inv[i * n..(i + 1) * n], &gradient))
            .collect();
        let mut slope = dot(&direction, &gradient);
        if slope >= 0.0 {
            identity(&mut h_inv);
            fresh_hessian = true;
            direction = gradient.iter().map(|g| -g).collect();
            slope = dot(&direction, &gradient);
        }

        let alpha_init = match previous_value {
            Some(prev) if fresh_hessian => {
                let guess = 1.01 * 2.0 * (value - prev) / slope;
                if guess > 0.0 && guess.is_finite() { guess.min(1.0) } else { 1.0 }
            }
            None => (1.0 / norm(&gradient)).min(1.0),
            Some(_) => 1.0,
        };

        let mut search = LineSearch {
            f: &mut f,
            x: &x,
            direction: &direction,
            evaluations: 0,
        };
        let accepted = wolfe_search(&mut search, value, slope, alpha_init, options.c1, options.c2);
        evaluations += search.evaluations;

        let Some(step) = accepted else {
            if !fresh_hessian {
                // Retry once along steepest descent.
                identity(&mut h_inv);
                fresh_hessian = true;
                continue;
            }
            return finish(x, value, gradient, iteration, evaluations, Termination::LineSearchStall);
        };

        let s: Vec<f64> = step.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.gradient.iter().zip(&gradient).map(|(a, b)| a - b).collect();
        let change = (value - step.value).abs();
        previous_value = Some(value);
        x = step.x;
        value = step.value;
        gradient = step.gradient;

        if norm(&gradient) <= options.gradient_tolerance {
            return finish(x, value, gradient, iteration, evaluations, Termination::GradientTolerance);
        }
        if change <= options.value_tolerance {
            return finish(x, value, gradient, iteration, evaluations, Termination::ValueChange);
        }

        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if fresh_hessian {
                let scale = sy / dot(&y, &y);
                h_inv.iter_mut().for_each(|v| *v *= scale);
            }
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h_inv[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h_inv[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            fresh_hessian = false;
        }
    }
    finish(x, value, gradient, options.max_iterations, evaluations, Termination::MaxIterations)
}
