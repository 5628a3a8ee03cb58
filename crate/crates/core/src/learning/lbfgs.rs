//! Limited-memory BFGS minimizer with a strong-Wolfe line search.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    pub history: usize,
    pub max_iters: usize,
    /// Stop once the gradient norm falls to this value.
    pub grad_tol: f64,
    /// Stop once an accepted step improves the objective by less than this
    /// fraction of its magnitude.
    pub rel_tol: f64,
    /// Function evaluations allowed per line search.
    pub max_evals: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            history: 10,
            max_iters: 100,
            grad_tol: 1e-4,
            rel_tol: 1e-10,
            max_evals: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradientSmall,
    NoProgress,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub reason: StopReason,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

struct Point {
    step: f64,
    value: f64,
    slope: f64,
    x: Vec<f64>,
    grad: Vec<f64>,
}

/// Minimizes `f`, which returns the value and gradient at a point.
/// `on_iter(iteration, value, grad_norm)` is called at the start point
/// (iteration 0) and after every accepted step.
pub fn minimize(
    mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x0: Vec<f64>,
    cfg: &LbfgsConfig,
    mut on_iter: impl FnMut(usize, f64, f64),
) -> LbfgsResult {
    let (mut fx, mut g) = f(&x0);
    let mut x = x0;
    let mut evaluations = 1;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    on_iter(0, fx, norm(&g));
    let mut iter = 0;
    let reason = loop {
        if norm(&g) <= cfg.grad_tol {
            break StopReason::GradientSmall;
        }
        if iter >= cfg.max_iters {
            break StopReason::MaxIterations;
        }
        let mut dir = direction(&g, &history);
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&dir, &g);
        }
        let first = if history.is_empty() {
            (1.0 / norm(&g)).min(1.0)
        } else {
            1.0
        };
        let mut found = line_search(&mut f, &x, fx, slope, &dir, first, cfg.max_evals, &mut evaluations);
        if found.is_none() && !history.is_empty() {
            log::debug!("line search failed along the quasi-Newton direction; retrying steepest descent");
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&dir, &g);
            found = line_search(&mut f, &x, fx, slope, &dir, (1.0 / norm(&g)).min(1.0), cfg.max_evals, &mut evaluations);
        }
        let Some(p) = found else {
            log::warn!("line search failed at iteration {}; keeping the best iterate", iter + 1);
            break StopReason::LineSearchFailed;
        };
        iter += 1;
        let s: Vec<f64> = p.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = p.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if history.len() == cfg.history {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let improvement = fx - p.value;
        x = p.x;
        fx = p.value;
        g = p.grad;
        on_iter(iter, fx, norm(&g));
        if improvement <= cfg.rel_tol * fx.abs().max(1.0) {
            break StopReason::NoProgress;
        }
    };
    LbfgsResult {
        grad_norm: norm(&g),
        x,
        value: fx,
        iterations: iter,
        evaluations,
        reason,
    }
}

/// Two-loop recursion: `-H g` for the implicit inverse Hessian `H`.
fn direction(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alpha = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alpha.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alpha.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

#[allow(clippy::too_many_arguments)]
fn line_search(
    f: &mut impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x: &[f64],
    fx: f64,
    slope0: f64,
    dir: &[f64],
    first: f64,
    max_evals: usize,
    evaluations: &mut usize,
) -> Option<Point> {
    let mut eval = |step: f64, evaluations: &mut usize| -> Point {
        *evaluations += 1;
        let xs: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + step * d).collect();
        let (value, grad) = f(&xs);
        let slope = dot(&grad, dir);
        Point {
            step,
            value,
            slope,
            x: xs,
            grad,
        }
    };
    let origin = Point {
        step: 0.0,
        value: fx,
        slope: slope0,
        x: Vec::new(),
        grad: Vec::new(),
    };
    let armijo = |p: &Point| p.value <= fx + C1 * p.step * slope0;
    let curvature = |p: &Point| p.slope.abs() <= -C2 * slope0;

    let mut prev = origin;
    let mut step = first;
    let mut best: Option<Point> = None;
    let keep_best = |p: &Point, best: &mut Option<Point>| {
        if p.value.is_finite() && armijo(p) && best.as_ref().is_none_or(|b| p.value < b.value) {
            *best = Some(Point {
                step: p.step,
                value: p.value,
                slope: p.slope,
                x: p.x.clone(),
                grad: p.grad.clone(),
            });
        }
    };
    let mut used = 0;
    // Bracketing phase.
    let (mut lo, mut hi) = loop {
        if used >= max_evals {
            return best;
        }
        used += 1;
        let p = eval(step, evaluations);
        keep_best(&p, &mut best);
        if !p.value.is_finite() || !armijo(&p) || (used > 1 && p.value >= prev.value) {
            break (prev, p);
        }
        if curvature(&p) {
            return Some(p);
        }
        if p.slope >= 0.0 {
            break (p, prev);
        }
        prev = p;
        step *= 2.0;
    };
    // Zoom phase between `lo` (sufficient decrease, lowest value) and `hi`.
    while used < max_evals {
        let a = if hi.value.is_finite() {
            cubic_min(&lo, &hi)
        } else {
            0.5 * (lo.step + hi.step)
        };
        used += 1;
        let p = eval(a, evaluations);
        keep_best(&p, &mut best);
        if !p.value.is_finite() || !armijo(&p) || p.value >= lo.value {
            hi = p;
        } else {
            if curvature(&p) {
                return Some(p);
            }
            if p.slope * (hi.step - lo.step) >= 0.0 {
                hi = lo;
            }
            lo = p;
        }
        if (hi.step - lo.step).abs() < 1e-16 * lo.step.abs().max(1.0) {
            break;
        }
    }
    best
}

/// Minimizer of the cubic through two points with slopes, kept inside the
/// middle of the interval.
fn cubic_min(a: &Point, b: &Point) -> f64 {
    let (lo, hi) = if a.step < b.step { (a.step, b.step) } else { (b.step, a.step) };
    let width = hi - lo;
    let d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.step - b.step);
    let disc = d1 * d1 - a.slope * b.slope;
    let mid = 0.5 * (lo + hi);
    if disc < 0.0 {
        return mid;
    }
    let d2 = disc.sqrt() * (b.step - a.step).signum();
    let t = b.step - (b.step - a.step) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    if t.is_finite() && t > lo + 0.1 * width && t < hi - 0.1 * width {
        t
    } else {
        mid
    }
}
